// Wire types shared with the annotation service. Field names must match the
// server's JSON schemas exactly.

export type GridModeName = "static" | "adaptive";
export type RegionName = "text" | "edge" | "background";

export interface BlockJson {
  id: string;
  x: number;
  y: number;
  w: number;
  h: number;
  region: RegionName;
}

export interface GridSpecJson {
  stimulus_id: string;
  mode: GridModeName;
  tile_size?: number;
  static_n?: number;
  blocks: BlockJson[];
  solver_status?: Record<string, string>;
}

export type EventKind = "click" | "move" | "toggle_on" | "toggle_off";

export interface TelemetryEventJson {
  t_ms: number;
  kind: EventKind;
  x: number;
  y: number;
}

export interface AnnotationJson {
  participant_id: string;
  stimulus_id: string;
  grid_mode: GridModeName;
  selected_block_ids: string[];
  duration_ms: number;
  click_count: number;
  mouse_travel_px: number;
  events: TelemetryEventJson[];
}

export interface StimulusJson {
  id: string;
  task_prompt: string;
  question: string;
  width: number;
  height: number;
  tile_size: number;
  static_n: number;
}

export interface SessionJson {
  session_id: string;
  participant_id: string;
  assigned_mode: GridModeName;
  stimulus_order: string[];
}

export interface SessionProgressJson {
  session_id: string;
  assigned_mode: GridModeName;
  progress: number;
  total: number;
  completed: boolean;
  next_stimulus_id: string | null;
}

export interface SubmitReceiptJson {
  annotation_id: string;
  resubmitted: boolean;
}
