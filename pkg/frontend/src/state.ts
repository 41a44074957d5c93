// Annotation state machine: block selection plus interaction telemetry.
// Deliberately DOM-free so the whole thing is unit-testable; the app layer
// feeds it pointer coordinates and reads back render state / payloads.

import type { AnnotationJson, GridSpecJson, TelemetryEventJson } from "./types.js";

export type Clock = () => number;

const CLICK_KINDS = new Set(["click", "toggle_on", "toggle_off"]);

export function recomputeTravel(events: TelemetryEventJson[]): number {
  let travel = 0;
  let prev: TelemetryEventJson | null = null;
  for (const e of events) {
    if (e.kind !== "move") continue;
    if (prev) travel += Math.hypot(e.x - prev.x, e.y - prev.y);
    prev = e;
  }
  return travel;
}

export class UiGridState {
  readonly spec: GridSpecJson;
  readonly participantId: string;
  hover: string | null = null;

  private readonly ids: Set<string>;
  private readonly selected = new Set<string>();
  private readonly events: TelemetryEventJson[] = [];
  private readonly clock: Clock;
  private readonly startedAt: number;
  private lastT = 0;
  private travelPx = 0;
  private lastMove: { x: number; y: number } | null = null;

  constructor(spec: GridSpecJson, participantId: string, clock?: Clock) {
    this.spec = spec;
    this.participantId = participantId;
    this.ids = new Set(spec.blocks.map((b) => b.id));
    this.clock = clock ?? (() => performance.now());
    this.startedAt = this.clock();
  }

  get selectedIds(): ReadonlySet<string> {
    return this.selected;
  }

  get eventCount(): number {
    return this.events.length;
  }

  isSelected(id: string): boolean {
    return this.selected.has(id);
  }

  // monotone timestamps even if the clock is coarse or adjusted
  private stamp(): number {
    const t = Math.max(0, Math.round(this.clock() - this.startedAt));
    this.lastT = Math.max(this.lastT, t);
    return this.lastT;
  }

  private record(kind: TelemetryEventJson["kind"], x: number, y: number): void {
    this.events.push({ t_ms: this.stamp(), kind, x: Math.round(x), y: Math.round(y) });
  }

  /** Flip a block's membership. Unknown ids are ignored (stale spec guard). */
  toggleBlock(id: string, x = 0, y = 0): boolean {
    if (!this.ids.has(id)) {
      console.warn(`toggleBlock: id ${id} not in spec; ignored`);
      return false;
    }
    if (this.selected.delete(id)) {
      this.record("toggle_off", x, y);
    } else {
      this.selected.add(id);
      this.record("toggle_on", x, y);
    }
    return true;
  }

  /** Pointer click that did not land on any block. */
  recordClick(x: number, y: number): void {
    this.record("click", x, y);
  }

  /** Pointer movement sample (the app throttles before calling). */
  recordMove(x: number, y: number): void {
    if (this.lastMove) {
      this.travelPx += Math.hypot(x - this.lastMove.x, y - this.lastMove.y);
    }
    this.lastMove = { x, y };
    this.record("move", x, y);
  }

  setHover(id: string | null): void {
    this.hover = id !== null && this.ids.has(id) ? id : null;
  }

  /** Deselect everything, recording one toggle_off per selected block. */
  clearAll(): void {
    for (const id of [...this.selected].sort()) {
      this.selected.delete(id);
      this.record("toggle_off", 0, 0);
    }
  }

  blockAt(x: number, y: number): string | null {
    for (const b of this.spec.blocks) {
      if (x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h) return b.id;
    }
    return null;
  }

  /** Serialize to the exact Annotation wire schema; valid at any instant. */
  toAnnotation(): AnnotationJson {
    const clicks = this.events.reduce((n, e) => n + (CLICK_KINDS.has(e.kind) ? 1 : 0), 0);
    return {
      participant_id: this.participantId,
      stimulus_id: this.spec.stimulus_id,
      grid_mode: this.spec.mode,
      selected_block_ids: [...this.selected].sort(),
      duration_ms: this.stamp(),
      click_count: clicks,
      mouse_travel_px: this.travelPx,
      events: [...this.events],
    };
  }
}
