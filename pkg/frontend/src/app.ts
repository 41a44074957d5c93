// Browser entry point: participant annotator plus a minimal admin heatmap view.

import { ApiClient, ApiError, RetryQueue } from "./api.js";
import { drawHeatmapOverlay, drawOverlay } from "./render.js";
import { UiGridState } from "./state.js";
import type { GridModeName, GridSpecJson, StimulusJson } from "./types.js";

const MOVE_SAMPLE_MS = 25; // ~40 Hz pointer sampling

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function banner(text: string, kind: "error" | "info" = "error"): void {
  const box = el<HTMLDivElement>("banner");
  box.textContent = text;
  box.className = text ? `banner ${kind}` : "banner hidden";
}

async function loadImage(url: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve(img);
    img.onerror = () => reject(new Error(`cannot load ${url}`));
    img.src = url;
  });
}

class AnnotatorApp {
  private state: UiGridState | null = null;
  private stimulus: StimulusJson | null = null;
  private image: HTMLImageElement | null = null;
  private focusIndex = -1;
  private lastMoveAt = 0;
  private readonly queue: RetryQueue;

  constructor(
    private readonly api: ApiClient,
    private readonly participantId: string,
    private readonly sessionId: string,
    private readonly mode: GridModeName,
    private readonly canvas: HTMLCanvasElement,
  ) {
    this.queue = new RetryQueue(api);
    canvas.addEventListener("click", (e) => this.onClick(e));
    canvas.addEventListener("mousemove", (e) => this.onMove(e));
    canvas.tabIndex = 0;
    canvas.addEventListener("keydown", (e) => this.onKey(e));
    el<HTMLButtonElement>("clear").addEventListener("click", () => {
      this.state?.clearAll();
      this.redraw();
    });
    el<HTMLButtonElement>("submit").addEventListener("click", () => void this.submit());
  }

  private canvasPoint(e: MouseEvent): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    return {
      x: ((e.clientX - rect.left) / rect.width) * this.canvas.width,
      y: ((e.clientY - rect.top) / rect.height) * this.canvas.height,
    };
  }

  private onClick(e: MouseEvent): void {
    if (!this.state) return;
    const { x, y } = this.canvasPoint(e);
    const id = this.state.blockAt(x, y);
    if (id) {
      this.state.toggleBlock(id, x, y);
    } else {
      this.state.recordClick(x, y);
    }
    this.redraw();
  }

  private onMove(e: MouseEvent): void {
    if (!this.state) return;
    const now = performance.now();
    if (now - this.lastMoveAt < MOVE_SAMPLE_MS) return;
    this.lastMoveAt = now;
    const { x, y } = this.canvasPoint(e);
    this.state.recordMove(x, y);
    const hover = this.state.blockAt(x, y);
    if (hover !== this.state.hover) {
      this.state.setHover(hover);
      this.redraw();
    }
  }

  private onKey(e: KeyboardEvent): void {
    if (!this.state) return;
    const blocks = this.state.spec.blocks;
    if (e.key === "ArrowRight" || e.key === "ArrowDown") {
      this.focusIndex = (this.focusIndex + 1) % blocks.length;
    } else if (e.key === "ArrowLeft" || e.key === "ArrowUp") {
      this.focusIndex = (this.focusIndex - 1 + blocks.length) % blocks.length;
    } else if ((e.key === " " || e.key === "Enter") && this.focusIndex >= 0) {
      const b = blocks[this.focusIndex];
      this.state.toggleBlock(b.id, b.x + b.w / 2, b.y + b.h / 2);
    } else {
      return;
    }
    e.preventDefault();
    this.redraw();
  }

  private redraw(): void {
    if (!this.state || !this.image) return;
    const ctx = this.canvas.getContext("2d")!;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.drawImage(this.image, 0, 0);
    const focusId =
      this.focusIndex >= 0 ? this.state.spec.blocks[this.focusIndex]?.id ?? null : null;
    drawOverlay(ctx, this.state.spec, {
      selected: this.state.selectedIds,
      hover: this.state.hover,
      focus: focusId,
    });
    el<HTMLSpanElement>("count").textContent = String(this.state.selectedIds.size);
  }

  async nextStimulus(): Promise<void> {
    const progress = await this.api.nextStimulus(this.sessionId);
    el<HTMLSpanElement>("progress").textContent = `${progress.progress} / ${progress.total}`;
    if (progress.completed || !progress.next_stimulus_id) {
      banner("All stimuli annotated. Thank you!", "info");
      el<HTMLDivElement>("workspace").classList.add("hidden");
      return;
    }
    const sid = progress.next_stimulus_id;
    const [stimulus, spec, image] = await Promise.all([
      this.api.getStimulus(sid),
      this.api.getGrid(sid, this.mode),
      loadImage(this.api.imageUrl(sid)),
    ]);
    if (image.width !== stimulus.width || image.height !== stimulus.height) {
      banner(`stimulus ${sid}: image is ${image.width}x${image.height}, ` +
        `metadata says ${stimulus.width}x${stimulus.height}`);
      return;
    }
    this.stimulus = stimulus;
    this.image = image;
    this.canvas.width = stimulus.width;
    this.canvas.height = stimulus.height;
    this.state = new UiGridState(spec, this.participantId);
    this.focusIndex = -1;
    el<HTMLParagraphElement>("prompt").textContent = stimulus.task_prompt;
    el<HTMLParagraphElement>("question").textContent = stimulus.question;
    banner("");
    this.redraw();
  }

  private async submit(): Promise<void> {
    if (!this.state || !this.stimulus) return;
    if (
      this.state.selectedIds.size === 0 &&
      !window.confirm("Submit with no blocks selected?")
    ) {
      return;
    }
    const payload = this.state.toAnnotation();
    try {
      await this.queue.submit(payload, this.sessionId);
      await this.nextStimulus();
    } catch (err) {
      if (err instanceof ApiError) {
        banner(`submission rejected: ${err.message}`);
      } else {
        banner("network trouble; submission queued for retry", "info");
      }
    }
  }
}

async function startAnnotator(api: ApiClient, params: URLSearchParams): Promise<void> {
  const participant = params.get("participant") ?? `anon-${Date.now().toString(36)}`;
  const forced = params.get("mode") as GridModeName | null;
  const session = await api.createSession(participant, forced ?? undefined);
  const instructions = params.get("instructions");
  if (instructions) el<HTMLParagraphElement>("instructions").textContent = instructions;
  el<HTMLSpanElement>("mode").textContent = session.assigned_mode;
  const app = new AnnotatorApp(
    api,
    participant,
    session.session_id,
    session.assigned_mode,
    el<HTMLCanvasElement>("stage"),
  );
  await app.nextStimulus();
}

async function startAdmin(api: ApiClient, params: URLSearchParams): Promise<void> {
  el<HTMLDivElement>("admin").classList.remove("hidden");
  el<HTMLDivElement>("annotator").classList.add("hidden");
  const { stimuli } = await api.listStimuli();
  const picker = el<HTMLSelectElement>("stimulus-picker");
  for (const sid of stimuli) {
    const option = document.createElement("option");
    option.value = sid;
    option.textContent = sid;
    picker.appendChild(option);
  }
  const canvas = el<HTMLCanvasElement>("admin-stage");
  const opacity = el<HTMLInputElement>("opacity");
  const modeSel = el<HTMLSelectElement>("admin-mode");

  const refresh = async () => {
    const sid = picker.value || params.get("stimulus") || stimuli[0];
    if (!sid) return;
    const mode = modeSel.value as GridModeName;
    try {
      const [spec, image] = await Promise.all([
        api.getGrid(sid, mode),
        loadImage(api.imageUrl(sid)),
      ]);
      canvas.width = image.width;
      canvas.height = image.height;
      const ctx = canvas.getContext("2d")!;
      ctx.drawImage(image, 0, 0);
      drawOverlay(ctx, spec as GridSpecJson, { selected: new Set() });
      try {
        const heat = await loadImage(api.importancePngUrl(sid, mode));
        if (heat.width !== image.width || heat.height !== image.height) {
          banner("importance map size does not match the stimulus");
        } else {
          drawHeatmapOverlay(ctx, heat, image.width, image.height, Number(opacity.value));
        }
      } catch {
        banner("no annotations yet for this stimulus/mode", "info");
      }
    } catch (err) {
      banner(err instanceof Error ? err.message : String(err));
    }
  };
  picker.addEventListener("change", () => void refresh());
  modeSel.addEventListener("change", () => void refresh());
  opacity.addEventListener("input", () => void refresh());
  await refresh();
}

export async function main(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient("");
  try {
    if (params.get("admin") === "1") {
      await startAdmin(api, params);
    } else {
      await startAnnotator(api, params);
    }
  } catch (err) {
    banner(err instanceof Error ? err.message : String(err));
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  void main();
}
