// Canvas overlay drawing for the annotator and the admin heatmap view.

import type { GridSpecJson } from "./types.js";

const REGION_STROKES: Record<string, string> = {
  text: "rgba(220, 60, 60, 0.9)",
  edge: "rgba(60, 90, 220, 0.9)",
  background: "rgba(70, 170, 90, 0.9)",
};

export interface OverlayOptions {
  selected: ReadonlySet<string>;
  hover?: string | null;
  focus?: string | null;
}

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  spec: GridSpecJson,
  opts: OverlayOptions,
): void {
  for (const b of spec.blocks) {
    if (opts.selected.has(b.id)) {
      ctx.fillStyle = "rgba(255, 196, 0, 0.38)";
      ctx.fillRect(b.x, b.y, b.w, b.h);
    }
    ctx.strokeStyle = REGION_STROKES[b.region] ?? "rgba(0,0,0,0.8)";
    ctx.lineWidth = 1;
    ctx.strokeRect(b.x + 0.5, b.y + 0.5, b.w - 1, b.h - 1);
  }
  const highlight = (id: string, style: string, width: number) => {
    const b = spec.blocks.find((blk) => blk.id === id);
    if (!b) return;
    ctx.strokeStyle = style;
    ctx.lineWidth = width;
    ctx.strokeRect(b.x + 1, b.y + 1, b.w - 2, b.h - 2);
  };
  if (opts.hover) highlight(opts.hover, "rgba(255, 255, 255, 0.95)", 2);
  if (opts.focus) highlight(opts.focus, "rgba(20, 20, 20, 0.95)", 2);
}

export function drawHeatmapOverlay(
  ctx: CanvasRenderingContext2D,
  heatmap: CanvasImageSource,
  width: number,
  height: number,
  opacity: number,
): void {
  ctx.save();
  ctx.globalAlpha = Math.min(1, Math.max(0, opacity));
  ctx.drawImage(heatmap, 0, 0, width, height);
  ctx.restore();
}
