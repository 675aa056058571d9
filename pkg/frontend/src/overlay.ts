// Activation-map overlay: maps each cell of the server document onto the
// world rectangle declared by the server's ego-frame extent. The mapping
// here is the single source of truth the golden-pixel test locks down.

import type { ActivationMapDoc } from "./types.js";
import { Camera, worldToScreen } from "./worldView.js";

export interface WorldQuad {
  corners: [number, number][]; // CCW world-frame corners
  value: number;
}

/** Ego-frame rectangle of activation cell (i, j): rows index forward x. */
export function cellEgoRect(doc: ActivationMapDoc, i: number, j: number):
    { x0: number; x1: number; y0: number; y1: number } {
  if (!doc.extent) throw new Error("activation map lacks extent metadata");
  const [xMin, xMax, yMin, yMax] = doc.extent;
  const h = doc.values.length;
  const w = doc.values[0].length;
  const dx = (xMax - xMin) / h;
  const dy = (yMax - yMin) / w;
  return { x0: xMin + i * dx, x1: xMin + (i + 1) * dx,
           y0: yMin + j * dy, y1: yMin + (j + 1) * dy };
}

/** World-frame quads for every cell, given the ego pose at the map's tick. */
export function overlayQuads(doc: ActivationMapDoc,
                             egoPose: [number, number, number]): WorldQuad[] {
  const [ex, ey, eyaw] = egoPose;
  const c = Math.cos(eyaw);
  const s = Math.sin(eyaw);
  const quads: WorldQuad[] = [];
  const h = doc.values.length;
  const w = doc.values[0].length;
  let peak = 0;
  for (const row of doc.values) for (const v of row) peak = Math.max(peak, v);
  const norm = peak > 0 ? peak : 1;
  for (let i = 0; i < h; i++) {
    for (let j = 0; j < w; j++) {
      const r = cellEgoRect(doc, i, j);
      const pts: [number, number][] = [
        [r.x0, r.y0], [r.x1, r.y0], [r.x1, r.y1], [r.x0, r.y1],
      ].map(([x, y]) => [ex + c * x - s * y, ey + s * x + c * y]);
      quads.push({ corners: pts as [number, number][], value: doc.values[i][j] / norm });
    }
  }
  return quads;
}

export function drawOverlay(ctx: CanvasRenderingContext2D, cam: Camera,
                            quads: WorldQuad[], alpha = 0.45): void {
  for (const q of quads) {
    if (q.value <= 1e-9) continue;
    ctx.fillStyle = heatColor(q.value, alpha);
    ctx.beginPath();
    q.corners.forEach(([x, y], i) => {
      const [px, py] = worldToScreen(cam, x, y);
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.closePath();
    ctx.fill();
  }
}

export function heatColor(v: number, alpha: number): string {
  const t = Math.min(Math.max(v, 0), 1);
  const r = Math.round(255 * Math.min(1, 0.2 + 1.6 * t));
  const g = Math.round(255 * Math.max(0, 1.2 * t - 0.35));
  const b = Math.round(60 * (1 - t));
  return `rgba(${r},${g},${b},${alpha * t})`;
}
