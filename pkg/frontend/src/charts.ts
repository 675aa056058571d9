// Attribution charts: token-gradient time series and per-head response
// bars. Pure layout producers (testable) + canvas painters. Every number
// shown comes verbatim from server documents; the client only arranges
// them.

import type { HeadResponseDoc, TokenGradientsDoc } from "./types.js";

export const COMPONENT_COLORS: Record<string, string> = {
  routing: "#2fbf4f", target_point: "#e03131", command: "#b18cff",
  current_speed: "#ffd43b", prev_speeds: "#c2a878", map: "#2456a3",
  obstacles: "#58a6d6", stop_signs: "#f08c00", traffic_lights: "#ff5da2",
  bev: "#9aa0a6",
};

export interface SeriesPoint {
  tick: number;
  values: Record<string, number>;
}

export class GradientSeries {
  points: SeriesPoint[] = [];
  ys: SeriesPoint[] = [];

  append(doc: TokenGradientsDoc): void {
    // replace the entry if the tick was re-analyzed
    const put = (arr: SeriesPoint[], values: Record<string, number>) => {
      const i = arr.findIndex((p) => p.tick === doc.tick);
      const point = { tick: doc.tick, values: { ...values } };
      if (i >= 0) arr[i] = point;
      else arr.push(point);
      arr.sort((a, b) => a.tick - b.tick);
    };
    put(this.points, doc.g_x);
    put(this.ys, doc.g_y);
  }

  components(): string[] {
    return this.points.length ? Object.keys(this.points[0].values) : [];
  }
}

export interface PolylineSpec {
  component: string;
  color: string;
  path: [number, number][]; // canvas coords
  flatZero: boolean;        // masked: render greyed
}

export function layoutSeries(points: SeriesPoint[], w: number, h: number,
                             pad = 28): PolylineSpec[] {
  if (!points.length) return [];
  const comps = Object.keys(points[0].values);
  const t0 = points[0].tick;
  const t1 = Math.max(points[points.length - 1].tick, t0 + 1);
  let peak = 0;
  for (const p of points) for (const c of comps) peak = Math.max(peak, p.values[c]);
  const scale = peak > 0 ? peak : 1;
  return comps.map((c) => {
    const path = points.map((p) => [
      pad + ((p.tick - t0) / (t1 - t0)) * (w - 2 * pad),
      h - pad - (p.values[c] / scale) * (h - 2 * pad),
    ]) as [number, number][];
    const flatZero = points.every((p) => p.values[c] === 0);
    return { component: c, color: flatZero ? "#555" : (COMPONENT_COLORS[c] ?? "#ccc"),
             path, flatZero };
  });
}

export interface BarSpec {
  head: number;
  component: string;
  x: number;
  y: number;
  w: number;
  h: number;
  value: number;
}

/** Per-head bar grid; throws if any head's component masses fail to
 * partition (the client refuses to render inconsistent documents). */
export function layoutHeadBars(doc: HeadResponseDoc, w: number, h: number,
                               tol = 1e-6): { bars: BarSpec[]; avgLine: [number, number][][] } {
  const heads = doc.response.length;
  const comps = doc.components;
  for (let hd = 0; hd < heads; hd++) {
    const sum = doc.response[hd].reduce((a, b) => a + b, 0);
    if (Math.abs(sum - 1.0) > tol) {
      throw new Error(`head ${hd} responses sum to ${sum}, not 1`);
    }
  }
  const panelW = w / heads;
  const barW = (panelW - 16) / comps.length;
  const bars: BarSpec[] = [];
  const avgLine: [number, number][][] = [];
  for (let hd = 0; hd < heads; hd++) {
    const x0 = hd * panelW + 8;
    const line: [number, number][] = [];
    for (let ci = 0; ci < comps.length; ci++) {
      const v = doc.response[hd][ci];
      bars.push({ head: hd, component: comps[ci],
                  x: x0 + ci * barW, y: h - v * (h - 20) - 4,
                  w: barW * 0.85, h: v * (h - 20), value: v });
      const avg = doc.avg ? doc.avg[comps[ci]] ?? 0 : 0;
      line.push([x0 + (ci + 0.4) * barW, h - avg * (h - 20) - 4]);
    }
    avgLine.push(line);
  }
  return { bars, avgLine };
}

export function drawSeries(ctx: CanvasRenderingContext2D, specs: PolylineSpec[],
                           w: number, h: number, cursorX?: number): void {
  ctx.fillStyle = "#0e1116";
  ctx.fillRect(0, 0, w, h);
  for (const s of specs) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.flatZero ? 1 : 1.6;
    ctx.beginPath();
    s.path.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
  }
  if (cursorX !== undefined) {
    ctx.strokeStyle = "#888";
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(cursorX, 0);
    ctx.lineTo(cursorX, h);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

export function drawHeadBars(ctx: CanvasRenderingContext2D,
                             layout: { bars: BarSpec[]; avgLine: [number, number][][] },
                             w: number, h: number): void {
  ctx.fillStyle = "#0e1116";
  ctx.fillRect(0, 0, w, h);
  for (const b of layout.bars) {
    ctx.fillStyle = COMPONENT_COLORS[b.component] ?? "#ccc";
    ctx.fillRect(b.x, b.y, b.w, b.h);
  }
  ctx.strokeStyle = "#ff6b6b";
  ctx.lineWidth = 1.4;
  for (const line of layout.avgLine) {
    ctx.beginPath();
    line.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
  }
}
