// Top-down world scene. Pure scene-building (testable) plus a thin canvas
// painter. Color legend: routing green, target red, map dark blue,
// obstacles light blue, prediction orange, ego white.

import type { Snapshot } from "./types.js";

export interface Camera {
  cx: number;      // world point at canvas center
  cy: number;
  scale: number;   // px per meter
  w: number;       // canvas size px
  h: number;
}

export function worldToScreen(cam: Camera, x: number, y: number): [number, number] {
  // world +x right, +y up; canvas y grows down
  return [cam.w / 2 + (x - cam.cx) * cam.scale,
          cam.h / 2 - (y - cam.cy) * cam.scale];
}

export function screenToWorld(cam: Camera, px: number, py: number): [number, number] {
  return [cam.cx + (px - cam.w / 2) / cam.scale,
          cam.cy - (py - cam.h / 2) / cam.scale];
}

export function zoomAt(cam: Camera, px: number, py: number, factor: number): Camera {
  const [wx, wy] = screenToWorld(cam, px, py);
  const scale = Math.min(Math.max(cam.scale * factor, 0.5), 60);
  const cx = wx - (px - cam.w / 2) / scale;
  const cy = wy + (py - cam.h / 2) / scale;
  return { ...cam, scale, cx, cy };
}

export type SceneItem =
  | { kind: "polyline"; points: number[][]; color: string; width: number }
  | { kind: "box"; x: number; y: number; yaw: number; length: number;
      width: number; color: string; fill: boolean }
  | { kind: "dot"; x: number; y: number; r: number; color: string }
  | { kind: "glyph"; x: number; y: number; color: string; label: string };

export const LIGHT_COLORS = ["#e03131", "#f5c518", "#2fbf4f"]; // red yellow green

export interface LightPin {
  id: string;
  x: number;
  y: number;
}

export function buildScene(snap: Snapshot, lights: LightPin[]): SceneItem[] {
  const items: SceneItem[] = [];
  items.push({ kind: "polyline", points: snap.routing, color: "#2fbf4f", width: 2.5 });
  for (const t of snap.target_points) {
    items.push({ kind: "dot", x: t[0], y: t[1], r: 4, color: "#e03131" });
  }
  for (const agent of snap.world.agents) {
    items.push({
      kind: "box", x: agent.x, y: agent.y, yaw: agent.yaw,
      length: agent.length, width: agent.width,
      color: agent.role === "PEDESTRIAN" ? "#7ec8e3" : "#58a6d6", fill: true,
    });
  }
  const ego = snap.world.ego;
  items.push({ kind: "box", x: ego.x, y: ego.y, yaw: ego.yaw,
               length: ego.length, width: ego.width, color: "#f5f5f5", fill: false });
  // predicted waypoints, drawn in world frame from the latest ego pose;
  // waypoints behind the ego are rendered too (no client-side filtering)
  if (snap.prediction && snap.prompt) {
    const [ex, ey, eyaw] = snap.prompt.ego_pose;
    const c = Math.cos(eyaw);
    const s = Math.sin(eyaw);
    for (const wp of snap.prediction) {
      const wx = ex + c * wp[0] - s * wp[1];
      const wy = ey + s * wp[0] + c * wp[1];
      items.push({ kind: "dot", x: wx, y: wy, r: 2.5, color: "#ff9f1a" });
    }
  }
  for (const pin of lights) {
    const color = LIGHT_COLORS[snap.world.light_colors[pin.id] ?? 2];
    items.push({ kind: "glyph", x: pin.x, y: pin.y, color, label: pin.id });
  }
  return items;
}

export function drawScene(ctx: CanvasRenderingContext2D, cam: Camera,
                          items: SceneItem[], mapLines?: number[][][]): void {
  ctx.fillStyle = "#14181d";
  ctx.fillRect(0, 0, cam.w, cam.h);
  if (mapLines) {
    ctx.strokeStyle = "#28557d";
    ctx.lineWidth = 1.0;
    for (const line of mapLines) {
      ctx.beginPath();
      line.forEach(([x, y], i) => {
        const [px, py] = worldToScreen(cam, x, y);
        i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
      });
      ctx.stroke();
    }
  }
  for (const item of items) {
    if (item.kind === "polyline") {
      ctx.strokeStyle = item.color;
      ctx.lineWidth = item.width;
      ctx.beginPath();
      item.points.forEach(([x, y], i) => {
        const [px, py] = worldToScreen(cam, x, y);
        i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
      });
      ctx.stroke();
    } else if (item.kind === "box") {
      const [px, py] = worldToScreen(cam, item.x, item.y);
      ctx.save();
      ctx.translate(px, py);
      ctx.rotate(-item.yaw);
      const l = item.length * cam.scale;
      const w = item.width * cam.scale;
      if (item.fill) {
        ctx.fillStyle = item.color;
        ctx.fillRect(-l / 2, -w / 2, l, w);
      } else {
        ctx.strokeStyle = item.color;
        ctx.lineWidth = 1.5;
        ctx.strokeRect(-l / 2, -w / 2, l, w);
      }
      ctx.restore();
    } else if (item.kind === "dot") {
      const [px, py] = worldToScreen(cam, item.x, item.y);
      ctx.fillStyle = item.color;
      ctx.beginPath();
      ctx.arc(px, py, item.r, 0, 2 * Math.PI);
      ctx.fill();
    } else {
      const [px, py] = worldToScreen(cam, item.x, item.y);
      ctx.fillStyle = item.color;
      ctx.beginPath();
      ctx.arc(px, py, 5, 0, 2 * Math.PI);
      ctx.fill();
      ctx.strokeStyle = "#111";
      ctx.stroke();
    }
  }
}
