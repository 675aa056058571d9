// Golden-pixel alignment: activation cells must land exactly on the world
// rectangle the server's extent metadata declares.

import { describe, expect, it } from "vitest";
import { cellEgoRect, overlayQuads } from "../src/overlay.js";
import { worldToScreen, type Camera } from "../src/worldView.js";
import type { ActivationMapDoc } from "../src/types.js";

const EXTENT: [number, number, number, number] = [-8.0, 30.4, -19.2, 19.2];

function doc12(): ActivationMapDoc {
  const values = Array.from({ length: 12 }, (_, i) =>
    Array.from({ length: 12 }, (_, j) => i * 12 + j));
  return { tick: 0, layer: "fused", values, upsampled: null, extent: EXTENT };
}

describe("activation overlay alignment", () => {
  it("cell (0,0) covers the near-left corner of the declared extent", () => {
    const r = cellEgoRect(doc12(), 0, 0);
    expect(r.x0).toBeCloseTo(-8.0, 12);
    expect(r.x1).toBeCloseTo(-8.0 + 38.4 / 12, 12);
    expect(r.y0).toBeCloseTo(-19.2, 12);
    expect(r.y1).toBeCloseTo(-19.2 + 38.4 / 12, 12);
  });

  it("cells tile the extent exactly", () => {
    const d = doc12();
    const last = cellEgoRect(d, 11, 11);
    expect(last.x1).toBeCloseTo(30.4, 12);
    expect(last.y1).toBeCloseTo(19.2, 12);
    const a = cellEgoRect(d, 3, 7);
    const b = cellEgoRect(d, 4, 7);
    expect(a.x1).toBeCloseTo(b.x0, 12);
  });

  it("golden pixel: identity pose, known camera", () => {
    // ego at origin facing +x; камера centered at origin, 10 px/m
    const cam: Camera = { cx: 0, cy: 0, scale: 10, w: 800, h: 600 };
    const quads = overlayQuads(doc12(), [0, 0, 0]);
    // cell (0, 0) first corner is the ego-frame point (-8, -19.2)
    const q = quads[0];
    const [px, py] = worldToScreen(cam, q.corners[0][0], q.corners[0][1]);
    expect(px).toBeCloseTo(800 / 2 + -8 * 10, 6);
    expect(py).toBeCloseTo(600 / 2 - -19.2 * 10, 6);
  });

  it("golden pixel: rotated ego pose maps cell centers correctly", () => {
    const d = doc12();
    const pose: [number, number, number] = [50, 20, Math.PI / 2];
    const quads = overlayQuads(d, pose);
    // center of cell (i, j) in ego frame
    const r = cellEgoRect(d, 5, 2);
    const ex = (r.x0 + r.x1) / 2;
    const ey = (r.y0 + r.y1) / 2;
    // by hand: rotate 90 deg then translate
    const wx = 50 + 0 * ex - 1 * ey;
    const wy = 20 + 1 * ex + 0 * ey;
    const q = quads[5 * 12 + 2];
    const cx = q.corners.reduce((a, c) => a + c[0], 0) / 4;
    const cy = q.corners.reduce((a, c) => a + c[1], 0) / 4;
    expect(cx).toBeCloseTo(wx, 9);
    expect(cy).toBeCloseTo(wy, 9);
    const cam: Camera = { cx: 50, cy: 20, scale: 8, w: 400, h: 400 };
    const [px, py] = worldToScreen(cam, cx, cy);
    const [gx, gy] = worldToScreen(cam, wx, wy);
    expect(Math.hypot(px - gx, py - gy)).toBeLessThan(0.5);
  });

  it("values are normalized to the document peak, not recomputed", () => {
    const d = doc12();
    const quads = overlayQuads(d, [0, 0, 0]);
    const peak = 11 * 12 + 11;
    expect(quads[quads.length - 1].value).toBeCloseTo(1.0, 12);
    expect(quads[1].value).toBeCloseTo(1 / peak, 12);
  });

  it("missing extent is an error, not a guess", () => {
    const d = doc12();
    d.extent = null;
    expect(() => cellEgoRect(d, 0, 0)).toThrow();
  });
});
