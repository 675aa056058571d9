// Dashboard wiring: session lifecycle, play/pause short-polling, draft
// edits, linked attribution panels sharing one tick cursor.

import { ApiError, Client } from "./api.js";
import {
  GradientSeries, drawHeadBars, drawSeries, layoutHeadBars, layoutSeries,
} from "./charts.js";
import { DraftEdits, emptyDrafts, toInterventions, validateDrafts } from "./interventions.js";
import { drawOverlay, overlayQuads } from "./overlay.js";
import type { ActivationMapDoc, HeadResponseDoc, Snapshot } from "./types.js";
import {
  Camera, LightPin, buildScene, drawScene, screenToWorld, worldToScreen, zoomAt,
} from "./worldView.js";

const $ = (id: string) => document.getElementById(id)!;

class App {
  client = new Client("");
  sessionId: string | null = null;
  snapshot: Snapshot | null = null;
  drafts: DraftEdits = emptyDrafts();
  series = new GradientSeries();
  headDocs = new Map<number, HeadResponseDoc>();
  actmap: ActivationMapDoc | null = null;
  actmapPose: [number, number, number] | null = null;
  cursorTick: number | null = null;
  playing = false;
  drawingRouting: [number, number][] | null = null;
  cam: Camera = { cx: 0, cy: 0, scale: 6, w: 900, h: 620 };
  lightPins: LightPin[] = [];

  async boot() {
    const [scen, routes, ckpts] = await Promise.all([
      this.client.listAssets("scenarios"),
      this.client.listAssets("routes"),
      this.client.listAssets("checkpoints"),
    ]);
    fillSelect("scenario", scen.ids);
    fillSelect("route", routes.ids);
    fillSelect("ckpt", ckpts.ids);
    this.bindControls();
    this.bindCanvas();
  }

  banner(msg: string, isError = true) {
    const el = $("banner");
    el.textContent = msg;
    el.className = isError ? "banner error" : "banner";
    if (msg) setTimeout(() => { if (el.textContent === msg) el.textContent = ""; }, 6000);
  }

  async createSession() {
    try {
      const resp = await this.client.createSession(
        sel("scenario"), sel("route"), sel("ckpt"),
        parseInt((<HTMLInputElement>$("seed")).value || "0", 10));
      this.sessionId = resp.session_id;
      this.snapshot = resp.snapshot;
      this.series = new GradientSeries();
      this.headDocs.clear();
      this.actmap = null;
      this.cursorTick = null;
      this.drafts = emptyDrafts();
      this.cam.cx = resp.snapshot.world.ego.x;
      this.cam.cy = resp.snapshot.world.ego.y;
      $("session-label").textContent = resp.session_id;
      this.renderAll();
    } catch (e) {
      this.banner(`create failed: ${(e as Error).message}`);
    }
  }

  async stepOnce() {
    if (!this.sessionId) return;
    try {
      const snap = await this.client.step(this.sessionId, 1);
      this.ingest(snap);
    } catch (e) {
      if (e instanceof ApiError && e.code === "CLIENT_BUSY") return;
      this.playing = false;
      this.banner(`step failed: ${(e as Error).message}`);
    }
  }

  ingest(snap: Snapshot) {
    this.snapshot = snap;
    if (snap.attribution) {
      this.series.append(snap.attribution.token_gradients);
      this.headDocs.set(snap.attribution.head_response.tick ?? snap.tick - 10,
                        snap.attribution.head_response);
      this.cursorTick = this.series.points.length
        ? this.series.points[this.series.points.length - 1].tick : null;
    }
    this.renderAll();
    if (snap.terminated) {
      this.playing = false;
      this.banner(`episode ${snap.terminated}`, false);
    }
  }

  async commit() {
    if (!this.sessionId) return;
    const problems = validateDrafts(this.drafts);
    if (problems.length) {
      this.banner(problems.join("; "));
      return;
    }
    try {
      // commit-then-step: one atomic PUT, then exactly one step
      const snap = await this.client.commitAndStep(this.sessionId,
                                                   toInterventions(this.drafts));
      this.ingest(snap);
    } catch (e) {
      this.banner(`commit rejected: ${(e as Error).message}`);
    }
  }

  async clearEdits() {
    if (!this.sessionId) return;
    this.drafts = emptyDrafts();
    await this.client.setInterventions(this.sessionId, []);
    this.banner("baseline (no active edits)", false);
    this.renderAll();
  }

  async fetchActmap() {
    if (!this.sessionId || !this.snapshot?.prompt) return;
    try {
      const tick = this.cursorTick ?? undefined;
      this.actmap = await this.client.activationMap(this.sessionId, tick);
      this.actmapPose = this.snapshot.prompt.ego_pose as [number, number, number];
      this.renderAll();
    } catch (e) {
      this.banner(`activation map: ${(e as Error).message}`);
    }
  }

  loop = async () => {
    if (this.playing) {
      await this.stepOnce();
      setTimeout(this.loop, 120);
    }
  };

  bindControls() {
    $("create").onclick = () => this.createSession();
    $("step").onclick = () => this.stepOnce();
    $("play").onclick = () => {
      this.playing = !this.playing;
      $("play").textContent = this.playing ? "pause" : "play";
      if (this.playing) this.loop();
    };
    $("commit").onclick = () => this.commit();
    $("clear").onclick = () => this.clearEdits();
    $("actmap-btn").onclick = () => this.fetchActmap();
    $("draw-routing").onclick = () => {
      this.drawingRouting = this.drawingRouting ? null : [];
      $("draw-routing").textContent =
        this.drawingRouting ? "finish routing (dblclick)" : "redraw routing";
    };
    ($("speed-on") as HTMLInputElement).onchange = (ev) => {
      const on = (ev.target as HTMLInputElement).checked;
      this.drafts.speedOverride = on
        ? parseFloat(($("speed") as HTMLInputElement).value) : null;
    };
    ($("speed") as HTMLInputElement).oninput = (ev) => {
      $("speed-label").textContent = (ev.target as HTMLInputElement).value;
      if (($("speed-on") as HTMLInputElement).checked) {
        this.drafts.speedOverride = parseFloat((ev.target as HTMLInputElement).value);
      }
    };
    ($("bev-prob") as HTMLInputElement).oninput = (ev) => {
      const prob = parseFloat((ev.target as HTMLInputElement).value);
      $("bev-prob-label").textContent = prob.toFixed(2);
      this.drafts.bevMask = prob > 0 ? { prob, block: 8, seed: 7 } : null;
    };
    for (const comp of ["routing", "target_point", "command", "current_speed",
                        "prev_speeds", "map", "obstacles", "stop_signs",
                        "traffic_lights", "bev"]) {
      const box = $(`comp-${comp}`) as HTMLInputElement;
      box.onchange = () => {
        if (box.checked) this.drafts.disabledComponents.delete(comp);
        else this.drafts.disabledComponents.add(comp);
      };
    }
  }

  bindCanvas() {
    const canvas = $("world") as HTMLCanvasElement;
    let dragging: "pan" | "target" | null = null;
    let last: [number, number] = [0, 0];
    canvas.onwheel = (ev) => {
      ev.preventDefault();
      this.cam = zoomAt(this.cam, ev.offsetX, ev.offsetY, ev.deltaY < 0 ? 1.15 : 0.87);
      this.renderAll();
    };
    canvas.onmousedown = (ev) => {
      const [wx, wy] = screenToWorld(this.cam, ev.offsetX, ev.offsetY);
      if (this.drawingRouting) {
        this.drawingRouting.push([wx, wy]);
        this.renderAll();
        return;
      }
      const t = this.nearestTarget(wx, wy);
      if (t !== null) {
        dragging = "target";
      } else {
        dragging = "pan";
      }
      last = [ev.offsetX, ev.offsetY];
    };
    canvas.onmousemove = (ev) => {
      if (!dragging) return;
      if (dragging === "pan") {
        this.cam.cx -= (ev.offsetX - last[0]) / this.cam.scale;
        this.cam.cy += (ev.offsetY - last[1]) / this.cam.scale;
        last = [ev.offsetX, ev.offsetY];
      } else {
        const [wx, wy] = screenToWorld(this.cam, ev.offsetX, ev.offsetY);
        const heading = this.drafts.movedTarget?.[2]
          ?? this.snapshot?.world.ego.yaw ?? 0;
        this.drafts.movedTarget = [wx, wy, heading];
      }
      this.renderAll();
    };
    canvas.onmouseup = () => { dragging = null; };
    canvas.ondblclick = () => {
      if (this.drawingRouting && this.drawingRouting.length >= 2) {
        this.drafts.replacedRouting = this.drawingRouting;
        this.drawingRouting = null;
        $("draw-routing").textContent = "redraw routing";
        this.renderAll();
      }
    };
    const gchart = $("gradients") as HTMLCanvasElement;
    gchart.onclick = (ev) => {
      const pts = this.series.points;
      if (!pts.length) return;
      const pad = 28;
      const t0 = pts[0].tick;
      const t1 = Math.max(pts[pts.length - 1].tick, t0 + 1);
      const frac = Math.min(Math.max((ev.offsetX - pad) / (gchart.width - 2 * pad), 0), 1);
      const target = t0 + frac * (t1 - t0);
      let best = pts[0].tick;
      for (const p of pts) {
        if (Math.abs(p.tick - target) < Math.abs(best - target)) best = p.tick;
      }
      this.cursorTick = best;
      this.renderAll();
    };
  }

  nearestTarget(wx: number, wy: number): number | null {
    if (!this.snapshot) return null;
    const cand = this.drafts.movedTarget
      ? [this.drafts.movedTarget] : this.snapshot.target_points;
    for (let i = 0; i < cand.length; i++) {
      const d = Math.hypot(cand[i][0] - wx, cand[i][1] - wy);
      if (d < 12 / this.cam.scale) return i;
    }
    return null;
  }

  renderAll() {
    const snap = this.snapshot;
    if (!snap) return;
    const canvas = $("world") as HTMLCanvasElement;
    const ctx = canvas.getContext("2d")!;
    this.cam.w = canvas.width;
    this.cam.h = canvas.height;
    const scene = buildScene(snap, this.lightPins);
    drawScene(ctx, this.cam, scene);
    if (this.actmap && this.actmapPose) {
      drawOverlay(ctx, this.cam, overlayQuads(this.actmap, this.actmapPose));
    }
    // draft decorations
    if (this.drafts.movedTarget) {
      const [px, py] = worldToScreen(this.cam, this.drafts.movedTarget[0],
                                     this.drafts.movedTarget[1]);
      ctx.strokeStyle = "#e03131";
      ctx.beginPath();
      ctx.arc(px, py, 8, 0, 2 * Math.PI);
      ctx.stroke();
    }
    const draftLine = this.drawingRouting ?? this.drafts.replacedRouting;
    if (draftLine && draftLine.length) {
      ctx.strokeStyle = "#9aff9a";
      ctx.setLineDash([6, 4]);
      ctx.beginPath();
      draftLine.forEach(([x, y], i) => {
        const [px, py] = worldToScreen(this.cam, x, y);
        i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
      });
      ctx.stroke();
      ctx.setLineDash([]);
    }
    // status
    $("status").textContent =
      `tick ${snap.tick} | t=${snap.sim_time.toFixed(1)}s | ` +
      `DS ${snap.metrics.ds.toFixed(1)} RC ${snap.metrics.rc.toFixed(1)} ` +
      `IS ${snap.metrics.is_score.toFixed(2)} | ` +
      `v=${snap.world.ego.speed.toFixed(1)} m/s | ` +
      (snap.interventions.length
        ? `edits: ${snap.interventions.map((iv) => iv.kind).join(",")}`
        : "baseline");
    // gradient chart
    const gchart = $("gradients") as HTMLCanvasElement;
    const specs = layoutSeries(this.series.points, gchart.width, gchart.height);
    let cursorX: number | undefined;
    if (this.cursorTick !== null && this.series.points.length) {
      const pts = this.series.points;
      const t0 = pts[0].tick;
      const t1 = Math.max(pts[pts.length - 1].tick, t0 + 1);
      cursorX = 28 + ((this.cursorTick - t0) / (t1 - t0)) * (gchart.width - 56);
    }
    drawSeries(gchart.getContext("2d")!, specs, gchart.width, gchart.height, cursorX);
    // head bars at the cursor tick
    const hchart = $("heads") as HTMLCanvasElement;
    const doc = this.cursorTick !== null ? this.headDocs.get(this.cursorTick) : null;
    if (doc) {
      try {
        const layout = layoutHeadBars(doc, hchart.width, hchart.height);
        drawHeadBars(hchart.getContext("2d")!, layout, hchart.width, hchart.height);
      } catch (e) {
        this.banner((e as Error).message);
      }
    }
  }
}

const app = new App();
app.boot().catch((e) => {
  document.body.insertAdjacentHTML("beforeend",
    `<pre class="banner error">boot failed: ${e}</pre>`);
});

function sel(id: string): string {
  return ($(id) as HTMLSelectElement).value;
}

function fillSelect(id: string, ids: string[]) {
  const el = $(id) as HTMLSelectElement;
  el.innerHTML = ids.map((x) => `<option value="${x}">${x}</option>`).join("");
}

export { App };
