// Draft edits: wire form, combined-edit atomicity, commit-then-step order.

import { describe, expect, it } from "vitest";
import { Client } from "../src/api.js";
import { emptyDrafts, toInterventions, validateDrafts } from "../src/interventions.js";
import type { Snapshot } from "../src/types.js";

describe("draft wire form", () => {
  it("drag target + redraw routing travel in one list (atomic PUT)", () => {
    const d = emptyDrafts();
    d.movedTarget = [120, 5, 0.2];
    d.replacedRouting = [[0, 0], [60, 0], [120, 5]];
    const wire = toInterventions(d);
    const kinds = wire.map((iv) => iv.kind);
    expect(kinds).toContain("MOVE_TARGET");
    expect(kinds).toContain("REPLACE_ROUTING");
    expect(wire.length).toBe(2);
  });

  it("light toggle becomes SET_LIGHT with the id", () => {
    const d = emptyDrafts();
    d.lightOverrides.set("a_E", 0);
    expect(toInterventions(d)).toEqual([
      { kind: "SET_LIGHT", light_id: "a_E", color: 0 },
    ]);
  });

  it("component switches become ZERO_COMPONENT entries", () => {
    const d = emptyDrafts();
    d.disabledComponents.add("map");
    d.disabledComponents.add("bev");
    const wire = toInterventions(d);
    expect(wire).toEqual([
      { kind: "ZERO_COMPONENT", component: "bev" },
      { kind: "ZERO_COMPONENT", component: "map" },
    ]);
  });

  it("clearing all edits produces the empty list (baseline)", () => {
    expect(toInterventions(emptyDrafts())).toEqual([]);
  });

  it("client-side validation catches bad drafts before submission", () => {
    const d = emptyDrafts();
    d.replacedRouting = [[1, 2]];
    d.mapNoiseSigma = -0.5;
    const problems = validateDrafts(d);
    expect(problems.length).toBe(2);
  });
});

function fakeServer() {
  const calls: { url: string; method: string; body?: unknown }[] = [];
  let active: unknown[] = [];
  const snapshot = (tick: number): Snapshot => ({
    session_id: "s0", tick, planner_tick: tick / 10, sim_time: tick * 0.05,
    terminated: null,
    world: { sim_time: tick * 0.05, tick, ego: { id: "ego", x: 0, y: 0, yaw: 0,
             speed: 0, length: 4.5, width: 2, role: "EGO", static: false },
             agents: [], light_colors: { tl0: active.length ? 0 : 2 },
             weather_tag: "clear" },
    metrics: { rc: 0, is_score: 1, ds: 0 },
    routing: [[0, 0], [50, 0]],
    target_points: [[50, 0, 0]],
    interventions: active as never[],
    prompt: { routing_points: [], target_point: [50, 0, 0], command: 3,
              current_speed: 0, prev_speeds: [], traffic_lights:
                active.length ? [[30, 1, 0, 0]] : [[30, 0, 0, 1]],
              light_ids: ["tl0"], presence: {}, ego_pose: [0, 0, 0], tick },
    // the trajectory the model produced under the active edit set
    prediction: active.length ? [[0.2, 0]] : [[4.0, 0]],
  });
  const fetcher = async (url: string, init?: RequestInit) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    calls.push({ url, method, body });
    let payload: unknown;
    if (url.endsWith("/interventions")) {
      active = body as unknown[];
      payload = { active };
    } else if (url.endsWith("/step")) {
      payload = snapshot(10 * calls.filter((c) => c.url.endsWith("/step")).length);
    } else {
      payload = snapshot(0);
    }
    return new Response(JSON.stringify(payload), { status: 200 });
  };
  return { calls, fetcher };
}

describe("commit-then-step round trip", () => {
  it("PUT precedes exactly one step; the returned trajectory reflects the edit", async () => {
    const { calls, fetcher } = fakeServer();
    const client = new Client("", fetcher);
    const d = emptyDrafts();
    d.lightOverrides.set("tl0", 0);
    const snap = await client.commitAndStep("s0", toInterventions(d));
    const order = calls.map((c) => `${c.method} ${c.url}`);
    expect(order).toEqual([
      "PUT /sessions/s0/interventions",
      "POST /sessions/s0/step",
    ]);
    // displayed prompt shows the RED one-hot from the server, and the
    // trajectory changed within this single step response
    expect(snap.prompt!.traffic_lights[0].slice(1)).toEqual([1, 0, 0]);
    expect(snap.prediction![0][0]).toBeCloseTo(0.2);
  });

  it("clearing edits marks the next step baseline", async () => {
    const { fetcher } = fakeServer();
    const client = new Client("", fetcher);
    await client.setInterventions("s0", []);
    const snap = await client.step("s0", 1);
    expect(snap.interventions).toEqual([]);
    expect(snap.prediction![0][0]).toBeCloseTo(4.0);
  });

  it("one in-flight request per session is enforced client-side", async () => {
    const slow = async () => {
      await new Promise((r) => setTimeout(r, 30));
      return new Response(JSON.stringify({ ids: [] }), { status: 200 });
    };
    const client = new Client("", slow);
    const first = client.listAssets("scenarios");
    await expect(client.listAssets("routes")).rejects.toThrow(/in flight/);
    await first;
  });
});
