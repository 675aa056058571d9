// Draft edit state: uncommitted UI edits and their wire form. Commit sends
// every active edit in ONE atomic PUT so the server never runs a
// half-applied set.

import type { InterventionDoc } from "./types.js";

export interface DraftEdits {
  movedTarget: [number, number, number] | null;
  replacedRouting: [number, number][] | null;
  lightOverrides: Map<string, number>;   // light id -> color
  speedOverride: number | null;
  mapNoiseSigma: number | null;
  bevMask: { prob: number; block: number; seed: number } | null;
  commandOverride: number | null;
  disabledComponents: Set<string>;
}

export function emptyDrafts(): DraftEdits {
  return {
    movedTarget: null, replacedRouting: null, lightOverrides: new Map(),
    speedOverride: null, mapNoiseSigma: null, bevMask: null,
    commandOverride: null, disabledComponents: new Set(),
  };
}

export function hasEdits(d: DraftEdits): boolean {
  return toInterventions(d).length > 0;
}

export function validateDrafts(d: DraftEdits): string[] {
  const problems: string[] = [];
  if (d.replacedRouting && d.replacedRouting.length < 2) {
    problems.push("routing needs at least two points");
  }
  if (d.mapNoiseSigma !== null && d.mapNoiseSigma < 0) {
    problems.push("map noise sigma must be >= 0");
  }
  if (d.bevMask && (d.bevMask.prob < 0 || d.bevMask.prob > 1)) {
    problems.push("bev mask probability must be in [0, 1]");
  }
  if (d.speedOverride !== null && !Number.isFinite(d.speedOverride)) {
    problems.push("speed override must be finite");
  }
  return problems;
}

/** Wire form, deterministic order. Target and routing edits travel in the
 * same list; the combined routing+target edit is a single PUT. */
export function toInterventions(d: DraftEdits): InterventionDoc[] {
  const out: InterventionDoc[] = [];
  for (const comp of [...d.disabledComponents].sort()) {
    out.push({ kind: "ZERO_COMPONENT", component: comp });
  }
  for (const [lightId, color] of [...d.lightOverrides.entries()].sort()) {
    out.push({ kind: "SET_LIGHT", light_id: lightId, color });
  }
  if (d.movedTarget) {
    out.push({ kind: "MOVE_TARGET", target: [...d.movedTarget] });
  }
  if (d.replacedRouting) {
    out.push({ kind: "REPLACE_ROUTING", routing: d.replacedRouting.map((p) => [...p]) });
  }
  if (d.speedOverride !== null) {
    out.push({ kind: "SET_SPEED", speed: d.speedOverride });
  }
  if (d.mapNoiseSigma !== null && d.mapNoiseSigma > 0) {
    out.push({ kind: "MAP_NOISE", sigma: d.mapNoiseSigma, seed: 0 });
  }
  if (d.bevMask && d.bevMask.prob > 0) {
    out.push({ kind: "BEV_MASK", prob: d.bevMask.prob, block: d.bevMask.block,
               seed: d.bevMask.seed });
  }
  if (d.commandOverride !== null) {
    out.push({ kind: "COMMAND_OVERRIDE", command: d.commandOverride });
  }
  return out;
}
