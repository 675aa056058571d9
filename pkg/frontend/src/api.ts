// Thin typed client; one in-flight request per session enforced here.

import type {
  ActivationMapDoc, HeadResponseDoc, InterventionDoc, Snapshot,
  TokenGradientsDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

export type Fetcher = (url: string, init?: RequestInit) => Promise<Response>;

export class Client {
  private busy = false;

  constructor(private base: string = "", private fetcher: Fetcher = fetch.bind(globalThis)) {}

  private async request<T>(url: string, init?: RequestInit): Promise<T> {
    if (this.busy) {
      throw new ApiError("CLIENT_BUSY", "a request is already in flight");
    }
    this.busy = true;
    try {
      const resp = await this.fetcher(this.base + url, init);
      const body = await resp.json();
      if (!resp.ok) {
        const err = body?.error ?? { code: "INTERNAL", message: "unknown error" };
        throw new ApiError(err.code, err.message);
      }
      return body as T;
    } finally {
      this.busy = false;
    }
  }

  listAssets(kind: "scenarios" | "routes" | "checkpoints"): Promise<{ ids: string[] }> {
    return this.request(`/assets/${kind}`);
  }

  createSession(scenarioId: string, routeId: string, ckptId: string, seed = 0):
      Promise<{ session_id: string; snapshot: Snapshot }> {
    return this.request(`/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        scenario_id: scenarioId, route_id: routeId, ckpt_id: ckptId, seed,
      }),
    });
  }

  getSession(id: string): Promise<Snapshot> {
    return this.request(`/sessions/${id}`);
  }

  step(id: string, n = 1): Promise<Snapshot> {
    return this.request(`/sessions/${id}/step`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ n }),
    });
  }

  setInterventions(id: string, interventions: InterventionDoc[]):
      Promise<{ active: InterventionDoc[] }> {
    return this.request(`/sessions/${id}/interventions`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(interventions),
    });
  }

  /** Commit edits and advance one tick as a single logical operation: the
   * returned snapshot is never computed under a half-applied edit set. */
  async commitAndStep(id: string, interventions: InterventionDoc[]): Promise<Snapshot> {
    await this.setInterventions(id, interventions);
    return this.step(id, 1);
  }

  tokenGradients(id: string, tick?: number): Promise<TokenGradientsDoc> {
    const q = tick === undefined ? "" : `?tick=${tick}`;
    return this.request(`/sessions/${id}/analysis/token_gradients${q}`);
  }

  headResponse(id: string, tick?: number): Promise<HeadResponseDoc> {
    const q = tick === undefined ? "" : `?tick=${tick}`;
    return this.request(`/sessions/${id}/analysis/head_response${q}`);
  }

  activationMap(id: string, tick?: number, layer = "fused"): Promise<ActivationMapDoc> {
    const params = new URLSearchParams({ layer });
    if (tick !== undefined) params.set("tick", String(tick));
    return this.request(`/sessions/${id}/analysis/activation_map?${params}`);
  }
}
