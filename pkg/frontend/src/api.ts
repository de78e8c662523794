// Thin fetch wrapper around the session service. Enforces at most one
// in-flight mutating request; reads are free to overlap.

import type {
  AddStatisticRequest,
  CreateSessionRequest,
  ParamsRequest,
  ReleaseDocument,
  SessionView,
  TierInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class MutationInFlightError extends Error {
  constructor() {
    super("another change is still being applied");
    this.name = "MutationInFlightError";
  }
}

export class ApiClient {
  private mutationInFlight = false;

  constructor(public baseUrl: string) {}

  get busy(): boolean {
    return this.mutationInFlight;
  }

  getSession(id: string): Promise<SessionView> {
    return this.request(`/sessions/${id}`, "GET");
  }

  getReleases(id: string): Promise<ReleaseDocument> {
    return this.request(`/sessions/${id}/releases`, "GET");
  }

  async getRecommendations(): Promise<TierInfo[]> {
    const body = await this.request<{ tiers: TierInfo[] }>(
      "/params/recommendations",
      "GET",
    );
    return body.tiers;
  }

  createSession(body: CreateSessionRequest): Promise<SessionView> {
    return this.mutate("/sessions", "POST", body);
  }

  updateParams(id: string, body: ParamsRequest): Promise<SessionView> {
    return this.mutate(`/sessions/${id}/params`, "PUT", body);
  }

  setConfidence(id: string, alpha: number): Promise<SessionView> {
    return this.mutate(`/sessions/${id}/confidence`, "PUT", { alpha });
  }

  setReserve(id: string, fraction: number): Promise<SessionView> {
    return this.mutate(`/sessions/${id}/reserve`, "PUT", { fraction });
  }

  addStatistic(id: string, body: AddStatisticRequest): Promise<SessionView> {
    return this.mutate(`/sessions/${id}/statistics`, "POST", body);
  }

  deleteStatistic(id: string, statId: string): Promise<SessionView> {
    return this.mutate(`/sessions/${id}/statistics/${statId}`, "DELETE");
  }

  setErrorTarget(id: string, statId: string, value: number): Promise<SessionView> {
    return this.mutate(`/sessions/${id}/statistics/${statId}/error-target`, "PUT", {
      value,
    });
  }

  setHold(id: string, statId: string, held: boolean): Promise<SessionView> {
    return this.mutate(`/sessions/${id}/statistics/${statId}/hold`, "PUT", { held });
  }

  finalize(id: string): Promise<ReleaseDocument> {
    return this.mutate(`/sessions/${id}/finalize`, "POST", {});
  }

  private async mutate<T>(path: string, method: string, body?: unknown): Promise<T> {
    if (this.mutationInFlight) {
      throw new MutationInFlightError();
    }
    this.mutationInFlight = true;
    try {
      return await this.request<T>(path, method, body);
    } finally {
      this.mutationInFlight = false;
    }
  }

  private async request<T>(path: string, method: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let payload: unknown = null;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = null;
      }
    }
    if (!response.ok) {
      const err = (payload as { error?: { code?: string; message?: string } })?.error;
      const { code = `HTTP_${response.status}`, message = response.statusText, ...rest } =
        err ?? {};
      throw new ApiError(code, message, rest as Record<string, unknown>);
    }
    return payload as T;
  }
}
