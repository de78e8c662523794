// Canned payloads in the exact wire shapes of the session service, plus a
// route-based fetch mock that records every call.

import { vi } from "vitest";
import type { SessionView, StatisticRow, TierInfo } from "../src/types.js";

export function statRow(overrides: Partial<StatisticRow> = {}): StatisticRow {
  return {
    id: "s1",
    variable: "age",
    kind: "mean",
    p: null,
    epsilon: 0.125,
    held: false,
    error_value: 4.4936,
    error_units: "statistic",
    ...overrides,
  };
}

export function sessionView(overrides: Partial<SessionView> = {}): SessionView {
  return {
    id: "abc123",
    phase: "configuring",
    created_at: "2026-01-01T00:00:00+00:00",
    updated_at: "2026-01-01T00:00:00+00:00",
    dataset: {
      path: "survey.csv",
      n: 1000,
      variables: ["age", "sex", "income", "education", "race", "marital"],
      firewall_state: "sealed",
      read_audit: 0,
    },
    params: {
      epsilon: 1.0,
      delta: 1e-5,
      population_size: null,
      internal_epsilon: 1.0,
      internal_delta: 1e-5,
      usable_epsilon: 1.0,
      epsilon_unspent: 0.0,
      delta_reserved_for_analysts: 1e-5,
    },
    confidence_alpha: 0.05,
    reserve_fraction: 0.0,
    acknowledged_warnings: [],
    statistics: [statRow()],
    releases_available: false,
    ...overrides,
  };
}

export const TIERS: TierInfo[] = [
  { tier: 1, description: "public information", epsilon: null, delta: null, supported: false },
  { tier: 2, description: "confidential, no material harm", epsilon: 1.0, delta: 1e-5, supported: true },
  { tier: 3, description: "risk of material harm", epsilon: 0.25, delta: 1e-6, supported: true },
  { tier: 4, description: "likely serious harm", epsilon: 0.05, delta: 1e-7, supported: true },
  { tier: 5, description: "severe harm", epsilon: null, delta: null, supported: false },
];

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export type Route = (
  call: RecordedCall,
) => { status?: number; payload: unknown } | undefined;

export function installFetch(route: Route): RecordedCall[] {
  const calls: RecordedCall[] = [];
  vi.stubGlobal(
    "fetch",
    vi.fn(async (url: string, init?: RequestInit) => {
      const call: RecordedCall = {
        url: String(url),
        method: init?.method ?? "GET",
        body: init?.body ? JSON.parse(init.body as string) : undefined,
      };
      calls.push(call);
      const match = route(call);
      if (match === undefined) {
        throw new Error(`unmocked route: ${call.method} ${call.url}`);
      }
      return new Response(JSON.stringify(match.payload), {
        status: match.status ?? 200,
        headers: { "content-type": "application/json" },
      });
    }),
  );
  return calls;
}

export function mapStorage(): { getItem(k: string): string | null; setItem(k: string, v: string): void } {
  const map = new Map<string, string>();
  return {
    getItem: (k) => map.get(k) ?? null,
    setItem: (k, v) => void map.set(k, v),
  };
}

export function errorPayload(code: string, message: string, extra: Record<string, unknown> = {}) {
  return { error: { code, message, ...extra } };
}
