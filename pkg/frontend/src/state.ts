// Client view state: the last server snapshot plus purely presentational
// bookkeeping (locked cells, banners, dialog state). Everything numeric on
// screen comes from `session`; the client recomputes nothing.

import type {
  CreateSessionRequest,
  ParamsRequest,
  ReleaseDocument,
  SessionView,
  TierInfo,
} from "./types.js";

export type DialogKind = "none" | "params" | "warnings" | "add-stat" | "finalize";

export interface Banner {
  tone: "info" | "warn" | "error";
  text: string;
}

export interface ViewState {
  session: SessionView | null;
  releases: ReleaseDocument | null;
  tiers: TierInfo[];
  banners: Banner[];
  pendingEdits: Set<string>;
  dialog: DialogKind;
  dialogError: string | null;
  pendingParams: ParamsRequest | null;
  pendingCreate: CreateSessionRequest | null;
  pendingWarnings: string[];
  addStatVariable: string | null;
  offline: boolean;
  tourStep: number; // 0 = not showing
}

export function initialViewState(): ViewState {
  return {
    session: null,
    releases: null,
    tiers: [],
    banners: [],
    pendingEdits: new Set(),
    dialog: "none",
    dialogError: null,
    pendingParams: null,
    pendingCreate: null,
    pendingWarnings: [],
    addStatVariable: null,
    offline: false,
    tourStep: 0,
  };
}

export function pushBanner(state: ViewState, tone: Banner["tone"], text: string): void {
  state.banners.push({ tone, text });
  if (state.banners.length > 4) {
    state.banners.shift();
  }
}

const WARNING_TEXT: Record<string, string> = {
  SWAP_SUSPECTED:
    "These values look swapped: the first parameter is usually the larger " +
    "one (like 0.25) and the second the tiny one (like 1e-6).",
  ABOVE_RECOMMENDED_EPSILON:
    "The first parameter is above the highest recommended value of 1.",
  ABOVE_RECOMMENDED_DELTA:
    "The second parameter is above the recommended maximum of 1e-5.",
  HELD_ALLOCATIONS_RESCALED:
    "Held statistics were rescaled too: a budget change overrides holds.",
};

export function describeWarning(code: string): string {
  return WARNING_TEXT[code] ?? code;
}
