// DOM rendering for the three-panel budgeter. Re-renders from the view
// state snapshot; every number shown is lifted verbatim from the last
// server response.

import type { ViewState } from "./state.js";
import { describeWarning } from "./state.js";
import type { SessionView, StatisticRow } from "./types.js";

export interface Handlers {
  onCommitErrorCell(statId: string, rawText: string): void;
  onToggleHold(statId: string, held: boolean): void;
  onConfidencePercent(rawText: string): void;
  onReserve(fraction: number): void;
  onDeleteStatistic(statId: string): void;
  onOpenAddStatistic(variable: string): void;
  onSubmitAddStatistic(form: AddStatisticForm): void;
  onOpenParamsDialog(): void;
  onSubmitParams(epsilon: number, delta: number, population: number | null): void;
  onAcknowledgeWarnings(): void;
  onCancelDialog(): void;
  onFinalizeRequested(): void;
  onFinalizeConfirmed(): void;
  onTourNext(): void;
}

export interface AddStatisticForm {
  variable: string;
  kind: string;
  lower: string;
  upper: string;
  categories: string;
  grid: string;
  p: string;
}

export function formatNumber(value: number): string {
  // Display-only shortening of a server-sent number; no arithmetic.
  return Number(value.toPrecision(6)).toString();
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function render(root: HTMLElement, view: ViewState, handlers: Handlers): void {
  root.textContent = "";
  root.append(renderBanners(view));
  if (view.session === null) {
    root.append(el("p", { class: "empty-note" }, ["No session loaded."]));
    return;
  }
  const layout = el("div", { class: "panels" });
  layout.append(
    renderVariablesPanel(view.session, view, handlers),
    renderStatisticsPanel(view.session, view, handlers),
    renderBudgetPanel(view.session, view, handlers),
  );
  root.append(layout);
  root.append(renderDialog(view, handlers));
  if (view.tourStep > 0) {
    root.append(renderTour(view, handlers));
  }
}

function renderBanners(view: ViewState): HTMLElement {
  const host = el("div", { id: "banners" });
  if (view.offline) {
    host.append(
      el("div", { class: "banner banner-error", "data-banner": "offline" }, [
        "Service unreachable. Showing the last known state, read-only.",
      ]),
    );
  }
  for (const banner of view.banners) {
    host.append(el("div", { class: `banner banner-${banner.tone}` }, [banner.text]));
  }
  return host;
}

function controlsLocked(view: ViewState): boolean {
  return view.offline || view.session?.phase === "finalized";
}

function renderVariablesPanel(
  session: SessionView,
  view: ViewState,
  handlers: Handlers,
): HTMLElement {
  const panel = el("section", { id: "panel-variables", class: "panel" });
  panel.append(el("h2", {}, ["Variables"]));
  const list = el("ul", { class: "variable-list" });
  for (const name of session.dataset.variables) {
    const button = el("button", { class: "variable-add", "data-variable": name }, [
      "add statistic",
    ]) as HTMLButtonElement;
    button.disabled = controlsLocked(view);
    button.addEventListener("click", () => handlers.onOpenAddStatistic(name));
    list.append(el("li", {}, [el("span", {}, [name]), " ", button]));
  }
  panel.append(list);
  panel.append(
    el("p", { class: "dataset-note" }, [
      `${session.dataset.n} rows, firewall ${session.dataset.firewall_state}`,
    ]),
  );
  return panel;
}

function metadataSummary(row: StatisticRow): string {
  const parts = [`variable ${row.variable}`];
  if (row.p !== null) {
    parts.push(`fraction ${formatNumber(row.p)}`);
  }
  return parts.join(", ");
}

function renderStatisticsPanel(
  session: SessionView,
  view: ViewState,
  handlers: Handlers,
): HTMLElement {
  const panel = el("section", { id: "panel-statistics", class: "panel" });
  panel.append(el("h2", {}, ["Statistics"]));
  panel.append(
    el("p", { class: "metadata-warning" }, [
      el("strong", {}, [
        "Metadata must be a priori estimates. Never copy values from your raw data.",
      ]),
    ]),
  );
  if (session.statistics.length === 0) {
    panel.append(el("p", { class: "empty-note" }, ["No statistics selected yet."]));
  }
  for (const row of session.statistics) {
    const card = el("div", { class: "stat-card", "data-card": row.id });
    card.append(el("h3", {}, [`${row.id}: ${row.kind} of ${row.variable}`]));
    card.append(el("p", { class: "stat-meta" }, [metadataSummary(row)]));
    const remove = el("button", { class: "stat-delete", "data-delete": row.id }, [
      "delete",
    ]) as HTMLButtonElement;
    remove.disabled = controlsLocked(view);
    remove.addEventListener("click", () => handlers.onDeleteStatistic(row.id));
    card.append(remove);
    panel.append(card);
  }
  return panel;
}

function renderBudgetPanel(
  session: SessionView,
  view: ViewState,
  handlers: Handlers,
): HTMLElement {
  const panel = el("section", { id: "panel-budget", class: "panel" });
  panel.append(el("h2", {}, ["Error budget"]));
  panel.append(renderErrorTable(session, view, handlers));
  panel.append(renderConfidenceControl(session, view, handlers));
  panel.append(renderReserveControl(session, view, handlers));
  panel.append(renderBudgetSummary(session));

  const finalize = el("button", { id: "finalize-button" }, [
    "Finalize and release",
  ]) as HTMLButtonElement;
  finalize.disabled = controlsLocked(view) || session.statistics.length === 0;
  finalize.addEventListener("click", () => handlers.onFinalizeRequested());
  panel.append(finalize);

  if (session.phase === "finalized") {
    panel.append(renderReleases(view));
  }

  // Deliberately small and out of the way; budget edits are a big deal.
  const editParams = el(
    "button",
    { id: "edit-params", class: "inconspicuous", title: "Edit parameters" },
    ["Edit parameters"],
  ) as HTMLButtonElement;
  editParams.disabled = controlsLocked(view);
  editParams.addEventListener("click", () => handlers.onOpenParamsDialog());
  panel.append(editParams);
  return panel;
}

function renderErrorTable(
  session: SessionView,
  view: ViewState,
  handlers: Handlers,
): HTMLElement {
  const table = el("table", { id: "error-table" });
  table.append(
    el("thead", {}, [
      el("tr", {}, [
        el("th", {}, ["statistic"]),
        el("th", {}, ["worst-case error"]),
        el("th", {}, ["units"]),
        el("th", {}, ["hold"]),
      ]),
    ]),
  );
  const body = el("tbody");
  for (const row of session.statistics) {
    const tr = el("tr", { "data-row": row.id });
    tr.append(el("td", {}, [`${row.id} ${row.kind}(${row.variable})`]));

    const cell = el("input", {
      class: "error-cell",
      "data-error-cell": row.id,
      type: "text",
      value: row.error_value === null ? "" : formatNumber(row.error_value),
    }) as HTMLInputElement;
    cell.disabled =
      row.held || controlsLocked(view) || view.pendingEdits.has(row.id);
    cell.addEventListener("change", () =>
      handlers.onCommitErrorCell(row.id, cell.value),
    );
    tr.append(el("td", {}, [cell]));

    tr.append(el("td", {}, [row.error_value === null ? "-" : row.error_units]));

    const hold = el("input", {
      type: "checkbox",
      class: "hold-box",
      "data-hold": row.id,
    }) as HTMLInputElement;
    hold.checked = row.held;
    hold.disabled = controlsLocked(view);
    hold.addEventListener("change", () => handlers.onToggleHold(row.id, hold.checked));
    tr.append(el("td", {}, [hold]));
    body.append(tr);
  }
  table.append(body);
  return table;
}

function renderConfidenceControl(
  session: SessionView,
  view: ViewState,
  handlers: Handlers,
): HTMLElement {
  // Presented as a percentage; the server stores alpha = 1 - percent/100.
  const percent = (1 - session.confidence_alpha) * 100;
  const input = el("input", {
    id: "confidence-input",
    type: "number",
    min: "50",
    max: "99.999",
    step: "0.5",
    value: formatNumber(percent),
  }) as HTMLInputElement;
  input.disabled = controlsLocked(view);
  input.addEventListener("change", () => handlers.onConfidencePercent(input.value));
  return el("label", { class: "control" }, ["Confidence level (%) ", input]);
}

function renderReserveControl(
  session: SessionView,
  view: ViewState,
  handlers: Handlers,
): HTMLElement {
  const slider = el("input", {
    id: "reserve-slider",
    type: "range",
    min: "0",
    max: "0.9",
    step: "0.05",
    value: String(session.reserve_fraction),
  }) as HTMLInputElement;
  slider.disabled = controlsLocked(view);
  slider.addEventListener("change", () =>
    handlers.onReserve(Number(slider.value)),
  );
  return el("label", { class: "control" }, [
    `Reserved for analysts: ${formatNumber(session.reserve_fraction * 100)}% `,
    slider,
  ]);
}

function renderBudgetSummary(session: SessionView): HTMLElement {
  const p = session.params;
  const dl = el("dl", { id: "budget-summary" });
  const rows: [string, string][] = [
    ["Privacy budget", `epsilon ${formatNumber(p.epsilon)}, delta ${formatNumber(p.delta)}`],
    ["Population size", p.population_size === null ? "not set" : String(p.population_size)],
    ["Spendable this session", `epsilon ${formatNumber(p.usable_epsilon)}`],
    ["Unspent", `epsilon ${formatNumber(p.epsilon_unspent)}`],
  ];
  for (const [label, value] of rows) {
    dl.append(el("dt", {}, [label]), el("dd", {}, [value]));
  }
  return dl;
}

function renderReleases(view: ViewState): HTMLElement {
  const host = el("div", { id: "releases" });
  host.append(el("h3", {}, ["Releases"]));
  if (view.releases === null) {
    host.append(el("p", {}, ["Loading releases..."]));
    return host;
  }
  const list = el("ul");
  for (const release of view.releases.releases) {
    const value =
      typeof release.value === "number"
        ? formatNumber(release.value)
        : JSON.stringify(release.value);
    list.append(
      el("li", { "data-release": release.statistic_id }, [
        `${release.statistic_id} ${release.kind}(${release.variable}) = ${value} ` +
          `(error bound ${formatNumber(release.error_bound)} ${release.error_units})`,
      ]),
    );
  }
  host.append(list);
  return host;
}

function renderDialog(view: ViewState, handlers: Handlers): HTMLElement {
  const host = el("div", { id: "dialog-host" });
  if (view.dialog === "none") {
    return host;
  }
  const overlay = el("div", { class: "overlay" });
  if (view.dialog === "params") {
    overlay.append(renderParamsDialog(view, handlers));
  } else if (view.dialog === "warnings") {
    overlay.append(renderWarningsDialog(view, handlers));
  } else if (view.dialog === "add-stat") {
    overlay.append(renderAddStatDialog(view, handlers));
  } else if (view.dialog === "finalize") {
    overlay.append(renderFinalizeDialog(handlers));
  }
  host.append(overlay);
  return host;
}

function renderParamsDialog(view: ViewState, handlers: Handlers): HTMLElement {
  const dialog = el("div", { class: "dialog", id: "params-dialog" });
  dialog.append(el("h3", {}, ["Edit parameters"]));
  dialog.append(
    el("p", {}, [
      "Smaller values mean stronger privacy and noisier statistics. " +
        "Pick a preset for your data's sensitivity or enter values directly.",
    ]),
  );
  const epsilon = el("input", {
    id: "param-epsilon",
    type: "text",
    value: view.session ? String(view.session.params.epsilon) : "",
  }) as HTMLInputElement;
  const delta = el("input", {
    id: "param-delta",
    type: "text",
    value: view.session ? String(view.session.params.delta) : "",
  }) as HTMLInputElement;
  const population = el("input", {
    id: "param-population",
    type: "text",
    value:
      view.session && view.session.params.population_size !== null
        ? String(view.session.params.population_size)
        : "",
  }) as HTMLInputElement;

  const presets = el("div", { id: "tier-presets" });
  for (const tier of view.tiers) {
    if (!tier.supported) {
      presets.append(
        el("p", { class: "tier-unsupported", "data-tier": String(tier.tier) }, [
          `Tier ${tier.tier} (${tier.description}): no preset.`,
        ]),
      );
      continue;
    }
    const button = el(
      "button",
      { class: "tier-preset", "data-tier": String(tier.tier) },
      [`Tier ${tier.tier}: ${tier.description}`],
    ) as HTMLButtonElement;
    button.addEventListener("click", () => {
      epsilon.value = String(tier.epsilon);
      delta.value = String(tier.delta);
    });
    presets.append(button);
  }
  dialog.append(presets);
  dialog.append(el("label", {}, ["epsilon ", epsilon]));
  dialog.append(el("label", {}, ["delta ", delta]));
  dialog.append(
    el("label", {}, [
      "population size (only if the data are a secret random sample) ",
      population,
    ]),
  );
  if (view.dialogError) {
    dialog.append(el("p", { class: "dialog-error" }, [view.dialogError]));
  }
  const submit = el("button", { id: "params-submit" }, ["Apply"]) as HTMLButtonElement;
  submit.addEventListener("click", () => {
    const populationValue = population.value.trim();
    handlers.onSubmitParams(
      Number(epsilon.value),
      Number(delta.value),
      populationValue === "" ? null : Number(populationValue),
    );
  });
  const cancel = el("button", { id: "params-cancel" }, ["Cancel"]) as HTMLButtonElement;
  cancel.addEventListener("click", () => handlers.onCancelDialog());
  dialog.append(submit, cancel);
  return dialog;
}

function renderWarningsDialog(view: ViewState, handlers: Handlers): HTMLElement {
  const dialog = el("div", { class: "dialog", id: "warnings-dialog" });
  dialog.append(el("h3", {}, ["Check these parameters"]));
  const list = el("ul");
  for (const code of view.pendingWarnings) {
    list.append(el("li", { "data-warning": code }, [describeWarning(code)]));
  }
  dialog.append(list);
  dialog.append(
    el("p", {}, ["Proceed only if you are sure these values are what you intend."]),
  );
  const acknowledge = el("button", { id: "warnings-acknowledge" }, [
    "I understand, proceed",
  ]) as HTMLButtonElement;
  acknowledge.addEventListener("click", () => handlers.onAcknowledgeWarnings());
  const back = el("button", { id: "warnings-back" }, ["Go back"]) as HTMLButtonElement;
  back.addEventListener("click", () => handlers.onCancelDialog());
  dialog.append(acknowledge, back);
  return dialog;
}

function renderAddStatDialog(view: ViewState, handlers: Handlers): HTMLElement {
  const dialog = el("div", { class: "dialog", id: "add-stat-dialog" });
  const variable = view.addStatVariable ?? "";
  dialog.append(el("h3", {}, [`New statistic for ${variable}`]));
  dialog.append(
    el("p", { class: "metadata-warning" }, [
      el("strong", {}, [
        "Metadata must be a priori estimates. Never copy values from your raw data.",
      ]),
    ]),
  );
  const kind = el("select", { id: "add-kind" }) as HTMLSelectElement;
  for (const option of ["mean", "histogram", "quantile", "cdf"]) {
    kind.append(el("option", { value: option }, [option]));
  }
  const lower = el("input", { id: "add-lower", type: "text" }) as HTMLInputElement;
  const upper = el("input", { id: "add-upper", type: "text" }) as HTMLInputElement;
  const categories = el("input", { id: "add-categories", type: "text" }) as HTMLInputElement;
  const grid = el("input", { id: "add-grid", type: "text" }) as HTMLInputElement;
  const p = el("input", { id: "add-p", type: "text" }) as HTMLInputElement;
  dialog.append(el("label", {}, ["statistic ", kind]));
  dialog.append(el("label", {}, ["lower bound ", lower]));
  dialog.append(el("label", {}, ["upper bound ", upper]));
  dialog.append(el("label", {}, ["categories (comma separated) ", categories]));
  dialog.append(el("label", {}, ["grid cells ", grid]));
  dialog.append(el("label", {}, ["quantile fraction ", p]));
  if (view.dialogError) {
    dialog.append(el("p", { class: "dialog-error" }, [view.dialogError]));
  }
  const submit = el("button", { id: "add-stat-submit" }, ["Add"]) as HTMLButtonElement;
  submit.addEventListener("click", () =>
    handlers.onSubmitAddStatistic({
      variable,
      kind: kind.value,
      lower: lower.value,
      upper: upper.value,
      categories: categories.value,
      grid: grid.value,
      p: p.value,
    }),
  );
  const cancel = el("button", { id: "add-stat-cancel" }, ["Cancel"]) as HTMLButtonElement;
  cancel.addEventListener("click", () => handlers.onCancelDialog());
  dialog.append(submit, cancel);
  return dialog;
}

function renderFinalizeDialog(handlers: Handlers): HTMLElement {
  const dialog = el("div", { class: "dialog", id: "finalize-dialog" });
  dialog.append(el("h3", {}, ["Finalize this session?"]));
  dialog.append(
    el("p", {}, [
      "The mechanisms will run on the raw data with the budget shown. " +
        "This cannot be undone and the session becomes read-only.",
    ]),
  );
  const confirm = el("button", { id: "finalize-confirm" }, [
    "Run and release",
  ]) as HTMLButtonElement;
  confirm.addEventListener("click", () => handlers.onFinalizeConfirmed());
  const cancel = el("button", { id: "finalize-cancel" }, ["Cancel"]) as HTMLButtonElement;
  cancel.addEventListener("click", () => handlers.onCancelDialog());
  dialog.append(confirm, cancel);
  return dialog;
}

const TOUR_STEPS = [
  "Variables in your dataset are listed on the left. Pick one to add a statistic.",
  "Each selected statistic gets a card in the middle, with its metadata.",
  "The table on the right shows the worst-case error of each statistic. " +
    "Edit a cell to trade budget between statistics; use hold to pin one.",
];

function renderTour(view: ViewState, handlers: Handlers): HTMLElement {
  const overlay = el("div", { class: "overlay", id: "tour" });
  const box = el("div", { class: "dialog" });
  box.append(el("p", { "data-tour-step": String(view.tourStep) }, [
    TOUR_STEPS[view.tourStep - 1] ?? "",
  ]));
  const next = el("button", { id: "tour-next" }, [
    view.tourStep >= TOUR_STEPS.length ? "Done" : "Next",
  ]) as HTMLButtonElement;
  next.addEventListener("click", () => handlers.onTourNext());
  box.append(next);
  overlay.append(box);
  return overlay;
}
