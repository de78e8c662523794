// Event handling and server round trips. Server-authoritative throughout:
// a control locks while its request is in flight, and the whole view
// re-renders from the response snapshot.

import { ApiClient, ApiError, MutationInFlightError } from "./api.js";
import type { AddStatisticForm, Handlers } from "./render.js";
import { render } from "./render.js";
import { initialViewState, pushBanner, describeWarning, type ViewState } from "./state.js";
import type { CreateSessionRequest, ParamsRequest, SessionView } from "./types.js";

const TOUR_DONE_KEY = "dp-budgeter-tour-done";
const TOUR_STEPS = 3;

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export class AppController implements Handlers {
  readonly state: ViewState = initialViewState();

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private storage: KeyValueStore = window.localStorage,
  ) {}

  render(): void {
    render(this.root, this.state, this);
  }

  async openSession(id: string): Promise<void> {
    await this.loadTiers();
    try {
      this.applySession(await this.api.getSession(id));
      if (this.state.session?.releases_available) {
        this.state.releases = await this.api.getReleases(id);
      }
    } catch (error) {
      this.reportError(error);
    }
    this.maybeStartTour();
    this.render();
  }

  async createSession(request: CreateSessionRequest): Promise<void> {
    await this.loadTiers();
    try {
      this.applySession(await this.api.createSession(request));
    } catch (error) {
      if (error instanceof ApiError && error.code === "WARNINGS_NOT_ACKNOWLEDGED") {
        this.state.pendingCreate = request;
        this.state.pendingWarnings = (error.details.warnings as string[]) ?? [];
        this.state.dialog = "warnings";
      } else {
        this.reportError(error);
      }
    }
    this.maybeStartTour();
    this.render();
  }

  private async loadTiers(): Promise<void> {
    if (this.state.tiers.length > 0) {
      return;
    }
    try {
      this.state.tiers = await this.api.getRecommendations();
    } catch {
      this.state.tiers = [];
    }
  }

  private applySession(view: SessionView): void {
    this.state.session = view;
    this.state.offline = false;
    for (const code of view.warnings ?? []) {
      pushBanner(this.state, "warn", describeWarning(code));
    }
  }

  private reportError(error: unknown): void {
    if (error instanceof MutationInFlightError) {
      pushBanner(this.state, "info", error.message);
    } else if (error instanceof ApiError) {
      pushBanner(this.state, "error", error.message);
    } else {
      this.state.offline = true;
    }
  }

  private async mutate(call: () => Promise<SessionView>): Promise<boolean> {
    try {
      this.applySession(await call());
      return true;
    } catch (error) {
      this.reportError(error);
      return false;
    } finally {
      this.render();
    }
  }

  private sessionId(): string {
    const session = this.state.session;
    if (!session) {
      throw new Error("no session loaded");
    }
    return session.id;
  }

  // --- error table ---------------------------------------------------

  onCommitErrorCell(statId: string, rawText: string): void {
    const session = this.state.session;
    if (!session) {
      return;
    }
    const row = session.statistics.find((r) => r.id === statId);
    if (!row || row.held) {
      return;
    }
    const value = Number(rawText);
    if (!Number.isFinite(value) || value <= 0) {
      pushBanner(this.state, "error", "Error targets must be positive numbers.");
      this.render(); // reverts the cell to the last server value
      return;
    }
    this.state.pendingEdits.add(statId);
    this.render(); // lock the cell until the server answers
    void this.api
      .setErrorTarget(this.sessionId(), statId, value)
      .then((view) => this.applySession(view))
      .catch((error) => {
        if (error instanceof ApiError && error.code === "INFEASIBLE_TARGET") {
          pushBanner(this.state, "warn", error.message);
        } else {
          this.reportError(error);
        }
      })
      .finally(() => {
        this.state.pendingEdits.delete(statId);
        this.render();
      });
  }

  onToggleHold(statId: string, held: boolean): void {
    void this.mutate(() => this.api.setHold(this.sessionId(), statId, held));
  }

  onConfidencePercent(rawText: string): void {
    const percent = Number(rawText);
    if (!Number.isFinite(percent) || percent < 50 || percent >= 100) {
      pushBanner(this.state, "error", "Confidence must be a percentage in [50, 100).");
      this.render();
      return;
    }
    const alpha = 1 - percent / 100;
    void this.mutate(() => this.api.setConfidence(this.sessionId(), alpha));
  }

  onReserve(fraction: number): void {
    void this.mutate(() => this.api.setReserve(this.sessionId(), fraction));
  }

  onDeleteStatistic(statId: string): void {
    void this.mutate(() => this.api.deleteStatistic(this.sessionId(), statId));
  }

  // --- add statistic --------------------------------------------------

  onOpenAddStatistic(variable: string): void {
    this.state.dialog = "add-stat";
    this.state.dialogError = null;
    this.state.addStatVariable = variable;
    this.render();
  }

  onSubmitAddStatistic(form: AddStatisticForm): void {
    const numeric = form.categories.trim() === "";
    const body = {
      variable: form.variable,
      kind: form.kind,
      metadata: numeric
        ? {
            kind: "numerical",
            lower: form.lower.trim() === "" ? null : Number(form.lower),
            upper: form.upper.trim() === "" ? null : Number(form.upper),
            grid_cells: form.grid.trim() === "" ? null : Number(form.grid),
          }
        : {
            kind: "categorical",
            categories: form.categories.split(",").map((c) => c.trim()),
            grid_cells: form.grid.trim() === "" ? null : Number(form.grid),
          },
      p: form.p.trim() === "" ? null : Number(form.p),
    };
    void this.api
      .addStatistic(this.sessionId(), body)
      .then((view) => {
        this.applySession(view);
        this.state.dialog = "none";
        this.state.dialogError = null;
      })
      .catch((error) => {
        if (error instanceof ApiError) {
          this.state.dialogError = error.message; // stay in the dialog
        } else {
          this.reportError(error);
        }
      })
      .finally(() => this.render());
  }

  // --- parameter dialog -----------------------------------------------

  onOpenParamsDialog(): void {
    this.state.dialog = "params";
    this.state.dialogError = null;
    this.render();
  }

  onSubmitParams(epsilon: number, delta: number, population: number | null): void {
    const request: ParamsRequest = { epsilon, delta };
    const current = this.state.session?.params.population_size ?? null;
    if (population !== null && population !== current) {
      request.population_size = population;
    }
    void this.submitParams(request, false);
  }

  private async submitParams(request: ParamsRequest, acknowledged: boolean): Promise<void> {
    try {
      const view = await this.api.updateParams(this.sessionId(), {
        ...request,
        acknowledge_warnings: acknowledged,
      });
      this.applySession(view);
      this.state.dialog = "none";
      this.state.dialogError = null;
      this.state.pendingParams = null;
      this.state.pendingWarnings = [];
    } catch (error) {
      if (error instanceof ApiError && error.code === "WARNINGS_NOT_ACKNOWLEDGED") {
        this.state.pendingParams = request;
        this.state.pendingWarnings = (error.details.warnings as string[]) ?? [];
        this.state.dialog = "warnings";
      } else if (error instanceof ApiError) {
        this.state.dialog = "params";
        this.state.dialogError = error.message; // reject level blocks submission
      } else {
        this.reportError(error);
      }
    }
    this.render();
  }

  onAcknowledgeWarnings(): void {
    if (this.state.pendingParams !== null) {
      void this.submitParams(this.state.pendingParams, true);
      return;
    }
    if (this.state.pendingCreate !== null) {
      const request = { ...this.state.pendingCreate, acknowledge_warnings: true };
      this.state.pendingCreate = null;
      this.state.dialog = "none";
      void this.createSession(request);
    }
  }

  onCancelDialog(): void {
    this.state.dialog = "none";
    this.state.dialogError = null;
    this.state.pendingParams = null;
    this.state.pendingWarnings = [];
    this.render();
  }

  // --- finalize ---------------------------------------------------------

  onFinalizeRequested(): void {
    this.state.dialog = "finalize";
    this.render();
  }

  onFinalizeConfirmed(): void {
    this.state.dialog = "none";
    void this.api
      .finalize(this.sessionId())
      .then(async (doc) => {
        this.state.releases = doc;
        this.applySession(await this.api.getSession(this.sessionId()));
      })
      .catch((error) => this.reportError(error))
      .finally(() => this.render());
  }

  // --- guided tour -------------------------------------------------------

  private maybeStartTour(): void {
    if (this.state.session && this.storage.getItem(TOUR_DONE_KEY) === null) {
      this.state.tourStep = 1;
    }
  }

  onTourNext(): void {
    if (this.state.tourStep >= TOUR_STEPS) {
      this.state.tourStep = 0;
      this.storage.setItem(TOUR_DONE_KEY, "1");
    } else {
      this.state.tourStep += 1;
    }
    this.render();
  }
}
