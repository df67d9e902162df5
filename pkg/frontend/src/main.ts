// Application wiring: one App instance owns the DOM below a root
// element, a typed service client, and the session state. All scientific
// values on screen come from service payloads; this module only routes
// events and re-renders panels.

import { ApiError, ReviewApi, type ReviewClient } from "./api.js";
import { renderMetrics } from "./metrics.js";
import { renderSignalExcerpt, type Excerpt } from "./signal.js";
import { SessionState } from "./state.js";
import { renderLegend, renderTimeline } from "./timeline.js";
import type {
  HypnodensityPayload,
  MetricsPayload,
  RecordingInfo,
  StageToken,
} from "./types.js";
import { STAGE_ORDER } from "./types.js";

export interface SessionOptions {
  metric?: string;
  mode?: string;
  parameter?: number;
  reviewer?: string;
}

function shell(): string {
  return `
<div class="review-app">
  <div class="banner" data-role="banner" hidden>
    <span data-role="banner-text"></span>
    <button data-action="retry">retry</button>
    <button data-action="dismiss">dismiss</button>
  </div>
  <header class="toolbar">
    <select data-role="recording-select"></select>
    <button data-action="open-session">open session</button>
    <button data-action="toggle-order" title="switch between most-uncertain-first and chronological">
      order: <span data-role="order-label">uncertainty</span>
    </button>
    <button data-action="complete-session">complete</button>
    <button data-action="export-session">export</button>
  </header>
  <section class="panel" data-panel="timeline"></section>
  <section class="panel" data-panel="decision"></section>
  <section class="panel" data-panel="metrics"></section>
  <section class="panel" data-panel="export" hidden><pre data-role="export-body"></pre></section>
</div>`;
}

export class App {
  readonly state = new SessionState();

  private hypnodensity: HypnodensityPayload | null = null;
  private metrics: MetricsPayload | null = null;
  private excerpt: Excerpt | null = null;
  private recordings: RecordingInfo[] = [];
  private sessionOptions: SessionOptions = {};
  private signalToken = 0;
  private work: Promise<void> = Promise.resolve();
  private retryTask: (() => Promise<void>) | null = null;
  private readonly keyHandler = (ev: KeyboardEvent) => this.onKey(ev);

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ReviewClient,
  ) {
    root.innerHTML = shell();
    root.addEventListener("click", (ev) => this.onClick(ev));
    root.ownerDocument.addEventListener("keydown", this.keyHandler);
  }

  destroy(): void {
    this.root.ownerDocument.removeEventListener("keydown", this.keyHandler);
  }

  // serialize user-triggered async work; tests await whenIdle()
  private run(task: () => Promise<void>): void {
    this.work = this.work.then(task).catch((err) => {
      this.showBanner(String(err), null);
    });
  }

  async whenIdle(): Promise<void> {
    // tasks may queue follow-up work; drain until the chain stops growing
    let tail: Promise<void>;
    do {
      tail = this.work;
      await tail;
    } while (tail !== this.work);
  }

  async start(): Promise<void> {
    const listing = await this.api.listRecordings();
    this.recordings = listing.recordings;
    const select = this.q<HTMLSelectElement>("[data-role=recording-select]");
    select.innerHTML = this.recordings
      .map((r) => `<option value="${r.recording_id}">${r.recording_id} (${r.epoch_count} epochs)</option>`)
      .join("");
  }

  async openSession(recordingId: string, options: SessionOptions = {}): Promise<void> {
    this.sessionOptions = options;
    const session = await this.api.createSession({
      recording_id: recordingId,
      metric: options.metric,
      mode: options.mode,
      parameter: options.parameter ?? 0.1,
      reviewer: options.reviewer,
    });
    this.state.selected = null;
    this.state.hydrate(session);
    this.hypnodensity = await this.api.getHypnodensity(recordingId);
    this.metrics = await this.api.getMetrics(session.session_id);
    this.hideBanner();
    this.renderAll();
    await this.loadSignal();
  }

  // stale state (another writer, restart): pull the session back from the
  // service and re-render from scratch
  async refreshSession(): Promise<void> {
    if (!this.state.sessionId) return;
    const session = await this.api.getSession(this.state.sessionId);
    this.state.hydrate(session);
    this.metrics = await this.api.getMetrics(session.session_id);
    this.renderAll();
  }

  async decide(stage: StageToken): Promise<void> {
    const epoch = this.state.selected;
    if (epoch === null || this.state.status !== "open") return;
    const snapshot = this.state.applyOptimistic(epoch, stage);
    if (!snapshot) return;
    this.renderTimelinePanel();
    this.renderDecisionPanel();
    try {
      const res = await this.api.postDecision(this.state.sessionId, epoch, stage);
      this.state.commit(epoch);
      this.metrics = res;
      this.hideBanner();
      const next = this.state.firstUndecided();
      if (next) this.state.selected = next.epoch;
      this.renderAll();
      if (next) await this.loadSignal();
    } catch (err) {
      this.state.rollback(epoch, snapshot);
      this.renderAll();
      this.handleApiError(err, () => this.decide(stage));
    }
  }

  async completeSession(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      const session = await this.api.completeSession(this.state.sessionId);
      this.state.hydrate(session);
      this.metrics = await this.api.getMetrics(session.session_id);
      this.renderAll();
    } catch (err) {
      this.handleApiError(err, () => this.completeSession());
    }
  }

  async exportSession(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      const payload = await this.api.getExport(this.state.sessionId);
      const panel = this.q<HTMLElement>("[data-panel=export]");
      panel.hidden = false;
      this.q<HTMLElement>("[data-role=export-body]").textContent =
        payload.hypnogram_csv;
    } catch (err) {
      this.handleApiError(err, () => this.exportSession());
    }
  }

  async selectEpoch(epoch: number): Promise<void> {
    if (!this.state.select(epoch)) return;
    this.renderTimelinePanel();
    this.renderDecisionPanel();
    await this.loadSignal();
  }

  toggleOrder(): void {
    const order = this.state.toggleOrder();
    this.q<HTMLElement>("[data-role=order-label]").textContent = order;
    this.renderDecisionPanel();
  }

  private recordingInfo(): RecordingInfo | undefined {
    return this.recordings.find((r) => r.recording_id === this.state.recordingId);
  }

  private async loadSignal(): Promise<void> {
    const epoch = this.state.selected;
    const info = this.recordingInfo();
    this.excerpt = null;
    if (epoch === null || !this.hypnodensity) {
      this.renderDecisionPanel();
      return;
    }
    if (info && !info.has_signals) {
      this.renderDecisionPanel();
      return;
    }
    const token = ++this.signalToken;
    const rid = this.state.recordingId;
    const last = this.hypnodensity.epoch_count - 1;
    try {
      const [prev, center, next] = await Promise.all([
        epoch > 0 ? this.api.getEpochSignal(rid, epoch - 1) : Promise.resolve(null),
        this.api.getEpochSignal(rid, epoch),
        epoch < last ? this.api.getEpochSignal(rid, epoch + 1) : Promise.resolve(null),
      ]);
      if (token !== this.signalToken) return; // selection moved on
      this.excerpt = { prev, center, next };
      this.renderDecisionPanel();
    } catch (err) {
      if (token !== this.signalToken) return;
      this.renderDecisionPanel();
      this.handleApiError(err, () => this.loadSignal());
    }
  }

  private handleApiError(err: unknown, retry: () => Promise<void>): void {
    if (!(err instanceof ApiError)) throw err;
    if (err.isConnectionLoss) {
      this.showBanner("connection lost; the service is unreachable", retry);
      return;
    }
    if (err.errorType === "SessionClosed" || err.errorType === "UnknownSession") {
      this.showBanner(`session state was stale (${err.detail}); refreshed`, null);
      this.run(() => this.refreshSession());
      return;
    }
    this.showBanner(err.message, null);
  }

  private showBanner(text: string, retry: (() => Promise<void>) | null): void {
    this.retryTask = retry;
    const banner = this.q<HTMLElement>("[data-role=banner]");
    banner.hidden = false;
    this.q<HTMLElement>("[data-role=banner-text]").textContent = text;
    this.q<HTMLButtonElement>("[data-action=retry]").hidden = retry === null;
  }

  private hideBanner(): void {
    this.retryTask = null;
    this.q<HTMLElement>("[data-role=banner]").hidden = true;
  }

  private q<T extends Element>(selector: string): T {
    const el = this.root.querySelector(selector);
    if (!el) throw new Error(`missing element ${selector}`);
    return el as T;
  }

  private onClick(ev: Event): void {
    const target = ev.target as Element | null;
    if (!target) return;
    const action = target.closest("[data-action]")?.getAttribute("data-action");
    if (action) {
      if (action === "open-session") {
        const select = this.q<HTMLSelectElement>("[data-role=recording-select]");
        if (select.value) this.run(() => this.openSession(select.value, this.sessionOptions));
      } else if (action === "toggle-order") {
        this.toggleOrder();
      } else if (action === "complete-session") {
        this.run(() => this.completeSession());
      } else if (action === "export-session") {
        this.run(() => this.exportSession());
      } else if (action === "retry") {
        const task = this.retryTask;
        this.hideBanner();
        if (task) this.run(task);
      } else if (action === "dismiss") {
        this.hideBanner();
      }
      return;
    }
    const stageBtn = target.closest("[data-stage]");
    if (stageBtn) {
      const tok = stageBtn.getAttribute("data-stage") as StageToken;
      this.run(() => this.decide(tok));
      return;
    }
    const epochEl = target.closest("[data-epoch]");
    if (epochEl) {
      const epoch = Number(epochEl.getAttribute("data-epoch"));
      if (this.state.isGray(epoch)) this.run(() => this.selectEpoch(epoch));
    }
  }

  private onKey(ev: KeyboardEvent): void {
    if (!this.state.sessionId) return;
    const key = ev.key;
    if (key === "j" || key === "ArrowRight") {
      const moved = this.state.selectNext(1);
      if (moved !== null) this.run(() => this.selectEpoch(moved));
    } else if (key === "k" || key === "ArrowLeft") {
      const moved = this.state.selectNext(-1);
      if (moved !== null) this.run(() => this.selectEpoch(moved));
    } else if (key === "o") {
      this.toggleOrder();
    } else if (key >= "1" && key <= "5") {
      const tok = STAGE_ORDER[Number(key) - 1];
      if (tok) this.run(() => this.decide(tok));
    }
  }

  private renderAll(): void {
    this.renderTimelinePanel();
    this.renderDecisionPanel();
    this.renderMetricsPanel();
  }

  private renderTimelinePanel(): void {
    const panel = this.q<HTMLElement>("[data-panel=timeline]");
    if (!this.hypnodensity) {
      panel.innerHTML = "";
      return;
    }
    const gray = new Set(this.state.visible().map((it) => it.epoch));
    panel.innerHTML =
      renderTimeline(this.hypnodensity, {
        gray,
        decided: this.state.decidedStages(),
        selected: this.state.selected,
      }) + renderLegend();
  }

  private renderDecisionPanel(): void {
    const panel = this.q<HTMLElement>("[data-panel=decision]");
    if (!this.state.sessionId) {
      panel.innerHTML = `<p class="hint">open a session to start reviewing</p>`;
      return;
    }
    if (this.state.empty) {
      panel.innerHTML =
        `<p class="empty-queue">no gray areas in this recording; ` +
        `nothing needs review. Export is available.</p>`;
      return;
    }
    const epoch = this.state.selected;
    const order = this.state.visible();
    const parts: string[] = [];
    if (epoch === null) {
      parts.push(`<p class="hint">click a gray epoch on the timeline</p>`);
    } else {
      const position = order.findIndex((it) => it.epoch === epoch) + 1;
      const item = this.state.item(epoch);
      parts.push(
        `<div class="decision-head">epoch <strong>${epoch}</strong> ` +
          `(${position} of ${order.length} in queue` +
          `${item && item.stage ? `, decided ${item.stage}` : ""})</div>`,
      );
      const info = this.recordingInfo();
      if (info && !info.has_signals) {
        parts.push(`<p class="no-signals">no signals stored for this recording</p>`);
      } else if (this.excerpt) {
        parts.push(renderSignalExcerpt(this.excerpt));
      } else {
        parts.push(`<p class="loading-signal">loading signal...</p>`);
      }
      const disabled = this.state.status !== "open" ? " disabled" : "";
      parts.push(
        `<div class="stage-buttons">` +
          STAGE_ORDER.map(
            (tok, i) =>
              `<button data-stage="${tok}" title="press ${i + 1}"${disabled}>${tok}</button>`,
          ).join("") +
          `</div>`,
      );
    }
    panel.innerHTML = parts.join("");
  }

  private renderMetricsPanel(): void {
    const panel = this.q<HTMLElement>("[data-panel=metrics]");
    panel.innerHTML = this.metrics ? renderMetrics(this.metrics) : "";
  }
}

export function createApp(root: HTMLElement, api: ReviewClient): App {
  return new App(root, api);
}

const autoRoot =
  typeof document !== "undefined" ? document.getElementById("app") : null;
if (autoRoot) {
  const app = createApp(autoRoot, new ReviewApi(""));
  void app.start();
}
