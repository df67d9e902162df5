// Client-side session state: the gray queue in its two display orders,
// the current selection, and optimistic decision bookkeeping. The queue
// arrives most-uncertain-first from the service and that order is kept
// verbatim; the chronological view is a plain re-sort by epoch index,
// not a recomputation of anything scientific.

import type { SessionPayload, StageToken } from "./types.js";

export type NavOrder = "uncertainty" | "chronological";

export interface QueueItem {
  epoch: number;
  value: number;
  stage: StageToken | null;
  pending: boolean;
}

interface Snapshot {
  stage: StageToken | null;
  pending: boolean;
}

export class SessionState {
  sessionId = "";
  recordingId = "";
  status: "open" | "complete" = "open";
  order: NavOrder = "uncertainty";
  selected: number | null = null;

  private items: QueueItem[] = [];
  private byEpoch = new Map<number, QueueItem>();

  hydrate(session: SessionPayload): void {
    this.sessionId = session.session_id;
    this.recordingId = session.recording_id;
    this.status = session.status;
    this.items = session.queue.map((q) => {
      const decision = session.decisions[String(q.epoch)];
      return {
        epoch: q.epoch,
        value: q.value,
        stage: decision ? decision.stage : null,
        pending: false,
      };
    });
    this.byEpoch = new Map(this.items.map((it) => [it.epoch, it]));
    if (this.selected !== null && !this.byEpoch.has(this.selected)) {
      this.selected = null;
    }
    if (this.selected === null) {
      const first = this.firstUndecided();
      this.selected = first ? first.epoch : null;
    }
  }

  get empty(): boolean {
    return this.items.length === 0;
  }

  item(epoch: number): QueueItem | undefined {
    return this.byEpoch.get(epoch);
  }

  isGray(epoch: number): boolean {
    return this.byEpoch.has(epoch);
  }

  // queue in the current display order; "uncertainty" preserves the
  // service's most-uncertain-first ranking
  visible(): QueueItem[] {
    if (this.order === "uncertainty") return [...this.items];
    return [...this.items].sort((a, b) => a.epoch - b.epoch);
  }

  toggleOrder(): NavOrder {
    this.order = this.order === "uncertainty" ? "chronological" : "uncertainty";
    return this.order;
  }

  firstUndecided(): QueueItem | undefined {
    return this.visible().find((it) => it.stage === null);
  }

  select(epoch: number): boolean {
    if (!this.byEpoch.has(epoch)) return false;
    this.selected = epoch;
    return true;
  }

  // advance within the current order; clamps at the ends
  selectNext(step: 1 | -1 = 1): number | null {
    const order = this.visible();
    if (order.length === 0) return null;
    if (this.selected === null) {
      this.selected = order[0]!.epoch;
      return this.selected;
    }
    const at = order.findIndex((it) => it.epoch === this.selected);
    const next = Math.min(Math.max(at + step, 0), order.length - 1);
    this.selected = order[next]!.epoch;
    return this.selected;
  }

  decidedCount(): number {
    return this.items.filter((it) => it.stage !== null).length;
  }

  progress(): { done: number; total: number } {
    return { done: this.decidedCount(), total: this.items.length };
  }

  decidedStages(): Map<number, StageToken> {
    const m = new Map<number, StageToken>();
    for (const it of this.items) {
      if (it.stage !== null) m.set(it.epoch, it.stage);
    }
    return m;
  }

  // optimistic decision: mark immediately, return the snapshot needed to
  // roll back if the service rejects it
  applyOptimistic(epoch: number, stage: StageToken): Snapshot | null {
    const it = this.byEpoch.get(epoch);
    if (!it) return null;
    const snapshot: Snapshot = { stage: it.stage, pending: it.pending };
    it.stage = stage;
    it.pending = true;
    return snapshot;
  }

  commit(epoch: number): void {
    const it = this.byEpoch.get(epoch);
    if (it) it.pending = false;
  }

  rollback(epoch: number, snapshot: Snapshot): void {
    const it = this.byEpoch.get(epoch);
    if (!it) return;
    it.stage = snapshot.stage;
    it.pending = snapshot.pending;
  }
}
