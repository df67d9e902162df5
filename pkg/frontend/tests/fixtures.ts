// Shared payload builders and an in-memory fake of the review service
// client. The fake mirrors the service contract closely enough for the
// app wiring tests: queue order is most-uncertain-first as served,
// decisions accumulate, and metric values are returned verbatim.

import { ApiError, type ReviewClient } from "../src/api.js";
import type {
  AgreementDoc,
  CreateSessionRequest,
  DecisionRecord,
  DecisionResponse,
  ExportPayload,
  HypnodensityPayload,
  MetricsPayload,
  QueuePayload,
  RecordingListPayload,
  SessionPayload,
  SignalPayload,
  StageToken,
} from "../src/types.js";

export const SCHEMA_VERSION = 1;

export function confidentRow(stage: number): number[] {
  const row = [0.0075, 0.0075, 0.0075, 0.0075, 0.0075];
  row[stage] = 0.97;
  return row;
}

export const GRAY_ROW = [0.4, 0.3, 0.3, 0.0, 0.0];

export function makeHypnodensity(
  epochCount: number,
  grayEpochs: number[],
  rid = "rec",
): HypnodensityPayload {
  const gray = new Set(grayEpochs);
  const probs: number[][] = [];
  for (let e = 0; e < epochCount; e++) {
    probs.push(gray.has(e) ? [...GRAY_ROW] : confidentRow(e % 5));
  }
  return {
    schema_version: SCHEMA_VERSION,
    recording_id: rid,
    epoch_count: epochCount,
    stage_order: ["W", "N1", "N2", "N3", "R"],
    probs,
  };
}

export function agreementDoc(accuracy: number, nEpochs: number): AgreementDoc {
  return {
    accuracy,
    cohen_kappa: accuracy - 0.1,
    per_class: [],
    macro_precision: accuracy,
    macro_recall: accuracy,
    macro_f1: accuracy,
    weighted_f1: accuracy,
    n_epochs: nEpochs,
  };
}

export function metricsPayload(
  sessionId: string,
  decisions: number,
  queueLength: number,
  overrides: Partial<MetricsPayload> = {},
): MetricsPayload {
  return {
    schema_version: SCHEMA_VERSION,
    session_id: sessionId,
    decisions,
    queue_length: queueLength,
    status: "open",
    baseline: agreementDoc(0.8, 20),
    current: agreementDoc(0.8, 20),
    epochs_retained: 20,
    ...overrides,
  };
}

export interface FakeApiOptions {
  epochCount?: number;
  grayEpochs?: number[]; // most-uncertain-first, as the service would rank
  hasSignals?: boolean;
  hasReference?: boolean;
  samplesPerEpoch?: number;
}

export class FakeApi implements ReviewClient {
  readonly calls: string[] = [];
  readonly epochCount: number;
  readonly grayEpochs: number[];
  readonly hasSignals: boolean;
  readonly hasReference: boolean;
  readonly samplesPerEpoch: number;

  session: SessionPayload | null = null;
  decisions: Record<string, DecisionRecord> = {};
  // when set, the next mutating call throws this once
  failNext: ApiError | null = null;
  // accuracy values returned after each decision, consumed in order;
  // odd floats on purpose so verbatim display is distinguishable
  accuracySteps: number[] = [0.8500000000000001, 0.9000000000000002];

  constructor(opts: FakeApiOptions = {}) {
    this.epochCount = opts.epochCount ?? 20;
    this.grayEpochs = opts.grayEpochs ?? [11, 3, 15];
    this.hasSignals = opts.hasSignals ?? true;
    this.hasReference = opts.hasReference ?? true;
    this.samplesPerEpoch = opts.samplesPerEpoch ?? 64;
  }

  private takeFailure(): void {
    if (this.failNext) {
      const err = this.failNext;
      this.failNext = null;
      throw err;
    }
  }

  private decisionCount(): number {
    return Object.keys(this.decisions).length;
  }

  private metricsNow(): MetricsPayload {
    const n = this.decisionCount();
    const accuracy = n === 0 ? 0.8 : (this.accuracySteps[n - 1] ?? 0.95);
    return metricsPayload("sess-1", n, this.grayEpochs.length, {
      status: this.session?.status ?? "open",
      baseline: this.hasReference ? agreementDoc(0.8, this.epochCount) : null,
      current: this.hasReference ? agreementDoc(accuracy, this.epochCount) : null,
      epochs_retained: this.hasReference ? this.epochCount : null,
    });
  }

  async listRecordings(): Promise<RecordingListPayload> {
    this.calls.push("listRecordings");
    return {
      schema_version: SCHEMA_VERSION,
      recordings: [
        {
          recording_id: "rec",
          epoch_count: this.epochCount,
          has_reference: this.hasReference,
          has_signals: this.hasSignals,
        },
      ],
    };
  }

  async getHypnodensity(recordingId: string): Promise<HypnodensityPayload> {
    this.calls.push(`getHypnodensity ${recordingId}`);
    return makeHypnodensity(this.epochCount, this.grayEpochs, recordingId);
  }

  async getEpochSignal(recordingId: string, epoch: number): Promise<SignalPayload> {
    this.calls.push(`getEpochSignal ${epoch}`);
    const samples = Array.from(
      { length: this.samplesPerEpoch },
      (_, i) => Math.sin((2 * Math.PI * (epoch + i)) / 16) * 40,
    );
    return {
      schema_version: SCHEMA_VERSION,
      recording_id: recordingId,
      epoch,
      epoch_count: this.epochCount,
      fs: 64,
      channels: [
        { label: "EEG F3", samples },
        { label: "EEG C4", samples: samples.map((v) => v * 0.5) },
      ],
    };
  }

  async createSession(req: CreateSessionRequest): Promise<SessionPayload> {
    this.calls.push(`createSession ${req.recording_id}`);
    this.decisions = {};
    this.session = {
      schema_version: SCHEMA_VERSION,
      session_id: "sess-1",
      recording_id: req.recording_id,
      reviewer: req.reviewer ?? "",
      metric: req.metric ?? "uu",
      mode: req.mode ?? "rank_pct",
      parameter: req.parameter,
      status: "open",
      queue: this.grayEpochs.map((epoch, i) => ({
        epoch,
        value: 0.9 - i * 0.05,
      })),
      decisions: {},
    };
    return this.session;
  }

  async getSession(sessionId: string): Promise<SessionPayload> {
    this.calls.push(`getSession ${sessionId}`);
    if (!this.session) throw new ApiError(404, "UnknownSession", "no session");
    return { ...this.session, decisions: { ...this.decisions } };
  }

  async getQueue(sessionId: string): Promise<QueuePayload> {
    this.calls.push(`getQueue ${sessionId}`);
    if (!this.session) throw new ApiError(404, "UnknownSession", "no session");
    return {
      schema_version: SCHEMA_VERSION,
      session_id: sessionId,
      queue: this.session.queue.map((q) => ({
        ...q,
        decided: String(q.epoch) in this.decisions,
      })),
    };
  }

  async postDecision(
    sessionId: string,
    epoch: number,
    stage: StageToken,
    note = "",
  ): Promise<DecisionResponse> {
    this.calls.push(`postDecision ${epoch} ${stage}`);
    this.takeFailure();
    if (!this.session) throw new ApiError(404, "UnknownSession", "no session");
    const before = this.metricsNow().current;
    this.decisions[String(epoch)] = { stage, ts: 1000 + this.decisionCount(), note };
    const after = this.metricsNow();
    return { ...after, before, after: after.current };
  }

  async getMetrics(sessionId: string): Promise<MetricsPayload> {
    this.calls.push(`getMetrics ${sessionId}`);
    return this.metricsNow();
  }

  async completeSession(sessionId: string): Promise<SessionPayload> {
    this.calls.push(`completeSession ${sessionId}`);
    this.takeFailure();
    if (!this.session) throw new ApiError(404, "UnknownSession", "no session");
    this.session = { ...this.session, status: "complete" };
    return { ...this.session, decisions: { ...this.decisions } };
  }

  async getExport(sessionId: string): Promise<ExportPayload> {
    this.calls.push(`getExport ${sessionId}`);
    this.takeFailure();
    if (!this.session) throw new ApiError(404, "UnknownSession", "no session");
    return {
      schema_version: SCHEMA_VERSION,
      session_id: sessionId,
      recording_id: this.session.recording_id,
      hypnogram_csv: "epoch,stage,uncertain\n0,W,0\n",
      events: [],
    };
  }
}

export function sessionPayload(
  queueEpochs: number[],
  decisions: Record<string, DecisionRecord> = {},
  status: "open" | "complete" = "open",
): SessionPayload {
  return {
    schema_version: SCHEMA_VERSION,
    session_id: "sess-1",
    recording_id: "rec",
    reviewer: "",
    metric: "uu",
    mode: "rank_pct",
    parameter: 0.1,
    status,
    queue: queueEpochs.map((epoch, i) => ({ epoch, value: 0.9 - i * 0.05 })),
    decisions,
  };
}
