// Payload shapes of the review service, plus the canonical stage order
// and colors shared with the server-side SVG emitter. The client never
// computes probabilities, uncertainty values, or metrics; everything in
// these types arrives ready to display.

export type StageToken = "W" | "N1" | "N2" | "N3" | "R";

export const STAGE_ORDER: readonly StageToken[] = ["W", "N1", "N2", "N3", "R"];

export const STAGE_FILLS: Readonly<Record<StageToken, string>> = {
  W: "#f2c14e",
  N1: "#9ecae1",
  N2: "#4292c6",
  N3: "#08519c",
  R: "#c94f7c",
};

export const GRAY_FILL = "#555555";
export const GRAY_OPACITY = 0.45;

export interface RecordingInfo {
  recording_id: string;
  epoch_count: number;
  has_reference: boolean;
  has_signals: boolean;
}

export interface RecordingListPayload {
  schema_version: number;
  recordings: RecordingInfo[];
}

export interface HypnodensityPayload {
  schema_version: number;
  recording_id: string;
  epoch_count: number;
  stage_order: StageToken[];
  probs: number[][];
}

export interface SignalChannel {
  label: string;
  samples: number[];
}

export interface SignalPayload {
  schema_version: number;
  recording_id: string;
  epoch: number;
  epoch_count: number;
  fs: number;
  channels: SignalChannel[];
}

export interface QueueEntry {
  epoch: number;
  value: number;
}

export interface QueueEntryWithStatus extends QueueEntry {
  decided: boolean;
}

export interface DecisionRecord {
  stage: StageToken;
  ts: number;
  note: string;
}

export interface SessionPayload {
  schema_version: number;
  session_id: string;
  recording_id: string;
  reviewer: string;
  metric: string;
  mode: string;
  parameter: number;
  status: "open" | "complete";
  queue: QueueEntry[];
  decisions: Record<string, DecisionRecord>;
}

export interface QueuePayload {
  schema_version: number;
  session_id: string;
  queue: QueueEntryWithStatus[];
}

export interface PerClassMetrics {
  stage: StageToken;
  precision: number;
  recall: number;
  f1: number;
  support: number;
  zero_denominator: boolean;
}

export interface AgreementDoc {
  accuracy: number;
  cohen_kappa: number;
  per_class: PerClassMetrics[];
  macro_precision: number;
  macro_recall: number;
  macro_f1: number;
  weighted_f1: number;
  n_epochs: number;
}

export interface MetricsPayload {
  schema_version: number;
  session_id: string;
  decisions: number;
  queue_length: number;
  status: "open" | "complete";
  baseline: AgreementDoc | null;
  current: AgreementDoc | null;
  epochs_retained: number | null;
}

export interface DecisionResponse extends MetricsPayload {
  before: AgreementDoc | null;
  after: AgreementDoc | null;
}

export interface ExportPayload {
  schema_version: number;
  session_id: string;
  recording_id: string;
  hypnogram_csv: string;
  events: Record<string, unknown>[];
}

export interface CreateSessionRequest {
  recording_id: string;
  metric?: string;
  mode?: string;
  parameter: number;
  reviewer?: string;
}
