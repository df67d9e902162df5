// Thin typed client over the review service HTTP API. Every method maps
// to exactly one endpoint; errors become ApiError with the service's
// {error, detail} body attached. A failed connection (fetch rejection)
// surfaces as ApiError with status 0 so the app can show a retry banner.

import type {
  CreateSessionRequest,
  DecisionResponse,
  ExportPayload,
  HypnodensityPayload,
  MetricsPayload,
  QueuePayload,
  RecordingListPayload,
  SessionPayload,
  SignalPayload,
  StageToken,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorType: string,
    readonly detail: string,
  ) {
    super(`${errorType}: ${detail}`);
    this.name = "ApiError";
  }

  get isConnectionLoss(): boolean {
    return this.status === 0;
  }
}

async function parseError(res: Response): Promise<never> {
  let errorType = "HttpError";
  let detail = `${res.status} ${res.statusText}`;
  try {
    const body = (await res.json()) as { error?: string; detail?: string };
    if (typeof body.error === "string") errorType = body.error;
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(res.status, errorType, detail);
}

// the surface the app wires against; tests substitute their own client
export interface ReviewClient {
  listRecordings(): Promise<RecordingListPayload>;
  getHypnodensity(recordingId: string): Promise<HypnodensityPayload>;
  getEpochSignal(recordingId: string, epoch: number): Promise<SignalPayload>;
  createSession(req: CreateSessionRequest): Promise<SessionPayload>;
  getSession(sessionId: string): Promise<SessionPayload>;
  getQueue(sessionId: string): Promise<QueuePayload>;
  postDecision(
    sessionId: string,
    epoch: number,
    stage: StageToken,
    note?: string,
  ): Promise<DecisionResponse>;
  getMetrics(sessionId: string): Promise<MetricsPayload>;
  completeSession(sessionId: string): Promise<SessionPayload>;
  getExport(sessionId: string): Promise<ExportPayload>;
}

export class ReviewApi implements ReviewClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, "ConnectionLost", String(err));
    }
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  listRecordings(): Promise<RecordingListPayload> {
    return this.request("/recordings");
  }

  getHypnodensity(recordingId: string): Promise<HypnodensityPayload> {
    return this.request(`/recordings/${encodeURIComponent(recordingId)}/hypnodensity`);
  }

  getEpochSignal(recordingId: string, epoch: number): Promise<SignalPayload> {
    return this.request(
      `/recordings/${encodeURIComponent(recordingId)}/epochs/${epoch}/signal`,
    );
  }

  createSession(req: CreateSessionRequest): Promise<SessionPayload> {
    return this.post("/sessions", req);
  }

  getSession(sessionId: string): Promise<SessionPayload> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  getQueue(sessionId: string): Promise<QueuePayload> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/queue`);
  }

  postDecision(
    sessionId: string,
    epoch: number,
    stage: StageToken,
    note = "",
  ): Promise<DecisionResponse> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/decisions`, {
      epoch,
      stage,
      note,
    });
  }

  getMetrics(sessionId: string): Promise<MetricsPayload> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/metrics`);
  }

  completeSession(sessionId: string): Promise<SessionPayload> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/complete`);
  }

  getExport(sessionId: string): Promise<ExportPayload> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/export`);
  }
}
