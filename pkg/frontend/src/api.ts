// Thin typed client over the engine's HTTP API. The transport is injectable
// so tests can intercept every request/response pair.

import type {
  FlowResponse,
  MetricsWire,
  OverlapWire,
  PlanReportWire,
  RuleFeedback,
  SceneWire,
  SubmissionWire,
  SubmitResponse,
} from "./types.js";

export interface TransportResponse {
  status: number;
  body: unknown;
}

export type Transport = (
  method: string,
  path: string,
  body?: unknown,
) => Promise<TransportResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`API ${status}: ${detail}`);
  }
}

export function fetchTransport(baseUrl: string): Transport {
  return async (method, path, body) => {
    const resp = await fetch(baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    let parsed: unknown = text;
    try {
      parsed = JSON.parse(text);
    } catch {
      // event-log endpoint returns JSON lines; leave it as text
    }
    return { status: resp.status, body: parsed };
  };
}

export class ApiClient {
  /** Every transport exchange, in order; the controller's traceability log
   *  references entries here by sequence number. */
  readonly exchanges: { seq: number; method: string; path: string; response: TransportResponse }[] = [];
  private seq = 0;

  constructor(private readonly transport: Transport) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<{ seq: number; data: T }> {
    const response = await this.transport(method, path, body);
    const seq = this.seq++;
    this.exchanges.push({ seq, method, path, response });
    if (response.status >= 400) {
      const detail =
        typeof response.body === "object" && response.body !== null && "detail" in response.body
          ? String((response.body as { detail: unknown }).detail)
          : String(response.body);
      throw new ApiError(response.status, detail);
    }
    return { seq, data: response.body as T };
  }

  async createSession(): Promise<string> {
    const { data } = await this.call<{ session_id: string }>("POST", "/sessions");
    return data.session_id;
  }

  getScene() {
    return this.call<SceneWire>("GET", "/scene");
  }

  validate(sessionId: string, submission: SubmissionWire) {
    return this.call<RuleFeedback>("POST", `/sessions/${sessionId}/validate`, { submission });
  }

  submit(sessionId: string, submission: SubmissionWire) {
    return this.call<SubmitResponse>("POST", `/sessions/${sessionId}/submit`, { submission });
  }

  confirm(sessionId: string) {
    return this.call<FlowResponse>("POST", `/sessions/${sessionId}/confirm`);
  }

  repeat(sessionId: string) {
    return this.call<FlowResponse>("POST", `/sessions/${sessionId}/repeat`);
  }

  report(sessionId: string) {
    return this.call<PlanReportWire>("GET", `/sessions/${sessionId}/report`);
  }

  overlap(sessionId: string) {
    return this.call<OverlapWire>("GET", `/sessions/${sessionId}/overlap`);
  }

  metrics(sessionId: string) {
    return this.call<MetricsWire>("GET", `/sessions/${sessionId}/metrics`);
  }
}
