// Thin typed client for the diagnosis service. One method per endpoint,
// one HTTP round trip per method. The request log exists so tests can
// assert the call pattern (no hidden traffic behind a user gesture).

import { BACKEND_BASE_URL } from "./config.js";

export interface SensorView {
  id: string;
  label: string;
  group: string;
  color_key: string;
}

export interface ActionView {
  id: string;
  label: string;
  group: string;
}

export interface SessionCreated {
  session_id: string;
  symptom_message: string;
  sensors: SensorView[];
  actions: ActionView[];
}

export interface RevealResult {
  value: number;
  unit: string;
}

export interface ActionResult {
  resolved: boolean;
}

export interface Suggestion {
  kind: string;
  entity_id: string;
  score: number;
}

export interface SuggestResult {
  suggestions: Suggestion[];
  model_loaded: boolean;
}

export interface TaxonomyNode {
  id: string;
  label: string;
  level: number;
  parent_id: string | null;
  kind: "category" | "sensor-leaf" | "actuator-leaf";
}

export interface StepRecord {
  type: string;
  [key: string]: unknown;
}

export interface FinishedLog {
  session_id: string;
  fault_id: string;
  steps: StepRecord[];
  resolved: boolean;
  operator: string;
  seed: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  readonly requestLog: string[] = [];
  private readonly fetchImpl: FetchLike;

  constructor(readonly base: string = BACKEND_BASE_URL, fetchImpl?: FetchLike) {
    // wrap the global so the call site keeps a valid receiver
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.requestLog.push(`${method} ${path}`);
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      let detail = `${resp.status} ${resp.statusText}`;
      try {
        const payload = (await resp.json()) as { detail?: string };
        if (payload.detail) detail = payload.detail;
      } catch {
        // non-JSON error body, keep the status line
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  taxonomy(): Promise<{ nodes: TaxonomyNode[] }> {
    return this.call("GET", "/api/config/taxonomy");
  }

  createSession(faultId?: string, seed?: number): Promise<SessionCreated> {
    const body: Record<string, unknown> = {};
    if (faultId !== undefined) body.fault_id = faultId;
    if (seed !== undefined) body.seed = seed;
    return this.call("POST", "/api/session", body);
  }

  reveal(sessionId: string, sensorId: string): Promise<RevealResult> {
    return this.call("POST", `/api/session/${sessionId}/reveal`, { sensor_id: sensorId });
  }

  action(sessionId: string, actionId: string): Promise<ActionResult> {
    return this.call("POST", `/api/session/${sessionId}/action`, { action_id: actionId });
  }

  suggest(sessionId: string): Promise<SuggestResult> {
    return this.call("GET", `/api/session/${sessionId}/suggest`);
  }

  finish(sessionId: string): Promise<FinishedLog> {
    return this.call("POST", `/api/session/${sessionId}/finish`);
  }
}
