/**
 * Typed client for the dialog service HTTP API.
 *
 * Every mutating call carries an Idempotency-Key; retrying with the same key
 * replays the server's first result instead of applying the action twice.
 */

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

export class ServiceError extends Error {
  constructor(readonly status: number, readonly body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
    this.name = "ServiceError";
  }
}

export type AttributeValue = string | number;

export interface QuestionView {
  attribute: string;
  text: string;
}

export interface ResultView {
  label: string;
  probability: number;
}

export interface TurnRecord {
  kind: "turn";
  index: number;
  role: "system" | "user";
  turn: "question" | "answer" | "unknown" | "confirm";
  attribute?: string;
  text?: string;
  value?: AttributeValue;
  confidence?: number;
  volunteered?: Record<string, AttributeValue>;
  at: string;
}

export interface SessionState {
  session_id: string;
  tree_version: number;
  mode: string;
  status: "active" | "classified";
  novel: boolean;
  question: QuestionView | null;
  result: ResultView | null;
  questions: number;
  transcript: TurnRecord[];
  frontier: [number, number][];
}

export interface SessionSummary {
  session_id: string;
  tree_version: number;
  mode: string;
  status: string;
  result: ResultView | null;
  novel: boolean;
  questions: number;
}

export interface SessionListing {
  tree_version: number | null;
  sessions: SessionSummary[];
}

export interface TreeNodeDoc {
  counts: Record<string, number>;
  total: number;
  leaf?: string;
  attribute?: string;
  threshold?: number | null;
  children?: Record<string, number>;
  edge_support?: Record<string, number>;
}

export interface TreeDocument {
  format: string;
  version: number;
  classes: string[];
  root: number;
  nodes: Record<string, TreeNodeDoc>;
  digest: string;
}

export interface Stats {
  tree_version: number | null;
  sessions_classified: number;
  per_version_turn_means: Record<string, number>;
  verified_accuracy: number | null;
  satisfaction_mean: number | null;
  novel_sessions: number;
}

export interface VerificationView {
  session_id: string;
  operator_id: string;
  original_label: string;
  corrected_label: string;
  applied_in_version: number | null;
  created_at: string;
  tree_version: number | null;
}

export interface RetrainOutcome {
  tree_version: number;
  applied_verifications: number;
}

export interface AnswerPayload {
  attribute: string;
  value?: AttributeValue;
  unknown?: boolean;
  confidence?: number;
  volunteered?: Record<string, AttributeValue>;
}

export function newIdempotencyKey(): string {
  const cryptoObj = globalThis.crypto;
  if (cryptoObj && "randomUUID" in cryptoObj) {
    return cryptoObj.randomUUID();
  }
  return `key-${Date.now()}-${Math.floor(Math.random() * 1e9)}`;
}

/** Retry `fn` on network failures only; service errors pass straight through. */
export async function withRetry<T>(fn: () => Promise<T>, attempts = 3): Promise<T> {
  let lastError: unknown;
  for (let i = 0; i < attempts; i++) {
    try {
      return await fn();
    } catch (error) {
      if (error instanceof ServiceError) {
        throw error;
      }
      lastError = error;
    }
  }
  throw lastError;
}

export class ConsoleApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    idempotencyKey?: string,
  ): Promise<T> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (idempotencyKey) {
      headers["Idempotency-Key"] = idempotencyKey;
    }
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const data = await response.json();
    if (!response.ok) {
      throw new ServiceError(response.status, data as ApiErrorBody);
    }
    return data as T;
  }

  createSession(mode: string, key = newIdempotencyKey()): Promise<SessionState> {
    return this.request("POST", "/sessions", { mode }, key);
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  listSessions(filter: { status?: string; novel?: boolean; version?: number } = {}): Promise<SessionListing> {
    const params = new URLSearchParams();
    if (filter.status !== undefined) params.set("status", filter.status);
    if (filter.novel !== undefined) params.set("novel", String(filter.novel));
    if (filter.version !== undefined) params.set("version", String(filter.version));
    const query = params.toString();
    return this.request("GET", `/sessions${query ? "?" + query : ""}`);
  }

  answer(sessionId: string, payload: AnswerPayload, key: string): Promise<SessionState> {
    return this.request("POST", `/sessions/${sessionId}/answer`, payload, key);
  }

  verify(
    sessionId: string,
    correctedLabel: string,
    operatorId: string,
    key = newIdempotencyKey(),
  ): Promise<VerificationView> {
    return this.request(
      "POST",
      `/sessions/${sessionId}/verify`,
      { corrected_label: correctedLabel, operator_id: operatorId },
      key,
    );
  }

  retrain(key = newIdempotencyKey()): Promise<RetrainOutcome> {
    return this.request("POST", "/admin/retrain", {}, key);
  }

  getTree(version?: number): Promise<TreeDocument> {
    return this.request("GET", version === undefined ? "/tree" : `/tree?version=${version}`);
  }

  getStats(): Promise<Stats> {
    return this.request("GET", "/stats");
  }

  submitSatisfaction(sessionId: string, score: number, key = newIdempotencyKey()): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/satisfaction`, { score }, key);
  }
}
