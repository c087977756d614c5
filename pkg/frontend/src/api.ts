/** Typed client for the reqspec dialogue service HTTP+JSON API. */

export type SlotStatus = "filled" | "missing" | "ambiguous" | "defaulted";
export type SessionState = "collecting" | "confirming" | "done";

export interface SlotRow {
  key: string;
  text: string;
  status: SlotStatus;
}

export interface TranslationResult {
  slots: SlotRow[];
  queries: string[];
  formula: string | null;
  template: string | null;
}

export interface SessionPayload {
  id: string;
  state: SessionState;
  model_version: number;
  result: TranslationResult | null;
  outputs: string[];
}

export interface MessageReply {
  reply: string;
  state: SessionState;
  result: TranslationResult | null;
}

export interface HealthPayload {
  status: string;
  model_version: number;
}

export interface FlushPayload {
  accepted: number;
  rejected: number;
  model_version: number;
}

export interface ShieldLogEntry {
  phrase_sha256: string;
  malicious: boolean;
  literal_triggered: boolean;
  inferential_triggered: boolean;
  inferential_score: number;
  ts: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) =>
      globalThis.fetch(input, init),
  ) {}

  async createSession(): Promise<SessionPayload> {
    return this.request<SessionPayload>("POST", "/sessions");
  }

  async getSession(id: string): Promise<SessionPayload> {
    return this.request<SessionPayload>("GET", `/sessions/${id}`);
  }

  async sendMessage(id: string, text: string): Promise<MessageReply> {
    return this.request<MessageReply>("POST", `/sessions/${id}/message`, {
      body: { text },
    });
  }

  async health(): Promise<HealthPayload> {
    return this.request<HealthPayload>("GET", "/healthz");
  }

  async flushRetrain(adminToken: string): Promise<FlushPayload> {
    return this.request<FlushPayload>("POST", "/admin/flush-retrain", {
      adminToken,
    });
  }

  async shieldLog(
    adminToken: string,
    since = 0,
  ): Promise<{ entries: ShieldLogEntry[] }> {
    return this.request<{ entries: ShieldLogEntry[] }>(
      "GET",
      `/admin/shield-log?since=${encodeURIComponent(since)}`,
      { adminToken },
    );
  }

  private async request<T>(
    method: string,
    path: string,
    options: { body?: unknown; adminToken?: string } = {},
  ): Promise<T> {
    const headers: Record<string, string> = {};
    let body: string | undefined;
    if (options.body !== undefined) {
      headers["Content-Type"] = "application/json";
      body = JSON.stringify(options.body);
    }
    if (options.adminToken !== undefined) {
      headers["Authorization"] = `Bearer ${options.adminToken}`;
    }
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers,
        body,
      });
    } catch (err) {
      throw new ApiError(0, err instanceof Error ? err.message : String(err));
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: string };
        if (payload.detail) detail = payload.detail;
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }
}
