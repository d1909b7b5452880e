// ── Typed client for the /v1 routing service ────────────────────────
// Thin fetch wrapper; the UI never mutates route state locally, so every
// state change round-trips through one of these calls.

import type { AskResponse, InstanceDict, SessionDoc } from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(`service replied ${status}: ${JSON.stringify(detail)}`);
  }
}

export interface StructuredQuestion {
  /** 1-based step of the questioned edge */
  tEx: number;
  /** node the user wishes the edge had gone to instead */
  cfTargetNode: number;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
    private readonly fetchImpl: FetchLike = (...a) => globalThis.fetch(...a),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'content-type': 'application/json' };
    if (this.token) headers['authorization'] = `Bearer ${this.token}`;
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await res.json().catch(() => null);
    if (!res.ok) throw new ApiError(res.status, payload?.detail ?? payload);
    return payload as T;
  }

  createSession(instance: InstanceDict): Promise<SessionDoc> {
    return this.request('POST', '/v1/sessions', { instance });
  }

  getSession(id: string): Promise<SessionDoc> {
    return this.request('GET', `/v1/sessions/${id}`);
  }

  listSessions(): Promise<{ sessions: string[] }> {
    return this.request('GET', '/v1/sessions');
  }

  /** Structured why-not question: works with no LLM configured. */
  askStructured(id: string, q: StructuredQuestion): Promise<AskResponse> {
    return this.request('POST', `/v1/sessions/${id}/questions`, {
      t_ex: q.tEx,
      cf_target_node: q.cfTargetNode,
    });
  }

  /** Free-text question: requires the service to have an LLM endpoint. */
  askText(id: string, question: string): Promise<AskResponse> {
    return this.request('POST', `/v1/sessions/${id}/questions`, { question });
  }

  decide(id: string, bundleId: string, decision: 'keep' | 'replace'): Promise<SessionDoc> {
    return this.request('POST', `/v1/sessions/${id}/decisions`, {
      bundle_id: bundleId,
      decision,
    });
  }
}
