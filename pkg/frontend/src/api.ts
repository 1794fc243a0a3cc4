/**
 * Typed client for the annotation service HTTP API.
 *
 * The fetch function is injectable for tests. Idempotent GETs retry once on
 * network failure; submissions never auto-retry (the server deduplicates by
 * annotator, but a failed POST is surfaced to the user instead).
 */

import {
  AnnotationTask,
  ApiError,
  Progress,
  SubmissionPayload,
  TaskKind,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(public readonly code: string, message: string,
              public readonly status: number) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiRequestError> {
  let body: ApiError | undefined;
  try {
    body = (await response.json()) as ApiError;
  } catch {
    body = undefined;
  }
  return new ApiRequestError(body?.code ?? "http-error",
                             body?.message ?? `HTTP ${response.status}`,
                             response.status);
}

export class AnnotationClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    let lastError: unknown;
    for (let attempt = 0; attempt < 2; attempt += 1) {
      try {
        const response = await this.fetchFn(`${this.baseUrl}${path}`);
        if (!response.ok) throw await parseError(response);
        return (await response.json()) as T;
      } catch (error) {
        if (error instanceof ApiRequestError) throw error;
        lastError = error; // network hiccup: one retry for idempotent GETs
      }
    }
    throw lastError;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  async register(annotatorId: string): Promise<string> {
    const data = await this.postJson<{ token: string }>("/api/annotators", {
      annotator_id: annotatorId,
    });
    return data.token;
  }

  async nextTask(annotatorId: string, kind?: TaskKind): Promise<AnnotationTask | null> {
    const query = new URLSearchParams({ annotator: annotatorId });
    if (kind) query.set("kind", kind);
    const data = await this.getJson<{ task: AnnotationTask | null }>(
      `/api/tasks/next?${query.toString()}`);
    return data.task;
  }

  async submit(taskId: string, annotatorId: string,
               payload: SubmissionPayload): Promise<void> {
    await this.postJson<{ accepted: boolean }>("/api/annotations", {
      task_id: taskId,
      annotator_id: annotatorId,
      payload,
    });
  }

  async progress(): Promise<Progress> {
    return this.getJson<Progress>("/api/progress");
  }

  async agreement(kind: TaskKind): Promise<unknown> {
    return this.getJson(`/api/agreement?kind=${encodeURIComponent(kind)}`);
  }
}
