// REST client for the metaglyph service with optimistic revision tokens.

import type {
  ApiError,
  GenerateResponse,
  MappingTargetJson,
  SessionSummary,
} from "./types.js";

export class ServiceError extends Error {
  code: string;
  status: number;
  detail: unknown;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.code = body.code;
    this.status = status;
    this.detail = body.detail;
  }
}

export interface PinEdit {
  dimension: string;
  target?: MappingTargetJson;
  unpin?: boolean;
}

type FetchLike = typeof fetch;

export class StudioClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let body: ApiError;
      try {
        body = (await response.json()) as ApiError;
      } catch {
        body = { code: "transport", message: response.statusText, detail: null };
      }
      throw new ServiceError(response.status, body);
    }
    return (await response.json()) as T;
  }

  async createSession(file: File | Blob, filename: string): Promise<SessionSummary> {
    const form = new FormData();
    form.append("file", file, filename);
    return this.request<SessionSummary>("/sessions", { method: "POST", body: form });
  }

  async getSession(sessionId: string): Promise<SessionSummary> {
    return this.request<SessionSummary>(`/sessions/${sessionId}`);
  }

  async generate(sessionId: string, revision: number,
                 opts: { shuffle?: boolean; candidates?: number } = {}): Promise<GenerateResponse> {
    return this.request<GenerateResponse>(`/sessions/${sessionId}/generate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, ...opts }),
    });
  }

  async getResults(sessionId: string): Promise<GenerateResponse> {
    return this.request<GenerateResponse>(`/sessions/${sessionId}/results`);
  }

  async patchMappings(sessionId: string, revision: number,
                      edits: PinEdit[]): Promise<GenerateResponse> {
    return this.request<GenerateResponse>(`/sessions/${sessionId}/mappings`, {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, edits }),
    });
  }

  async setGroups(sessionId: string, revision: number,
                  groups: { name: string; members: string[] }[]): Promise<SessionSummary> {
    return this.request<SessionSummary>(`/sessions/${sessionId}/groups`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, groups }),
    });
  }

  exportUrl(sessionId: string, resultId: string, format: "svg" | "bundle"): string {
    return `${this.baseUrl}/sessions/${sessionId}/results/${resultId}/export?format=${format}`;
  }

  async fetchExport(sessionId: string, resultId: string,
                    format: "svg" | "bundle"): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(this.exportUrl(sessionId, resultId, format));
    if (!response.ok) {
      throw new ServiceError(response.status, {
        code: "transport", message: response.statusText, detail: null,
      });
    }
    return response.arrayBuffer();
  }
}

/** Extract the mapping metadata island from a rendered scene SVG. */
export function decodeSceneMetadata(svg: string): import("./types.js").SceneMetadata {
  const match = svg.match(/<metadata id="mgv-mapping">([\s\S]*?)<\/metadata>/);
  if (!match) throw new Error("no mapping metadata in SVG");
  const unescaped = match[1]
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"')
    .replace(/&apos;/g, "'")
    .replace(/&amp;/g, "&");
  return JSON.parse(unescaped);
}
