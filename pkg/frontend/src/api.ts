/** Typed client for the extraction API: the single boundary the tests mock. */

import { LlmieDocument } from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

export interface ExtractRequest {
  text: string;
  template: string;
  extractor: string;
  config?: Record<string, unknown>;
}

async function errorFrom(response: Response): Promise<ApiRequestError> {
  let code = "error";
  let message = `request failed with ${response.status}`;
  try {
    const body = await response.json();
    if (body && typeof body === "object") {
      code = String(body.code ?? code);
      message = String(body.message ?? message);
    }
  } catch {
    /* non-JSON error body; keep defaults */
  }
  return new ApiRequestError(response.status, code, message);
}

export class ApiClient {
  constructor(private base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as T;
  }

  listDocs(): Promise<string[]> {
    return this.get<string[]>("/api/docs");
  }

  getDoc(docId: string): Promise<LlmieDocument> {
    return this.get<LlmieDocument>(`/api/docs/${encodeURIComponent(docId)}`);
  }

  extract(request: ExtractRequest): Promise<LlmieDocument> {
    return this.post<LlmieDocument>("/api/extract", request);
  }

  async createEditorSession(extractorKind: string): Promise<string> {
    const body = await this.post<{ session_id: string }>(
      "/api/editor/session", { extractor_kind: extractorKind });
    return body.session_id;
  }

  async editorChat(sessionId: string, text: string): Promise<string> {
    const body = await this.post<{ reply: string }>(
      `/api/editor/${encodeURIComponent(sessionId)}/chat`, { text });
    return body.reply;
  }
}
