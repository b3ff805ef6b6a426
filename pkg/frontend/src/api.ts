/** Typed client for the bpmnkit HTTP service. */

export type Modality = "json" | "xml";

export interface SessionInfo {
  id: string;
  modality: Modality;
  model: string;
  has_process: boolean;
  read_only: boolean;
}

export interface ChatTurnResult {
  reply_text: string | null;
  bpmn_xml: string | null;
  intent: "conversational" | "create" | "edit";
  status_events: string[];
}

export interface UploadIssue {
  code: string;
  message: string;
  element_id: string | null;
}

export interface UploadResult {
  ok: boolean;
  editable: boolean;
  issues: UploadIssue[];
}

export interface ModelList {
  models: string[];
  default: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

/** One `event:`/`data:` record from a text/event-stream body. */
export interface SseEvent {
  event: string;
  data: string;
}

/** Parse a complete SSE payload into its event records. */
export function parseSse(payload: string): SseEvent[] {
  const events: SseEvent[] = [];
  for (const block of payload.split("\n\n")) {
    let event = "message";
    const data: string[] = [];
    for (const line of block.split("\n")) {
      if (line.startsWith("event: ")) event = line.slice(7).trim();
      else if (line.startsWith("data: ")) data.push(line.slice(6));
    }
    if (data.length > 0) events.push({ event, data: data.join("\n") });
  }
  return events;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) =>
      fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (typeof body?.detail === "string") detail = body.detail;
        else if (body?.detail) detail = JSON.stringify(body.detail);
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  createSession(modality: Modality, model = "mock"): Promise<SessionInfo> {
    return this.request<SessionInfo>("/api/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ modality, model }),
    });
  }

  chat(sessionId: string, message: string): Promise<ChatTurnResult> {
    return this.request<ChatTurnResult>(
      `/api/sessions/${encodeURIComponent(sessionId)}/chat`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ message }),
      },
    );
  }

  /** Streaming chat: invokes `onStatus` per server event, resolves with the
   *  final result record. */
  async chatStream(
    sessionId: string,
    message: string,
    onStatus: (event: string) => void,
  ): Promise<ChatTurnResult> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/sessions/${encodeURIComponent(sessionId)}/chat?stream=true`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ message }),
      },
    );
    if (!response.ok) {
      throw new ApiError(response.status, response.statusText);
    }
    const payload = await response.text();
    let result: ChatTurnResult | null = null;
    for (const record of parseSse(payload)) {
      if (record.event === "status") onStatus(JSON.parse(record.data));
      else if (record.event === "result") result = JSON.parse(record.data);
    }
    if (!result) throw new ApiError(502, "stream ended without a result");
    return result;
  }

  async upload(sessionId: string, file: Blob, name: string): Promise<UploadResult> {
    const form = new FormData();
    form.append("file", file, name);
    return this.request<UploadResult>(
      `/api/sessions/${encodeURIComponent(sessionId)}/upload`,
      { method: "POST", body: form },
    );
  }

  async download(sessionId: string): Promise<Uint8Array<ArrayBuffer>> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/sessions/${encodeURIComponent(sessionId)}/download`,
    );
    if (!response.ok) {
      throw new ApiError(response.status, response.statusText);
    }
    return new Uint8Array(await response.arrayBuffer());
  }

  models(): Promise<ModelList> {
    return this.request<ModelList>("/api/models");
  }

  selectModel(sessionId: string, model: string): Promise<SessionInfo> {
    return this.request<SessionInfo>(
      `/api/sessions/${encodeURIComponent(sessionId)}/model`,
      {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ model }),
      },
    );
  }
}
