/** UI-agnostic session state machine for the dual-panel app.
 *
 * Invariants:
 *  - at most one chat request is in flight per controller;
 *  - the canvas only ever shows the last successfully rendered document, so
 *    a failed turn never blanks or corrupts the diagram.
 */
import { ApiClient, ChatTurnResult, Modality, SessionInfo } from "./api.js";

export interface TranscriptEntry {
  role: "user" | "assistant" | "status" | "error";
  text: string;
}

export interface ControllerEvents {
  onTranscript(entry: TranscriptEntry): void;
  onDiagram(xml: string): void;
  onBusy(busy: boolean): void;
  onSession(info: SessionInfo): void;
}

export class BusyError extends Error {
  constructor() {
    super("a request is already in flight");
    this.name = "BusyError";
  }
}

export class AppController {
  private sessionId: string | null = null;
  private busy = false;
  private lastXml: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly events: ControllerEvents,
  ) {}

  get currentXml(): string | null {
    return this.lastXml;
  }

  get inFlight(): boolean {
    return this.busy;
  }

  async start(modality: Modality, model = "mock"): Promise<void> {
    const info = await this.api.createSession(modality, model);
    this.sessionId = info.id;
    this.lastXml = null;
    this.events.onSession(info);
  }

  private requireSession(): string {
    if (!this.sessionId) throw new Error("no active session");
    return this.sessionId;
  }

  private async guarded<T>(work: () => Promise<T>): Promise<T> {
    if (this.busy) throw new BusyError();
    this.busy = true;
    this.events.onBusy(true);
    try {
      return await work();
    } finally {
      this.busy = false;
      this.events.onBusy(false);
    }
  }

  async send(message: string): Promise<ChatTurnResult> {
    const sessionId = this.requireSession();
    return this.guarded(async () => {
      this.events.onTranscript({ role: "user", text: message });
      try {
        const result = await this.api.chatStream(sessionId, message, (event) =>
          this.events.onTranscript({ role: "status", text: event }),
        );
        if (result.reply_text) {
          this.events.onTranscript({
            role: "assistant",
            text: result.reply_text,
          });
        }
        if (result.bpmn_xml) {
          this.lastXml = result.bpmn_xml;
          this.events.onDiagram(result.bpmn_xml);
        }
        return result;
      } catch (error) {
        this.events.onTranscript({
          role: "error",
          text: error instanceof Error ? error.message : String(error),
        });
        throw error;
      }
    });
  }

  async upload(file: Blob, name: string): Promise<void> {
    const sessionId = this.requireSession();
    await this.guarded(async () => {
      const result = await this.api.upload(sessionId, file, name);
      if (!result.ok) {
        const summary = result.issues.map((i) => i.message).join("; ");
        this.events.onTranscript({
          role: "error",
          text: `upload rejected: ${summary}`,
        });
        return;
      }
      const note = result.editable
        ? "diagram loaded and editable"
        : "diagram loaded read-only (not block-structured)";
      this.events.onTranscript({ role: "status", text: note });
      const bytes = await this.api.download(sessionId);
      const xml = new TextDecoder().decode(bytes);
      this.lastXml = xml;
      this.events.onDiagram(xml);
    });
  }

  async download(): Promise<Uint8Array<ArrayBuffer>> {
    const sessionId = this.requireSession();
    return this.api.download(sessionId);
  }

  async selectModel(model: string): Promise<void> {
    const sessionId = this.requireSession();
    const info = await this.api.selectModel(sessionId, model);
    this.events.onSession(info);
  }
}
