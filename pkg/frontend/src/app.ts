/** DOM wiring for the dual-panel app: chat on the left, canvas on the right. */
import { ApiClient } from "./api.js";
import { AppController, TranscriptEntry } from "./controller.js";
import { parseDiagram, renderSvg } from "./diagram.js";

export function mountApp(root: HTMLElement, baseUrl = ""): AppController {
  root.innerHTML = `
    <div class="bk-app">
      <section class="bk-chat">
        <header class="bk-toolbar">
          <select id="bk-modality">
            <option value="json">JSON process model</option>
            <option value="xml">Direct BPMN XML</option>
          </select>
          <select id="bk-model"></select>
          <button id="bk-new">New session</button>
        </header>
        <div id="bk-transcript" class="bk-transcript"></div>
        <form id="bk-form" class="bk-composer">
          <input id="bk-input" type="text" autocomplete="off"
                 placeholder="Describe or edit your process..." />
          <button id="bk-send" type="submit">Send</button>
        </form>
      </section>
      <section class="bk-canvas">
        <header class="bk-toolbar">
          <label class="bk-upload">Upload
            <input id="bk-upload" type="file" accept=".bpmn,.xml" hidden />
          </label>
          <button id="bk-download" disabled>Download</button>
        </header>
        <div id="bk-diagram" class="bk-diagram">
          <p class="bk-placeholder">No diagram yet.</p>
        </div>
      </section>
    </div>`;

  const q = <T extends HTMLElement>(id: string) =>
    root.querySelector<T>(`#${id}`)!;
  const transcript = q<HTMLDivElement>("bk-transcript");
  const diagram = q<HTMLDivElement>("bk-diagram");
  const input = q<HTMLInputElement>("bk-input");
  const send = q<HTMLButtonElement>("bk-send");
  const download = q<HTMLButtonElement>("bk-download");
  const modelSelect = q<HTMLSelectElement>("bk-model");
  const modalitySelect = q<HTMLSelectElement>("bk-modality");

  const append = (entry: TranscriptEntry) => {
    const line = document.createElement("div");
    line.className = `bk-line bk-${entry.role}`;
    line.textContent = entry.text;
    transcript.appendChild(line);
    transcript.scrollTop = transcript.scrollHeight;
  };

  const api = new ApiClient(baseUrl);
  const controller = new AppController(api, {
    onTranscript: append,
    onDiagram: (xml) => {
      diagram.innerHTML = renderSvg(parseDiagram(xml));
      download.disabled = false;
    },
    onBusy: (busy) => {
      send.disabled = busy;
      input.disabled = busy;
    },
    onSession: (info) => {
      append({
        role: "status",
        text: `session ${info.id.slice(0, 8)} (${info.modality}, ${info.model})`,
      });
    },
  });

  void api.models().then((list) => {
    modelSelect.innerHTML = list.models
      .map((m) => `<option${m === list.default ? " selected" : ""}>${m}</option>`)
      .join("");
  });

  const newSession = () => {
    transcript.innerHTML = "";
    diagram.innerHTML = '<p class="bk-placeholder">No diagram yet.</p>';
    download.disabled = true;
    void controller
      .start(
        modalitySelect.value === "xml" ? "xml" : "json",
        modelSelect.value || "mock",
      )
      .catch((error) => append({ role: "error", text: String(error) }));
  };

  q<HTMLButtonElement>("bk-new").addEventListener("click", newSession);

  q<HTMLFormElement>("bk-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const message = input.value.trim();
    if (!message || controller.inFlight) return;
    input.value = "";
    void controller.send(message).catch(() => {
      /* already surfaced in the transcript */
    });
  });

  q<HTMLInputElement>("bk-upload").addEventListener("change", (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file || controller.inFlight) return;
    void controller.upload(file, file.name).catch((error) =>
      append({ role: "error", text: String(error) }),
    );
  });

  download.addEventListener("click", () => {
    void controller.download().then((bytes) => {
      const blob = new Blob([bytes], { type: "application/xml" });
      const url = URL.createObjectURL(blob);
      const anchor = document.createElement("a");
      anchor.href = url;
      anchor.download = "process.bpmn";
      anchor.click();
      URL.revokeObjectURL(url);
    });
  });

  newSession();
  return controller;
}
