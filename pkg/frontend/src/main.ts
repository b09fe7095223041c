/** Workbench wiring: doc list, document view with filters, template pane,
 * extraction runner with comparison toggle, and the prompt editor chat. */

import { ApiClient, ApiRequestError } from "./api.js";
import { ChatPanel } from "./chat.js";
import { compareRuns, runExtraction } from "./extraction.js";
import { renderDocumentView } from "./render.js";
import { LlmieDocument, ViewState, frameType, initialState } from "./types.js";

const FRAME_EXTRACTORS = ["basic", "review", "sentence"] as const;

export class Workbench {
  state: ViewState = initialState();
  private currentDoc: LlmieDocument | null = null;

  private docList!: HTMLElement;
  private viewHost!: HTMLElement;
  private filterBox!: HTMLElement;
  private statusLine!: HTMLElement;
  private comparisonLine!: HTMLElement;
  private templateInput!: HTMLTextAreaElement;
  private extractorSelect!: HTMLSelectElement;
  private chat!: ChatPanel;
  private extractionInFlight = false;

  constructor(private root: HTMLElement, private api: ApiClient) {}

  async boot(): Promise<void> {
    this.root.textContent = "";
    this.root.className = "workbench";

    const sidebar = document.createElement("aside");
    sidebar.className = "sidebar";
    this.docList = document.createElement("ul");
    this.docList.className = "doc-list";
    sidebar.append(this.heading("Documents"), this.docList);

    const center = document.createElement("section");
    center.className = "center";
    this.filterBox = document.createElement("div");
    this.filterBox.className = "filters";
    this.viewHost = document.createElement("div");
    this.viewHost.className = "view-host";
    this.statusLine = document.createElement("div");
    this.statusLine.className = "status";
    this.comparisonLine = document.createElement("div");
    this.comparisonLine.className = "comparison";
    center.append(this.heading("Document"), this.filterBox, this.viewHost,
                  this.statusLine, this.comparisonLine);

    const tools = document.createElement("aside");
    tools.className = "tools";
    this.templateInput = document.createElement("textarea");
    this.templateInput.className = "template-input";
    this.templateInput.placeholder = "Prompt template with {{input}}…";
    this.templateInput.addEventListener("input", () => {
      this.state.templateText = this.templateInput.value;
    });
    this.extractorSelect = document.createElement("select");
    for (const kind of FRAME_EXTRACTORS) {
      const option = document.createElement("option");
      option.value = kind;
      option.textContent = kind;
      this.extractorSelect.appendChild(option);
    }
    const runButton = document.createElement("button");
    runButton.className = "run-extraction";
    runButton.textContent = "Run extraction";
    runButton.addEventListener("click", () => void this.extract());

    this.chat = new ChatPanel(this.api, "basic", (templateText) => {
      this.state.templateText = templateText;
      this.templateInput.value = templateText;
    });

    tools.append(this.heading("Template"), this.templateInput,
                 this.extractorSelect, runButton,
                 this.heading("Prompt editor"), this.chat.element);

    this.root.append(sidebar, center, tools);
    await this.refreshDocList();
  }

  private heading(text: string): HTMLElement {
    const node = document.createElement("h2");
    node.textContent = text;
    return node;
  }

  private setStatus(text: string): void {
    this.statusLine.textContent = text;
  }

  async refreshDocList(): Promise<void> {
    try {
      const ids = await this.api.listDocs();
      this.docList.textContent = "";
      for (const id of ids) {
        const item = document.createElement("li");
        const link = document.createElement("a");
        link.href = "#";
        link.textContent = id;
        link.addEventListener("click", (event) => {
          event.preventDefault();
          void this.openDoc(id);
        });
        item.appendChild(link);
        this.docList.appendChild(item);
      }
    } catch (error) {
      this.setStatus(`could not list documents: ${String(error)}`);
    }
  }

  async openDoc(docId: string): Promise<void> {
    try {
      const doc = await this.api.getDoc(docId);
      this.state.selectedDocId = docId;
      this.currentDoc = doc;
      this.state.hiddenTypes = new Set();
      this.renderView(doc);
    } catch (error) {
      this.setStatus(`could not open ${docId}: ${String(error)}`);
    }
  }

  /** Re-render the current document; never a blank screen on bad input. */
  renderView(doc: LlmieDocument): void {
    try {
      const view = renderDocumentView(this.viewHost, doc, this.state.hiddenTypes);
      this.renderFilters(doc);
      this.setStatus(
        `${doc.doc_id}: ${view.highlights.length} highlight(s), ${view.arcs.length} arc(s)`);
    } catch (error) {
      this.viewHost.textContent = "";
      const panel = document.createElement("div");
      panel.className = "error-panel";
      panel.textContent = `cannot render document: ${String(error)}`;
      this.viewHost.appendChild(panel);
    }
  }

  private renderFilters(doc: LlmieDocument): void {
    const types = [...new Set(doc.frames.map(frameType))].sort();
    this.filterBox.textContent = "";
    for (const typeValue of types) {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = !this.state.hiddenTypes.has(typeValue);
      box.dataset.type = typeValue;
      box.addEventListener("change", () => {
        this.toggleType(typeValue);
      });
      label.append(box, document.createTextNode(typeValue || "(untyped)"));
      this.filterBox.appendChild(label);
    }
  }

  toggleType(typeValue: string): void {
    if (this.state.hiddenTypes.has(typeValue)) {
      this.state.hiddenTypes.delete(typeValue);
    } else {
      this.state.hiddenTypes.add(typeValue);
    }
    if (this.currentDoc) this.renderView(this.currentDoc);
  }

  async extract(): Promise<void> {
    if (this.extractionInFlight) return; // at most one in flight per view
    if (!this.currentDoc) {
      this.setStatus("open a document first");
      return;
    }
    this.extractionInFlight = true;
    try {
      const result = await runExtraction(
        this.state, this.api, this.currentDoc.text,
        this.extractorSelect.value);
      this.currentDoc = result;
      this.renderView(result);
      const comparison = compareRuns(this.state);
      if (comparison && comparison.previous) {
        this.comparisonLine.textContent =
          `now ${comparison.current.frames} frame(s) / ` +
          `${comparison.current.relations} relation(s); ` +
          `previous run ${comparison.previous.frames} / ${comparison.previous.relations}; ` +
          `${comparison.changedSpans} changed span(s)`;
      }
    } catch (error) {
      if (error instanceof ApiRequestError) {
        this.setStatus(`extraction failed (${error.status} ${error.code}): ${error.message}`);
      } else {
        this.setStatus(`extraction failed: ${String(error)}`);
      }
    } finally {
      this.extractionInFlight = false;
    }
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const workbench = new Workbench(root, new ApiClient(""));
  void workbench.boot();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount();
}
