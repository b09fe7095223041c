/** Prompt editor chat panel: transcript, input box, "Use as template". */

import { ApiClient, ApiRequestError } from "./api.js";
import { checkTemplate } from "./template_check.js";
import { ChatEntry } from "./types.js";

export class ChatPanel {
  readonly element: HTMLElement;
  transcript: ChatEntry[] = [];
  private sessionId: string | null = null;
  private list: HTMLElement;
  private input: HTMLTextAreaElement;
  private banner: HTMLElement;
  private sendButton: HTMLButtonElement;
  private useButton: HTMLButtonElement;

  constructor(
    private api: ApiClient,
    private extractorKind: string,
    private onUseTemplate: (templateText: string) => void,
  ) {
    this.element = document.createElement("section");
    this.element.className = "chat-panel";

    this.banner = document.createElement("div");
    this.banner.className = "banner";
    this.banner.hidden = true;

    this.list = document.createElement("div");
    this.list.className = "chat-transcript";

    this.input = document.createElement("textarea");
    this.input.className = "chat-input";
    this.input.placeholder = "Describe the extraction task…";

    this.sendButton = document.createElement("button");
    this.sendButton.className = "chat-send";
    this.sendButton.textContent = "Send";
    this.sendButton.addEventListener("click", () => void this.send());

    this.useButton = document.createElement("button");
    this.useButton.className = "chat-use-template";
    this.useButton.textContent = "Use as template";
    this.useButton.addEventListener("click", () => this.useTemplate());

    const controls = document.createElement("div");
    controls.className = "chat-controls";
    controls.append(this.sendButton, this.useButton);
    this.element.append(this.banner, this.list, this.input, controls);
  }

  private showBanner(text: string): void {
    this.banner.textContent = text;
    this.banner.hidden = false;
  }

  private clearBanner(): void {
    this.banner.hidden = true;
    this.banner.textContent = "";
  }

  private append(entry: ChatEntry): void {
    this.transcript.push(entry);
    const node = document.createElement("div");
    node.className = `chat-entry chat-${entry.role}`;
    node.textContent = entry.text;
    this.list.appendChild(node);
  }

  async ensureSession(): Promise<string> {
    if (this.sessionId === null) {
      this.sessionId = await this.api.createEditorSession(this.extractorKind);
    }
    return this.sessionId;
  }

  async send(text?: string): Promise<void> {
    const userText = (text ?? this.input.value).trim();
    if (!userText) return;
    this.clearBanner();
    try {
      const sessionId = await this.ensureSession();
      const reply = await this.api.editorChat(sessionId, userText);
      this.append({ role: "user", text: userText });
      this.append({ role: "assistant", text: reply });
      this.input.value = "";
    } catch (error) {
      // transcript unchanged on failure; surface the error inline with retry
      if (error instanceof ApiRequestError && error.status === 502) {
        this.showBanner(`engine failure: ${error.message} — retry when the backend is up`);
      } else if (error instanceof ApiRequestError) {
        this.showBanner(`${error.code}: ${error.message}`);
      } else {
        this.showBanner(String(error));
      }
    }
  }

  useTemplate(): void {
    this.clearBanner();
    const lastAssistant = [...this.transcript].reverse()
      .find((entry) => entry.role === "assistant");
    if (!lastAssistant) {
      this.showBanner("no assistant reply to use yet");
      return;
    }
    const checked = checkTemplate(lastAssistant.text);
    if (!checked.ok) {
      this.showBanner(`template incomplete: missing ${checked.missing.join(", ")}`);
      return;
    }
    this.onUseTemplate(checked.body);
  }
}
