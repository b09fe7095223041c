/** Wire types mirroring the .llmie document schema served by the API. */

export interface Frame {
  frame_id: string;
  entity_text: string;
  start: number;
  end: number;
  attributes: Record<string, string>;
}

export interface Relation {
  frame_1_id: string;
  frame_2_id: string;
  relation_type: string | null;
}

export interface LlmieDocument {
  format_version: number;
  doc_id: string;
  text: string;
  frames: Frame[];
  relations: Relation[];
}

export interface ChatEntry {
  role: "user" | "assistant";
  text: string;
}

/** Single source of truth for the page; the server computes all spans. */
export interface ViewState {
  selectedDocId: string | null;
  templateText: string;
  transcript: ChatEntry[];
  lastResult: LlmieDocument | null;
  previousResult: LlmieDocument | null;
  hiddenTypes: Set<string>;
}

export function initialState(): ViewState {
  return {
    selectedDocId: null,
    templateText: "",
    transcript: [],
    lastResult: null,
    previousResult: null,
    hiddenTypes: new Set(),
  };
}

export function frameType(frame: Frame): string {
  return frame.attributes["Type"] ?? "";
}
