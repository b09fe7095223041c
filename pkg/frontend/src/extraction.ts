/** Extraction runner: state changes only on success, previous result kept for
 * side-by-side comparison. */

import { ApiClient } from "./api.js";
import { LlmieDocument, ViewState } from "./types.js";

export async function runExtraction(
  state: ViewState,
  api: ApiClient,
  docText: string,
  extractorKind: string,
): Promise<LlmieDocument> {
  if (!state.templateText.trim()) {
    throw new Error("template is empty");
  }
  const result = await api.extract({
    text: docText,
    template: state.templateText,
    extractor: extractorKind,
  });
  // only now touch the state: failed requests leave everything untouched
  state.previousResult = state.lastResult;
  state.lastResult = result;
  return result;
}

export interface ComparisonCounts {
  current: { frames: number; relations: number };
  previous: { frames: number; relations: number } | null;
  changedSpans: number;
}

/** Count-level comparison plus how many current spans are new or moved. */
export function compareRuns(state: ViewState): ComparisonCounts | null {
  if (!state.lastResult) return null;
  const current = {
    frames: state.lastResult.frames.length,
    relations: state.lastResult.relations.length,
  };
  if (!state.previousResult) {
    return { current, previous: null, changedSpans: current.frames };
  }
  const previousSpans = new Set(
    state.previousResult.frames.map((f) => `${f.start}:${f.end}`));
  const changedSpans = state.lastResult.frames
    .filter((f) => !previousSpans.has(`${f.start}:${f.end}`)).length;
  return {
    current,
    previous: {
      frames: state.previousResult.frames.length,
      relations: state.previousResult.relations.length,
    },
    changedSpans,
  };
}
