/** Document view: segment-split highlights, per-Type colors, relation arcs.
 *
 * Frames whose Type is hidden by the filter render as plain text; arcs are
 * only drawn when both endpoint frames are visible and anchored, so filtering
 * never leaves a dangling arc. The concatenated text content of the view
 * always equals the document text.
 */

import { colorFor } from "./palette.js";
import { computeSegments } from "./segments.js";
import { Frame, LlmieDocument, frameType } from "./types.js";

const SVGNS = "http://www.w3.org/2000/svg";

export interface RenderedView {
  highlights: HTMLElement[];
  arcs: SVGPathElement[];
  textElement: HTMLPreElement;
}

function tooltip(frames: Frame[]): string {
  return frames
    .map((f) => {
      const attrs = Object.entries(f.attributes)
        .map(([key, value]) => `${key}=${value}`)
        .join(", ");
      return `${f.frame_id}: ${attrs || "no attributes"}`;
    })
    .join("\n");
}

function outermost(frames: Frame[]): Frame {
  return frames.reduce((best, f) => {
    if (f.start < best.start) return f;
    if (f.start === best.start && f.end > best.end) return f;
    return best;
  });
}

export function renderDocumentView(
  host: HTMLElement,
  doc: LlmieDocument,
  hiddenTypes: Set<string> = new Set(),
): RenderedView {
  host.textContent = "";
  host.classList.add("doc-view");

  const svg = document.createElementNS(SVGNS, "svg");
  svg.setAttribute("class", "arcs");
  const pre = document.createElement("pre");
  pre.className = "doc-text";

  const byId = new Map(doc.frames.map((f) => [f.frame_id, f]));
  const visibleFrames = doc.frames.filter((f) => !hiddenTypes.has(frameType(f)));
  const highlights: HTMLElement[] = [];

  for (const segment of computeSegments(doc.text, visibleFrames)) {
    const segmentText = doc.text.slice(segment.start, segment.end);
    if (segment.frameIds.length === 0) {
      pre.appendChild(document.createTextNode(segmentText));
      continue;
    }
    const covering = segment.frameIds.map((id) => byId.get(id)!).filter(Boolean);
    const span = document.createElement("span");
    span.className = "hl";
    span.style.background = colorFor(frameType(outermost(covering)));
    span.dataset.frames = segment.frameIds.join(" ");
    span.title = tooltip(covering);
    span.textContent = segmentText;
    pre.appendChild(span);
    highlights.push(span);
  }

  const anchorFor = (frameId: string): HTMLElement | undefined =>
    highlights.find((el) => (el.dataset.frames ?? "").split(" ").includes(frameId));

  const visibleIds = new Set(visibleFrames.map((f) => f.frame_id));
  const arcs: SVGPathElement[] = [];
  for (const relation of doc.relations) {
    if (!visibleIds.has(relation.frame_1_id) || !visibleIds.has(relation.frame_2_id)) {
      continue; // an endpoint is filtered out: no arc
    }
    const from = anchorFor(relation.frame_1_id);
    const to = anchorFor(relation.frame_2_id);
    if (!from || !to) continue;
    const path = document.createElementNS(SVGNS, "path") as SVGPathElement;
    path.setAttribute("class", "arc");
    path.dataset.from = relation.frame_1_id;
    path.dataset.to = relation.frame_2_id;
    if (relation.relation_type) path.dataset.relationType = relation.relation_type;
    positionArc(path, from, to, host);
    svg.appendChild(path);
    arcs.push(path);
  }

  host.appendChild(svg);
  host.appendChild(pre);
  return { highlights, arcs, textElement: pre };
}

function positionArc(path: SVGPathElement, from: HTMLElement, to: HTMLElement,
                     host: HTMLElement): void {
  // jsdom reports zero rects; real browsers draw a cubic between anchor tops.
  const hostRect = host.getBoundingClientRect();
  const a = from.getBoundingClientRect();
  const b = to.getBoundingClientRect();
  const x1 = a.left + a.width / 2 - hostRect.left;
  const y1 = a.top - hostRect.top;
  const x2 = b.left + b.width / 2 - hostRect.left;
  const y2 = b.top - hostRect.top;
  const lift = 14 + Math.min(40, Math.abs(x2 - x1) / 10);
  const apex = Math.min(y1, y2) - lift;
  path.setAttribute("d", `M ${x1} ${y1} C ${x1} ${apex}, ${x2} ${apex}, ${x2} ${y2}`);
}
