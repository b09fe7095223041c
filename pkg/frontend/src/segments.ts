/** Segment-splitting of document text at frame boundaries (mirrors the server
 * renderer). Spans come from the server verbatim; this only partitions them
 * for display, it never computes or adjusts offsets. */

import { Frame } from "./types.js";

export interface Segment {
  start: number;
  end: number;
  frameIds: string[];
}

export function computeSegments(text: string, frames: Frame[]): Segment[] {
  const bounds = new Set<number>([0, text.length]);
  for (const frame of frames) {
    bounds.add(frame.start);
    bounds.add(frame.end);
  }
  const ordered = [...bounds].filter((b) => b >= 0 && b <= text.length).sort((a, b) => a - b);
  const segments: Segment[] = [];
  for (let i = 0; i + 1 < ordered.length; i++) {
    const start = ordered[i];
    const end = ordered[i + 1];
    if (start === end) continue;
    const frameIds = frames
      .filter((f) => f.start <= start && end <= f.end)
      .map((f) => f.frame_id);
    segments.push({ start, end, frameIds });
  }
  return segments;
}
