/** Highlight colors; hash and palette are bit-identical to the server renderer. */

export const PALETTE = [
  "#ffd9a8", "#aee1f7", "#b5e8b0", "#f7b3b3", "#d9c7f0", "#e3cdb9",
  "#f9c6e0", "#e6e6a8", "#b3ecec", "#ffc4a3", "#cfe0a8", "#e0e0e0",
] as const;

/** 32-bit FNV-1a over UTF-8 bytes. */
export function fnv1a(text: string): number {
  const bytes = new TextEncoder().encode(text);
  let value = 0x811c9dc5;
  for (const byte of bytes) {
    value ^= byte;
    value = Math.imul(value, 0x01000193) >>> 0;
  }
  return value >>> 0;
}

export function colorIndex(typeValue: string): number {
  return fnv1a(typeValue) % PALETTE.length;
}

export function colorFor(typeValue: string): string {
  return PALETTE[colorIndex(typeValue)];
}
