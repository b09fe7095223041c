/** Client-side template contract check, mirroring the server's rules:
 * first fenced code block (or the whole text), four required section
 * headings, at least one {{placeholder}}. */

const FENCED_BLOCK = /```[A-Za-z0-9_-]*[ \t]*\r?\n([\s\S]*?)\r?\n?```/;
const HEADING = /^\s{0,3}#{1,6}\s*(.+?)\s*:?\s*$/gm;
const PLACEHOLDER = /\{\{([A-Za-z0-9_]+)\}\}/g;

export const REQUIRED_SECTIONS = [
  "Task description",
  "Schema definition",
  "Output format",
  "Input",
] as const;

export interface TemplateCheck {
  ok: boolean;
  body: string;
  missing: string[];
  placeholders: string[];
}

export function checkTemplate(assistantText: string): TemplateCheck {
  const match = FENCED_BLOCK.exec(assistantText);
  const body = match ? match[1] : assistantText;

  const headings = new Set<string>();
  for (const m of body.matchAll(HEADING)) {
    headings.add(m[1].toLowerCase());
  }
  const missing = REQUIRED_SECTIONS.filter(
    (section) => !headings.has(section.toLowerCase()),
  ) as string[];

  const placeholders: string[] = [];
  for (const m of body.matchAll(PLACEHOLDER)) {
    if (!placeholders.includes(m[1])) placeholders.push(m[1]);
  }
  if (placeholders.length === 0) missing.push("placeholder");

  return { ok: missing.length === 0, body, missing, placeholders };
}
