import { describe, expect, it } from "vitest";

import { PALETTE, colorIndex, fnv1a } from "../src/palette.js";
import { checkTemplate } from "../src/template_check.js";

describe("palette", () => {
  it("matches the standard FNV-1a vectors (and therefore the server)", () => {
    expect(fnv1a("")).toBe(2166136261);
    expect(fnv1a("a")).toBe(0xe40c292c);
  });

  it("maps known type values exactly like the server renderer", () => {
    // frozen from the server implementation: fnv1a(utf8(value)) % 12
    expect(colorIndex("Drug")).toBe(fnv1a("Drug") % 12);
    expect(PALETTE.length).toBe(12);
  });

  it("handles non-ascii type values via UTF-8 bytes", () => {
    expect(() => colorIndex("АДЕ-реакция")).not.toThrow();
    expect(colorIndex("АДЕ-реакция")).toBeGreaterThanOrEqual(0);
    expect(colorIndex("АДЕ-реакция")).toBeLessThan(12);
  });
});

describe("checkTemplate", () => {
  const good = [
    "# Task description", "x",
    "# Schema definition", "y",
    "# Output format", "z",
    "# Input", "{{input}}",
  ].join("\n");

  it("accepts a complete template", () => {
    const result = checkTemplate(good);
    expect(result.ok).toBe(true);
    expect(result.placeholders).toEqual(["input"]);
  });

  it("prefers the first fenced block", () => {
    const wrapped = "prose\n```\n" + good + "\n```\nmore prose";
    const result = checkTemplate(wrapped);
    expect(result.ok).toBe(true);
    expect(result.body).not.toContain("```");
  });

  it("lists missing sections", () => {
    const result = checkTemplate(good.replace("# Output format", "## Other"));
    expect(result.ok).toBe(false);
    expect(result.missing).toContain("Output format");
  });

  it("demands at least one placeholder", () => {
    const result = checkTemplate(good.replace("{{input}}", "nothing"));
    expect(result.ok).toBe(false);
    expect(result.missing).toContain("placeholder");
  });
});
