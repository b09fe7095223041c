// @vitest-environment jsdom
//
// Workbench acceptance: boot the full app against a mocked API, open the
// ADE-style fixture, and check highlight/arc counts, text fidelity, and
// Type-filter behavior end to end.
import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { Workbench } from "../src/main.js";
import { adeNote, mockFetch } from "./fixtures.js";

afterEach(() => {
  vi.unstubAllGlobals();
  document.body.textContent = "";
});

async function bootedWorkbench() {
  const doc = adeNote();
  const { fetchImpl } = mockFetch({
    "GET /api/docs": { status: 200, body: [doc.doc_id] },
    [`GET /api/docs/${doc.doc_id}`]: { status: 200, body: doc },
  });
  vi.stubGlobal("fetch", fetchImpl);
  const root = document.createElement("div");
  document.body.appendChild(root);
  const workbench = new Workbench(root, new ApiClient(""));
  await workbench.boot();
  await workbench.openDoc(doc.doc_id);
  return { workbench, root, doc };
}

function highlights(root: HTMLElement): HTMLElement[] {
  return [...root.querySelectorAll<HTMLElement>(".view-host .hl")];
}

function arcs(root: HTMLElement): SVGPathElement[] {
  return [...root.querySelectorAll<SVGPathElement>(".view-host path.arc")];
}

describe("workbench acceptance", () => {
  it("renders the fixture with highlight count = frames, arc count = relations, "
     + "and full text fidelity", async () => {
    const { root, doc } = await bootedWorkbench();
    expect(highlights(root).length).toBe(doc.frames.length);
    expect(arcs(root).length).toBe(doc.relations.length);
    const pre = root.querySelector(".view-host .doc-text")!;
    expect(pre.textContent).toBe(doc.text);
    console.log("ACCEPTANCE 9 (workbench rendering): PASS");
  });

  it("toggling a Type removes its highlights and incident arcs, and back", async () => {
    const { workbench, root, doc } = await bootedWorkbench();

    workbench.toggleType("Drug");
    expect(highlights(root).length).toBe(2);
    expect(arcs(root).length).toBe(0); // both relations touch the Drug frame
    expect(root.querySelector(".view-host .doc-text")!.textContent).toBe(doc.text);

    workbench.toggleType("Drug");
    expect(highlights(root).length).toBe(3);
    expect(arcs(root).length).toBe(2);

    workbench.toggleType("Condition");
    expect(highlights(root).length).toBe(2);
    expect(arcs(root).length).toBe(1);
    console.log("ACCEPTANCE 9 (workbench type filter): PASS");
  });

  it("filter checkboxes in the UI drive the same toggling", async () => {
    const { root, doc } = await bootedWorkbench();
    const drugBox = root.querySelector<HTMLInputElement>(
      '.filters input[data-type="Drug"]')!;
    expect(drugBox.checked).toBe(true);
    drugBox.checked = false;
    drugBox.dispatchEvent(new Event("change"));
    expect(highlights(root).length).toBe(2);
    expect(arcs(root).length).toBe(0);
    expect(root.querySelector(".view-host .doc-text")!.textContent).toBe(doc.text);
  });
});
