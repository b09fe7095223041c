import { LlmieDocument } from "../src/types.js";

/** ADE-style note: Drug + Condition + ADE frames, Condition-Drug and ADE-Drug
 * relations. Spans were derived with plain substring search over the text. */
export function adeNote(): LlmieDocument {
  const text =
    "Patient was started on lisinopril 10 mg daily for hypertension.\n" +
    "He later developed a dry cough attributed to lisinopril.\n";
  const span = (needle: string, from = 0): [number, number] => {
    const start = text.indexOf(needle, from);
    if (start < 0) throw new Error(`fixture bug: ${needle} not in text`);
    return [start, start + needle.length];
  };
  const [drugStart, drugEnd] = span("lisinopril");
  const [condStart, condEnd] = span("hypertension");
  const [adeStart, adeEnd] = span("dry cough");
  return {
    format_version: 1,
    doc_id: "ade_note",
    text,
    frames: [
      {
        frame_id: "0001", entity_text: "lisinopril", start: drugStart, end: drugEnd,
        attributes: { Type: "Drug", Dosage: "10 mg", Frequency: "daily" },
      },
      {
        frame_id: "0002", entity_text: "hypertension", start: condStart, end: condEnd,
        attributes: { Type: "Condition", Assertion: "present" },
      },
      {
        frame_id: "0003", entity_text: "dry cough", start: adeStart, end: adeEnd,
        attributes: { Type: "ADE" },
      },
    ],
    relations: [
      { frame_1_id: "0001", frame_2_id: "0002", relation_type: "Condition-Drug" },
      { frame_1_id: "0001", frame_2_id: "0003", relation_type: "ADE-Drug" },
    ],
  };
}

export function emptyDoc(text = "plain text without any frames"): LlmieDocument {
  return { format_version: 1, doc_id: "empty", text, frames: [], relations: [] };
}

type FetchResult = { status: number; body: unknown };

/** Minimal fetch mock: routes by "METHOD path" with queued or fixed results. */
export function mockFetch(routes: Record<string, FetchResult | FetchResult[]>) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const key = `${init?.method ?? "GET"} ${url}`;
    const route = routes[key];
    if (route === undefined) {
      return new Response(JSON.stringify({ code: "unrouted", message: key }),
                          { status: 404, headers: { "Content-Type": "application/json" } });
    }
    const result = Array.isArray(route)
      ? route[Math.min(calls.filter((c) => `${c.init?.method ?? "GET"} ${c.url}` === key).length - 1,
                       route.length - 1)]
      : route;
    return new Response(JSON.stringify(result.body), {
      status: result.status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetchImpl, calls };
}
