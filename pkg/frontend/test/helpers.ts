import { vi } from "vitest";
import type { Entry, IngestReport } from "../src/api.js";

type Handler = (init?: RequestInit) => { status?: number; body: unknown };

/** fetch stub keyed by exact request path; unknown paths fail the test loudly. */
export function stubFetch(routes: Record<string, Handler | unknown>) {
  const mock = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const path = String(input);
    if (!(path in routes)) throw new Error(`unexpected fetch: ${path}`);
    const route = routes[path];
    const { status = 200, body } =
      typeof route === "function" ? (route as Handler)(init) : { body: route };
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  });
  vi.stubGlobal("fetch", mock);
  return mock;
}

export const flush = async (rounds = 3) => {
  for (let i = 0; i < rounds; i++) await new Promise((r) => setTimeout(r, 0));
};

let nextId = 1;

export function entry(overrides: Partial<Entry> = {}): Entry {
  const id = overrides.id ?? nextId++;
  return {
    id,
    kind: "main",
    device_code: "OCA",
    sample_name: "BA_01",
    observed_at: "2021-02-01T17:17:00",
    file_path: `01_Main_Exp/01_OCA_35_XL/20210201/Probe_BA_01/17170${id}_x.png`,
    description: `measurement ${id}`,
    extension: "png",
    extra: {},
    created_at: "2021-02-01T18:00:00",
    ...overrides,
  };
}

export function report(overrides: Partial<IngestReport> = {}): IngestReport {
  return {
    started_at: "2021-02-02T08:00:00",
    now_reference: "2021-02-02T08:00:00",
    scanned: 1,
    created: 1,
    duplicates: 0,
    skipped: [],
    links_created: 0,
    entries: [1],
    ...overrides,
  };
}
