// Thin typed client over the notebook's JSON API. Every non-2xx response
// carries {"error": {code, message}} and is surfaced as ApiError so views
// can render the server's own error code inline.

export interface Entry {
  id: number;
  kind: "main" | "sub";
  device_code: string;
  sample_name: string;
  observed_at: string;
  file_path: string;
  description: string;
  extension: string;
  extra: Record<string, unknown>;
  created_at: string;
}

export interface Sample {
  name: string;
  kind: string;
  properties: Record<string, unknown>;
  created_at: string;
}

export interface LinkRow {
  id: number;
  from_id: number;
  to_id: number;
  link_type: "main_sub" | "entry_note" | "entry_analysis" | "entry_entry";
  created_by: "auto" | "manual";
  created_at: string;
}

export interface Skip {
  path: string;
  reason: string;
}

export interface IngestReport {
  started_at: string;
  now_reference: string;
  scanned: number;
  created: number;
  duplicates: number;
  skipped: Skip[];
  links_created: number;
  entries: number[];
}

export interface SeriesBlock {
  time_s: number[];
  columns: Record<string, number[]>;
}

export interface SubSeries extends SeriesBlock {
  entry_id: number;
  offset_s: number;
}

export interface PlotPayload {
  main: SeriesBlock;
  subs: SubSeries[];
}

export type HistoryItem =
  | ({ type: "entry" } & Entry)
  | { type: "note"; id: number; sample_name: string; written_at: string; body: string };

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(path, init);
  } catch (err) {
    throw new ApiError("unreachable", String(err), 0);
  }
  const text = await response.text();
  let body: unknown = null;
  if (text) {
    try {
      body = JSON.parse(text);
    } catch {
      throw new ApiError("bad_response", `non-JSON response from ${path}`, response.status);
    }
  }
  if (!response.ok) {
    const envelope = body as { error?: { code?: string; message?: string } } | null;
    throw new ApiError(
      envelope?.error?.code ?? "http_error",
      envelope?.error?.message ?? `HTTP ${response.status}`,
      response.status,
    );
  }
  return body as T;
}

function post<T>(path: string, payload: unknown): Promise<T> {
  return request<T>(path, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
}

export interface EntryQuery {
  sample?: string;
  device?: string;
  kind?: string;
  text?: string;
}

export function listEntries(query: EntryQuery = {}): Promise<Entry[]> {
  const params = new URLSearchParams();
  if (query.sample) params.set("sample", query.sample);
  if (query.device) params.set("device", query.device);
  if (query.kind) params.set("kind", query.kind);
  if (query.text) params.set("text", query.text);
  const qs = params.toString();
  return request<Entry[]>(qs ? `api/entries?${qs}` : "api/entries");
}

export const getEntry = (id: number) => request<Entry>(`api/entries/${id}`);
export const getLinks = (id: number) => request<LinkRow[]>(`api/entries/${id}/links`);
export const getPlot = (id: number) => request<PlotPayload>(`api/entries/${id}/plot`);
export const getHistory = (sample: string) =>
  request<HistoryItem[]>(`api/samples/${encodeURIComponent(sample)}/history`);
export const listSamples = () => request<Sample[]>("api/samples");
export const createSample = (name: string, kind = "") =>
  post<Sample>("api/samples", kind ? { name, kind } : { name });
export const runIngest = () => post<IngestReport>("api/ingest", {});
