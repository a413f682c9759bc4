import { Entry, EntryQuery, listEntries } from "./api.js";
import { clear, el, errorBanner } from "./widgets.js";

export interface Column {
  key: keyof Entry;
  label: string;
  numeric?: boolean;
}

export const COLUMNS: Column[] = [
  { key: "id", label: "id", numeric: true },
  { key: "observed_at", label: "observed at" },
  { key: "kind", label: "kind" },
  { key: "device_code", label: "device" },
  { key: "sample_name", label: "sample" },
  { key: "description", label: "description" },
  { key: "extension", label: "ext" },
];

const SAMPLE_EXACT = /^[A-Z]{2}_[0-9]{2}$/;
const DEVICE_EXACT = /^[A-Z]{3}$/;

// Filters that the server understands verbatim are pushed down to the API;
// anything else is applied as a case-insensitive substring match locally.
// A fully-formed sample/device/kind filter therefore displays exactly the
// API's rows for that query.
export function splitFilters(filters: Partial<Record<keyof Entry, string>>): {
  query: EntryQuery;
  local: Array<[keyof Entry, string]>;
} {
  const query: EntryQuery = {};
  const local: Array<[keyof Entry, string]> = [];
  for (const [key, raw] of Object.entries(filters) as Array<[keyof Entry, string]>) {
    const value = raw.trim();
    if (!value) continue;
    if (key === "sample_name" && SAMPLE_EXACT.test(value)) query.sample = value;
    else if (key === "device_code" && DEVICE_EXACT.test(value)) query.device = value;
    else if (key === "kind" && (value === "main" || value === "sub")) query.kind = value;
    else local.push([key, value.toLowerCase()]);
  }
  return { query, local };
}

export function applyLocalFilters(rows: Entry[], local: Array<[keyof Entry, string]>): Entry[] {
  return rows.filter((row) =>
    local.every(([key, needle]) => String(row[key]).toLowerCase().includes(needle)),
  );
}

export class EntriesTable {
  private readonly root: HTMLElement;
  private readonly filters: Partial<Record<keyof Entry, string>> = {};
  private readonly hidden = new Set<keyof Entry>();
  private sortKey: keyof Entry | null = null;
  private sortAsc = true;
  private rows: Entry[] = [];
  private fetchSeq = 0;
  private lastQueryKey = "";
  private readonly errorSlot = el("div");
  private readonly table = el("table", "entries");
  private readonly status = el("p", "status");

  constructor(root: HTMLElement) {
    this.root = root;
    root.appendChild(this.buildColumnToggles());
    root.appendChild(this.errorSlot);
    root.appendChild(this.table);
    root.appendChild(this.status);
    this.renderHead();
  }

  private buildColumnToggles(): HTMLElement {
    const bar = el("div", "column-toggles");
    bar.appendChild(el("span", "", "columns:"));
    for (const col of COLUMNS) {
      const label = el("label");
      const box = el("input") as HTMLInputElement;
      box.type = "checkbox";
      box.checked = true;
      box.dataset.column = col.key;
      box.addEventListener("change", () => {
        if (box.checked) this.hidden.delete(col.key);
        else this.hidden.add(col.key);
        this.renderHead();
        this.renderBody();
      });
      label.appendChild(box);
      label.appendChild(document.createTextNode(col.label));
      bar.appendChild(label);
    }
    return bar;
  }

  private visibleColumns(): Column[] {
    return COLUMNS.filter((c) => !this.hidden.has(c.key));
  }

  private renderHead(): void {
    const head = el("thead");
    const titles = el("tr");
    for (const col of this.visibleColumns()) {
      const th = el("th", "", col.label);
      th.dataset.column = col.key;
      if (this.sortKey === col.key) th.classList.add(this.sortAsc ? "sorted-asc" : "sorted-desc");
      th.addEventListener("click", () => {
        this.sortAsc = this.sortKey === col.key ? !this.sortAsc : true;
        this.sortKey = col.key;
        this.renderHead();
        this.renderBody();
      });
      titles.appendChild(th);
    }
    const filterRow = el("tr", "filter-row");
    for (const col of this.visibleColumns()) {
      const td = el("td");
      const input = el("input") as HTMLInputElement;
      input.type = "text";
      input.placeholder = "filter";
      input.dataset.filterFor = col.key;
      input.value = this.filters[col.key] ?? "";
      input.addEventListener("input", () => {
        this.filters[col.key] = input.value;
        void this.refresh();
      });
      td.appendChild(input);
      filterRow.appendChild(td);
    }
    head.appendChild(titles);
    head.appendChild(filterRow);
    this.table.querySelector("thead")?.remove();
    this.table.insertBefore(head, this.table.firstChild);
  }

  private renderBody(): void {
    const { local } = splitFilters(this.filters);
    let shown = applyLocalFilters(this.rows, local);
    if (this.sortKey) {
      const key = this.sortKey;
      const direction = this.sortAsc ? 1 : -1;
      shown = [...shown].sort((a, b) => {
        const av = a[key];
        const bv = b[key];
        if (typeof av === "number" && typeof bv === "number") return (av - bv) * direction;
        return String(av).localeCompare(String(bv)) * direction;
      });
    }
    const body = el("tbody");
    for (const row of shown) {
      const tr = el("tr");
      tr.dataset.entryId = String(row.id);
      for (const col of this.visibleColumns()) {
        const td = el("td", `col-${col.key}`);
        if (col.key === "id") {
          const link = el("a", "", String(row.id)) as HTMLAnchorElement;
          link.href = `#/entries/${row.id}`;
          td.appendChild(link);
        } else {
          td.textContent = String(row[col.key]);
        }
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }
    this.table.querySelector("tbody")?.remove();
    this.table.appendChild(body);
    this.status.textContent = `${shown.length} of ${this.rows.length} entries`;
  }

  async refresh(): Promise<void> {
    const { query } = splitFilters(this.filters);
    const queryKey = JSON.stringify(query);
    const seq = ++this.fetchSeq;
    clear(this.errorSlot);
    if (queryKey !== this.lastQueryKey || seq === 1) {
      try {
        const rows = await listEntries(query);
        if (seq !== this.fetchSeq) return; // a newer refresh is in flight
        this.rows = rows;
        this.lastQueryKey = queryKey;
      } catch (err) {
        if (seq !== this.fetchSeq) return;
        clear(this.errorSlot);
        this.errorSlot.appendChild(errorBanner(err));
        return;
      }
    }
    this.renderBody();
  }
}

export function renderEntriesView(container: HTMLElement): EntriesTable {
  clear(container);
  container.appendChild(el("h2", "", "Experiments"));
  const tableRoot = el("div");
  container.appendChild(tableRoot);
  const table = new EntriesTable(tableRoot);
  void table.refresh();
  return table;
}
