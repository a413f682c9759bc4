import { Entry, getEntry, getHistory, getLinks, LinkRow } from "./api.js";
import { clear, el, errorBanner } from "./widgets.js";

const FIELD_ORDER: Array<[keyof Entry, string]> = [
  ["id", "id"],
  ["kind", "kind"],
  ["device_code", "device"],
  ["sample_name", "sample"],
  ["observed_at", "observed at"],
  ["file_path", "file"],
  ["description", "description"],
  ["extension", "extension"],
  ["created_at", "cataloged at"],
];

function metadataTable(entry: Entry): HTMLElement {
  const table = el("table", "metadata");
  for (const [key, label] of FIELD_ORDER) {
    const tr = el("tr");
    tr.appendChild(el("th", "", label));
    tr.appendChild(el("td", "", String(entry[key])));
    table.appendChild(tr);
  }
  for (const [key, value] of Object.entries(entry.extra)) {
    const tr = el("tr", "extra-field");
    tr.appendChild(el("th", "", key));
    tr.appendChild(el("td", "", String(value)));
    table.appendChild(tr);
  }
  return table;
}

function partnerId(link: LinkRow, self: number): number {
  return link.from_id === self ? link.to_id : link.from_id;
}

export async function renderDetailView(container: HTMLElement, entryId: number): Promise<void> {
  clear(container);
  try {
    const entry = await getEntry(entryId);
    container.appendChild(el("h2", "", `Entry ${entry.id}: ${entry.description}`));

    const plotLink = el("a", "plot-link", "open plot") as HTMLAnchorElement;
    plotLink.href = `#/plot/${entry.id}`;
    container.appendChild(plotLink);

    container.appendChild(metadataTable(entry));

    const [links, history] = await Promise.all([
      getLinks(entry.id),
      getHistory(entry.sample_name),
    ]);
    const noteBodies = new Map<number, string>();
    for (const item of history) {
      if (item.type === "note") noteBodies.set(item.id, item.body);
    }

    const linked = el("section", "linked");
    linked.appendChild(el("h3", "", "Linked experiments"));
    const expList = el("ul", "linked-entries");
    const entryLinks = links.filter((l) => l.link_type !== "entry_note");
    const partners = await Promise.all(
      entryLinks.map((l) => getEntry(partnerId(l, entry.id)).catch(() => null)),
    );
    entryLinks.forEach((link, i) => {
      const partner = partners[i];
      if (!partner) return;
      const li = el("li");
      const a = el(
        "a",
        "",
        `#${partner.id} ${partner.kind} ${partner.device_code} ${partner.observed_at} (${link.link_type}, ${link.created_by})`,
      ) as HTMLAnchorElement;
      a.href = `#/entries/${partner.id}`;
      li.appendChild(a);
      expList.appendChild(li);
    });
    if (!expList.childElementCount) expList.appendChild(el("li", "empty", "none"));
    linked.appendChild(expList);

    linked.appendChild(el("h3", "", "Notes"));
    const noteList = el("ul", "linked-notes");
    for (const link of links.filter((l) => l.link_type === "entry_note")) {
      const body = noteBodies.get(link.to_id);
      noteList.appendChild(el("li", "note", body ?? `note ${link.to_id}`));
    }
    if (!noteList.childElementCount) noteList.appendChild(el("li", "empty", "none"));
    linked.appendChild(noteList);

    container.appendChild(linked);
  } catch (err) {
    container.appendChild(errorBanner(err));
  }
}
