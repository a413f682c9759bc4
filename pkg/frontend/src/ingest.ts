import { IngestReport, runIngest } from "./api.js";
import { clear, el, errorBanner } from "./widgets.js";

export function reportBanner(report: IngestReport): HTMLElement {
  const box = el("div", "ingest-report");
  box.appendChild(
    el(
      "p",
      "report-counts",
      `created ${report.created}, duplicates ${report.duplicates}, ` +
        `skipped ${report.skipped.length} of ${report.scanned} scanned; ` +
        `${report.links_created} links created`,
    ),
  );
  if (report.skipped.length) {
    const list = el("ul", "skip-list");
    for (const skip of report.skipped) {
      const li = el("li", "skip");
      li.appendChild(el("code", "", skip.path));
      li.appendChild(el("span", "skip-reason", ` — ${skip.reason}`));
      list.appendChild(li);
    }
    box.appendChild(list);
  }
  box.appendChild(el("p", "status", `reference time ${report.now_reference}`));
  return box;
}

export function renderIngestView(container: HTMLElement): void {
  clear(container);
  container.appendChild(el("h2", "", "Ingest"));
  container.appendChild(
    el("p", "", "Scan the data share and generate entries for new measurement files."),
  );
  const button = el("button", "ingest-button", "Generate entries") as HTMLButtonElement;
  const result = el("div", "ingest-result");
  button.addEventListener("click", async () => {
    button.disabled = true;
    clear(result);
    try {
      const report = await runIngest();
      result.appendChild(reportBanner(report));
    } catch (err) {
      result.appendChild(errorBanner(err));
    } finally {
      button.disabled = false;
    }
  });
  container.appendChild(button);
  container.appendChild(result);
}
