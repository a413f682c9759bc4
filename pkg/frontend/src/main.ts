import { renderDetailView } from "./detail.js";
import { renderIngestView } from "./ingest.js";
import { renderPlotView } from "./plot.js";
import { renderSamplesView } from "./samples.js";
import { renderEntriesView } from "./table.js";
import { clear, el } from "./widgets.js";

const ROUTES: Array<[RegExp, (app: HTMLElement, match: RegExpMatchArray) => void]> = [
  [/^#\/entries\/(\d+)$/, (app, m) => void renderDetailView(app, Number(m[1]))],
  [/^#\/plot\/(\d+)$/, (app, m) => void renderPlotView(app, Number(m[1]))],
  [/^#\/samples$/, (app) => renderSamplesView(app)],
  [/^#\/ingest$/, (app) => renderIngestView(app)],
  [/^(#\/entries)?$/, (app) => void renderEntriesView(app)],
];

export function route(app: HTMLElement, hash: string): void {
  for (const [pattern, render] of ROUTES) {
    const match = hash.match(pattern);
    if (match) {
      render(app, match);
      return;
    }
  }
  clear(app);
  app.appendChild(el("p", "error-banner", `no such page: ${hash}`));
}

export function start(): void {
  const app = document.getElementById("app");
  if (!app) throw new Error("missing #app container");
  const render = () => route(app, window.location.hash);
  window.addEventListener("hashchange", render);
  render();
}

// Entry point when loaded as a page script; tests import the pieces instead.
if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
