import { getEntry, getPlot, PlotPayload } from "./api.js";
import { clear, el, errorBanner } from "./widgets.js";

const WIDTH = 840;
const HEIGHT = 420;
const MARGIN = { left: 64, right: 16, top: 16, bottom: 40 };
const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

interface Series {
  label: string;
  // absolute time = sample time + series offset; values are verbatim
  points: Array<[number, number]>;
}

export function toSeries(payload: PlotPayload): Series[] {
  const series: Series[] = [];
  for (const [name, values] of Object.entries(payload.main.columns)) {
    series.push({
      label: `main ${name}`,
      points: values.map((v, i) => [payload.main.time_s[i] ?? 0, v]),
    });
  }
  for (const sub of payload.subs) {
    for (const [name, values] of Object.entries(sub.columns)) {
      series.push({
        label: `sub #${sub.entry_id} ${name}`,
        points: values.map((v, i) => [sub.offset_s + (sub.time_s[i] ?? 0), v]),
      });
    }
  }
  return series;
}

function extent(values: number[]): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  return [lo, hi];
}

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(tag: K): SVGElementTagNameMap[K] {
  return document.createElementNS(SVG_NS, tag);
}

export function buildPlotSvg(payload: PlotPayload): SVGSVGElement {
  const series = toSeries(payload);
  const allT = series.flatMap((s) => s.points.map((p) => p[0]));
  const allV = series.flatMap((s) => s.points.map((p) => p[1]));
  const [tLo, tHi] = extent(allT.length ? allT : [0]);
  const [vLo, vHi] = extent(allV.length ? allV : [0]);

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const x = (t: number) => MARGIN.left + ((t - tLo) / (tHi - tLo)) * plotW;
  const y = (v: number) => MARGIN.top + plotH - ((v - vLo) / (vHi - vLo)) * plotH;

  const svg = svgEl("svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "overlay-plot");

  const frame = svgEl("rect");
  frame.setAttribute("x", String(MARGIN.left));
  frame.setAttribute("y", String(MARGIN.top));
  frame.setAttribute("width", String(plotW));
  frame.setAttribute("height", String(plotH));
  frame.setAttribute("class", "plot-frame");
  svg.appendChild(frame);

  for (let i = 0; i <= 4; i++) {
    const t = tLo + ((tHi - tLo) * i) / 4;
    const tick = svgEl("text");
    tick.setAttribute("x", String(x(t)));
    tick.setAttribute("y", String(HEIGHT - MARGIN.bottom + 16));
    tick.setAttribute("class", "tick tick-x");
    tick.textContent = `${Math.round(t)}s`;
    svg.appendChild(tick);

    const v = vLo + ((vHi - vLo) * i) / 4;
    const vTick = svgEl("text");
    vTick.setAttribute("x", String(MARGIN.left - 6));
    vTick.setAttribute("y", String(y(v) + 4));
    vTick.setAttribute("class", "tick tick-y");
    vTick.textContent = v.toPrecision(4);
    svg.appendChild(vTick);
  }

  series.forEach((s, index) => {
    const line = svgEl("polyline");
    line.setAttribute(
      "points",
      s.points.map(([t, v]) => `${x(t)},${y(v)}`).join(" "),
    );
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", PALETTE[index % PALETTE.length] ?? "#000");
    line.setAttribute("data-label", s.label);
    line.setAttribute("class", "series-line");
    svg.appendChild(line);

    const legend = svgEl("text");
    legend.setAttribute("x", String(MARGIN.left + 8));
    legend.setAttribute("y", String(MARGIN.top + 14 + index * 16));
    legend.setAttribute("fill", PALETTE[index % PALETTE.length] ?? "#000");
    legend.setAttribute("class", "legend");
    legend.textContent = s.label;
    svg.appendChild(legend);
  });

  return svg;
}

export async function renderPlotView(container: HTMLElement, entryId: number): Promise<void> {
  clear(container);
  container.appendChild(el("h2", "", `Plot — entry ${entryId}`));
  const back = el("a", "", "back to detail") as HTMLAnchorElement;
  back.href = `#/entries/${entryId}`;
  container.appendChild(back);
  try {
    const [entry, payload] = await Promise.all([getEntry(entryId), getPlot(entryId)]);
    container.appendChild(
      el("p", "plot-caption", `${entry.description} — ${entry.sample_name}, ${entry.observed_at}`),
    );
    container.appendChild(buildPlotSvg(payload));
    const note = payload.subs.length
      ? `overlaying ${payload.subs.length} sub-experiment series on the main time axis`
      : "no linked sub-experiment series";
    container.appendChild(el("p", "status", note));
  } catch (err) {
    container.appendChild(errorBanner(err));
  }
}
