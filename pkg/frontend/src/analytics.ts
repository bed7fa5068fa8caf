// Read-only campaign progress view: believed-best action per iteration plus
// the min-h-per-rollout scatter (colored by iteration, zero line marked).

import { ReportJson } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

function colorFor(iteration: number, total: number): string {
  const t = total <= 1 ? 0 : (iteration - 1) / (total - 1);
  const hue = 240 - 200 * t; // blue early, red late
  return `hsl(${hue.toFixed(0)}, 70%, 45%)`;
}

export function renderAnalytics(doc: Document, report: ReportJson): HTMLElement {
  const root = doc.createElement("div");
  root.className = "analytics";

  const heading = doc.createElement("h3");
  heading.textContent = `${report.name}: ${report.iterations_completed} iterations`;
  root.appendChild(heading);

  if (report.best_action) {
    const best = doc.createElement("div");
    best.className = "best-action";
    const a = report.best_action;
    best.dataset.actionIndex = String(report.best_action_index);
    best.textContent =
      `believed best: alpha=${a.alpha} phi=${a.phi} a=${a.a} b=${a.b}` +
      (report.best_rollout
        ? ` (min h ${report.best_rollout.min_h}, reached=${report.best_rollout.reached_goal})`
        : "");
    root.appendChild(best);
  }

  const width = 560;
  const height = 260;
  const margin = 36;
  const n = Math.max(report.per_iteration.length, 1);
  let lo = 0;
  let hi = 0;
  const points: { it: number; minH: number }[] = [];
  for (const entry of report.per_iteration) {
    for (const r of Object.values(entry.rollouts)) {
      if (r.min_h !== null) {
        points.push({ it: entry.iteration, minH: r.min_h });
        lo = Math.min(lo, r.min_h);
        hi = Math.max(hi, r.min_h);
      }
    }
  }
  if (hi === lo) hi = lo + 1;
  const sx = (it: number) => margin + ((it - 0.5) / n) * (width - 2 * margin);
  const sy = (h: number) => height - margin - ((h - lo) / (hi - lo)) * (height - 2 * margin);

  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "min-h-scatter");

  const zero = doc.createElementNS(SVG_NS, "line");
  zero.setAttribute("x1", String(margin));
  zero.setAttribute("x2", String(width - margin));
  zero.setAttribute("y1", sy(0).toFixed(2));
  zero.setAttribute("y2", sy(0).toFixed(2));
  zero.setAttribute("class", "zero-line");
  zero.setAttribute("stroke-dasharray", "4 4");
  svg.appendChild(zero);

  for (const p of points) {
    const dot = doc.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", sx(p.it).toFixed(2));
    dot.setAttribute("cy", sy(p.minH).toFixed(2));
    dot.setAttribute("r", "4");
    dot.setAttribute("fill", colorFor(p.it, n));
    dot.setAttribute("class", "min-h-dot");
    dot.setAttribute("data-iteration", String(p.it));
    dot.setAttribute("data-min-h", String(p.minH));
    svg.appendChild(dot);
  }
  root.appendChild(svg);

  const table = doc.createElement("table");
  table.className = "iteration-table";
  const head = doc.createElement("tr");
  head.innerHTML = "<th>iteration</th><th>new actions</th><th>believed best</th>";
  table.appendChild(head);
  for (const entry of report.per_iteration) {
    const tr = doc.createElement("tr");
    tr.innerHTML =
      `<td>${entry.iteration}</td>` +
      `<td>${entry.new_actions.join(", ")}</td>` +
      `<td>${entry.believed_best}</td>`;
    table.appendChild(tr);
  }
  root.appendChild(table);
  return root;
}
