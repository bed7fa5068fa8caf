// SVG rendering of a query view plus the playback scrubber. Numbers shown
// in badges come straight from the view model, which carries them verbatim
// from the payload; raw values are also attached as data attributes so
// tests can compare them without parsing formatted text.

import { QueryView, RolloutView } from "./model";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = doc.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

export function renderRolloutPanel(doc: Document, view: RolloutView, width: number, height: number): HTMLElement {
  const panel = doc.createElement("div");
  panel.className = "rollout-panel";
  panel.dataset.rolloutId = view.rolloutId ?? "";
  panel.dataset.actionIndex = String(view.actionIndex);

  const title = doc.createElement("div");
  title.className = "action-label";
  title.textContent = view.actionLabel;
  panel.appendChild(title);

  const svg = svgEl(doc, "svg", {
    width: String(width),
    height: String(height),
    viewBox: `0 0 ${width} ${height}`,
    class: "trajectory-svg",
  });

  for (const disc of view.discs) {
    svg.appendChild(svgEl(doc, "circle", {
      cx: disc.cx.toFixed(2),
      cy: disc.cy.toFixed(2),
      r: disc.r.toFixed(2),
      class: disc.measured ? "obstacle measured" : "obstacle true",
      ...(disc.measured ? { "stroke-dasharray": "6 4", fill: "none" } : {}),
    }));
  }
  svg.appendChild(svgEl(doc, "circle", {
    cx: view.goal.cx.toFixed(2),
    cy: view.goal.cy.toFixed(2),
    r: Math.max(view.goal.r, 4).toFixed(2),
    class: "goal",
  }));
  svg.appendChild(svgEl(doc, "circle", {
    cx: view.start.cx.toFixed(2),
    cy: view.start.cy.toFixed(2),
    r: "4",
    class: "start",
  }));
  if (view.polyline) {
    svg.appendChild(svgEl(doc, "polyline", {
      points: view.polyline,
      class: "trajectory",
      fill: "none",
    }));
  }
  const marker = svgEl(doc, "circle", { r: "5", class: "playback-marker" });
  if (view.samples.length > 0) {
    marker.setAttribute("cx", view.samples[0]!.x.toFixed(2));
    marker.setAttribute("cy", view.samples[0]!.y.toFixed(2));
  }
  svg.appendChild(marker);
  panel.appendChild(svg);

  const badges = doc.createElement("div");
  badges.className = "badges";

  const minH = doc.createElement("span");
  minH.className = view.unsafe ? "badge min-h unsafe" : "badge min-h safe";
  minH.dataset.minH = view.minH === null ? "null" : String(view.minH);
  minH.textContent = view.minH === null ? "min h: n/a" : `min h: ${view.minH.toFixed(4)}`;
  badges.appendChild(minH);

  const goalBadge = doc.createElement("span");
  goalBadge.className = view.reachedGoal ? "badge goal reached" : "badge goal missed";
  goalBadge.dataset.reachedGoal = String(view.reachedGoal);
  goalBadge.dataset.timeToGoal = view.timeToGoal === null ? "null" : String(view.timeToGoal);
  goalBadge.textContent = view.reachedGoal
    ? `reached goal in ${view.timeToGoal?.toFixed(2)} s`
    : "did not reach goal";
  badges.appendChild(goalBadge);

  const infeas = doc.createElement("span");
  infeas.className = view.infeasibleSteps > 0 ? "badge infeasible bad" : "badge infeasible";
  infeas.dataset.infeasibleSteps = String(view.infeasibleSteps);
  infeas.textContent = `infeasible steps: ${view.infeasibleSteps}`;
  badges.appendChild(infeas);

  if (view.gammaDelta !== null) {
    const gamma = doc.createElement("span");
    gamma.className = "badge gamma";
    gamma.dataset.gammaDelta = String(view.gammaDelta);
    gamma.textContent = `degradation floor -${view.gammaDelta.toFixed(4)}`;
    badges.appendChild(gamma);
  }
  panel.appendChild(badges);
  panel.appendChild(renderMinHStrip(doc, view, width));

  // scrubber drives the marker along the recorded 20 Hz samples
  const scrubber = doc.createElement("input");
  scrubber.type = "range";
  scrubber.min = "0";
  scrubber.max = String(Math.max(view.samples.length - 1, 0));
  scrubber.value = "0";
  scrubber.className = "scrubber";
  scrubber.addEventListener("input", () => {
    const i = Number(scrubber.value);
    const s = view.samples[i];
    if (s) {
      marker.setAttribute("cx", s.x.toFixed(2));
      marker.setAttribute("cy", s.y.toFixed(2));
    }
  });
  panel.appendChild(scrubber);
  return panel;
}

function renderMinHStrip(doc: Document, view: RolloutView, width: number): HTMLElement {
  // one-row gauge: the barrier floor reached by this rollout against the
  // zero line and (when a disturbance bound is active) the -gamma(delta)
  // reference line
  const holder = doc.createElement("div");
  holder.className = "min-h-strip";
  if (view.minH === null) return holder;
  const h = 26;
  const lo = Math.min(-0.1, view.minH, view.gammaDelta !== null ? -view.gammaDelta : 0) - 0.05;
  const hi = Math.max(0.2, view.minH) + 0.05;
  const toX = (v: number) => 6 + ((v - lo) / (hi - lo)) * (width - 12);
  const svg = svgEl(doc, "svg", {
    width: String(width), height: String(h), class: "min-h-gauge",
  });
  svg.appendChild(svgEl(doc, "line", {
    x1: "6", x2: String(width - 6), y1: String(h / 2), y2: String(h / 2),
    class: "gauge-axis", stroke: "#bbb",
  }));
  svg.appendChild(svgEl(doc, "line", {
    x1: toX(0).toFixed(1), x2: toX(0).toFixed(1), y1: "3", y2: String(h - 3),
    class: "zero-line", stroke: "#444",
  }));
  if (view.gammaDelta !== null) {
    svg.appendChild(svgEl(doc, "line", {
      x1: toX(-view.gammaDelta).toFixed(1), x2: toX(-view.gammaDelta).toFixed(1),
      y1: "3", y2: String(h - 3),
      class: "gamma-line", stroke: "#c9544a", "stroke-dasharray": "4 3",
    }));
  }
  svg.appendChild(svgEl(doc, "circle", {
    cx: toX(view.minH).toFixed(1), cy: String(h / 2), r: "5",
    class: "min-h-marker", fill: view.unsafe ? "#c9544a" : "#2e8b57",
  }));
  holder.appendChild(svg);
  return holder;
}

export function renderQuery(doc: Document, view: QueryView, width = 420, height = 320): HTMLElement {
  const root = doc.createElement("div");
  root.className = `query-view ${view.kind}`;
  root.dataset.queryId = view.queryId;
  const heading = doc.createElement("h3");
  heading.textContent = view.kind === "preference"
    ? `Iteration ${view.iteration}: which behavior do you prefer?`
    : `Iteration ${view.iteration}: is this behavior safe?`;
  root.appendChild(heading);
  const row = doc.createElement("div");
  row.className = "panels";
  for (const item of view.items) {
    row.appendChild(renderRolloutPanel(doc, item, width, height));
  }
  root.appendChild(row);
  return root;
}

export function renderErrorPanel(doc: Document, message: string): HTMLElement {
  const div = doc.createElement("div");
  div.className = "error-panel";
  div.textContent = message;
  return div;
}
