// View-model and rendering invariants: every metric shown in the DOM equals
// the payload value verbatim (no client-side recomputation), geometry stays
// inside the panel, and badge styling follows the unsafe rule.

import { describe, expect, it } from "vitest";
import { buildQueryView, buildScale } from "../src/model";
import { renderQuery } from "../src/render";
import { EnvironmentJson, QueryJson, RolloutJson } from "../src/types";

// deterministic LCG so the property test replays identically
function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (s * 1664525 + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

function makeEnvironment(rand: () => number): EnvironmentJson {
  const obstacles = [];
  const n = 1 + Math.floor(rand() * 3);
  for (let i = 0; i < n; i++) {
    obstacles.push({
      center: [0.5 + 2 * rand(), -1 + 2 * rand()] as [number, number],
      radius: 0.3 + 0.3 * rand(),
    });
  }
  return {
    obstacles_true: obstacles,
    obstacles_measured: obstacles.map((o) => ({
      center: [o.center[0], o.center[1] - 0.1] as [number, number],
      radius: o.radius,
    })),
    heading_weight: 0.2,
    measurement_bound: 0.1,
    start: [0, 0, 0],
    goal: [3, 0],
    goal_tolerance: 0.1,
    disturbance_bound: rand() < 0.5 ? 0 : 1,
  };
}

function makeRollout(rand: () => number, id: string, action: number): RolloutJson {
  const steps = 5 + Math.floor(rand() * 40);
  const t: number[] = [];
  const x: number[] = [];
  const y: number[] = [];
  const psi: number[] = [];
  for (let i = 0; i <= steps; i++) {
    t.push(i * 0.05);
    x.push((3 * i) / steps + 0.1 * (rand() - 0.5));
    y.push(0.4 * (rand() - 0.5));
    psi.push(0.3 * (rand() - 0.5));
  }
  const minH = rand() < 0.15 ? null : Math.round((rand() - 0.3) * 1e4) / 1e4;
  return {
    rollout_id: id,
    action_index: action,
    iteration: 1,
    t,
    x,
    y,
    psi,
    v_cmd: t.slice(1).map(() => 0.3 * rand()),
    omega_cmd: t.slice(1).map(() => 0.8 * (rand() - 0.5)),
    step_min_h: t.map(() => (rand() < 0.1 ? null : rand() - 0.3)),
    min_h: minH,
    reached_goal: rand() < 0.5,
    time_to_goal: rand() < 0.5 ? null : Math.round(rand() * 150) / 10,
    infeasible_step_count: rand() < 0.7 ? 0 : Math.floor(rand() * 20),
    clamp_violation_count: 0,
    path_length: 3 + rand(),
    initial_goal_distance: 3,
    final_goal_distance: 3 * rand(),
  };
}

function makeQuery(rand: () => number, kind: "preference" | "ordinal"): QueryJson {
  const items = [];
  const sides = kind === "preference" ? 2 : 1;
  for (let s = 0; s < sides; s++) {
    const action = Math.floor(rand() * 13310);
    items.push({
      action_index: action,
      action: { alpha: 0.5 + rand() * 4.5, phi: rand(), a: rand(), b: 0.05 * rand() },
      rollout_id: `i0001-a${action}`,
      rollout: makeRollout(rand, `i0001-a${action}`, action),
      gamma_delta: rand() < 0.5 ? null : rand() / 4,
    });
  }
  return { query_id: `i0001-q${Math.floor(rand() * 100)}`, kind, iteration: 1, items };
}

describe("view model", () => {
  it("passes every rendered metric through verbatim (50 random payloads)", () => {
    for (let trial = 0; trial < 50; trial++) {
      const rand = lcg(1000 + trial);
      const env = makeEnvironment(rand);
      const kind = rand() < 0.5 ? "preference" : "ordinal";
      const query = makeQuery(rand, kind);
      const view = buildQueryView(query, env);
      const el = renderQuery(document, view);

      const panels = el.querySelectorAll(".rollout-panel");
      expect(panels.length).toBe(query.items.length);
      query.items.forEach((item, i) => {
        const panel = panels[i]!;
        const r = item.rollout!;
        const minH = panel.querySelector(".badge.min-h") as HTMLElement;
        expect(minH.dataset.minH).toBe(r.min_h === null ? "null" : String(r.min_h));
        const goal = panel.querySelector(".badge.goal") as HTMLElement;
        expect(goal.dataset.reachedGoal).toBe(String(r.reached_goal));
        expect(goal.dataset.timeToGoal).toBe(
          r.time_to_goal === null ? "null" : String(r.time_to_goal),
        );
        const infeas = panel.querySelector(".badge.infeasible") as HTMLElement;
        expect(infeas.dataset.infeasibleSteps).toBe(String(r.infeasible_step_count));
        const gamma = panel.querySelector(".badge.gamma") as HTMLElement | null;
        if (item.gamma_delta === null) {
          expect(gamma).toBeNull();
        } else {
          expect(gamma!.dataset.gammaDelta).toBe(String(item.gamma_delta));
        }
        // unsafe styling rule: min_h < 0 or any infeasible step
        const unsafe = (r.min_h !== null && r.min_h < 0) || r.infeasible_step_count > 0;
        expect(minH.className.includes("unsafe")).toBe(unsafe);
        // polyline has one vertex per sample
        const poly = panel.querySelector("polyline");
        if (r.x.length > 0) {
          expect(poly!.getAttribute("points")!.split(" ").length).toBe(r.x.length);
        }
      });
    }
  });

  it("two distinct rollouts render two distinct polylines", () => {
    const rand = lcg(7);
    const env = makeEnvironment(rand);
    const query = makeQuery(rand, "preference");
    const view = buildQueryView(query, env);
    const el = renderQuery(document, view);
    const polys = el.querySelectorAll("polyline");
    expect(polys.length).toBe(2);
    expect(polys[0]!.getAttribute("points")).not.toBe(polys[1]!.getAttribute("points"));
  });

  it("renders no obstacle discs for an empty obstacle field", () => {
    const rand = lcg(9);
    const env = makeEnvironment(rand);
    env.obstacles_true = [];
    env.obstacles_measured = [];
    const query = makeQuery(rand, "ordinal");
    const view = buildQueryView(query, env);
    const el = renderQuery(document, view);
    expect(el.querySelectorAll(".obstacle").length).toBe(0);
  });

  it("keeps all geometry inside the panel bounds", () => {
    for (let trial = 0; trial < 20; trial++) {
      const rand = lcg(300 + trial);
      const env = makeEnvironment(rand);
      const query = makeQuery(rand, "preference");
      const view = buildQueryView(query, env, 420, 320);
      for (const item of view.items) {
        for (const s of item.samples) {
          expect(s.x).toBeGreaterThanOrEqual(0);
          expect(s.x).toBeLessThanOrEqual(420);
          expect(s.y).toBeGreaterThanOrEqual(0);
          expect(s.y).toBeLessThanOrEqual(320);
        }
      }
    }
  });

  it("scrubber moves the playback marker along the samples", () => {
    const rand = lcg(11);
    const env = makeEnvironment(rand);
    const query = makeQuery(rand, "ordinal");
    const view = buildQueryView(query, env);
    const el = renderQuery(document, view);
    document.body.appendChild(el);
    const scrubber = el.querySelector(".scrubber") as HTMLInputElement;
    const marker = el.querySelector(".playback-marker") as SVGCircleElement;
    const last = view.items[0]!.samples.length - 1;
    scrubber.value = String(last);
    scrubber.dispatchEvent(new Event("input"));
    expect(marker.getAttribute("cx")).toBe(view.items[0]!.samples[last]!.x.toFixed(2));
    document.body.removeChild(el);
  });

  it("shares one scale across both panels of a preference query", () => {
    const rand = lcg(13);
    const env = makeEnvironment(rand);
    const query = makeQuery(rand, "preference");
    const scale = buildScale(env, query.items.map((i) => i.rollout), 420, 320);
    const view = buildQueryView(query, env);
    // the goal lands on identical pixels in both panels
    expect(view.items[0]!.goal).toEqual(view.items[1]!.goal);
    expect(scale.toX(env.goal[0])).toBeCloseTo(view.items[0]!.goal.cx, 6);
  });
});
