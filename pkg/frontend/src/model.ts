// Pure view-model construction: service payload in, drawable geometry out.
// All metrics pass through verbatim; the only computation here is the
// world-to-pixel transform shared by both panels of a query.

import { EnvironmentJson, QueryItemJson, QueryJson, RolloutJson } from "./types";

export interface Scale {
  toX(wx: number): number;
  toY(wy: number): number;
  toR(wr: number): number;
  width: number;
  height: number;
}

export interface DiscView {
  cx: number;
  cy: number;
  r: number;
  measured: boolean;
}

export interface MarkerSample {
  x: number;
  y: number;
  psi: number;
  t: number;
}

export interface RolloutView {
  rolloutId: string | null;
  actionIndex: number;
  actionLabel: string;
  polyline: string;
  discs: DiscView[];
  goal: { cx: number; cy: number; r: number };
  start: { cx: number; cy: number };
  minH: number | null;
  reachedGoal: boolean;
  timeToGoal: number | null;
  infeasibleSteps: number;
  gammaDelta: number | null;
  unsafe: boolean;
  samples: MarkerSample[];
}

export interface QueryView {
  queryId: string;
  kind: "preference" | "ordinal";
  iteration: number;
  items: RolloutView[];
}

function bounds(env: EnvironmentJson, rollouts: (RolloutJson | null)[]) {
  let xs: number[] = [env.start[0], env.goal[0]];
  let ys: number[] = [env.start[1], env.goal[1]];
  for (const list of [env.obstacles_true, env.obstacles_measured]) {
    for (const o of list) {
      xs.push(o.center[0] - o.radius, o.center[0] + o.radius);
      ys.push(o.center[1] - o.radius, o.center[1] + o.radius);
    }
  }
  for (const r of rollouts) {
    if (!r) continue;
    xs = xs.concat(r.x);
    ys = ys.concat(r.y);
  }
  return {
    xmin: Math.min(...xs),
    xmax: Math.max(...xs),
    ymin: Math.min(...ys),
    ymax: Math.max(...ys),
  };
}

export function buildScale(
  env: EnvironmentJson,
  rollouts: (RolloutJson | null)[],
  width: number,
  height: number,
  margin = 20,
): Scale {
  const b = bounds(env, rollouts);
  const spanX = Math.max(b.xmax - b.xmin, 1e-6);
  const spanY = Math.max(b.ymax - b.ymin, 1e-6);
  const k = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  const offX = margin + (width - 2 * margin - k * spanX) / 2;
  const offY = margin + (height - 2 * margin - k * spanY) / 2;
  return {
    toX: (wx) => offX + k * (wx - b.xmin),
    toY: (wy) => height - (offY + k * (wy - b.ymin)), // world y up, svg y down
    toR: (wr) => k * wr,
    width,
    height,
  };
}

export function actionLabel(item: QueryItemJson): string {
  const a = item.action;
  return `alpha=${a.alpha} phi=${a.phi} a=${a.a} b=${a.b}`;
}

export function buildRolloutView(
  item: QueryItemJson,
  env: EnvironmentJson,
  scale: Scale,
): RolloutView {
  const r = item.rollout;
  const discs: DiscView[] = [];
  for (const o of env.obstacles_true) {
    discs.push({
      cx: scale.toX(o.center[0]),
      cy: scale.toY(o.center[1]),
      r: scale.toR(o.radius),
      measured: false,
    });
  }
  for (const o of env.obstacles_measured) {
    discs.push({
      cx: scale.toX(o.center[0]),
      cy: scale.toY(o.center[1]),
      r: scale.toR(o.radius),
      measured: true,
    });
  }
  const samples: MarkerSample[] = [];
  let polyline = "";
  if (r) {
    const pts: string[] = [];
    for (let i = 0; i < r.x.length; i++) {
      const px = scale.toX(r.x[i]!);
      const py = scale.toY(r.y[i]!);
      pts.push(`${px.toFixed(2)},${py.toFixed(2)}`);
      samples.push({ x: px, y: py, psi: r.psi[i]!, t: r.t[i]! });
    }
    polyline = pts.join(" ");
  }
  const minH = r ? r.min_h : null;
  const unsafe = (minH !== null && minH < 0) || (r ? r.infeasible_step_count > 0 : false);
  return {
    rolloutId: item.rollout_id,
    actionIndex: item.action_index,
    actionLabel: actionLabel(item),
    polyline,
    discs,
    goal: {
      cx: scale.toX(env.goal[0]),
      cy: scale.toY(env.goal[1]),
      r: scale.toR(env.goal_tolerance),
    },
    start: { cx: scale.toX(env.start[0]), cy: scale.toY(env.start[1]) },
    minH,
    reachedGoal: r ? r.reached_goal : false,
    timeToGoal: r ? r.time_to_goal : null,
    infeasibleSteps: r ? r.infeasible_step_count : 0,
    gammaDelta: item.gamma_delta,
    unsafe,
    samples,
  };
}

export function buildQueryView(
  query: QueryJson,
  env: EnvironmentJson,
  width = 420,
  height = 320,
): QueryView {
  const rollouts = query.items.map((it) => it.rollout);
  const scale = buildScale(env, rollouts, width, height);
  return {
    queryId: query.query_id,
    kind: query.kind,
    iteration: query.iteration,
    items: query.items.map((it) => buildRolloutView(it, env, scale)),
  };
}
