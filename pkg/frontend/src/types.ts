// Wire types mirroring the campaign service JSON payloads. The UI never
// recomputes metrics: everything rendered comes verbatim from these fields.

export interface ObstacleJson {
  center: [number, number];
  radius: number;
}

export interface EnvironmentJson {
  obstacles_true: ObstacleJson[];
  obstacles_measured: ObstacleJson[];
  heading_weight: number;
  measurement_bound: number;
  start: [number, number, number];
  goal: [number, number];
  goal_tolerance: number;
  disturbance_bound: number;
}

export interface RolloutJson {
  rollout_id: string;
  action_index: number;
  iteration: number;
  t: number[];
  x: number[];
  y: number[];
  psi: number[];
  v_cmd: number[];
  omega_cmd: number[];
  step_min_h: (number | null)[];
  min_h: number | null;
  reached_goal: boolean;
  time_to_goal: number | null;
  infeasible_step_count: number;
  clamp_violation_count: number;
  path_length: number;
  initial_goal_distance: number;
  final_goal_distance: number;
}

export interface ActionJson {
  alpha: number;
  phi: number;
  a: number;
  b: number;
}

export interface QueryItemJson {
  action_index: number;
  action: ActionJson;
  rollout_id: string | null;
  rollout: RolloutJson | null;
  gamma_delta: number | null;
}

export interface QueryJson {
  query_id: string;
  kind: "preference" | "ordinal";
  iteration: number;
  items: QueryItemJson[];
}

export interface QueriesResponse {
  session_id: string;
  version: number;
  completed: boolean;
  iteration: number | null;
  environment: EnvironmentJson;
  queries: QueryJson[];
}

export interface FeedbackAck {
  session_id: string;
  query_id: string;
  accepted: boolean;
  advanced: boolean;
  version: number;
  completed: boolean;
  iteration: number | null;
}

export interface RolloutSummaryJson {
  rollout_id: string;
  min_h: number | null;
  reached_goal: boolean;
  time_to_goal: number | null;
  final_goal_distance: number;
  infeasible_step_count: number;
}

export interface IterationHistoryJson {
  iteration: number;
  new_actions: number[];
  believed_best: number;
  rollouts: Record<string, RolloutSummaryJson>;
}

export interface ReportJson {
  name: string;
  iterations_completed: number;
  best_action_index: number | null;
  best_action: ActionJson | null;
  best_rollout: RolloutSummaryJson | null;
  per_iteration: IterationHistoryJson[];
  report_hash: string;
  session_id: string;
}

export type Verdict = "left" | "right" | "safe" | "unsafe" | "skip";
