"""Campaign command line.

    campaign run --config cfg.json [--oracle | --serve --port 8000] --seed 3
    campaign export --session <id> --format csv|json
    campaign fig2 --lambdas -0.5,inf --runs 50

The data directory comes from CAMPAIGN_DATA_DIR (default ./campaign_data).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .actions import ActionGrid, DimSpec, GridSpec
from .learner import LearnerConfig
from .oracle import campaign_to_csv, campaign_to_json, run_campaign
from .prefgp import KernelConfig, LikelihoodConfig
from .service import SessionStore, data_dir_from_env, run_headless

VALUE_FLAGS = ("--lambdas",)  # may take values starting with '-'


def _merge_flag_values(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _parse_lambdas(text: str) -> list[float]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part in ("inf", "+inf", "none"):
            out.append(math.inf)
        else:
            out.append(float(part))
    return out


def cmd_run(args) -> int:
    with open(args.config) as fh:
        config_obj = json.load(fh)
    if args.seed is not None:
        config_obj["seed"] = args.seed
    if args.serve:
        import uvicorn

        from .httpapi import create_app
        store = SessionStore(args.data_dir)
        app = create_app(store)
        sid = store.create_session(config_obj)
        print(f"session {sid} created; serving on port {args.port}")
        uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
        return 0
    provider = "synthetic" if args.oracle else None
    report = run_headless(config_obj, data_dir=args.data_dir, provider=provider)
    print(json.dumps({"session_id": report["session_id"],
                      "best_action": report["best_action"],
                      "best_rollout": report["best_rollout"],
                      "report_hash": report["report_hash"]}, indent=2))
    return 0


def cmd_export(args) -> int:
    store = SessionStore(args.data_dir)
    report = store.get_report(args.session)
    if args.format == "json":
        sess = store.open_session(args.session)
        bundle = {"report": report, "dataset": sess.records()}
        text = json.dumps(bundle, indent=2)
    else:
        lines = ["iteration,action_index,alpha,phi,a,b,min_h,reached_goal,"
                 "time_to_goal,final_goal_distance,infeasible_step_count"]
        sess = store.open_session(args.session)
        for entry in report["per_iteration"]:
            for a_str, r in entry["rollouts"].items():
                act = sess.grid.action(int(a_str))
                lines.append(
                    f"{entry['iteration']},{a_str},{act.alpha},{act.phi},{act.a},{act.b},"
                    f"{r['min_h']},{r['reached_goal']},{r['time_to_goal']},"
                    f"{r['final_goal_distance']},{r['infeasible_step_count']}")
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def fig2_grid(points_per_dim: int = 41) -> GridSpec:
    """2-D synthetic slice (alpha x phi), small enough for exact prior draws."""
    return GridSpec(dims=(
        DimSpec("alpha", 0.5, 5.0, 4.5 / (points_per_dim - 1)),
        DimSpec("phi", 0.0, 1.0, 1.0 / (points_per_dim - 1)),
        DimSpec("a", 0.5, 0.5, 0.1),
        DimSpec("b", 0.02, 0.02, 0.005),
    ))


def cmd_fig2(args) -> int:
    lambdas = _parse_lambdas(args.lambdas)
    grid = ActionGrid(fig2_grid(args.grid_points))
    kcfg = KernelConfig(lengthscales=(args.lengthscale,) * 4)
    lcfg = LikelihoodConfig()
    config = LearnerConfig(actions_per_iteration=args.actions,
                           iterations=args.iterations)
    results = run_campaign(grid, lambdas, runs=args.runs, config=config,
                           kcfg=kcfg, lcfg=lcfg, seed=args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "campaign.csv").write_text(campaign_to_csv(results))
    with open(outdir / "campaign.json", "w") as fh:
        json.dump(campaign_to_json(results), fh, indent=2)
    for lam, agg in results.items():
        name = "inf" if math.isinf(lam) else f"{lam:g}"
        print(f"lambda={name}: final unsafe {agg.unsafe_mean[-1]:.2f} "
              f"+/- {agg.unsafe_stderr[-1]:.2f}, final pred err "
              f"{agg.pred_error_mean[-1]:.3f} +/- {agg.pred_error_stderr[-1]:.3f}")
    print(f"wrote {outdir / 'campaign.csv'} and {outdir / 'campaign.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="campaign")
    parser.add_argument("--data-dir", default=None,
                        help="override CAMPAIGN_DATA_DIR")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run or serve a campaign")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    mode = p_run.add_mutually_exclusive_group()
    mode.add_argument("--oracle", action="store_true",
                      help="headless with the synthetic-truth oracle")
    mode.add_argument("--serve", action="store_true",
                      help="start the HTTP service for a human rater")
    p_run.add_argument("--port", type=int, default=8000)
    p_run.set_defaults(func=cmd_run)

    p_exp = sub.add_parser("export", help="export session artifacts")
    p_exp.add_argument("--session", required=True)
    p_exp.add_argument("--format", choices=("csv", "json"), default="json")
    p_exp.add_argument("--out", default=None)
    p_exp.set_defaults(func=cmd_export)

    p_fig2 = sub.add_parser("fig2", help="synthetic matched-seed comparison study")
    p_fig2.add_argument("--lambdas", default="-0.5,inf")
    p_fig2.add_argument("--runs", type=int, default=50)
    p_fig2.add_argument("--iterations", type=int, default=30)
    p_fig2.add_argument("--actions", type=int, default=3)
    p_fig2.add_argument("--grid-points", type=int, default=41)
    p_fig2.add_argument("--lengthscale", type=float, default=4.0)
    p_fig2.add_argument("--seed", type=int, default=0)
    p_fig2.add_argument("--out", default="fig2_out")
    p_fig2.set_defaults(func=cmd_fig2)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = _merge_flag_values(list(sys.argv[1:] if argv is None else argv))
    args = build_parser().parse_args(argv)
    if args.data_dir is None:
        args.data_dir = data_dir_from_env()
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
