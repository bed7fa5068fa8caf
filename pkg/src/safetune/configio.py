"""Campaign configuration: JSON schema validation and dataclass assembly."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import jsonschema

from .actions import ActionGrid, GridSpec
from .cbf import BarrierConfig, NominalGains, Obstacle
from .learner import LearnerConfig
from .prefgp import KernelConfig, LikelihoodConfig
from .sim import DisturbanceSpec, SimConfig

PROVIDERS = ("rollout_scorer", "synthetic")

_number = {"type": "number"}
_dim = {
    "type": "object",
    "properties": {"name": {"type": "string"}, "min": _number, "max": _number,
                   "step": {"type": "number", "exclusiveMinimum": 0}},
    "required": ["name", "min", "max", "step"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "grid": {"type": "array", "items": _dim, "minItems": 4, "maxItems": 4},
        "kernel": {
            "type": "object",
            "properties": {
                "signal_variance": {"type": "number", "exclusiveMinimum": 0},
                "lengthscales": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                                 "minItems": 4, "maxItems": 4},
            },
            "additionalProperties": False,
        },
        "likelihood": {
            "type": "object",
            "properties": {
                "pref_noise": {"type": "number", "exclusiveMinimum": 0},
                "ordinal_noise": {"type": "number", "exclusiveMinimum": 0},
                "threshold": _number,
            },
            "additionalProperties": False,
        },
        "learner": {
            "type": "object",
            "properties": {
                "actions_per_iteration": {"type": "integer", "minimum": 1},
                "iterations": {"type": "integer", "minimum": 1},
                "roi_confidence": {"anyOf": [_number, {"const": "inf"}]},
                "line_points": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "environment": {
            "type": "object",
            "properties": {
                "obstacles": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "center": {"type": "array", "items": _number,
                                       "minItems": 2, "maxItems": 2},
                            "radius": {"type": "number", "exclusiveMinimum": 0},
                        },
                        "required": ["center", "radius"],
                        "additionalProperties": False,
                    },
                },
                "heading_weight": {"type": "number", "exclusiveMinimum": 0},
                "measurement_bound": {"type": "number", "minimum": 0},
            },
            "required": ["obstacles", "heading_weight"],
            "additionalProperties": False,
        },
        "sim": {
            "type": "object",
            "properties": {
                "control_period": {"type": "number", "exclusiveMinimum": 0},
                "substep": {"type": "number", "exclusiveMinimum": 0},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "start": {"type": "array", "items": _number, "minItems": 3, "maxItems": 3},
                "goal": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                "goal_tolerance": {"type": "number", "exclusiveMinimum": 0},
                "measurement_shift": {"type": "array", "items": _number,
                                      "minItems": 2, "maxItems": 2},
                "disturbance": {
                    "type": "object",
                    "properties": {
                        "bound": {"type": "number", "minimum": 0},
                        "kind": {"enum": ["none", "constant-worst-case", "seeded-bounded-noise"]},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "gains": {
            "type": "object",
            "properties": {"kv": _number, "komega": _number, "c": _number},
            "additionalProperties": False,
        },
        "feedback": {
            "type": "object",
            "properties": {
                "provider": {"enum": list(PROVIDERS)},
                "auto_label_on_skip": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["environment"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Schema violation with a path-qualified message."""


@dataclass(frozen=True)
class CampaignConfig:
    name: str
    seed: int
    grid_spec: GridSpec
    kernel: KernelConfig
    likelihood: LikelihoodConfig
    learner: LearnerConfig
    environment: BarrierConfig
    sim: SimConfig
    gains: NominalGains
    provider: str = "rollout_scorer"
    auto_label_on_skip: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    def make_grid(self) -> ActionGrid:
        return ActionGrid(self.grid_spec)


def validate_config(obj: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path) or "(root)"
        raise ConfigError(f"{path}: {e.message}")


def load_config(obj: dict) -> CampaignConfig:
    """Validate and assemble; schema errors carry the offending path."""
    validate_config(obj)
    seed = int(obj.get("seed", 0))
    grid_spec = GridSpec.from_json(obj["grid"]) if "grid" in obj else GridSpec.default()

    k = obj.get("kernel", {})
    kernel = KernelConfig(signal_variance=k.get("signal_variance", 1.0),
                          lengthscales=tuple(k.get("lengthscales", (1.0, 1.0, 1.0, 1.0))))
    l = obj.get("likelihood", {})
    likelihood = LikelihoodConfig(pref_noise=l.get("pref_noise", 0.1),
                                  ordinal_noise=l.get("ordinal_noise", 0.1),
                                  threshold=l.get("threshold", 0.0))
    le = obj.get("learner", {})
    roi = le.get("roi_confidence", -0.5)
    learner = LearnerConfig(actions_per_iteration=le.get("actions_per_iteration", 3),
                            iterations=le.get("iterations", 30),
                            roi_confidence=math.inf if roi == "inf" else float(roi),
                            line_points=le.get("line_points", 25),
                            seed=seed)

    env = obj["environment"]
    obstacles = tuple(Obstacle((o["center"][0], o["center"][1]), o["radius"])
                      for o in env["obstacles"])
    s = obj.get("sim", {})
    shift = tuple(s.get("measurement_shift", (0.0, 0.0)))
    environment = BarrierConfig.with_shift(
        obstacles, shift, heading_weight=env["heading_weight"],
        measurement_bound=env.get("measurement_bound"))
    d = s.get("disturbance", {})
    sim = SimConfig(control_period=s.get("control_period", 0.05),
                    substep=s.get("substep", 0.001),
                    horizon=s.get("horizon", 40.0),
                    start=tuple(s.get("start", (0.0, 0.0, 0.0))),
                    goal=tuple(s.get("goal", (3.0, 0.0))),
                    goal_tolerance=s.get("goal_tolerance", 0.1),
                    disturbance=DisturbanceSpec(bound=d.get("bound", 0.0),
                                                kind=d.get("kind", "none")),
                    measurement_shift=shift)
    g = obj.get("gains", {})
    gains = NominalGains(kv=g.get("kv", 0.5), komega=g.get("komega", 1.0), c=g.get("c", 0.1))
    f = obj.get("feedback", {})
    return CampaignConfig(name=obj.get("name", "campaign"), seed=seed, grid_spec=grid_spec,
                          kernel=kernel, likelihood=likelihood, learner=learner,
                          environment=environment, sim=sim, gains=gains,
                          provider=f.get("provider", "rollout_scorer"),
                          auto_label_on_skip=f.get("auto_label_on_skip", False),
                          raw=obj)


def load_config_file(path) -> CampaignConfig:
    with open(path) as fh:
        return load_config(json.load(fh))
