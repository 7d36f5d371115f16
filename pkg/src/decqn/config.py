"""Experiment configuration: dataclasses with strict (unknown-key rejecting) dict/YAML round-trip."""
from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import yaml

from decqn.critic import Aggregation, LossMode


class SchemaError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass
class AgentConfig:
    gamma: float = 0.99
    n_step: int = 3
    batch_size: int = 256
    lr: float = 1e-4
    hidden: int = 500
    clip: float = 40.0
    target_update_period: int = 100
    alpha: float = 0.6
    beta: float = 0.2
    epsilon: float = 0.1
    replay_capacity: int = 1_000_000
    min_fill: int = 1000
    learner_period: int = 1          # env steps per learner step
    huber_delta: float = 1.0
    use_per: bool = True
    use_double_q: bool = True
    use_nstep: bool = True
    optimistic: bool = False
    aggregation: Aggregation = Aggregation.MEAN
    loss_mode: LossMode = LossMode.JOINT
    enumerated_dqn: bool = False
    memory_budget_bytes: int = 8 * 2 ** 30
    dtype: str = "float64"

    def __post_init__(self):
        self.aggregation = Aggregation(self.aggregation)
        self.loss_mode = LossMode(self.loss_mode)
        for name in ("gamma", "lr", "clip", "huber_delta"):
            if getattr(self, name) <= 0:
                raise SchemaError(f"agent.{name}", "must be positive")
        for name in ("n_step", "batch_size", "hidden", "target_update_period", "replay_capacity",
                     "learner_period"):
            if getattr(self, name) < 1:
                raise SchemaError(f"agent.{name}", "must be >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise SchemaError("agent.epsilon", "must lie in [0, 1]")
        if self.dtype not in ("float64", "float32"):
            raise SchemaError("agent.dtype", "must be 'float64' or 'float32'")

    @property
    def effective_n(self) -> int:
        return self.n_step if self.use_nstep else 1

    @property
    def effective_alpha(self) -> float:
        return self.alpha if self.use_per else 0.0

    @property
    def effective_beta(self) -> float:
        return self.beta if self.use_per else 0.0


@dataclass
class EnvConfig:
    """``name`` is one of two_step, matrix_1step, pointmass, cartpole_swingup."""

    name: str = "cartpole_swingup"
    game: str = "penalty"                       # penalty | climbing (matrix_1step, pointmass)
    penalty_k: float = -100.0
    payoff: list | None = None                  # explicit matrix overrides ``game``
    two_step_payoffs: list | None = None        # [[2x2], [2x2]] for states 2 and 3
    reward_mode: str = "action"                 # pointmass: action | state
    reward_scale: float | None = None           # default 1 for matrix_1step, 0.01 for pointmass
    horizon: int = 1000
    dt: float | None = None                     # default 0.05 pointmass, 0.01 cartpole
    pos_bound: float = 2.0
    vel_bound: float = 1.0
    zone_threshold: float = 0.5
    m_cart: float = 1.0
    m_pole: float = 0.1
    pole_length: float = 0.5
    gravity: float = 9.81
    f_max: float = 10.0
    action_repeat: int = 2
    center_shaping: bool = False
    obs_noise: float = 0.0
    reward_noise: float = 0.0

    def __post_init__(self):
        if self.name not in ("two_step", "matrix_1step", "pointmass", "cartpole_swingup"):
            raise SchemaError("env.name", f"unknown environment '{self.name}'")
        if self.reward_mode not in ("action", "state"):
            raise SchemaError("env.reward_mode", "must be 'action' or 'state'")
        if self.obs_noise < 0 or self.reward_noise < 0:
            raise SchemaError("env", "noise scales must be non-negative")


@dataclass
class GridConfig:
    n_b: int | None = None          # default: the environment's native bin count
    lower: list | None = None       # default: environment action bounds
    upper: list | None = None


@dataclass
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    total_steps: int = 100_000
    eval_interval: int = 10_000
    eval_episodes: int = 10
    log_interval: int = 1000
    seeds: list = field(default_factory=lambda: list(range(10)))
    output_dir: str = "runs/default"
    occupancy_stages: list = field(default_factory=list)   # env steps at which to snapshot
    jsonl: bool = False

    def __post_init__(self):
        if self.total_steps < 0:
            raise SchemaError("total_steps", "must be >= 0")
        if self.eval_interval < 1 or self.log_interval < 1 or self.eval_episodes < 1:
            raise SchemaError("eval_interval", "intervals and episode counts must be >= 1")


def _is_dataclass_type(tp) -> bool:
    return isinstance(tp, type) and dataclasses.is_dataclass(tp)


def from_dict(cls, data: dict, path: str = ""):
    """Build ``cls`` from a plain dict, rejecting unknown keys with their dotted path."""
    if not isinstance(data, dict):
        raise SchemaError(path or "<root>", f"expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        p = f"{path}.{key}" if path else key
        if key not in names:
            raise SchemaError(p, "unknown key")
        tp = hints[key]
        if _is_dataclass_type(tp):
            kwargs[key] = from_dict(tp, value, p)
        else:
            kwargs[key] = _coerce(tp, value, p)
    return cls(**kwargs)


def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        tp = next(a for a in args if a is not type(None))
        return _coerce(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise SchemaError(path, f"expected bool, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise SchemaError(path, f"expected int, got {value!r}")
        return int(value)
    if tp is float:
        if isinstance(value, str):
            # YAML 1.1 reads exponent literals without a dot (1e-4) as strings
            try:
                return float(value)
            except ValueError:
                raise SchemaError(path, f"expected number, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(path, f"expected number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise SchemaError(path, f"expected string, got {value!r}")
        return value
    if isinstance(tp, type) and issubclass(tp, Enum):
        try:
            return tp(value)
        except ValueError:
            raise SchemaError(path, f"expected one of {[m.value for m in tp]}, got {value!r}") from None
    if tp is list or origin is list:
        if not isinstance(value, list):
            raise SchemaError(path, f"expected list, got {value!r}")
        return value
    return value


def to_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if dataclasses.is_dataclass(v):
            v = to_dict(v)
        elif isinstance(v, Enum):
            v = v.value
        out[f.name] = v
    return out


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.sub=value`` strings (values parsed as YAML scalars) to a raw config dict."""
    for item in overrides or ():
        if "=" not in item:
            raise SchemaError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise SchemaError(key, "cannot descend into a non-mapping")
        node[parts[-1]] = yaml.safe_load(raw)
    return data


def load_config(path, overrides=()) -> ExperimentConfig:
    data = yaml.safe_load(Path(path).read_text()) or {}
    return from_dict(ExperimentConfig, apply_overrides(data, overrides))


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


def json_schema(cls=ExperimentConfig) -> dict:
    """A JSON-schema rendering of the dataclass tree (additionalProperties: false everywhere)."""
    hints = typing.get_type_hints(cls)
    props = {}
    for f in dataclasses.fields(cls):
        tp = hints[f.name]
        props[f.name] = json_schema(tp) if _is_dataclass_type(tp) else _schema_of(tp)
    return {"type": "object", "properties": props, "additionalProperties": False}


def _schema_of(tp):
    origin, args = typing.get_origin(tp), typing.get_args(tp)
    if args and type(None) in args:
        inner = next(a for a in args if a is not type(None))
        return {"anyOf": [_schema_of(inner), {"type": "null"}]}
    if tp is bool:
        return {"type": "boolean"}
    if tp is int:
        return {"type": "integer"}
    if tp is float:
        return {"type": "number"}
    if tp is str:
        return {"type": "string"}
    if isinstance(tp, type) and issubclass(tp, Enum):
        return {"enum": [m.value for m in tp]}
    if tp is list or origin is list:
        return {"type": "array"}
    return {}
