"""Experiment configuration: defaults, validation and JSON round-trip."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .environments import EnvironmentLevel
from .agent import ModelMode
from .recommender import RejectionScheme

SWEEPABLE = {"beta": "agent", "mbus": "agent"}
ARM_REFRESH = ("per_step", "per_entry")
MISREP_TARGETS = ("environment", "mb_model")


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` holds ``(json_path, rule)`` pairs."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{p}: {r}" for p, r in problems))


@dataclass
class AgentConfig:
    alpha: float = 0.1
    gamma: float = 0.9
    beta: float = 0.5
    epsilon: float = 0.3
    epsilon_decay: float = 0.999
    epsilon_min: float = 0.01
    mbus: int = 1
    model_mode: str = ModelMode.LEARNED.value
    tie_tol: float = 1e-9
    q_init: float = 0.0


@dataclass
class RecommenderConfig:
    n_arms: int = 4
    eta: float = 0.05
    epsilon_r: float = 0.1
    rejection_scheme: str = RejectionScheme.NEUTRAL.value
    q_init: float = 0.0
    arm_refresh: str = "per_step"


@dataclass
class MisrepresentationConfig:
    enabled: bool = False
    target: str = "environment"


@dataclass
class ExperimentConfig:
    level: str = EnvironmentLevel.REFINED.value
    misrepresentation: MisrepresentationConfig = field(default_factory=MisrepresentationConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    recommender: RecommenderConfig = field(default_factory=RecommenderConfig)
    environment_overrides: dict = field(default_factory=dict)
    horizon: int = 1000
    n_replications: int = 900
    base_seed: int = 20240917
    sweep: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return asdict(self)

    def replace(self, **dotted: Any) -> "ExperimentConfig":
        """Copy with ``section.key`` or top-level overrides applied, then validated."""
        doc = self.to_json_dict()
        for key, value in dotted.items():
            section, _, name = key.rpartition(".")
            target = doc[section] if section else doc
            target[name] = value
        return config_from_dict(doc)


def _check_range(problems, path, value, lo, hi, lo_open=False, hi_open=False):
    bad = value < lo or value > hi or (lo_open and value == lo) or (hi_open and value == hi)
    if bad:
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        problems.append((path, f"out of range {lb}{lo:g},{hi:g}{rb}"))


def _section(cls, raw: Any, path: str, problems: list):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        problems.append((path, "must be an object"))
        return cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            problems.append((f"{path}.{key}", "unknown key"))
            continue
        default = getattr(cls(), key)
        try:
            if isinstance(default, bool):
                if not isinstance(value, bool):
                    raise TypeError
            elif isinstance(default, int):
                if isinstance(value, bool) or int(value) != value:
                    raise TypeError
                value = int(value)
            elif isinstance(default, float):
                if isinstance(value, bool):
                    raise TypeError
                value = float(value)
            elif isinstance(default, str):
                if not isinstance(value, str):
                    raise TypeError
        except (TypeError, ValueError):
            problems.append((f"{path}.{key}", f"expected {type(default).__name__}"))
            continue
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Apply defaults to a raw JSON document and validate every field."""
    if not isinstance(doc, dict):
        raise ConfigError([("$", "config must be a JSON object")])
    problems: list[tuple[str, str]] = []
    top_known = {f.name for f in fields(ExperimentConfig)}
    for key in doc:
        if key not in top_known:
            problems.append((key, "unknown key"))

    agent = _section(AgentConfig, doc.get("agent"), "agent", problems)
    rec = _section(RecommenderConfig, doc.get("recommender"), "recommender", problems)
    mis = _section(MisrepresentationConfig, doc.get("misrepresentation"), "misrepresentation", problems)

    cfg = ExperimentConfig(agent=agent, recommender=rec, misrepresentation=mis)
    for key in ("horizon", "n_replications", "base_seed"):
        if key in doc:
            value = doc[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
                problems.append((key, "expected integer"))
            else:
                setattr(cfg, key, int(value))
    if "level" in doc:
        cfg.level = doc["level"]
    try:
        cfg.level = EnvironmentLevel(cfg.level).value
    except ValueError:
        problems.append(("level", f"must be one of {[e.value for e in EnvironmentLevel]}"))

    overrides = doc.get("environment_overrides", {}) or {}
    if not isinstance(overrides, dict):
        problems.append(("environment_overrides", "must be an object"))
        overrides = {}
    cfg.environment_overrides = copy.deepcopy(overrides)

    sweep = doc.get("sweep", {}) or {}
    if not isinstance(sweep, dict):
        problems.append(("sweep", "must be an object"))
        sweep = {}
    clean_sweep = {}
    for key, values in sweep.items():
        if key not in SWEEPABLE:
            problems.append((f"sweep.{key}", f"unknown sweep parameter (supported: {sorted(SWEEPABLE)})"))
        elif not isinstance(values, list) or not values:
            problems.append((f"sweep.{key}", "must be a non-empty list"))
        else:
            clean_sweep[key] = list(values)
    cfg.sweep = clean_sweep

    a = cfg.agent
    _check_range(problems, "agent.alpha", a.alpha, 0.0, 1.0, lo_open=True)
    _check_range(problems, "agent.gamma", a.gamma, 0.0, 1.0, hi_open=True)
    _check_range(problems, "agent.beta", a.beta, 0.0, 1.0)
    _check_range(problems, "agent.epsilon", a.epsilon, 0.0, 1.0)
    _check_range(problems, "agent.epsilon_min", a.epsilon_min, 0.0, 1.0)
    _check_range(problems, "agent.epsilon_decay", a.epsilon_decay, 0.0, 1.0, lo_open=True)
    if a.epsilon < a.epsilon_min:
        problems.append(("agent.epsilon", "must be >= agent.epsilon_min"))
    if a.mbus < 0:
        problems.append(("agent.mbus", "must be >= 0"))
    if a.tie_tol < 0:
        problems.append(("agent.tie_tol", "must be >= 0"))
    if a.model_mode not in [m.value for m in ModelMode]:
        problems.append(("agent.model_mode", f"must be one of {[m.value for m in ModelMode]}"))

    r = cfg.recommender
    if r.n_arms < 1:
        problems.append(("recommender.n_arms", "must be >= 1"))
    _check_range(problems, "recommender.eta", r.eta, 0.0, 1.0, lo_open=True)
    _check_range(problems, "recommender.epsilon_r", r.epsilon_r, 0.0, 1.0)
    if r.rejection_scheme not in [s.value for s in RejectionScheme]:
        problems.append(("recommender.rejection_scheme", f"must be one of {[s.value for s in RejectionScheme]}"))
    if r.arm_refresh not in ARM_REFRESH:
        problems.append(("recommender.arm_refresh", f"must be one of {list(ARM_REFRESH)}"))

    if cfg.misrepresentation.target not in MISREP_TARGETS:
        problems.append(("misrepresentation.target", f"must be one of {list(MISREP_TARGETS)}"))
    if cfg.horizon < 1:
        problems.append(("horizon", "must be >= 1"))
    if cfg.n_replications < 1:
        problems.append(("n_replications", "must be >= 1"))
    if not 0 <= cfg.base_seed < 2**64:
        problems.append(("base_seed", "must be a 64-bit unsigned integer"))

    for key, values in cfg.sweep.items():
        for i, v in enumerate(values):
            sub = copy.deepcopy(doc.get("agent") or {})
            sub[key] = v
            inner: list = []
            trial = _section(AgentConfig, sub, "agent", inner)
            if not inner:
                if key == "beta":
                    _check_range(inner, "agent.beta", trial.beta, 0.0, 1.0)
                elif trial.mbus < 0:
                    inner.append(("agent.mbus", "must be >= 0"))
            problems.extend((f"sweep.{key}[{i}]", rule) for _, rule in inner)

    if not problems:
        from .harness import build_world

        try:
            build_world(cfg)
        except ConfigError as exc:
            problems.extend(exc.problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path: str | Path, out_dir: str | Path | None = None) -> ExperimentConfig:
    """Read, default and validate a config file.

    When ``out_dir`` is given, the fully resolved config is written there as
    ``resolved_config.json``.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError([("$", f"config file not found: {path}")])
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError([("$", f"malformed JSON: {exc}")]) from None
    cfg = config_from_dict(doc)
    if out_dir is not None:
        write_resolved(cfg, out_dir)
    return cfg


def write_resolved(cfg: ExperimentConfig, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "resolved_config.json"
    target.write_text(json.dumps(cfg.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return target
