"""Tabular MDP data model, validation, sampling and reference value iteration.

Q-tables throughout the package are arrays of shape ``(..., n_states,
max_actions)``. States with fewer actions than ``max_actions`` are padded
with ``-inf`` so that maxima and argmaxima ignore the padding without a
separate mask.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

PROB_TOL = 1e-9


class ContractError(ValueError):
    """Raised when an operation is called outside its preconditions."""


@dataclass(frozen=True)
class Violation:
    location: str
    rule: str
    value: Any = None

    def __str__(self) -> str:
        return f"{self.location}: {self.rule}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class StepOutcome:
    next_state: int
    reward: float
    terminal: bool = False


@dataclass
class EnvironmentSpec:
    """Full tabular MDP.

    Parameters
    ----------
    n_states : int
        Number of states; states are ``0..n_states-1``.
    state_labels : list of str
        Human-readable name per state.
    actions_per_state : list of int
        Number of actions available in each state.
    transitions : dict
        ``(s, a) -> [(s2, p), ...]``. Entries are kept sorted by next state,
        which is the order used for inverse-CDF sampling.
    rewards : dict
        ``(s, a, s2) -> r``. Missing entries are filled with 0 on
        construction so the table is total over the transition support.
    start_state : int
    interaction_states : frozenset of int
        States in which the recommender acts.
    gamma_reference : float
        Discount used for the addiction reference.
    arm_modulation : ArmTable or None
        Per-arm reward / risk table (see :mod:`socialrl.environments`).
    misrepresented : bool
        Exempts the Healthy state from the reachability check.

    Notes
    -----
    Treat instances as immutable; dense arrays are cached on first use.
    """

    n_states: int
    state_labels: list[str]
    actions_per_state: list[int]
    transitions: dict[tuple[int, int], list[tuple[int, float]]]
    rewards: dict[tuple[int, int, int], float] = field(default_factory=dict)
    start_state: int = 0
    interaction_states: frozenset[int] = frozenset()
    gamma_reference: float = 0.9
    arm_modulation: Any = None
    misrepresented: bool = False

    def __post_init__(self) -> None:
        self.interaction_states = frozenset(int(s) for s in self.interaction_states)
        canon = {}
        for (s, a), row in self.transitions.items():
            merged: dict[int, float] = {}
            for s2, p in row:
                merged[int(s2)] = merged.get(int(s2), 0.0) + float(p)
            canon[(int(s), int(a))] = sorted(merged.items())
        self.transitions = canon
        rewards = {(int(s), int(a), int(s2)): float(r) for (s, a, s2), r in self.rewards.items()}
        for (s, a), row in self.transitions.items():
            for s2, _ in row:
                rewards.setdefault((s, a, s2), 0.0)
        self.rewards = rewards

    @property
    def max_actions(self) -> int:
        return max(self.actions_per_state)

    def index(self, label: str) -> int:
        try:
            return self.state_labels.index(label)
        except ValueError:
            raise ContractError(f"no state labeled {label!r}") from None

    def is_valid_pair(self, s: int, a: int) -> bool:
        return 0 <= s < self.n_states and 0 <= a < self.actions_per_state[s]

    @cached_property
    def action_mask(self) -> np.ndarray:
        """Boolean ``(S, A)`` array of valid actions."""
        mask = np.zeros((self.n_states, self.max_actions), dtype=bool)
        for s, n in enumerate(self.actions_per_state):
            mask[s, :n] = True
        return mask

    @cached_property
    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense ``(P, R)`` arrays of shape ``(S, A, S)``.

        Padded actions get a zero row; callers rely on :attr:`action_mask`.
        """
        S, A = self.n_states, self.max_actions
        P = np.zeros((S, A, S))
        R = np.zeros((S, A, S))
        for (s, a), row in self.transitions.items():
            for s2, p in row:
                P[s, a, s2] = p
                R[s, a, s2] = self.rewards.get((s, a, s2), 0.0)
        return P, R

    def with_changes(self, **changes: Any) -> "EnvironmentSpec":
        fields = dict(
            n_states=self.n_states,
            state_labels=list(self.state_labels),
            actions_per_state=list(self.actions_per_state),
            transitions={k: list(v) for k, v in self.transitions.items()},
            rewards=dict(self.rewards),
            start_state=self.start_state,
            interaction_states=self.interaction_states,
            gamma_reference=self.gamma_reference,
            arm_modulation=self.arm_modulation,
            misrepresented=self.misrepresented,
        )
        fields.update(changes)
        return EnvironmentSpec(**fields)

    # -- serialization -------------------------------------------------

    def to_json_dict(self) -> dict:
        doc = {
            "n_states": self.n_states,
            "state_labels": list(self.state_labels),
            "actions_per_state": list(self.actions_per_state),
            "transitions": [
                {"s": s, "a": a, "next": [[s2, p] for s2, p in row]}
                for (s, a), row in sorted(self.transitions.items())
            ],
            "rewards": [
                {"s": s, "a": a, "s2": s2, "r": r} for (s, a, s2), r in sorted(self.rewards.items())
            ],
            "start_state": self.start_state,
            "interaction_states": sorted(self.interaction_states),
            "gamma_reference": self.gamma_reference,
        }
        if self.arm_modulation is not None:
            doc["arm_modulation"] = self.arm_modulation.to_json_dict()
        if self.misrepresented:
            doc["misrepresented"] = True
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "EnvironmentSpec":
        from .environments import ArmTable

        arm = doc.get("arm_modulation")
        return cls(
            n_states=int(doc["n_states"]),
            state_labels=list(doc["state_labels"]),
            actions_per_state=[int(n) for n in doc["actions_per_state"]],
            transitions={
                (int(e["s"]), int(e["a"])): [(int(s2), float(p)) for s2, p in e["next"]]
                for e in doc["transitions"]
            },
            rewards={(int(e["s"]), int(e["a"]), int(e["s2"])): float(e["r"]) for e in doc.get("rewards", [])},
            start_state=int(doc.get("start_state", 0)),
            interaction_states=frozenset(doc.get("interaction_states", [])),
            gamma_reference=float(doc.get("gamma_reference", 0.9)),
            arm_modulation=ArmTable.from_json_dict(arm) if arm is not None else None,
            misrepresented=bool(doc.get("misrepresented", False)),
        )


def save_spec(spec: EnvironmentSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec.to_json_dict(), indent=2) + "\n", encoding="utf-8")


def load_spec(path: str | Path) -> EnvironmentSpec:
    """Read a JSON environment document and validate it."""
    spec = EnvironmentSpec.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    report = validate_spec(spec)
    if not report.ok:
        raise ContractError("invalid environment: " + "; ".join(str(v) for v in report.violations))
    return spec


# -- validation ----------------------------------------------------------


def reachable_states(spec: EnvironmentSpec) -> set[int]:
    """Breadth-first closure from the start state over nonzero-probability edges."""
    seen = {spec.start_state}
    queue = deque([spec.start_state])
    while queue:
        s = queue.popleft()
        for a in range(spec.actions_per_state[s]):
            for s2, p in spec.transitions.get((s, a), []):
                if p > 0 and s2 not in seen:
                    seen.add(s2)
                    queue.append(s2)
    return seen


def validate_spec(spec: EnvironmentSpec) -> ValidationReport:
    """Check every structural invariant of ``spec``.

    Violations are returned as data; nothing is raised.
    """
    out: list[Violation] = []
    S = spec.n_states
    if S < 1:
        return ValidationReport((Violation("n_states", "must be >= 1", S),))
    if len(spec.state_labels) != S:
        out.append(Violation("state_labels", "length must equal n_states", len(spec.state_labels)))
    if len(spec.actions_per_state) != S:
        return ValidationReport(
            tuple(out) + (Violation("actions_per_state", "length must equal n_states", len(spec.actions_per_state)),)
        )
    for s, n in enumerate(spec.actions_per_state):
        if n < 1:
            out.append(Violation(f"actions_per_state[{s}]", "every state needs at least one action", n))
    if not 0 <= spec.start_state < S:
        out.append(Violation("start_state", "invalid state id", spec.start_state))
    for s in sorted(spec.interaction_states):
        if not 0 <= s < S:
            out.append(Violation("interaction_states", "invalid state id", s))
    if not 0.0 <= spec.gamma_reference < 1.0:
        out.append(Violation("gamma_reference", "must lie in [0,1)", spec.gamma_reference))

    for s in range(S):
        for a in range(max(spec.actions_per_state[s], 0)):
            if (s, a) not in spec.transitions:
                out.append(Violation(f"row (s={s},a={a})", "missing transition row"))
    for (s, a), row in spec.transitions.items():
        loc = f"row (s={s},a={a})"
        if not spec.is_valid_pair(s, a):
            out.append(Violation(loc, "invalid (state, action) pair"))
            continue
        total = 0.0
        for s2, p in row:
            if not 0 <= s2 < S:
                out.append(Violation(loc, "next state out of range", s2))
            if p < 0:
                out.append(Violation(loc, "negative probability", p))
            elif p > 1:
                out.append(Violation(loc, "probability above 1", p))
            total += p
        if abs(total - 1.0) > PROB_TOL:
            out.append(Violation(loc, f"row (s={s},a={a}) sums to {total:.12g}", total))
    for (s, a, s2), r in spec.rewards.items():
        if not np.isfinite(r):
            out.append(Violation(f"reward (s={s},a={a},s2={s2})", "reward must be finite", r))

    if spec.arm_modulation is not None:
        out.extend(spec.arm_modulation.violations(spec))

    if 0 <= spec.start_state < S and not out:
        exempt = set()
        if spec.misrepresented and "Healthy" in spec.state_labels:
            exempt.add(spec.state_labels.index("Healthy"))
        for s in sorted(set(range(S)) - reachable_states(spec) - exempt):
            out.append(Violation(f"state {s}", "unreachable from start_state", spec.state_labels[s]))
    return ValidationReport(tuple(out))


# -- sampling --------------------------------------------------------------


def cdf_table(P: np.ndarray) -> np.ndarray:
    """Cumulative distributions along the last axis for inverse-CDF sampling.

    The cumulative value at and after the last nonzero entry is pinned to
    exactly 1.0 so rounding in the running sum can never select a
    zero-probability tail entry.
    """
    cdf = np.zeros_like(P)
    acc = np.zeros(P.shape[:-1])
    for t in range(P.shape[-1]):
        acc = acc + P[..., t]
        cdf[..., t] = acc
    nz = P > 0
    last = P.shape[-1] - 1 - np.argmax(nz[..., ::-1], axis=-1)
    tail = np.arange(P.shape[-1]) >= last[..., None]
    cdf[tail] = 1.0
    return cdf


def sample_index(cdf_rows: np.ndarray, u: np.ndarray | float) -> np.ndarray:
    """Inverse-CDF draw: first index whose cumulative mass exceeds ``u``."""
    u = np.asarray(u)
    return (cdf_rows <= u[..., None]).sum(axis=-1)


def step(spec: EnvironmentSpec, state: int, action: int, rng: np.random.Generator) -> StepOutcome:
    if not spec.is_valid_pair(state, action):
        raise ContractError(f"invalid (state, action) = ({state}, {action})")
    P, R = spec.dense
    row = cdf_table(P[state, action])
    s2 = int(sample_index(row, rng.random()))
    return StepOutcome(next_state=s2, reward=float(R[state, action, s2]))


# -- planning ----------------------------------------------------------------


def expected_reward(P: np.ndarray, R: np.ndarray) -> np.ndarray:
    """``sum_s2 P * R`` accumulated in next-state order (shape-independent rounding)."""
    acc = P[..., 0] * R[..., 0]
    for t in range(1, P.shape[-1]):
        acc = acc + P[..., t] * R[..., t]
    return acc


def bellman_sweep(q: np.ndarray, P: np.ndarray, ER: np.ndarray, gamma: float, mask: np.ndarray) -> np.ndarray:
    """One synchronous Bellman-optimality backup.

    ``q`` has shape ``(..., S, A)``; ``P`` broadcasts against ``(..., S, A, S)``.
    """
    v = q.max(axis=-1)
    acc = P[..., 0] * v[..., None, None, 0]
    for t in range(1, P.shape[-1]):
        acc = acc + P[..., t] * v[..., None, None, t]
    return np.where(mask, ER + gamma * acc, -np.inf)


def optimal_q(spec: EnvironmentSpec, gamma: float | None = None, tol: float = 1e-8) -> np.ndarray:
    """Value iteration to a fixed point of the Bellman optimality operator.

    Iterates synchronous sweeps from zero until the max-norm change drops
    below ``tol``.
    """
    gamma = spec.gamma_reference if gamma is None else gamma
    if not 0.0 <= gamma < 1.0:
        raise ContractError(f"gamma must lie in [0,1), got {gamma}")
    if tol <= 0:
        raise ContractError("tol must be positive")
    P, R = spec.dense
    mask = spec.action_mask
    ER = expected_reward(P, R)
    q = np.where(mask, 0.0, -np.inf)
    while True:
        q_new = bellman_sweep(q, P, ER, gamma, mask)
        delta = np.max(np.abs(np.where(mask, q_new, 0.0) - np.where(mask, q, 0.0)))
        q = q_new
        if delta < tol:
            return q


def greedy_mask(q: np.ndarray, tie_tol: float = 1e-9) -> np.ndarray:
    """Boolean array marking every action within ``tie_tol`` of the row max."""
    best = q.max(axis=-1, keepdims=True)
    return q >= best - tie_tol


def greedy_policy(q: np.ndarray, tie_tol: float = 1e-9) -> list[frozenset[int]]:
    """Per-state set of maximizing actions for a single ``(S, A)`` table."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 2:
        raise ContractError("greedy_policy expects an (S, A) table")
    g = greedy_mask(q, tie_tol)
    return [frozenset(int(a) for a in np.flatnonzero(row)) for row in g]


def greedy_action(q: np.ndarray, tie_tol: float = 1e-9) -> np.ndarray:
    """Lowest-index member of the greedy set, per state (and batch)."""
    return np.argmax(greedy_mask(q, tie_tol), axis=-1)
