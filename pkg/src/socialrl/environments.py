"""Concrete environments: simplified, advanced and refined-recommender.

All numbers below are defaults chosen so that the healthy loop is the
optimal behaviour at ``gamma = 0.9``; every table can be dumped to JSON,
edited and re-loaded.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .mdp import ContractError, EnvironmentSpec, Violation, validate_spec

HEALTHY = "Healthy"

# action indices shared by all builders
DO_HEALTHY, OPEN_SOCIAL = 0, 1
KEEP_SCROLLING, QUIT = 0, 1


class EnvironmentLevel(str, enum.Enum):
    SIMPLIFIED = "simplified"
    ADVANCED = "advanced"
    REFINED = "refined"


@dataclass
class ArmTable:
    """Per-arm content table used by the recommender.

    Choosing arm ``k`` while the user sits in one of ``modulated_states``
    changes that state's keep-scrolling row: the probability of moving to
    ``aftereffects_state`` becomes the stored value shifted by
    ``aftereffect_shift[k] - mean(aftereffect_shift)`` (clamped to
    ``[0, 1]``), the remaining mass is rescaled proportionally, and the
    reward of every non-aftereffects outcome becomes ``user_reward_mean[k]``.
    The environment row itself therefore holds the arm-averaged dynamics.

    ``accept_probability[k]`` is the chance that content from arm ``k``
    actually holds the user when they choose to keep scrolling; otherwise
    the session ends as if they had quit.
    """

    user_reward_mean: list[float] = field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8])
    accept_probability: list[float] = field(default_factory=lambda: [0.4, 0.55, 0.7, 0.85])
    aftereffect_shift: list[float] = field(default_factory=lambda: [0.0, 0.05, 0.10, 0.15])
    modulated_states: list[int] = field(default_factory=list)
    aftereffects_state: int = -1
    keep_action: int = KEEP_SCROLLING
    quit_action: int = QUIT

    @property
    def n_arms(self) -> int:
        return len(self.user_reward_mean)

    def check(self) -> list[str]:
        errs = []
        if self.n_arms < 1:
            errs.append("n_arms must be >= 1")
        if not len(self.accept_probability) == len(self.aftereffect_shift) == self.n_arms:
            errs.append("per-arm lists must have equal length")
        for p in self.accept_probability:
            if not 0.0 <= p <= 1.0:
                errs.append(f"accept_probability {p} outside [0,1]")
        for x in list(self.user_reward_mean) + list(self.aftereffect_shift):
            if not np.isfinite(x):
                errs.append("arm values must be finite")
        return errs

    def violations(self, spec: EnvironmentSpec) -> list[Violation]:
        out = [Violation("arm_modulation", msg) for msg in self.check()]
        for s in self.modulated_states:
            if s not in spec.interaction_states:
                out.append(Violation("arm_modulation.modulated_states", "must be interaction states", s))
        if not 0 <= self.aftereffects_state < spec.n_states:
            out.append(Violation("arm_modulation.aftereffects_state", "invalid state id", self.aftereffects_state))
        for s in spec.interaction_states:
            if not 0 <= s < spec.n_states:
                continue
            for a in (self.keep_action, self.quit_action):
                if not spec.is_valid_pair(s, a):
                    out.append(Violation("arm_modulation", f"action {a} missing in interaction state {s}"))
        return out

    def modulated_dense(self, spec: EnvironmentSpec) -> tuple[np.ndarray, np.ndarray]:
        """Stack of dense ``(P, R)`` arrays, shape ``(n_arms + 1, S, A, S)``.

        Index ``k < n_arms`` is the world under arm ``k``; the last index is
        the unmodulated spec.
        """
        P0, R0 = spec.dense
        P = np.repeat(P0[None], self.n_arms + 1, axis=0)
        R = np.repeat(R0[None], self.n_arms + 1, axis=0)
        ae = self.aftereffects_state
        mean_shift = float(np.mean(self.aftereffect_shift))
        a = self.keep_action
        for s in self.modulated_states:
            row = P0[s, a]
            rest = row.copy()
            rest[ae] = 0.0
            rest_mass = rest.sum()
            for k in range(self.n_arms):
                p_ae = min(1.0, max(0.0, row[ae] + self.aftereffect_shift[k] - mean_shift))
                new = rest * ((1.0 - p_ae) / rest_mass) if rest_mass > 0 else rest
                new[ae] = p_ae
                P[k, s, a] = new
                R[k, s, a, rest > 0] = self.user_reward_mean[k]
        return P, R

    def to_json_dict(self) -> dict:
        return {
            "n_arms": self.n_arms,
            "user_reward_mean": list(self.user_reward_mean),
            "accept_probability": list(self.accept_probability),
            "aftereffect_shift": list(self.aftereffect_shift),
            "modulated_states": list(self.modulated_states),
            "aftereffects_state": self.aftereffects_state,
            "keep_action": self.keep_action,
            "quit_action": self.quit_action,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ArmTable":
        table = cls(
            user_reward_mean=[float(x) for x in doc["user_reward_mean"]],
            accept_probability=[float(x) for x in doc["accept_probability"]],
            aftereffect_shift=[float(x) for x in doc["aftereffect_shift"]],
            modulated_states=[int(s) for s in doc.get("modulated_states", [])],
            aftereffects_state=int(doc.get("aftereffects_state", -1)),
            keep_action=int(doc.get("keep_action", KEEP_SCROLLING)),
            quit_action=int(doc.get("quit_action", QUIT)),
        )
        if "n_arms" in doc and int(doc["n_arms"]) != table.n_arms:
            raise ContractError("arm_modulation.n_arms disagrees with the per-arm lists")
        return table


def _spec(labels, actions, rows, interaction, arms=None) -> EnvironmentSpec:
    transitions, rewards = {}, {}
    for (s, a), outcomes in rows.items():
        transitions[(s, a)] = [(s2, p) for s2, p, _ in outcomes]
        for s2, _, r in outcomes:
            rewards[(s, a, s2)] = r
    spec = EnvironmentSpec(
        n_states=len(labels),
        state_labels=list(labels),
        actions_per_state=list(actions),
        transitions=transitions,
        rewards=rewards,
        start_state=0,
        interaction_states=frozenset(interaction),
        gamma_reference=0.9,
        arm_modulation=arms,
    )
    report = validate_spec(spec)
    assert report.ok, report.violations
    return spec


def build_simplified() -> EnvironmentSpec:
    N, H, I, AE = range(4)
    rows = {
        (N, DO_HEALTHY): [(H, 1.0, 1.0)],
        (N, OPEN_SOCIAL): [(I, 1.0, 0.3)],
        (H, 0): [(N, 1.0, 0.0)],
        (I, KEEP_SCROLLING): [(I, 0.7, 0.4), (AE, 0.3, -2.0)],
        (I, QUIT): [(N, 1.0, 0.0)],
        (AE, 0): [(N, 1.0, -0.5)],
    }
    return _spec(["Neutral", HEALTHY, "Interaction", "Aftereffects"], [2, 1, 2, 1], rows, [I])


def build_advanced() -> EnvironmentSpec:
    N, H, I, EB, AE, REC = range(6)
    rows = {
        (N, DO_HEALTHY): [(H, 0.9, 1.0), (N, 0.1, 0.0)],
        (N, OPEN_SOCIAL): [(I, 1.0, 0.3)],
        (H, 0): [(N, 1.0, 0.0)],
        (I, KEEP_SCROLLING): [(EB, 0.5, 0.5), (I, 0.5, 0.4)],
        (I, QUIT): [(N, 1.0, 0.0)],
        (EB, KEEP_SCROLLING): [(AE, 0.6, -2.5), (EB, 0.4, 0.5)],
        (EB, QUIT): [(N, 1.0, 0.0)],
        (AE, 0): [(REC, 1.0, -0.5)],
        (REC, 0): [(N, 1.0, -0.2)],
    }
    labels = ["Neutral", HEALTHY, "Interaction", "EngagedBrowsing", "Aftereffects", "Recovery"]
    return _spec(labels, [2, 1, 2, 2, 1, 1], rows, [I, EB])


HEAVY_BASE_AFTEREFFECTS = 0.35
# The refined level lists opening social media first at Neutral, so a fresh
# user whose values are still all equal reaches for the feed.
REFINED_OPEN_SOCIAL, REFINED_DO_HEALTHY = 0, 1


def build_refined(arms: ArmTable | None = None) -> EnvironmentSpec:
    """Six-state environment with the interaction state split by usage length.

    The healthy activity costs a little effort up front (-0.3) and pays off
    on the way back to Neutral (+2.0), while opening social media pays at
    once (+0.8). Scrolling feels fine while it lasts; the cost of the
    aftereffects arrives on leaving them (-3.0) and during recovery (-1.0).
    A short-sighted learner therefore sees the feed as the better deal even
    though the long-run optimum is the healthy loop.

    The HeavyUse keep-scrolling row stores the arm-averaged reward and
    aftereffects risk; the per-arm rows come from
    :meth:`ArmTable.modulated_dense`.
    """
    arms = ArmTable() if arms is None else arms
    errs = arms.check()
    if errs:
        raise ContractError("invalid ArmTable: " + "; ".join(errs))
    N, H, LU, HU, AE, REC = range(6)
    arms = ArmTable(
        user_reward_mean=list(arms.user_reward_mean),
        accept_probability=list(arms.accept_probability),
        aftereffect_shift=list(arms.aftereffect_shift),
        modulated_states=[HU],
        aftereffects_state=AE,
        keep_action=KEEP_SCROLLING,
        quit_action=QUIT,
    )
    p_heavy = min(1.0, max(0.0, HEAVY_BASE_AFTEREFFECTS + float(np.mean(arms.aftereffect_shift))))
    heavy_reward = float(np.mean(arms.user_reward_mean))
    rows = {
        (N, REFINED_OPEN_SOCIAL): [(LU, 1.0, 0.8)],
        (N, REFINED_DO_HEALTHY): [(H, 0.9, -0.3), (N, 0.1, 0.0)],
        (H, 0): [(N, 1.0, 2.0)],
        (LU, KEEP_SCROLLING): [(HU, 0.8, 0.4), (AE, 0.05, 0.0), (LU, 0.15, 0.4)],
        (LU, QUIT): [(N, 1.0, 0.0)],
        (HU, KEEP_SCROLLING): [(AE, p_heavy, 0.0), (HU, 1.0 - p_heavy, heavy_reward)],
        (HU, QUIT): [(N, 1.0, 0.0)],
        (AE, 0): [(REC, 1.0, -3.0)],
        (REC, 0): [(N, 1.0, -1.0)],
    }
    labels = ["Neutral", HEALTHY, "LightUse", "HeavyUse", "Aftereffects", "Recovery"]
    return _spec(labels, [2, 1, 2, 2, 1, 1], rows, [LU, HU], arms=arms)


def build(level: EnvironmentLevel | str, arms: ArmTable | None = None) -> EnvironmentSpec:
    level = EnvironmentLevel(level)
    if level is EnvironmentLevel.SIMPLIFIED:
        return build_simplified()
    if level is EnvironmentLevel.ADVANCED:
        return build_advanced()
    return build_refined(arms)


def _drop_state(row: list[tuple[int, float]], target: int, s: int) -> list[tuple[int, float]]:
    kept = [(s2, p) for s2, p in row if s2 != target and p > 0]
    total = sum(p for _, p in kept)
    if total <= 0:
        return [(s, 1.0)]
    return [(s2, p / total) for s2, p in kept]


def apply_misrepresentation(spec: EnvironmentSpec) -> EnvironmentSpec:
    """Make the Healthy state unreachable by zeroing every transition into it.

    Rows lose their Healthy mass and are renormalized; a row left empty
    becomes a self-loop. The result is flagged ``misrepresented``.
    """
    if HEALTHY not in spec.state_labels:
        raise ContractError("spec has no state labeled 'Healthy'")
    target = spec.state_labels.index(HEALTHY)
    transitions = {}
    rewards = dict(spec.rewards)
    for (s, a), row in spec.transitions.items():
        if any(s2 == target for s2, _ in row):
            transitions[(s, a)] = _drop_state(row, target, s)
            for s2, _ in transitions[(s, a)]:
                rewards.setdefault((s, a, s2), 0.0)
        else:
            transitions[(s, a)] = list(row)
    return spec.with_changes(transitions=transitions, rewards=rewards, misrepresented=True)


def misrepresent_rows(P: np.ndarray, healthy: int) -> np.ndarray:
    """Array form of :func:`apply_misrepresentation` for ``(..., S, A, S)`` models."""
    out = P.copy()
    out[..., healthy] = 0.0
    total = out.sum(axis=-1)
    empty = total <= 0
    safe = np.where(empty, 1.0, total)
    out = out / safe[..., None]
    S = P.shape[-1]
    eye = np.broadcast_to(np.eye(S)[:, None, :], P.shape)
    return np.where(empty[..., None], eye, out)
