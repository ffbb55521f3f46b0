"""Non-stationary epsilon-greedy bandit recommender.

Arm values are constant-step-size (exponential recency-weighted) averages
of the acceptance signal, so old interactions fade geometrically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .mdp import ContractError


class RejectionScheme(str, enum.Enum):
    NEUTRAL = "neutral"
    PUNITIVE = "punitive"


@dataclass
class BanditState:
    """Per-user bandit estimates, shape ``(n, n_arms)``."""

    q_arms: np.ndarray
    eta: float = 0.05
    epsilon_r: float = 0.1
    pull_counts: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.q_arms = np.atleast_2d(np.asarray(self.q_arms, dtype=float)).copy()
        if self.q_arms.shape[1] < 1:
            raise ContractError("need at least one arm")
        if not 0.0 < self.eta <= 1.0:
            raise ContractError(f"eta must lie in (0,1], got {self.eta}")
        if not 0.0 <= self.epsilon_r <= 1.0:
            raise ContractError(f"epsilon_r must lie in [0,1], got {self.epsilon_r}")
        if self.pull_counts is None:
            self.pull_counts = np.zeros(self.q_arms.shape, dtype=np.int64)

    @classmethod
    def fresh(cls, n_arms: int, n: int = 1, q_init: float = 0.0, **kw) -> "BanditState":
        return cls(np.full((n, n_arms), float(q_init)), **kw)

    @property
    def n_arms(self) -> int:
        return self.q_arms.shape[1]


def choose_arms(q_arms: np.ndarray, epsilon_r: float, u_explore: np.ndarray, u_pick: np.ndarray) -> np.ndarray:
    n_arms = q_arms.shape[-1]
    random_arm = np.minimum((u_pick * n_arms).astype(np.int64), n_arms - 1)
    return np.where(u_explore < epsilon_r, random_arm, np.argmax(q_arms, axis=-1))


def select_arm(b: BanditState, rng: np.random.Generator | None = None, u=None):
    """Epsilon-greedy arm; greedy ties go to the lowest index.

    Consumes two uniforms per user (explore, pick), from ``rng`` or ``u``.
    """
    n = b.q_arms.shape[0]
    if u is None:
        u = rng.random((n, 2))
    u = np.asarray(u, dtype=float).reshape(n, 2)
    arms = choose_arms(b.q_arms, b.epsilon_r, u[:, 0], u[:, 1])
    return int(arms[0]) if n == 1 else arms


def bandit_update(b: BanditState, arm, reward, where=None) -> BanditState:
    """``q[arm] += eta * (reward - q[arm])`` for each user (optionally masked), in place."""
    n = b.q_arms.shape[0]
    arm = np.broadcast_to(np.asarray(arm, dtype=np.int64), (n,))
    reward = np.broadcast_to(np.asarray(reward, dtype=float), (n,))
    if np.any((arm < 0) | (arm >= b.n_arms)) and where is None:
        raise ContractError("arm index out of range")
    rows = np.arange(n) if where is None else np.flatnonzero(where)
    if rows.size == 0:
        return b
    a = arm[rows]
    old = b.q_arms[rows, a]
    b.q_arms[rows, a] = old + b.eta * (reward[rows] - old)
    b.pull_counts[rows, a] += 1
    return b


def reward_from_interaction(accepted, scheme: RejectionScheme | str = RejectionScheme.NEUTRAL):
    """+1 for an accepted recommendation; 0 (neutral) or -1 (punitive) otherwise."""
    miss = -1.0 if RejectionScheme(scheme) is RejectionScheme.PUNITIVE else 0.0
    out = np.where(accepted, 1.0, miss)
    return float(out) if out.ndim == 0 else out
