"""Dual-system user agent: model-free Q-learning plus model-based planning.

Every table carries a leading population axis so a whole batch of
independent users advances with one set of array operations. A single user
is simply a population of one; the functions accept scalar indices in that
case and broadcast them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .mdp import ContractError, EnvironmentSpec, bellman_sweep, expected_reward, greedy_mask


class ModelMode(str, enum.Enum):
    KNOWN = "known"
    LEARNED = "learned"


def _batch(x, n: int, dtype=None) -> np.ndarray:
    x = np.asarray(x, dtype=dtype)
    if x.shape == (n,):
        return x
    if x.ndim == 0:
        return np.full(n, x)
    return np.broadcast_to(x, (n,))


def empty_q(mask: np.ndarray, n: int = 1, init: float = 0.0) -> np.ndarray:
    """``(n, S, A)`` table filled with ``init`` on valid actions, ``-inf`` on padding."""
    return np.repeat(np.where(mask, init, -np.inf)[None], n, axis=0)


@dataclass
class MFState:
    q: np.ndarray
    alpha: float
    gamma: float

    def __post_init__(self) -> None:
        # alpha = 0 is allowed as a frozen learner
        if not 0.0 <= self.alpha <= 1.0:
            raise ContractError(f"alpha must lie in [0,1], got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ContractError(f"gamma must lie in [0,1), got {self.gamma}")

    @classmethod
    def zeros(cls, mask: np.ndarray, alpha: float, gamma: float, n: int = 1, init: float = 0.0) -> "MFState":
        return cls(empty_q(mask, n, init), alpha, gamma)

    @property
    def n(self) -> int:
        return self.q.shape[0]


@dataclass
class MBState:
    """Model-based learner.

    In ``KNOWN`` mode ``P``/``R`` are shared ``(S, A, S)`` arrays taken from
    a spec. In ``LEARNED`` mode they are per-user ``(n, S, A, S)`` estimates
    built from ``counts`` and ``reward_sums``; unvisited rows are zero-reward
    self-loops. ``hidden_state``, when set, is zeroed out of every learned
    row (the ``mb_model`` misrepresentation target).
    """

    q: np.ndarray
    mode: ModelMode
    mbus: int
    gamma: float
    mask: np.ndarray
    P: np.ndarray
    R: np.ndarray
    ER: np.ndarray
    counts: np.ndarray | None = None
    reward_sums: np.ndarray | None = None
    hidden_state: int | None = None

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @classmethod
    def known(cls, spec: EnvironmentSpec, mbus: int, gamma: float, n: int = 1, init: float = 0.0) -> "MBState":
        if mbus < 0:
            raise ContractError("mbus must be >= 0")
        P, R = spec.dense
        return cls(
            q=empty_q(spec.action_mask, n, init),
            mode=ModelMode.KNOWN,
            mbus=int(mbus),
            gamma=gamma,
            mask=spec.action_mask,
            P=P,
            R=R,
            ER=expected_reward(P, R),
        )

    @classmethod
    def learned(
        cls,
        mask: np.ndarray,
        mbus: int,
        gamma: float,
        n: int = 1,
        init: float = 0.0,
        hidden_state: int | None = None,
    ) -> "MBState":
        if mbus < 0:
            raise ContractError("mbus must be >= 0")
        S, A = mask.shape
        P = np.repeat(np.broadcast_to(np.eye(S)[:, None, :], (S, A, S))[None], n, axis=0).copy()
        R = np.zeros((n, S, A, S))
        return cls(
            q=empty_q(mask, n, init),
            mode=ModelMode.LEARNED,
            mbus=int(mbus),
            gamma=gamma,
            mask=mask,
            P=P,
            R=R,
            ER=np.zeros((n, S, A)),
            counts=np.zeros((n, S, A, S)),
            reward_sums=np.zeros((n, S, A, S)),
            hidden_state=hidden_state,
        )


@dataclass
class DualConfig:
    beta: float = 0.5
    epsilon: float = 0.3
    epsilon_decay: float = 0.999
    epsilon_min: float = 0.01
    tie_tol: float = 1e-9

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ContractError(f"beta must lie in [0,1], got {self.beta}")
        if not 0.0 <= self.epsilon_min <= self.epsilon <= 1.0:
            raise ContractError("need 0 <= epsilon_min <= epsilon <= 1")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ContractError("epsilon_decay must lie in (0,1]")


@dataclass
class DualAgent:
    """A population of dual-system users sharing one configuration.

    ``epsilon`` is the current exploration rate; it decays identically for
    every member, so a scalar suffices.
    """

    mf: MFState
    mb: MBState
    cfg: DualConfig
    n_actions: np.ndarray
    epsilon: float = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.mf.q.shape != self.mb.q.shape:
            raise ContractError("MF and MB tables must share the (state, action) index space")
        if self.mf.gamma != self.mb.gamma:
            raise ContractError("MF and MB must share gamma")
        self.n_actions = np.asarray(self.n_actions)
        if self.epsilon is None:
            self.epsilon = self.cfg.epsilon

    @property
    def n(self) -> int:
        return self.mf.n

    def q_blend(self) -> np.ndarray:
        return blend_q(self.cfg.beta, self.mb.q, self.mf.q)

    def decay_epsilon(self) -> None:
        self.epsilon = max(self.cfg.epsilon_min, self.epsilon * self.cfg.epsilon_decay)


def blend_q(beta: float, q_mb: np.ndarray, q_mf: np.ndarray) -> np.ndarray:
    """``beta * q_mb + (1 - beta) * q_mf``, keeping padded entries at ``-inf``."""
    q_mb = np.asarray(q_mb, dtype=float)
    q_mf = np.asarray(q_mf, dtype=float)
    if q_mb.shape != q_mf.shape:
        raise ContractError(f"index spaces differ: {q_mb.shape} vs {q_mf.shape}")
    if not 0.0 <= beta <= 1.0:
        raise ContractError(f"beta must lie in [0,1], got {beta}")
    # the degenerate weights return a copy so that 0 * -inf never turns
    # padding into nan; for 0 < beta < 1 padding stays -inf by itself
    if beta == 0.0:
        return q_mf.copy()
    if beta == 1.0:
        return q_mb.copy()
    return beta * q_mb + (1.0 - beta) * q_mf


def choose_actions(
    q_rows: np.ndarray,
    n_actions: np.ndarray,
    epsilon: float,
    u_explore: np.ndarray,
    u_pick: np.ndarray,
    tie_tol: float,
) -> np.ndarray:
    """Epsilon-greedy choice from per-user action-value rows ``(n, A)``."""
    greedy = np.argmax(greedy_mask(q_rows, tie_tol), axis=-1)
    random_a = np.minimum((u_pick * n_actions).astype(np.int64), n_actions - 1)
    return np.where(u_explore < epsilon, random_a, greedy)


def select_action(agent: DualAgent, state, rng: np.random.Generator | None = None, u=None):
    """Epsilon-greedy action over the blended values at ``state``.

    Either pass ``rng`` (two uniforms are drawn per user: explore, pick) or
    pre-drawn uniforms ``u`` of shape ``(n, 2)``.
    """
    n = agent.n
    s = _batch(state, n, np.int64)
    if u is None:
        u = rng.random((n, 2))
    u = np.asarray(u, dtype=float).reshape(n, 2)
    idx = np.arange(n)
    rows = blend_q(agent.cfg.beta, agent.mb.q[idx, s], agent.mf.q[idx, s])
    a = choose_actions(rows, agent.n_actions[s], agent.epsilon, u[:, 0], u[:, 1], agent.cfg.tie_tol)
    return int(a[0]) if np.ndim(state) == 0 and n == 1 else a


def mf_update(mf: MFState, s, a, r, s2) -> MFState:
    """One Q-learning backup per user, in place; returns ``mf``."""
    n = mf.n
    idx = np.arange(n)
    s, a, s2 = (_batch(x, n, np.int64) for x in (s, a, s2))
    r = _batch(r, n, float)
    target = r + mf.gamma * mf.q[idx, s2].max(axis=-1)
    old = mf.q[idx, s, a]
    mf.q[idx, s, a] = old + mf.alpha * (target - old)
    return mf


def _rowsum(x: np.ndarray) -> np.ndarray:
    acc = x[..., 0]
    for t in range(1, x.shape[-1]):
        acc = acc + x[..., t]
    return acc


def mb_observe(mb: MBState, s, a, r, s2) -> MBState:
    """Record one transition per user and re-derive the affected model rows."""
    if mb.mode is ModelMode.KNOWN:
        return mb
    n = mb.n
    idx = np.arange(n)
    s, a, s2 = (_batch(x, n, np.int64) for x in (s, a, s2))
    r = _batch(r, n, float)
    mb.counts[idx, s, a, s2] += 1.0
    mb.reward_sums[idx, s, a, s2] += r
    c = mb.counts[idx, s, a]
    sums = mb.reward_sums[idx, s, a]
    kept = c
    if mb.hidden_state is not None:
        kept = c.copy()
        kept[:, mb.hidden_state] = 0.0
    total = _rowsum(kept)
    empty = total <= 0
    P_row = kept / np.where(empty, 1.0, total)[:, None]
    if empty.any():
        P_row[empty, s[empty]] = 1.0
    R_row = np.divide(sums, c, out=np.zeros_like(sums), where=c > 0)
    mb.P[idx, s, a] = P_row
    mb.R[idx, s, a] = R_row
    mb.ER[idx, s, a] = expected_reward(P_row, R_row)
    return mb


def mb_plan(mb: MBState, sweeps: int | None = None) -> MBState:
    """Run ``mbus`` (or ``sweeps``) synchronous value-iteration sweeps on the model."""
    k = mb.mbus if sweeps is None else sweeps
    q = mb.q
    for _ in range(k):
        q = bellman_sweep(q, mb.P, mb.ER, mb.gamma, mb.mask)
    mb.q = q
    return mb


def is_addicted(agent_or_q, reference_q: np.ndarray, tie_tol: float | None = None):
    """True where a user's greedy policy leaves the reference greedy set.

    A user is healthy when, in every state, each of its greedy actions is
    also a reference-greedy action; where the reference is unique this
    means the user's greedy set is exactly that action.

    ``agent_or_q`` is a :class:`DualAgent` or an already blended Q array.
    ``tie_tol`` defaults to the agent's configured tolerance, or ``1e-9``.
    """
    if isinstance(agent_or_q, DualAgent):
        q = agent_or_q.q_blend()
        tie_tol = agent_or_q.cfg.tie_tol if tie_tol is None else tie_tol
    else:
        q = np.asarray(agent_or_q, dtype=float)
        tie_tol = 1e-9 if tie_tol is None else tie_tol
    ref = greedy_mask(np.asarray(reference_q, dtype=float), tie_tol)
    mine = greedy_mask(q, tie_tol)
    bad = (mine & ~ref).any(axis=(-2, -1))
    return bool(bad) if np.ndim(bad) == 0 else bad


def make_agent(
    spec: EnvironmentSpec,
    cfg: DualConfig,
    *,
    alpha: float = 0.1,
    gamma: float = 0.9,
    mbus: int = 1,
    mode: ModelMode | str = ModelMode.LEARNED,
    n: int = 1,
    q_init: float = 0.0,
    known_spec: EnvironmentSpec | None = None,
    hidden_state: int | None = None,
) -> DualAgent:
    """Population of ``n`` fresh agents for ``spec``.

    ``known_spec`` is the model handed to a ``KNOWN``-mode planner (defaults
    to ``spec``).
    """
    mode = ModelMode(mode)
    mf = MFState.zeros(spec.action_mask, alpha, gamma, n, q_init)
    if mode is ModelMode.KNOWN:
        mb = MBState.known(known_spec or spec, mbus, gamma, n, q_init)
    else:
        mb = MBState.learned(spec.action_mask, mbus, gamma, n, q_init, hidden_state)
    return DualAgent(mf=mf, mb=mb, cfg=cfg, n_actions=np.asarray(spec.actions_per_state))
