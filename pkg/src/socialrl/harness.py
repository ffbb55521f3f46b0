"""Replication loop, seeded batches and parameter sweeps.

Each replication owns a PCG64 stream seeded by :func:`derive_seed`. It
draws a ``(horizon, 6)`` block of uniforms up front and consumes row ``t``
at step ``t`` in this fixed order:

0. recommender explore test
1. recommender random-arm pick
2. user explore test
3. user random-action pick
4. engagement test (does the arm hold a keep-scrolling user?)
5. environment transition (inverse CDF)

Uniforms are consumed whether or not the branch needs them, so a trace is a
pure function of ``(config, seed)``. All per-step arithmetic is elementwise
across replications, which makes results independent of how the batch is
split over worker threads.
"""

from __future__ import annotations

import copy
import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agent import DualAgent, DualConfig, blend_q, choose_actions, make_agent, mb_observe, mb_plan, mf_update
from .config import SWEEPABLE, ConfigError, ExperimentConfig
from .environments import HEALTHY, apply_misrepresentation, build
from .mdp import EnvironmentSpec, cdf_table, greedy_mask, optimal_q, sample_index, validate_spec
from .recommender import BanditState, RejectionScheme, bandit_update, choose_arms, reward_from_interaction
from .seeding import derive_seed

N_UNIFORMS = 6


@dataclass
class World:
    """Everything a replication needs that does not change during the run."""

    spec: EnvironmentSpec  # unmodified environment, defines the addiction reference
    dynamics: EnvironmentSpec  # what the user actually experiences
    reference_q: np.ndarray
    reference_greedy: np.ndarray
    cdf: np.ndarray  # (n_worlds, S, A, S); last index = unmodulated
    rewards: np.ndarray
    interaction: np.ndarray
    known_model: EnvironmentSpec
    hidden_state: int | None

    @property
    def arms(self):
        return self.dynamics.arm_modulation


def build_world(cfg: ExperimentConfig) -> World:
    spec = build(cfg.level)
    if cfg.environment_overrides:
        doc = spec.to_json_dict()
        doc.update(copy.deepcopy(cfg.environment_overrides))
        try:
            spec = EnvironmentSpec.from_json_dict(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError([("environment_overrides", f"cannot build environment: {exc}")]) from None
    report = validate_spec(spec)
    if not report.ok:
        raise ConfigError([("environment_overrides", str(v)) for v in report.violations])
    if spec.arm_modulation is not None and spec.arm_modulation.n_arms != cfg.recommender.n_arms:
        raise ConfigError(
            [("recommender.n_arms", f"environment defines {spec.arm_modulation.n_arms} arms")]
        )

    dynamics, known, hidden = spec, spec, None
    if cfg.misrepresentation.enabled:
        if HEALTHY not in spec.state_labels:
            raise ConfigError([("misrepresentation.enabled", "environment has no 'Healthy' state")])
        if cfg.misrepresentation.target == "environment":
            dynamics = known = apply_misrepresentation(spec)
        else:
            known = apply_misrepresentation(spec)
            hidden = spec.state_labels.index(HEALTHY)

    ref = optimal_q(spec, spec.gamma_reference, 1e-8)
    if dynamics.arm_modulation is not None:
        P, R = dynamics.arm_modulation.modulated_dense(dynamics)
    else:
        P0, R0 = dynamics.dense
        P, R = P0[None], R0[None]
    interaction = np.zeros(spec.n_states, dtype=bool)
    interaction[sorted(spec.interaction_states)] = True
    return World(
        spec=spec,
        dynamics=dynamics,
        reference_q=ref,
        reference_greedy=greedy_mask(ref, cfg.agent.tie_tol),
        cdf=cdf_table(P),
        rewards=R,
        interaction=interaction,
        known_model=known,
        hidden_state=hidden,
    )


@dataclass
class ReplicationTrace:
    """Per-step record of one replication plus final learner snapshots.

    ``arm`` is -1 where no recommendation was active.
    """

    seed: int
    state: np.ndarray
    arm: np.ndarray
    user_action: np.ndarray
    user_reward: np.ndarray
    recommender_reward: np.ndarray
    addicted: np.ndarray
    q_mf: np.ndarray
    q_mb: np.ndarray
    q_arms: np.ndarray | None

    @property
    def horizon(self) -> int:
        return len(self.state)

    def records(self):
        for t in range(self.horizon):
            arm = int(self.arm[t])
            yield {
                "t": t,
                "state": int(self.state[t]),
                "arm": None if arm < 0 else arm,
                "user_action": int(self.user_action[t]),
                "user_reward": float(self.user_reward[t]),
                "recommender_reward": None if arm < 0 else float(self.recommender_reward[t]),
                "addicted": bool(self.addicted[t]),
            }


@dataclass
class BatchResult:
    non_addicted: np.ndarray  # (T,) int
    mean_q_arms: np.ndarray | None  # (T, n_arms)
    n_replications: int
    config: dict
    final_q_arms: np.ndarray | None = None  # (n_replications, n_arms)
    traces: list[ReplicationTrace] = field(default_factory=list)

    @property
    def addicted(self) -> np.ndarray:
        return self.n_replications - self.non_addicted

    @property
    def horizon(self) -> int:
        return len(self.non_addicted)


@dataclass
class _ChunkOut:
    addicted: np.ndarray  # (n, T) bool
    q_arms: np.ndarray | None  # (n, T, n_arms)
    traces: list


def _simulate(cfg: ExperimentConfig, world: World, seeds: list[int], record: bool) -> _ChunkOut:
    n, T = len(seeds), cfg.horizon
    U = np.stack([np.random.Generator(np.random.PCG64(s)).random((T, N_UNIFORMS)) for s in seeds])

    spec = world.spec
    ac = cfg.agent
    agent: DualAgent = make_agent(
        spec,
        DualConfig(ac.beta, ac.epsilon, ac.epsilon_decay, ac.epsilon_min, ac.tie_tol),
        alpha=ac.alpha,
        gamma=ac.gamma,
        mbus=ac.mbus,
        mode=ac.model_mode,
        n=n,
        q_init=ac.q_init,
        known_spec=world.known_model,
        hidden_state=world.hidden_state,
    )
    arms = world.arms
    rc = cfg.recommender
    bandit = None
    if arms is not None:
        bandit = BanditState.fresh(arms.n_arms, n, rc.q_init, eta=rc.eta, epsilon_r=rc.epsilon_r)
        accept_p = np.asarray(arms.accept_probability)
        per_step = rc.arm_refresh == "per_step"
        scheme = RejectionScheme(rc.rejection_scheme)
    base_world = world.cdf.shape[0] - 1

    idx = np.arange(n)
    s = np.full(n, spec.start_state, dtype=np.int64)
    arm = np.full(n, -1, dtype=np.int64)
    addicted = np.zeros((n, T), dtype=bool)
    q_trace = np.zeros((n, T, arms.n_arms)) if arms is not None else None
    if record:
        rec = {k: np.zeros((n, T), dtype=np.int64) for k in ("state", "arm", "action")}
        rec_r = {k: np.zeros((n, T)) for k in ("user_reward", "rec_reward")}

    for t in range(T):
        u = U[:, t]
        in_int = world.interaction[s]
        if arms is not None:
            fire = in_int if per_step else in_int & (arm < 0)
            picked = choose_arms(bandit.q_arms, bandit.epsilon_r, u[:, 0], u[:, 1])
            arm = np.where(in_int, np.where(fire, picked, arm), -1)

        rows = blend_q(ac.beta, agent.mb.q[idx, s], agent.mf.q[idx, s])
        a = choose_actions(rows, agent.n_actions[s], agent.epsilon, u[:, 2], u[:, 3], ac.tie_tol)

        if arms is not None:
            held = u[:, 4] < accept_p[np.maximum(arm, 0)]
            dropped = in_int & (a == arms.keep_action) & ~held
            a = np.where(dropped, arms.quit_action, a)
            accepted = in_int & (a == arms.keep_action)
            w = np.where(arm >= 0, arm, base_world)
        else:
            w = np.full(n, base_world)

        s2 = sample_index(world.cdf[w, s, a], u[:, 5])
        r = world.rewards[w, s, a, s2]

        mf_update(agent.mf, s, a, r, s2)
        mb_observe(agent.mb, s, a, r, s2)
        mb_plan(agent.mb)

        if arms is not None:
            r_rec = reward_from_interaction(accepted, scheme)
            bandit_update(bandit, arm, r_rec, where=in_int)
            q_trace[:, t] = bandit.q_arms

        q_m = blend_q(ac.beta, agent.mb.q, agent.mf.q)
        addicted[:, t] = (greedy_mask(q_m, ac.tie_tol) & ~world.reference_greedy).any(axis=(-2, -1))

        if record:
            rec["state"][:, t] = s
            rec["arm"][:, t] = arm
            rec["action"][:, t] = a
            rec_r["user_reward"][:, t] = r
            if arms is not None:
                rec_r["rec_reward"][:, t] = np.where(in_int, r_rec, 0.0)

        agent.decay_epsilon()
        s = s2

    traces = []
    if record:
        for i, seed in enumerate(seeds):
            traces.append(
                ReplicationTrace(
                    seed=seed,
                    state=rec["state"][i],
                    arm=rec["arm"][i],
                    user_action=rec["action"][i],
                    user_reward=rec_r["user_reward"][i],
                    recommender_reward=rec_r["rec_reward"][i],
                    addicted=addicted[i],
                    q_mf=agent.mf.q[i].copy(),
                    q_mb=agent.mb.q[i].copy(),
                    q_arms=None if bandit is None else bandit.q_arms[i].copy(),
                )
            )
    return _ChunkOut(addicted, q_trace, traces)


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else ``SIM_THREADS`` (0 = auto)."""
    if threads is None:
        threads = int(os.environ.get("SIM_THREADS", "0") or 0)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def run_replication(cfg: ExperimentConfig, seed: int) -> ReplicationTrace:
    world = build_world(cfg)
    return _simulate(cfg, world, [int(seed)], record=True).traces[0]


def run_batch(
    cfg: ExperimentConfig,
    threads: int | None = None,
    record_traces: bool = False,
    order: list[int] | None = None,
) -> BatchResult:
    """Run ``n_replications`` seeded replications and aggregate them.

    ``order`` permutes the execution order of replication indices; the
    result does not depend on it, nor on ``threads``.
    """
    world = build_world(cfg)
    n = cfg.n_replications
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of range(n_replications)")
    threads = min(resolve_threads(threads), n)
    size = -(-n // threads)
    chunks = [order[i : i + size] for i in range(0, n, size)]

    def work(chunk):
        return chunk, _simulate(cfg, world, [derive_seed(cfg.base_seed, i) for i in chunk], record_traces)

    if threads == 1:
        outs = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(work, chunks))

    T = cfg.horizon
    addicted = np.zeros((n, T), dtype=bool)
    n_arms = world.arms.n_arms if world.arms is not None else 0
    q_all = np.zeros((n, T, n_arms)) if n_arms else None
    traces: list = [None] * n if record_traces else []
    for chunk, out in outs:
        addicted[chunk] = out.addicted
        if q_all is not None:
            q_all[chunk] = out.q_arms
        for i, tr in zip(chunk, out.traces):
            traces[i] = tr

    non_addicted = n - addicted.sum(axis=0)
    mean_q = None
    if q_all is not None:
        # fixed summation order over replication index
        acc = np.zeros((T, n_arms))
        for i in range(n):
            acc += q_all[i]
        mean_q = acc / n
    return BatchResult(
        non_addicted=non_addicted.astype(np.int64),
        mean_q_arms=mean_q,
        n_replications=n,
        config=cfg.to_json_dict(),
        final_q_arms=None if q_all is None else q_all[:, -1].copy(),
        traces=traces,
    )


def sweep_combinations(cfg: ExperimentConfig) -> list[tuple[tuple[str, object], ...]]:
    if not cfg.sweep:
        raise ConfigError([("sweep", "sweep map is empty")])
    keys = sorted(cfg.sweep)
    return [tuple(zip(keys, values)) for values in itertools.product(*(cfg.sweep[k] for k in keys))]


def combination_config(cfg: ExperimentConfig, combo) -> ExperimentConfig:
    changes = {f"{SWEEPABLE[k]}.{k}": v for k, v in combo}
    changes["sweep"] = {}
    return cfg.replace(**changes)


def run_sweep(cfg: ExperimentConfig, threads: int | None = None) -> dict:
    """Run every combination in ``cfg.sweep`` with the shared base seed."""
    return {combo: run_batch(combination_config(cfg, combo), threads) for combo in sweep_combinations(cfg)}
