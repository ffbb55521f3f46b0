"""Dual-system reinforcement-learning users facing an engagement-driven recommender.

The package is organised bottom-up:

``mdp``
    tabular environment contract, validation, sampling and value iteration
``environments``
    the three built-in worlds, the recommender arm table and misrepresentation
``agent``
    model-free plus model-based users blended by a fixed weight ``beta``
``recommender``
    the epsilon-greedy recency-weighted bandit
``harness``
    seeded replication batches and parameter sweeps
``config``, ``output``, ``svg``, ``cli``
    JSON configs, CSV writers, SVG charts and the command line
"""

from .agent import DualAgent, DualConfig, ModelMode, blend_q, is_addicted, make_agent, mb_observe, mb_plan, mf_update, select_action
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .environments import ArmTable, EnvironmentLevel, apply_misrepresentation, build, build_advanced, build_refined, build_simplified
from .harness import BatchResult, ReplicationTrace, run_batch, run_replication, run_sweep
from .mdp import ContractError, EnvironmentSpec, greedy_policy, load_spec, optimal_q, save_spec, step, validate_spec
from .output import write_csv, write_traces
from .recommender import BanditState, RejectionScheme, bandit_update, reward_from_interaction, select_arm
from .seeding import derive_seed
from .svg import render_chart

__all__ = [
    "ArmTable", "BanditState", "BatchResult", "ConfigError", "ContractError", "DualAgent", "DualConfig",
    "EnvironmentLevel", "EnvironmentSpec", "ExperimentConfig", "ModelMode", "RejectionScheme",
    "ReplicationTrace", "apply_misrepresentation", "bandit_update", "blend_q", "build", "build_advanced",
    "build_refined", "build_simplified", "config_from_dict", "derive_seed", "greedy_policy", "is_addicted",
    "load_config", "load_spec", "make_agent", "mb_observe", "mb_plan", "mf_update", "optimal_q",
    "render_chart", "reward_from_interaction", "run_batch", "run_replication", "run_sweep", "save_spec",
    "select_action", "select_arm", "step", "validate_spec", "write_csv", "write_traces",
]
