import numpy as np
import pytest
from hypothesis import given, strategies as st

from socialrl.mdp import ContractError
from socialrl.recommender import BanditState, RejectionScheme, bandit_update, reward_from_interaction, select_arm


def test_select_arm_examples():
    b = BanditState(np.array([[0.1, 0.9, 0.2, 0.0]]), epsilon_r=0.0)
    assert select_arm(b, np.random.default_rng(0)) == 1
    assert select_arm(BanditState.fresh(4, epsilon_r=0.0), np.random.default_rng(0)) == 0


def test_select_arm_uniform_exploration():
    b = BanditState.fresh(4, n=100_000, epsilon_r=1.0)
    arms = select_arm(b, np.random.default_rng(3))
    freq = np.bincount(arms, minlength=4) / 100_000
    assert np.all(np.abs(freq - 0.25) < 0.01)


def test_full_replacement_with_unit_step():
    b = BanditState.fresh(3, eta=1.0)
    bandit_update(b, 2, 0.7)
    assert b.q_arms[0].tolist() == [0.0, 0.0, 0.7]


@pytest.mark.parametrize("t", [1, 2, 10, 57, 100])
def test_closed_form_geometric(t):
    b = BanditState.fresh(1, eta=0.1)
    for _ in range(t):
        bandit_update(b, 0, 1.0)
    assert abs(b.q_arms[0, 0] - (1 - 0.9**t)) <= 1e-12


@given(st.floats(0.001, 1.0), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 60))
def test_exponential_forgetting(eta, q0, r, k):
    b = BanditState(np.array([[q0, 9.0]]), eta=eta)
    for _ in range(k):
        bandit_update(b, 0, r)
    assert b.q_arms[0, 0] == pytest.approx(r + (1 - eta) ** k * (q0 - r), abs=1e-9)
    assert b.q_arms[0, 1] == 9.0
    assert b.pull_counts[0].tolist() == [k, 0]


@given(st.floats(0.01, 1.0), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 80))
def test_tracks_a_switch(eta, r1, r2, k):
    b = BanditState.fresh(1, eta=eta)
    for _ in range(200):
        bandit_update(b, 0, r1)
    for _ in range(k):
        bandit_update(b, 0, r2)
    err = abs(b.q_arms[0, 0] - r2)
    bound = abs(r2 - r1) * (1 - eta) ** k + abs(r1) * (1 - eta) ** (200 + k)
    assert err <= bound + 1e-9


def test_tiny_step_moves_tiny_amount():
    b = BanditState(np.array([[0.3]]), eta=1e-9)
    bandit_update(b, 0, 1.0)
    # bound holds up to one ulp of the stored value
    assert abs(b.q_arms[0, 0] - 0.3) <= 1e-9 * 0.7 + np.spacing(0.3)


def test_masked_update_touches_only_selected_users():
    b = BanditState.fresh(2, n=3, eta=0.5)
    bandit_update(b, np.array([0, 1, -1]), np.array([1.0, 1.0, 1.0]), where=np.array([True, True, False]))
    assert b.q_arms.tolist() == [[0.5, 0.0], [0.0, 0.5], [0.0, 0.0]]


def test_bandit_contract():
    with pytest.raises(ContractError):
        BanditState.fresh(2, eta=0.0)
    with pytest.raises(ContractError):
        BanditState.fresh(2, epsilon_r=1.5)
    with pytest.raises(ContractError):
        bandit_update(BanditState.fresh(2), 5, 1.0)


@pytest.mark.parametrize(
    "accepted, scheme, expected",
    [
        (True, "neutral", 1.0),
        (True, "punitive", 1.0),
        (False, "neutral", 0.0),
        (False, RejectionScheme.PUNITIVE, -1.0),
    ],
)
def test_reward_from_interaction(accepted, scheme, expected):
    assert reward_from_interaction(accepted, scheme) == expected


def test_reward_from_interaction_vectorized():
    out = reward_from_interaction(np.array([True, False]), "punitive")
    assert out.tolist() == [1.0, -1.0]
