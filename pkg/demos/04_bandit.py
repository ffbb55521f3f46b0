"""Watch the recommender's recency-weighted estimates on a bare bandit.

Each arm succeeds with its acceptance probability. Because the step size is
a constant, old rewards fade geometrically and the estimates never stop
moving, which is why they keep jittering around the true means.

    python demos/04_bandit.py
"""

import numpy as np

from socialrl import ArmTable, BanditState, bandit_update, select_arm

arms = ArmTable()
truth = np.asarray(arms.accept_probability)
rng = np.random.default_rng(7)
b = BanditState.fresh(arms.n_arms, eta=0.05, epsilon_r=0.1)
for t in range(1, 3001):
    k = int(select_arm(b, rng))
    bandit_update(b, k, float(rng.random() < truth[k]))
    if t in (100, 500, 1000, 3000):
        est = ", ".join(f"{v:.2f}" for v in b.q_arms[0])
        print(f"after {t:>4} pulls: estimates [{est}]  pulls {b.pull_counts[0].tolist()}")
print(f"true acceptance probabilities: {truth.tolist()}")
