"""Compare how fast users with different planning weights escape the feed.

A user with ``beta`` near 1 leans on its internal model and plans ahead, and
one near 0 learns from experienced rewards alone. The printout shows how
many of 200 simulated users are not addicted at a few checkpoints.

    python demos/02_beta_comparison.py
"""

from socialrl import config_from_dict, run_batch

CHECKPOINTS = (100, 300, 600, 999)
print("beta  " + "  ".join(f"t={t:<4}" for t in CHECKPOINTS))
for beta in (0.0, 0.25, 0.5, 0.75):
    cfg = config_from_dict({"n_replications": 200, "agent": {"beta": beta}})
    res = run_batch(cfg)
    print(f"{beta:<5} " + "  ".join(f"{int(res.non_addicted[t]):<6}" for t in CHECKPOINTS))
