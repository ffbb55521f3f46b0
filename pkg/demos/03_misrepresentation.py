"""Hide the healthy option and watch addiction rates rise.

With misrepresentation switched on, the Healthy state can no longer be
reached, so no user ever experiences its payoff. Users are still judged
against the honest world's reference policy.

    python demos/03_misrepresentation.py
"""

from socialrl import config_from_dict, run_batch

for beta in (0.0, 0.5):
    row = []
    for hidden in (False, True):
        cfg = config_from_dict(
            {"n_replications": 200, "agent": {"beta": beta}, "misrepresentation": {"enabled": hidden}}
        )
        row.append(int(run_batch(cfg).addicted[-1]))
    print(f"beta={beta}: addicted after 1000 steps, honest world {row[0]}/200, healthy option hidden {row[1]}/200")
