"""Tour the three built-in worlds and the healthy reference policy.

For each level this prints the states, which ones the recommender acts in,
and the greedy actions of the discounted optimum that defines "not addicted".

    python demos/01_environments.py
"""

from socialrl import build, greedy_policy, optimal_q, validate_spec

for level in ("simplified", "advanced", "refined"):
    spec = build(level)
    report = validate_spec(spec)
    q = optimal_q(spec, spec.gamma_reference)
    policy = greedy_policy(q)
    print(f"== {level}: {spec.n_states} states, valid={report.ok}")
    for s, label in enumerate(spec.state_labels):
        tag = " (recommender acts here)" if s in spec.interaction_states else ""
        values = ", ".join(f"{v:6.2f}" for v in q[s, : spec.actions_per_state[s]])
        print(f"  {label:<16} Q* = [{values}]  greedy {sorted(policy[s])}{tag}")
    print()
