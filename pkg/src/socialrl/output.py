"""CSV writers for batch results and per-replication traces.

All files are UTF-8 with LF line endings; real numbers are written with 17
significant digits so every binary64 value survives a round trip and reruns
can be compared byte for byte.
"""

from __future__ import annotations

from pathlib import Path

from .harness import BatchResult

AGENTS_EVOLUTION = "agents_evolution.csv"
RECOMMENDER_Q = "recommender_q.csv"
REPLICATION_TRACES = "replication_traces.csv"

AGENTS_HEADER = ("iteration", "non_addicted", "addicted", "fraction_non_addicted")
RECOMMENDER_HEADER = ("iteration", "arm", "mean_q")
TRACE_HEADER = (
    "replication",
    "t",
    "state",
    "arm",
    "user_action",
    "user_reward",
    "recommender_reward",
    "addicted",
)


def fmt_real(x: float) -> str:
    return format(float(x), ".17g")


def _write_rows(path: Path, header, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return path


def write_csv(result: BatchResult, out_dir: str | Path) -> list[Path]:
    """Write ``agents_evolution.csv`` and, when arms exist, ``recommender_q.csv``.

    Returns the paths written, in that order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = result.n_replications
    na = result.non_addicted
    rows = (
        (str(t), str(int(na[t])), str(n - int(na[t])), fmt_real(int(na[t]) / n))
        for t in range(result.horizon)
    )
    paths = [_write_rows(out / AGENTS_EVOLUTION, AGENTS_HEADER, rows)]
    if result.mean_q_arms is not None:
        q = result.mean_q_arms
        q_rows = ((str(t), str(k), fmt_real(q[t, k])) for t in range(q.shape[0]) for k in range(q.shape[1]))
        paths.append(_write_rows(out / RECOMMENDER_Q, RECOMMENDER_HEADER, q_rows))
    return paths


def write_traces(result: BatchResult, out_dir: str | Path) -> Path:
    """Persist every replication's step records; empty cells mean "no arm"."""
    if not result.traces:
        raise ValueError("result carries no traces; run the batch with record_traces=True")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def rows():
        for i, trace in enumerate(result.traces):
            for rec in trace.records():
                yield (
                    str(i),
                    str(rec["t"]),
                    str(rec["state"]),
                    "" if rec["arm"] is None else str(rec["arm"]),
                    str(rec["user_action"]),
                    fmt_real(rec["user_reward"]),
                    "" if rec["recommender_reward"] is None else fmt_real(rec["recommender_reward"]),
                    "1" if rec["addicted"] else "0",
                )

    return _write_rows(out / REPLICATION_TRACES, TRACE_HEADER, rows())


def combination_dirname(combo) -> str:
    """``beta=0.25_mbus=50`` style name from ``((key, value), ...)`` pairs."""
    return "_".join(f"{k}={v}" for k, v in sorted(combo))
