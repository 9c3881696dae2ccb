"""Summary statistics over replicated runs: medians, sign tests, lift, reports.

The head-to-head comparison is an exact paired sign test: per shared seed the
smaller ligands-to-target wins, ties are dropped, and the one-sided binomial
tail is computed with exact integer arithmetic.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .simulator import RunResult

DEFAULT_LEVEL = 0.1


def median_mlt(values: Sequence[float]) -> float:
    """Median with the lower-median convention for even counts."""
    vals = sorted(values)
    if not vals:
        raise ValueError("median of empty list")
    return float(vals[(len(vals) - 1) // 2])


def binomial_tail(n: int, wins: int) -> float:
    """P(Bin(n, 1/2) >= wins), exact."""
    if n < 0 or not 0 <= wins <= n:
        raise ValueError(f"bad tail arguments n={n}, wins={wins}")
    total = sum(math.comb(n, k) for k in range(wins, n + 1))
    return total / 2 ** n


@dataclass(frozen=True)
class HeadToHead:
    wins_a: int
    wins_b: int
    ties: int
    p_value_a: float
    p_value_b: float
    verdict: str  # "A" | "B" | "inconclusive"


def head_to_head(ltt_a: Sequence[float], ltt_b: Sequence[float],
                 level: float = DEFAULT_LEVEL) -> HeadToHead:
    """Paired sign test on shared-seed replicates; smaller value wins."""
    if len(ltt_a) != len(ltt_b):
        raise ValueError("paired lists must have equal length")
    wins_a = sum(1 for a, b in zip(ltt_a, ltt_b) if a < b)
    wins_b = sum(1 for a, b in zip(ltt_a, ltt_b) if b < a)
    ties = len(ltt_a) - wins_a - wins_b
    n = wins_a + wins_b
    if n == 0:
        return HeadToHead(0, 0, ties, 1.0, 1.0, "inconclusive")
    p_a = binomial_tail(n, wins_a)
    p_b = binomial_tail(n, wins_b)
    if p_a < level:
        verdict = "A"
    elif p_b < level:
        verdict = "B"
    else:
        verdict = "inconclusive"
    return HeadToHead(wins_a, wins_b, ties, p_a, p_b, verdict)


def percent_lift(mlt_spade: float, mlt_other: float) -> float:
    """Improvement of the first MLT over the second, as a percentage.

    Negative when the first method is worse.
    """
    if mlt_other <= 0:
        raise ValueError("reference MLT must be positive")
    return 100.0 * (mlt_other - mlt_spade) / mlt_other


def failure_rate(result: RunResult) -> float:
    return result.failure_rate


def mlt_histogram(values: Sequence[float], bin_width: int = 50,
                  cap: int = 400) -> list[tuple[int, int, int]]:
    """Numeric histogram bins (lo, hi, count) over ligands-to-target values."""
    edges = list(range(0, cap + bin_width, bin_width))
    out = []
    vals = list(values)
    for lo, hi in zip(edges[:-1], edges[1:]):
        count = sum(1 for v in vals if lo < v <= hi)
        out.append((lo, hi, count))
    return out


def _fmt(x: float) -> str:
    return repr(round(float(x), 10))


def report_rows(results: Sequence[RunResult]) -> list[dict]:
    rows = []
    for r in results:
        rows.append({
            "protein": r.protein_id,
            "policy": r.policy_name,
            "endpoint": r.endpoint.kind,
            "k": r.endpoint.k,
            "target": r.endpoint.target,
            "batch": r.batch_size,
            "reps": len(r.seeds),
            "mlt": r.mlt,
            "failure_rate": r.failure_rate,
        })
    rows.sort(key=lambda d: (d["protein"], d["policy"], d["endpoint"],
                             d["k"], d["target"], d["batch"]))
    return rows


def emit_report(results: Sequence[RunResult], level: float = DEFAULT_LEVEL
                ) -> dict[str, str]:
    """Deterministic CSV/plain-text tables for a set of runs.

    Returns {"report.csv": ..., "h2h.csv": ..., "summary.txt": ...}; the
    head-to-head file pairs policies that share (protein, endpoint, batch)
    and seed lists.
    """
    rows = report_rows(results)
    rep = io.StringIO()
    rep.write("protein,policy,endpoint,k,target,batch,reps,mlt,failure_rate\n")
    for d in rows:
        rep.write(f"{d['protein']},{d['policy']},{d['endpoint']},{d['k']},"
                  f"{_fmt(d['target'])},{d['batch']},{d['reps']},"
                  f"{_fmt(d['mlt'])},{_fmt(d['failure_rate'])}\n")

    by_cell: dict[tuple, list[RunResult]] = {}
    for r in results:
        key = (r.protein_id, r.endpoint.kind, r.endpoint.k, r.endpoint.target,
               r.batch_size)
        by_cell.setdefault(key, []).append(r)
    h2h = io.StringIO()
    h2h.write("protein,endpoint,k,target,policy_a,policy_b,wins_a,wins_b,ties,"
              "p_value_a,p_value_b,verdict,lift_a_over_b_pct\n")
    for key in sorted(by_cell):
        cell = sorted(by_cell[key], key=lambda r: r.policy_name)
        for i, ra in enumerate(cell):
            for rb in cell[i + 1:]:
                if ra.seeds != rb.seeds:
                    continue
                h = head_to_head(ra.ligands_to_target, rb.ligands_to_target, level)
                lift = percent_lift(ra.mlt, rb.mlt) if rb.mlt > 0 else 0.0
                h2h.write(f"{key[0]},{key[1]},{key[2]},{_fmt(key[3])},"
                          f"{ra.policy_name},{rb.policy_name},{h.wins_a},"
                          f"{h.wins_b},{h.ties},{_fmt(h.p_value_a)},"
                          f"{_fmt(h.p_value_b)},{h.verdict},{_fmt(lift)}\n")

    summary = io.StringIO()
    by_policy: dict[tuple, list[RunResult]] = {}
    for r in results:
        key = (r.policy_name, r.endpoint.kind, r.endpoint.k, r.endpoint.target)
        by_policy.setdefault(key, []).append(r)
    summary.write("median MLT per policy/endpoint (over proteins)\n")
    for key in sorted(by_policy):
        group = by_policy[key]
        med = median_mlt([r.mlt for r in group])
        fr = float(np.mean([r.failure_rate for r in group]))
        summary.write(f"  {key[0]:>10} {key[1]} k={key[2]} t={key[3]:g}: "
                      f"median MLT {med:.1f}  failure rate {fr:.3f}  "
                      f"({len(group)} proteins)\n")
    summary.write("\nligands-to-target histogram bins (all replicates)\n")
    for key in sorted(by_policy):
        vals = [v for r in by_policy[key] for v in r.ligands_to_target]
        bins = mlt_histogram(vals)
        rendered = " ".join(f"({lo},{hi}]:{c}" for lo, hi, c in bins if c)
        summary.write(f"  {key[0]:>10} t={key[3]:g}: {rendered}\n")

    return {"report.csv": rep.getvalue(), "h2h.csv": h2h.getvalue(),
            "summary.txt": summary.getvalue()}
