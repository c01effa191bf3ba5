"""Fold change, Kal's two-proportion z-test and Benjamini-Hochberg FDR."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from srnaflow.ingest import GuidePair


@dataclass(frozen=True)
class DiffExprResult:
    mirna: str
    pair: GuidePair
    expt_count: int
    ctrl_count: int
    fold_change: float
    z: float
    p: float
    q: float
    significant: bool


def rpm(count: int, library_total: int) -> float:
    if library_total <= 0:
        raise ValueError("library_total must be > 0")
    return count * 1e6 / library_total


def fold_change(ctrl_rpm: float, expt_rpm: float) -> float:
    """``expt / ctrl``; ``inf`` for a zero control, 1.0 when both are zero."""
    if ctrl_rpm == 0:
        return 1.0 if expt_rpm == 0 else math.inf
    return expt_rpm / ctrl_rpm


def kal_z_test(x1: int, n1: int, x2: int, n2: int) -> tuple[float, float]:
    """Two-proportion z-test of ``x1/n1`` against ``x2/n2`` (pooled variance).

    Returns ``(z, two-sided p)``; a pooled proportion of 0 or 1 gives
    ``(0.0, 1.0)``.
    """
    if n1 <= 0 or n2 <= 0:
        raise ValueError("library sizes must be > 0")
    if not (0 <= x1 <= n1 and 0 <= x2 <= n2):
        raise ValueError("counts must lie within [0, library size]")
    pooled = (x1 + x2) / (n1 + n2)
    if pooled <= 0.0 or pooled >= 1.0:
        return 0.0, 1.0
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    z = (x1 / n1 - x2 / n2) / se
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return z, min(1.0, p)


def bh_fdr(p_values: Sequence[float]) -> list[float]:
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    m = len(p_values)
    if m == 0:
        return []
    order = sorted(range(m), key=lambda i: p_values[i])
    q = [0.0] * m
    running = 1.0
    for rank in range(m, 0, -1):
        i = order[rank - 1]
        running = min(running, p_values[i] * m / rank)
        q[i] = min(1.0, running)
    return q


def is_significant(fc: float, q: float, config) -> bool:
    return (fc > config.fc_up or fc < config.fc_down) and q < config.alpha


def differential_expression(counts: dict[str, Sequence[int]], library_ids: Sequence[str],
                            totals: Sequence[int], pair: GuidePair, config) -> list[DiffExprResult]:
    """Test every miRNA in ``counts`` for one experiment->control pair.

    ``counts`` maps sequence to per-library raw counts ordered like
    ``library_ids``. FDR is applied within the pair.
    """
    e = list(library_ids).index(pair.experiment)
    c = list(library_ids).index(pair.control)
    rows = []
    for mirna in sorted(counts):
        xe, xc = counts[mirna][e], counts[mirna][c]
        fc = fold_change(rpm(xc, totals[c]), rpm(xe, totals[e]))
        z, p = kal_z_test(xe, totals[e], xc, totals[c])
        rows.append((mirna, xe, xc, fc, z, p))
    qs = bh_fdr([r[5] for r in rows])
    return [
        DiffExprResult(mirna, pair, xe, xc, fc, z, p, q, is_significant(fc, q, config))
        for (mirna, xe, xc, fc, z, p), q in zip(rows, qs)
    ]
