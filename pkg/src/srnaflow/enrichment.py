"""Hypergeometric pathway enrichment of target-gene sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from srnaflow.ingest import PathwayMap


@dataclass(frozen=True)
class EnrichmentResult:
    pathway: str
    name: str
    k: int
    n: int
    K: int
    N: int
    p: float
    enriched: bool


def _log_comb(n: int, r: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


def hypergeom_sf(k: int, N: int, K: int, n: int) -> float:
    """``P(X >= k)`` for ``X ~ Hypergeometric(N, K, n)``.

    Exact summation of ``C(K, i) C(N-K, n-i) / C(N, n)`` over the upper tail,
    accumulated in log space.
    """
    if not (0 <= K <= N and 0 <= n <= N):
        raise ValueError("need 0 <= K <= N and 0 <= n <= N")
    lo = max(k, 0, n - (N - K))
    hi = min(n, K)
    if k <= max(0, n - (N - K)):
        return 1.0
    if lo > hi:
        return 0.0
    log_total = _log_comb(N, n)
    terms = [_log_comb(K, i) + _log_comb(N - K, n - i) - log_total for i in range(lo, hi + 1)]
    top = max(terms)
    return min(1.0, math.exp(top) * math.fsum(math.exp(t - top) for t in terms))


def hypergeom_enrich(sample_genes: Iterable[str], background: PathwayMap,
                     alpha: float = 0.05) -> list[EnrichmentResult]:
    """Test every pathway of ``background`` for over-representation.

    The universe is every gene carrying at least one pathway; sample genes
    outside it are ignored. Rows are sorted by ``(p, pathway)``.
    """
    universe = background.genes
    sample = set(sample_genes) & universe
    N, n = len(universe), len(sample)
    rows = []
    for pathway, genes in background.pathway_genes().items():
        K = len(genes)
        k = len(genes & sample)
        p = hypergeom_sf(k, N, K, n)
        rows.append(EnrichmentResult(pathway, background.names.get(pathway, ""),
                                     k, n, K, N, p, p < alpha))
    rows.sort(key=lambda r: (r.p, r.pathway))
    return rows
