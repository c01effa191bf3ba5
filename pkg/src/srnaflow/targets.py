"""miRNA target ranking by position-weighted complementarity."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from srnaflow.errors import EmptyTranscriptome

MISMATCH = 1.0
WOBBLE = 0.5
GAP = 2.0
SEED = (2, 13)  # 1-based mature positions with doubled penalties
SEED_FACTOR = 2.0

_CODE = {"A": 0, "C": 1, "G": 2, "T": 3}
# penalty[mirna base, target base] for an antiparallel pairing
_PAIR_COST = np.full((4, 5), MISMATCH)
for _m, _t in (("A", "T"), ("T", "A"), ("G", "C"), ("C", "G")):
    _PAIR_COST[_CODE[_m], _CODE[_t]] = 0.0
_PAIR_COST[_CODE["G"], _CODE["T"]] = WOBBLE
_PAIR_COST[_CODE["T"], _CODE["G"]] = WOBBLE

_VARIANT = re.compile(r"\.\d+$")


@dataclass(frozen=True)
class TargetHit:
    mirna: str
    gene_id: str
    score: float


def _position_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    lo, hi = SEED
    w[lo - 1:min(hi, n)] = SEED_FACTOR
    return w


def site_score(mirna: str, transcript: str) -> float:
    """Lowest penalty of any site for ``mirna`` on ``transcript``.

    The whole mature must align (antiparallel) to some stretch of the
    transcript. Mismatch 1.0, G:U wobble 0.5, each gapped base 2.0; all
    penalties are doubled at mature positions 2-13. A perfect
    reverse-complement site scores 0.
    """
    m = len(mirna)
    if m == 0 or not transcript:
        return float("inf")
    # walking the mature 5'->3' means walking the transcript 3'->5'
    target = np.array([_CODE.get(ch, 4) for ch in transcript[::-1]], dtype=np.int64)
    n = target.size
    weights = _position_weights(m)
    ramp = GAP * np.arange(n + 1)
    prev = np.zeros(n + 1)  # free start anywhere on the transcript
    for i, base in enumerate(mirna):
        w = weights[i]
        cur = np.empty(n + 1)
        cur[0] = prev[0] + GAP * w
        pair = _PAIR_COST[_CODE[base], target] * w
        cur[1:] = np.minimum(prev[:-1] + pair, prev[1:] + GAP * w)
        # insertions in the target after mature base i: running min with a ramp
        ins = GAP * (w if SEED[0] <= i + 1 < SEED[1] else 1.0)
        if ins != GAP:
            steps = ins * np.arange(n + 1)
        else:
            steps = ramp
        cur = np.minimum.accumulate(cur - steps) + steps
        prev = cur
    return float(prev.min())


def consolidate_gene_id(transcript_id: str) -> str:
    """Strip a trailing ``.N`` variant suffix: ``AT1G01010.2 -> AT1G01010``."""
    return _VARIANT.sub("", transcript_id)


def target_rank(mirna: str, transcripts: dict[str, str], max_transcripts: int = 100,
                top_genes: int = 5) -> list[TargetHit]:
    """Best ``top_genes`` consolidated gene ids for ``mirna``.

    Transcripts are scored, the best ``max_transcripts`` kept (ties by id),
    variants merged under their gene id keeping the best score, and genes
    sorted by ``(score, gene_id)``.
    """
    if not transcripts:
        raise EmptyTranscriptome("no transcripts to scan")
    scored = sorted((site_score(mirna, seq), tid) for tid, seq in transcripts.items())
    best: dict[str, float] = {}
    for score, tid in scored[:max_transcripts]:
        gene = consolidate_gene_id(tid)
        if gene not in best or score < best[gene]:
            best[gene] = score
    ranked = sorted(best.items(), key=lambda kv: (kv[1], kv[0]))
    return [TargetHit(mirna, gene, score) for gene, score in ranked[:top_genes]]
