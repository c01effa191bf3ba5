"""Sequence-level filters and annotation-driven exclusion."""

from __future__ import annotations

import bisect
from collections import Counter
from typing import Iterable

from srnaflow.core import SmallRnaRecord
from srnaflow.errors import TooShort
from srnaflow.ingest import EXCLUDED_CLASSES, FeatureAnnotation


def dust_score(seq: str) -> float:
    """Triplet-repetition score of the whole read.

    With ``T = len(seq) - 2`` overlapping 3-mers of multiplicity ``c``, the
    score is ``sum(c * (c - 1) / 2) / (T - 1)``.
    """
    if len(seq) < 4:
        raise TooShort(f"dust needs >= 4 nt, got {len(seq)}")
    triplets = Counter(seq[i:i + 3] for i in range(len(seq) - 2))
    pairs = sum(c * (c - 1) // 2 for c in triplets.values())
    return pairs / (len(seq) - 3)


def passes_low_complexity(record: SmallRnaRecord, threshold: float) -> bool:
    return dust_score(record.sequence) <= threshold


def low_complexity_filter(records: Iterable[SmallRnaRecord], threshold: float) -> list:
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    return [r for r in records if passes_low_complexity(r, threshold)]


def passes_abundance_length(record: SmallRnaRecord, config) -> bool:
    return record.total >= config.min_srna_freq and len(record.sequence) >= config.min_srna_len


def abundance_length_filter(records, config) -> list:
    return [r for r in records if passes_abundance_length(r, config)]


def in_mirna_length(record: SmallRnaRecord, length_range=(21, 24)) -> bool:
    lo, hi = length_range
    return lo <= len(record.sequence) <= hi


def mirna_length_gate(records, length_range=(21, 24)) -> list:
    return [r for r in records if in_mirna_length(r, length_range)]


class AnnotationIndex:
    """Excluded-class intervals per chromosome, queried by binary search."""

    def __init__(self, annotations: Iterable[FeatureAnnotation],
                 classes=EXCLUDED_CLASSES):
        by_chrom: dict[str, list[tuple[int, int]]] = {}
        for a in annotations:
            if a.feature_class in classes:
                by_chrom.setdefault(a.chrom, []).append((a.start, a.end))
        self._starts: dict[str, list[int]] = {}
        # running max of interval ends lets one bisect answer overlap queries
        self._max_end: dict[str, list[int]] = {}
        for chrom, ivs in by_chrom.items():
            ivs.sort()
            self._starts[chrom] = [s for s, _ in ivs]
            running, best = [], -1
            for _, e in ivs:
                best = max(best, e)
                running.append(best)
            self._max_end[chrom] = running

    def overlaps(self, chrom: str, start: int, end: int) -> bool:
        """True if ``[start, end)`` shares at least one base with an interval."""
        starts = self._starts.get(chrom)
        if not starts:
            return False
        i = bisect.bisect_left(starts, end) - 1
        return i >= 0 and self._max_end[chrom][i] > start


def is_known_nonmirna(record: SmallRnaRecord, index: AnnotationIndex) -> bool:
    return any(index.overlaps(l.chrom, l.start, l.end) for l in record.loci)


def exclude_known_nonmirna(records, annotations) -> list:
    """Drop records with ANY locus overlapping CDS/rRNA/snoRNA/snRNA/tRNA."""
    index = annotations if isinstance(annotations, AnnotationIndex) \
        else AnnotationIndex(annotations)
    return [r for r in records if not is_known_nonmirna(r, index)]
