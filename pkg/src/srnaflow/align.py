"""Suffix-array genome index and exact both-strand read placement."""

from __future__ import annotations

import bisect
import hashlib
from array import array
from pathlib import Path

import numpy as np

from srnaflow.core import DNA, Locus, SmallRnaRecord, reverse_complement

SEPARATOR = b"$"


def suffix_array(text: bytes) -> np.ndarray:
    """Suffix array of ``text`` by prefix doubling (byte order, shorter-first).

    Each round sorts suffixes by (rank of first k bytes, rank of next k bytes)
    and stops once all ranks are distinct, so the cost is
    O(n log n * log(longest repeat)).
    """
    n = len(text)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rank = np.frombuffer(text, dtype=np.uint8).astype(np.int64)
    k = 1
    while True:
        second = np.full(n, -1, dtype=np.int64)
        if k < n:
            second[:n - k] = rank[k:]
        order = np.lexsort((second, rank))
        r1, r2 = rank[order], second[order]
        changed = np.empty(n, dtype=np.int64)
        changed[0] = 0
        changed[1:] = (r1[1:] != r1[:-1]) | (r2[1:] != r2[:-1])
        new_rank = np.empty(n, dtype=np.int64)
        new_rank[order] = np.cumsum(changed)
        rank = new_rank
        if rank[order[-1]] == n - 1 or k >= n:
            return order.astype(np.int64)
        k *= 2


class GenomeIndex:
    """Chromosomes joined by ``$`` separators plus their suffix array.

    Reads contain only ACGT, so no match can cover a separator or an ``N``.
    """

    def __init__(self, chroms: list[str], offsets: list[int], lengths: list[int],
                 text: bytes, sa: np.ndarray):
        self.chroms = chroms
        self.offsets = offsets
        self.lengths = lengths
        self.text = text
        self.sa = np.asarray(sa, dtype=np.int64)
        self._sa = array("q", self.sa.tobytes())
        self._chrom_rank = {c: i for i, c in enumerate(chroms)}

    def __len__(self) -> int:
        return len(self.text)

    def chrom_length(self, chrom: str) -> int:
        return self.lengths[self._chrom_rank[chrom]]

    def chrom_order(self, chrom: str) -> int:
        return self._chrom_rank[chrom]

    def _range(self, pattern: bytes) -> tuple[int, int]:
        m = len(pattern)
        text = self.text

        def key(pos):
            return text[pos:pos + m]

        lo = bisect.bisect_left(self._sa, pattern, key=key)
        hi = bisect.bisect_right(self._sa, pattern, lo=lo, key=key)
        return lo, hi

    def _positions(self, pattern: str) -> list[tuple[int, int]]:
        lo, hi = self._range(pattern.encode("ascii"))
        out = []
        for pos in self._sa[lo:hi]:
            ci = bisect.bisect_right(self.offsets, pos) - 1
            out.append((ci, pos - self.offsets[ci]))
        return out

    def locate(self, query: str) -> list[Locus]:
        return locate_exact(self, query)

    def save(self, path) -> None:
        np.savez(path, text=np.frombuffer(self.text, dtype=np.uint8), sa=self.sa,
                 chroms=np.array(self.chroms), offsets=np.array(self.offsets),
                 lengths=np.array(self.lengths))

    @classmethod
    def load(cls, path) -> "GenomeIndex":
        with np.load(path, allow_pickle=False) as z:
            return cls([str(c) for c in z["chroms"]], [int(x) for x in z["offsets"]],
                       [int(x) for x in z["lengths"]], z["text"].tobytes(), z["sa"])


def build_index(genome: dict[str, str]) -> GenomeIndex:
    if not genome:
        raise ValueError("empty genome")
    chroms, offsets, lengths, pieces = [], [], [], []
    pos = 0
    for chrom, seq in genome.items():
        chroms.append(chrom)
        offsets.append(pos)
        lengths.append(len(seq))
        pieces.append(seq.encode("ascii"))
        pos += len(seq) + 1
    text = SEPARATOR.join(pieces) + SEPARATOR
    return GenomeIndex(chroms, offsets, lengths, text, suffix_array(text))


def genome_digest(genome: dict[str, str]) -> str:
    h = hashlib.sha256()
    for chrom, seq in genome.items():
        h.update(chrom.encode())
        h.update(b"\n")
        h.update(seq.encode())
        h.update(b"\n")
    return h.hexdigest()


def cached_index(genome: dict[str, str], cache_dir) -> GenomeIndex:
    """Load the index for ``genome`` from ``cache_dir`` or build and store it."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"index-{genome_digest(genome)[:16]}.npz"
    if path.exists():
        return GenomeIndex.load(path)
    index = build_index(genome)
    index.save(path)
    return index


def locate_exact(index: GenomeIndex, query: str) -> list[Locus]:
    """All full-length exact placements of ``query`` on both strands.

    Sorted by (chromosome order in the genome, start, strand). Queries with
    anything but ACGT (or empty ones) have no placements.
    """
    m = len(query)
    if not m or not DNA.issuperset(query):
        return []
    hits = [(ci, start, "+") for ci, start in index._positions(query)]
    hits += [(ci, start, "-") for ci, start in index._positions(reverse_complement(query))]
    hits.sort()
    return [Locus(index.chroms[ci], s, s + m, strand) for ci, s, strand in hits]


def align_record(record: SmallRnaRecord, index: GenomeIndex) -> SmallRnaRecord:
    return record.with_loci(locate_exact(index, record.sequence))


def within_locus_limit(record: SmallRnaRecord, max_loci: int) -> bool:
    return 1 <= len(record.loci) <= max_loci


def locus_count_filter(records, max_loci: int) -> list:
    return [r for r in records if within_locus_limit(r, max_loci)]
