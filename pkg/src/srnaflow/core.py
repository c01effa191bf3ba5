"""Sequence primitives and the record types that flow through the pipeline.

Sequences are kept as plain ``str`` over the DNA alphabet ``ACGT``; reads
given in RNA letters are mapped U -> T on the way in so reads and genome
share one alphabet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from srnaflow.errors import InvalidBase

DNA = frozenset("ACGT")

_NORMALIZE = str.maketrans("acgtuU", "ACGTTT")
_COMPLEMENT = str.maketrans("ACGTN", "TGCAN")


def normalize_sequence(raw: str) -> str:
    """Uppercase ``raw`` and map U to T.

    Raises ``InvalidBase`` with the 0-based position of the first character
    outside ``ACGTU`` (either case).
    """
    if not raw:
        raise InvalidBase(0, "")
    seq = raw.translate(_NORMALIZE)
    if not DNA.issuperset(seq):
        for i, ch in enumerate(seq):
            if ch not in DNA:
                raise InvalidBase(i, raw[i])
    return seq


def reverse_complement(seq: str) -> str:
    return seq.translate(_COMPLEMENT)[::-1]


@dataclass(frozen=True, order=True)
class Locus:
    """Exact placement of a read: 0-based half-open ``[start, end)``.

    Coordinates are always on the forward chromosome; ``strand == "-"``
    means the read's reverse complement matches there.
    """

    chrom: str
    start: int
    end: int
    strand: str = "+"

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class SmallRnaRecord:
    """A unique read sequence with one abundance per input library."""

    sequence: str
    counts: tuple[int, ...]
    loci: tuple[Locus, ...] = field(default=())

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __len__(self) -> int:
        return len(self.sequence)

    def with_loci(self, loci) -> "SmallRnaRecord":
        return SmallRnaRecord(self.sequence, self.counts, tuple(loci))


@dataclass(frozen=True)
class MirnaPrediction:
    """A validated mature miRNA in one library."""

    library: str
    sequence: str
    count: int
    star: str
    star_count: int
    precursor: "Locus"
    precursor_sequence: str
    structure: str
    loci: tuple[Locus, ...]
