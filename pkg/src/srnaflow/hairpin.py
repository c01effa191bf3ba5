"""Precursor extraction and hairpin validation.

A candidate is one window around one locus of a mature read. It goes through
the gates in a fixed order and keeps the first failure code:

    duplex (IN_LOOP, UNPAIRED_EXCESS, BULGE_EXCESS, STAR_UNDEFINED)
    -> length (TOO_LONG) -> second loop (SECOND_LOOP)
    -> dominance (NOT_DOMINANT, LOW_EXPRESSION)

Window coordinates (``mirna_offset``, ``span`` ...) are 0-based offsets into
the sense-oriented window sequence.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, replace
from typing import Iterable

from srnaflow.core import Locus, SmallRnaRecord, reverse_complement
from srnaflow.errors import StarUndefined
from srnaflow.folding import MIN_FOLD_LENGTH, SecondaryStructure, fold

PENDING = "PENDING"
PASS = "PASS"
IN_LOOP = "IN_LOOP"
UNPAIRED_EXCESS = "UNPAIRED_EXCESS"
BULGE_EXCESS = "BULGE_EXCESS"
STAR_UNDEFINED = "STAR_UNDEFINED"
TOO_LONG = "TOO_LONG"
SECOND_LOOP = "SECOND_LOOP"
NOT_DOMINANT = "NOT_DOMINANT"
LOW_EXPRESSION = "LOW_EXPRESSION"
WINDOW_TOO_SHORT = "WINDOW_TOO_SHORT"

GATE_ORDER = (
    (IN_LOOP, UNPAIRED_EXCESS, BULGE_EXCESS, STAR_UNDEFINED),
    (TOO_LONG,),
    (SECOND_LOOP,),
    (NOT_DOMINANT, LOW_EXPRESSION),
)


@dataclass(frozen=True)
class PrecursorCandidate:
    mirna: str
    locus: Locus
    chrom: str
    start: int
    end: int
    strand: str
    sequence: str
    mirna_offset: int
    window: int = 0
    structure: SecondaryStructure | None = None
    star_offset: int | None = None
    star_end: int | None = None
    span: tuple[int, int] | None = None
    verdict: str = PENDING
    mirna_count: int = 0
    star_count: int = 0
    window_count: int = 0

    @property
    def mirna_end(self) -> int:
        return self.mirna_offset + len(self.mirna)

    @property
    def star(self) -> str:
        if self.star_offset is None:
            return ""
        return self.sequence[self.star_offset:self.star_end]

    @property
    def alive(self) -> bool:
        return self.verdict in (PENDING, PASS)

    def to_genomic(self, lo: int, hi: int) -> tuple[int, int]:
        """Map a window interval ``[lo, hi)`` to forward-strand coordinates."""
        if self.strand == "+":
            return self.start + lo, self.start + hi
        return self.end - hi, self.end - lo

    @property
    def precursor_locus(self) -> Locus | None:
        if self.span is None:
            return None
        g_lo, g_hi = self.to_genomic(*self.span)
        return Locus(self.chrom, g_lo, g_hi, self.strand)

    @property
    def precursor_sequence(self) -> str:
        if self.span is None:
            return ""
        return self.sequence[self.span[0]:self.span[1]]

    @property
    def precursor_structure(self) -> str:
        if self.span is None or self.structure is None:
            return ""
        lo, hi = self.span
        table = self.structure.pair_table
        return "".join(
            "." if not lo <= table[x] < hi else ("(" if table[x] > x else ")")
            for x in range(lo, hi)
        )


def extract_windows(locus: Locus, genome: dict[str, str], config,
                    mirna: str | None = None) -> list[PrecursorCandidate]:
    """The two precursor windows around ``locus``, in sense orientation.

    Window 0 extends ``precursor_search_range`` upstream of the read (read on
    the 3' arm); window 1 extends it downstream (read on the 5' arm). The
    opposite side gets ``extra_flank``. Both are clipped to the chromosome.
    """
    chrom_seq = genome[locus.chrom]
    size = len(chrom_seq)
    far, near = config.precursor_search_range, config.extra_flank
    if locus.strand == "+":
        spans = [(locus.start - far, locus.end + near), (locus.start - near, locus.end + far)]
    else:
        spans = [(locus.start - near, locus.end + far), (locus.start - far, locus.end + near)]
    out = []
    for w, (lo, hi) in enumerate(spans):
        lo, hi = max(0, lo), min(size, hi)
        piece = chrom_seq[lo:hi]
        if locus.strand == "+":
            offset = locus.start - lo
        else:
            piece = reverse_complement(piece)
            offset = hi - locus.end
        if mirna is None:
            mirna = piece[offset:offset + len(locus)]
        out.append(PrecursorCandidate(mirna, locus, locus.chrom, lo, hi, locus.strand,
                                      piece, offset, window=w))
    return out


def _loop_closing(table) -> list[int]:
    """For every position, the 5' index of the innermost enclosing pair or -1."""
    closing = [-1] * len(table)
    stack: list[int] = []
    for x, p in enumerate(table):
        if p >= 0 and p < x:
            stack.pop()
        closing[x] = stack[-1] if stack else -1
        if p > x:
            stack.append(x)
    return closing


def _in_hairpin_loop(table, x: int, closing, paired_prefix) -> bool:
    i = closing[x]
    if i < 0 or table[x] >= 0:
        return False
    j = table[i]
    return paired_prefix[j] - paired_prefix[i + 1] == 0


def check_duplex(candidate: PrecursorCandidate, config) -> str:
    """Duplex rules for the mature region.

    (a) all of its pairs go to one side of it and none of its bases sits in
    a hairpin loop; (b) unpaired positions <= duplex_max_unpaired; (c)
    longest unpaired run <= duplex_max_bulge.
    """
    table = candidate.structure.pair_table
    a, b = candidate.mirna_offset, candidate.mirna_end
    partners = [table[x] for x in range(a, b) if table[x] >= 0]
    if any(a <= p < b for p in partners):
        return IN_LOOP
    if partners and not (all(p >= b for p in partners) or all(p < a for p in partners)):
        return IN_LOOP
    closing = _loop_closing(table)
    paired_prefix = [0]
    for p in table:
        paired_prefix.append(paired_prefix[-1] + (p >= 0))
    if any(_in_hairpin_loop(table, x, closing, paired_prefix) for x in range(a, b)):
        return IN_LOOP
    unpaired = [table[x] < 0 for x in range(a, b)]
    if sum(unpaired) > config.duplex_max_unpaired:
        return UNPAIRED_EXCESS
    run = longest = 0
    for u in unpaired:
        run = run + 1 if u else 0
        longest = max(longest, run)
    if longest > config.duplex_max_bulge:
        return BULGE_EXCESS
    return PASS


def _partner(table, x: int, a: int, b: int) -> int:
    """Partner of ``x``; for unpaired ``x`` extrapolate from the nearest paired
    position of the region along the stem diagonal."""
    if table[x] >= 0:
        return table[x]
    for d in range(1, b - a):
        for y in (x - d, x + d):
            if a <= y < b and table[y] >= 0:
                return table[y] + (y - x)
    raise StarUndefined("mature region has no paired base")


def derive_star(table, mirna_offset: int, mirna_len: int) -> tuple[int, int]:
    """Star region ``[start, end)`` giving 2-nt 3' overhangs on both ends.

    The star's 5' base pairs with the third-from-last mature base, and its
    3' end runs two bases past the partner of the mature 5' base.
    """
    a, b = mirna_offset, mirna_offset + mirna_len
    if mirna_len < 3:
        raise StarUndefined("mature region too short")
    start = _partner(table, b - 3, a, b)
    end = _partner(table, a, a, b) + 3
    if start < 0 or end > len(table) or start >= end:
        raise StarUndefined(f"star [{start}, {end}) outside window of {len(table)}")
    return start, end


def hairpin_span(candidate: PrecursorCandidate) -> tuple[int, int]:
    """Trim to the mature/star duplex and the stem-loop between them."""
    lo = min(candidate.mirna_offset, candidate.star_offset)
    hi = max(candidate.mirna_end, candidate.star_end)
    return lo, hi


def _stacked_pairs(table, lo: int, hi: int) -> list[int]:
    """Pair table restricted to ``[lo, hi)`` with lonely pairs dropped.

    A lonely pair stacks on neither neighbour; such single pairs carry no
    helix and are read as unpaired when judging loop topology.
    """
    def paired(i, j):
        return lo <= i < j < hi and table[i] == j

    out = [-1] * len(table)
    for x in range(lo, hi):
        p = table[x]
        i, j = min(x, p), max(x, p)
        if paired(i, j) and (paired(i - 1, j + 1) or paired(i + 1, j - 1)):
            out[x] = p
    return out


def max_second_loop(table, lo: int, hi: int) -> int | None:
    """Largest one-side unpaired stretch of any non-terminal loop in ``[lo, hi)``.

    Only stacked pairs with both ends inside the span count. Returns None
    when the span is not a single unbranched stem-loop (multibranch or
    several stems).
    """
    table = _stacked_pairs(table, lo, hi)

    def children(i, j):
        out = []
        x = i
        while x < j:
            p = table[x]
            if p > x:
                out.append((x, p))
                x = p + 1
            else:
                x += 1
        return out

    tops = children(lo, hi)
    if len(tops) != 1:
        return None if tops else 0
    i, j = tops[0]
    largest = 0
    while True:
        branches = children(i + 1, j)
        if not branches:
            return largest
        if len(branches) > 1:
            return None
        k, l = branches[0]
        largest = max(largest, k - i - 1, j - l - 1)
        i, j = k, l


def structural_gate(candidate: PrecursorCandidate, config) -> str:
    lo, hi = candidate.span
    if hi - lo > config.max_premirna_len:
        return TOO_LONG
    largest = max_second_loop(candidate.structure.pair_table, lo, hi)
    if largest is None or largest > config.max_second_loop:
        return SECOND_LOOP
    return PASS


class ExpressionReference:
    """Aligned reads indexed by (chrom, strand) and start, for window sums."""

    def __init__(self, records: Iterable[SmallRnaRecord]):
        buckets: dict[tuple[str, str], list] = {}
        for rec in records:
            for loc in rec.loci:
                buckets.setdefault((loc.chrom, loc.strand), []).append(
                    (loc.start, loc.end, rec.sequence, rec.counts))
        self._entries = {}
        self._starts = {}
        for key, rows in buckets.items():
            rows.sort()
            self._entries[key] = rows
            self._starts[key] = [r[0] for r in rows]

    def reads_within(self, chrom: str, strand: str, lo: int, hi: int) -> dict[str, tuple]:
        """Distinct reads with a locus fully inside ``[lo, hi)`` on ``strand``."""
        key = (chrom, strand)
        starts = self._starts.get(key)
        if not starts:
            return {}
        rows = self._entries[key]
        out = {}
        for idx in range(bisect.bisect_left(starts, lo), bisect.bisect_left(starts, hi)):
            start, end, seq, counts = rows[idx]
            if end <= hi:
                out[seq] = counts
        return out


def dominance_check(candidate: PrecursorCandidate, reference: ExpressionReference,
                    config, library: int = 0) -> tuple[str, int, int, int]:
    """Return ``(verdict, mirna_count, star_count, window_count)``.

    Window expression E sums every read placed inside the trimmed precursor
    on its strand; M adds the mature and star reads.
    """
    g_lo, g_hi = candidate.to_genomic(*candidate.span)
    reads = reference.reads_within(candidate.chrom, candidate.strand, g_lo, g_hi)
    total = sum(c[library] for c in reads.values())
    mirna_count = reads[candidate.mirna][library] if candidate.mirna in reads else 0
    star = candidate.star
    star_count = reads[star][library] if star in reads and star != candidate.mirna else 0
    verdict = dominance_verdict(mirna_count + star_count, total, mirna_count, config)
    return verdict, mirna_count, star_count, total


def dominance_verdict(m: int, e: int, mirna_count: int, config) -> str:
    if e <= 0 or m / e < config.dominance_threshold:
        return NOT_DOMINANT
    if mirna_count < config.min_mirna_freq:
        return LOW_EXPRESSION
    return PASS


# Stage functions: each returns the candidate with the next gate applied.

def fold_candidate(c: PrecursorCandidate) -> PrecursorCandidate:
    if len(c.sequence) < MIN_FOLD_LENGTH:
        return replace(c, verdict=WINDOW_TOO_SHORT)
    return replace(c, structure=fold(c.sequence))


def apply_duplex(c: PrecursorCandidate, config) -> PrecursorCandidate:
    if not c.alive:
        return c
    code = check_duplex(c, config)
    if code != PASS:
        return replace(c, verdict=code)
    return c


def apply_star(c: PrecursorCandidate) -> PrecursorCandidate:
    if not c.alive:
        return c
    try:
        start, end = derive_star(c.structure.pair_table, c.mirna_offset, len(c.mirna))
    except StarUndefined:
        return replace(c, verdict=STAR_UNDEFINED)
    return replace(c, star_offset=start, star_end=end)


def apply_trim(c: PrecursorCandidate) -> PrecursorCandidate:
    if not c.alive:
        return c
    return replace(c, span=hairpin_span(c))


def apply_length_gate(c: PrecursorCandidate, config) -> PrecursorCandidate:
    if not c.alive:
        return c
    lo, hi = c.span
    return c if hi - lo <= config.max_premirna_len else replace(c, verdict=TOO_LONG)


def apply_second_loop_gate(c: PrecursorCandidate, config) -> PrecursorCandidate:
    if not c.alive:
        return c
    code = structural_gate(c, config)
    return c if code == PASS else replace(c, verdict=code)


def apply_dominance(c: PrecursorCandidate, reference: ExpressionReference, config,
                    library: int = 0) -> PrecursorCandidate:
    if not c.alive:
        return c
    verdict, m, s, e = dominance_check(c, reference, config, library)
    return replace(c, verdict=verdict, mirna_count=m, star_count=s, window_count=e)


def precursor_rank(c: PrecursorCandidate) -> tuple:
    """Sort key: passing first, then shorter precursor, then window order."""
    passed = c.verdict == PASS
    length = (c.span[1] - c.span[0]) if (passed and c.span) else 0
    return (0 if passed else 1, length, c.window)
