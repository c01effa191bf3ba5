"""Synthetic benchmark data: planted-hairpin genomes and negative read sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from srnaflow.core import reverse_complement
from srnaflow.errors import ExhaustedSampling
from srnaflow.ingest import EXCLUDED_CLASSES, FeatureAnnotation
from srnaflow.prefilter import AnnotationIndex

BASES = np.array(list("ACGT"))
NEGATIVE_LENGTHS = (18, 25)
NEGATIVE_FACTOR = 10
MAX_ATTEMPTS_PER_SEQUENCE = 200


def random_dna(rng: np.random.Generator, n: int) -> str:
    return "".join(BASES[rng.integers(0, 4, n)])


@dataclass(frozen=True)
class PlantedHairpin:
    name: str
    chrom: str
    start: int
    end: int
    arm: str  # "5p" or "3p"
    mature: str
    mature_start: int
    star: str
    star_start: int


@dataclass
class PlantedGenome:
    genome: dict[str, str]
    truth: list[PlantedHairpin]
    library: dict[str, int] = field(default_factory=dict)

    @property
    def truth_set(self) -> set[str]:
        return {h.mature for h in self.truth}

    def intervals(self, chrom: str | None = None) -> list[FeatureAnnotation]:
        return [FeatureAnnotation(h.chrom, h.start, h.end, "other") for h in self.truth
                if chrom is None or h.chrom == chrom]


def _star_offset(stem_len: int, loop_len: int, mature_len: int, mature_at: int) -> int:
    """Star start inside a perfect hairpin (2-nt 3' overhang rule)."""
    last = 2 * stem_len + loop_len - 1
    return last - (mature_at + mature_len - 3)


def simulate_planted_genome(n_hairpins: int, stem_len: int = 25, rng_seed: int = 0,
                            genome_size: int = 200_000, loop_len: int = 6,
                            mature_len: int = 21, chrom: str = "chr1",
                            mature_counts=(300, 3000), star_counts=(10, 60),
                            isoform_counts=(1, 5)) -> PlantedGenome:
    """Random genome with ``n_hairpins`` perfect stem-loops and their reads.

    Each hairpin is ``arm + loop + revcomp(arm)``. One arm expresses a mature
    read of ``mature_len`` nt; the library also carries its star at low
    abundance and a one-nt-shifted isoform.
    """
    if stem_len < mature_len + 4:
        raise ValueError(f"stem_len must be >= {mature_len + 4}")
    hp_len = 2 * stem_len + loop_len
    slot = genome_size // max(n_hairpins, 1)
    if slot < hp_len + 2 * 400:
        raise ValueError("genome too small for the requested hairpins")
    rng = np.random.default_rng(rng_seed)
    seq = list(random_dna(rng, genome_size))
    truth = []
    library: dict[str, int] = {}
    for h in range(n_hairpins):
        arm = random_dna(rng, stem_len)
        loop = random_dna(rng, loop_len)
        hairpin = arm + loop + reverse_complement(arm)
        start = h * slot + int(rng.integers(400, slot - hp_len - 400 + 1))
        seq[start:start + hp_len] = hairpin
        side = "5p" if rng.random() < 0.5 else "3p"
        if side == "5p":
            lo, hi = 2, stem_len - mature_len
        else:
            lo, hi = stem_len + loop_len + 2, 2 * stem_len + loop_len - mature_len
        at = int(rng.integers(lo, hi + 1))
        mature = hairpin[at:at + mature_len]
        star_at = _star_offset(stem_len, loop_len, mature_len, at)
        star = hairpin[star_at:star_at + mature_len]
        isoform = hairpin[at + 1:at + 1 + mature_len]
        truth.append(PlantedHairpin(f"hp{h:04d}", chrom, start, start + hp_len, side,
                                    mature, start + at, star, start + star_at))
        library[mature] = library.get(mature, 0) + int(rng.integers(*mature_counts, endpoint=True))
        library[star] = library.get(star, 0) + int(rng.integers(*star_counts, endpoint=True))
        library[isoform] = library.get(isoform, 0) + int(rng.integers(*isoform_counts, endpoint=True))
    return PlantedGenome({chrom: "".join(seq)}, truth, library)


def simulate_negative_set(genome: dict[str, str], annotations, known_mirnas, count: int,
                          rng_seed: int = 0, lengths=NEGATIVE_LENGTHS,
                          avoid=()) -> list[str]:
    """Random genomic fragments that are not known miRNAs.

    Lengths are uniform in ``lengths`` (inclusive); position and strand are
    uniform. Fragments equal to a known miRNA, overlapping an excluded
    feature class (or an ``avoid`` interval), containing N, or already drawn
    are rejected. Gives up with ``ExhaustedSampling`` after
    ``MAX_ATTEMPTS_PER_SEQUENCE * count`` draws.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not genome:
        raise ValueError("empty genome")
    known = set(known_mirnas)
    excluded = AnnotationIndex(annotations or (), EXCLUDED_CLASSES)
    blocked = AnnotationIndex(avoid, {a.feature_class for a in avoid}) if avoid else None
    chroms = list(genome)
    sizes = np.array([len(genome[c]) for c in chroms], dtype=float)
    weights = sizes / sizes.sum()
    rng = np.random.default_rng(rng_seed)
    lo_len, hi_len = lengths
    out: list[str] = []
    seen: set[str] = set()
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > MAX_ATTEMPTS_PER_SEQUENCE * count:
            raise ExhaustedSampling(f"only {len(out)} of {count} negatives after {attempts - 1} draws")
        chrom = chroms[int(rng.choice(len(chroms), p=weights))]
        length = int(rng.integers(lo_len, hi_len + 1))
        size = len(genome[chrom])
        if size < length:
            continue
        start = int(rng.integers(0, size - length + 1))
        frag = genome[chrom][start:start + length]
        if rng.random() < 0.5:
            frag = reverse_complement(frag)
        if "N" in frag or frag in known or frag in seen:
            continue
        if excluded.overlaps(chrom, start, start + length):
            continue
        if blocked is not None and blocked.overlaps(chrom, start, start + length):
            continue
        seen.add(frag)
        out.append(frag)
    return out


def negative_count_for(n_positives: int, factor: int = NEGATIVE_FACTOR) -> int:
    return factor * n_positives


def planted_benchmark(n_hairpins: int = 20, n_negatives: int = 200, rng_seed: int = 0,
                      genome_size: int = 200_000, stem_len: int = 25,
                      negative_counts=(10, 3000)) -> tuple[PlantedGenome, list[str]]:
    """Planted genome plus abundant random negatives mixed into its library.

    Negatives are drawn away from the planted hairpins and get abundances in
    the same range as mature reads, so only structure can reject them.
    """
    sim = simulate_planted_genome(n_hairpins, stem_len, rng_seed, genome_size)
    negatives = simulate_negative_set(sim.genome, [], sim.truth_set | set(sim.library),
                                      n_negatives, rng_seed + 1, avoid=sim.intervals())
    rng = np.random.default_rng(rng_seed + 2)
    for neg in negatives:
        sim.library[neg] = sim.library.get(neg, 0) + int(rng.integers(*negative_counts, endpoint=True))
    return sim, negatives


def scaling_benchmark(n_reads: int = 1_000_000, genome_size: int = 1_000_000,
                      n_hairpins: int = 40, n_abundant: int = 200, mean_noise: int = 3,
                      rng_seed: int = 0) -> PlantedGenome:
    """Planted genome whose library totals exactly ``n_reads`` reads.

    On top of the planted reads come ``n_abundant`` random fragments with
    hairpin-like abundance and a long tail of low-count fragments (about
    ``mean_noise`` reads each) that mostly fall under the abundance filter.
    """
    sim = simulate_planted_genome(n_hairpins, rng_seed=rng_seed, genome_size=genome_size)
    rng = np.random.default_rng(rng_seed + 3)
    known = sim.truth_set | set(sim.library)
    abundant = simulate_negative_set(sim.genome, [], known, n_abundant, rng_seed + 4,
                                     avoid=sim.intervals())
    for seq in abundant:
        sim.library[seq] = int(rng.integers(10, 3000, endpoint=True))
    budget = n_reads - sum(sim.library.values())
    if budget < 0:
        raise ValueError(f"n_reads={n_reads} is below the planted read total")
    n_noise = budget // mean_noise
    if n_noise:
        noise = simulate_negative_set(sim.genome, [], known | set(abundant), n_noise,
                                      rng_seed + 5)
        counts = 1 + rng.multinomial(budget - n_noise, np.full(n_noise, 1.0 / n_noise))
        for seq, c in zip(noise, counts):
            sim.library[seq] = int(c)
    elif budget:
        first = min(sim.library)
        sim.library[first] += budget
    return sim
