import math
import random

import pytest
from hypothesis import given, strategies as st

from srnaflow.config import default_config
from srnaflow.core import Locus, SmallRnaRecord
from srnaflow.errors import TooShort
from srnaflow.ingest import EXCLUDED_CLASSES, FeatureAnnotation
from srnaflow.prefilter import (AnnotationIndex, abundance_length_filter, dust_score,
                                exclude_known_nonmirna, in_mirna_length, is_known_nonmirna,
                                low_complexity_filter, mirna_length_gate,
                                passes_abundance_length)


def naive_dust(seq):
    """Count equal 3-mer pairs directly, no hashing."""
    kmers = [seq[i:i + 3] for i in range(len(seq) - 2)]
    pairs = sum(1 for i in range(len(kmers)) for j in range(i + 1, len(kmers))
                if kmers[i] == kmers[j])
    return pairs / (len(kmers) - 1)


def rec(seq, count=50, loci=()):
    return SmallRnaRecord(seq, (count,), tuple(loci))


def test_dust_all_distinct_triplets_is_zero():
    seq = "ACGTTGCAAGG"
    kmers = [seq[i:i + 3] for i in range(len(seq) - 2)]
    assert len(set(kmers)) == len(kmers)
    assert dust_score(seq) == 0.0


def test_dust_example_with_repeated_triplet():
    # ACG occurs twice here, so the score is one pair over eight
    assert dust_score("ACGTACGGTCA") == pytest.approx(1 / 8)


def test_dust_dinucleotide_repeat():
    assert dust_score("AC" * 10) == pytest.approx(72 / 17, abs=1e-12)
    assert dust_score("AC" * 10) == pytest.approx(4.235, abs=5e-4)


@given(st.text(alphabet="ACGT", min_size=4, max_size=40))
def test_dust_matches_pair_counting_oracle(seq):
    assert dust_score(seq) == pytest.approx(naive_dust(seq), abs=1e-12)


def test_dust_too_short():
    with pytest.raises(TooShort):
        dust_score("ACG")


def test_low_complexity_filter():
    keep, drop = rec("ACGTTGCAAGGATCCTAGGA"), rec("AC" * 10)
    assert low_complexity_filter([keep, drop], 2.0) == [keep]
    assert low_complexity_filter([keep, drop], math.inf) == [keep, drop]


@pytest.mark.parametrize("count,length,kept", [(9, 21, False), (10, 17, False),
                                               (10, 18, True), (500, 24, True)])
def test_abundance_length_boundaries(count, length, kept):
    r = rec("A" * length, count)
    assert passes_abundance_length(r, default_config()) is kept
    assert (abundance_length_filter([r], default_config()) == [r]) is kept


def test_abundance_uses_total_over_libraries():
    r = SmallRnaRecord("A" * 20, (4, 6))
    assert passes_abundance_length(r, default_config())


@pytest.mark.parametrize("length,kept", [(20, False), (21, True), (24, True), (25, False)])
def test_mirna_length_gate(length, kept):
    r = rec("C" * length)
    assert in_mirna_length(r) is kept
    assert (mirna_length_gate([r]) == [r]) is kept


def ann(chrom, start, end, cls):
    return FeatureAnnotation(chrom, start, end, cls)


def test_annotation_overlap_examples():
    index = AnnotationIndex([ann("c1", 110, 180, "tRNA"), ann("c1", 121, 200, "CDS")])
    assert index.overlaps("c1", 100, 121)
    only_cds = AnnotationIndex([ann("c1", 121, 200, "CDS")])
    assert not only_cds.overlaps("c1", 100, 121)
    assert not index.overlaps("c2", 100, 121)


def test_any_locus_rule_and_class_selection():
    annotations = [ann("c1", 500, 600, "rRNA"), ann("c1", 0, 50, "other")]
    index = AnnotationIndex(annotations)
    hit = rec("A" * 21, loci=[Locus("c1", 100, 121), Locus("c1", 590, 611, "-")])
    clean = rec("C" * 21, loci=[Locus("c1", 10, 31)])
    assert is_known_nonmirna(hit, index)
    assert not is_known_nonmirna(clean, index)
    assert exclude_known_nonmirna([hit, clean], annotations) == [clean]


def test_annotation_index_matches_naive_scan():
    rng = random.Random(11)
    classes = sorted(EXCLUDED_CLASSES | {"other"})
    annotations = []
    for _ in range(300):
        chrom = rng.choice(["c1", "c2"])
        start = rng.randrange(0, 10_000)
        annotations.append(ann(chrom, start, start + rng.randint(1, 800), rng.choice(classes)))
    index = AnnotationIndex(annotations)
    for _ in range(2000):
        chrom = rng.choice(["c1", "c2", "c3"])
        start = rng.randrange(0, 11_000)
        end = start + rng.randint(1, 30)
        naive = any(a.chrom == chrom and a.start < end and start < a.end
                    and a.feature_class in EXCLUDED_CLASSES for a in annotations)
        assert index.overlaps(chrom, start, end) is naive
