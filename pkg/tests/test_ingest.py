import random

import pytest
from hypothesis import given, settings, strategies as st

from srnaflow.errors import (BadHeader, BadPairLine, DuplicateChrom, EmptyLibrary,
                             ParseError, UnknownLibrary)
from srnaflow.ingest import (GuidePair, LibraryInput, load_annotations, load_genome,
                             load_pathways, load_transcripts, merge_libraries,
                             parse_guide_file, parse_guide_text, read_library,
                             read_library_counts, write_fasta)

READS = ["ACGTACGTACGTACGTACGTA", "ACGTACGTACGTACGTACGTA", "uuuggGCCAAAGGGTTTCCCAA",
         "TTTGGGCCAAAGGGTTTCCCAA", "GGGGCCCCAAAATTTTGGGGCC"]
EXPECTED = {"ACGTACGTACGTACGTACGTA": 2, "TTTGGGCCAAAGGGTTTCCCAA": 2,
            "GGGGCCCCAAAATTTTGGGGCC": 1}


def write_library(path, fmt, reads):
    if fmt == "reads":
        path.write_text("".join(r + "\n" for r in reads))
    elif fmt == "fasta":
        path.write_text("".join(f">r{i}\n{r[:10]}\n{r[10:]}\n" for i, r in enumerate(reads)))
    elif fmt == "fastq":
        path.write_text("".join(f"@r{i}\n{r}\n+\n{'I' * len(r)}\n" for i, r in enumerate(reads)))
    else:
        counts = {}
        for r in reads:
            counts[r] = counts.get(r, 0) + 1
        path.write_text("".join(f"{s}\t{n}\n" for s, n in counts.items()))


@pytest.mark.parametrize("fmt,suffix", [("reads", ".txt"), ("fasta", ".fa"),
                                        ("fastq", ".fastq"), ("tsv_readcount", ".tsv")])
def test_all_formats_collapse_identically(tmp_path, fmt, suffix):
    path = tmp_path / f"Lib1{suffix}"
    write_library(path, fmt, READS)
    lib = LibraryInput.from_path(path)
    assert lib.format == fmt and lib.library_id == "Lib1"
    assert read_library_counts(lib) == EXPECTED
    records = read_library(lib)
    assert [r.sequence for r in records] == sorted(EXPECTED)
    assert sum(r.total for r in records) == len(READS)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(["AAAACCCCGGGGTTTTAC", "CCGGTTAACCGGTTAACC", "GATTACAGATTACAGATT"]),
                min_size=1, max_size=30), st.randoms())
def test_collapse_is_order_independent(tmp_path_factory, reads, rnd):
    base = tmp_path_factory.mktemp("lib")
    shuffled = list(reads)
    rnd.shuffle(shuffled)
    a, b = base / "a.txt", base / "b.txt"
    write_library(a, "reads", reads)
    write_library(b, "reads", shuffled)
    ca = read_library_counts(LibraryInput.from_path(a))
    assert ca == read_library_counts(LibraryInput.from_path(b))
    assert sum(ca.values()) == len(reads)


def test_invalid_reads_dropped_and_empty_library(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("ACGTNACGT\nACGTACGTAC\n")
    assert read_library_counts(LibraryInput.from_path(path)) == {"ACGTACGTAC": 1}
    path.write_text("NNNN\n\n")
    with pytest.raises(EmptyLibrary):
        read_library_counts(LibraryInput.from_path(path))


@pytest.mark.parametrize("body,line", [("ACGT\t3\nACGT 4\n", 2), ("ACGT\tmany\n", 1),
                                       ("ACGT\t-1\n", 1)])
def test_tsv_parse_errors_carry_line(tmp_path, body, line):
    path = tmp_path / "l.tsv"
    path.write_text(body)
    with pytest.raises(ParseError) as exc:
        read_library_counts(LibraryInput.from_path(path))
    assert exc.value.line_no == line


def test_fastq_errors(tmp_path):
    path = tmp_path / "l.fq"
    path.write_text("@r\nACGT\n+\nIIII\n@r2\nACGT\n")
    with pytest.raises(ParseError):
        read_library_counts(LibraryInput.from_path(path))
    path.write_text("r\nACGT\n+\nIIII\n")
    with pytest.raises(ParseError):
        read_library_counts(LibraryInput.from_path(path))


def test_unknown_extension():
    with pytest.raises(ValueError):
        LibraryInput.from_path("lib.bam")


def test_merge_libraries_count_vectors():
    merged = merge_libraries([{"AAA": 2, "CCC": 1}, {"CCC": 5, "GGG": 7}])
    assert [(r.sequence, r.counts) for r in merged] == [
        ("AAA", (2, 0)), ("CCC", (1, 5)), ("GGG", (0, 7))]


def test_guide_example_block():
    assert parse_guide_text("Experiment->Control\nLib2->Lib1") == [GuidePair("Lib2", "Lib1")]
    assert parse_guide_text("Experiment->Control\n") == []


def test_guide_errors():
    with pytest.raises(BadHeader):
        parse_guide_text("Control->Experiment\nLib2->Lib1")
    with pytest.raises(BadHeader):
        parse_guide_text("")
    with pytest.raises(BadPairLine) as exc:
        parse_guide_text("Experiment->Control\nLib2-Lib1")
    assert exc.value.line_no == 2
    with pytest.raises(BadPairLine):
        parse_guide_text("Experiment->Control\nLib2->Lib1\nLib3->")
    with pytest.raises(BadPairLine):
        parse_guide_text("Experiment->Control\nLib1->Lib1")
    with pytest.raises(UnknownLibrary):
        parse_guide_text("Experiment->Control\nLib3->Lib1", ["Lib1", "Lib2"])


def test_guide_file(tmp_path):
    path = tmp_path / "guide.txt"
    path.write_text("Experiment->Control\n\nLib2->Lib1\nLib3->Lib1\n")
    assert parse_guide_file(path, ["Lib1", "Lib2", "Lib3"]) == [
        GuidePair("Lib2", "Lib1"), GuidePair("Lib3", "Lib1")]


def test_genome_loading(tmp_path):
    path = tmp_path / "g.fa"
    path.write_text(">c1 description\nACgt\nNNRY\n>c2\nTTTT\n")
    assert load_genome(path) == {"c1": "ACGTNNNN", "c2": "TTTT"}
    write_fasta(path, [("c1", "ACGT"), ("c1", "A")])
    with pytest.raises(DuplicateChrom):
        load_genome(path)
    path.write_text("ACGT\n")
    with pytest.raises(ParseError):
        load_genome(path)


def test_write_fasta_round_trip(tmp_path):
    rng = random.Random(3)
    genome = {f"c{i}": "".join(rng.choice("ACGT") for _ in range(rng.randint(1, 200)))
              for i in range(4)}
    path = tmp_path / "g.fa"
    write_fasta(path, genome.items(), width=60)
    assert load_genome(path) == genome


def test_transcripts(tmp_path):
    path = tmp_path / "t.fa"
    path.write_text(">AT1G01010.1 gene\nACGU\n>AT1G01010.2\nGGCC\n")
    assert load_transcripts(path) == {"AT1G01010.1": "ACGT", "AT1G01010.2": "GGCC"}


def test_annotations(tmp_path):
    path = tmp_path / "a.tsv"
    path.write_text("chrom\tstart\tend\tclass\nc1\t10\t20\ttRNA\nc1\t5\t8\tmiRNA\n")
    ann = load_annotations(path)
    assert [(a.start, a.feature_class) for a in ann] == [(5, "other"), (10, "tRNA")]
    path.write_text("c1\t10\t5\ttRNA\n")
    with pytest.raises(ParseError):
        load_annotations(path)


def test_pathways(tmp_path):
    path = tmp_path / "p.tsv"
    path.write_text("g1\tath00010:Glycolysis\ng2\tath00010:Glycolysis\ng2\tath00020:TCA cycle\n")
    pw = load_pathways(path)
    assert pw.genes == {"g1", "g2"}
    assert pw.pathway_genes() == {"ath00010": {"g1", "g2"}, "ath00020": {"g2"}}
    assert pw.names["ath00020"] == "TCA cycle"
    path.write_text("g1 ath00010\n")
    with pytest.raises(ParseError):
        load_pathways(path)
