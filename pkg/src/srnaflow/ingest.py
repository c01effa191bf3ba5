"""Readers for libraries, guide files and reference flat files."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from srnaflow.core import SmallRnaRecord, normalize_sequence
from srnaflow.errors import (BadHeader, BadPairLine, DuplicateChrom, EmptyLibrary,
                             InvalidBase, ParseError, UnknownLibrary)

FORMATS = ("tsv_readcount", "reads", "fasta", "fastq")

_EXTENSIONS = {
    ".tsv": "tsv_readcount", ".txt": "reads", ".reads": "reads",
    ".fa": "fasta", ".fasta": "fasta", ".fna": "fasta",
    ".fq": "fastq", ".fastq": "fastq",
}

GUIDE_HEADER = "Experiment->Control"
EXCLUDED_CLASSES = frozenset({"CDS", "rRNA", "snoRNA", "snRNA", "tRNA"})
FEATURE_CLASSES = EXCLUDED_CLASSES | {"other"}


@dataclass(frozen=True)
class LibraryInput:
    library_id: str
    format: str
    path: Path

    @classmethod
    def from_path(cls, path, fmt: str | None = None) -> "LibraryInput":
        path = Path(path)
        fmt = fmt or guess_format(path)
        if fmt not in FORMATS:
            raise ValueError(f"unknown library format {fmt!r}")
        return cls(path.stem, fmt, path)


@dataclass(frozen=True)
class GuidePair:
    experiment: str
    control: str


@dataclass(frozen=True, order=True)
class FeatureAnnotation:
    chrom: str
    start: int
    end: int
    feature_class: str


@dataclass
class PathwayMap:
    gene_pathways: dict[str, set[str]]
    names: dict[str, str]

    @property
    def genes(self) -> set[str]:
        return set(self.gene_pathways)

    def pathway_genes(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for gene, pathways in self.gene_pathways.items():
            for pw in pathways:
                out.setdefault(pw, set()).add(gene)
        return out


def guess_format(path: Path) -> str:
    try:
        return _EXTENSIONS[Path(path).suffix.lower()]
    except KeyError:
        raise ValueError(f"cannot infer library format from {path}") from None


def _lines(path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            yield line_no, line.rstrip("\r\n")


def _fasta_records(path) -> Iterator[tuple[int, str, str]]:
    """Yield ``(header_line_no, header, sequence)``; multi-line bodies joined."""
    header, start, chunks = None, 0, []
    for line_no, line in _lines(path):
        if not line.strip():
            continue
        if line.startswith(">"):
            if header is not None:
                yield start, header, "".join(chunks)
            header, start, chunks = line[1:].strip(), line_no, []
        else:
            if header is None:
                raise ParseError(line_no, "sequence before first '>' header", path)
            chunks.append(line.strip())
    if header is not None:
        yield start, header, "".join(chunks)


def _raw_counts(lib: LibraryInput) -> Counter:
    counts: Counter = Counter()
    path = lib.path
    if lib.format == "tsv_readcount":
        for line_no, line in _lines(path):
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(line_no, "expected SEQ<TAB>COUNT", path)
            try:
                n = int(cols[1])
            except ValueError:
                raise ParseError(line_no, f"bad count {cols[1]!r}", path) from None
            if n < 0:
                raise ParseError(line_no, "negative count", path)
            counts[cols[0].strip()] += n
    elif lib.format == "reads":
        for _, line in _lines(path):
            line = line.strip()
            if line:
                counts[line] += 1
    elif lib.format == "fasta":
        for _, _, seq in _fasta_records(path):
            counts[seq] += 1
    elif lib.format == "fastq":
        block = []
        for line_no, line in _lines(path):
            if not block and not line.strip():
                continue
            block.append((line_no, line))
            if len(block) == 4:
                (n1, head), (_, seq), (n3, plus), _ = block
                if not head.startswith("@"):
                    raise ParseError(n1, "fastq header must start with '@'", path)
                if not plus.startswith("+"):
                    raise ParseError(n3, "fastq separator must start with '+'", path)
                counts[seq.strip()] += 1
                block = []
        if block:
            raise ParseError(block[0][0], "truncated fastq record", path)
    else:
        raise ValueError(f"unknown library format {lib.format!r}")
    return counts


def read_library_counts(lib: LibraryInput) -> dict[str, int]:
    """Collapse a library to ``{sequence: count}``.

    Sequences that fail normalization (ambiguity codes, adapters with N) are
    dropped; an empty result raises ``EmptyLibrary``.
    """
    collapsed: Counter = Counter()
    for raw, n in _raw_counts(lib).items():
        try:
            seq = normalize_sequence(raw)
        except InvalidBase:
            continue
        collapsed[seq] += n
    collapsed = Counter({s: n for s, n in collapsed.items() if n > 0})
    if not collapsed:
        raise EmptyLibrary(f"library {lib.library_id} has no valid reads")
    return dict(collapsed)


def read_library(lib: LibraryInput) -> list[SmallRnaRecord]:
    """Records sorted by sequence, each with a single-library count."""
    counts = read_library_counts(lib)
    return [SmallRnaRecord(seq, (counts[seq],)) for seq in sorted(counts)]


def merge_libraries(per_library: list[dict[str, int]]) -> list[SmallRnaRecord]:
    """Union of several collapsed libraries with a count vector per sequence."""
    seqs = set()
    for counts in per_library:
        seqs.update(counts)
    return [
        SmallRnaRecord(seq, tuple(c.get(seq, 0) for c in per_library))
        for seq in sorted(seqs)
    ]


def parse_guide_text(text: str, libraries: Iterable[str] | None = None) -> list[GuidePair]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != GUIDE_HEADER:
        raise BadHeader(f"guide file must start with {GUIDE_HEADER!r}")
    known = set(libraries) if libraries is not None else None
    pairs = []
    for line_no, line in enumerate(lines[1:], 2):
        line = line.strip()
        if not line:
            continue
        parts = line.split("->")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise BadPairLine(line_no, line)
        expt, ctrl = parts[0].strip(), parts[1].strip()
        if expt == ctrl:
            raise BadPairLine(line_no, line)
        if known is not None:
            for lib in (expt, ctrl):
                if lib not in known:
                    raise UnknownLibrary(f"line {line_no}: unknown library {lib!r}")
        pairs.append(GuidePair(expt, ctrl))
    return pairs


def parse_guide_file(path, libraries: Iterable[str] | None = None) -> list[GuidePair]:
    return parse_guide_text(Path(path).read_text(encoding="utf-8"), libraries)


def load_genome(fasta_path) -> dict[str, str]:
    """Map chromosome id (first header word) to its uppercase sequence.

    Non-ACGT characters are kept as ``N`` so coordinates stay intact; the
    index never matches across them.
    """
    genome: dict[str, str] = {}
    for line_no, header, seq in _fasta_records(fasta_path):
        if not header:
            raise ParseError(line_no, "empty fasta header", fasta_path)
        chrom = header.split()[0]
        if chrom in genome:
            raise DuplicateChrom(f"duplicate chromosome {chrom!r}")
        seq = seq.upper().replace("U", "T")
        seq = "".join(ch if ch in "ACGT" else "N" for ch in seq) \
            if set(seq) - set("ACGT") else seq
        genome[chrom] = seq
    if not genome:
        raise ParseError(0, "no fasta records", fasta_path)
    return genome


def load_transcripts(fasta_path) -> dict[str, str]:
    out: dict[str, str] = {}
    for _, header, seq in _fasta_records(fasta_path):
        tid = header.split()[0]
        seq = seq.upper().replace("U", "T")
        out[tid] = "".join(ch if ch in "ACGT" else "N" for ch in seq)
    return out


def load_annotations(path) -> list[FeatureAnnotation]:
    """Read ``chrom<TAB>start<TAB>end<TAB>class`` (0-based, half-open)."""
    out = []
    for line_no, line in _lines(path):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 4:
            raise ParseError(line_no, "expected chrom, start, end, class", path)
        try:
            start, end = int(cols[1]), int(cols[2])
        except ValueError:
            if line_no == 1:  # header row
                continue
            raise ParseError(line_no, "non-integer coordinate", path) from None
        if start >= end:
            raise ParseError(line_no, "start must be < end", path)
        cls = cols[3].strip()
        out.append(FeatureAnnotation(cols[0], start, end,
                                     cls if cls in FEATURE_CLASSES else "other"))
    return sorted(out)


def load_pathways(path) -> PathwayMap:
    """Read ``gene_id<TAB>pathway_id:pathway_name`` rows."""
    genes: dict[str, set[str]] = {}
    names: dict[str, str] = {}
    for line_no, line in _lines(path):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2 or ":" not in cols[1]:
            raise ParseError(line_no, "expected gene_id<TAB>pathway_id:name", path)
        pid, name = cols[1].split(":", 1)
        genes.setdefault(cols[0].strip(), set()).add(pid.strip())
        names[pid.strip()] = name.strip()
    return PathwayMap(genes, names)


def write_fasta(path, records: Iterable[tuple[str, str]], width: int = 0) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name, seq in records:
            fh.write(f">{name}\n")
            if width:
                for i in range(0, len(seq), width):
                    fh.write(seq[i:i + width] + "\n")
            else:
                fh.write(seq + "\n")
