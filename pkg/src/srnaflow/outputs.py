"""TSV result files.

Every file is UTF-8, tab separated, ``\\n`` terminated, with one header line.
A run always writes the ten base files; differential expression adds
``fold_change.tsv`` and ``diff_expression.tsv``, and enrichment adds
``enrichment.tsv``.
"""

from __future__ import annotations

import math
from pathlib import Path

from srnaflow.config import dump_config
from srnaflow.diffexpr import rpm

BASE_FILES = (
    "mirna_predictions.tsv",
    "mirna_loci.tsv",
    "precursors.tsv",
    "precursor_structures.tsv",
    "candidates.tsv",
    "expression_counts.tsv",
    "expression_rpm.tsv",
    "library_summary.tsv",
    "stage_metrics.tsv",
    "run_config.tsv",
)
DIFF_FILES = ("fold_change.tsv", "diff_expression.tsv")
ENRICH_FILES = ("enrichment.tsv",)

# wall-clock timings; every other file is a pure function of the inputs
TIMING_FILES = ("stage_metrics.tsv",)


def expected_files(n_libraries: int, diff: bool = False, enrich: bool = False) -> list[str]:
    names = list(BASE_FILES)
    if diff and n_libraries >= 2:
        names += DIFF_FILES
        if enrich:
            names += ENRICH_FILES
    return names


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_tsv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(fmt(v) for v in row) + "\n")


def read_tsv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="\n") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header = lines[0].split("\t")
    return header, [line.split("\t") for line in lines[1:]]


def read_records(path) -> list[dict[str, str]]:
    header, rows = read_tsv(path)
    return [dict(zip(header, row)) for row in rows]


def _pair_label(pair) -> str:
    return f"{pair.experiment}->{pair.control}"


def write_outputs(run, out_dir) -> list[Path]:
    """Write every file the run calls for; returns their paths in order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    libs = run.library_ids
    totals = dict(zip(libs, run.library_totals))
    written = []

    def emit(name, header, rows):
        path = out / name
        write_tsv(path, header, rows)
        written.append(path)

    emit("mirna_predictions.tsv",
         ["library", "mirna", "length", "count", "rpm", "star", "star_count",
          "precursor_chrom", "precursor_start", "precursor_end", "strand", "n_loci"],
         [(p.library, p.sequence, len(p.sequence), p.count, rpm(p.count, totals[p.library]),
           p.star, p.star_count, p.precursor.chrom, p.precursor.start, p.precursor.end,
           p.precursor.strand, len(p.loci)) for p in run.predictions])

    emit("mirna_loci.tsv", ["library", "mirna", "chrom", "start", "end", "strand"],
         [(p.library, p.sequence, l.chrom, l.start, l.end, l.strand)
          for p in run.predictions for l in p.loci])

    emit("precursors.tsv",
         ["library", "mirna", "chrom", "start", "end", "strand", "length", "mirna_count",
          "star_count", "window_count", "sequence", "structure"],
         [(lib, c.mirna, c.chrom, *c.to_genomic(*c.span), c.strand,
           c.span[1] - c.span[0], c.mirna_count, c.star_count, c.window_count,
           c.precursor_sequence, c.precursor_structure)
          for lib in libs for c in run.precursors[lib]])

    emit("precursor_structures.tsv",
         ["library", "mirna", "chrom", "start", "end", "strand", "sequence", "structure"],
         [(p.library, p.sequence, region.chrom, region.start, region.end, region.strand,
           seq, db) for p, region, seq, db in run.structures])

    emit("candidates.tsv",
         ["library", "mirna", "locus_chrom", "locus_start", "locus_end", "strand", "window",
          "window_start", "window_end", "mirna_offset", "star_offset", "star_end",
          "span_start", "span_end", "verdict", "sequence", "structure"],
         [(lib, c.mirna, c.locus.chrom, c.locus.start, c.locus.end, c.strand, c.window,
           c.start, c.end, c.mirna_offset, c.star_offset, c.star_end,
           c.span[0] if c.span else None, c.span[1] if c.span else None, c.verdict,
           c.sequence, c.structure.dot_bracket if c.structure else "")
          for lib in libs for c in run.candidates[lib]])

    expression = run.expression()
    emit("expression_counts.tsv", ["mirna", *libs],
         [(m, *counts) for m, counts in expression.items()])
    emit("expression_rpm.tsv", ["mirna", *libs],
         [(m, *(rpm(x, totals[lib]) for x, lib in zip(counts, libs)))
          for m, counts in expression.items()])

    summary_cols = ["library", "total_reads", "unique_sequences", "aligned_sequences",
                    "eligible_sequences", "candidate_windows", "passing_precursors",
                    "predicted_mirnas"]
    emit("library_summary.tsv", summary_cols,
         [[row[k] for k in summary_cols] for row in run.summary])

    emit("stage_metrics.tsv", ["stage", "kind", "in_count", "out_count", "seconds"],
         [(m.name, m.kind, m.in_count, m.out_count, round(m.seconds, 6))
          for m in run.stage_metrics])

    emit("run_config.tsv", ["key", "value"],
         [line.split("=", 1) for line in dump_config(run.config, exclude=("workers",))
          .splitlines() if line and not line.startswith("#")])

    if run.diff and len(libs) >= 2:
        pairs = []
        for row in run.diff_results:
            if row.pair not in pairs:
                pairs.append(row.pair)
        fc = {(r.mirna, r.pair): r.fold_change for r in run.diff_results}
        mirnas = sorted({r.mirna for r in run.diff_results})
        emit("fold_change.tsv", ["mirna", *(_pair_label(p) for p in pairs)],
             [(m, *(fc.get((m, p)) for p in pairs)) for m in mirnas])
        emit("diff_expression.tsv",
             ["mirna", "experiment", "control", "expt_count", "ctrl_count", "fold_change",
              "z", "p", "q", "significant", "targets"],
             [(r.mirna, r.pair.experiment, r.pair.control, r.expt_count, r.ctrl_count,
               r.fold_change, r.z, r.p, r.q, r.significant,
               ",".join(h.gene_id for h in run.targets.get(r.mirna, [])) if r.significant else "")
              for r in run.diff_results])
        if run.enrich:
            emit("enrichment.tsv",
                 ["experiment", "control", "pathway", "name", "k", "n", "K", "N", "p",
                  "enriched"],
                 [(pair.experiment, pair.control, e.pathway, e.name, e.k, e.n, e.K, e.N,
                   e.p, e.enriched) for pair, e in run.enrichment])
    return written
