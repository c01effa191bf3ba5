"""End-to-end prediction and functional annotation runs.

Stage list (dataflow plans, in execution order):

  alignment plan, over the union of all libraries
     1 min_srna_len        filter
     2 align               map    (suffix-array lookup, both strands)
     3 aligned             filter (>= 1 locus)
  -> every aligned read, whatever its abundance, is the expression
     reference reused by the dominance stage
  candidate plan
     4 max_loci            filter
     5 min_srna_freq       filter (summed over libraries)
     6 low_complexity      filter
     7 mirna_length        filter (21..24 nt by default)
     8 known_nonmirna      filter (annotation overlap)
  hairpin plan, once per library
     9 expressed           filter (count > 0 in this library)
    10 extract_windows     flat_map
    11 fold                map
    12 duplex              map
    13 star                map
    14 trim                map
    15 length_gate         map
    16 second_loop         map
    17 dominance           join_reference
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

from srnaflow import align, hairpin, prefilter
from srnaflow.config import PipelineConfig
from srnaflow.core import Locus, MirnaPrediction, reverse_complement
from srnaflow.dataflow import (Dataset, StageMetrics, filter_stage, flat_map_stage,
                               join_stage, map_stage, partition, run_pipeline)
from srnaflow.diffexpr import DiffExprResult, differential_expression
from srnaflow.enrichment import EnrichmentResult, hypergeom_enrich
from srnaflow.folding import fold
from srnaflow.errors import GuideRequired, ManifestError
from srnaflow.ingest import (GuidePair, LibraryInput, PathwayMap, load_annotations,
                             load_genome, load_pathways, load_transcripts, merge_libraries,
                             parse_guide_file, read_library_counts)
from srnaflow.targets import TargetHit, target_rank


@dataclass
class RunManifest:
    config: PipelineConfig
    libraries: list[LibraryInput]
    genome_path: Path
    out_dir: Path
    annotations_path: Path | None = None
    guide_path: Path | None = None
    pathways_path: Path | None = None
    transcripts_path: Path | None = None
    diff: bool = False
    enrich: bool = False
    index_cache: Path | None = None

    def validate(self) -> None:
        if not self.libraries:
            raise ManifestError("at least one library is required")
        formats = {lib.format for lib in self.libraries}
        if len(formats) > 1:
            raise ManifestError(f"libraries must share one format, got {sorted(formats)}")
        ids = [lib.library_id for lib in self.libraries]
        if len(set(ids)) != len(ids):
            raise ManifestError("library ids (file stems) must be unique")
        if self.enrich and not self.diff:
            raise ManifestError("enrichment requires differential expression (--diff)")
        if self.diff and (self.guide_path is None or len(self.libraries) < 2):
            raise GuideRequired("differential expression needs >= 2 libraries and a guide file")
        if self.enrich and (self.pathways_path is None or self.transcripts_path is None):
            raise ManifestError("enrichment needs --pathways and --transcripts")


@dataclass
class PredictionRun:
    config: PipelineConfig
    library_ids: list[str]
    library_counts: list[dict[str, int]]
    candidates: dict[str, list[hairpin.PrecursorCandidate]]
    precursors: dict[str, list[hairpin.PrecursorCandidate]]
    predictions: list[MirnaPrediction]
    stage_metrics: list[StageMetrics]
    summary: list[dict]
    structures: list[tuple[MirnaPrediction, Locus, str, str]] = field(default_factory=list)
    diff_results: list[DiffExprResult] = field(default_factory=list)
    targets: dict[str, list[TargetHit]] = field(default_factory=dict)
    enrichment: list[tuple[GuidePair, EnrichmentResult]] = field(default_factory=list)
    diff: bool = False
    enrich: bool = False
    wall_seconds: float = 0.0
    workers: int = 1

    @property
    def library_totals(self) -> list[int]:
        return [sum(c.values()) for c in self.library_counts]

    @property
    def predicted_sequences(self) -> list[str]:
        return sorted({p.sequence for p in self.predictions})

    def expression(self) -> dict[str, tuple[int, ...]]:
        return {s: tuple(c.get(s, 0) for c in self.library_counts)
                for s in self.predicted_sequences}


def alignment_plan(config: PipelineConfig, index: align.GenomeIndex) -> list:
    return [
        filter_stage("min_srna_len", lambda r: len(r.sequence) >= config.min_srna_len),
        map_stage("align", partial(align.align_record, index=index)),
        filter_stage("aligned", lambda r: len(r.loci) >= 1),
    ]


def candidate_plan(config: PipelineConfig, annotations: prefilter.AnnotationIndex) -> list:
    return [
        filter_stage("max_loci", lambda r: len(r.loci) <= config.max_loci),
        filter_stage("min_srna_freq", lambda r: r.total >= config.min_srna_freq),
        filter_stage("low_complexity",
                     partial(prefilter.passes_low_complexity, threshold=config.dust_threshold)),
        filter_stage("mirna_length",
                     partial(prefilter.in_mirna_length, length_range=config.mirna_len_range)),
        filter_stage("known_nonmirna",
                     lambda r: not prefilter.is_known_nonmirna(r, annotations)),
    ]


def hairpin_plan(config: PipelineConfig, genome: dict[str, str], library: int) -> list:
    def windows(record):
        out = []
        for locus in record.loci:
            out.extend(hairpin.extract_windows(locus, genome, config, record.sequence))
        return out

    return [
        filter_stage("expressed", lambda r: r.counts[library] > 0),
        flat_map_stage("extract_windows", windows),
        map_stage("fold", hairpin.fold_candidate),
        map_stage("duplex", partial(hairpin.apply_duplex, config=config)),
        map_stage("star", hairpin.apply_star),
        map_stage("trim", hairpin.apply_trim),
        map_stage("length_gate", partial(hairpin.apply_length_gate, config=config)),
        map_stage("second_loop", partial(hairpin.apply_second_loop_gate, config=config)),
        join_stage("dominance",
                   lambda c, ref: hairpin.apply_dominance(c, ref, config, library),
                   reference="expression"),
    ]


def _partitions(workers: int) -> int:
    return 1 if workers <= 1 else 4 * workers


def _merge_metrics(acc: dict, ordered: list, dataset: Dataset) -> None:
    for m in dataset.metrics.stages:
        if m.name not in acc:
            acc[m.name] = StageMetrics(m.name, m.kind)
            ordered.append(acc[m.name])
        tgt = acc[m.name]
        tgt.in_count += m.in_count
        tgt.out_count += m.out_count
        tgt.seconds += m.seconds


def select_precursors(candidates) -> list[hairpin.PrecursorCandidate]:
    """Best window per (mature, locus), then drop duplicate (precursor, mature)."""
    best: dict[tuple, hairpin.PrecursorCandidate] = {}
    for c in candidates:
        key = (c.mirna, c.locus)
        if key not in best or hairpin.precursor_rank(c) < hairpin.precursor_rank(best[key]):
            best[key] = c
    seen = set()
    out = []
    for key in sorted(best, key=lambda k: (k[0], k[1].chrom, k[1].start, k[1].strand)):
        c = best[key]
        if c.verdict != hairpin.PASS:
            continue
        dedup = (c.precursor_locus, c.mirna)
        if dedup in seen:
            continue
        seen.add(dedup)
        out.append(c)
    return out


def _predictions_for(library: str, precursors, index: align.GenomeIndex) -> list[MirnaPrediction]:
    by_mature: dict[str, list] = {}
    for c in precursors:
        by_mature.setdefault(c.mirna, []).append(c)
    out = []
    for mature in sorted(by_mature):
        group = sorted(by_mature[mature], key=lambda c: (
            index.chrom_order(c.chrom), c.precursor_locus.start, c.strand))
        first = group[0]
        loci = tuple(sorted({c.locus for c in group},
                            key=lambda l: (index.chrom_order(l.chrom), l.start, l.strand)))
        out.append(MirnaPrediction(
            library=library, sequence=mature, count=first.mirna_count, star=first.star,
            star_count=first.star_count, precursor=first.precursor_locus,
            precursor_sequence=first.precursor_sequence,
            structure=first.precursor_structure, loci=loci))
    return out


def predict_libraries(library_ids, library_counts, genome, annotations, config,
                      workers: int = 1, index: align.GenomeIndex | None = None,
                      backend: str = "process") -> PredictionRun:
    """Run the prediction plans over in-memory libraries."""
    t0 = time.perf_counter()
    index = index or align.build_index(genome)
    ann_index = annotations if isinstance(annotations, prefilter.AnnotationIndex) \
        else prefilter.AnnotationIndex(annotations or [])
    n_parts = _partitions(workers)
    records = merge_libraries(library_counts)
    metrics: dict[str, StageMetrics] = {}
    ordered: list[StageMetrics] = []

    aligned = run_pipeline(alignment_plan(config, index), partition(records, n_parts),
                           workers, backend=backend)
    _merge_metrics(metrics, ordered, aligned)
    aligned_records = aligned.collect()
    reference = hairpin.ExpressionReference(aligned_records)

    eligible = run_pipeline(candidate_plan(config, ann_index),
                            partition(aligned_records, n_parts), workers, backend=backend)
    _merge_metrics(metrics, ordered, eligible)
    eligible_records = eligible.collect()

    candidates, precursors, predictions, summary = {}, {}, [], []
    for li, lib in enumerate(library_ids):
        run = run_pipeline(hairpin_plan(config, genome, li),
                           partition(eligible_records, n_parts), workers,
                           broadcast={"expression": reference}, backend=backend)
        _merge_metrics(metrics, ordered, run)
        cands = run.collect()
        chosen = select_precursors(cands)
        preds = _predictions_for(lib, chosen, index)
        candidates[lib], precursors[lib] = cands, chosen
        predictions.extend(preds)
        counts = library_counts[li]
        summary.append({
            "library": lib,
            "total_reads": sum(counts.values()),
            "unique_sequences": len(counts),
            "aligned_sequences": sum(1 for r in aligned_records if r.counts[li] > 0),
            "eligible_sequences": sum(1 for r in eligible_records if r.counts[li] > 0),
            "candidate_windows": len(cands),
            "passing_precursors": len(chosen),
            "predicted_mirnas": len(preds),
        })

    structures = [flanked_structure(p, genome, config.extra_flank) for p in predictions]
    return PredictionRun(config, list(library_ids), list(library_counts), candidates,
                         precursors, predictions, ordered, summary, structures,
                         wall_seconds=time.perf_counter() - t0, workers=workers)


def flanked_structure(pred: MirnaPrediction, genome: dict[str, str], flank: int):
    """Refold the precursor with ``flank`` nt of context on each side."""
    loc = pred.precursor
    seq = genome[loc.chrom]
    lo, hi = max(0, loc.start - flank), min(len(seq), loc.end + flank)
    piece = seq[lo:hi]
    if loc.strand == "-":
        piece = reverse_complement(piece)
    region = Locus(loc.chrom, lo, hi, loc.strand)
    return pred, region, piece, fold(piece).dot_bracket


def functional_analysis(run: PredictionRun, pairs: list[GuidePair], enrich: bool = False,
                        transcripts: dict[str, str] | None = None,
                        pathways: PathwayMap | None = None) -> PredictionRun:
    """Differential expression per guide pair, then targets and enrichment."""
    config = run.config
    expression = run.expression()
    totals = run.library_totals
    run.diff = True
    run.diff_results = []
    for pair in pairs:
        run.diff_results.extend(
            differential_expression(expression, run.library_ids, totals, pair, config))
    if not enrich:
        return run
    run.enrich = True
    for pair in pairs:
        sample: set[str] = set()
        for row in run.diff_results:
            if row.pair != pair or not row.significant:
                continue
            if row.mirna not in run.targets:
                run.targets[row.mirna] = target_rank(
                    row.mirna, transcripts, config.target_max_transcripts,
                    config.target_top_genes)
            sample.update(hit.gene_id for hit in run.targets[row.mirna])
        for result in hypergeom_enrich(sample, pathways, config.enrichment_alpha):
            run.enrichment.append((pair, result))
    return run


def execute(manifest: RunManifest, backend: str = "process") -> PredictionRun:
    """Load inputs named by ``manifest`` and run prediction (+ analysis)."""
    manifest.validate()
    config = manifest.config
    ids = [lib.library_id for lib in manifest.libraries]
    pairs = parse_guide_file(manifest.guide_path, ids) if manifest.diff else []
    counts = [read_library_counts(lib) for lib in manifest.libraries]
    genome = load_genome(manifest.genome_path)
    annotations = load_annotations(manifest.annotations_path) if manifest.annotations_path else []
    if manifest.index_cache:
        index = align.cached_index(genome, manifest.index_cache)
    else:
        index = align.build_index(genome)
    run = predict_libraries(ids, counts, genome, annotations, config,
                            workers=config.workers, index=index, backend=backend)
    if manifest.diff:
        transcripts = pathways = None
        if manifest.enrich:
            transcripts = load_transcripts(manifest.transcripts_path)
            pathways = load_pathways(manifest.pathways_path)
        functional_analysis(run, pairs, manifest.enrich, transcripts, pathways)
    return run

