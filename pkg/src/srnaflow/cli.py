"""Command-line entry point: ``srnaflow <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from srnaflow import __version__
from srnaflow.align import build_index, cached_index
from srnaflow.cluster import single_linkage_cluster, venn3
from srnaflow.config import default_config, load_config
from srnaflow.errors import ConfigError, ParseError, SrnaError
from srnaflow.ingest import LibraryInput, load_annotations, load_genome, write_fasta
from srnaflow.metrics import ConfusionCounts, confusion_from_sets, confusion_metrics
from srnaflow.outputs import write_outputs, write_tsv
from srnaflow.pipeline import RunManifest, execute
from srnaflow.simulate import (negative_count_for, simulate_negative_set,
                               simulate_planted_genome)


def _resolve_config(args):
    config = load_config(args.config) if args.config else default_config()
    if args.workers is not None:
        config = config.replace(workers=args.workers)
    return config


def _opt_path(args, name):
    value = getattr(args, name, None)
    return Path(value) if value else None


def _manifest(args, diff: bool, enrich: bool) -> RunManifest:
    libs = [LibraryInput.from_path(p, args.format) for p in args.libraries]
    return RunManifest(
        config=_resolve_config(args),
        libraries=libs,
        genome_path=Path(args.genome),
        out_dir=Path(args.out_dir),
        annotations_path=Path(args.annotations) if args.annotations else None,
        guide_path=_opt_path(args, "guide"),
        pathways_path=_opt_path(args, "pathways"),
        transcripts_path=_opt_path(args, "transcripts"),
        diff=diff,
        enrich=enrich,
        index_cache=_opt_path(args, "index_cache"),
    )


def cmd_predict(args) -> int:
    manifest = _manifest(args, diff=False, enrich=False)
    run = execute(manifest)
    write_outputs(run, manifest.out_dir)
    return 0


def cmd_pipeline(args) -> int:
    manifest = _manifest(args, diff=args.diff, enrich=args.enrich)
    run = execute(manifest)
    write_outputs(run, manifest.out_dir)
    return 0


def _read_sequences(path) -> list[str]:
    """One sequence per line, or the ``mirna`` column of a TSV with a header."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [l for l in text.splitlines() if l.strip()]
    if lines and "\t" in lines[0]:
        header = lines[0].split("\t")
        if "mirna" not in header:
            raise ParseError(1, "TSV input needs a 'mirna' column", path)
        col = header.index("mirna")
        return [l.split("\t")[col] for l in lines[1:]]
    return [l.strip() for l in lines]


def cmd_simulate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.mode == "planted":
        sim = simulate_planted_genome(args.n, args.stem_len, args.seed, args.genome_size)
        write_fasta(out / "genome.fa", sim.genome.items(), width=80)
        with open(out / "library.tsv", "w", encoding="utf-8", newline="\n") as fh:
            for seq in sorted(sim.library):
                fh.write(f"{seq}\t{sim.library[seq]}\n")
        write_tsv(out / "truth.tsv",
                  ["name", "mirna", "chrom", "start", "end", "arm", "mature_start", "star"],
                  [(h.name, h.mature, h.chrom, h.start, h.end, h.arm, h.mature_start, h.star)
                   for h in sim.truth])
        return 0
    genome = load_genome(args.genome)
    annotations = load_annotations(args.annotations) if args.annotations else []
    known = _read_sequences(args.known) if args.known else []
    count = args.count if args.count is not None else negative_count_for(len(known))
    negatives = simulate_negative_set(genome, annotations, known, count, args.seed)
    write_tsv(out / "negatives.tsv", ["mirna"], [(s,) for s in negatives])
    return 0


def cmd_evaluate(args) -> int:
    if args.counts:
        counts = ConfusionCounts(*args.counts)
    else:
        if not (args.predictions and args.truth and args.negatives):
            raise ConfigError("evaluate needs --counts or --predictions, --truth and --negatives")
        counts = confusion_from_sets(_read_sequences(args.predictions),
                                     _read_sequences(args.truth),
                                     _read_sequences(args.negatives))
    m = confusion_metrics(counts)
    rows = [("tp", counts.tp), ("fp", counts.fp), ("tn", counts.tn), ("fn", counts.fn),
            ("precision", m.precision), ("sensitivity", m.sensitivity),
            ("accuracy", m.accuracy), ("f1", m.f1), ("mcc", m.mcc)]
    if args.out:
        write_tsv(Path(args.out), ["metric", "value"], rows)
    else:
        print("metric\tvalue")
        for k, v in rows:
            print(f"{k}\t{v!r}" if isinstance(v, float) else f"{k}\t{v}")
    return 0


def cmd_cluster(args) -> int:
    sets = [_read_sequences(p) for p in args.inputs]
    pooled = sorted({s for group in sets for s in group})
    workers = args.workers or 1
    clusters = single_linkage_cluster(pooled, args.threshold, workers=workers)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tsv(out / "clusters.tsv", ["cluster", "size", "members"],
              [(c.cluster_id, len(c.members), ",".join(c.members)) for c in clusters])
    if len(sets) == 3:
        owner = {m: c.cluster_id for c in clusters for m in c.members}
        a, b, c = ({owner[s] for s in group} for group in sets)
        write_tsv(out / "venn.tsv", ["region", "count"], venn3(a, b, c).items())
    return 0


def cmd_index(args) -> int:
    genome = load_genome(args.genome)
    if args.index_cache:
        index = cached_index(genome, args.index_cache)
    else:
        index = build_index(genome)
    print(f"indexed {len(index.chroms)} sequences, {sum(index.lengths)} nt")
    return 0


def _run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("libraries", nargs="+", help="sRNA library files (one format per run)")
    p.add_argument("--genome", required=True)
    p.add_argument("--annotations")
    p.add_argument("--config")
    p.add_argument("--format", choices=["tsv_readcount", "reads", "fasta", "fastq"])
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--index-cache")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srnaflow",
                                     description="Small-RNA miRNA prediction and analysis")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="predict miRNAs per library")
    _run_args(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("pipeline", help="prediction plus differential/functional analysis")
    _run_args(p)
    p.add_argument("--guide")
    p.add_argument("--pathways")
    p.add_argument("--transcripts")
    p.add_argument("--diff", action="store_true", help="differential expression per guide pair")
    p.add_argument("--enrich", action="store_true", help="pathway enrichment (needs --diff)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("simulate", help="synthetic benchmark data")
    p.add_argument("mode", choices=["planted", "negatives"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=20, help="planted hairpins")
    p.add_argument("--stem-len", type=int, default=25)
    p.add_argument("--genome-size", type=int, default=200_000)
    p.add_argument("--genome")
    p.add_argument("--annotations")
    p.add_argument("--known", help="positive set; negatives default to 10x its size")
    p.add_argument("--count", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="confusion metrics")
    p.add_argument("--predictions")
    p.add_argument("--truth")
    p.add_argument("--negatives")
    p.add_argument("--counts", type=int, nargs=4, metavar=("TP", "FP", "TN", "FN"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cluster", help="single-linkage bitscore clustering")
    p.add_argument("inputs", nargs="+", help="sequence lists; three inputs also give a venn table")
    p.add_argument("--threshold", type=float, default=20.0)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("index", help="build (and cache) the genome index")
    p.add_argument("--genome", required=True)
    p.add_argument("--index-cache")
    p.set_defaults(func=cmd_index)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate" and args.mode == "negatives" and not args.genome:
            raise ConfigError("simulate negatives needs --genome")
        return args.func(args)
    except SrnaError as exc:
        print(f"error: {exc.reason()}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
