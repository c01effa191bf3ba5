"""In-process partitioned map/filter engine.

A plan is an ordered list of :class:`Stage` objects applied to every record of
a :class:`Dataset`. Partitions are independent work units; a worker runs the
whole plan over one partition (stages are fused, as with narrow
dependencies), and the driver concatenates partition outputs in partition
order. Output is therefore identical for any worker count.

Workers are forked processes by default. Stage functions, the input dataset
and the broadcast context reach the children through ``fork`` inheritance,
so lambdas and large read-only indexes need no pickling; only each
partition's output travels back.
"""

from __future__ import annotations

import multiprocessing
import os
import resource
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from srnaflow.errors import StageFailure

STAGE_KINDS = ("map", "filter", "flat_map", "join_reference")


@dataclass(frozen=True)
class Stage:
    """One pure per-record transform.

    ``fn`` receives the record only, except for ``join_reference`` stages
    which receive ``(record, broadcast[reference])``; those behave like a
    map whose ``None`` results are dropped.
    """

    kind: str
    name: str
    fn: Callable
    reference: str | None = None

    def __post_init__(self):
        if self.kind not in STAGE_KINDS:
            raise ValueError(f"unknown stage kind {self.kind!r}")
        if self.kind == "join_reference" and not self.reference:
            raise ValueError("join_reference stage needs a reference name")


def map_stage(name, fn):
    return Stage("map", name, fn)


def filter_stage(name, fn):
    return Stage("filter", name, fn)


def flat_map_stage(name, fn):
    return Stage("flat_map", name, fn)


def join_stage(name, fn, reference):
    return Stage("join_reference", name, fn, reference)


@dataclass
class StageMetrics:
    name: str
    kind: str
    in_count: int = 0
    out_count: int = 0
    seconds: float = 0.0


@dataclass
class RunMetrics:
    stages: list[StageMetrics]
    wall_seconds: float = 0.0
    peak_rss_mb: float = 0.0
    workers: int = 1
    partitions: int = 1


@dataclass
class Dataset:
    """Ordered records split into contiguous partitions."""

    partitions: list[list]
    metrics: RunMetrics | None = field(default=None, repr=False)

    @property
    def total_count(self) -> int:
        return sum(len(p) for p in self.partitions)

    def collect(self) -> list:
        out = []
        for part in self.partitions:
            out.extend(part)
        return out

    def __len__(self) -> int:
        return self.total_count


def partition(records: Sequence, n: int) -> Dataset:
    """Split into ``n`` contiguous blocks whose sizes differ by at most one."""
    if n < 1:
        raise ValueError("partition count must be >= 1")
    records = list(records)
    size, extra = divmod(len(records), n)
    parts, start = [], 0
    for i in range(n):
        stop = start + size + (1 if i < extra else 0)
        parts.append(records[start:stop])
        start = stop
    return Dataset(parts)


def _apply(stage: Stage, record, broadcast) -> list:
    if stage.kind == "map":
        return [stage.fn(record)]
    if stage.kind == "filter":
        return [record] if stage.fn(record) else []
    if stage.kind == "flat_map":
        return list(stage.fn(record))
    out = stage.fn(record, broadcast[stage.reference])
    return [] if out is None else [out]


def _run_partition(plan, records, offset, broadcast):
    """Push each record depth-first through the plan.

    Returns ``(output, per-stage [in, out, seconds], failure)`` where failure
    is the first ``StageFailure`` in record order, or None.
    """
    stats = [[0, 0, 0.0] for _ in plan]
    output = []
    clock = time.perf_counter
    for idx, record in enumerate(records):
        items = [record]
        for s, stage in enumerate(plan):
            st = stats[s]
            st[0] += len(items)
            t0 = clock()
            nxt = []
            try:
                for item in items:
                    nxt.extend(_apply(stage, item, broadcast))
            except Exception as exc:  # noqa: BLE001 - reported with context
                st[2] += clock() - t0
                return output, stats, StageFailure(stage.name, offset + idx, exc)
            st[2] += clock() - t0
            st[1] += len(nxt)
            items = nxt
            if not items:
                break
        output.extend(items)
    return output, stats, None


# Set in the driver just before forking; children read their copy.
_FORK_STATE: dict[str, Any] = {}


def _fork_task(index: int):
    plan = _FORK_STATE["plan"]
    dataset = _FORK_STATE["dataset"]
    offset = _FORK_STATE["offsets"][index]
    return _run_partition(plan, dataset.partitions[index], offset, _FORK_STATE["broadcast"])


def _peak_rss_mb() -> float:
    own = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    kids = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
    return max(own, kids) / 1024.0


def run_pipeline(plan: Sequence[Stage], data, workers: int = 1,
                 broadcast: dict | None = None, backend: str = "process") -> Dataset:
    """Run ``plan`` over ``data`` with up to ``workers`` parallel workers.

    ``data`` is a :class:`Dataset` or a plain sequence (partitioned into
    ``workers`` blocks). The result keeps the input's partition layout and
    carries :class:`RunMetrics` (see :func:`collect_metrics`). Raises
    :class:`StageFailure` for the lowest-index failing input record.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if backend not in ("process", "thread"):
        raise ValueError(f"unknown backend {backend!r}")
    plan = list(plan)
    if not isinstance(data, Dataset):
        data = partition(data, workers)
    broadcast = broadcast or {}
    offsets, acc = [], 0
    for part in data.partitions:
        offsets.append(acc)
        acc += len(part)

    t0 = time.perf_counter()
    n_parts = len(data.partitions)
    pool_size = min(workers, n_parts)
    if pool_size <= 1:
        results = [_run_partition(plan, part, off, broadcast)
                   for part, off in zip(data.partitions, offsets)]
    elif backend == "thread":
        with ThreadPoolExecutor(pool_size) as pool:
            futures = [pool.submit(_run_partition, plan, part, off, broadcast)
                       for part, off in zip(data.partitions, offsets)]
            results = [f.result() for f in futures]
    else:
        _FORK_STATE.update(plan=plan, dataset=data, offsets=offsets, broadcast=broadcast)
        try:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(pool_size, mp_context=ctx) as pool:
                results = list(pool.map(_fork_task, range(n_parts)))
        finally:
            _FORK_STATE.clear()
    wall = time.perf_counter() - t0

    for _, _, failure in results:
        if failure is not None:
            raise failure

    stages = [StageMetrics(s.name, s.kind) for s in plan]
    for _, stats, _ in results:
        for m, (n_in, n_out, secs) in zip(stages, stats):
            m.in_count += n_in
            m.out_count += n_out
            m.seconds += secs
    metrics = RunMetrics(stages, wall, _peak_rss_mb(), workers, n_parts)
    return Dataset([out for out, _, _ in results], metrics)


def collect_metrics(run: Dataset) -> RunMetrics:
    if run.metrics is None:
        return RunMetrics([], 0.0, _peak_rss_mb())
    return run.metrics


def metrics_tsv(metrics: Sequence[StageMetrics]) -> str:
    lines = ["stage\tin_count\tout_count\tseconds"]
    for m in metrics:
        lines.append(f"{m.name}\t{m.in_count}\t{m.out_count}\t{m.seconds:.6f}")
    return "\n".join(lines) + "\n"


def available_cores() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1
