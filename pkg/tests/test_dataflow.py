import time

import pytest
from hypothesis import given, settings, strategies as st

from srnaflow.dataflow import (Dataset, available_cores, collect_metrics, filter_stage,
                               flat_map_stage, join_stage, map_stage, metrics_tsv,
                               partition, run_pipeline)
from srnaflow.errors import StageFailure


def sequential(plan, records, broadcast=None):
    """Reference semantics: apply stages one after another over the whole list."""
    data = list(records)
    for stage in plan:
        if stage.kind == "map":
            data = [stage.fn(r) for r in data]
        elif stage.kind == "filter":
            data = [r for r in data if stage.fn(r)]
        elif stage.kind == "flat_map":
            data = [x for r in data for x in stage.fn(r)]
        else:
            out = [stage.fn(r, broadcast[stage.reference]) for r in data]
            data = [r for r in out if r is not None]
    return data


PLAN = [
    map_stage("square", lambda x: x * x),
    filter_stage("odd", lambda x: x % 2 == 1),
    flat_map_stage("dup", lambda x: [x, x + 1] if x % 3 else [x]),
    join_stage("lookup", lambda x, ref: x + ref.get(x % 5, 0) if x % 7 else None, "offsets"),
]
BROADCAST = {"offsets": {0: 100, 1: 10, 2: 20}}


def test_partition_sizes_differ_by_at_most_one():
    ds = partition(range(10), 4)
    assert [len(p) for p in ds.partitions] == [3, 3, 2, 2]
    assert ds.collect() == list(range(10))
    assert len(partition([], 3)) == 0


def test_partition_rejects_zero():
    with pytest.raises(ValueError):
        partition([1], 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-50, 50), max_size=60), st.integers(1, 9))
def test_matches_sequential_for_any_partitioning(records, n_parts):
    expect = sequential(PLAN, records, BROADCAST)
    got = run_pipeline(PLAN, partition(records, n_parts), workers=1, broadcast=BROADCAST)
    assert got.collect() == expect


@pytest.mark.parametrize("workers", [1, 2, 4, 8])
@pytest.mark.parametrize("backend", ["process", "thread"])
def test_worker_count_invariance(workers, backend):
    records = list(range(500))
    expect = sequential(PLAN, records, BROADCAST)
    for n_parts in {1, workers, 4 * workers}:
        got = run_pipeline(PLAN, partition(records, n_parts), workers=workers,
                           broadcast=BROADCAST, backend=backend)
        assert got.collect() == expect


def test_filter_keeps_records_unmodified():
    items = [{"v": i} for i in range(10)]
    out = run_pipeline([filter_stage("even", lambda r: r["v"] % 2 == 0)], items).collect()
    assert all(any(o is r for r in items) for o in out)


def test_metrics_counts():
    run = run_pipeline(PLAN, partition(range(100), 4), workers=2, broadcast=BROADCAST)
    metrics = collect_metrics(run)
    assert [m.name for m in metrics.stages] == ["square", "odd", "dup", "lookup"]
    assert metrics.stages[0].in_count == 100
    assert metrics.stages[1].out_count == 50
    assert metrics.stages[-1].out_count == run.total_count
    for prev, cur in zip(metrics.stages, metrics.stages[1:]):
        assert prev.out_count == cur.in_count
    assert metrics.partitions == 4
    assert metrics.peak_rss_mb > 0
    text = metrics_tsv(metrics.stages)
    assert text.splitlines()[0] == "stage\tin_count\tout_count\tseconds"
    assert len(text.splitlines()) == 5


def _explode(x):
    if x in (37, 80):
        raise ValueError(f"bad record {x}")
    return x


@pytest.mark.parametrize("workers", [1, 3])
def test_failure_reports_lowest_record_index(workers):
    plan = [map_stage("ok", lambda x: x), map_stage("explode", _explode)]
    with pytest.raises(StageFailure) as exc:
        run_pipeline(plan, partition(range(100), 6), workers=workers)
    assert exc.value.stage_name == "explode"
    assert exc.value.record_index == 37
    assert exc.value.reason().startswith("StageFailure: ")


def test_plain_sequence_input_and_bad_args():
    assert run_pipeline([map_stage("id", lambda x: x)], [3, 1, 2], workers=2).collect() == [3, 1, 2]
    with pytest.raises(ValueError):
        run_pipeline([], [1], workers=0)
    with pytest.raises(ValueError):
        run_pipeline([], [1], backend="gpu")
    with pytest.raises(ValueError):
        map_stage("x", lambda r: r).__class__("reduce", "x", lambda r: r)


def _burn(x):
    total = 0
    for i in range(150_000):
        total += (i * x) % 7
    return total


@pytest.mark.skipif(available_cores() < 2, reason="needs at least 2 CPU cores")
def test_two_workers_faster_on_cpu_bound_stage():
    plan = [map_stage("burn", _burn)]
    records = list(range(64))
    t0 = time.perf_counter()
    one = run_pipeline(plan, records, workers=1).collect()
    t1 = time.perf_counter()
    two = run_pipeline(plan, partition(records, 8), workers=2).collect()
    t2 = time.perf_counter()
    assert one == two
    assert (t2 - t1) < (t1 - t0)


def test_dataset_len():
    assert len(Dataset([[1, 2], [3]])) == 3
