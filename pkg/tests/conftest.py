import random

import pytest

from srnaflow.config import default_config
from srnaflow.pipeline import predict_libraries
from srnaflow.simulate import planted_benchmark


def random_seq(rng: random.Random, n: int, alphabet: str = "ACGT") -> str:
    return "".join(rng.choice(alphabet) for _ in range(n))


@pytest.fixture(scope="session")
def planted_run():
    """Seeded 200 kb planted benchmark pushed through prediction once."""
    sim, negatives = planted_benchmark(n_hairpins=20, n_negatives=200, rng_seed=0)
    run = predict_libraries(["lib"], [sim.library], sim.genome, [], default_config())
    return sim, negatives, run


def write_counts(path, counts):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in sorted(counts):
            fh.write(f"{seq}\t{counts[seq]}\n")


@pytest.fixture(scope="session")
def two_library_inputs(tmp_path_factory):
    """Small planted genome with a control and a treated library on disk.

    The treated library boosts the first three planted miRNAs 30x so the
    differential test has something to find; transcripts carry perfect
    sites for them and pathways group their genes.
    """
    from srnaflow.core import reverse_complement
    from srnaflow.ingest import write_fasta
    from srnaflow.simulate import simulate_planted_genome

    root = tmp_path_factory.mktemp("two_libs")
    sim = simulate_planted_genome(6, rng_seed=11, genome_size=40_000)
    rng = random.Random(5)
    write_fasta(root / "genome.fa", sim.genome.items(), width=70)
    ctrl = dict(sim.library)
    expt = dict(sim.library)
    boosted = [h.mature for h in sim.truth[:3]]
    for seq in boosted:
        expt[seq] *= 30
    write_counts(root / "Lib1.tsv", ctrl)
    write_counts(root / "Lib2.tsv", expt)
    (root / "guide.txt").write_text("Experiment->Control\nLib2->Lib1\n")
    transcripts = []
    for i, seq in enumerate(boosted):
        transcripts.append((f"G{i}.1", random_seq(rng, 80) + reverse_complement(seq) + random_seq(rng, 80)))
    for i in range(200):
        transcripts.append((f"B{i}.1", random_seq(rng, 200)))
    write_fasta(root / "transcripts.fa", transcripts)
    lines = [f"G{i}\tP1:boosted targets" for i in range(3)]
    lines += [f"B{i}\tP{2 + i % 3}:background {i % 3}" for i in range(200)]
    (root / "pathways.tsv").write_text("\n".join(lines) + "\n")
    return root, sim, boosted


# acceptance bookkeeping: one summary line per criterion, aggregated over its tests
_ACCEPTANCE: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    entry = _ACCEPTANCE.setdefault(number, {"title": title, "outcomes": [], "notes": []})
    entry["outcomes"].append(rep.outcome)
    if rep.skipped and isinstance(rep.longrepr, tuple):
        entry["notes"].append(rep.longrepr[2].removeprefix("Skipped: "))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[number]
        outs = entry["outcomes"]
        if "failed" in outs:
            verdict = "FAIL"
        elif "passed" in outs:
            verdict = "PASS" if "skipped" not in outs else "PASS (part skipped)"
        else:
            verdict = "SKIP"
        note = f" [{'; '.join(entry['notes'])}]" if entry["notes"] else ""
        terminalreporter.write_line(f"criterion {number:2d} {entry['title']}: {verdict}{note}")
