import math

import pytest
from hypothesis import given, strategies as st

from srnaflow.config import default_config
from srnaflow.diffexpr import (bh_fdr, differential_expression, fold_change, is_significant,
                               kal_z_test, rpm)
from srnaflow.ingest import GuidePair

from oracles import kal_grid as grid, mp_kal

CFG = default_config()


def test_grid_has_100_points():
    assert len(grid()) == 100


@pytest.mark.parametrize("x1,n1,x2,n2", grid())
def test_kal_matches_high_precision_oracle(x1, n1, x2, n2):
    z, p = kal_z_test(x1, n1, x2, n2)
    mz, mp = mp_kal(x1, n1, x2, n2)
    assert abs(z - mz) < 1e-9
    assert p == pytest.approx(mp, rel=1e-9, abs=1e-300)


def test_kal_reference_point():
    z, p = kal_z_test(10, 1000, 30, 1000)
    # the exact value is -3.19438..., so the rounded reference -3.195 holds to 1e-3
    assert z == pytest.approx(-3.195, abs=1e-3)
    assert z == pytest.approx(mp_kal(10, 1000, 30, 1000)[0], abs=1e-12)
    assert p == pytest.approx(0.0014, abs=5e-5)


def test_kal_degenerate_and_equal():
    assert kal_z_test(5, 100, 10, 200) == (0.0, 1.0)
    assert kal_z_test(0, 100, 0, 50) == (0.0, 1.0)
    assert kal_z_test(100, 100, 50, 50) == (0.0, 1.0)
    with pytest.raises(ValueError):
        kal_z_test(1, 0, 1, 10)
    with pytest.raises(ValueError):
        kal_z_test(11, 10, 1, 10)


@given(st.integers(0, 500), st.integers(1, 500), st.integers(0, 500), st.integers(1, 500))
def test_kal_antisymmetry_and_range(x1, extra1, x2, extra2):
    n1, n2 = x1 + extra1, x2 + extra2
    z, p = kal_z_test(x1, n1, x2, n2)
    z2, p2 = kal_z_test(x2, n2, x1, n1)
    assert z == pytest.approx(-z2)
    assert p == pytest.approx(p2)
    assert 0.0 <= p <= 1.0


def test_kal_z_grows_with_difference():
    zs = [abs(kal_z_test(50 + d, 1000, 50, 1000)[0]) for d in range(0, 200, 10)]
    assert all(a < b for a, b in zip(zs, zs[1:]))


def test_bh_examples():
    assert bh_fdr([0.01, 0.02, 0.03, 0.5]) == pytest.approx([0.04, 0.04, 0.04, 0.5])
    assert bh_fdr([0.3]) == [0.3]
    assert bh_fdr([0.2] * 5) == pytest.approx([0.2] * 5)
    assert bh_fdr([]) == []
    assert bh_fdr([0.5, 0.01]) == pytest.approx([0.5, 0.02])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50))
def test_bh_properties(ps):
    qs = bh_fdr(ps)
    assert all(q >= p - 1e-15 for p, q in zip(ps, qs))
    assert all(q <= 1.0 for q in qs)
    order = sorted(range(len(ps)), key=lambda i: ps[i])
    ranked = [qs[i] for i in order]
    assert all(a <= b + 1e-15 for a, b in zip(ranked, ranked[1:]))


def test_fold_change_conventions():
    assert fold_change(10, 25) == pytest.approx(2.5)
    assert fold_change(7, 7) == 1.0
    assert fold_change(0, 5) == math.inf
    assert fold_change(0, 0) == 1.0
    assert is_significant(math.inf, 0.01, CFG)
    assert not is_significant(1.0, 0.0, CFG)
    assert is_significant(0.4, 0.01, CFG)
    assert not is_significant(2.5, 0.05, CFG)


def test_rpm():
    assert rpm(5, 2_000_000) == 2.5
    with pytest.raises(ValueError):
        rpm(1, 0)


def test_differential_expression_per_pair():
    counts = {"AAA": (500, 100, 100), "CCC": (100, 100, 100), "GGG": (0, 40, 0)}
    ids = ["Lib1", "Lib2", "Lib3"]
    totals = [100_000, 100_000, 50_000]
    rows = differential_expression(counts, ids, totals, GuidePair("Lib2", "Lib1"), CFG)
    assert [r.mirna for r in rows] == ["AAA", "CCC", "GGG"]
    by = {r.mirna: r for r in rows}
    assert by["AAA"].fold_change == pytest.approx(0.2)
    assert by["CCC"].fold_change == 1.0 and not by["CCC"].significant
    assert by["GGG"].fold_change == math.inf
    qs = bh_fdr([r.p for r in rows])
    for r, q in zip(rows, qs):
        assert r.q == q
        assert r.significant == ((r.fold_change > CFG.fc_up or r.fold_change < CFG.fc_down)
                                 and r.q < CFG.alpha)
    assert by["AAA"].significant and by["GGG"].significant
    assert (by["AAA"].expt_count, by["AAA"].ctrl_count) == (100, 500)
