import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pentablanc.errors import GridMismatch
from pentablanc.randdyn.stats import (
    Histogram,
    bootstrap_ci,
    flatness_cv,
    interior_mask,
    invariance_statistic,
    loglog_slope,
    tv_distance,
    tv_to_uniform,
)

counts = st.lists(st.integers(0, 200), min_size=4, max_size=40)


def H(c, chart="x"):
    c = np.asarray(c, dtype=float)
    return Histogram(chart, ((0.0, 1.0),), c)


@settings(max_examples=100, deadline=None)
@given(counts.filter(lambda c: sum(c) > 0))
def test_tv_self_zero(c):
    assert tv_distance(c, c) == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(4, 30).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 100), min_size=n, max_size=n),
    st.lists(st.integers(0, 100), min_size=n, max_size=n))))
def test_tv_symmetric_and_bounded(ab):
    a, b = ab
    if sum(a) == 0 or sum(b) == 0:
        return
    t = tv_distance(a, b)
    assert 0 <= t <= 1
    assert t == pytest.approx(tv_distance(b, a))


def test_tv_disjoint_is_one():
    a = [1000, 0, 0, 0]
    b = [0, 0, 0, 1000]
    assert tv_distance(a, b) == pytest.approx(1.0)


def test_tv_unpooled_equals_half_l1():
    a = np.array([500, 300, 200])
    b = np.array([400, 400, 200])
    assert tv_distance(a, b) == pytest.approx(0.5 * np.abs(a / 1000 - b / 1000).sum())


def test_sparse_bins_are_pooled():
    # two nearly empty bins with opposite mass cancel once pooled
    a = np.array([1000, 2, 0])
    b = np.array([1000, 0, 2])
    assert tv_distance(a, b) == 0


def test_tv_to_uniform():
    assert tv_to_uniform(np.full(36, 100)) == 0
    c = np.zeros(36)
    c[0] = 3600
    assert tv_to_uniform(c) == pytest.approx(35 / 36)


def test_histogram_merge_and_mismatch():
    a, b = H([1, 2, 3]), H([3, 2, 1])
    assert np.array_equal(a.merge(b).counts, [4, 4, 4])
    with pytest.raises(GridMismatch):
        a.merge(H([1, 2, 3], chart="y"))
    with pytest.raises(GridMismatch):
        a.tv(H([1, 2, 3, 4]))


def test_invariance_statistic_identical_zero():
    a = H(np.arange(1, 20) * 10)
    assert invariance_statistic(a, [a, a]) == [0, 0]


def test_interior_mask_torus():
    c = np.ones((5, 5))
    assert interior_mask(c, torus=True).all()
    m = interior_mask(c, torus=False)
    assert m.sum() == 9
    c[2, 2] = 0
    m = interior_mask(c, torus=True)
    assert not m[2, 2] and not m[1, 2] and not m[2, 1] and m[0, 0]


def test_flatness_cv_constant():
    c = np.ones((6, 6)) * 7
    assert flatness_cv(c, c) == 0


def test_bootstrap_ci_contains_mean():
    v = np.random.default_rng(0).normal(1.0, 0.1, 50)
    lo, hi = bootstrap_ci(v, n_boot=2000)
    assert lo < v.mean() < hi
    assert bootstrap_ci(v, n_boot=2000) == (lo, hi)


def test_loglog_slope_power_law():
    x = np.geomspace(1, 1000, 20)
    assert loglog_slope(x, 3 * x ** 0.5) == pytest.approx(0.5)
