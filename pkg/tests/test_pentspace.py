import itertools

import numpy as np
import pytest

from pentablanc import pentspace as pp
from pentablanc import pentsurf as ps
from pentablanc.errors import AdmissibilityFailure, NotRealLocus
from pentablanc.presets import GENERIC_LENGTHS

PAIRS = list(itertools.combinations(range(5), 2))


def fold_distance(p, q):
    return float(np.abs(p.vertices - q.vertices).max())


@pytest.fixture(scope="module")
def samples():
    rng = np.random.default_rng(21)
    return [pp.sample_pentagon(GENERIC_LENGTHS, rng) for _ in range(200)]


def test_sample_equilateral_closes():
    p = pp.sample_pentagon((1, 1, 1, 1, 1), np.random.default_rng(0))
    assert p.closure_residual() < 1e-12
    assert abs(p.edges.sum()) < 1e-12


def test_sample_near_degenerate_succeeds():
    p = pp.sample_pentagon((1, 1, 1, 1, 3.9), np.random.default_rng(0))
    assert p.closure_residual() < 1e-12


def test_sample_inadmissible():
    with pytest.raises(AdmissibilityFailure):
        pp.sample_pentagon((1, 1, 1, 1, 5), np.random.default_rng(0))


def test_lift_labels_roundtrip():
    for i, j in PAIRS:
        tag, m = pp.lift_of_pair(i, j)
        assert set(pp.pair_of_lift(tag, m)) == {i, j}


def test_geom_fold_involution(samples):
    for p in samples:
        for i, j in PAIRS:
            q = pp.geom_fold(pp.geom_fold(p, i, j), i, j)
            assert fold_distance(p, q) < 1e-9


def test_geom_fold_keeps_lengths(samples):
    for p in samples[:50]:
        for i, j in PAIRS:
            assert pp.geom_fold(p, i, j).closure_residual() < 1e-12


def test_symmetric_fold_fixed():
    # a_1 on the fold axis a_0 a_2: edges 0 and 1 are collinear
    w = np.exp(2j * np.pi / 3)
    t = np.array([1, 1, w, -1, np.conj(w)])
    rng = np.random.default_rng(8)
    for _ in range(5):
        rot = np.exp(2j * np.pi * rng.random())
        p = pp.pentagon_from_directions(rot * t, (1, 1, 1, 1, 1), a0=complex(*rng.normal(size=2)))
        assert p.closure_residual() < 1e-12 and abs(p.edges.sum()) < 1e-12
        assert fold_distance(pp.geom_fold(p, 0, 1), p) < 1e-12


def test_geom_fold_matches_fold_sigma(samples):
    for p in samples:
        z = pp.to_surface(p)
        for i, j in PAIRS:
            a = pp.to_surface(pp.geom_fold(p, i, j))
            b = ps.fold_sigma(GENERIC_LENGTHS, i, j, z)
            assert ps.projective_distance(a, b) < 1e-9


def test_regular_pentagon_is_roots_of_unity():
    t = np.exp(2j * np.pi * np.arange(5) / 5)
    p = pp.pentagon_from_directions(t, (1, 1, 1, 1, 1))
    assert ps.projective_distance(pp.to_surface(p), t) < 1e-14


def test_surface_roundtrip(samples):
    for p in samples:
        x = pp.normalize_pentagon(p)
        y = pp.from_surface(GENERIC_LENGTHS, pp.to_surface(x))
        assert np.abs(x.t - y.t).max() < 1e-12


def test_from_surface_rejects_nonreal():
    with pytest.raises(NotRealLocus):
        pp.from_surface(GENERIC_LENGTHS, [1, 2, 1, 1, 1])


def test_naturality_square(samples):
    for p in samples[:50]:
        x = pp.normalize_pentagon(p)
        for i, j in PAIRS:
            a = pp.to_surface(pp.fold_normalized(x, i, j))
            b = ps.fold_sigma(GENERIC_LENGTHS, i, j, pp.to_surface(x))
            assert ps.projective_distance(a, b) < 1e-9


# ---------------------------------------------------------------- Pent^1


def test_cocycle_trivial_away_from_zero(samples):
    x = pp.normalize_pentagon(samples[0])
    for i, j in PAIRS:
        if 0 not in (i, j):
            assert pp.circle_cocycle(i, j, x) == 1


def test_cocycle_unit_modulus(samples):
    for p in samples:
        x = pp.normalize_pentagon(p)
        for i, j in PAIRS:
            assert abs(abs(pp.circle_cocycle(i, j, x)) - 1) < 1e-12


def test_cocycle_relation(samples):
    for p in samples[:40]:
        q = pp.pent1_of(p)
        for (i, j), (k, l) in itertools.product(PAIRS, repeat=2):
            g = pp.fold_pent1(q, k, l)
            fg = pp.fold_pent1(g, i, j)
            h_fg = fg.u / q.u
            h = pp.circle_cocycle(i, j, g.base) * pp.circle_cocycle(k, l, q.base)
            assert abs(h_fg - h) < 1e-10


def test_fold_pent1_matches_geometric_fold(samples):
    # the rotation coordinate u is the direction of edge 0 of the geometric fold
    for p in samples[:40]:
        q = pp.pent1_of(p)
        for i, j in PAIRS:
            t_geo = pp.geom_fold(p, i, j).directions
            q2 = pp.fold_pent1(q, i, j)
            assert abs(pp.theta_m(q2, 0) - t_geo[0]) < 1e-10
            for m in range(5):
                assert abs(pp.theta_m(q2, m) - t_geo[m]) < 1e-10


# ------------------------------------------------------------------ drift


def test_drift_zero_for_s_lifts_other_than_4(samples):
    q = pp.pent1_of(samples[0])
    for m in range(4):
        assert np.all(pp.drift_increment(("s", m), q) == 0)


def test_drift_bounded(samples):
    rng = np.random.default_rng(3)
    bound = 2 * sum(ps.as_lengths(GENERIC_LENGTHS).array)
    for _ in range(2000):
        p = samples[rng.integers(len(samples))]
        q = pp.pent1_of(p)
        i, j = PAIRS[rng.integers(len(PAIRS))]
        assert np.linalg.norm(pp.drift_increment((i, j), q)) <= bound


def test_drift_matches_trajectory(samples):
    rng = np.random.default_rng(12)
    for p in samples[:20]:
        cur = p
        total = np.zeros(2)
        for _ in range(5):
            i, j = PAIRS[rng.integers(len(PAIRS))]
            total += pp.drift_increment((i, j), pp.pent1_of(cur))
            cur = pp.geom_fold(cur, i, j)
        moved = cur.vertices[0] - p.vertices[0]
        assert abs(complex(*total) - moved) < 1e-9
