import numpy as np
import pytest

from pentablanc import blancgeom as bg
from pentablanc.errors import BaseLocus, ValidationError
from pentablanc.presets import CUBIC, CUBIC_QS, blanc_reference


def random_curve_and_point(rng):
    while True:
        u, v, w = rng.uniform(-2, 2, 3)
        try:
            C = bg.CubicCurve(u, v, w)
        except ValidationError:
            continue
        r = C.real_roots.max()
        x = r + rng.uniform(0.1, 3.0)
        q = C.point(x, rng.choice([-1, 1]))
        if not bg.is_inflexion(C, q):
            return C, q


def match_sets(a, b):
    a, b = list(a), list(b)
    worst = 0.0
    for p in a:
        d = [np.abs(p - x).max() for x in b]
        k = int(np.argmin(d))
        worst = max(worst, d[k])
        b.pop(k)
    return worst


@pytest.fixture(scope="module")
def ref():
    return blanc_reference()


# ----------------------------------------------------------- tangencies


def test_tangency_residuals(ref):
    C, qs = ref
    for q in qs:
        pts = bg.tangency_points(C, q)
        assert len(pts) == 4
        for p in pts:
            assert bg.tangency_residual(C, q, p) < 1e-10


def test_tangency_conjugate_closure():
    rng = np.random.default_rng(0)
    for _ in range(30):
        C, q = random_curve_and_point(rng)
        pts = bg.tangency_points(C, q)
        assert match_sets(pts, np.conj(pts)) < 1e-10


def test_tangency_polar_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        C, q = random_curve_and_point(rng)
        a = bg.tangency_points(C, q)
        b = bg.tangency_points_polar(C, q)
        scale = max(1.0, np.abs(a).max())
        assert match_sets(a, b) < 1e-7 * scale


# -------------------------------------------------------------- involutions


def test_curve_points_fixed(ref):
    C, qs = ref
    s = bg.JonquieresMap(C, qs[0])
    for x in (-0.5, 0.3, 2.0, 4.0):
        for sign in (1, -1):
            p = C.point(x, sign)
            assert bg.proj_dist(bg.jonquieres_apply(s, p), bg.homog(p)) < 1e-10


def test_involution_and_collinearity(ref):
    C, qs = ref
    rng = np.random.default_rng(2)
    for q in qs:
        s = bg.JonquieresMap(C, q)
        for _ in range(250):
            x = rng.uniform(-4, 4, 2)
            y = bg.jonquieres_apply(s, x)
            z = bg.jonquieres_apply(s, y)
            assert bg.proj_dist(z, bg.homog(x)) < 1e-8
            M = np.array([bg.homog(q), bg.homog(x), y])
            M = M / np.linalg.norm(M, axis=1)[:, None]
            assert abs(np.linalg.det(M)) < 1e-10


def test_affine_oracle_agrees(ref):
    C, qs = ref
    rng = np.random.default_rng(3)
    for q in qs:
        s = bg.JonquieresMap(C, q)
        for _ in range(100):
            x = rng.uniform(-4, 4, 2)
            a = bg.jonquieres_apply(s, x)
            b = bg.jonquieres_apply_affine(s, x)
            assert bg.proj_dist(a, bg.homog(b)) < 1e-8


def test_base_point_rejected(ref):
    C, qs = ref
    s = bg.JonquieresMap(C, qs[0])
    with pytest.raises(BaseLocus):
        bg.jonquieres_apply(s, qs[0])
    real = s.real_base_points()
    if len(real):
        with pytest.raises(BaseLocus):
            bg.jonquieres_apply(s, real[0])


def test_point_must_lie_on_curve(ref):
    C, _ = ref
    with pytest.raises(ValidationError):
        bg.JonquieresMap(C, np.array([0.0, 5.0]))


# --------------------------------------------------------------- hypotheses


def test_hypotheses_reference_configuration(ref):
    C, qs = ref
    rep = bg.hypothesis_check(C, qs)
    assert all(rep[h] for h in ("hyp1", "hyp2", "hyp3", "hyp4"))


def test_duplicate_point_fails_hyp2(ref):
    C, qs = ref
    rep = bg.hypothesis_check(C, [qs[0], qs[0], qs[1]])
    assert rep["hyp2"] is False
    assert rep["witnesses"]


def test_generic_random_points_pass():
    rng = np.random.default_rng(4)
    C = bg.CubicCurve(*CUBIC)
    passed = 0
    for _ in range(10):
        xs = np.sort(rng.uniform(-1, 3, 4))
        pts = [C.point(x, rng.choice([-1, 1])) for x in xs if C.g(x) > 0.05]
        if len(pts) < 3:
            continue
        rep = bg.hypothesis_check(C, pts)
        passed += all(rep[h] for h in ("hyp1", "hyp2", "hyp3", "hyp4"))
    assert passed >= 8


# ----------------------------------------------------------------- distance


def test_distance_on_curve_zero(ref):
    C, _ = ref
    pts = np.array([C.point(x, s) for x in (-0.9, 0.2, 1.7, 3.0) for s in (1, -1)])
    assert np.all(bg.distance_to_curve(C, pts) < 1e-8)


def test_distance_symmetric(ref):
    C, _ = ref
    rng = np.random.default_rng(5)
    pts = rng.uniform(-3, 3, (50, 2))
    flip = pts * np.array([1, -1])
    assert np.allclose(bg.distance_to_curve(C, pts), bg.distance_to_curve(C, flip), atol=1e-12)


def test_distance_mesh_oracle(ref):
    C, _ = ref
    rng = np.random.default_rng(6)
    pts = rng.uniform(-4, 4, (100, 2))
    a = bg.distance_to_curve(C, pts)
    b = bg.distance_mesh_oracle(C, pts)
    assert np.abs(a - b).max() < 1e-4


def test_disconnected_curve_flag():
    assert bg.CubicCurve(*CUBIC).connected
    assert not bg.CubicCurve(0, -1, 0).connected
