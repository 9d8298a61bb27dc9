import math

import numpy as np
import pytest

from pentablanc import _accel
from pentablanc import nsaction as ns
from pentablanc import pentsurf as ps
from pentablanc.errors import ErrorCeiling, ValidationError
from pentablanc.presets import GENERIC_LENGTHS, blanc_reference
from pentablanc.randdyn import (
    PAIRS_EXT,
    BlancSystem,
    GeneratorDistribution,
    PentagonSystem,
    RunStats,
    decades,
    run_blanc,
    run_lyapunov,
    run_orbit,
    run_pentagon,
)
from pentablanc.randdyn import experiments as ex

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@pytest.fixture(scope="module")
def pent():
    return PentagonSystem(GENERIC_LENGTHS, GeneratorDistribution.uniform(PAIRS_EXT))


@pytest.fixture(scope="module")
def blanc():
    C, qs = blanc_reference()
    return BlancSystem(C, qs)


@pytest.fixture(scope="module")
def quotient_mats():
    return ns.quotient_rep()[1]


# --------------------------------------------------------- distributions


def test_distribution_normalizes_and_roundtrips():
    d = GeneratorDistribution(((0, 1), (2, 3)), (1, 3))
    assert d.weights == (0.25, 0.75)
    assert GeneratorDistribution.from_dict(d.to_dict()) == d


@pytest.mark.parametrize("labels,weights", [((), ()), ((1, 2), (1,)), ((1, 2), (1, 0)), ((1,), (-1,))])
def test_distribution_validation(labels, weights):
    with pytest.raises(ValidationError):
        GeneratorDistribution(labels, weights)


def test_draw_frequencies():
    d = GeneratorDistribution((1, 2, 3), (1, 2, 1))
    x = d.draw(np.random.default_rng(0), 40000)
    freq = np.bincount(x, minlength=3) / len(x)
    assert np.abs(freq - d.probs).max() < 0.01


def test_decades():
    assert decades(12345) == [10, 100, 1000, 10000, 12345]
    assert decades(1000) == [10, 100, 1000]


# ------------------------------------------------------- reproducibility


def test_pentagon_reproducible(pent):
    a = run_pentagon(pent, 3000, 5, range(3))
    b = run_pentagon(pent, 3000, 5, range(3))
    assert a.digest() == b.digest()
    c = run_pentagon(pent, 3000, 6, range(3))
    assert a.digest() != c.digest()


def test_blanc_and_lyapunov_reproducible(blanc, quotient_mats):
    assert run_blanc(blanc, 2000, 1, range(3)).digest() == run_blanc(blanc, 2000, 1, range(3)).digest()
    a = run_lyapunov(quotient_mats, None, 5000, 2, range(3))
    assert a.digest() == run_lyapunov(quotient_mats, None, 5000, 2, range(3)).digest()


def test_merge_equals_single_pass(pent):
    whole = run_pentagon(pent, 2000, 3, range(4))
    left = run_pentagon(pent, 2000, 3, (2, 3))
    right = run_pentagon(pent, 2000, 3, (0, 1))
    assert left.merge(right).digest() == whole.digest()
    assert right.merge(left).digest() == whole.digest()
    merged = right.merge(left)
    for k in ("hist_theta", "hist_a3", "push_theta"):
        assert np.array_equal(merged.total(k), whole.total(k))


def test_threads_do_not_change_results(pent, blanc):
    a = run_pentagon(pent, 1500, 4, range(4), threads=1)
    b = run_pentagon(pent, 1500, 4, range(4), threads=3)
    assert a.digest() == b.digest()
    assert run_blanc(blanc, 800, 4, range(4), threads=1).digest() == \
        run_blanc(blanc, 800, 4, range(4), threads=2).digest()


def test_numpy_backend_thread_invariant(pent, blanc, quotient_mats):
    # threads=3 over 4 trials gives single-trial slices, the case where
    # batched BLAS reductions used to round differently
    a = run_pentagon(pent, 1500, 4, range(4), backend="numpy", threads=1)
    b = run_pentagon(pent, 1500, 4, range(4), backend="numpy", threads=3)
    assert a.digest() == b.digest()
    assert run_blanc(blanc, 300, 4, range(4), backend="numpy", threads=1).digest() == \
        run_blanc(blanc, 300, 4, range(4), backend="numpy", threads=3).digest()
    assert run_lyapunov(quotient_mats, None, 2000, 4, range(4), backend="numpy", threads=1).digest() == \
        run_lyapunov(quotient_mats, None, 2000, 4, range(4), backend="numpy", threads=3).digest()


def test_merge_rejects_conflicts(pent):
    a = run_pentagon(pent, 100, 0, (0,))
    with pytest.raises(ValidationError):
        a.merge(a)
    with pytest.raises(ValidationError):
        a.merge(run_pentagon(pent, 101, 0, (1,)))


def test_chunking_is_transparent(pent):
    # the kernel state carries across chunks; a single trial with one chunk
    # and with several must trace the same orbit when the draws are identical
    a = run_pentagon(pent, 500, 0, (0,), chunk=500)
    assert a.data["hist_theta"].sum() == 501


# ------------------------------------------------------- backend parity


@needs_numba
def test_pentagon_backends_agree(pent):
    # short runs: chaos amplifies last-bit differences after ~50 folds
    a = run_pentagon(pent, 30, 9, range(3), backend="numba")
    b = run_pentagon(pent, 30, 9, range(3), backend="numpy")
    assert np.abs(a.data["final"] - b.data["final"]).max() < 1e-10
    assert np.abs(a.data["a0"] - b.data["a0"]).max() < 1e-10
    for k in ("hist_theta", "hist_a3", "push_theta", "push_a3", "rejections"):
        assert np.array_equal(a.data[k], b.data[k])


@needs_numba
def test_blanc_backends_agree(blanc):
    a = run_blanc(blanc, 300, 2, range(3), backend="numba")
    b = run_blanc(blanc, 300, 2, range(3), backend="numpy")
    assert np.abs(a.data["final"] - b.data["final"]).max() < 1e-10
    assert np.array_equal(a.data["tube"], b.data["tube"])


@needs_numba
def test_lyapunov_backends_agree(quotient_mats):
    a = run_lyapunov(quotient_mats, None, 2000, 1, range(2), backend="numba")
    b = run_lyapunov(quotient_mats, None, 2000, 1, range(2), backend="numpy")
    assert np.allclose(a.data["log_growth"], b.data["log_growth"], rtol=1e-12)


def test_env_flag_selects_numpy(monkeypatch):
    assert _accel.resolve("numpy") == "numpy"
    monkeypatch.setattr(_accel, "USE_NUMBA", False)
    assert _accel.resolve(None) == "numpy"
    assert _accel.resolve("auto") == "numpy"


# ------------------------------------------------------------ pentagon runs


def test_zero_steps_is_delta(pent):
    r = run_pentagon(pent, 0, 0, (0,))
    assert r.data["hist_theta"].sum() == 1
    assert r.data["hist_a3"].sum() == 1
    assert np.array_equal(r.data["final"], r.data["start"])


def test_long_orbit_stays_on_surface(pent):
    r = run_pentagon(pent, 1_000_000, 0, (0,), hist=False, push=False, reproj_every=1000)
    assert r.data["max_closure"][0] < 1e-9
    assert r.data["max_unit_defect"][0] < 1e-9
    z = r.data["final"][0]
    assert ps.on_surface(GENERIC_LENGTHS, z) < 1e-9


def test_single_generator_no_drift():
    # s_0 moves only a_1, so a_0 never moves
    s = PentagonSystem(GENERIC_LENGTHS, GeneratorDistribution.uniform([(0, 1)]))
    r = run_pentagon(s, 5000, 0, range(3), hist=False, push=False, checkpoints=decades(5000))
    assert np.all(r.data["a0"] == 0)
    assert np.all(r.data["checkpoint_a0"] == 0)


def test_error_ceiling(pent):
    with pytest.raises(ErrorCeiling):
        run_pentagon(pent, 2000, 0, (0,), threshold=0.9)


def test_run_orbit_explicit_start(pent):
    t = np.exp(2j * np.pi * np.arange(5) / 5)
    eq = PentagonSystem((1, 1, 1, 1, 1), GeneratorDistribution.uniform(PAIRS_EXT))
    r = run_orbit(eq, t, 10)
    assert np.array_equal(r.data["start"][0], t)
    assert r.config["explicit_starts"]


# ------------------------------------------------------------- circle


def test_frozen_angle_control():
    avoid0 = [p for p in PAIRS_EXT if 0 not in p]
    d = ex.circle_extension_experiment(GENERIC_LENGTHS, 20000, 0, GeneratorDistribution.uniform(avoid0))
    assert d["tv_uniform"] > 0.99


def test_rotation_equivariance():
    # a bin-aligned rotation of the start shifts the angle histogram circularly
    abins = 360
    k = 37
    rot = np.exp(2j * np.pi * k / abins)
    a = ex.circle_extension_experiment(GENERIC_LENGTHS, 25, 0, abins=abins)
    b = ex.circle_extension_experiment(GENERIC_LENGTHS, 25, 0, abins=abins, rotation=rot)
    assert np.array_equal(np.roll(a["angle_counts"], k), b["angle_counts"])


# ------------------------------------------------------------- Blanc runs


def test_blanc_curve_start_fixed(blanc):
    C = blanc.curve
    x0 = C.point(0.7, 1)
    r = run_orbit(blanc, np.array([x0[0], x0[1], 1.0]), 5000)
    final = r.data["final"][0]
    assert np.abs(final[:2] / final[2] - x0).max() < 1e-9
    assert r.data["tube"][0] == r.data["n_obs"][0]


def test_blanc_run_outputs(blanc):
    r = run_blanc(blanc, 1000, 0, range(2))
    assert np.all(r.data["n_obs"] == 1001)
    assert np.all(r.data["checkpoint_n_obs"][:, -1] == r.data["n_obs"])
    assert np.all(r.data["tube"] <= r.data["n_obs"])


def test_curve_start_tube_mass_one(blanc):
    C = blanc.curve
    p = C.point(1.2, -1)
    r = run_blanc(blanc, 2000, 1, (0,), starts=np.array([[p[0], p[1], 1.0]]))
    assert r.data["tube"][0] == r.data["n_obs"][0]
    assert np.array_equal(r.data["checkpoint_tube"], r.data["checkpoint_n_obs"])


def test_stiffness_experiment_shape(blanc):
    d = ex.stiffness_experiment(blanc, 1000, 3, seed=1)
    assert len(d["tube_fraction"]) == 3
    assert len(d["cesaro_distance"]) == len(d["checkpoints"]) == len(d["tube_mass_curve"])
    assert 0 <= d["fraction_above_0.9"] <= 1


def test_nonincreasing_within_noise():
    assert ex.nonincreasing_within_noise([3, 2, 2.05, 1], [0.1, 0.1, 0.1, 0.1])
    assert not ex.nonincreasing_within_noise([1, 2, 3], [0.01, 0.01, 0.01])


def test_coverage_probe(blanc):
    d = ex.coverage_probe(blanc, max_len=3, grid=4, cells=5)
    assert 0 <= d["mean_coverage"] <= 1


# ---------------------------------------------------------- matrix cocycles


def test_lyapunov_identity_is_zero():
    d = ex.lyapunov_matrix([np.eye(4)], 2000, 3)
    assert abs(d["estimate"]) < 1e-12


def test_lyapunov_single_matrix(quotient_mats):
    M = ns.word_matrix(quotient_mats, (1, 2, 3))
    rho = max(abs(np.linalg.eigvals(M.to_numpy())))
    d = ex.lyapunov_matrix([M], 20000, 2)
    assert d["estimate"] == pytest.approx(math.log(rho), rel=0.01)


def test_lyapunov_schedule_matches_product(quotient_mats):
    # column action: cycling A_1, A_2, A_3 grows like rho(A_3 A_2 A_1) = rho(A_1 A_2 A_3)^(+-1) per 3 steps
    M = ns.word_matrix(quotient_mats, (1, 2, 3))
    rho = max(abs(np.linalg.eigvals(M.to_numpy())))
    d = ex.lyapunov_schedule(quotient_mats, (0, 1, 2), 30000)
    assert d["estimate"] == pytest.approx(math.log(rho) / 3, rel=0.01)


def test_lyapunov_rejects_bad_input():
    with pytest.raises(ValidationError):
        run_lyapunov([np.ones((2, 3))], None, 10)


# -------------------------------------------------------- expansion probe


def test_expansion_single_involution_zero():
    d = ex.uniform_expansion_probe(GENERIC_LENGTHS, GeneratorDistribution.uniform([(0, 2)]), n0=2,
                                   samples=3, directions=4, seed=0)
    assert abs(d["c_hat"]) < 1e-9


def test_expansion_fd_matches_closed():
    kw = dict(n0=2, samples=2, directions=4, seed=1)
    a = ex.uniform_expansion_probe(GENERIC_LENGTHS, None, method="closed", **kw)
    b = ex.uniform_expansion_probe(GENERIC_LENGTHS, None, method="fd", **kw)
    assert np.allclose(a["values"], b["values"], rtol=1e-6, atol=1e-8)


def test_breiman_small():
    d = ex.breiman_check(GENERIC_LENGTHS, long_steps=20000, short_runs=40, short_steps=500)
    assert 0 <= d["tv"] <= 1


def test_runstats_save(tmp_path, pent):
    r = run_pentagon(pent, 100, 0, (0,))
    r.save_npz(tmp_path / "r.npz")
    z = np.load(tmp_path / "r.npz")
    assert np.array_equal(z["hist_theta"], r.data["hist_theta"])
    assert isinstance(r, RunStats)


def test_trial_streams_distinct_across_seeds():
    from pentablanc.randdyn import trial_rng

    draws = {(s, t): trial_rng(s, t).random() for s in range(4) for t in range(4)}
    assert len(set(draws.values())) == len(draws)
