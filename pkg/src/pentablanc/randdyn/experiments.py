"""Experiments built on the orbit engine.

Each function returns a plain dict of estimates plus the RunStats summaries it
used, so the CLI can write it out as JSON unchanged.
"""
from __future__ import annotations

import itertools
import math
from typing import Optional, Sequence

import numpy as np

from .. import _kernels
from ..errors import Budget, Indeterminacy, ValidationError
from ..pentsurf import (
    as_lengths,
    dehomogenize,
    fold_differential,
    fold_differential_fd,
    random_real_point,
    real_tangent_frame,
    tangent_to_theta,
    theta_to_tangent,
)
from .engine import (
    BlancSystem,
    GeneratorDistribution,
    PAIRS_EXT,
    PentagonSystem,
    blanc_box,
    decades,
    run_blanc,
    run_lyapunov,
    run_pentagon,
    trial_rng,
)
from .stats import (
    Histogram,
    bootstrap_ci,
    flatness_cv,
    invariance_statistic,
    loglog_slope,
    tv_distance,
    tv_to_uniform,
)

TWO_PI = 2 * math.pi


def _theta_hist(counts) -> Histogram:
    return Histogram("theta13", ((-math.pi, math.pi), (-math.pi, math.pi)), counts, torus=True)


def _a3_hist(counts, half) -> Histogram:
    return Histogram("a3", ((-half, half), (-half, half)), counts)


def equidistribution(ell, steps: int, seed: int = 0, dist: Optional[GeneratorDistribution] = None,
                     nb: int = 50, **kw) -> dict:
    """Pushforward invariance, two-start agreement and density flatness."""
    dist = dist or GeneratorDistribution.uniform(PAIRS_EXT)
    system = PentagonSystem(ell, dist)
    r = run_pentagon(system, steps, seed, (0, 1), nb=nb, **kw)
    half = float(system.lengths.array.sum())
    out = {"steps": steps, "seed": seed, "nb": nb, "run": r.summary()}
    for chart, mk in (("theta", _theta_hist), ("a3", lambda c: _a3_hist(c, half))):
        H = mk(r.data[f"hist_{chart}"][0])
        P = [mk(r.data[f"push_{chart}"][0, g]) for g in range(len(dist))]
        out[f"pushforward_tv_{chart}"] = invariance_statistic(H, P)
        out[f"two_start_tv_{chart}"] = H.tv(mk(r.data[f"hist_{chart}"][1]))
    out["flatness_cv"] = flatness_cv(r.data["hist_weighted"][0], r.data["hist_theta"][0], torus=True)
    out["stats"] = r
    return out


def circle_extension_experiment(ell, steps: int, seed: int = 0, dist: Optional[GeneratorDistribution] = None,
                                abins: int = 360, rotation: complex = 1.0, **kw) -> dict:
    dist = dist or GeneratorDistribution.uniform(PAIRS_EXT)
    system = PentagonSystem(ell, dist)
    r = run_pentagon(system, steps, seed, (0,), hist=False, push=False, angle=True,
                     abins=abins, rotation=rotation, **kw)
    counts = r.data["hist_angle"][0]
    return {"steps": steps, "tv_uniform": tv_to_uniform(counts), "angle_counts": counts,
            "run": r.summary(), "stats": r}


def drift_experiment(ell, steps: int, trials: int, seed: int = 0, dist: Optional[GeneratorDistribution] = None,
                     n_points: int = 25, **kw) -> dict:
    """Linear drift |a_0(P_N)| / N and the exponent of E|a_0(P_n)| on [N/100, N]."""
    dist = dist or GeneratorDistribution.uniform(PAIRS_EXT)
    system = PentagonSystem(ell, dist)
    lo = max(1, steps // 100)
    ck = np.unique(np.geomspace(lo, steps, n_points).astype(np.int64))
    r = run_pentagon(system, steps, seed, range(trials), hist=False, push=False, checkpoints=ck, **kw)
    total = float(system.lengths.array.sum())
    final = np.abs(r.data["a0"])
    mean_abs = np.abs(r.data["checkpoint_a0"]).mean(axis=0)
    return {
        "steps": steps, "trials": trials,
        "linear_drift": float(final.mean() / steps),
        "linear_drift_normalized": float(final.mean() / (steps * total)),
        "max_linear_drift_normalized": float(final.max() / (steps * total)),
        "diffusive_exponent": loglog_slope(ck, mean_abs),
        "checkpoints": ck.tolist(), "mean_abs_a0": mean_abs.tolist(),
        "run": r.summary(), "stats": r,
    }


def lyapunov_matrix(mats, steps: int, seeds: int, seed: int = 0, dist: Optional[GeneratorDistribution] = None,
                    renorm_every: int = 8, level: float = 0.99, **kw) -> dict:
    r = run_lyapunov(mats, dist, steps, seed, range(seeds), renorm_every=renorm_every, **kw)
    est = r.data["log_growth"] / steps
    lo, hi = bootstrap_ci(est, level=level, rng=np.random.default_rng(seed))
    return {"estimate": float(est.mean()), "ci": [lo, hi], "level": level, "per_seed": est.tolist(),
            "run": r.summary(), "stats": r}


def lyapunov_schedule(mats, schedule: Sequence[int], steps: int, seed: int = 0, renorm_every: int = 8, **kw) -> dict:
    r = run_lyapunov(mats, None, steps, seed, (0,), renorm_every=renorm_every, schedule=schedule, **kw)
    return {"estimate": float(r.data["log_growth"][0] / steps), "schedule": list(schedule),
            "run": r.summary(), "stats": r}


def stiffness_experiment(system: BlancSystem, steps: int, starts: int, seed: int = 0, **kw) -> dict:
    r = run_blanc(system, steps, seed, range(starts), **kw)
    frac = r.data["tube"] / r.data["n_obs"]
    ces = r.data["checkpoint_dist_sum"] / r.data["checkpoint_n_obs"]
    tube_ck = r.data["checkpoint_tube"] / r.data["checkpoint_n_obs"]
    return {
        "steps": steps, "starts": starts, "eps": r.config["eps"],
        "tube_fraction": frac.tolist(),
        "fraction_above_0.9": float(np.mean(frac > 0.9)),
        "checkpoints": r.config["checkpoints"],
        "cesaro_distance": ces.mean(axis=0).tolist(),
        "cesaro_distance_se": (ces.std(axis=0, ddof=1) / math.sqrt(max(starts - 1, 1))).tolist()
        if starts > 1 else [0.0] * ces.shape[1],
        "tube_mass_curve": tube_ck.mean(axis=0).tolist(),
        "rejections": int(r.data["rejections"].sum()),
        "run": r.summary(), "stats": r,
    }


def nonincreasing_within_noise(values, errors, k: float = 2.0) -> bool:
    v = np.asarray(values)
    e = np.asarray(errors)
    return bool(np.all(v[1:] <= v[:-1] + k * np.hypot(e[1:], e[:-1])))


def coverage_probe(system: BlancSystem, max_len: int = 6, grid: int = 10, cells: int = 10) -> dict:
    """Images of a grid of starts under every reduced word of length <= max_len.

    For each start we report the fraction of the cells of a window (the box
    of the real base points) visited by its short-word orbit and whether the
    orbit leaves the start's own cell.
    """
    uvw, Q, base, nbase, *_ = system.arrays()
    k = len(Q)
    nwords = sum(k * (k - 1) ** (n - 1) for n in range(1, max_len + 1))
    if nwords > 10 ** 6:
        raise Budget(f"{nwords} words exceed the probe budget")
    lo, hi = blanc_box(system)
    span = hi - lo
    xs = lo[0] + span[0] * (np.arange(grid) + 0.5) / grid
    ys = lo[1] + span[1] * (np.arange(grid) + 0.5) / grid
    out = np.empty(3)
    coverage, escaped = [], []

    def cell(P):
        if abs(P[2]) < 1e-12:
            return None
        x, y = P[0] / P[2], P[1] / P[2]
        cx = int((x - lo[0]) / span[0] * cells)
        cy = int((y - lo[1]) / span[1] * cells)
        if 0 <= cx < cells and 0 <= cy < cells:
            return cx, cy
        return None

    for x in xs:
        for y in ys:
            P0 = np.array([x, y, 1.0]) / math.sqrt(x * x + y * y + 1.0)
            home = cell(P0)
            seen = {home}
            frontier = [(P0, -1)]
            for _ in range(max_len):
                nxt = []
                for P, last in frontier:
                    for g in range(k):
                        if g == last:
                            continue
                        if _kernels._blanc_step_c(P, uvw[0], uvw[1], uvw[2], Q[g], base[g], nbase[g],
                                                  1e-9, 1e-8, out):
                            Pn = out.copy()
                            seen.add(cell(Pn))
                            nxt.append((Pn, g))
                frontier = nxt
            seen.discard(None)
            coverage.append(len(seen) / cells ** 2)
            escaped.append(len(seen - {home}) > 0)
    coverage = np.array(coverage)
    return {"max_len": max_len, "grid": grid, "cells": cells,
            "mean_coverage": float(coverage.mean()), "min_coverage": float(coverage.min()),
            "escaped_fraction": float(np.mean(escaped))}


# ------------------------------------------------------------ expansion


def _word_log_expansion(ell, z, dz, word, method: str, h: float):
    w = dehomogenize(z)
    v = np.asarray(dz, dtype=complex)
    n0 = np.linalg.norm(tangent_to_theta(w, v))
    for (i, j) in word:
        if method == "closed":
            w, v = fold_differential(ell, i, j, w, v)
        else:
            v = fold_differential_fd(ell, i, j, w, v, h)
            w, _ = fold_differential(ell, i, j, w, np.zeros(5, dtype=complex))
    return math.log(np.linalg.norm(tangent_to_theta(w, v)) / n0)


def uniform_expansion_probe(ell, dist: Optional[GeneratorDistribution] = None, n0: int = 2,
                            samples: int = 20, directions: int = 16, seed: int = 0,
                            method: str = "closed", h: float = 1e-6, points=None,
                            budget: int = 20000) -> dict:
    """min over sampled (x, v) of sum_w nu^(n0)(w) log |D_x f_w v| / |v|.

    Tangent vectors are measured in the flat metric of the angle coordinates
    theta_1..theta_4 of the real locus.
    """
    if method not in ("closed", "fd"):
        raise ValidationError("method is 'closed' or 'fd'")
    dist = dist or GeneratorDistribution.uniform(PAIRS_EXT)
    G = len(dist)
    if G ** n0 > budget:
        raise Budget(f"{G}^{n0} words exceed the budget {budget}")
    ell = as_lengths(ell)
    rng = trial_rng(seed, 0)
    if points is None:
        points = [random_real_point(ell, rng) for _ in range(samples)]
    probs = dist.probs
    words = list(itertools.product(range(G), repeat=n0))
    phis = np.linspace(0, math.pi, directions, endpoint=False)
    values = []
    for z in points:
        w = dehomogenize(z)
        e1, e2 = real_tangent_frame(ell, w)
        row = []
        for phi in phis:
            dz = theta_to_tangent(w, math.cos(phi) * e1 + math.sin(phi) * e2)
            tot = 0.0
            for word in words:
                p = float(np.prod(probs[list(word)]))
                try:
                    tot += p * _word_log_expansion(ell, w, dz, [dist.labels[g] for g in word], method, h)
                except (Indeterminacy, ZeroDivisionError):
                    tot = float("nan")
                    break
            row.append(tot)
        values.append(row)
    values = np.array(values)
    return {"n0": n0, "method": method, "c_hat": float(np.nanmin(values)),
            "mean": float(np.nanmean(values)), "values": values}


# ------------------------------------------------------------ Breiman


def breiman_check(ell, long_steps: int = 10 ** 6, short_runs: int = 1000, short_steps: int = 1000,
                  seed: int = 0, dist: Optional[GeneratorDistribution] = None, nb: int = 50) -> dict:
    """Empirical measure of one long run vs the orbital average of many short runs."""
    dist = dist or GeneratorDistribution.uniform(PAIRS_EXT)
    system = PentagonSystem(ell, dist)
    start = run_pentagon(system, 0, seed, (0,), push=False).data["start"][0]
    a = run_pentagon(system, long_steps, seed, (0,), starts=start, push=False, nb=nb)
    b = run_pentagon(system, short_steps, seed, range(1, short_runs + 1), starts=start,
                     push=False, nb=nb, chunk=short_steps)
    return {"tv": tv_distance(a.total("hist_theta"), b.total("hist_theta")),
            "tv_a3": tv_distance(a.total("hist_a3"), b.total("hist_a3"))}
