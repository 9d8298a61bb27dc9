"""Random-walk driver: generator distributions, seeded streams, chunked kernels.

Every trial owns an independent PCG64 stream keyed by ``(seed, trial)`` and a
private walker state, so results do not depend on how trials are grouped into
runs or threads.  Per-trial outputs are kept separately inside RunStats and
aggregated in trial order, which makes merging exact.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from .. import _kernels
from .._accel import resolve
from ..blancgeom import CubicCurve, JonquieresMap, homog
from ..errors import ErrorCeiling, ValidationError
from ..pentspace import lift_of_pair, sample_pentagon
from ..pentsurf import INDETERMINACY_TOL, as_lengths

CHUNK = 1 << 15
PAIRS_EXT = tuple((i, j) for i in range(5) for j in range(i + 1, 5))
PAIRS_CONSECUTIVE = tuple(sorted((i, (i + 1) % 5)) for i in range(5))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(trial)])))


@dataclass(frozen=True)
class GeneratorDistribution:
    """Finitely supported measure nu on a labelled generator set."""

    labels: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.labels) == 0 or len(self.labels) != len(self.weights):
            raise ValidationError("labels and weights must be nonempty and of equal length")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0) or not np.isfinite(w).all():
            raise ValidationError("generator weights must be positive")
        if len(self.labels) > 127:
            raise ValidationError("at most 127 generators")
        object.__setattr__(self, "weights", tuple(float(x) for x in w / w.sum()))

    @classmethod
    def uniform(cls, labels) -> "GeneratorDistribution":
        labels = tuple(labels)
        return cls(labels, (1.0,) * len(labels))

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.weights)

    def __len__(self):
        return len(self.labels)

    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return gen.choice(len(self.labels), size=n, p=self.probs).astype(np.int8)

    def to_dict(self) -> dict:
        return {"labels": [_jsonable(l) for l in self.labels], "weights": list(self.weights)}

    @classmethod
    def from_dict(cls, d) -> "GeneratorDistribution":
        labels = tuple(tuple(l) if isinstance(l, list) else l for l in d["labels"])
        return cls(labels, tuple(d["weights"]))


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(y) for y in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


@dataclass
class RunStats:
    """Per-trial Monte-Carlo output; the leading axis of every array is the trial."""

    system: str
    config: dict
    trials: np.ndarray
    data: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.trials = np.asarray(self.trials, dtype=np.int64)

    def merge(self, other: "RunStats") -> "RunStats":
        if self.system != other.system or self.config != other.config:
            raise ValidationError("cannot merge runs with different configurations")
        if set(self.data) != set(other.data):
            raise ValidationError("cannot merge runs with different observables")
        trials = np.concatenate([self.trials, other.trials])
        if len(np.unique(trials)) != len(trials):
            raise ValidationError("merged runs share a trial index")
        order = np.argsort(trials, kind="stable")
        data = {k: np.concatenate([self.data[k], other.data[k]])[order] for k in self.data}
        return RunStats(self.system, dict(self.config), trials[order], data)

    def total(self, name: str) -> np.ndarray:
        return self.data[name].sum(axis=0)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.system.encode())
        h.update(json.dumps(self.config, sort_keys=True).encode())
        h.update(self.trials.tobytes())
        for k in sorted(self.data):
            a = np.ascontiguousarray(self.data[k])
            h.update(k.encode())
            h.update(str(a.dtype).encode())
            h.update(a.tobytes())
        return h.hexdigest()

    def summary(self) -> dict:
        out = {"system": self.system, "config": self.config,
               "trials": self.trials.tolist(), "digest": self.digest()}
        if "rejections" in self.data:
            out["rejections"] = int(self.data["rejections"].sum())
        return out

    def save_npz(self, path) -> None:
        np.savez_compressed(path, trials=self.trials, config=json.dumps(self.config),
                            system=self.system, **self.data)


def _slices(n: int, threads: int):
    threads = max(1, min(int(threads), n))
    edges = np.linspace(0, n, threads + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run_sliced(fn, n: int, threads: int):
    parts = _slices(n, threads)
    if len(parts) == 1:
        fn(parts[0])
        return
    with ThreadPoolExecutor(len(parts)) as ex:
        for f in [ex.submit(fn, s) for s in parts]:
            f.result()


def _draw_chunk(dist, gens, n):
    choices = np.empty((len(gens), n), dtype=np.int8)
    resample = np.empty((len(gens), n), dtype=np.int8)
    for r, g in enumerate(gens):
        choices[r] = dist.draw(g, n)
        resample[r] = dist.draw(g, n)
    return choices, resample


def _check_ceiling(rej, steps, ceiling):
    if ceiling is None or steps == 0:
        return
    frac = float(np.max(rej)) / steps
    if frac > ceiling:
        raise ErrorCeiling(f"rejection rate {frac:.3g} exceeds the ceiling {ceiling:.3g}")


def _checkpoint_array(checkpoints, steps) -> np.ndarray:
    ck = sorted({int(c) for c in (() if checkpoints is None else checkpoints) if 0 < int(c) <= steps})
    return np.array(ck, dtype=np.int64)


def decades(steps: int) -> list:
    out, d = [], 10
    while d < steps:
        out.append(d)
        d *= 10
    out.append(int(steps))
    return out


# ================================================================ pentagon


@dataclass(frozen=True)
class PentagonSystem:
    """Folds of the pairs in ``dist`` acting on Pent(l) with tracked vertex a_0."""

    lengths: object
    dist: GeneratorDistribution

    def __post_init__(self):
        ell = as_lengths(self.lengths)
        if not ell.is_real or not ell.admissible():
            raise ValidationError(f"lengths {ell.to_list()} are not real admissible")
        object.__setattr__(self, "lengths", ell)
        for lab in self.dist.labels:
            i, j = lab
            if not (0 <= i < 5 and 0 <= j < 5 and i != j):
                raise ValidationError(f"bad fold pair {lab}")

    def arrays(self):
        pi = np.array([l[0] for l in self.dist.labels], dtype=np.int64)
        pj = np.array([l[1] for l in self.dist.labels], dtype=np.int64)
        dk = np.full(len(pi), -1, dtype=np.int64)
        for g, (i, j) in enumerate(self.dist.labels):
            tag, m = lift_of_pair(i, j)
            # only s_4, r_3 and r_4 move a_0; the moved edge is then edge 3 or 4
            if (tag, m) in (("s", 4), ("r", 4)):
                dk[g] = 4
            elif (tag, m) == ("r", 3):
                dk[g] = 3
        return self.lengths.array.astype(float), pi, pj, dk

    def describe(self) -> dict:
        return {"lengths": [str(x) for x in self.lengths.to_list()], "nu": self.dist.to_dict()}


def pentagon_start(ell, gen: np.random.Generator, rotation: complex = 1.0) -> np.ndarray:
    p = sample_pentagon(ell, gen)
    return p.directions * rotation


def run_pentagon(system: PentagonSystem, steps: int, seed: int = 0, trials: Iterable[int] = (0,), *,
                 starts: Optional[np.ndarray] = None, rotation: complex = 1.0,
                 nb: int = 50, abins: int = 360, hist: bool = True, push: bool = True,
                 angle: bool = False, checkpoints: Sequence[int] = (), reproj_every: int = 1000,
                 threshold: float = INDETERMINACY_TOL, record_first: bool = True,
                 ceiling: Optional[float] = 0.01, chunk: int = CHUNK,
                 backend: Optional[str] = None, threads: int = 1) -> RunStats:
    be = resolve(backend)
    trials = np.asarray(list(trials), dtype=np.int64)
    T = len(trials)
    ell, pi, pj, dk = system.arrays()
    G = len(pi)
    gens = [trial_rng(seed, tr) for tr in trials]
    if starts is None:
        t = np.array([pentagon_start(system.lengths, g, rotation) for g in gens], dtype=np.complex128)
    else:
        t = np.array(np.broadcast_to(np.asarray(starts, dtype=np.complex128), (T, 5)))
    t0 = t.copy()
    rect = float(ell.sum())
    hn = nb if hist else 1
    pn = nb if push else 1
    hist_th = np.zeros((T, hn, hn), dtype=np.int64)
    hist_a3 = np.zeros((T, hn, hn), dtype=np.int64)
    whist = np.zeros((T, hn, hn))
    push_th = np.zeros((T, G if push else 1, pn, pn), dtype=np.int64)
    push_a3 = np.zeros_like(push_th)
    ang = np.zeros((T, abins if angle else 1), dtype=np.int64)
    ck = _checkpoint_array(checkpoints, steps)
    ck_out = np.zeros((T, len(ck)), dtype=np.complex128)
    a0 = np.zeros(T, dtype=np.complex128)
    rej = np.zeros(T, dtype=np.int64)
    maxres = np.zeros(T)
    done = 0
    first = record_first
    while True:
        n = min(chunk, steps - done)
        choices, resample = _draw_chunk(system.dist, gens, n)

        def work(s, n=n, first=first, done=done, choices=choices, resample=resample):
            _kernels.pent_loop(be, ell, pi, pj, dk, t[s], a0[s], choices[s], resample[s],
                               done, reproj_every, threshold, first, nb, rect, abins,
                               hist, push, angle, hist_th[s], hist_a3[s], whist[s],
                               push_th[s], push_a3[s], ang[s], ck, ck_out[s], rej[s], maxres[s])

        _run_sliced(work, T, threads)
        first = False
        done += n
        if done >= steps:
            break
    _check_ceiling(rej, steps, ceiling)
    closure = np.abs(t @ ell)
    unit = np.max(np.abs(np.abs(t) - 1.0), axis=1)
    cfg = {"steps": int(steps), "seed": int(seed), "nb": nb, "abins": abins, "hist": hist,
           "push": push, "angle": angle, "checkpoints": ck.tolist(), "reproj_every": reproj_every,
           "threshold": threshold, "record_first": record_first, "chunk": chunk,
           "rotation": [float(np.real(rotation)), float(np.imag(rotation))],
           "explicit_starts": starts is not None, **system.describe()}
    data = {"start": t0, "final": t, "a0": a0, "rejections": rej, "max_closure": np.maximum(maxres, closure),
            "max_unit_defect": unit, "checkpoint_a0": ck_out}
    if hist:
        data.update(hist_theta=hist_th, hist_a3=hist_a3, hist_weighted=whist)
    if push:
        data.update(push_theta=push_th, push_a3=push_a3)
    if angle:
        data.update(hist_angle=ang)
    return RunStats("pentagon", cfg, trials, data)


# ================================================================ Blanc


@dataclass
class BlancSystem:
    curve: CubicCurve
    qs: list
    dist: GeneratorDistribution = None

    def __post_init__(self):
        self.qs = [np.asarray(q, dtype=float) for q in self.qs]
        self.maps = [JonquieresMap(self.curve, q) for q in self.qs]
        if self.dist is None:
            self.dist = GeneratorDistribution.uniform(tuple(range(1, len(self.qs) + 1)))
        for lab in self.dist.labels:
            if not (isinstance(lab, (int, np.integer)) and 1 <= lab <= len(self.qs)):
                raise ValidationError(f"Blanc generator labels are 1..k, got {lab!r}")

    def real_points(self) -> np.ndarray:
        pts = [q for q in self.qs]
        for m in self.maps:
            pts.extend(list(m.real_base_points()))
        return np.array(pts)

    def diagonal(self) -> float:
        return self.curve.bounding_diagonal(self.real_points())

    def arrays(self):
        k = len(self.dist.labels)
        Q = np.zeros((k, 3))
        base = np.zeros((k, 5, 3))
        nbase = np.zeros(k, dtype=np.int64)
        for g, lab in enumerate(self.dist.labels):
            m = self.maps[lab - 1]
            Q[g] = homog(m.q)
            pts = [m.q] + list(m.real_base_points())
            nbase[g] = len(pts)
            for b, p in enumerate(pts):
                base[g, b] = homog(p)
        cp_roots = self.curve.real_roots
        xr = float(cp_roots[-1])
        b1 = self.curve.u + xr
        b0 = self.curve.v + xr * b1
        return np.array([self.curve.u, self.curve.v, self.curve.w]), Q, base, nbase, xr, b0, b1

    def describe(self) -> dict:
        return {"curve": self.curve.to_dict(), "qs": [q.tolist() for q in self.qs], "nu": self.dist.to_dict()}


def blanc_box(system: BlancSystem):
    pts = system.real_points()
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    return lo, hi


def run_blanc(system: BlancSystem, steps: int, seed: int = 0, trials: Iterable[int] = (0,), *,
              starts: Optional[np.ndarray] = None, eps: Optional[float] = None,
              eps_frac: float = 0.05, dcap: Optional[float] = None,
              checkpoints: Optional[Sequence[int]] = None, mesh: int = 64,
              base_tol: float = 1e-9, tan_tol: float = 1e-8, record_first: bool = True,
              ceiling: Optional[float] = 0.01, chunk: int = CHUNK,
              backend: Optional[str] = None, threads: int = 1) -> RunStats:
    be = resolve(backend)
    trials = np.asarray(list(trials), dtype=np.int64)
    T = len(trials)
    uvw, Q, base, nbase, xr, b0, b1 = system.arrays()
    diag = system.diagonal()
    eps = eps_frac * diag if eps is None else float(eps)
    dcap = 10.0 * diag if dcap is None else float(dcap)
    gens = [trial_rng(seed, tr) for tr in trials]
    if starts is None:
        lo, hi = blanc_box(system)
        P = np.array([homog(lo + (hi - lo) * g.random(2)) for g in gens])
    else:
        s = np.atleast_2d(np.asarray(starts, dtype=float))
        P = np.array([homog(p) for p in np.broadcast_to(s, (T, s.shape[1]))])
    P = P / np.linalg.norm(P, axis=1)[:, None]
    P0 = P.copy()
    ck = _checkpoint_array(decades(steps) if checkpoints is None else checkpoints, steps)
    tube = np.zeros(T, dtype=np.int64)
    nobs = np.zeros(T, dtype=np.int64)
    dsum = np.zeros(T)
    ck_tube = np.zeros((T, len(ck)), dtype=np.int64)
    ck_nobs = np.zeros((T, len(ck)), dtype=np.int64)
    ck_dsum = np.zeros((T, len(ck)))
    rej = np.zeros(T, dtype=np.int64)
    done = 0
    first = record_first
    while True:
        n = min(chunk, steps - done)
        choices, resample = _draw_chunk(system.dist, gens, n)

        def work(s, n=n, first=first, done=done, choices=choices, resample=resample):
            _kernels.blanc_loop(be, uvw, Q, base, nbase, P[s], choices[s], resample[s], done,
                                base_tol, tan_tol, xr, b0, b1, mesh, eps, dcap, first,
                                tube[s], dsum[s], nobs[s], ck, ck_tube[s], ck_dsum[s], ck_nobs[s], rej[s])

        _run_sliced(work, T, threads)
        first = False
        done += n
        if done >= steps:
            break
    _check_ceiling(rej, steps, ceiling)
    cfg = {"steps": int(steps), "seed": int(seed), "eps": eps, "eps_frac": eps_frac, "dcap": dcap,
           "checkpoints": ck.tolist(), "mesh": mesh, "base_tol": base_tol, "tan_tol": tan_tol,
           "record_first": record_first, "chunk": chunk, "explicit_starts": starts is not None,
           **system.describe()}
    data = {"start": P0, "final": P, "tube": tube, "dist_sum": dsum, "n_obs": nobs,
            "checkpoint_tube": ck_tube, "checkpoint_dist_sum": ck_dsum, "checkpoint_n_obs": ck_nobs,
            "rejections": rej}
    return RunStats("blanc", cfg, trials, data)


# ================================================================ matrices


def run_lyapunov(mats, dist: Optional[GeneratorDistribution], steps: int, seed: int = 0,
                 trials: Iterable[int] = (0,), *, renorm_every: int = 8,
                 schedule: Optional[Sequence[int]] = None, chunk: int = CHUNK,
                 backend: Optional[str] = None, threads: int = 1) -> RunStats:
    """Growth of v -> M v under i.i.d. (or cyclic ``schedule``) products of ``mats``."""
    be = resolve(backend)
    M = np.array([np.asarray(m.to_numpy() if hasattr(m, "to_numpy") else m, dtype=float) for m in mats])
    if M.ndim != 3 or M.shape[1] != M.shape[2]:
        raise ValidationError("matrices must be square and of equal dimension")
    if renorm_every < 1:
        raise ValidationError("renorm_every must be positive")
    trials = np.asarray(list(trials), dtype=np.int64)
    T, d = len(trials), M.shape[1]
    if dist is None and schedule is None:
        dist = GeneratorDistribution.uniform(tuple(range(len(M))))
    gens = [trial_rng(seed, tr) for tr in trials]
    v = np.array([g.standard_normal(d) for g in gens])
    v /= np.linalg.norm(v, axis=1)[:, None]
    logsum = np.zeros(T)
    done = 0
    while done < steps:
        n = min(chunk, steps - done)
        if schedule is not None:
            sch = np.asarray(schedule, dtype=np.int64)
            idx = (np.arange(done, done + n) % len(sch))
            choices = np.broadcast_to(sch[idx], (T, n)).astype(np.int64)
        else:
            choices = np.array([dist.draw(g, n) for g in gens], dtype=np.int64)
            choices = np.asarray(dist.labels, dtype=np.int64)[choices] if _labels_are_indices(dist, len(M)) else choices

        def work(s, choices=choices):
            _kernels.lyap_loop(be, M, np.ascontiguousarray(choices[s]), v[s], renorm_every, logsum[s])

        # chunk boundaries always renormalize, which keeps the sums chunk-aligned
        _run_sliced(work, T, threads)
        done += n
    assert np.all(np.isfinite(logsum))
    cfg = {"steps": int(steps), "seed": int(seed), "renorm_every": renorm_every, "chunk": chunk,
           "schedule": None if schedule is None else [int(s) for s in schedule],
           "nu": None if dist is None else dist.to_dict(), "dim": d, "n_mats": len(M)}
    return RunStats("matrix", cfg, trials, {"log_growth": logsum, "final": v})


def _labels_are_indices(dist, n) -> bool:
    return all(isinstance(l, (int, np.integer)) and 0 <= l < n for l in dist.labels)


# ================================================================ dispatch


def run_orbit(system, x0, steps: int, seed: int = 0, **kw) -> RunStats:
    """Single-trial orbit from an explicit start."""
    if isinstance(system, PentagonSystem):
        x0 = np.asarray(x0, dtype=np.complex128)
        return run_pentagon(system, steps, seed, (0,), starts=x0[None, :], **kw)
    if isinstance(system, BlancSystem):
        return run_blanc(system, steps, seed, (0,), starts=np.asarray(x0, dtype=float)[None, :], **kw)
    raise ValidationError(f"unknown system type {type(system).__name__}")
