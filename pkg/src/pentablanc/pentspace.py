"""Pentagon configuration spaces and geometric folds.

Planar points are complex numbers.  A pentagon has vertices a_0..a_4 and edge
vectors v_i = a_{i+1} - a_i = l_i t_i with |t_i| = 1.  Pent^0 fixes a_0 = 0 and
a_1 = l_0 (so t_0 = 1); Pent^1 keeps the global rotation; Pent keeps position.

Lifts to Pent: the fold of the pair (i, i+1) is s_i and moves only a_{i+1};
the fold of (i, i+2) is r_i, which fixes a_i, a_{i+3}, a_{i+4}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import AdmissibilityFailure, DegenerateAxis, NotRealLocus
from .pentsurf import Lengths, as_lengths, normalize

AXIS_TOL = 1e-10


@dataclass(frozen=True)
class Pentagon:
    vertices: np.ndarray  # complex, shape (5,)
    lengths: Lengths

    @property
    def edges(self) -> np.ndarray:
        a = self.vertices
        return np.roll(a, -1) - a

    @property
    def directions(self) -> np.ndarray:
        return self.edges / self.lengths.array

    def closure_residual(self) -> float:
        return float(np.max(np.abs(np.abs(self.edges) - self.lengths.array)))

    def xy(self) -> np.ndarray:
        return np.column_stack([self.vertices.real, self.vertices.imag])

    def to_json(self) -> list:
        return [[float(p.real), float(p.imag)] for p in self.vertices]

    @classmethod
    def from_json(cls, pts: Sequence[Sequence[float]], ell) -> "Pentagon":
        return cls(np.array([complex(x, y) for x, y in pts]), as_lengths(ell))


@dataclass(frozen=True)
class NormalizedPentagon:
    t: np.ndarray  # unit complex, shape (5,), t[0] == 1
    lengths: Lengths

    @property
    def vertices(self) -> np.ndarray:
        v = self.lengths.array * self.t
        return np.concatenate([[0j], np.cumsum(v)[:-1]])

    def closure(self) -> float:
        return float(abs(np.dot(self.lengths.array, self.t)))


@dataclass(frozen=True)
class Pent1Point:
    base: NormalizedPentagon
    u: complex


def normalize_pentagon(p: Pentagon) -> NormalizedPentagon:
    t = p.directions
    return NormalizedPentagon(t / t[0], p.lengths)


def pent1_of(p: Pentagon) -> Pent1Point:
    t = p.directions
    return Pent1Point(NormalizedPentagon(t / t[0], p.lengths), complex(t[0]))


def pentagon_from_directions(t, ell, a0: complex = 0j) -> Pentagon:
    ell = as_lengths(ell)
    v = ell.array * np.asarray(t)
    return Pentagon(a0 + np.concatenate([[0j], np.cumsum(v)[:-1]]), ell)


def sample_pentagon(ell, rng, budget: int = 100000) -> Pentagon:
    """Random closed pentagon with full support (not the invariant measure)."""
    ell = as_lengths(ell)
    if not ell.admissible():
        raise AdmissibilityFailure(f"lengths {ell.to_list()} admit no nondegenerate pentagon")
    l = ell.array
    a1 = complex(l[0])
    for _ in range(budget):
        a2 = a1 + l[1] * np.exp(2j * np.pi * rng.random())
        a3 = a2 + l[2] * np.exp(2j * np.pi * rng.random())
        d = abs(a3)
        if not (abs(l[3] - l[4]) < d < l[3] + l[4]):
            continue
        # a4 on C(a3, l3) and C(0, l4).
        x = (d * d + l[4] ** 2 - l[3] ** 2) / (2 * d)
        h = np.sqrt(max(l[4] ** 2 - x * x, 0.0))
        e = a3 / d
        sgn = 1.0 if rng.random() < 0.5 else -1.0
        a4 = e * complex(x, sgn * h)
        return Pentagon(np.array([0j, a1, a2, a3, a4]), ell)
    raise AdmissibilityFailure("rejection budget exhausted while closing the pentagon")


def lift_of_pair(i: int, j: int) -> Tuple[str, int]:
    """('s', m) or ('r', m) naming the Pent lift of the fold of {i, j}."""
    d = (j - i) % 5
    if d == 1:
        return "s", i
    if d == 4:
        return "s", j
    if d == 2:
        return "r", i
    if d == 3:
        return "r", j
    raise ValueError("fold indices must differ")


def pair_of_lift(tag: str, m: int) -> Tuple[int, int]:
    step = 1 if tag == "s" else 2
    if tag not in ("s", "r"):
        raise ValueError(f"unknown lift tag {tag!r}")
    return m % 5, (m + step) % 5


def reflect_directions(ell, t, i: int, j: int, tol: float = AXIS_TOL) -> np.ndarray:
    """Reflect t_i, t_j across the line spanned by l_i t_i + l_j t_j."""
    l = as_lengths(ell).array
    t = np.array(t, dtype=complex)
    w = l[i] * t[i] + l[j] * t[j]
    if abs(w) < tol * (abs(l[i]) + abs(l[j])):
        raise DegenerateAxis(f"fold axis of ({i},{j}) is undefined")
    # Householder reflection about the unit axis u, written in R^2.
    u = np.array([w.real, w.imag]) / abs(w)
    for k in (i, j):
        x = np.array([t[k].real, t[k].imag])
        y = 2.0 * np.dot(x, u) * u - x
        t[k] = complex(y[0], y[1])
    return t


def geom_fold(p: Pentagon, i: int, j: int) -> Pentagon:
    """Fold of the pair (i, j) with the Pent lift convention."""
    tag, m = lift_of_pair(i, j)
    a = p.vertices.copy()
    v = p.edges
    l = p.lengths.array
    t = reflect_directions(p.lengths, v / l, i, j)
    vn = l * t
    if tag == "s":
        a[(m + 1) % 5] = a[m] + vn[m]
    else:
        a[(m + 1) % 5] = a[m] + vn[m]
        a[(m + 2) % 5] = a[(m + 1) % 5] + vn[(m + 1) % 5]
    return Pentagon(a, p.lengths)


def fold_normalized(x: NormalizedPentagon, i: int, j: int) -> NormalizedPentagon:
    t = reflect_directions(x.lengths, x.t, i, j)
    return NormalizedPentagon(t / t[0], x.lengths)


def to_surface(p) -> np.ndarray:
    """Real point z_i = t_i / t_0 of the surface."""
    if isinstance(p, Pentagon):
        p = normalize_pentagon(p)
    return normalize(p.t)


def from_surface(ell, z, tol: float = 1e-9) -> NormalizedPentagon:
    z = np.asarray(z, dtype=complex)
    mod = np.abs(z)
    if np.any(np.abs(mod / mod.max() - 1.0) > tol):
        raise NotRealLocus("coordinates do not all have the same modulus")
    t = z / z[0]
    t = t / np.abs(t)
    return NormalizedPentagon(t, as_lengths(ell))


def theta_m(q: Pent1Point, m: int) -> complex:
    """Direction of the edge (a_m, a_{m+1}) of the rotated pentagon."""
    return complex(q.u * q.base.t[m])


def circle_cocycle(i: int, j: int, x: NormalizedPentagon) -> complex:
    """h with (x, u) -> (sigma(x), h u) in the chart based at edge 0."""
    if 0 not in (i, j):
        return 1.0 + 0j
    t = reflect_directions(x.lengths, x.t, i, j)
    return complex(t[0])


def fold_pent1(q: Pent1Point, i: int, j: int) -> Pent1Point:
    h = circle_cocycle(i, j, q.base)
    return Pent1Point(fold_normalized(q.base, i, j), q.u * h)


def drift_increment(label, q: Pent1Point) -> np.ndarray:
    """Displacement of a_0 under the Pent lift, as a vector of R^2.

    Only s_4 (pair (4, 0)), r_3 (pair (3, 0)) and r_4 (pair (4, 1)) move a_0.
    """
    if isinstance(label, tuple) and isinstance(label[0], str):
        tag, m = label
        i, j = pair_of_lift(tag, m)
    else:
        i, j = label
        tag, m = lift_of_pair(i, j)
    if (tag, m) == ("s", 4):
        k = 4
    elif (tag, m) == ("r", 3):
        k = 3
    elif (tag, m) == ("r", 4):
        k = 4
    else:
        return np.zeros(2)
    l = q.base.lengths.array
    t = q.u * q.base.t
    tn = reflect_directions(q.base.lengths, t, i, j)
    w = l[k] * (tn[k] - t[k])
    return np.array([w.real, w.imag])
