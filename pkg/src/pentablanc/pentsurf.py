"""The Darboux pentagon surface in P^4.

X_l is cut out by  sum l_i z_i = 0  and  sum l_i / z_i = 0, the second
equation taken in its homogeneous quartic form
sum_i l_i prod_{k != i} z_k = 0.  Points are length-5 complex arrays
(homogeneous coordinates); most functions return them normalized so the
coordinate of largest modulus equals 1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ChartDegenerate, Indeterminacy, NonConvergence, OnCommonLine

PAIRS: Tuple[Tuple[int, int], ...] = tuple(itertools.combinations(range(5), 2))
SURFACE_TOL = 1e-9
INDETERMINACY_TOL = 1e-10


def _parse_scalar(x):
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        try:
            return Fraction(s)
        except ValueError:
            return complex(s.replace(" ", ""))
    if isinstance(x, complex):
        return x
    return float(x)


@dataclass(frozen=True)
class Lengths:
    """Five nonzero side lengths; exact rationals are kept when given."""

    values: tuple

    def __post_init__(self):
        vals = tuple(_parse_scalar(x) for x in self.values)
        if len(vals) != 5:
            raise ValueError("exactly five lengths are required")
        if any(v == 0 for v in vals):
            raise ValueError("lengths must be nonzero")
        object.__setattr__(self, "values", vals)

    @classmethod
    def parse(cls, items: Sequence) -> "Lengths":
        return cls(tuple(items))

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.values)

    @property
    def is_real(self) -> bool:
        return all(not isinstance(v, complex) for v in self.values)

    @property
    def array(self) -> np.ndarray:
        if self.is_real:
            return np.array([float(v) for v in self.values])
        return np.array([complex(v) for v in self.values])

    @property
    def total(self) -> float:
        return float(np.sum(np.abs(self.array)))

    def admissible(self) -> bool:
        """Closed planar pentagons exist and are nondegenerate: 2 max l < sum l."""
        if not self.is_real or any(v <= 0 for v in self.values):
            return False
        if self.exact:
            return 2 * max(self.values) < sum(self.values)
        a = self.array
        return bool(2 * a.max() < a.sum())

    def to_list(self) -> list:
        return [str(v) if isinstance(v, Fraction) else v for v in self.values]


def as_lengths(ell) -> Lengths:
    return ell if isinstance(ell, Lengths) else Lengths(tuple(ell))


def sign_patterns() -> List[Tuple[int, ...]]:
    """The 16 sign vectors with first entry +1."""
    return [(1,) + s for s in itertools.product((1, -1), repeat=4)]


def smoothness_check(ell, tol: float = 1e-12) -> bool:
    ell = as_lengths(ell)
    if ell.exact:
        return all(sum(e * v for e, v in zip(eps, ell.values)) != 0 for eps in sign_patterns())
    a = ell.array
    scale = float(np.abs(a).sum())
    return all(abs(np.dot(eps, a)) > tol * scale for eps in sign_patterns())


# ------------------------------------------------------------------ points


def normalize(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    k = int(np.argmax(np.abs(z)))
    if z[k] == 0:
        raise ValueError("the zero vector is not a projective point")
    return z / z[k]


def projective_distance(a, b) -> float:
    """min over unit phases c of max |c a - b|, both scaled to max modulus 1."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    a = a / np.abs(a).max()
    b = b / np.abs(b).max()
    best = np.inf
    ip = np.vdot(a, b)
    cands = []
    if ip != 0:
        cands.append(ip / abs(ip))
    k = int(np.argmax(np.abs(b)))
    if a[k] != 0:
        c = b[k] / a[k]
        cands.append(c / abs(c))
    for c in cands:
        best = min(best, float(np.abs(c * a - b).max()))
    return best


def equations(ell, z) -> Tuple[complex, complex]:
    a = as_lengths(ell).array
    z = np.asarray(z)
    f1 = np.dot(a, z)
    f2 = sum(a[i] * np.prod(np.delete(z, i)) for i in range(5))
    return complex(f1), complex(f2)


def on_surface(ell, z) -> float:
    """max modulus of the two defining polynomials at the normalized point."""
    f1, f2 = equations(ell, normalize(z))
    return max(abs(f1), abs(f2))


def node(ell, i: int, j: int) -> list:
    """Coordinates of q_ij: l_j at slot i, -l_i at slot j."""
    ell = as_lengths(ell)
    if i > j:
        i, j = j, i
    z = [0] * 5
    z[i] = ell.values[j]
    z[j] = -ell.values[i]
    return z


def nodes(ell) -> dict:
    return {(i, j): node(ell, i, j) for i, j in PAIRS}


def exact_residual(ell, z: Sequence) -> Tuple:
    """Both equations evaluated in exact arithmetic (for rational input)."""
    ell = as_lengths(ell)
    f1 = sum(l * x for l, x in zip(ell.values, z))
    f2 = 0
    for i in range(5):
        p = ell.values[i]
        for k in range(5):
            if k != i:
                p = p * z[k]
        f2 += p
    return f1, f2


# ------------------------------------------------------------------- folds


def fold_sigma(ell, i: int, j: int, z, threshold: float = INDETERMINACY_TOL, renormalize: bool = True) -> np.ndarray:
    """z'_i = v z_j, z'_j = v z_i with v = (l_i z_i + l_j z_j) / (l_i z_j + l_j z_i)."""
    if i == j:
        raise ValueError("fold indices must differ")
    a = as_lengths(ell).array
    z = np.array(z, dtype=complex)
    den = a[i] * z[j] + a[j] * z[i]
    scale = np.abs(z).max() * np.abs(a).max()
    if abs(den) < threshold * scale:
        raise Indeterminacy(f"fold ({i},{j}) undefined near node q_{i}{j}", pair=(i, j))
    v = (a[i] * z[i] + a[j] * z[j]) / den
    zi, zj = z[i], z[j]
    rest = max((abs(z[k]) for k in range(5) if k not in (i, j)), default=0.0)
    if max(rest, abs(v) * max(abs(zi), abs(zj))) < threshold * np.abs(z).max():
        # at q_ij the image collapses to the zero vector
        raise Indeterminacy(f"fold ({i},{j}) undefined at node q_{i}{j}", pair=(i, j))
    z[i] = v * zj
    z[j] = v * zi
    return normalize(z) if renormalize else z


def fold_word(ell, word: Sequence[Tuple[int, int]], z, renormalize: bool = True) -> np.ndarray:
    """Apply folds left to right (the first pair acts first)."""
    for i, j in word:
        z = fold_sigma(ell, i, j, z, renormalize=renormalize)
    return z


def proj_lm(l: int, m: int, z, tol: float = 1e-14) -> Tuple[complex, complex]:
    """[z_l : z_m] scaled so the larger-modulus entry is 1."""
    zl, zm = complex(z[l]), complex(z[m])
    if max(abs(zl), abs(zm)) <= tol * max(np.abs(np.asarray(z)).max(), 1e-300):
        raise OnCommonLine(f"z_{l} = z_{m} = 0: point lies on L_{l}{m}")
    # ties (common on the real locus) go to z_l so rounding cannot flip the choice
    if abs(zl) >= abs(zm) * (1 - 1e-9):
        return 1.0 + 0j, zm / zl
    return zl / zm, 1.0 + 0j


def conj_structure(z) -> np.ndarray:
    return normalize(np.conj(np.asarray(z, dtype=complex)))


def J(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) < 1e-300 * np.abs(z).max()) or np.any(z == 0):
        raise Indeterminacy("J undefined on coordinate hyperplanes")
    return normalize(1.0 / z)


def s_structure(z) -> np.ndarray:
    return J(np.conj(np.asarray(z, dtype=complex)))


def real_structures(z) -> dict:
    return {"c_X": conj_structure(z), "s_X": s_structure(z), "J": J(z)}


def j_fixed_point_scan(ell, tol: float = 1e-12) -> List[Tuple[int, ...]]:
    """Points of {+-1}^5 (up to sign) lying on X; these are the fixed points of J.

    On such a point both equations reduce to sum eps_i l_i (times prod eps),
    so exact input is decided exactly.
    """
    ell = as_lengths(ell)
    out = []
    for eps in sign_patterns():
        if ell.exact:
            f1, f2 = exact_residual(ell, [Fraction(e) for e in eps])
            if f1 == 0 and f2 == 0:
                out.append(eps)
        else:
            scale = ell.total
            if on_surface(ell, np.array(eps, dtype=complex)) <= tol * scale:
                out.append(eps)
    return out


# ----------------------------------------------------------- area density


def _chart_jacobian(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """d(F1, F2)/d(w_1..w_4) in the chart w_0 = 1 (2 x 4 complex)."""
    jac = np.zeros((2, 4), dtype=complex)
    for c in range(1, 5):
        jac[0, c - 1] = a[c]
        s = 0j
        for i in range(5):
            if i == c:
                continue
            p = a[i]
            for k in range(5):
                if k != i and k != c:
                    p = p * w[k]
            s += p
        jac[1, c - 1] = s
    return jac


CHARTS = tuple(
    (tuple(ab), tuple(sorted(set(range(1, 5)) - set(ab))))
    for ab in itertools.combinations(range(1, 5), 2)
)


def _best_charts(jac: np.ndarray):
    """Charts ((a, b), (c, d)) sorted by decreasing |det d(F1,F2)/d(z_c, z_d)|."""
    out = []
    for ab, cd in CHARTS:
        c, d = cd
        det = jac[0, c - 1] * jac[1, d - 1] - jac[0, d - 1] * jac[1, c - 1]
        out.append((abs(det), ab, cd, det))
    out.sort(key=lambda t: -t[0])
    return out


def omega(ell, w, u1, u2, chart=None) -> complex:
    """Residue 2-form at w (chart w_0 = 1) on tangent vectors u1, u2 in C^5."""
    a = as_lengths(ell).array.astype(complex)
    jac = _chart_jacobian(a, w)
    charts = _best_charts(jac)
    if chart is None:
        mod, ab, cd, det = charts[0]
        if mod < 1e-12 * max(1.0, np.abs(jac).max() ** 2):
            raise ChartDegenerate("all Jacobian minors vanish")
    else:
        match = [t for t in charts if t[1] == tuple(chart)]
        mod, ab, cd, det = match[0]
        if mod == 0:
            raise ChartDegenerate(f"chart {chart} is degenerate here")
    a_, b_ = ab
    c_, d_ = cd
    # Orientation sign so every chart describes the same form.
    perm = (a_, b_, c_, d_)
    sign = _perm_sign([p - 1 for p in perm])
    num = u1[a_] * u2[b_] - u2[a_] * u1[b_]
    return sign * num / det


def _perm_sign(p) -> int:
    p = list(p)
    s = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


def dehomogenize(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if abs(z[0]) < 1e-14 * np.abs(z).max():
        raise ChartDegenerate("z_0 vanishes; the chart z_0 = 1 does not apply")
    return z / z[0]


def real_tangent_frame(ell, z) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the tangent plane of the real locus at z, in theta_1..theta_4."""
    a = as_lengths(ell).array
    w = dehomogenize(z)
    g = 1j * a[1:] * w[1:]
    m = np.vstack([g.real, g.imag])
    _, _, vt = np.linalg.svd(m)
    return vt[2], vt[3]


def theta_to_tangent(w, dtheta) -> np.ndarray:
    """dz_k = i z_k dtheta_k in the chart w_0 = 1 (index 0 padded with 0)."""
    w = np.asarray(w)
    out = np.zeros(5, dtype=complex)
    out[1:] = 1j * w[1:] * np.asarray(dtheta)
    return out


def residue_area_density(ell, z, chart=None) -> float:
    """|Omega| on an orthonormal real tangent frame at a real point z."""
    w = dehomogenize(z)
    e1, e2 = real_tangent_frame(ell, w)
    return abs(omega(ell, w, theta_to_tangent(w, e1), theta_to_tangent(w, e2), chart))


def chart_density(ell, z, coords: Tuple[int, int] = (1, 3)) -> float:
    """|Omega| on the tangent vectors lifting d/dtheta_p and d/dtheta_q.

    This is the density, with respect to dtheta_p dtheta_q, contributed by the
    sheet through z of the projection to the (theta_p, theta_q) torus.
    """
    a = as_lengths(ell).array
    w = dehomogenize(z)
    p, q = coords
    others = [k for k in range(1, 5) if k not in coords]
    g = 1j * a * w
    m_other = np.array([[g[k].real for k in others], [g[k].imag for k in others]])
    vecs = []
    for src in (p, q):
        rhs = -np.array([g[src].real, g[src].imag])
        sol = np.linalg.solve(m_other, rhs)
        d = np.zeros(4)
        d[src - 1] = 1.0
        for k, s in zip(others, sol):
            d[k - 1] = s
        vecs.append(theta_to_tangent(w, d))
    return abs(omega(ell, w, vecs[0], vecs[1]))


def coarea_density(ell, z) -> float:
    """1 / sqrt(det(DF DF^T)) for F(theta) = sum_k l_k exp(i theta_k), theta_0 fixed.

    Proportional to the invariant area density on the real locus; used as an
    independent check of the residue computation.
    """
    a = as_lengths(ell).array
    w = dehomogenize(z)
    g = 1j * a[1:] * w[1:]
    m = np.vstack([g.real, g.imag])
    return 1.0 / np.sqrt(np.linalg.det(m @ m.T))


def fold_differential(ell, i: int, j: int, z, dz) -> Tuple[np.ndarray, np.ndarray]:
    """Image point (chart w_0 = 1) and pushed tangent vector under fold (i, j)."""
    a = as_lengths(ell).array.astype(complex)
    z = np.asarray(z, dtype=complex)
    dz = np.asarray(dz, dtype=complex)
    n = a[i] * z[i] + a[j] * z[j]
    d = a[i] * z[j] + a[j] * z[i]
    dn = a[i] * dz[i] + a[j] * dz[j]
    dd = a[i] * dz[j] + a[j] * dz[i]
    v = n / d
    dv = (dn * d - n * dd) / (d * d)
    zp = z.copy()
    dzp = dz.copy()
    zp[i], zp[j] = v * z[j], v * z[i]
    dzp[i], dzp[j] = dv * z[j] + v * dz[j], dv * z[i] + v * dz[i]
    w = zp / zp[0]
    dw = (dzp * zp[0] - zp * dzp[0]) / (zp[0] * zp[0])
    return w, dw


def fold_differential_fd(ell, i: int, j: int, z, dz, h: float = 1e-6) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    dz = np.asarray(dz, dtype=complex)
    fp = dehomogenize(fold_sigma(ell, i, j, z + h * dz, renormalize=False))
    fm = dehomogenize(fold_sigma(ell, i, j, z - h * dz, renormalize=False))
    return (fp - fm) / (2 * h)


def fold_pullback_ratio(ell, i: int, j: int, z) -> float:
    """|Omega(D sigma e1, D sigma e2)| / |Omega(e1, e2)| on a real tangent frame."""
    w = dehomogenize(z)
    e1, e2 = real_tangent_frame(ell, w)
    u1, u2 = theta_to_tangent(w, e1), theta_to_tangent(w, e2)
    w2, d1 = fold_differential(ell, i, j, w, u1)
    _, d2 = fold_differential(ell, i, j, w, u2)
    return abs(omega(ell, w2, d1, d2)) / abs(omega(ell, w, u1, u2))


def tangent_to_theta(w, dw) -> np.ndarray:
    """Inverse of theta_to_tangent on the real locus: dtheta_k = dw_k / (i w_k)."""
    w = np.asarray(w)
    return np.real(np.asarray(dw)[1:] / (1j * w[1:]))


# -------------------------------------------------------------- reprojection


def newton_reproject(ell, z, real: Optional[bool] = None, tol: float = 1e-12, max_iter: int = 50, coarse: float = 1e-2) -> np.ndarray:
    """Gauss-Newton (minimum-norm steps) back onto the surface.

    In real mode the unknowns are the angles theta_1..theta_4 (theta_0 fixed),
    so the result stays on the unit torus.
    """
    ell = as_lengths(ell)
    a = ell.array.astype(complex)
    z = normalize(z)
    if on_surface(ell, z) > coarse:
        raise NonConvergence("starting point too far from the surface")
    if real is None:
        real = bool(np.all(np.abs(np.abs(z) - 1) < 1e-6))
    if real:
        w = z / z[0]
        th = np.angle(w)
        r = ell.array.real
        for _ in range(max_iter):
            e = np.exp(1j * th)
            f = np.dot(r, e)
            if abs(f) < tol * 1e-2:
                break
            g = 1j * r[1:] * e[1:]
            m = np.vstack([g.real, g.imag])
            mmt = m @ m.T
            if np.linalg.cond(mmt) > 1e12:
                raise NonConvergence("singular Jacobian (near a node)")
            step = -m.T @ np.linalg.solve(mmt, np.array([f.real, f.imag]))
            th[1:] += step
        else:
            raise NonConvergence("Newton iteration budget exhausted")
        return normalize(np.exp(1j * th))
    k = int(np.argmax(np.abs(z)))
    free = [c for c in range(5) if c != k]
    for _ in range(max_iter):
        f1, f2 = equations(ell, z)
        if max(abs(f1), abs(f2)) < tol * 1e-2:
            break
        jac = np.zeros((2, 4), dtype=complex)
        for col, c in enumerate(free):
            jac[0, col] = a[c]
            s = 0j
            for i in range(5):
                if i == c:
                    continue
                p = a[i]
                for m_ in range(5):
                    if m_ != i and m_ != c:
                        p = p * z[m_]
                s += p
            jac[1, col] = s
        jjh = jac @ jac.conj().T
        if np.linalg.cond(jjh) > 1e12:
            raise NonConvergence("singular Jacobian (near a node)")
        step = -jac.conj().T @ np.linalg.solve(jjh, np.array([f1, f2]))
        z = z.copy()
        z[free] += step
    else:
        raise NonConvergence("Newton iteration budget exhausted")
    return normalize(z)


def random_real_point(ell, rng) -> np.ndarray:
    """A point of the real locus, via a sampled closed pentagon."""
    from .pentspace import sample_pentagon, to_surface

    return to_surface(sample_pentagon(ell, rng))


def random_complex_point(ell, rng, max_tries: int = 100) -> np.ndarray:
    """A point of X over C: choose z_0, z_1, z_2 at random and solve for z_3, z_4."""
    a = as_lengths(ell).array.astype(complex)
    for _ in range(max_tries):
        z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        s1 = np.dot(a[:3], z)
        s2 = np.sum(a[:3] / z)
        # Eliminating z_4 = -(s1 + l_3 z_3) / l_4 leaves a quadratic in z_3.
        coeffs = [-s2 * a[3], a[4] ** 2 - a[3] ** 2 - s1 * s2, -a[3] * s1]
        for z3 in np.roots(coeffs):
            z4 = -(s1 + a[3] * z3) / a[4]
            pt = np.array([z[0], z[1], z[2], z3, z4])
            if np.all(np.abs(pt) > 1e-6) and on_surface(ell, pt) < 1e-9:
                return normalize(pt)
    raise NonConvergence("could not sample a complex surface point")
