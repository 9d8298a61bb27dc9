"""Plane cubics and Jonquieres involutions.

The cubic is y^2 = x^3 + u x^2 + v x + w, homogenized as
F(X, Y, Z) = Y^2 Z - X^3 - u X^2 Z - v X Z^2 - w Z^3.  For a point q of C,
sigma_q fixes C pointwise and acts on each line through q as the involution
fixing the two residual intersection points.  In homogeneous coordinates

    sigma_q(X) = F(X) Q - 1/2 (Q . grad F(X)) X,

a cubic map whose base points are q and the four tangency points.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import BaseLocus, InflexionPoint, TangentLine, ValidationError

BASE_TOL = 1e-9
TANGENT_TOL = 1e-8


def _num(x):
    if isinstance(x, str):
        return float(Fraction(x.strip()))
    return float(x)


@dataclass(frozen=True)
class CubicCurve:
    u: float
    v: float
    w: float

    def __post_init__(self):
        for name in ("u", "v", "w"):
            object.__setattr__(self, name, _num(getattr(self, name)))
        if abs(self.discriminant) < 1e-12:
            raise ValidationError("singular cubic (zero discriminant)")

    @property
    def discriminant(self) -> float:
        b, c, d = self.u, self.v, self.w
        return 18 * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * c ** 3 - 27 * d * d

    @property
    def real_roots(self) -> np.ndarray:
        r = np.roots([1.0, self.u, self.v, self.w])
        return np.sort(r[np.abs(r.imag) < 1e-9].real)

    @property
    def connected(self) -> bool:
        """C(R) has one component iff the cubic in x has one real root."""
        return self.discriminant < 0

    def g(self, x):
        return ((x + self.u) * x + self.v) * x + self.w

    def dg(self, x):
        return (3 * x + 2 * self.u) * x + self.v

    def F(self, P) -> complex:
        X, Y, Z = P
        return Y * Y * Z - X ** 3 - self.u * X * X * Z - self.v * X * Z * Z - self.w * Z ** 3

    def grad(self, P) -> np.ndarray:
        X, Y, Z = P
        u, v, w = self.u, self.v, self.w
        return np.array([
            -3 * X * X - 2 * u * X * Z - v * Z * Z,
            2 * Y * Z,
            Y * Y - u * X * X - 2 * v * X * Z - 3 * w * Z * Z,
        ])

    def hessian(self, P) -> np.ndarray:
        X, Y, Z = P
        u, v, w = self.u, self.v, self.w
        return np.array([
            [-6 * X - 2 * u * Z, 0, -2 * u * X - 2 * v * Z],
            [0, 2 * Z, 2 * Y],
            [-2 * u * X - 2 * v * Z, 2 * Y, -2 * v * X - 6 * w * Z],
        ])

    def point(self, x: float, sign: int = 1) -> np.ndarray:
        gx = self.g(x)
        if gx < 0:
            raise ValidationError(f"no real point of C above x = {x}")
        return np.array([x, sign * np.sqrt(gx)])

    def bounding_diagonal(self, pts) -> float:
        pts = np.asarray(pts, dtype=float)
        span = pts.max(axis=0) - pts.min(axis=0)
        return float(np.hypot(*span))

    def to_dict(self) -> dict:
        return {"u": self.u, "v": self.v, "w": self.w}


def homog(p) -> np.ndarray:
    p = np.asarray(p)
    if p.shape[-1] == 3:
        return p
    return np.array([p[0], p[1], 1.0], dtype=np.result_type(p, float))


def affine(P) -> np.ndarray:
    P = np.asarray(P)
    return P[:2] / P[2]


def _unit(P) -> np.ndarray:
    P = np.asarray(P)
    return P / np.sqrt(np.sum(np.abs(P) ** 2))


def proj_dist(P, Q) -> float:
    """sin of the angle between two (possibly complex) points of P^2."""
    a, b = _unit(P), _unit(Q)
    # Lagrange identity: 1 - |<a,b>|^2 = sum_{i<j} |a_i b_j - a_j b_i|^2, no cancellation
    m = np.outer(a, b)
    return float(np.sqrt(0.5 * np.sum(np.abs(m - m.T) ** 2)))


# ------------------------------------------------------------ tangencies


def tangency_slopes(C: CubicCurve, q) -> np.ndarray:
    """Slopes m of the four lines through q tangent to C elsewhere."""
    x0, y0 = q
    a = 3 * x0 + C.u
    dg = C.dg(x0)
    return np.roots([1.0, 0.0, -2 * a, 8 * y0, a * a - 4 * dg])


def tangency_points(C: CubicCurve, q, tol: float = 1e-9) -> np.ndarray:
    """The four points p with line (q p) tangent to C at p; shape (4, 2), complex."""
    x0, y0 = q
    a = 3 * x0 + C.u
    out = []
    for m in tangency_slopes(C, q):
        s = (m * m - a) / 2.0
        if abs(s) < tol * (1 + abs(x0) + abs(y0)):
            raise InflexionPoint(f"q = {tuple(q)} is an inflexion point")
        out.append((x0 + s, y0 + m * s))
    pts = np.array(out, dtype=complex)
    order = np.lexsort((pts[:, 0].imag, np.round(pts[:, 0].real, 9)))
    return pts[order]


def tangency_residual(C: CubicCurve, q, p) -> float:
    """max(|h(s)|, |h'(s)|) for the cubic restricted to line (q, p) at p."""
    q = np.asarray(q, dtype=complex)
    p = np.asarray(p, dtype=complex)
    d = p - q
    val = (p[1]) ** 2 - C.g(p[0])
    der = 2 * p[1] * d[1] - C.dg(p[0]) * d[0]
    return float(max(abs(val), abs(der)))


def tangency_points_polar(C: CubicCurve, q) -> np.ndarray:
    """Independent computation: intersect C with the polar conic of q.

    The polar conic meets C at q (twice) and at the four tangency points; y is
    eliminated linearly, leaving a sextic in x with x_0 as a double root.
    """
    x0, y0 = q
    u, v, w = C.u, C.v, C.w
    if abs(y0) < 1e-12:
        raise ValidationError("polar oracle needs y_0 != 0")
    P = np.polynomial.polynomial
    g = np.array([w, v, u, 1.0])
    # polar: x0 F_X + y0 F_Y + F_Z = 0 with y^2 replaced by g(x):
    # 2 y0 y = -(g(x) + x0(-3x^2 - 2u x - v) - u x^2 - 2 v x - 3 w)
    rhs = P.polyadd(g, P.polyadd(x0 * np.array([-v, -2 * u, -3.0]), np.array([-3 * w, -2 * v, -u])))
    # y = -rhs / (2 y0); y^2 = g  ->  rhs^2 - 4 y0^2 g = 0
    sextic = P.polysub(P.polymul(rhs, rhs), 4 * y0 * y0 * g)
    roots = P.polyroots(sextic)
    idx = np.argsort(np.abs(roots - x0))[2:]
    xs = roots[idx]
    ys = -P.polyval(xs, rhs) / (2 * y0)
    pts = np.column_stack([xs, ys]).astype(complex)
    order = np.lexsort((pts[:, 0].imag, np.round(pts[:, 0].real, 9)))
    return pts[order]


@dataclass
class JonquieresMap:
    curve: CubicCurve
    q: np.ndarray
    base_points: np.ndarray = field(default=None)

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if abs(self.q[1] ** 2 - self.curve.g(self.q[0])) > 1e-9 * (1 + abs(self.q[1]) ** 2):
            raise ValidationError(f"q = {tuple(self.q)} is not on the curve")
        if self.base_points is None:
            self.base_points = tangency_points(self.curve, self.q)

    @property
    def Q(self) -> np.ndarray:
        return homog(self.q)

    def real_base_points(self, tol: float = 1e-9) -> np.ndarray:
        bp = self.base_points
        keep = np.all(np.abs(bp.imag) < tol, axis=1)
        return bp[keep].real

    def all_base_points(self) -> List[np.ndarray]:
        return [homog(self.q).astype(complex)] + [homog(p) for p in self.base_points]


def jonquieres_apply(
    sigma: JonquieresMap,
    P,
    base_tol: float = BASE_TOL,
    tangent_tol: float = TANGENT_TOL,
    check: bool = True,
) -> np.ndarray:
    """Image of a homogeneous (or affine) point; returns a unit homogeneous vector."""
    P = homog(np.asarray(P, dtype=float))
    C = sigma.curve
    Q = sigma.Q
    Pu = _unit(P)
    if check:
        for B in sigma.all_base_points():
            if proj_dist(Pu, B) < base_tol:
                raise BaseLocus("point is a base point of the involution")
    f = C.F(Pu)
    dq = float(np.dot(Q, C.grad(Pu)))
    if check:
        # Residual points on the line X + t Q solve c t^2 + dq t + f = 0.
        c = 0.5 * float(Q @ C.hessian(Pu) @ Q)
        disc = dq * dq - 4 * c * f
        if c != 0:
            sep = np.sqrt(abs(disc)) / abs(c)
            cross = np.linalg.norm(np.cross(Pu, _unit(Q)))
            t = np.roots([c, dq, f])
            norms = [np.sqrt(np.sum(np.abs(Pu + ti * _unit(Q)) ** 2)) for ti in t]
            if sep * cross / (norms[0] * norms[1]) < tangent_tol:
                raise TangentLine("line (q, x) is tangent to C")
    out = f * Q - 0.5 * dq * Pu
    n = np.linalg.norm(out)
    if n == 0:
        raise BaseLocus("image vanishes")
    return out / n


def jonquieres_apply_affine(sigma: JonquieresMap, x) -> np.ndarray:
    """Same involution computed on the line q + s (x - q), with x at s = 1.

    F restricted to the line is s (c2 s^2 + c1 s + c0); the involution fixing
    the two roots sends s to -(c1 s / 2 + c0) / (c2 s + c1 / 2).
    """
    C = sigma.curve
    x0, y0 = sigma.q
    d = np.asarray(x, dtype=float) - sigma.q
    dx, dy = d
    c2 = -dx ** 3
    c1 = dy * dy - (3 * x0 + C.u) * dx * dx
    c0 = 2 * y0 * dy - C.dg(x0) * dx
    den = c2 + c1 / 2
    if den == 0:
        raise BaseLocus("image at infinity in this chart")
    s1 = -(c1 / 2 + c0) / den
    return sigma.q + s1 * d


# --------------------------------------------------------------- hypotheses


def is_inflexion(C: CubicCurve, q, tol: float = 1e-9) -> bool:
    P = _unit(homog(np.asarray(q, dtype=float)))
    h = np.linalg.det(C.hessian(P))
    scale = max(1.0, abs(C.u), abs(C.v), abs(C.w)) ** 3
    return abs(h) < tol * scale


def _direction_coordinate(C: CubicCurve, ql, target) -> complex:
    """Coordinate on directions at q_l with the tangent direction T_{q_l}C at infinity.

    A direction (dx, dy) gets z = dx / (dy - m_T dx) where m_T is the tangent
    slope; this is a Mobius coordinate on P^1 sending T_{q_l}C to infinity.
    """
    x0, y0 = ql
    d = np.asarray(target, dtype=complex) - np.asarray(ql, dtype=complex)
    # tangent direction (2 y0, g'(x0)); use the cross product to avoid slopes.
    tx, ty = 2 * y0, C.dg(x0)
    den = d[1] * tx - d[0] * ty
    num = d[0] * tx + d[1] * ty
    if den == 0:
        return complex(np.inf)
    return num / den


def hypothesis_check(C: CubicCurve, qs: Sequence, tol: float = 1e-7) -> dict:
    qs = [np.asarray(q, dtype=float) for q in qs]
    k = len(qs)
    report = {"hyp1": True, "hyp2": True, "hyp3": True, "hyp4": True, "witnesses": {}}
    w = report["witnesses"]
    bad1 = [i + 1 for i, q in enumerate(qs) if is_inflexion(C, q)]
    maps = []
    for i, q in enumerate(qs):
        try:
            maps.append(JonquieresMap(C, q))
        except InflexionPoint:
            bad1.append(i + 1)
            maps.append(None)
    if bad1:
        report["hyp1"] = False
        w["hyp1"] = sorted(set(bad1))
        report["hyp2"] = report["hyp3"] = report["hyp4"] = False
        return report
    labels, pts = [], []
    for i, s in enumerate(maps):
        labels.append(f"q{i + 1}")
        pts.append(homog(np.asarray(s.q, dtype=complex)))
        for j, p in enumerate(s.base_points):
            labels.append(f"p{i + 1}{j + 1}")
            pts.append(homog(p))
    dup = []
    for a in range(len(pts)):
        for b in range(a + 1, len(pts)):
            if proj_dist(pts[a], pts[b]) < tol:
                dup.append((labels[a], labels[b]))
    if dup:
        report["hyp2"] = False
        w["hyp2"] = dup
    col = []
    for i in range(k):
        for j in range(i + 1, k):
            A, B = _unit(pts[labels.index(f"q{i + 1}")]), _unit(pts[labels.index(f"q{j + 1}")])
            for lab, R in zip(labels, pts):
                if lab in (f"q{i + 1}", f"q{j + 1}"):
                    continue
                det = np.linalg.det(np.array([A, B, _unit(R)]))
                if abs(det) < tol:
                    col.append((f"q{i + 1}", f"q{j + 1}", lab))
    if col:
        report["hyp3"] = False
        w["hyp3"] = col
    rel = []
    for l in range(k):
        coords = [_direction_coordinate(C, qs[l], p) for p in maps[l].base_points]
        for i in range(k):
            if i == l:
                continue
            c = _direction_coordinate(C, qs[l], qs[i])
            for ja, a in enumerate(coords):
                for jb, b in enumerate(coords):
                    if jb < ja:
                        continue
                    if abs(a + b - 2 * c) < tol * (1 + abs(c)):
                        rel.append((i + 1, l + 1, ja + 1, jb + 1))
    if rel:
        report["hyp4"] = False
        w["hyp4"] = rel
    return report


# ------------------------------------------------------------------ distance


class CurveParam:
    """Smooth parametrizations of the components of C(R)."""

    def __init__(self, C: CubicCurve):
        self.C = C
        r = C.real_roots
        self.roots = r
        self.xr = float(r[-1])
        # g(x) = (x - xr) q(x), q monic quadratic
        b1 = C.u + self.xr
        b0 = C.v + self.xr * b1
        self.qc = (b0, b1)
        self.has_oval = len(r) == 3

    def branch(self, tau):
        """Unbounded branch: x = xr + tau^2, y = tau sqrt(q(x)); returns x, y, x', y', x'', y''."""
        b0, b1 = self.qc
        x = self.xr + tau * tau
        q = x * x + b1 * x + b0
        s = np.sqrt(np.maximum(q, 0.0))
        dq = 2 * x + b1
        ds = dq / (2 * s)
        dds = (2 * q * 2 - dq * dq) / (4 * q * s)
        x1 = 2 * tau
        y = tau * s
        y1 = s + tau * ds * x1
        y2 = 2 * ds * x1 + tau * (dds * x1 * x1 + ds * 2)
        return x, y, x1, y1, 2.0 + 0 * tau, y2

    def oval(self, phi):
        r1, r2, r3 = self.roots
        c, R = (r1 + r2) / 2, (r2 - r1) / 2
        x = c + R * np.cos(phi)
        e = np.sqrt(r3 - x)
        x1 = -R * np.sin(phi)
        x2 = -R * np.cos(phi)
        y = R * np.sin(phi) * e
        de = -1.0 / (2 * e)
        dde = -1.0 / (4 * e ** 3)
        y1 = R * np.cos(phi) * e + R * np.sin(phi) * de * x1
        y2 = (-R * np.sin(phi) * e + 2 * R * np.cos(phi) * de * x1
              + R * np.sin(phi) * (dde * x1 * x1 + de * x2))
        return x, y, x1, y1, x2, y2


def _refine(fn, t, px, py, iters: int = 30):
    for _ in range(iters):
        x, y, x1, y1, x2, y2 = fn(t)
        dx, dy = x - px, y - py
        g1 = dx * x1 + dy * y1
        g2 = x1 * x1 + y1 * y1 + dx * x2 + dy * y2
        step = np.where(g2 > 0, -g1 / np.where(g2 > 0, g2, 1.0), -0.1 * np.sign(g1))
        tn = t + step
        x_n, y_n = fn(tn)[:2]
        worse = (x_n - px) ** 2 + (y_n - py) ** 2 > dx * dx + dy * dy
        tn = np.where(worse, t + 0.5 * step, tn)
        if np.all(np.abs(tn - t) < 1e-14 * (1 + np.abs(t))):
            t = tn
            break
        t = tn
    x, y = fn(t)[:2]
    return np.hypot(x - px, y - py)


def distance_to_curve(C: CubicCurve, pts, mesh: int = 256) -> np.ndarray:
    """Euclidean distance from points of R^2 to C(R) (vectorized)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    scalar = pts.shape[0] == 1 and np.ndim(pts) == 2
    px, py = pts[:, 0], pts[:, 1]
    cp = CurveParam(C)
    # any curve point bounds the distance; (xr, 0) is always on C
    d0 = np.hypot(px - cp.xr, py)
    tmax = np.sqrt(np.maximum(px + d0 - cp.xr, 0.0)) + 1e-9
    grid = np.linspace(-1.0, 1.0, mesh)
    taus = tmax[:, None] * grid[None, :]
    x, y = cp.branch(taus)[:2]
    dist2 = (x - px[:, None]) ** 2 + (y - py[:, None]) ** 2
    best = np.full(len(px), np.inf)
    # refine the two best local candidates
    order = np.argsort(dist2, axis=1)[:, :3]
    for c in range(order.shape[1]):
        t0 = taus[np.arange(len(px)), order[:, c]]
        best = np.minimum(best, _refine(cp.branch, t0, px, py))
    best = np.minimum(best, np.sqrt(dist2.min(axis=1)))
    if cp.has_oval:
        phis = np.linspace(-np.pi, np.pi, mesh, endpoint=False)
        x, y = cp.oval(phis[None, :] + 0 * px[:, None])[:2]
        d2 = (x - px[:, None]) ** 2 + (y - py[:, None]) ** 2
        order = np.argsort(d2, axis=1)[:, :3]
        for c in range(order.shape[1]):
            best = np.minimum(best, _refine(cp.oval, phis[order[:, c]], px, py))
        best = np.minimum(best, np.sqrt(d2.min(axis=1)))
    return best[0] if scalar and len(best) == 1 else best


def distance_mesh_oracle(C: CubicCurve, pts, n: int = 400001, xmax: Optional[float] = None) -> np.ndarray:
    """Brute-force distance against a dense sampling in x of both y-branches."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    r = C.real_roots
    lo = r[0]
    hi = xmax if xmax is not None else max(np.abs(pts).max() * 2 + 2, r[-1] + 2)
    # refine near the roots, where the curve is vertical
    xs = np.linspace(lo, hi, n)
    extra = (r[:, None] + np.geomspace(1e-14, 1e-1, 4000)[None, :]).ravel()
    extra2 = (r[:, None] - np.geomspace(1e-14, 1e-1, 4000)[None, :]).ravel()
    xs = np.concatenate([xs, extra, extra2, r])
    gx = C.g(xs)
    xs = xs[gx >= 0]
    ys = np.sqrt(np.maximum(C.g(xs), 0))
    cx = np.concatenate([xs, xs])
    cy = np.concatenate([ys, -ys])
    out = []
    for px, py in pts:
        out.append(np.sqrt(np.min((cx - px) ** 2 + (cy - py) ** 2)))
    return np.array(out)


def choose_points_on_curve(C: CubicCurve, xs: Sequence[float], signs: Sequence[int]) -> List[np.ndarray]:
    return [C.point(x, s) for x, s in zip(xs, signs)]
