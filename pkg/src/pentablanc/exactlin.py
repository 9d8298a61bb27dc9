"""Exact integer matrix algebra and polynomial analysis.

Matrices follow the columns-are-images convention: column ``j`` holds the
coordinates of the image of the ``j``-th basis vector.  All arithmetic is done
with Python integers (or :class:`fractions.Fraction` where division is
unavoidable), so nothing overflows.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import NonConvergence, NotIsometry, OrderBoundExceeded

CONVENTION = "columns-are-images"

# int64 products are exact while n * max|a| * max|b| stays below this
_I64_SAFE = 2 ** 62


def _matmul_rows(a: tuple, b: tuple) -> tuple:
    ma = max(abs(x) for r in a for x in r)
    mb = max(abs(x) for r in b for x in r)
    if len(b) * ma * mb < _I64_SAFE:
        out = np.array(a, dtype=np.int64) @ np.array(b, dtype=np.int64)
        return tuple(map(tuple, out.tolist()))
    cols = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(r, c)) for c in cols) for r in a)


@dataclass(frozen=True)
class LatticeMatrix:
    """Square integer matrix stored as a tuple of rows."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in r) for r in self.rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("LatticeMatrix must be square with dim >= 1")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def identity(cls, n: int) -> "LatticeMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence[int]]) -> "LatticeMatrix":
        n = len(cols)
        return cls(tuple(tuple(cols[j][i] for j in range(n)) for i in range(n)))

    @property
    def dim(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def column(self, j: int) -> tuple:
        return tuple(r[j] for r in self.rows)

    @property
    def T(self) -> "LatticeMatrix":
        return LatticeMatrix(tuple(zip(*self.rows)))

    def __matmul__(self, other):
        if isinstance(other, LatticeMatrix):
            return LatticeMatrix(_matmul_rows(self.rows, other.rows))
        return tuple(sum(a * b for a, b in zip(r, other)) for r in self.rows)

    def __sub__(self, other: "LatticeMatrix") -> "LatticeMatrix":
        return LatticeMatrix(
            tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows))
        )

    def __pow__(self, k: int) -> "LatticeMatrix":
        if k < 0:
            return inverse(self) ** (-k)
        out = LatticeMatrix.identity(self.dim)
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def is_identity(self) -> bool:
        return all(self.rows[i][j] == (i == j) for i in range(self.dim) for j in range(self.dim))

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.rows for x in r)

    def max_row_sum(self) -> int:
        return max(sum(abs(x) for x in r) for r in self.rows)

    def to_numpy(self, dtype=np.float64) -> np.ndarray:
        return np.array(self.rows, dtype=dtype)

    def is_isometry(self, gram: "LatticeMatrix") -> bool:
        return self.T @ gram @ self == gram


def diagonal_form(signs: Iterable[int]) -> LatticeMatrix:
    s = list(signs)
    n = len(s)
    return LatticeMatrix(tuple(tuple(s[i] if i == j else 0 for j in range(n)) for i in range(n)))


def minkowski_form(n: int) -> LatticeMatrix:
    """diag(1, -1, ..., -1) of size ``n``."""
    return diagonal_form([1] + [-1] * (n - 1))


def product(mats: Sequence[LatticeMatrix]) -> LatticeMatrix:
    out = LatticeMatrix.identity(mats[0].dim)
    for m in mats:
        out = out @ m
    return out


# ----------------------------------------------------------------- polynomials


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients in ascending degree."""

    coeffs: tuple = field(default=(0,))

    def __post_init__(self):
        c = [int(x) for x in self.coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [0]
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_descending(cls, coeffs: Sequence[int]) -> "IntPolynomial":
        return cls(tuple(reversed(list(coeffs))))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs != (0,) else -1

    @property
    def monic(self) -> bool:
        return self.coeffs[-1] == 1

    def descending(self) -> list:
        return list(reversed(self.coeffs))

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __mul__(self, other: "IntPolynomial") -> "IntPolynomial":
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return IntPolynomial(tuple(out))

    def divmod_monic(self, d: "IntPolynomial"):
        """Exact division by a monic polynomial ``d``."""
        if not d.monic:
            raise ValueError("divisor must be monic")
        r = list(self.coeffs)
        dd = d.degree
        if self.degree < dd:
            return IntPolynomial((0,)), self
        q = [0] * (self.degree - dd + 1)
        for k in range(self.degree - dd, -1, -1):
            c = r[k + dd]
            q[k] = c
            if c:
                for i, b in enumerate(d.coeffs):
                    r[k + i] -= c * b
        return IntPolynomial(tuple(q)), IntPolynomial(tuple(r[:dd]) if dd > 0 else (0,))

    def derivative(self) -> "IntPolynomial":
        if self.degree <= 0:
            return IntPolynomial((0,))
        return IntPolynomial(tuple(i * c for i, c in enumerate(self.coeffs) if i > 0))

    def roots(self) -> np.ndarray:
        if self.degree <= 0:
            return np.zeros(0, dtype=complex)
        return np.roots(np.array(self.descending(), dtype=float))

    def __str__(self) -> str:
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            a = abs(c)
            mon = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
            body = (str(a) if (a != 1 or k == 0) else "") + mon
            terms.append((sign, body))
        if not terms:
            return "0"
        s = ("-" if terms[0][0] == "-" else "") + terms[0][1]
        for sign, body in terms[1:]:
            s += f" {sign} {body}"
        return s


def char_poly(m: LatticeMatrix) -> IntPolynomial:
    """det(tI - m) by Faddeev-LeVerrier in exact integers."""
    n = m.dim
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    ident = LatticeMatrix.identity(n)
    mk = LatticeMatrix(tuple((0,) * n for _ in range(n)))
    c = 1
    for k in range(1, n + 1):
        # M_k = M M_{k-1} + c_{n-k+1} I
        mk = m @ mk
        mk = LatticeMatrix(
            tuple(tuple(mk.rows[i][j] + (c if i == j else 0) for j in range(n)) for i in range(n))
        )
        am = m @ mk
        tr = sum(am.rows[i][i] for i in range(n))
        q, r = divmod(-tr, k)
        if r:
            raise ArithmeticError("non-integral Faddeev-LeVerrier step")
        c = q
        coeffs[n - k] = c
    return IntPolynomial(tuple(coeffs))


def det_bareiss(rows: Sequence[Sequence[int]]) -> int:
    """Fraction-free Gaussian elimination determinant."""
    a = [list(map(int, r)) for r in rows]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def inverse(m: LatticeMatrix) -> LatticeMatrix:
    """Exact inverse of a unimodular matrix (Gauss-Jordan over Fractions)."""
    n = m.dim
    a = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(m.rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    out = [r[n:] for r in a]
    if any(x.denominator != 1 for r in out for x in r):
        raise ValueError("matrix is not unimodular")
    return LatticeMatrix(tuple(tuple(int(x) for x in r) for r in out))


# ---------------------------------------------------------------- cyclotomics


def euler_phi(n: int) -> int:
    out, k, p = n, n, 2
    while p * p <= k:
        if k % p == 0:
            while k % p == 0:
                k //= p
            out -= out // p
        p += 1
    if k > 1:
        out -= out // k
    return out


@lru_cache(maxsize=None)
def cyclotomic(n: int) -> IntPolynomial:
    """Phi_n built from t^n - 1 by dividing out Phi_d for proper divisors d."""
    p = IntPolynomial((-1,) + (0,) * (n - 1) + (1,))
    for d in range(1, n):
        if n % d == 0:
            q, r = p.divmod_monic(cyclotomic(d))
            assert r.degree < 0
            p = q
    return p


@lru_cache(maxsize=None)
def orders_with_phi_at_most(deg: int) -> tuple:
    # phi(n) >= sqrt(n/2), so n <= 2 deg^2 bounds the search.
    bound = max(2, 2 * deg * deg + 2)
    return tuple(n for n in range(1, bound + 1) if euler_phi(n) <= deg)


_ = orders_with_phi_at_most(32)


def strip_cyclotomic(p: IntPolynomial):
    """Divide out every cyclotomic factor; return (remainder, [(n, mult)])."""
    if not p.monic:
        raise ValueError("polynomial must be monic")
    rem = p
    factors = []
    for n in orders_with_phi_at_most(max(p.degree, 1)):
        phi = cyclotomic(n)
        mult = 0
        while rem.degree >= phi.degree:
            q, r = rem.divmod_monic(phi)
            if r.degree >= 0:
                break
            rem = q
            mult += 1
        if mult:
            factors.append((n, mult))
    return rem, factors


def _strip_t(p: IntPolynomial):
    c = list(p.coeffs)
    k = 0
    while len(c) > 1 and c[0] == 0:
        c.pop(0)
        k += 1
    return IntPolynomial(tuple(c)), k


# ------------------------------------------------------------ root isolation


def _poly_frac_divmod(a: list, b: list):
    """Division of Fraction polynomials (ascending coefficients)."""
    a = list(a)
    db = len(b) - 1
    if len(a) - 1 < db:
        return [Fraction(0)], a
    q = [Fraction(0)] * (len(a) - db)
    for k in range(len(a) - 1 - db, -1, -1):
        c = a[k + db] / b[db]
        q[k] = c
        for i, bc in enumerate(b):
            a[k + i] -= c * bc
    r = a[:db] or [Fraction(0)]
    while len(r) > 1 and r[-1] == 0:
        r.pop()
    return q, r


def _squarefree(p: IntPolynomial) -> list:
    a = [Fraction(c) for c in p.coeffs]
    b = [Fraction(c) for c in p.derivative().coeffs]
    x, y = a, b
    while not (len(y) == 1 and y[0] == 0):
        _, r = _poly_frac_divmod(x, y)
        x, y = y, r
    if len(x) == 1:
        return a
    q, _ = _poly_frac_divmod(a, x)
    return q


def _sturm_chain(p: list) -> list:
    chain = [p, [i * c for i, c in enumerate(p)][1:] or [Fraction(0)]]
    while not (len(chain[-1]) == 1 and chain[-1][0] == 0) and len(chain[-1]) > 1:
        _, r = _poly_frac_divmod(chain[-2], chain[-1])
        chain.append([-c for c in r])
    if len(chain[-1]) == 1 and chain[-1][0] == 0:
        chain.pop()
    return chain


def _eval(p: list, x):
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _variations(chain: list, x) -> int:
    signs = [s for s in (_eval(q, x) for q in chain) if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def _extreme_real_root(chain: list, lo: Fraction, hi: Fraction, tol: float, largest: bool):
    """Bisection on Sturm counts for the largest (or smallest) root in (lo, hi]."""
    total = _variations(chain, lo) - _variations(chain, hi)
    if total == 0:
        return None
    tol = Fraction(tol)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        upper = _variations(chain, mid) - _variations(chain, hi)
        if largest:
            if upper >= 1:
                lo = mid
            else:
                hi = mid
        else:
            lower = _variations(chain, lo) - _variations(chain, mid)
            if lower >= 1:
                hi = mid
            else:
                lo = mid
    return float((lo + hi) / 2)


def _power_iteration(m: LatticeMatrix, tol: float, budget: int = 20000) -> float:
    """Dominant modulus from a two-term recurrence fit (handles complex pairs)."""
    a = m.to_numpy()
    rng = np.random.default_rng(12345)
    x0 = rng.standard_normal(m.dim)
    x0 /= np.linalg.norm(x0)
    x1 = a @ x0
    prev = None
    for _ in range(budget):
        w = a @ x1
        nrm = np.linalg.norm(w)
        if nrm == 0:
            return 0.0
        coef, *_ = np.linalg.lstsq(np.column_stack([x1, x0]), w, rcond=None)
        est = float(np.max(np.abs(np.roots([1.0, -coef[0], -coef[1]]))))
        if prev is not None and abs(est - prev) < tol:
            return est
        prev = est
        x0, x1 = x1 / nrm, w / nrm
    raise NonConvergence("power iteration did not converge")


def spectral_radius(m: LatticeMatrix, tol: float = 1e-12) -> float:
    """Largest eigenvalue modulus, to absolute accuracy ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = char_poly(m)
    p0, zero_mult = _strip_t(p)
    rem, factors = strip_cyclotomic(p0)
    if rem.degree <= 0:
        return 1.0 if factors else 0.0
    sq = _squarefree(rem)
    chain = _sturm_chain(sq)
    bound = Fraction(1 + m.max_row_sum())
    hi_root = _extreme_real_root(chain, -bound, bound, tol, largest=True)
    lo_root = _extreme_real_root(chain, -bound, bound, tol, largest=False)
    cands = [abs(r) for r in (hi_root, lo_root) if r is not None]
    approx = float(np.max(np.abs(rem.roots())))
    base = 1.0 if factors else 0.0
    if cands:
        r = max(cands)
        if abs(r - approx) <= 1e-6 * max(1.0, approx):
            return max(r, base)
    # Dominant root is not real: fall back to iteration on the matrix.
    est = _power_iteration(m, tol=max(tol, 1e-13))
    if abs(est - approx) > 1e-6 * max(1.0, approx):
        raise NonConvergence("power iteration disagrees with polynomial roots")
    return max(est, base)


# --------------------------------------------------------------- classifier


@dataclass(frozen=True)
class Classification:
    kind: str
    lam: float
    order: Optional[int] = None
    salem_factor: Optional[IntPolynomial] = None

    @property
    def entropy(self) -> float:
        return math.log(self.lam) if self.lam > 0 else float("-inf")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambda": self.lam,
            "entropy": self.entropy,
            "order": self.order,
            "salem_factor": None if self.salem_factor is None else self.salem_factor.descending(),
        }


ELLIPTIC = "Elliptic"
PARABOLIC = "Parabolic"
LOXODROMIC = "Loxodromic"


def classify_isometry(
    m: LatticeMatrix,
    order_bound: int = 66,
    gram: Optional[LatticeMatrix] = None,
    tol: float = 1e-12,
) -> Classification:
    if gram is not None and not m.is_isometry(gram):
        raise NotIsometry("matrix does not preserve the given form")
    p = char_poly(m)
    p0, _ = _strip_t(p)
    rem, factors = strip_cyclotomic(p0)
    if rem.degree > 0:
        return Classification(LOXODROMIC, spectral_radius(m, tol), None, rem)
    k = 1
    for n, _mult in factors:
        k = k * n // math.gcd(k, n)
    if k > order_bound:
        raise OrderBoundExceeded(f"cyclotomic orders need k={k} > {order_bound}")
    mk = m ** k
    if mk.is_identity():
        order = min(d for d in range(1, k + 1) if k % d == 0 and (m ** d).is_identity())
        return Classification(ELLIPTIC, 1.0, order, None)
    nil = mk - LatticeMatrix.identity(m.dim)
    if (nil ** m.dim).is_zero():
        return Classification(PARABOLIC, 1.0, None, None)
    raise OrderBoundExceeded("no certificate found within the order bound")


# ------------------------------------------------------------------- JSON I/O


def matrix_to_json(m: LatticeMatrix) -> str:
    return json.dumps(
        {"convention": CONVENTION, "rows": [[str(x) for x in r] for r in m.rows]}
    )


def matrix_from_json(text) -> LatticeMatrix:
    obj = json.loads(text) if isinstance(text, str) else text
    if isinstance(obj, dict):
        conv = obj.get("convention", CONVENTION)
        if conv != CONVENTION:
            raise ValueError(f"unsupported convention {conv!r}")
        rows = obj["rows"]
    else:
        rows = obj
    return LatticeMatrix(tuple(tuple(int(x) for x in r) for r in rows))
