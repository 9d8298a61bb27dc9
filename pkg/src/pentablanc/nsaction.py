"""Exact cohomology actions of Jonquieres involutions on Blanc surfaces.

Two lattices are handled:

* the Neron-Severi lattice of the blow-up of P^2 at the 5k base points, with
  basis (e0, e_q1..e_qk, e_p11..e_pk4) and form diag(1, -1, ..., -1);
* H^1 of the real locus, one class per blown-up real point, built from the
  vertical order of those points along C(R).

All matrices use the columns-are-images convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import Budget, InconsistentConfig, IntertwiningFailure
from .exactlin import (
    Classification,
    LatticeMatrix,
    classify_isometry,
    minkowski_form,
    product,
)

# Action on (e0, e_q, e_p1, e_p2, e_p3, e_p4); column 2 is the conic class.
NS_BLOCK = (
    (3, 2, 1, 1, 1, 1),
    (-2, -1, -1, -1, -1, -1),
    (-1, -1, -1, 0, 0, 0),
    (-1, -1, 0, -1, 0, 0),
    (-1, -1, 0, 0, -1, 0),
    (-1, -1, 0, 0, 0, -1),
)


# ------------------------------------------------------------------ NS(X)


def ns_dim(k: int) -> int:
    return 1 + 5 * k


def q_index(k: int, i: int) -> int:
    return i


def p_index(k: int, i: int, j: int) -> int:
    return 1 + k + 4 * (i - 1) + (j - 1)


def ns_gram(k: int) -> LatticeMatrix:
    return minkowski_form(ns_dim(k))


def blanc_ns_matrix(k: int, i: int) -> LatticeMatrix:
    if not 1 <= i <= k:
        raise ValueError(f"involution index {i} out of range 1..{k}")
    n = ns_dim(k)
    m = [[int(r == c) for c in range(n)] for r in range(n)]
    slots = [0, q_index(k, i)] + [p_index(k, i, j) for j in range(1, 5)]
    for a, ra in enumerate(slots):
        for b, cb in enumerate(slots):
            m[ra][cb] = NS_BLOCK[a][b]
    return LatticeMatrix(tuple(map(tuple, m)))


def blanc_ns_generators(k: int) -> List[LatticeMatrix]:
    return [blanc_ns_matrix(k, i) for i in range(1, k + 1)]


def gram_eval(k: int, u: Sequence[int], v: Optional[Sequence[int]] = None) -> int:
    v = u if v is None else v
    return u[0] * v[0] - sum(a * b for a, b in zip(u[1:], v[1:]))


def sigma_sum(k: int, i: int) -> List[int]:
    """Sum of the four tangency classes e_{p_i1} + ... + e_{p_i4}."""
    v = [0] * ns_dim(k)
    for j in range(1, 5):
        v[p_index(k, i, j)] = 1
    return v


def fixed_family_class(k: int, i: int, d: int, m: int) -> List[int]:
    """d e0 - (d - 2m) e_{q_i} - m Sigma_i, fixed by the i-th involution."""
    v = [0] * ns_dim(k)
    v[0] = d
    v[q_index(k, i)] = -(d - 2 * m)
    for j in range(1, 5):
        v[p_index(k, i, j)] = -m
    return v


def isotropic_class(k: int, i: int, j: int) -> List[int]:
    """4e0 - 2e_{q_i} - 2e_{q_j} - Sigma_i - Sigma_j."""
    v = [0] * ns_dim(k)
    v[0] = 4
    for a in (i, j):
        v[q_index(k, a)] = -2
        for b in range(1, 5):
            v[p_index(k, a, b)] = -1
    return v


def curve_class(k: int) -> List[int]:
    """Class of the strict transform of the cubic: 3e0 minus every exceptional class."""
    return [3] + [-1] * (5 * k)


def fixed_class_check(k: int, i: int, v: Sequence[int]) -> bool:
    m = blanc_ns_matrix(k, i)
    return tuple(m @ list(v)) == tuple(v)


# ------------------------------------------------------------ H^1(X(R))


def h1_labels(k: int) -> List[str]:
    out = []
    for i in range(1, k + 1):
        out += [f"q{i}", f"p{i}1", f"p{i}2"]
    return out


@dataclass
class ConfigDescriptor:
    """Vertical order (bottom to top) of the 3k real blown-up points along C(R).

    ``overrides`` may pin, for involution ``i``, the sets ``above1``,
    ``below1`` (relative to line (q_i p_i1)), ``above2``, ``below2`` (line
    (q_i p_i2)) and ``inside`` (points enclosed by the conic D_i).  Anything
    not overridden is derived from the order.
    """

    k: int
    order: Tuple[str, ...]
    overrides: Dict[int, Dict[str, Tuple[str, ...]]] = field(default_factory=dict)
    experimental: bool = False

    def __post_init__(self):
        self.order = tuple(self.order)
        labels = set(h1_labels(self.k))
        if len(self.order) != 3 * self.k or set(self.order) != labels:
            raise InconsistentConfig(
                f"order must list each of {sorted(labels)} exactly once"
            )
        pos = self.position
        for i in range(1, self.k + 1):
            if not pos[f"p{i}1"] > pos[f"q{i}"] > pos[f"p{i}2"]:
                raise InconsistentConfig(
                    f"p{i}1 must lie above q{i} and p{i}2 below it"
                )

    @property
    def position(self) -> Dict[str, int]:
        return {lab: n for n, lab in enumerate(self.order)}

    def relations(self, i: int) -> Dict[str, Tuple[str, ...]]:
        pos = self.position
        qi, p1, p2 = f"q{i}", f"p{i}1", f"p{i}2"
        hq = pos[qi]
        above = [r for r in self.order if pos[r] > hq]
        below = [r for r in self.order if pos[r] < hq]
        inside = []
        for j in range(1, self.k + 1):
            if j == i:
                continue
            inside.append(f"q{j}")
            inside.append(f"p{j}1" if pos[f"q{j}"] > hq else f"p{j}2")
        rel = {
            "above1": tuple(r for r in above if r != p1),
            "below1": tuple(below),
            "above2": tuple(above),
            "below2": tuple(r for r in below if r != p2),
            "inside": tuple(sorted(inside, key=pos.get)),
        }
        rel.update({key: tuple(val) for key, val in self.overrides.get(i, {}).items()})
        return rel

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "order": list(self.order),
            "overrides": {str(i): {a: list(b) for a, b in d.items()} for i, d in self.overrides.items()},
            "experimental": self.experimental,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConfigDescriptor":
        ov = {int(i): {a: tuple(b) for a, b in v.items()} for i, v in d.get("overrides", {}).items()}
        return cls(int(d["k"]), tuple(d["order"]), ov, bool(d.get("experimental", False)))


DEFAULT_ORDER_K3 = ("p12", "p22", "p32", "q3", "q2", "q1", "p11", "p21", "p31")
# q4 placed between q1 and q3; not certified against real geometry.
DEFAULT_ORDER_K4 = ("p12", "p22", "p42", "p32", "q3", "q4", "q2", "q1", "p11", "p21", "p41", "p31")


def default_config(k: int = 3) -> ConfigDescriptor:
    if k == 3:
        return ConfigDescriptor(3, DEFAULT_ORDER_K3)
    if k == 4:
        return ConfigDescriptor(4, DEFAULT_ORDER_K4, experimental=True)
    raise ValueError("default configurations exist for k = 3 and k = 4 only")


def h1_matrix_from_configuration(cfg: ConfigDescriptor, i: int) -> LatticeMatrix:
    k = cfg.k
    if not 1 <= i <= k:
        raise ValueError(f"involution index {i} out of range 1..{k}")
    labels = h1_labels(k)
    idx = {lab: n for n, lab in enumerate(labels)}
    rel = cfg.relations(i)
    for key in ("above1", "below1", "above2", "below2", "inside"):
        if key not in rel:
            raise InconsistentConfig(f"missing relation {key} for involution {i}")
    n = len(labels)
    cols = [[0] * n for _ in range(n)]
    qi, p1, p2 = f"q{i}", f"p{i}1", f"p{i}2"
    for lab in labels:
        col = cols[idx[lab]]
        if lab == p1:
            for r in rel["above1"]:
                col[idx[r]] += 1
            for r in rel["below1"]:
                col[idx[r]] -= 1
        elif lab == p2:
            for r in rel["below2"]:
                col[idx[r]] += 1
            for r in rel["above2"]:
                col[idx[r]] -= 1
        elif lab == qi:
            for r in (qi, p1, p2):
                col[idx[r]] += 1
            for r in rel["inside"]:
                col[idx[r]] += 2
        else:
            col[idx[lab]] = -1
    return LatticeMatrix.from_columns(cols)


def h1_generators(cfg: ConfigDescriptor) -> List[LatticeMatrix]:
    return [h1_matrix_from_configuration(cfg, i) for i in range(1, cfg.k + 1)]


# The three matrices as printed for the default k = 3 configuration.
PRINTED_H1 = (
    (
        (1, 0, 0, 0, 0, 0, 0, 0, 0),
        (1, 0, -1, 0, 0, 0, 0, 0, 0),
        (1, -1, 0, 0, 0, 0, 0, 0, 0),
        (2, -1, 1, -1, 0, 0, 0, 0, 0),
        (0, 1, -1, 0, -1, 0, 0, 0, 0),
        (2, -1, 1, 0, 0, -1, 0, 0, 0),
        (2, -1, 1, 0, 0, 0, -1, 0, 0),
        (0, 1, -1, 0, 0, 0, 0, -1, 0),
        (2, -1, 1, 0, 0, 0, 0, 0, -1),
    ),
    (
        (-1, 0, 0, 2, 1, -1, 0, 0, 0),
        (0, -1, 0, 2, 1, -1, 0, 0, 0),
        (0, 0, -1, 0, -1, 1, 0, 0, 0),
        (0, 0, 0, 1, 0, 0, 0, 0, 0),
        (0, 0, 0, 1, 0, -1, 0, 0, 0),
        (0, 0, 0, 1, -1, 0, 0, 0, 0),
        (0, 0, 0, 2, -1, 1, -1, 0, 0),
        (0, 0, 0, 0, 1, -1, 0, -1, 0),
        (0, 0, 0, 2, -1, 1, 0, 0, -1),
    ),
    (
        (-1, 0, 0, 0, 0, 0, 2, 1, -1),
        (0, -1, 0, 0, 0, 0, 2, 1, -1),
        (0, 0, -1, 0, 0, 0, 0, -1, 1),
        (0, 0, 0, -1, 0, 0, 2, 1, -1),
        (0, 0, 0, 0, -1, 0, 2, 1, -1),
        (0, 0, 0, 0, 0, -1, 0, -1, 1),
        (0, 0, 0, 0, 0, 0, 1, 0, 0),
        (0, 0, 0, 0, 0, 0, 1, 0, -1),
        (0, 0, 0, 0, 0, 0, 1, -1, 0),
    ),
)

# The quotient matrices exactly as printed (A_1 is not an involution as printed).
PRINTED_A = (
    (
        (1, 0, 0, 0, 0, 0),
        (0, 1, 0, 0, 0, 0),
        (2, -1, -1, 0, 0, 0),
        (-2, 2, -1, -1, 0, 0),
        (2, -1, 0, 0, -1, 0),
        (-2, 2, 0, 0, 0, -1),
    ),
    (
        (-1, 0, 2, 1, 0, 0),
        (0, -1, 2, 2, 0, 0),
        (0, 0, 1, 0, 0, 0),
        (0, 0, 0, 1, 0, 0),
        (0, 0, 2, -1, -1, 0),
        (0, 0, -2, 2, 0, -1),
    ),
    (
        (-1, 0, 0, 0, 2, 1),
        (0, -1, 0, 0, 2, 2),
        (0, 0, -1, 0, 2, 1),
        (0, 0, 0, -1, 2, 2),
        (0, 0, 0, 0, 1, 0),
        (0, 0, 0, 0, 0, 1),
    ),
)

P_F = (1, -4, -3, -2, 5, 2, 1)
P_F_FACTORS = ((1, -1), (1, -3, -6, -8, -3, -1))
P_G = (1, -24, -83, -122, -35, 22, 1)
LAMBDA_F = 4.679
GOLDEN_WORD = (1, 2, 3, 2, 1, 3, 1, 3, 1, 2, 3, 2, 1, 2, 3)


def quotient_projection(k: int) -> np.ndarray:
    """(x_q, x_p1 - x_p2) for each involution; shape (2k, 3k)."""
    p = np.zeros((2 * k, 3 * k), dtype=np.int64)
    for i in range(k):
        p[2 * i, 3 * i] = 1
        p[2 * i + 1, 3 * i + 1] = 1
        p[2 * i + 1, 3 * i + 2] = -1
    return p


def quotient_kernel(k: int) -> np.ndarray:
    """Basis of the kernel of the projection, as columns e_p1 + e_p2."""
    kv = np.zeros((3 * k, k), dtype=np.int64)
    for i in range(k):
        kv[3 * i + 1, i] = 1
        kv[3 * i + 2, i] = 1
    return kv


def quotient_rep(mats: Optional[Sequence[LatticeMatrix]] = None, k: int = 3):
    """Projection P and the induced matrices A_i with P sigma_i = A_i P."""
    if mats is None:
        mats = h1_generators(default_config(k))
    k = len(mats)
    p = quotient_projection(k)
    section = np.zeros((3 * k, 2 * k), dtype=np.int64)
    for i in range(k):
        section[3 * i, 2 * i] = 1
        section[3 * i + 1, 2 * i + 1] = 1
    out = []
    for n, m in enumerate(mats, start=1):
        s = np.array(m.rows, dtype=np.int64)
        a = p @ s @ section
        if not np.array_equal(a @ p, p @ s):
            raise IntertwiningFailure(f"kernel not invariant under generator {n}")
        out.append(LatticeMatrix(tuple(map(tuple, a.tolist()))))
    return p, out


def kernel_invariant(mats: Sequence[LatticeMatrix]) -> bool:
    k = len(mats)
    p = quotient_projection(k)
    kv = quotient_kernel(k)
    return all(not np.any(p @ np.array(m.rows, dtype=np.int64) @ kv) for m in mats)


def compare_with_printed(mats: Sequence[LatticeMatrix], printed=PRINTED_A) -> List[List[Tuple[int, int, int, int]]]:
    """Per generator, the entries (row, col, computed, printed) that differ."""
    diffs = []
    for m, ref in zip(mats, printed):
        d = []
        for r in range(m.dim):
            for c in range(m.dim):
                if m.rows[r][c] != ref[r][c]:
                    d.append((r, c, m.rows[r][c], ref[r][c]))
        diffs.append(d)
    return diffs


# ------------------------------------------------------------------- words


def reduce_word(w: Sequence[int]) -> Tuple[int, ...]:
    """Cancel adjacent equal letters (each generator is an involution)."""
    out: List[int] = []
    for a in w:
        if out and out[-1] == a:
            out.pop()
        else:
            out.append(int(a))
    return tuple(out)


def word_matrix(gens: Sequence[LatticeMatrix], w: Sequence[int]) -> LatticeMatrix:
    """Product gens[w0] gens[w1] ... with 1-based letters."""
    if len(w) == 0:
        return LatticeMatrix.identity(gens[0].dim)
    for a in w:
        if not 1 <= a <= len(gens):
            raise ValueError(f"letter {a} out of range")
    return product([gens[a - 1] for a in w])


def classify_word(
    gens: Sequence[LatticeMatrix],
    w: Sequence[int],
    gram: Optional[LatticeMatrix] = None,
    order_bound: int = 66,
) -> Classification:
    return classify_isometry(word_matrix(gens, w), order_bound=order_bound, gram=gram)


def entropy(gens: Sequence[LatticeMatrix], w: Sequence[int]) -> float:
    return math.log(classify_word(gens, w).lam)


def reduced_words(k: int, length: int):
    if length == 0:
        yield ()
        return
    for w in reduced_words(k, length - 1):
        for a in range(1, k + 1):
            if not w or w[-1] != a:
                yield w + (a,)


# ---------------------------------------------------------- degree counting


@dataclass
class DegreeTable:
    degrees_by_length: List[np.ndarray]
    R: np.ndarray
    N: np.ndarray
    slope: float
    fit_range: Tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "words_per_length": [int(len(d)) for d in self.degrees_by_length],
            "min_degree_per_length": [int(d.min()) for d in self.degrees_by_length],
            "R": [float(r) for r in self.R],
            "N": [int(n) for n in self.N],
            "slope": self.slope,
            "fit_range": list(self.fit_range),
        }


def count_degrees(
    gens: Sequence[LatticeMatrix],
    h: Optional[Sequence[int]] = None,
    L_max: int = 12,
    R_max: Optional[float] = None,
    gram: Optional[LatticeMatrix] = None,
    word_budget: int = 5_000_000,
    n_grid: int = 40,
) -> DegreeTable:
    """Tabulate N(R) = #{reduced words w, |w| <= L_max, <h, M_w h> <= R}.

    Words are extended on the left, so every level is a batch of
    matrix-vector products.  The slope of log N against log R is fitted on
    [R_max ** 0.5, R_max] where R_max defaults to the smallest degree at the
    last level; every group element of degree below it then has length at
    most L_max under the ping-pong growth of reduced words.
    """
    k = len(gens)
    n = gens[0].dim
    total = sum(k * (k - 1) ** (L - 1) for L in range(1, L_max + 1)) + 1
    if total > word_budget:
        raise Budget(f"{total} words exceed the budget {word_budget}")
    gram_m = np.array((gram or minkowski_form(n)).rows, dtype=np.int64)
    hv = np.zeros(n, dtype=np.int64)
    if h is None:
        hv[0] = 1
    else:
        hv[:] = list(h)
    mats_t = [np.array(g.rows, dtype=np.int64).T for g in gens]
    hg = hv @ gram_m
    vecs = hv[None, :].copy()
    first = np.array([0], dtype=np.int64)
    levels = [np.array([int(hg @ hv)], dtype=np.int64)]
    big = 2 ** 62
    for _ in range(L_max):
        bound = int(np.abs(vecs).max()) * max(int(np.abs(mt).sum(axis=0).max()) for mt in mats_t)
        if bound >= big:
            vecs = vecs.astype(object)
        new_v, new_f = [], []
        for a in range(1, k + 1):
            sel = first != a
            if not np.any(sel):
                continue
            new_v.append(vecs[sel] @ mats_t[a - 1])
            new_f.append(np.full(int(sel.sum()), a, dtype=np.int64))
        vecs = np.concatenate(new_v)
        first = np.concatenate(new_f)
        levels.append(np.asarray(vecs @ hg))
    all_deg = np.concatenate([np.asarray(d, dtype=np.float64) for d in levels])
    all_deg.sort()
    r_hi = float(R_max) if R_max is not None else float(np.min(np.asarray(levels[-1], dtype=np.float64)))
    r_lo = max(2.0, math.sqrt(r_hi))
    R = np.unique(np.round(np.geomspace(1.0, max(r_hi, 2.0), n_grid), 6))
    N = np.searchsorted(all_deg, R, side="right")
    mask = (R >= r_lo) & (R <= r_hi)
    if mask.sum() >= 2:
        slope = float(np.polyfit(np.log(R[mask]), np.log(N[mask]), 1)[0])
    else:
        slope = float("nan")
    return DegreeTable(levels, R, N, slope, (r_lo, r_hi))


# ------------------------------------------------------------ named sets


def generator_set(name: str, k: int = 3) -> List[LatticeMatrix]:
    """Resolve a named generator set: blanc-ns, h1-real, quotient-A, printed-A."""
    key = name.strip().lower()
    if key.startswith("blanc-ns"):
        return blanc_ns_generators(k)
    if key.startswith("h1-real"):
        return h1_generators(default_config(k))
    if key.startswith("quotient-a"):
        return quotient_rep(k=k)[1]
    if key.startswith("printed-a"):
        return [LatticeMatrix(a) for a in PRINTED_A]
    raise ValueError(f"unknown generator set {name!r}")
