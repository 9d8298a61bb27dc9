"""Command-line entry point ``pentablanc``."""
from __future__ import annotations

import csv
import functools
import json
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__, _accel
from . import exactlin as el
from . import nsaction as ns
from . import pentsurf as ps
from . import svg
from .blancgeom import CubicCurve, hypothesis_check
from .errors import ErrorCeiling, PentablancError, ValidationError
from .presets import CUBIC, CUBIC_QS, GENERIC_LENGTHS
from .randdyn import experiments as ex
from .randdyn.engine import (
    PAIRS_CONSECUTIVE,
    PAIRS_EXT,
    BlancSystem,
    GeneratorDistribution,
    PentagonSystem,
    run_pentagon,
)


# ------------------------------------------------------------------ plumbing


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "to_dict"):
        return o.to_dict()
    return str(o)


def _emit(obj, out_dir=None):
    text = json.dumps(obj, indent=2, default=_json_default)
    click.echo(text)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "summary.json").write_text(text + "\n")


def _fail(err: PentablancError):
    code = 2 if isinstance(err, ErrorCeiling) else 1
    click.echo(json.dumps(err.to_dict()))
    sys.exit(code)


def guarded(fn):
    """Translate library errors into JSON on stdout and exit codes 1 / 2."""

    @functools.wraps(fn)
    def wrapper(*a, **kw):
        try:
            return fn(*a, **kw)
        except PentablancError as e:
            _fail(e)
        except ValueError as e:
            _fail(ValidationError(str(e)))

    return wrapper


def _apply_config(ctx: click.Context, params: dict) -> dict:
    """Fill parameters left at their defaults from ``--config`` JSON."""
    path = params.get("config")
    if not path:
        return params
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read config {path}: {e}")
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    known = {p.name for p in ctx.command.params}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    out = dict(params)
    for k, v in data.items():
        if ctx.get_parameter_source(k) in (click.core.ParameterSource.DEFAULT, None):
            out[k] = tuple(v) if isinstance(v, list) else v
    return out


def _provenance(ctx: click.Context, params: dict) -> dict:
    p = {k: v for k, v in params.items() if k != "config"}
    return {"command": ctx.command_path, "version": __version__, "backend": _accel.resolve(params.get("backend")),
            "params": p}


def _dist_from(pairs: str, weights):
    labels = {"ext": PAIRS_EXT, "consecutive": PAIRS_CONSECUTIVE}.get(pairs)
    if labels is None:
        labels = tuple(tuple(int(c) for c in tok) for tok in pairs.split(","))
    w = tuple(float(x) for x in weights) if weights else (1.0,) * len(labels)
    return GeneratorDistribution(tuple(labels), w)


def _lengths(vals):
    vals = tuple(vals) if vals else GENERIC_LENGTHS
    ell = ps.as_lengths(vals)
    return ell


def _strip_stats(d: dict) -> dict:
    return {k: v for k, v in d.items() if k != "stats"}


common_run = [
    click.option("--steps", type=int, default=100000, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--backend", type=click.Choice(["auto", "numba", "numpy"]), default="auto"),
    click.option("--threads", type=int, default=lambda: os.cpu_count() or 1, show_default="logical cores"),
    click.option("--out", "out", type=click.Path(file_okay=False), default=None),
    click.option("--config", type=click.Path(dir_okay=False), default=None, help="JSON file of option values"),
]


def with_common(fn):
    for opt in reversed(common_run):
        fn = opt(fn)
    return fn


pent_opts = [
    click.argument("lengths", nargs=-1),
    click.option("--pairs", default="ext", show_default=True, help="ext, consecutive, or e.g. 01,12,23"),
    click.option("--weights", multiple=True, type=float, help="one weight per generator"),
]


def with_pent(fn):
    for opt in reversed(pent_opts):
        fn = opt(fn)
    return fn


# ------------------------------------------------------------------ root


@click.group()
@click.version_option(__version__)
def main():
    """Pentagon folding and Blanc involution dynamics."""


@main.group()
def pent():
    """Pentagon surface and folding dynamics."""


@main.group()
def blanc():
    """Jonquieres involutions of a plane cubic."""


@main.group("ns")
def ns_group():
    """Exact cohomology actions."""


# ------------------------------------------------------------------ pent


@pent.command("check")
@click.argument("lengths", nargs=-1, required=True)
@guarded
def pent_check(lengths):
    """Admissibility, smoothness, nodes and fixed points of J."""
    ell = ps.as_lengths(lengths)
    nodes = {f"{i}{j}": [str(x) for x in v] for (i, j), v in ps.nodes(ell).items()}
    fixed = ps.j_fixed_point_scan(ell)
    _emit({"lengths": [str(x) for x in ell.to_list()], "admissible": ell.admissible(),
           "smooth": ps.smoothness_check(ell), "exact": ell.exact, "nodes": nodes,
           "j_fixed_points": [list(p) for p in fixed]})


def _write_hist_csv(path, counts):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(counts):
            w.writerow([int(x) if float(x).is_integer() else float(x) for x in row])


@pent.command("fold-run")
@with_pent
@click.option("--nb", type=int, default=50, show_default=True)
@click.option("--reproj-every", type=int, default=1000, show_default=True)
@click.option("--threshold", type=float, default=None, help="indeterminacy tolerance")
@click.option("--ceiling", type=float, default=0.01, show_default=True)
@with_common
@click.pass_context
@guarded
def pent_fold_run(ctx, **params):
    """Orbit histograms and pushforward invariance statistics."""
    params = _apply_config(ctx, params)
    ell = _lengths(params["lengths"])
    dist = _dist_from(params["pairs"], params["weights"])
    system = PentagonSystem(ell, dist)
    kw = {} if params["threshold"] is None else {"threshold": params["threshold"]}
    r = run_pentagon(system, params["steps"], params["seed"], (0,), nb=params["nb"],
                     reproj_every=params["reproj_every"], ceiling=params["ceiling"],
                     backend=params["backend"], threads=params["threads"], **kw)
    H = r.data["hist_theta"][0]
    tvs = {"theta": [ex.tv_distance(H, r.data["push_theta"][0, g]) for g in range(len(dist))]}
    tvs["a3"] = [ex.tv_distance(r.data["hist_a3"][0], r.data["push_a3"][0, g]) for g in range(len(dist))]
    res = {**_provenance(ctx, params), "run": r.summary(), "pushforward_tv": tvs,
           "hist_theta_total": int(H.sum()), "occupied_bins": int((H > 0).sum()),
           "max_closure": float(r.data["max_closure"][0]), "rejections": int(r.data["rejections"][0])}
    if params["steps"] == 0:
        res["delta_bin"] = [int(x) for x in np.argwhere(H > 0)[0]]
    out = params["out"]
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        _write_hist_csv(Path(out) / "hist_theta.csv", H)
        svg.write(Path(out) / "hist_theta.svg", svg.heatmap(H, "orbit histogram", "arg t1", "arg t3"))
    _emit(res, out)


@pent.command("drift")
@with_pent
@click.option("--trials", type=int, default=10, show_default=True)
@with_common
@click.pass_context
@guarded
def pent_drift(ctx, **params):
    """Linear drift and diffusive exponent of the tracked vertex a_0."""
    params = _apply_config(ctx, params)
    ell = _lengths(params["lengths"])
    d = ex.drift_experiment(ell, params["steps"], params["trials"], params["seed"],
                            _dist_from(params["pairs"], params["weights"]),
                            backend=params["backend"], threads=params["threads"])
    out = params["out"]
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        with open(Path(out) / "drift.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "mean_abs_a0"])
            w.writerows(zip(d["checkpoints"], d["mean_abs_a0"]))
        svg.write(Path(out) / "drift_fit.svg",
                  svg.line_plot([(d["checkpoints"], d["mean_abs_a0"], "E|a0|")], "drift", "n", "E|a0(n)|",
                                logx=True, logy=True, points=True))
    _emit({**_provenance(ctx, params), **_strip_stats(d)}, out)


@pent.command("circle")
@with_pent
@click.option("--abins", type=int, default=360, show_default=True)
@with_common
@click.pass_context
@guarded
def pent_circle(ctx, **params):
    """Angular marginal of the circle extension against the uniform law."""
    params = _apply_config(ctx, params)
    ell = _lengths(params["lengths"])
    d = ex.circle_extension_experiment(ell, params["steps"], params["seed"],
                                       _dist_from(params["pairs"], params["weights"]),
                                       abins=params["abins"], backend=params["backend"],
                                       threads=params["threads"])
    _emit({**_provenance(ctx, params), **_strip_stats(d)}, params["out"])


@pent.command("expansion")
@with_pent
@click.option("--n0", type=int, default=2, show_default=True)
@click.option("--samples", type=int, default=20, show_default=True)
@click.option("--directions", type=int, default=16, show_default=True)
@click.option("--method", type=click.Choice(["closed", "fd"]), default="closed")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out", type=click.Path(file_okay=False), default=None)
@click.option("--config", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@guarded
def pent_expansion(ctx, **params):
    """Uniform-expansion probe over all words of length n0."""
    params = _apply_config(ctx, params)
    ell = _lengths(params["lengths"])
    d = ex.uniform_expansion_probe(ell, _dist_from(params["pairs"], params["weights"]), params["n0"],
                                   params["samples"], params["directions"], params["seed"], params["method"])
    d.pop("values")
    _emit({**_provenance(ctx, params), **d}, params["out"])


# ------------------------------------------------------------------ blanc


def _blanc_system(curve, qs, weights):
    C = CubicCurve(*curve)
    if not C.connected:
        raise ValidationError("the real locus of the cubic must be connected")
    points = [C.point(float(x), int(s)) for x, s in qs]
    dist = None
    if weights:
        dist = GeneratorDistribution(tuple(range(1, len(points) + 1)), tuple(weights))
    return C, points, dist


blanc_opts = [
    click.option("--curve", nargs=3, type=str, default=tuple(str(c) for c in CUBIC), show_default=True,
                 help="u v w of y^2 = x^3 + u x^2 + v x + w"),
    click.option("--q", "qs", multiple=True, nargs=2, type=(float, int),
                 help="point of C by x-coordinate and sign of y; repeat per involution"),
]


def with_blanc(fn):
    for opt in reversed(blanc_opts):
        fn = opt(fn)
    return fn


@blanc.command("check")
@with_blanc
@guarded
def blanc_check(curve, qs):
    """Hyp1-Hyp4 report and base points."""
    qs = qs or CUBIC_QS
    C, points, _ = _blanc_system(curve, qs, None)
    rep = hypothesis_check(C, points)
    from .blancgeom import JonquieresMap

    base = [[[complex(c).real if abs(complex(c).imag) < 1e-12 else [complex(c).real, complex(c).imag]
              for c in p] for p in JonquieresMap(C, q).base_points] for q in points]
    _emit({"curve": C.to_dict(), "connected": C.connected, "qs": [p.tolist() for p in points],
           "hypotheses": rep, "base_points": base})


@blanc.command("run")
@with_blanc
@click.option("--weights", multiple=True, type=float)
@click.option("--starts", type=int, default=50, show_default=True)
@click.option("--eps-frac", type=float, default=0.05, show_default=True)
@click.option("--ceiling", type=float, default=0.01, show_default=True)
@with_common
@click.pass_context
@guarded
def blanc_run(ctx, **params):
    """Stiffness experiment: tube mass and Cesaro distance to C(R)."""
    params = _apply_config(ctx, params)
    C, points, dist = _blanc_system(params["curve"], params["qs"] or CUBIC_QS, params["weights"])
    rep = hypothesis_check(C, points)
    system = BlancSystem(C, points, dist)
    d = ex.stiffness_experiment(system, params["steps"], params["starts"], params["seed"],
                                eps_frac=params["eps_frac"], ceiling=params["ceiling"],
                                backend=params["backend"], threads=params["threads"])
    out = params["out"]
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        svg.write(Path(out) / "tube_mass.svg",
                  svg.line_plot([(d["checkpoints"], d["tube_mass_curve"], "tube mass")],
                                "tube mass", "n", "fraction", logx=True, points=True))
    _emit({**_provenance(ctx, params), "hypotheses": {k: rep[k] for k in ("hyp1", "hyp2", "hyp3", "hyp4")},
           **_strip_stats(d)}, out)


# ------------------------------------------------------------------ ns


def _gens(name, k, matrix_files):
    if matrix_files:
        return [el.matrix_from_json(Path(f).read_text()) for f in matrix_files]
    return ns.generator_set(name, k)


def _word(text):
    w = tuple(int(c) for c in text.replace(",", "").replace(" ", ""))
    return w


gen_opts = [
    click.option("--gens", default="blanc-ns", show_default=True,
                 help="blanc-ns, h1-real, quotient-A or printed-A"),
    click.option("--k", type=int, default=3, show_default=True),
    click.option("--matrix", "matrix_files", multiple=True, type=click.Path(exists=True, dir_okay=False),
                 help="generator matrix JSON files (override --gens)"),
]


def with_gens(fn):
    for opt in reversed(gen_opts):
        fn = opt(fn)
    return fn


@ns_group.command("classify")
@with_gens
@click.option("--word", default="12", show_default=True)
@click.option("--order-bound", type=int, default=66, show_default=True)
@guarded
def ns_classify(gens, k, matrix_files, word, order_bound):
    """Elliptic / parabolic / loxodromic type of a word in the generators."""
    g = _gens(gens, k, matrix_files)
    w = _word(word)
    gram = ns.ns_gram(k) if gens.lower().startswith("blanc-ns") and not matrix_files else None
    c = ns.classify_word(g, w, gram=gram, order_bound=order_bound)
    _emit({"gens": gens, "k": k, "word": list(w), "reduced": list(ns.reduce_word(w)), **c.to_dict()})


@ns_group.command("charpoly")
@with_gens
@click.option("--word", default="123", show_default=True)
@guarded
def ns_charpoly(gens, k, matrix_files, word):
    """Characteristic polynomial, cyclotomic factors and spectral radius of a word."""
    g = _gens(gens, k, matrix_files)
    w = _word(word)
    m = ns.word_matrix(g, w)
    p = el.char_poly(m)
    rem, factors = el.strip_cyclotomic(p)
    res = {"gens": gens, "k": k, "word": list(w), "charpoly": p.descending(), "charpoly_text": str(p),
           "cyclotomic_factors": [list(f) for f in factors], "remainder": rem.descending(),
           "spectral_radius": el.spectral_radius(m)}
    if gens.lower().startswith(("quotient-a", "printed-a")) and not matrix_files:
        golden = {(1, 2, 3): ns.P_F, ns.GOLDEN_WORD: ns.P_G}.get(w)
        if golden is not None:
            res["printed_value"] = list(golden)
            res["matches_printed_value"] = tuple(p.descending()) == tuple(golden)
    _emit(res)


@ns_group.command("count-degrees")
@with_gens
@click.option("--l-max", "l_max", type=int, default=12, show_default=True)
@click.option("--r-max", type=float, default=None)
@guarded
def ns_count_degrees(gens, k, matrix_files, l_max, r_max):
    """N(R) = #{reduced words with degree <= R} and its log-log slope."""
    g = _gens(gens, k, matrix_files)
    gram = ns.ns_gram(k) if gens.lower().startswith("blanc-ns") and not matrix_files else None
    t0 = time.time()
    tab = ns.count_degrees(g, L_max=l_max, R_max=r_max, gram=gram)
    _emit({"gens": gens, "k": k, "L_max": l_max, "seconds": time.time() - t0, **tab.to_dict()})


@ns_group.command("h1")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="ConfigDescriptor JSON; default is the printed k = 3 configuration")
@click.option("--k", type=int, default=3, show_default=True)
@guarded
def ns_h1(config_path, k):
    """Involution matrices on H^1 of the real locus from a configuration."""
    if config_path:
        cfg = ns.ConfigDescriptor.from_dict(json.loads(Path(config_path).read_text()))
    else:
        cfg = ns.default_config(k)
    mats = ns.h1_generators(cfg)
    res = {"config": cfg.to_dict(), "labels": ns.h1_labels(cfg.k),
           "matrices": [[list(r) for r in m.rows] for m in mats],
           "involutions": [(m @ m).is_identity() for m in mats],
           "kernel_invariant": ns.kernel_invariant(mats)}
    if cfg.k == 3:
        res["matches_printed"] = [m.rows == tuple(tuple(r) for r in p) for m, p in zip(mats, ns.PRINTED_H1)]
        _, A = ns.quotient_rep(mats)
        res["quotient_matrices"] = [[list(r) for r in a.rows] for a in A]
        res["quotient_vs_printed_differences"] = ns.compare_with_printed(A)
    _emit(res)


if __name__ == "__main__":  # pragma: no cover
    main()
