import json

import pytest
from click.testing import CliRunner

from pentablanc import nsaction as ns
from pentablanc.cli import main


def run(*args):
    r = CliRunner().invoke(main, [str(a) for a in args])
    return r, (json.loads(r.output) if r.output.strip().startswith("{") else None)


def test_pent_check_degenerate_lengths():
    r, d = run("pent", "check", 1, 1, 1, 1, 2)
    assert r.exit_code == 0
    assert d["smooth"] is False
    assert d["j_fixed_points"]


def test_pent_check_equilateral():
    r, d = run("pent", "check", 1, 1, 1, 1, 1)
    assert d["smooth"] is True and d["j_fixed_points"] == []


def test_pent_check_rational_strings():
    r, d = run("pent", "check", "1/2", "2/3", "3/4", "4/5", "5/6")
    assert r.exit_code == 0 and d["admissible"]


def test_pent_check_reports_inadmissible():
    _, d = run("pent", "check", 1, 1, 1, 1, 10)
    assert d["admissible"] is False


def test_fold_run_inadmissible_exit_1():
    r, d = run("pent", "fold-run", 1, 1, 1, 1, 10, "--steps", 5)
    assert r.exit_code == 1
    assert d["error"] == "validation"


def test_fold_run_zero_steps_delta(tmp_path):
    r, d = run("pent", "fold-run", "--steps", 0, "--out", tmp_path, "--threads", 1)
    assert r.exit_code == 0, r.output
    assert d["delta_bin"] is not None
    assert (tmp_path / "summary.json").exists()
    assert (tmp_path / "hist_theta.svg").exists()
    saved = json.loads((tmp_path / "summary.json").read_text())
    assert saved["params"]["steps"] == 0 and saved["params"]["seed"] == d["params"]["seed"]


def test_fold_run_reproducible():
    args = ("pent", "fold-run", "--steps", 2000, "--seed", 3, "--threads", 1)
    _, a = run(*args)
    _, b = run(*args)
    assert a["run"]["digest"] == b["run"]["digest"]
    assert a == b


def test_fold_run_error_ceiling_exit_2():
    r, d = run("pent", "fold-run", "--steps", 3000, "--threshold", 0.9, "--threads", 1)
    assert r.exit_code == 2
    assert "error" in d


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"steps": 500, "seed": 7}))
    _, d = run("pent", "drift", "--config", cfg, "--trials", 2, "--seed", 9, "--threads", 1)
    assert d["params"]["steps"] == 500
    assert d["params"]["seed"] == 9


def test_config_unknown_key_exit_1(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"stepz": 5}))
    r, _ = run("pent", "drift", "--config", cfg)
    assert r.exit_code == 1


def test_circle_and_expansion():
    r, d = run("pent", "circle", "--steps", 1000, "--threads", 1)
    assert r.exit_code == 0 and 0 <= d["tv_uniform"] <= 1
    r, d = run("pent", "expansion", "--samples", 2, "--directions", 4)
    assert r.exit_code == 0 and "c_hat" in d


def test_blanc_check_and_run(tmp_path):
    r, d = run("blanc", "check")
    assert r.exit_code == 0 and d["connected"]
    r, d = run("blanc", "run", "--steps", 500, "--starts", 2, "--out", tmp_path, "--threads", 1)
    assert r.exit_code == 0, r.output
    assert len(d["tube_fraction"]) == 2
    assert (tmp_path / "tube_mass.svg").exists()


def test_blanc_disconnected_curve_exit_1():
    r, _ = run("blanc", "check", "--curve", 0, -1, 0)
    assert r.exit_code == 1


def test_ns_classify():
    _, d = run("ns", "classify", "--word", "12")
    assert d["kind"] == "Parabolic"
    _, d = run("ns", "classify", "--word", "123")
    assert d["kind"] == "Loxodromic"


def test_ns_charpoly_matches_reference_polynomial():
    r, d = run("ns", "charpoly", "--gens", "quotient-A", "--word", "123")
    assert r.exit_code == 0
    assert d["charpoly"] == list(ns.P_F)


def test_ns_count_degrees():
    _, d = run("ns", "count-degrees", "--l-max", 5)
    assert d["words_per_length"] == [1, 3, 6, 12, 24, 48]


def test_ns_h1_default(tmp_path):
    _, d = run("ns", "h1")
    assert d["matches_printed"] == [True, True, True]
    assert d["kernel_invariant"] is True
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(ns.default_config(3).to_dict()))
    _, e = run("ns", "h1", "--config", cfg)
    assert e["matrices"] == d["matrices"]


def test_ns_matrix_files(tmp_path):
    from pentablanc import exactlin as el

    paths = []
    for i, m in enumerate(ns.generator_set("quotient-A", 3)):
        p = tmp_path / f"a{i}.json"
        p.write_text(el.matrix_to_json(m))
        paths += ["--matrix", p]
    _, a = run("ns", "charpoly", *paths, "--word", "123")
    _, b = run("ns", "charpoly", "--gens", "quotient-A", "--word", "123")
    assert a["charpoly"] == b["charpoly"]


@pytest.mark.parametrize("group", ["pent", "blanc", "ns"])
def test_help(group):
    r = CliRunner().invoke(main, [group, "--help"])
    assert r.exit_code == 0
