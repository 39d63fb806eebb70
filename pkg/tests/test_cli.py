import csv
import io
import json

import pytest

from dstower.cli import RunConfig, apply_settings, main, parse_orders, read_config_file
from dstower.errors import ContractViolation
from dstower.figures import FIGURES, build_dataset
from dstower.oracle import closed_form_reference
from dstower.solver import solve_truncation
from dstower.tower import get_theory, tower_for_order, truncate


def _run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_tower_command(capsys):
    rc, out, _ = _run(capsys, "tower", "--theory", "hermitian_quartic", "--equations", "2")
    assert rc == 0
    assert out.splitlines() == ["3*G2^2 + G4 - 1 = 0", "6*G2^3 + 12*G2*G4 + G6 = 0"]


def test_polys_command_exact_rationals(capsys):
    rc, out, _ = _run(capsys, "polys", "--orders", "2..5")
    rows = list(csv.DictReader(io.StringIO(out)))
    p5 = {int(r["degree"]): (int(r["numerator"]), int(r["denominator"])) for r in rows if r["order"] == "5"}
    assert rc == 0 and p5 == {5: (1, 1), 3: (-2, 3), 1: (193, 1890)}


def test_scan_outputs_are_byte_reproducible(tmp_path, capsys):
    outs = []
    for name, workers in (("a", "1"), ("b", "1"), ("c", "2")):
        d = tmp_path / name
        rc, _, err = _run(capsys, "scan", "--theory", "pt_quartic", "--orders", "4..6",
                          "--out-dir", str(d), "--workers", workers, "--format", "csv,json,svg")
        assert rc == 0, err
        outs.append({p.suffix: p.read_bytes() for p in d.iterdir() if p.suffix != ".txt"})
    assert outs[0] == outs[1]
    assert outs[0] == outs[2]
    assert set(outs[0]) == {".csv", ".json", ".svg"}
    echo = (tmp_path / "a" / "pt_quartic_zero.config.txt").read_text()
    assert "precision_bits = 256" in echo and "seed = 20240917" in echo


def test_scan_config_file_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# cubic scan\ntheory = pt_cubic\norders = 3..5\nprecision_bits = 128\n")
    rc, _, err = _run(capsys, "scan", "--config", str(cfg), "--out-dir", str(tmp_path / "o"),
                      "--set", "seed=11")
    assert rc == 0
    assert "precision_bits = 128" in err and "seed = 11" in err
    rows = list(csv.reader((tmp_path / "o" / "pt_cubic_zero.csv").open()))
    assert rows[0] == ["theory", "order", "seed_index", "re", "im", "residual", "tag"]
    # order 5 is x^2 (x^3 + c): the double zero is one row
    assert len(rows) - 1 == 3 + 4 + 4


@pytest.mark.parametrize("argv", [
    ["scan", "--theory", "pt_cubic", "--orders", "3..4", "--set", "bogus=1"],
    ["scan", "--theory", "pt_quartic", "--orders", "2..4"],
    ["scan", "--theory", "nonsense", "--orders", "3..4"],
    ["scan", "--theory", "pt_cubic", "--orders", "5..3"],
    ["scan", "--theory", "pt_cubic", "--orders", "three"],
    ["scan", "--theory", "pt_cubic", "--orders", "3..4", "--set", "precision_bits=lots"],
])
def test_bad_configuration_exits_1(argv, tmp_path, capsys):
    rc, _, err = _run(capsys, *argv, "--out-dir", str(tmp_path))
    assert rc == 1 and err.startswith("error:")


def test_unknown_key_in_config_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("theory = pt_cubic\ncolour = blue\n")
    with pytest.raises(ContractViolation, match="colour"):
        apply_settings(RunConfig(), read_config_file(cfg))
    cfg.write_text("just words\n")
    with pytest.raises(ContractViolation):
        read_config_file(cfg)


def test_solver_failures_exit_2_but_still_write(tmp_path, capsys):
    rc, _, err = _run(capsys, "scan", "--theory", "pt_quartic", "--orders", "5..5",
                      "--set", "max_steps=3", "--set", "retries=0", "--out-dir", str(tmp_path))
    assert rc == 2 and "solver failures at orders [5]" in err
    assert (tmp_path / "pt_quartic_zero.json").exists()


def test_parse_orders():
    assert parse_orders("3..9") == (3, 9)
    assert parse_orders("7") == (7, 7)


def test_exact_command(capsys):
    rc, out, _ = _run(capsys, "exact", "--theory", "pt_quintic", "--max-order", "2", "--choice", "pt_upper")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rc == 0 and [r["n"] for r in rows] == ["1", "2"]
    assert float(rows[0]["im"]) == pytest.approx(0.412008933217, abs=1e-11)
    assert float(rows[0]["error_estimate"]) < 1e-40


def test_growth_and_d1_commands(capsys):
    rc, out, _ = _run(capsys, "growth", "--theory", "pt_cubic", "--method", "analytic")
    data = json.loads(out)
    assert rc == 0 and float(data["analytic"]["x0"]) == pytest.approx(2.33810741046, abs=1e-10)
    rc, out, _ = _run(capsys, "d1", "--theory", "hermitian")
    assert rc == 0 and float(json.loads(out)["M"]) == pytest.approx(1.1447142425533, abs=1e-12)


def test_closure_compare_command(capsys):
    rc, out, _ = _run(capsys, "closure-compare", "--orders", "4..6")
    rows = json.loads(out)["rows"]
    assert rc == 0 and [r["order"] for r in rows] == [4, 5, 6]
    assert all(float(r["asymptotic_error"]) < float(r["zero_error"]) for r in rows)


def test_figure_command_and_embedded_constants(tmp_path, capsys):
    rc, _, err = _run(capsys, "figure", "--id", "fig7", "--orders", "4..5", "--out-dir", str(tmp_path))
    assert rc == 0, err
    assert {p.name for p in tmp_path.iterdir()} >= {"fig7.csv", "fig7.json", "fig7.svg", "fig7.config.txt"}
    meta = json.loads((tmp_path / "fig7.json").read_text())["metadata"]
    spec = FIGURES["fig7"]
    for label, choice in spec.references:
        want = closed_form_reference(spec.theory, choice)
        re_, im_ = (float(x) for x in meta["references"][label])
        assert abs(complex(re_, im_) - complex(want)) < 1e-6
    assert (tmp_path / "fig7.svg").read_text().startswith("<svg")


def test_curve_figure(tmp_path, capsys):
    rc, _, _ = _run(capsys, "figure", "--id", "supp_fig1", "--out-dir", str(tmp_path), "--format", "csv")
    rows = list(csv.reader((tmp_path / "supp_fig1.csv").open()))
    assert rc == 0 and rows[0] == ["x", "y"] and len(rows) == 162
    meta = json.loads((tmp_path / "supp_fig1.json").read_text())["metadata"]
    assert float(meta["references"]["x0"][0]) == pytest.approx(2.4419679037, abs=1e-9)
    assert not (tmp_path / "supp_fig1.svg").exists()


def test_build_dataset_lists_missing_orders():
    theory = get_theory("pt_cubic")
    rs = {n: solve_truncation(truncate(tower_for_order(theory, n), n)) for n in (3, 4)}
    with pytest.raises(ContractViolation, match=r"\[5, 6\]"):
        build_dataset("fig4", rs, orders=[3, 4, 5, 6])
    with pytest.raises(ContractViolation):
        build_dataset("fig5", rs, orders=[3, 4])
    ds = build_dataset("fig4", rs, orders=[3, 4])
    assert ds.columns == ("order", "re", "im") and len(ds.rows) == 7
    assert ds.csv_text().splitlines()[0] == "order,re,im"
