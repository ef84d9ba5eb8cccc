import csv
import io
import json
import math

import pytest

from birefcasimir import cli
from birefcasimir.cli import (
    EXIT_CONFIG,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    ConfigError,
    build_scenarios,
    format_json,
    main,
    parse_config,
    parse_material,
)
from birefcasimir.materials import Constant, OscillatorSum, Tabulated, evaluate
from birefcasimir.quadrature import HBAR_C, PointResult

MATCHED = """
[scenario]
plate1.eps = 2.0
gap.eps = 2.0
a = 100nm
theta = 0.3

[quadrature]
rel_tol = 1e-4
"""

BIREFRINGENT = """
[scenario]
plate1.eps_perp = 3.0
plate1.eps_par = 6.0
a = 100nm
theta = 0.7

[quadrature]
rel_tol = 1e-4

[output]
timing = false
"""


@pytest.fixture
def write(tmp_path):
    def _write(text, name="run.ini"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return _write


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# ------------------------------------------------------------ parsing


def test_grids_and_units(write):
    cfg = parse_config(write(MATCHED), {"scenario.a": "linspace(50nm, 0.2um, 4)",
                                        "scenario.theta": "0deg, 90deg"})
    assert cfg.a_grid == pytest.approx((5e-8, 1e-7, 1.5e-7, 2e-7), rel=1e-15)
    assert cfg.theta_grid == pytest.approx((0.0, math.pi / 2))
    pairs = [x for s in build_scenarios(cfg)[:3] for x in (s.a, s.theta)]
    assert pairs == pytest.approx([5e-8, 0.0, 5e-8, math.pi / 2, 1e-7, 0.0])


def test_plate2_defaults_to_plate1(write):
    cfg = parse_config(write(BIREFRINGENT))
    assert cfg.plate2 == cfg.plate1
    cfg = parse_config(write(BIREFRINGENT), {"scenario.plate2.eps": "4"})
    assert cfg.plate2.eps_perp == Constant(4.0) and cfg.plate2.eps_par == Constant(4.0)


def test_flags_override_file(write):
    cfg = parse_config(write(BIREFRINGENT), {"quadrature.rel_tol": "1e-3", "output.format": "json"})
    assert cfg.spec.rel_tol == 1e-3 and cfg.format == "json"
    assert cfg.echo["quadrature"]["rel_tol"] == "1e-3"


def test_oscillator_material_syntax(tmp_path):
    model = parse_material("1 + lorentz(2e+32, 1.5e16) + drude(1e30, 1e13)", "k", tmp_path)
    assert isinstance(model, OscillatorSum) and len(model.oscillators) == 2
    assert evaluate(model, 1e15) == pytest.approx(1 + 2e32 / (2.25e32 + 1e30) + 1e30 / (1e30 + 1e28))


def test_file_material_relative_to_config(write, tmp_path):
    sub = tmp_path / "data"
    sub.mkdir()
    (sub / "eps.txt").write_text("# xi eps\n1e14 3.0\n1e15 2.5\n1e16 2.0\n1e17 1.2\n")
    cfg = parse_config(write("[scenario]\nplate1.eps_perp = file(data/eps.txt)\n"
                             "plate1.eps_par = 4\na = 1e-7\n"))
    assert isinstance(cfg.plate1.eps_perp, Tabulated)
    assert evaluate(cfg.plate1.eps_perp, 1e15) == 2.5


@pytest.mark.parametrize("key, value, fragment", [
    ("scenario.a", "-1", "scenario.a: separations must be > 0"),
    ("scenario.a", "100 furlong", "scenario.a: unknown unit"),
    ("scenario.theta", "1, 0.5", "scenario.theta: grid must be strictly increasing"),
    ("scenario.plate1.eps_perp", "0.5", "scenario.plate1.eps_perp:"),
    ("scenario.gap.mu", "lorentz(1, 2)", "scenario.gap.mu: oscillator models"),
    ("scenario.plate1.eps_par", "file(missing.txt)", "missing.txt: cannot read"),
    ("quadrature.angular_order", "30", "quadrature: angular_order"),
    ("quadrature.rel_tol", "tight", "quadrature.rel_tol: cannot parse"),
    ("output.format", "xml", "output.format: must be csv or json"),
    ("output.colour", "red", "output.colour: unknown key"),
])
def test_config_errors_name_the_key(write, key, value, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(write(BIREFRINGENT), {key: value})
    assert fragment in str(info.value)


def test_main_reports_config_error(write, capsys):
    code = main([write(BIREFRINGENT), "--scenario.a=-1"])
    assert code == EXIT_CONFIG
    assert "config error: scenario.a: separations must be > 0" in capsys.readouterr().err


def test_main_rejects_malformed_flag(write):
    with pytest.raises(SystemExit):
        main([write(BIREFRINGENT), "--rel_tol=1"])


# ------------------------------------------------------------ runs


def test_matched_point_gives_zero_row(write, capsys):
    assert main([write(MATCHED)]) == EXIT_OK
    (row,) = rows(capsys.readouterr().out)
    assert row["converged"] == "true"
    for col in ("F_Pa", "E_J_per_m2", "Q_J_per_m2_rad"):
        assert float(row[col]) == 0.0


def test_csv_and_json_agree(write, tmp_path, capsys):
    config = write(BIREFRINGENT)
    assert main([config]) == EXIT_OK
    csv_rows = rows(capsys.readouterr().out)
    out = tmp_path / "out.json"
    assert main([config, "--output.format=json", f"--output.path={out}"]) == EXIT_OK
    assert "F=" in capsys.readouterr().err
    doc = json.loads(out.read_text())
    assert doc["config"]["scenario"]["a"] == "100nm"
    (record,) = doc["records"]
    (row,) = csv_rows
    for col in cli.SI_COLUMNS[:8]:
        assert float(row[col]) == record[col]
    assert row["seconds"] == "" and record["seconds"] is None
    assert record["F_Pa"] < 0 and record["Q_J_per_m2_rad"] < 0


def test_dimensionless_columns(write, capsys):
    config = write(BIREFRINGENT)
    main([config])
    (si,) = rows(capsys.readouterr().out)
    main([config, "--dimensionless"])
    (hat,) = rows(capsys.readouterr().out)
    a = 1e-7
    assert float(hat["F_hat"]) == pytest.approx(float(si["F_Pa"]) * a**4 / HBAR_C, rel=1e-15)
    assert float(hat["E_hat"]) == pytest.approx(float(si["E_J_per_m2"]) * a**3 / HBAR_C, rel=1e-15)
    assert float(hat["Q_hat"]) == pytest.approx(float(si["Q_J_per_m2_rad"]) * a**3 / HBAR_C, rel=1e-15)


def test_non_convergence_exit_code(write, capsys):
    code = main([write(BIREFRINGENT), "--quadrature.max_panels=4", "--quadrature.rel_tol=1e-9"])
    assert code == EXIT_NOT_CONVERGED
    (row,) = rows(capsys.readouterr().out)
    assert row["converged"] == "false"


def test_quantity_subset_leaves_others_nan(write, capsys):
    assert main([write(BIREFRINGENT), "--output.quantities=F"]) == EXIT_OK
    (row,) = rows(capsys.readouterr().out)
    assert float(row["F_Pa"]) < 0 and math.isnan(float(row["E_J_per_m2"]))


def test_failed_point_is_reported(write, monkeypatch, capsys, caplog):
    def boom(scenario, spec, quantities):
        raise ArithmeticError("boom")

    monkeypatch.setattr("birefcasimir.quadrature.evaluate_point", boom)
    assert main([write(BIREFRINGENT)]) == EXIT_NOT_CONVERGED
    (row,) = rows(capsys.readouterr().out)
    assert row["converged"] == "false" and math.isnan(float(row["F_Pa"]))
    assert "ArithmeticError: boom" in caplog.text
    cfg = parse_config(write(BIREFRINGENT))
    failed = PointResult(a=1e-7, theta=0.7, error="ArithmeticError: boom")
    assert json.loads(format_json([failed], cfg))["records"][0]["error"] == "ArithmeticError: boom"


def test_json_round_trip(write):
    cfg = parse_config(write(BIREFRINGENT))
    r = PointResult(a=1e-7, theta=0.7, F=-1.5, F_err=1e-6, E=-2e-9, E_err=1e-15,
                    Q=-3e-10, Q_err=1e-16, converged=True, nodes=12, seconds=0.25)
    doc = json.loads(format_json([r], cfg))
    assert doc["records"][0]["F_Pa"] == -1.5 and doc["records"][0]["seconds"] is None
    assert doc["version"] == cli.__version__
