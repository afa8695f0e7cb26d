import json
import math
from pathlib import Path

import pytest

import main
from commands.run_config import CommandOutput
from errors import ConfigError
from utils.helpers import dumps_report, format_float, invariant_entry, parse_float_list, rows_to_csv

DATA = Path(__file__).resolve().parent.parent / "data"


def run_cli(capsys, *argv):
    code = main.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ------------------------------------------------------------
# successful runs
# ------------------------------------------------------------

def test_curvature_on_shipped_document(capsys):
    code, out, _ = run_cli(
        capsys, "curvature", "--metric", str(DATA / "half_plane.metric"), "--point", "0.5,2", "--point", "-1,0.7",
        "--fd-check",
    )
    assert code == 0
    report = json.loads(out)
    assert report["schema"] == 1
    assert report["version"] == "geom 1.0.0"
    assert report["results"]["is_constant_curvature"] is True
    assert report["results"]["K"] == pytest.approx(-1.0)
    assert all(entry["pass"] for entry in report["invariants"])
    assert "fd_cross_check" in {entry["name"] for entry in report["invariants"]}


def test_schwarzschild_is_reported_ricci_flat(capsys):
    code, out, _ = run_cli(capsys, "curvature", "--preset", "schwarzschild:M=1", "--point", "0,6,1.2,0.3")
    assert code == 0
    results = json.loads(out)["results"]
    assert results["is_einstein"] is True
    assert results["is_constant_curvature"] is False


def test_normal_command(capsys):
    code, out, _ = run_cli(capsys, "normal", "--preset", "sphere:n=2,R=1", "--z=0.2,-0.1", "--steps", "64")
    assert code == 0
    report = json.loads(out)
    expansion = report["results"]["expansions"][0]
    assert expansion["oracle_delta"] < 1e-5
    assert [entry["t"] for entry in expansion["radial_profile"]] == [0.25, 0.5, 0.75, 1.0]
    assert report["results"]["quadratic_form_convention"] in report["results"]["calibration_residuals"]


def test_conjugate_command(capsys):
    code, out, _ = run_cli(
        capsys, "conjugate", "--preset", "sphere:n=2,R=1", "--dirs", "2", "--s-max", "4", "--steps", "128",
    )
    assert code == 0
    results = json.loads(out)["results"]
    assert results["radius"] == pytest.approx(math.pi, abs=1e-3)
    assert len(results["directions"]) == 2


def test_conjugate_without_conjugate_points(capsys):
    code, out, _ = run_cli(capsys, "conjugate", "--preset", "flat:q=2", "--dirs", "2", "--s-max", "3", "--steps", "16")
    assert code == 0
    results = json.loads(out)["results"]
    assert results["radius"] is None
    assert results["certified_radius"] == pytest.approx(3.0)
    assert "no conjugate point" in results["note"]


def test_killing_command(capsys):
    code, out, _ = run_cli(capsys, "killing", "--n", "2", "--K", "1", "--samples", "4", "--vector", "0,0,1")
    assert code == 0
    results = json.loads(out)["results"]
    assert results["vectors"][0]["kind"] == "conformal_killing"
    assert results["form_invariance"]["all_killing"] is True


def test_algebra_spin_casimirs_as_csv(capsys):
    code, out, _ = run_cli(
        capsys, "algebra", "--signature", "+,+,+", "--reps", "spin:1/2,spin:1,spin:2", "--format", "csv",
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "rep,eigenvalue,multiplicity"
    assert lines[1:] == ["spin:1/2,0.75,2", "spin:1,2,3", "spin:2,6,5"]


@pytest.mark.parametrize(
    "argv",
    [
        ["algebra", "--signature", "-,+,+,+", "--reps", "vector,vector:real"],
        ["curvature", "--preset", "hyperbolic:n=2,R=1", "--point", "-1,0.7"],
        ["killing", "--n", "2", "--K", "1", "--samples", "3", "--vector", "0,-1,0.5"],
        ["normal", "--preset", "hyperbolic:n=2,R=1", "--origin", "-0.5,1.2", "--z", "-0.1,0.2", "--steps", "32"],
    ],
)
def test_negative_values_are_accepted(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 0, err
    assert json.loads(out)["invariants"]


def test_dash_values_are_joined_to_their_option():
    argv = ["-v", "normal", "--origin", "-1,2", "--z", "-0.1,0", "--steps", "8", "--signature", "-,+"]
    assert main.join_dash_values(argv) == [
        "-v", "normal", "--origin=-1,2", "--z=-0.1,0", "--steps", "8", "--signature=-,+",
    ]
    assert main.join_dash_values(["curvature", "--point", "--fd-check"]) == ["curvature", "--point", "--fd-check"]


def test_timing_is_opt_in(capsys):
    _, out, _ = run_cli(capsys, "algebra", "--signature", "-,+,+")
    assert "wall_time" not in json.loads(out)
    _, out, _ = run_cli(capsys, "algebra", "--signature", "-,+,+", "--timing")
    assert json.loads(out)["wall_time"] >= 0.0


# ------------------------------------------------------------
# determinism
# ------------------------------------------------------------

def test_reports_are_byte_identical(tmp_path):
    outputs = []
    for name in ("a.json", "b.json"):
        target = tmp_path / name
        argv = ["killing", "--n", "2", "--K", "-1", "--samples", "3", "--seed", "7", "--out", str(target)]
        assert main.main(argv) == 0
        outputs.append(target.read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0].endswith(b"\n")


def test_seed_changes_sampled_points(capsys):
    _, first, _ = run_cli(capsys, "killing", "--samples", "3", "--seed", "1")
    _, second, _ = run_cli(capsys, "killing", "--samples", "3", "--seed", "2")
    assert first != second


# ------------------------------------------------------------
# exit codes
# ------------------------------------------------------------

@pytest.mark.parametrize(
    "argv",
    [
        ["curvature"],
        ["curvature", "--preset", "sphere:R=-1"],
        ["curvature", "--preset", "torus"],
        ["curvature", "--metric", "no/such/file.metric"],
        ["normal", "--preset", "sphere"],
        ["normal", "--preset", "sphere", "--z=0.1,0.1", "--steps", "30"],
        ["algebra", "--signature", ""],
        ["algebra", "--signature", "+,+,+", "--reps", "spin:1/3"],
        ["algebra", "--signature", "-,+,+", "--reps", "spin:1"],
        ["killing", "--K", "0"],
        ["killing", "--n", "2", "--vector", "1,0"],
        ["curvature", "--preset", "sphere", "--point", "1,x"],
    ],
)
def test_configuration_errors_exit_2(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err.startswith("error:")


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main.main(["curvature", "--preset", "sphere", "--format", "xml"])
    assert info.value.code == 2


def test_point_outside_domain_exits_3(capsys):
    code, _, err = run_cli(capsys, "curvature", "--preset", "sphere:n=2", "--point", "4.0,0")
    assert code == 3
    assert "outside chart domain" in err


def test_z_beyond_conjugate_radius_exits_4(capsys):
    code, _, err = run_cli(capsys, "normal", "--preset", "sphere:n=2,R=1", "--z=0,3.5", "--steps", "64")
    assert code == 4
    assert "conjugate radius" in err


def test_geodesic_through_the_pole_exits_4(capsys):
    z = f"{1.1 * math.pi!r},0"
    code, out, err = run_cli(capsys, "normal", "--preset", "sphere:n=2,R=1", "--z", z, "--steps", "64")
    assert code == 4
    assert out == ""
    assert err.startswith("error:")


def test_unwritable_output_exits_2(capsys, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a folder")
    code, _, err = run_cli(capsys, "algebra", "--signature", "+,+,+", "--out", str(blocker / "report.json"))
    assert code == 2
    assert err.startswith("error: cannot write")


def test_failed_invariant_exits_5(capsys, monkeypatch):
    def failing(config):
        return CommandOutput({"note": "forced"}, [invariant_entry("forced", 1.0, 0.5)])

    monkeypatch.setitem(main.COMMANDS, "algebra", failing)
    code, out, _ = run_cli(capsys, "algebra", "--signature", "+,+")
    assert code == 5
    report = json.loads(out)
    assert report["invariants"] == [{"name": "forced", "pass": False, "residual": 1.0, "tol": 0.5}]


# ------------------------------------------------------------
# report helpers
# ------------------------------------------------------------

def test_float_format_round_trips():
    assert float(format_float(0.1)) == 0.1
    assert format_float(float("nan")) == '"nan"'
    assert format_float(float("-inf")) == '"-inf"'


def test_non_finite_residual_never_passes():
    assert not invariant_entry("x", float("nan"), 1.0)["pass"]


def test_report_keys_are_sorted():
    text = dumps_report({"b": 1, "a": [1.5, None, True]})
    assert text == '{\n  "a": [\n    1.5,\n    null,\n    true\n  ],\n  "b": 1\n}\n'


def test_csv_keeps_column_order():
    text = rows_to_csv([{"b": 2, "a": 0.25}], ["b", "a"])
    assert text == "b,a\n2,0.25\n"


@pytest.mark.parametrize("text", ["", "1,,2", "a", "1,inf"])
def test_float_list_rejects(text):
    with pytest.raises(ConfigError):
        parse_float_list(text)
