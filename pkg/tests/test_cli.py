"""Command line behavior: parsing, exit codes, reports, schema validity."""

import csv
import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from margshift import CountTable, TableParseError, wald_ci
from margshift.cli import main, parse_table_csv, write_table_csv
from conftest import ACTIVE_COUNTS, PLACEBO_COUNTS


@pytest.fixture(scope="module")
def schema():
    text = (
        resources.files("margshift").joinpath("schemas/run_report.schema.json").read_text()
    )
    return json.loads(text)


def validate(report: dict, schema: dict) -> None:
    jsonschema.validate(report, schema, cls=jsonschema.Draft202012Validator)


def write_counts(path: Path, counts) -> str:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in counts:
            writer.writerow(row)
    return str(path)


@pytest.fixture
def active_csv(tmp_path):
    return write_counts(tmp_path / "active.csv", ACTIVE_COUNTS)


@pytest.fixture
def placebo_csv(tmp_path):
    return write_counts(tmp_path / "placebo.csv", PLACEBO_COUNTS)


class TestTableIO:
    def test_round_trip(self, tmp_path, active_table):
        path = tmp_path / "t.csv"
        write_table_csv(active_table, path)
        assert parse_table_csv(str(path)) == active_table

    def test_header_and_labels_detected(self, tmp_path):
        path = tmp_path / "labeled.csv"
        path.write_text(
            "pre,<20,20-30,30-60,>60\n"
            "<20,7,4,1,0\n"
            "20-30,11,5,2,2\n"
            "30-60,13,23,3,1\n"
            ">60,9,17,13,8\n"
        )
        assert parse_table_csv(str(path)) == CountTable(ACTIVE_COUNTS)

    def test_header_only(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("a,b\n1,2\n3,4\n")
        assert parse_table_csv(str(path)) == CountTable([[1, 2], [3, 4]])

    def test_labels_only(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("x,1,2\ny,3,4\n")
        assert parse_table_csv(str(path)) == CountTable([[1, 2], [3, 4]])

    def test_position_annotated_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,4.5\n")
        with pytest.raises(TableParseError, match=r"bad\.csv:2: column 2"):
            parse_table_csv(str(path))

    def test_negative_count_position(self, tmp_path):
        path = tmp_path / "neg.csv"
        path.write_text("1,2\n-3,4\n")
        with pytest.raises(TableParseError, match="negative"):
            parse_table_csv(str(path))

    def test_ambiguous_block_refused(self, tmp_path):
        path = tmp_path / "amb.csv"
        path.write_text("1,2,3\n4,5,6\n")
        with pytest.raises(TableParseError, match="ambiguous"):
            parse_table_csv(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(TableParseError):
            parse_table_csv(str(tmp_path / "nope.csv"))


class TestEstimate:
    def test_reproduces_published_values(self, active_csv, tmp_path, capsys, schema):
        out = tmp_path / "report.json"
        code = main(["estimate", active_csv, "--json", str(out)])
        assert code == 0
        shown = capsys.readouterr().out
        assert "-0.654629" in shown
        assert "column-variable hazard dominates" in shown
        report = json.loads(out.read_text())
        validate(report, schema)
        res = report["results"]
        assert res["estimate"] == pytest.approx(-0.655, abs=5e-4)
        assert res["ci"]["lower"] == pytest.approx(-0.806, abs=2e-3)
        assert res["ci"]["upper"] == pytest.approx(-0.503, abs=2e-3)
        assert report["seed"] is None

    def test_bootstrap_ci_and_seed_echo(self, active_csv, tmp_path, schema):
        out = tmp_path / "boot.json"
        code = main(
            ["estimate", active_csv, "--ci", "bootstrap", "--replicates", "300",
             "--seed", "11", "--json", str(out)]
        )
        assert code == 0
        report = json.loads(out.read_text())
        validate(report, schema)
        assert report["seed"] == 11
        assert report["results"]["ci"]["method"] == "bootstrap-percentile"

    def test_psi_measure_flags(self, active_csv, tmp_path, schema):
        out = tmp_path / "psi.json"
        assert main(["estimate", active_csv, "--measure", "psi:1.0", "--json", str(out)]) == 0
        report = json.loads(out.read_text())
        validate(report, schema)
        assert report["results"]["measure"] == "psi"
        assert report["results"]["lambda"] == 1.0
        assert 0.0 < report["results"]["estimate"] < 1.0

    def test_lambda_flag_spelling(self, active_csv):
        assert main(["estimate", active_csv, "--measure", "psi", "--lambda", "2"]) == 0

    def test_shape_error_exits_one(self, tmp_path, capsys):
        path = write_counts(tmp_path / "one.csv", [[3]])
        assert main(["estimate", str(path)]) == 1
        assert "square" in capsys.readouterr().err

    def test_missing_file_exits_one(self, capsys):
        assert main(["estimate", "no-such-file.csv"]) == 1

    def test_boundary_table_exits_two(self, tmp_path, capsys):
        path = write_counts(tmp_path / "left.csv", [[0, 0, 0], [0, 0, 0], [40, 60, 0]])
        assert main(["estimate", str(path)]) == 2
        err = capsys.readouterr().err
        assert "phi = -1.000000" in err
        assert "refused" in err

    def test_degenerate_table_exits_two(self, tmp_path, capsys):
        path = write_counts(tmp_path / "pm.csv", [[9, 0], [0, 0]])
        assert main(["estimate", str(path)]) == 2

    def test_conflicting_lambda_exits_one(self, active_csv):
        assert main(["estimate", active_csv, "--measure", "psi:1", "--lambda", "2"]) == 1

    def test_missing_lambda_exits_one(self, active_csv, capsys):
        assert main(["estimate", active_csv, "--measure", "psi"]) == 1
        assert "lambda" in capsys.readouterr().err

    def test_json_to_stdout_is_pure(self, active_csv, capsys, schema):
        assert main(["estimate", active_csv, "--json", "-"]) == 0
        report = json.loads(capsys.readouterr().out)  # no human prefix
        validate(report, schema)
        assert report["results"]["estimate"] == pytest.approx(-0.655, abs=5e-4)


class TestCompare:
    def test_published_conclusion(self, active_csv, placebo_csv, tmp_path, capsys, schema):
        out = tmp_path / "cmp.json"
        code = main(["compare", active_csv, placebo_csv, "--json", str(out)])
        assert code == 0
        shown = capsys.readouterr().out
        assert "not significant" in shown
        assert "independent samples" in shown
        report = json.loads(out.read_text())
        validate(report, schema)
        assert report["results"]["significant"] is False
        assert report["results"]["difference"]["estimate"] == pytest.approx(-0.202, abs=2e-3)
        assert len(report["inputs"]) == 2

    def test_table_against_itself(self, active_csv, capsys):
        assert main(["compare", active_csv, active_csv]) == 0
        assert "difference (A - B): 0.000000" in capsys.readouterr().out

    def test_table_against_transpose(self, active_csv, tmp_path, capsys):
        transposed = write_counts(
            tmp_path / "t.csv", np.array(ACTIVE_COUNTS).T.tolist()
        )
        assert main(["compare", active_csv, transposed]) == 0
        shown = capsys.readouterr().out
        phi_hat = wald_ci(CountTable(ACTIVE_COUNTS)).ci.estimate
        assert f"difference (A - B): {2 * phi_hat:.6f}" in shown


class TestCurve:
    def test_grid_csv(self, tmp_path):
        out = tmp_path / "curve.csv"
        code = main(
            ["curve", "--delta-min", "-6", "--delta-max", "6", "--step", "0.1",
             "--out", str(out)]
        )
        assert code == 0
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "delta,phi"
        assert len(rows) == 122  # header + 121 points
        values = [float(r.split(",")[1]) for r in rows[1:]]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert "0.0,0.0" in rows

    def test_json_report(self, tmp_path, schema):
        out = tmp_path / "curve.csv"
        rep = tmp_path / "curve.json"
        code = main(
            ["curve", "--delta-min", "-2", "--delta-max", "2", "--step", "0.5",
             "--out", str(out), "--json", str(rep)]
        )
        assert code == 0
        report = json.loads(rep.read_text())
        validate(report, schema)
        assert report["results"]["points"] == 9

    def test_bad_step_exits_one(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["curve", "--delta-min", "-1", "--delta-max", "1",
                     "--step", "0", "--out", str(out)]) == 1

    def test_bad_range_exits_one(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["curve", "--delta-min", "2", "--delta-max", "1",
                     "--step", "0.1", "--out", str(out)]) == 1

    def test_unwritable_path_exits_one(self, tmp_path):
        assert main(["curve", "--delta-min", "-1", "--delta-max", "1",
                     "--step", "0.5", "--out", str(tmp_path / "no" / "dir" / "c.csv")]) == 1


class TestSimulate:
    def test_byte_identical_reruns(self, tmp_path, schema):
        first = tmp_path / "a.json"
        second = tmp_path / "b.json"
        argv = ["simulate", "--delta", "0", "--n", "500", "--replicates", "2000",
                "--seed", "42", "--json"]
        assert main(argv + [str(first)]) == 0
        assert main(argv + [str(second)]) == 0
        a = first.read_bytes()
        b = second.read_bytes()
        # the written path differs inside argv; normalize it before comparing
        assert a.replace(str(first).encode(), b"X") == b.replace(str(second).encode(), b"X")
        report = json.loads(a)
        validate(report, schema)
        assert report["seed"] == 42
        study = report["results"]["studies"][0]
        assert 0.9 <= study["coverage"] <= 1.0

    def test_grid_sweep_rows(self, tmp_path):
        out = tmp_path / "rows.csv"
        code = main(["simulate", "--delta=-1,0,1", "--n", "100",
                     "--replicates", "100", "--seed", "3", "--out", str(out)])
        assert code == 0
        rows = out.read_text().strip().splitlines()
        assert len(rows) == 4  # header + 3 scenarios
        assert rows[0].startswith("delta,n,replicates")

    def test_replicate_floor_exits_one(self):
        assert main(["simulate", "--replicates", "50", "--n", "100"]) == 1

    def test_config_file_with_flag_override(self, tmp_path, schema):
        cfg = tmp_path / "study.cfg"
        cfg.write_text(
            "# coverage study settings\n"
            "delta = 0.5\n"
            "base-hazard = 0.4,0.5\n"
            "n = 120\n"
            "replicates = 100\n"
            "seed = 9\n"
        )
        rep = tmp_path / "sim.json"
        code = main(["simulate", "--config", str(cfg), "--n", "150", "--json", str(rep)])
        assert code == 0
        report = json.loads(rep.read_text())
        validate(report, schema)
        study = report["results"]["studies"][0]
        assert study["n"] == 150  # flag wins over config
        assert study["delta"] == 0.5
        assert report["results"]["base_hazard_x"] == [0.4, 0.5]
        assert report["inputs"][0]["path"] == str(cfg)

    def test_unknown_config_key_exits_one(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("horizon = 12\n")
        assert main(["simulate", "--config", str(cfg)]) == 1


class TestEntryPoint:
    def test_module_invocation(self, active_csv):
        proc = subprocess.run(
            [sys.executable, "-m", "margshift.cli", "estimate", active_csv],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "-0.654629" in proc.stdout

    def test_usage_error_exits_one(self):
        proc = subprocess.run(
            [sys.executable, "-m", "margshift.cli", "estimate"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 1
