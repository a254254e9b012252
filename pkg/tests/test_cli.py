import csv
import json

import pytest

from copulaboot.cli import main

HDV_ARGS = [
    "combine",
    "--dist", "beta:0.027:0.050",
    "--dist", "beta:0.036:0.057",
    "--expr", "x1*x2",
    "--method", "hdi",
    "--n", "100000",
    "--seed", "123",
]

PREV_ARGS = [
    "adjust-prev",
    "--prev-ci", "0.136,0.204",
    "--sens-ci", "0.837,0.918",
    "--spec-ci", "0.857,0.975",
    "--prev", "0.168",
    "--sens", "0.8814814814814815",
    "--spec", "0.9318181818181818",
    "--method", "hdi",
    "--n", "100000",
    "--seed", "123",
]


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out


class TestCombine:
    def test_hdv_example(self, capsys):
        code, out = run_cli(
            HDV_ARGS + ["--sigma", "1,0.5;0.5,1", "--n", "1000000"], capsys
        )
        assert code == 0
        obj = json.loads(out)
        assert obj["low"] == pytest.approx(0.0010, abs=2e-4)
        assert obj["upp"] == pytest.approx(0.0026, abs=2e-4)
        assert obj["method"] == "hdi"
        assert obj["manifest"]["seed"] == 123

    def test_invalid_quantile_order_exits_2(self, capsys):
        code, _ = run_cli(
            ["combine", "--dist", "beta:0.5:0.4", "--expr", "x1"], capsys
        )
        assert code == 2

    def test_byte_identical_output(self, capsys):
        _, first = run_cli(HDV_ARGS, capsys)
        _, second = run_cli(HDV_ARGS, capsys)
        assert first == second

    def test_thread_count_does_not_change_output(self, capsys):
        _, one = run_cli(HDV_ARGS + ["--threads", "1"], capsys)
        _, eight = run_cli(HDV_ARGS + ["--threads", "8"], capsys)
        assert one == eight

    def test_missing_combiner_exits_2(self, capsys):
        code, _ = run_cli(["combine", "--dist", "beta:0.2:0.4"], capsys)
        assert code == 2

    def test_sigma_dimension_mismatch_exits_2(self, capsys):
        code, _ = run_cli(HDV_ARGS + ["--sigma", "1,0,0;0,1,0;0,0,1"], capsys)
        assert code == 2

    def test_builtin_combiner(self, capsys):
        args = [a if a != "x1*x2" else "product" for a in HDV_ARGS]
        args[args.index("--expr")] = "--combiner"
        code, out = run_cli(args, capsys)
        assert code == 0
        expr_out = run_cli(HDV_ARGS, capsys)[1]
        assert json.loads(out)["low"] == json.loads(expr_out)["low"]

    def test_csv_out_same_numbers(self, capsys):
        _, jout = run_cli(HDV_ARGS, capsys)
        _, cout = run_cli(HDV_ARGS + ["--out", "csv"], capsys)
        obj = json.loads(jout)
        rows = list(csv.DictReader(cout.splitlines()))
        assert float(rows[0]["low"]) == obj["low"]
        assert float(rows[0]["upp"]) == obj["upp"]

    def test_boot_vals_dump(self, capsys, tmp_path):
        path = tmp_path / "draws.csv"
        code, _ = run_cli(
            HDV_ARGS[:-2] + ["--n", "2000", "--boot-vals", str(path)], capsys
        )
        assert code == 0
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2000
        assert set(rows[0]) == {"x1", "x2", "combined"}
        r = rows[0]
        assert float(r["combined"]) == pytest.approx(
            float(r["x1"]) * float(r["x2"]), rel=1e-12
        )

    def test_bad_expression_exits_2(self, capsys):
        code, _ = run_cli(
            ["combine", "--dist", "beta:0.2:0.4", "--expr", "x1 +* x2"], capsys
        )
        assert code == 2


class TestAdjustPrev:
    def test_paper_example_rho_minus_half(self, capsys):
        code, out = run_cli(
            PREV_ARGS + ["--rho-sens-spec", "-0.5", "--n", "1000000"], capsys
        )
        assert code == 0
        obj = json.loads(out)
        assert obj["low"] == pytest.approx(0.038, abs=0.003)
        assert obj["upp"] == pytest.approx(0.194, abs=0.003)
        assert obj["point"] == pytest.approx(0.1227, abs=1e-4)

    def test_paper_example_independent(self, capsys):
        code, out = run_cli(PREV_ARGS + ["--n", "1000000"], capsys)
        assert code == 0
        obj = json.loads(out)
        assert obj["low"] == pytest.approx(0.039, abs=0.003)
        assert obj["upp"] == pytest.approx(0.190, abs=0.003)

    def test_missing_spec_ci_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(PREV_ARGS[:5])
        assert exc.value.code == 2

    def test_uninformative_inputs_exit_3(self, capsys):
        args = [
            "adjust-prev",
            "--prev-ci", "0.136,0.204",
            "--sens-ci", "0.30,0.60",
            "--spec-ci", "0.30,0.60",
            "--n", "10000",
        ]
        code, _ = run_cli(args, capsys)
        assert code == 3


class TestSweep:
    def test_row_shape_and_headers(self, capsys):
        args = [
            "sweep",
            "--prev-ci", "0.136,0.204",
            "--sens-ci", "0.837,0.918",
            "--spec-ci", "0.857,0.975",
            "--rho-from", "0",
            "--rho-to", "-0.9",
            "--steps", "9",
            "--n", "10000",
            "--method", "hdi",
        ]
        code, out = run_cli(args, capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "rho,low,upp,width"
        assert len(lines) == 11
        for line in lines[1:]:
            rho, low, upp, width = (float(v) for v in line.split(","))
            assert width == pytest.approx(upp - low, rel=1e-9)

    def test_steps_zero_matches_adjust_prev(self, capsys):
        common = [
            "--prev-ci", "0.136,0.204",
            "--sens-ci", "0.837,0.918",
            "--spec-ci", "0.857,0.975",
            "--n", "10000",
            "--method", "hdi",
            "--seed", "123",
        ]
        code, out = run_cli(
            ["sweep", "--rho-from", "0", "--rho-to", "0", "--steps", "0"] + common,
            capsys,
        )
        assert code == 0
        _, low, upp, _ = (float(v) for v in out.strip().splitlines()[1].split(","))
        _, jout = run_cli(["adjust-prev"] + common, capsys)
        obj = json.loads(jout)
        assert low == pytest.approx(obj["low"], rel=1e-9)
        assert upp == pytest.approx(obj["upp"], rel=1e-9)

    def test_rho_out_of_range_exits_2(self, capsys):
        args = [
            "sweep",
            "--prev-ci", "0.136,0.204",
            "--sens-ci", "0.837,0.918",
            "--spec-ci", "0.857,0.975",
            "--rho-from", "0",
            "--rho-to", "1.5",
            "--steps", "3",
        ]
        code, _ = run_cli(args, capsys)
        assert code == 2


class TestScatter:
    BASE = [
        "scatter",
        "--sens-ci", "0.837,0.918",
        "--spec-ci", "0.857,0.975",
    ]

    def test_row_count(self, capsys):
        code, out = run_cli(self.BASE + ["--rho", "0", "--m", "500"], capsys)
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "sens,spec"
        assert len(lines) == 501

    def test_antithetic(self, capsys):
        import numpy as np
        from scipy import stats

        code, out = run_cli(self.BASE + ["--rho", "-1", "--m", "2000"], capsys)
        assert code == 0
        rows = [tuple(float(v) for v in line.split(",")) for line in
                out.strip().splitlines()[1:]]
        sens = np.array([r[0] for r in rows])
        spec = np.array([r[1] for r in rows])
        assert np.array_equal(
            stats.rankdata(sens), len(sens) + 1 - stats.rankdata(spec)
        )

    def test_m_zero_exits_2(self, capsys):
        code, _ = run_cli(self.BASE + ["--rho", "0", "--m", "0"], capsys)
        assert code == 2


class TestCoverageCmd:
    def write_scenario(self, tmp_path, **overrides):
        data = {
            "trueParams": [0.035, 0.045],
            "dataSizes": [2000, 1500],
            "combiner": {"expr": "x1*x2"},
            "sigma": [[1, 0], [0, 1]],
            "n": 2000,
            "method": "percentile",
            "level": 0.95,
            "trials": 5,
        }
        data.update(overrides)
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(data))
        return str(path)

    def test_runs_and_reports(self, capsys, tmp_path):
        path = self.write_scenario(tmp_path)
        code, out = run_cli(["coverage", "--scenario", path, "--seed", "3"], capsys)
        assert code == 0
        obj = json.loads(out)
        assert set(obj) >= {"coverage", "meanWidth", "mcStdErr", "excludedTrials"}
        assert 0.0 <= obj["coverage"] <= 1.0

    def test_deterministic_repeat(self, capsys, tmp_path):
        path = self.write_scenario(tmp_path)
        _, a = run_cli(["coverage", "--scenario", path, "--seed", "3"], capsys)
        _, b = run_cli(["coverage", "--scenario", path, "--seed", "3"], capsys)
        assert a == b

    def test_trials_zero_exits_2(self, capsys, tmp_path):
        path = self.write_scenario(tmp_path)
        code, _ = run_cli(
            ["coverage", "--scenario", path, "--trials", "0"], capsys
        )
        assert code == 2

    def test_malformed_scenario_names_field(self, capsys, tmp_path):
        path = self.write_scenario(tmp_path)
        data = json.loads(open(path).read())
        del data["sigma"]
        open(path, "w").write(json.dumps(data))
        code, _ = run_cli(["coverage", "--scenario", path], capsys)
        assert code == 2

    def test_bad_expr_in_scenario(self, capsys, tmp_path):
        path = self.write_scenario(tmp_path, combiner={"expr": "x1 **"})
        code, _ = run_cli(["coverage", "--scenario", path], capsys)
        assert code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
