import contextlib
import csv
import io
import json
import os

import numpy as np
import pytest

from nsopt import cli

GOLDEN = os.path.join(os.path.dirname(__file__), "golden", "seed0003.jsonl")


def run_cli(argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = cli.main(argv)
    return code, out.getvalue()


def write_config(tmp_path, conf):
    path = tmp_path / "conf.json"
    path.write_text(json.dumps(conf))
    return str(path)


def golden_config(out_dir):
    return {
        "problem": {"name": "l1_center"},
        "method": "adam",
        "schedule": {"family": "power", "eta0": 0.05, "p": 0.6},
        "iters": 200,
        "seeds": [3],
        "snapshot_stride": 50,
        "out": str(out_dir),
    }


class TestExitCodes:
    def test_missing_config_file_is_io_error(self, tmp_path):
        code, _ = run_cli(["run", "--config", str(tmp_path / "nope.json")])
        assert code == 3

    def test_out_colliding_with_a_file_is_io_error(self, tmp_path):
        blocker = tmp_path / "out"
        blocker.write_text("in the way")
        conf = write_config(tmp_path, golden_config(blocker))
        code, _ = run_cli(["run", "--config", conf])
        assert code == 3

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "conf.json"
        path.write_text("{not json")
        code, _ = run_cli(["run", "--config", str(path)])
        assert code == 2

    @pytest.mark.parametrize("mangle", [
        lambda c: c.pop("iters"),
        lambda c: c.__setitem__("iters", -5),
        lambda c: c["problem"].__setitem__("name", "nope"),
        lambda c: c["problem"].__setitem__("bogus_param", 1),
        lambda c: c.__setitem__("bogus_key", 1),
        lambda c: c.__setitem__("method", "bfgs"),
        lambda c: c.__setitem__("seeds", [1, 1]),
        lambda c: c.__setitem__("optimizer", {"tau1": -1.0}),
    ])
    def test_config_errors(self, tmp_path, mangle):
        conf = golden_config(tmp_path / "out")
        mangle(conf)
        code, _ = run_cli(["run", "--config", write_config(tmp_path, conf)])
        assert code == 2

    def test_constant_schedule_is_gated(self, tmp_path, capsys):
        conf = golden_config(tmp_path / "out")
        conf["schedule"] = {"family": "constant", "eta0": 0.05}
        code, _ = run_cli(["run", "--config", write_config(tmp_path, conf)])
        assert code == 2
        assert "--override-schedule-check" in capsys.readouterr().err

    def test_override_flag_unlocks_the_gate(self, tmp_path):
        conf = golden_config(tmp_path / "out")
        conf["schedule"] = {"family": "constant", "eta0": 0.05}
        code, _ = run_cli(["run", "--config", write_config(tmp_path, conf),
                           "--override-schedule-check"])
        assert code == 0
        assert (tmp_path / "out" / "seed0003.jsonl").exists()


class TestRun:
    def test_matches_the_golden_file(self, tmp_path):
        conf = write_config(tmp_path, golden_config(tmp_path / "out"))
        code, text = run_cli(["run", "--config", conf])
        assert code == 0
        produced = (tmp_path / "out" / "seed0003.jsonl").read_bytes()
        with open(GOLDEN, "rb") as fh:
            assert produced == fh.read()
        assert "seed 3:" in text

    def test_summary_aggregates(self, tmp_path):
        conf = golden_config(tmp_path / "out")
        conf["seeds"] = [0, 1, 2]
        code, _ = run_cli(["run", "--config", write_config(tmp_path, conf)])
        assert code == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert len(summary["per_seed"]) == 3
        agg = summary["aggregate"]
        assert agg["num_runs"] == 3 and agg["num_diverged"] == 0
        assert agg["median_final_f"] == sorted(
            e["final_f"] for e in summary["per_seed"])[1]

    def test_seed_list_flag_wins_over_config(self, tmp_path):
        conf = write_config(tmp_path, golden_config(tmp_path / "out"))
        code, _ = run_cli(["run", "--config", conf, "--seed-list", "5,9"])
        assert code == 0
        names = sorted(p.name for p in (tmp_path / "out").iterdir())
        assert names == ["seed0005.jsonl", "seed0009.jsonl", "summary.json"]

    def test_out_flag_wins_over_config(self, tmp_path):
        conf = write_config(tmp_path, golden_config(tmp_path / "ignored"))
        code, _ = run_cli(["run", "--config", conf,
                           "--out", str(tmp_path / "flagged")])
        assert code == 0
        assert (tmp_path / "flagged" / "seed0003.jsonl").exists()
        assert not (tmp_path / "ignored").exists()

    def test_parallel_workers_reproduce_serial_output(self, tmp_path):
        conf = golden_config(tmp_path / "serial")
        conf["seeds"] = [0, 1, 2, 3]
        run_cli(["run", "--config", write_config(tmp_path, conf)])
        conf["out"] = str(tmp_path / "parallel")
        conf["workers"] = 4
        run_cli(["run", "--config", write_config(tmp_path, conf)])
        for i in range(4):
            name = f"seed{i:04d}.jsonl"
            assert (tmp_path / "serial" / name).read_bytes() == \
                (tmp_path / "parallel" / name).read_bytes()


class TestSweep:
    def sweep_config(self, out_dir):
        return {
            "problem": {"name": "l1_center"},
            "method": "adam",
            "schedule": {"family": "power", "eta0": 0.05, "p": 0.5},
            "batch": "full",
            "iters": 3000,
            "seeds": [0, 1],
            "grid": {"eta0": [0.01, 0.1, 0.3], "tau2": [1.0, 2.0]},
            "out": str(out_dir),
        }

    def test_grid_is_required(self, tmp_path):
        conf = self.sweep_config(tmp_path / "out")
        del conf["grid"]
        code, _ = run_cli(["sweep", "--config", write_config(tmp_path, conf)])
        assert code == 2

    def test_empty_grid_axis_rejected(self, tmp_path):
        conf = self.sweep_config(tmp_path / "out")
        conf["grid"] = {"eta0": []}
        code, _ = run_cli(["sweep", "--config", write_config(tmp_path, conf)])
        assert code == 2

    def test_unknown_grid_key_rejected(self, tmp_path):
        conf = self.sweep_config(tmp_path / "out")
        conf["grid"]["epsilon"] = [1.0]
        code, _ = run_cli(["sweep", "--config", write_config(tmp_path, conf)])
        assert code == 2

    def test_grid_point_failing_the_gate_rejected(self, tmp_path):
        conf = self.sweep_config(tmp_path / "out")
        conf["schedule"] = {"family": "power", "eta0": 0.05, "p": 2.0}
        code, _ = run_cli(["sweep", "--config", write_config(tmp_path, conf)])
        assert code == 2

    def test_csv_format_and_best_point(self, tmp_path):
        conf = write_config(tmp_path, self.sweep_config(tmp_path / "out"))
        code, _ = run_cli(["sweep", "--config", conf])
        assert code == 0
        text = (tmp_path / "out" / "sweep.csv").read_text()
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == ["eta0", "tau1", "tau2", "seed", "status",
                           "final_f", "final_gap"]
        assert len(rows) == 13
        # floats carry a decimal point, never a locale comma
        for row in rows[1:]:
            for col in (0, 1, 2, 5, 6):
                assert "." in row[col] and "," not in row[col]
            assert row[4] == "max_iter"
        by_eta0 = {}
        for row in rows[1:]:
            by_eta0.setdefault(float(row[0]), []).append(float(row[6]))
        # the aggressive stepsize drives the gap to zero on every seed;
        # the tiny one never leaves the high-gap region within budget
        assert all(g == 0.0 for g in by_eta0[0.3])
        assert all(g >= 0.5 for g in by_eta0[0.01])
        medians = {e: np.median(g) for e, g in by_eta0.items()}
        assert min(medians, key=medians.get) == 0.3


class TestSimulateDi:
    def di_config(self, out_dir):
        return {
            "problem": {"name": "l1_center"},
            "sim": {"T": 0.5, "gap_tol": 0.0},
            "inits": {"count": 2, "seed": 7},
            "out": str(out_dir),
        }

    def test_writes_one_file_per_init(self, tmp_path):
        conf = write_config(tmp_path, self.di_config(tmp_path / "out"))
        code, text = run_cli(["simulate-di", "--config", conf])
        assert code == 0
        for i in range(2):
            path = tmp_path / "out" / f"di_init{i:03d}.jsonl"
            lines = path.read_text().splitlines()
            header = json.loads(lines[0])["header"]
            assert header["status"] == "horizon"
            last = json.loads(lines[-1])
            assert last["t"] == pytest.approx(0.5)
        assert "init 0:" in text and "init 1:" in text

    def test_explicit_init_points(self, tmp_path):
        conf = self.di_config(tmp_path / "out")
        conf["inits"] = [[0.0] * 10]
        code, _ = run_cli(["simulate-di",
                           "--config", write_config(tmp_path, conf)])
        assert code == 0
        assert (tmp_path / "out" / "di_init000.jsonl").exists()

    @pytest.mark.parametrize("mangle", [
        lambda c: c.__setitem__("inits", "nope"),
        lambda c: c.__setitem__("sim", {"dt": 0.5}),
        lambda c: c.__setitem__("seeds", [0]),
    ])
    def test_config_errors(self, tmp_path, mangle):
        conf = self.di_config(tmp_path / "out")
        mangle(conf)
        code, _ = run_cli(["simulate-di",
                           "--config", write_config(tmp_path, conf)])
        assert code == 2


class TestVerify:
    def test_invariant_battery_via_cli(self):
        code, text = run_cli(["verify", "--battery", "invariants"])
        assert code == 0
        lines = [l for l in text.splitlines() if l.startswith(("PASS", "FAIL"))]
        assert len(lines) >= 20
        assert all(l.startswith("PASS") for l in lines)
        assert "checks passed" in text
