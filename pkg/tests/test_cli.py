import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from groupdyn.cli import main
from groupdyn.fitting import Observations, sample_groups
from groupdyn.analytic import GroupScalingParams


def invoke(args, capsys):
    try:
        code = main([str(a) for a in args])
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


class TestPsi:
    def test_table(self, capsys):
        code, out, _ = invoke(["psi", "--beta", 1, "--n-t", 8, "--n-min", 1, "--n-max", 40, "--step", 1], capsys)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 40
        assert rows[0] == {"n": "1", "psi": "0"}
        assert float(rows[2]["psi"]) == pytest.approx(0.120985, abs=5e-7)

    def test_json(self, capsys):
        code, out, _ = invoke(["psi", "--beta", 1, "--n-t", 8, "--n-max", 5, "--format", "json"], capsys)
        doc = json.loads(out)
        assert code == 0 and [r["n"] for r in doc] == [1, 2, 3, 4, 5] and set(doc[0]) == {"n", "psi"}

    def test_round(self, capsys):
        _, out, _ = invoke(["psi", "--beta", 1, "--n-t", 8, "--n-max", 3, "--round", 3], capsys)
        assert out.splitlines()[-1] == "3,0.121"

    @pytest.mark.parametrize(
        "flags, name",
        [
            (["--beta", "1.5", "--n-t", "8"], "--beta"),
            (["--beta", "1", "--n-t", "-3"], "--n-t"),
            (["--beta", "1", "--n-t", "8", "--n-min", "0.5"], "--n-min"),
            (["--beta", "1", "--n-t", "8", "--step", "0"], "--step"),
            (["--beta", "x", "--n-t", "8"], "--beta"),
        ],
    )
    def test_bad_flags(self, capsys, flags, name):
        code, _, err = invoke(["psi", *flags], capsys)
        assert code == 2 and name in err

    def test_out_file(self, tmp_path, capsys):
        target = tmp_path / "psi.csv"
        assert invoke(["psi", "--beta", 1, "--n-t", 8, "--out", target], capsys)[0] == 0
        assert target.read_text().startswith("n,psi\n1,0\n")


class TestLadder:
    def test_wiki(self, capsys):
        code, out, _ = invoke(["ladder", "--beta", 1, "--seed-scale", 8, "--levels", 4], capsys)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and [float(r["scale"]) for r in rows] == [8, 28, 108, 428]
        assert [r["level"] for r in rows] == ["0", "1", "2", "3"]

    def test_dunbar(self, capsys):
        _, out, _ = invoke(["ladder", "--beta", 0.875, "--seed-scale", 14, "--levels", 4, "--format", "json"], capsys)
        assert [r["scale"] for r in json.loads(out)] == [14, 45.5, 155.75, 541.625]

    def test_single_level(self, capsys):
        _, out, _ = invoke(["ladder", "--beta", 1, "--seed-scale", 8, "--levels", 1], capsys)
        assert len(out.splitlines()) == 2

    def test_bad_levels(self, capsys):
        code, _, err = invoke(["ladder", "--beta", 1, "--seed-scale", 8, "--levels", 0], capsys)
        assert code == 2 and "--levels" in err

    def test_non_growing(self, capsys):
        code, _, _ = invoke(["ladder", "--beta", 0.25, "--seed-scale", 8, "--levels", 3], capsys)
        assert code == 3


class TestSimulate:
    def run(self, tmp_path, capsys, name, *extra):
        out = tmp_path / f"{name}.csv"
        args = ["simulate", "--beta", 1, "--n-t", 8, "--events", 20_000, "--burn-in", 100, "--seed", 7, "--out", out, *extra]
        code, _, err = invoke(args, capsys)
        return code, out, err

    def test_outputs(self, tmp_path, capsys):
        code, out, _ = self.run(tmp_path, capsys, "h", "--log", tmp_path / "events.csv")
        assert code == 0
        assert out.read_text().startswith("n,weight\n2,")
        side = json.loads(out.with_suffix(".json").read_text())
        assert side["config"]["master_seed"] == 7 and 0 <= side["tv_distance"] < 1
        assert (tmp_path / "events.csv").read_text().startswith("ordinal,transition,size_before,size_after,dt\n0,join,2,3,")

    def test_repeatable(self, tmp_path, capsys):
        _, a, _ = self.run(tmp_path, capsys, "a")
        _, b, _ = self.run(tmp_path, capsys, "b")
        assert a.read_bytes() == b.read_bytes()

    def test_replicas_total(self, tmp_path, capsys):
        _, merged, _ = self.run(tmp_path, capsys, "m", "--replicas", 4)
        side = json.loads(merged.with_suffix(".json").read_text())
        weights = [float(r["weight"]) for r in csv.DictReader(merged.open())]
        assert side["total_weight"] == pytest.approx(sum(weights), rel=1e-12)

    def test_unsatisfiable(self, tmp_path, capsys):
        code, _, err = invoke(["simulate", "--beta", 1, "--n-t", 8, "--events", 10, "--burn-in", 10, "--out", tmp_path / "x.csv"], capsys)
        assert code == 2 and "--burn-in" in err


class TestFit:
    def write(self, path, obs):
        with open(path, "w") as fh:
            obs.write_csv(fh)
        return path

    def test_report(self, tmp_path, capsys):
        obs = sample_groups(GroupScalingParams(1, 8), 3000, np.random.default_rng(0))
        src = self.write(tmp_path / "obs.csv", obs)
        code, out, _ = invoke(["fit", "--input", src, "--out", tmp_path / "fit.json"], capsys)
        assert code == 0 and "implied_mode=3" in out
        doc = json.loads((tmp_path / "fit.json").read_text())
        for key in ("beta_hat", "n_t_hat", "log_likelihood", "chi_square", "dof", "implied_mode", "ladder", "config"):
            assert key in doc
        assert doc["ladder"][0].keys() == {"scale", "mode"}

    def test_scaled_counts(self, tmp_path, capsys):
        obs = sample_groups(GroupScalingParams(0.875, 45.5), 2000, np.random.default_rng(1))
        a = self.write(tmp_path / "a.csv", obs)
        b = self.write(tmp_path / "b.csv", obs.scaled(10))
        invoke(["fit", "--input", a, "--out", tmp_path / "a.json"], capsys)
        invoke(["fit", "--input", b, "--out", tmp_path / "b.json"], capsys)
        ra, rb = (json.loads((tmp_path / f).read_text()) for f in ("a.json", "b.json"))
        assert (ra["beta_hat"], ra["n_t_hat"]) == (rb["beta_hat"], rb["n_t_hat"])

    def test_empty_file(self, tmp_path, capsys):
        src = tmp_path / "empty.csv"
        src.write_text("")
        assert invoke(["fit", "--input", src], capsys)[0] == 2

    def test_bad_line(self, tmp_path, capsys):
        src = tmp_path / "bad.csv"
        src.write_text("n,count\n2,4\n3,four\n")
        code, _, err = invoke(["fit", "--input", src], capsys)
        assert code == 2 and "line 3" in err

    def test_unidentifiable(self, tmp_path, capsys):
        src = self.write(tmp_path / "one.csv", Observations({4: 10}))
        assert invoke(["fit", "--input", src], capsys)[0] == 3

    def test_bad_range(self, tmp_path, capsys):
        src = self.write(tmp_path / "o.csv", Observations({4: 10, 5: 3}))
        code, _, err = invoke(["fit", "--input", src, "--tol", "0.5"], capsys)
        assert code == 2 and "--tol" in err
        code, _, err = invoke(["fit", "--input", src, "--beta-range", "0.9,0.2"], capsys)
        assert code == 2 and "--beta-range" in err

    def test_simulate_then_fit(self, tmp_path, capsys):
        hist = tmp_path / "h.csv"
        invoke(["simulate", "--beta", 1, "--n-t", 8, "--events", 400_000, "--burn-in", 1000, "--seed", 3, "--out", hist], capsys)
        rows = list(csv.DictReader(hist.open()))
        obs = Observations.from_weights([int(r["n"]) for r in rows], [float(r["weight"]) for r in rows], 50_000)
        src = self.write(tmp_path / "obs.csv", obs)
        code, out, _ = invoke(["fit", "--input", src, "--out", tmp_path / "f.json"], capsys)
        assert code == 0 and json.loads((tmp_path / "f.json").read_text())["implied_mode"] == 3


def test_bands(capsys):
    code, out, _ = invoke(["bands"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["product"] for r in rows] == ["750", "750", "750"]
    assert [r["name"] for r in rows] == ["alpha", "beta", "gamma-fast"]
    _, out, _ = invoke(["bands", "--format", "json"], capsys)
    assert [r["product"] for r in json.loads(out)] == [750.0, 750.0, 750.0]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "groupdyn", "bands"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("name,")
    res = subprocess.run([sys.executable, "-m", "groupdyn"], capture_output=True, text=True)
    assert res.returncode == 2
