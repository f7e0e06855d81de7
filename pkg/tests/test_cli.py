import json
import os

import numpy as np
import pytest

from dipoloc.cli import main


def read_csv(path):
    meta, header, rows = {}, None, []
    for line in open(path):
        line = line.rstrip("\n")
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        elif line.startswith("# schema") or line.startswith("#"):
            meta["schema"] = line.split("=", 1)[1]
        elif header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, header, rows


def run(argv):
    return main(argv)


class TestDynamics:
    def test_schema_and_determinism(self, tmp_path):
        args = [
            "dynamics", "--n", "5", "--p", "0.7", "--w", "6", "--realizations", "3",
            "--seed", "7", "--time-points", "12", "--time-min", "0.1",
            "--time-max", "1e17",
        ]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out", str(out_a)]) == 0
        assert run(args + ["--out", str(out_b)]) == 0
        meta, header, rows = read_csv(out_a / "l_of_t.csv")
        assert header == ["time", "mean_L", "se_L"]
        assert len(rows) == 12
        assert meta["schema"].startswith("dipoloc.l_of_t")
        assert (out_a / "l_of_t.csv").read_bytes() == (out_b / "l_of_t.csv").read_bytes()
        assert (out_a / "summary.json").read_bytes() == (out_b / "summary.json").read_bytes()

    def test_clean_lattice_reaches_full_size(self, tmp_path):
        out = tmp_path / "clean"
        assert run([
            "dynamics", "--n", "5", "--p", "1", "--w", "0", "--realizations", "1",
            "--seed", "1", "--time-points", "8", "--out", str(out),
        ]) == 0
        _, _, rows = read_csv(out / "l_of_t.csv")
        final_l = float(rows[-1][1])
        # clean-lattice oracle: the wavepacket spreads over the whole lattice
        assert final_l >= 5.0

    def test_metadata_embedded(self, tmp_path):
        out = tmp_path / "meta"
        run([
            "dynamics", "--n", "5", "--p", "0.7", "--w", "6", "--realizations", "2",
            "--seed", "99", "--time-points", "8", "--out", str(out),
        ])
        summary = json.loads((out / "summary.json").read_text())
        md = summary["metadata"]
        assert md["master_seed"] == 99
        assert md["rng_id"] == "numpy.random.PCG64"
        assert md["config"]["n"] == 5
        assert "software_version" in md


class TestIpr:
    def test_outputs(self, tmp_path):
        out = tmp_path / "ipr"
        assert run([
            "ipr", "--n", "6", "--p", "0.4", "--w", "12", "--realizations", "4",
            "--seed", "3", "--out", str(out),
        ]) == 0
        meta, header, rows = read_csv(out / "ipr_hist.csv")
        assert header == ["bin_lo", "bin_hi", "count"]
        assert len(rows) == 100
        total = sum(int(r[2]) for r in rows)
        assert total == 4 * round(0.4 * 216)
        assert float(meta["i_min_ratio_min"]) >= 1.0


class TestCollapse:
    def test_outputs(self, tmp_path):
        out = tmp_path / "col"
        assert run([
            "collapse", "--n", "7", "--p", "0.9", "--w", "40", "--realizations", "20",
            "--seed", "5", "--time-points", "6", "--out", str(out),
        ]) == 0
        fit = json.loads((out / "collapse_fit.json").read_text())
        assert fit["loc_length"] > 0
        assert fit["sigma"] > 0
        assert 0 <= fit["goodness"] <= 1
        _, header, rows = read_csv(out / "shell_hist.csv")
        assert header == ["radius", "x_lo", "x_hi", "density"]
        assert rows


class TestPhaseScan:
    def test_grid_csv(self, tmp_path):
        out = tmp_path / "scan"
        assert run([
            "phase-scan", "--n", "5", "--p-list", "0.5,1.0", "--w-list", "0.5,40",
            "--realizations", "3", "--seed", "11", "--time-points", "6",
            "--out", str(out),
        ]) == 0
        _, header, rows = read_csv(out / "phase_grid.csv")
        assert header == ["p", "w", "mean_final_L", "edge_fraction", "classification"]
        assert len(rows) == 4
        classes = {(r[0], r[1]): r[4] for r in rows}
        assert classes[("1.0", "0.5")] == "diffusive"
        assert {r[4] for r in rows} <= {"localized", "crossover", "diffusive"}


class TestScaling:
    def test_fit_outputs(self, tmp_path):
        out = tmp_path / "scal"
        assert run([
            "scaling", "--n-list", "21,31", "--p-grid", "0.2,0.4,0.6",
            "--out", str(out),
        ]) == 0
        fit = json.loads((out / "fit.json").read_text())
        assert fit["B"] > 0
        assert fit["N_list"] == [21, 31]
        _, header, rows = read_csv(out / "line_N21.csv")
        assert header == ["p", "w_solved"]
        assert len(rows) == 3
        ws = [float(r[1]) for r in rows]
        assert ws == sorted(ws)


class TestConfigFile:
    def test_config_and_override(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text(
            "[dynamics]\nn = 5\np = 0.7\nw = 6\nrealizations = 2\nseed = 21\n"
            "time_points = 8\n"
        )
        out = tmp_path / "out"
        assert run([
            "dynamics", "--config", str(cfg), "--out", str(out), "--seed", "22",
        ]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["metadata"]["master_seed"] == 22  # flag overrides file
        assert summary["metadata"]["config"]["p"] == 0.7  # file overrides default

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[dynamics]\nbogus = 1\n")
        assert run(["dynamics", "--config", str(cfg), "--out", str(tmp_path)]) == 2

    def test_missing_config_file(self, tmp_path):
        assert run(["dynamics", "--config", str(tmp_path / "none.ini")]) == 2


class TestExitCodes:
    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["dynamics", "--n", "not-a-number"])
        assert exc.value.code == 2

    def test_domain_error(self, tmp_path):
        # even N cannot host centered dynamics
        assert run([
            "dynamics", "--n", "4", "--p", "0.5", "--w", "5", "--realizations", "1",
            "--out", str(tmp_path),
        ]) in (2, 3)
