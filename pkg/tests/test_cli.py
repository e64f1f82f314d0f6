import json

import numpy as np
import pytest

from sl0lab import fileio, svgplot
from sl0lab.cli import L1_REFERENCE_PATH, main, parse_grid
from sl0lab.ensembles import Suite
from sl0lab.phase import PhaseGridSpec, run_phase_grid
from sl0lab.solvers import Algorithm


class TestParseGrid:
    def test_range_syntax(self):
        assert parse_grid("0.1:0.5:0.1") == (0.1, 0.2, 0.3, 0.4, 0.5)

    def test_comma_list(self):
        assert parse_grid("0.25,0.5") == (0.25, 0.5)

    def test_fine_range_does_not_accumulate_error(self):
        grid = parse_grid("0.025:1.0:0.025")
        assert len(grid) == 40
        assert grid[-1] == 1.0
        assert grid[11] == 0.3


class TestSolveCommand:
    def test_easy_point_exits_zero(self, capsys):
        code = main(
            "solve --algo sl0-mss --N 800 --delta 0.5 --rho 0.2 "
            "--suite rademacher --seed 1".split()
        )
        payload = json.loads(capsys.readouterr().out)
        assert code == 0
        assert payload["success"] is True
        assert payload["rel_error_sq"] < 1e-4
        assert payload["residual_feasibility"] <= 1e-6

    def test_hopeless_point_exits_one(self, capsys):
        code = main(
            "solve --algo sl0-mss --N 800 --delta 0.05 --rho 1.0 "
            "--suite rademacher --seed 1".split()
        )
        payload = json.loads(capsys.readouterr().out)
        assert code == 1
        assert payload["success"] is False

    def test_invalid_delta_exits_two(self, capsys):
        code = main("solve --algo sl0-mss --N 100 --delta 1.5 --rho 0.2".split())
        assert code == 2

    def test_env_seed_used_as_default(self, capsys, monkeypatch):
        monkeypatch.setenv("SL0LAB_SEED", "77")
        code = main("solve --algo iht --N 100 --delta 0.5 --rho 0.1".split())
        payload = json.loads(capsys.readouterr().out)
        assert code in (0, 1)
        assert payload["seed"] == 77

    def test_config_file_flags_win(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"algo": "iht", "N": 100, "delta": 0.5,
                                   "rho": 0.1, "seed": 3}))
        main(["solve", "--config", str(cfg)])
        payload = json.loads(capsys.readouterr().out)
        assert payload["seed"] == 3
        main(["solve", "--config", str(cfg), "--seed", "5"])
        payload = json.loads(capsys.readouterr().out)
        assert payload["seed"] == 5


PHASE_ARGS = (
    "phase --algo iht --suite rademacher --N 80 --delta-grid 0.5 "
    "--rho-grid 0.05:0.5:0.05 --trials 3 --seed 9"
)


class TestPhaseCommand:
    def test_writes_two_files_with_expected_rows(self, tmp_path):
        prefix = tmp_path / "run"
        code = main(PHASE_ARGS.split() + ["--output", str(prefix)])
        assert code == 0
        cells_lines = (tmp_path / "run.cells.csv").read_text().splitlines()
        assert cells_lines[0] == "# sl0lab-schema v1"
        assert cells_lines[1] == "delta,rho,trials,successes"
        assert len(cells_lines) == 2 + 10  # one row per rho value
        transition_lines = (tmp_path / "run.transition.csv").read_text().splitlines()
        assert transition_lines[1] == "delta,rho_star,method,beta0,beta1"
        assert len(transition_lines) == 3

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(PHASE_ARGS.split() + ["--output", str(a)])
        main(PHASE_ARGS.split() + ["--output", str(b)])
        assert (tmp_path / "a.cells.csv").read_bytes() == (
            tmp_path / "b.cells.csv"
        ).read_bytes()
        assert (tmp_path / "a.transition.csv").read_bytes() == (
            tmp_path / "b.transition.csv"
        ).read_bytes()

    def test_json_format(self, tmp_path):
        prefix = tmp_path / "run"
        code = main(PHASE_ARGS.split() + ["--output", str(prefix),
                                          "--format", "json"])
        assert code == 0
        payload = json.loads((tmp_path / "run.cells.json").read_text())
        assert payload["schema"] == "sl0lab-schema v1"
        assert len(payload["cells"]) == 10

    def test_missing_output_exits_two(self):
        assert main(PHASE_ARGS.split()) == 2

    def test_bad_grid_exits_two(self, tmp_path):
        args = PHASE_ARGS.replace("0.05:0.5:0.05", "0.5,0.4").split()
        assert main(args + ["--output", str(tmp_path / "x")]) == 2

    def test_all_success_stub_curve_clamps_to_max_rho(self, tmp_path):
        # Oracle-solver sweep: every cell succeeds, so the written curve
        # sits at the top of the density grid.
        spec = PhaseGridSpec(
            algorithm=Algorithm.IHT,
            suite=Suite.USE_RADEMACHER,
            N=60,
            delta_values=(0.5, 1.0),
            rho_values=(0.1, 0.5, 0.9),
            trials=2,
            base_seed=0,
        )
        cells, curve = run_phase_grid(spec, solver_override=lambda inst: inst.x)
        path = tmp_path / "stub.transition.csv"
        fileio.write_transition_csv(path, curve)
        back = fileio.read_transition_csv(path)
        assert back.rho_star == (0.9, 0.9)


class TestTimingCommand:
    def test_end_to_end(self, tmp_path):
        prefix = tmp_path / "p"
        main(PHASE_ARGS.split() + ["--output", str(prefix)])
        out = tmp_path / "timing.csv"
        code = main(
            [
                "timing", "--algo", "iht", "--suite", "rademacher",
                "--N-grid", "60,80", "--delta-grid", "0.5",
                "--rho-grid", "0.05,0.1", "--trials", "2", "--seed", "9",
                "--transition", str(tmp_path / "p.transition.csv"),
                "--output", str(out),
            ]
        )
        assert code == 0
        rows = fileio.read_timing_csv(out)
        assert len(rows) == 4
        assert {r[0] for r in rows} == {60, 80}

    def test_missing_transition_exits_two(self, tmp_path):
        code = main(
            ["timing", "--algo", "iht", "--output", str(tmp_path / "t.csv")]
        )
        assert code == 2


def write_toy_transition(path, rho_star=0.4):
    lines = ["# sl0lab-schema v1", "delta,rho_star,method,beta0,beta1"]
    for d in (0.2, 0.5, 0.8):
        lines.append(f"{d},{rho_star},logistic,6.0,-15.0")
    path.write_text("\n".join(lines) + "\n")


class TestPlotCommand:
    def test_two_curves_and_legend(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_toy_transition(a, 0.3)
        write_toy_transition(b, 0.5)
        out = tmp_path / "plot.svg"
        code = main(
            ["plot", "--kind", "transition", "--input", str(a), str(b),
             "--labels", "first", "second", "--output", str(out)]
        )
        assert code == 0
        svg = out.read_text()
        assert svg.count("<polyline") == 2
        assert "first" in svg and "second" in svg

    def test_reference_overlay_only_when_requested(self, tmp_path):
        a = tmp_path / "a.csv"
        write_toy_transition(a)
        plain, overlaid = tmp_path / "p.svg", tmp_path / "o.svg"
        main(["plot", "--input", str(a), "--output", str(plain)])
        main(["plot", "--input", str(a), "--output", str(overlaid),
              "--reference", str(L1_REFERENCE_PATH)])
        assert plain.read_text().count("<polyline") == 1
        assert overlaid.read_text().count("<polyline") == 2
        assert "stroke-dasharray" in overlaid.read_text()

    def test_deterministic_bytes(self, tmp_path):
        a = tmp_path / "a.csv"
        write_toy_transition(a)
        o1, o2 = tmp_path / "1.svg", tmp_path / "2.svg"
        main(["plot", "--input", str(a), "--output", str(o1)])
        main(["plot", "--input", str(a), "--output", str(o2)])
        assert o1.read_bytes() == o2.read_bytes()

    def test_malformed_row_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text(
            "# sl0lab-schema v1\ndelta,rho_star,method,beta0,beta1\n"
            "0.2,0.4,logistic,6.0,-15.0\n0.5,oops,logistic,1,2\n"
        )
        code = main(["plot", "--input", str(bad),
                     "--output", str(tmp_path / "x.svg")])
        assert code == 2
        assert "line 4" in capsys.readouterr().err

    def test_timing_plots(self, tmp_path):
        rows_csv = tmp_path / "t.csv"
        rows_csv.write_text(
            "# sl0lab-schema v1\nN,delta,rho,trials,successes,mean_time_s\n"
            "100,0.5,0.1,3,3,0.01\n100,0.8,0.1,3,3,0.02\n"
            "200,0.5,0.1,3,3,0.05\n200,0.8,0.1,3,2,0.07\n"
        )
        out1 = tmp_path / "d.svg"
        assert main(["plot", "--kind", "timing-delta", "--input", str(rows_csv),
                     "--output", str(out1)]) == 0
        assert out1.read_text().count("<polyline") == 1
        out2 = tmp_path / "n.svg"
        assert main(["plot", "--kind", "timing-n", "--input", str(rows_csv),
                     "--delta", "0.5", "--output", str(out2)]) == 0
        assert out2.read_text().count("<polyline") == 1


class TestFileIo:
    def test_timing_csv_round_trip_empty_time(self, tmp_path):
        from sl0lab.timing import TimingRow

        rows = [
            TimingRow(N=100, delta=0.5, rho=0.1, trials=3, successes=0,
                      mean_time_s=None, records=()),
            TimingRow(N=100, delta=0.5, rho=0.2, trials=3, successes=2,
                      mean_time_s=0.125, records=()),
        ]
        path = tmp_path / "t.csv"
        fileio.write_timing_csv(path, rows)
        back = fileio.read_timing_csv(path)
        assert back[0][5] is None
        assert back[1][5] == 0.125

    def test_files_end_with_lf(self, tmp_path):
        from sl0lab.timing import TimingRow

        path = tmp_path / "t.csv"
        fileio.write_timing_csv(
            path,
            [TimingRow(N=1, delta=0.5, rho=0.1, trials=1, successes=1,
                       mean_time_s=1.0, records=())],
        )
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")

    def test_reference_asset_parses(self):
        xs, ys = fileio.read_curve_csv(L1_REFERENCE_PATH)
        assert len(xs) == 40
        idx = xs.index(0.5)
        assert ys[idx] == pytest.approx(0.386, abs=0.001)


class TestSvgPlot:
    def test_log_axes(self):
        svg = svgplot.render_line_plot(
            [svgplot.Curve("c", [100, 1000, 10000], [0.1, 1.0, 10.0])],
            x_log=True,
            y_log=True,
        )
        assert "<svg" in svg and svg.count("<polyline") == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            svgplot.render_line_plot([])
