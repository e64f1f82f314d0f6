"""Command-line front end: solve | phase | timing | plot.

Configuration can come from flags or from a JSON file (``--config``); flags
win.  The default seed is read from the ``SL0LAB_SEED`` environment variable
when no explicit seed is given.  Exit codes: 0 success (for ``solve``: the
reconstruction met the success criterion), 1 criterion not met, 2 bad
configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fileio, svgplot
from .ensembles import Suite, make_instance
from .phase import PhaseGridSpec, run_phase_grid, success_criterion
from .solvers import Algorithm, MssImplementation, reconstruct
from .timing import TimingSpec, run_timing

_SUITES = {"rademacher": Suite.USE_RADEMACHER, "gaussian": Suite.USE_GAUSSIAN}
_ALGORITHMS = {a.value: a for a in Algorithm}
_IMPLS = {i.value: i for i in MssImplementation}

L1_REFERENCE_PATH = Path(__file__).parent / "data" / "l1_reference.csv"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Merged flag/file configuration for one command invocation."""

    experiment: str
    algorithm: Algorithm | None = None
    suite: Suite = Suite.USE_RADEMACHER
    impl: MssImplementation = MssImplementation.AUTO
    N: int = 800
    N_values: tuple[int, ...] = (200, 400, 800)
    delta: float | None = None
    rho: float | None = None
    delta_values: tuple[float, ...] | None = None
    rho_values: tuple[float, ...] | None = None
    trials: int = 10
    seed: int = 0
    margin: float = 0.025
    early_cutoff: int = 3
    parallelism: int = 1
    output: str | None = None
    format: str = "csv"
    max_iters: int = 300
    transition_path: str | None = None

    def __post_init__(self):
        if self.parallelism < 0:
            raise ConfigError(f"parallelism must be >= 0, got {self.parallelism}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse ``a:b:step`` ranges or comma-separated value lists."""
    text = text.strip()
    if ":" in text:
        pieces = text.split(":")
        if len(pieces) != 3:
            raise ConfigError(f"grid range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in pieces)
        if step <= 0:
            raise ConfigError(f"grid step must be positive, got {step}")
        count = int(round((stop - start) / step)) + 1
        values = tuple(round(start + i * step, 12) for i in range(count))
        return tuple(v for v in values if v <= stop + 1e-12)
    return tuple(round(float(p), 12) for p in text.split(",") if p.strip())


def parse_int_grid(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


def _env_seed() -> int:
    raw = os.environ.get("SL0LAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"SL0LAB_SEED must be an integer, got {raw!r}") from None


def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return cfg


def _pick(args, cfg, key, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in cfg:
        return cfg[key]
    return default


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sl0lab",
        description="Sparse-recovery solvers and phase-transition benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags win")
        p.add_argument("--algo", choices=sorted(_ALGORITHMS))
        p.add_argument("--suite", choices=sorted(_SUITES))
        p.add_argument("--impl", choices=sorted(_IMPLS), help="MSS update path")
        p.add_argument("--seed", type=int)

    solve = sub.add_parser("solve", help="reconstruct one seeded instance")
    add_common(solve)
    solve.add_argument("--N", type=int)
    solve.add_argument("--delta", type=float)
    solve.add_argument("--rho", type=float)
    solve.add_argument("--max-iters", type=int, dest="max_iters")

    phase = sub.add_parser("phase", help="run a phase-transition sweep")
    add_common(phase)
    phase.add_argument("--N", type=int)
    phase.add_argument("--delta-grid", dest="delta_grid")
    phase.add_argument("--rho-grid", dest="rho_grid")
    phase.add_argument("--trials", type=int)
    phase.add_argument("--early-cutoff", type=int, dest="early_cutoff")
    phase.add_argument("--parallelism", type=int)
    phase.add_argument("--format", choices=("csv", "json"))
    phase.add_argument("--output", help="output prefix for the two result files")

    timing = sub.add_parser("timing", help="time solves below a transition")
    add_common(timing)
    timing.add_argument("--N-grid", dest="n_grid")
    timing.add_argument("--delta-grid", dest="delta_grid")
    timing.add_argument("--rho-grid", dest="rho_grid")
    timing.add_argument("--margin", type=float)
    timing.add_argument("--trials", type=int)
    timing.add_argument("--transition", help="transition CSV from a phase run")
    timing.add_argument("--format", choices=("csv", "json"))
    timing.add_argument("--output")

    plot = sub.add_parser("plot", help="render result CSVs to SVG")
    plot.add_argument(
        "--kind",
        choices=("transition", "timing-delta", "timing-n"),
        default="transition",
    )
    plot.add_argument("--input", nargs="+", required=True)
    plot.add_argument("--labels", nargs="+")
    plot.add_argument("--reference", help="overlay a (delta,rho) reference CSV")
    plot.add_argument("--delta", type=float, default=0.5,
                      help="slice for timing-n plots")
    plot.add_argument("--N", type=int, help="slice for timing-delta plots")
    plot.add_argument("--title")
    plot.add_argument("--output", required=True)

    return parser


def _solve_config(args, cfg) -> RunConfig:
    return RunConfig(
        experiment="solve",
        algorithm=_ALGORITHMS[_pick(args, cfg, "algo", "sl0-mss")],
        suite=_SUITES[_pick(args, cfg, "suite", "rademacher")],
        impl=_IMPLS[_pick(args, cfg, "impl", "auto")],
        N=int(_pick(args, cfg, "N", 800)),
        delta=_pick(args, cfg, "delta", None),
        rho=_pick(args, cfg, "rho", None),
        seed=int(_pick(args, cfg, "seed", _env_seed())),
        max_iters=int(_pick(args, cfg, "max_iters", 300)),
    )


def cmd_solve(config: RunConfig) -> int:
    if config.delta is None or config.rho is None:
        raise ConfigError("solve needs --delta and --rho")
    if not 0.0 < config.delta <= 1.0:
        raise ConfigError(f"delta must be in (0, 1], got {config.delta}")
    if not 0.0 < config.rho <= 1.0:
        raise ConfigError(f"rho must be in (0, 1], got {config.rho}")
    instance = make_instance(
        config.N, config.delta, config.rho, config.suite, config.seed
    )
    result = reconstruct(
        config.algorithm, instance, impl=config.impl, max_iters=config.max_iters
    )
    diff = result.x_hat - instance.x
    rel_err_sq = float(np.dot(diff, diff) / np.dot(instance.x, instance.x))
    ok = success_criterion(result.x_hat, instance.x)
    payload = {
        "algorithm": config.algorithm.value,
        "suite": config.suite.value,
        "N": instance.N,
        "n": instance.n,
        "k": instance.k,
        "seed": config.seed,
        "success": ok,
        "rel_error_sq": rel_err_sq,
        "outer_iterations": result.outer_iterations,
        "inner_iterations": result.inner_iterations_total,
        "elapsed_s": result.elapsed,
        "residual_feasibility": result.residual_feasibility,
    }
    print(json.dumps(payload, indent=2))
    return 0 if ok else 1


def _phase_config(args, cfg) -> RunConfig:
    delta_grid = _pick(args, cfg, "delta_grid", None)
    rho_grid = _pick(args, cfg, "rho_grid", None)
    return RunConfig(
        experiment="phase",
        algorithm=_ALGORITHMS[_pick(args, cfg, "algo", "sl0-mss")],
        suite=_SUITES[_pick(args, cfg, "suite", "rademacher")],
        impl=_IMPLS[_pick(args, cfg, "impl", "auto")],
        N=int(_pick(args, cfg, "N", 800)),
        delta_values=parse_grid(delta_grid) if delta_grid else None,
        rho_values=parse_grid(rho_grid) if rho_grid else None,
        trials=int(_pick(args, cfg, "trials", 10)),
        seed=int(_pick(args, cfg, "seed", _env_seed())),
        early_cutoff=int(_pick(args, cfg, "early_cutoff", 3)),
        parallelism=int(_pick(args, cfg, "parallelism", 1)),
        format=_pick(args, cfg, "format", "csv"),
        output=_pick(args, cfg, "output", None),
    )


def cmd_phase(config: RunConfig) -> int:
    if not config.output:
        raise ConfigError("phase needs --output PREFIX")
    kwargs = {}
    if config.delta_values:
        kwargs["delta_values"] = config.delta_values
    if config.rho_values:
        kwargs["rho_values"] = config.rho_values
    try:
        spec = PhaseGridSpec(
            algorithm=config.algorithm,
            suite=config.suite,
            N=config.N,
            trials=config.trials,
            base_seed=config.seed,
            early_cutoff=config.early_cutoff,
            mss_impl=config.impl,
            **kwargs,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cells, curve = run_phase_grid(spec, parallelism=config.parallelism)
    prefix = config.output
    if config.format == "json":
        fileio.write_cells_json(f"{prefix}.cells.json", cells)
        fileio.write_transition_json(f"{prefix}.transition.json", curve)
    else:
        fileio.write_cells_csv(f"{prefix}.cells.csv", cells)
        fileio.write_transition_csv(f"{prefix}.transition.csv", curve)
    return 0


def _timing_config(args, cfg) -> RunConfig:
    n_grid = _pick(args, cfg, "n_grid", None)
    delta_grid = _pick(args, cfg, "delta_grid", None)
    rho_grid = _pick(args, cfg, "rho_grid", None)
    config = RunConfig(
        experiment="timing",
        algorithm=_ALGORITHMS[_pick(args, cfg, "algo", "sl0-mss")],
        suite=_SUITES[_pick(args, cfg, "suite", "rademacher")],
        impl=_IMPLS[_pick(args, cfg, "impl", "auto")],
        N_values=parse_int_grid(n_grid) if isinstance(n_grid, str) else
        tuple(n_grid) if n_grid else (200, 400, 800),
        delta_values=parse_grid(delta_grid) if delta_grid else None,
        rho_values=parse_grid(rho_grid) if rho_grid else None,
        margin=float(_pick(args, cfg, "margin", 0.025)),
        trials=int(_pick(args, cfg, "trials", 10)),
        seed=int(_pick(args, cfg, "seed", _env_seed())),
        format=_pick(args, cfg, "format", "csv"),
        output=_pick(args, cfg, "output", None),
        transition_path=_pick(args, cfg, "transition", None),
    )
    return config


def cmd_timing(config: RunConfig) -> int:
    if not config.output:
        raise ConfigError("timing needs --output FILE")
    if not config.transition_path:
        raise ConfigError("timing needs --transition CSV from a phase run")
    curve = fileio.read_transition_csv(config.transition_path)
    kwargs = {}
    if config.delta_values:
        kwargs["delta_values"] = config.delta_values
    if config.rho_values:
        kwargs["rho_values"] = config.rho_values
    try:
        spec = TimingSpec(
            transition=curve,
            suite=config.suite,
            N_values=config.N_values,
            margin=config.margin,
            trials=config.trials,
            base_seed=config.seed,
            mss_impl=config.impl,
            **kwargs,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = run_timing(spec, config.algorithm)
    if config.format == "json":
        fileio.write_timing_json(config.output, rows)
    else:
        fileio.write_timing_csv(config.output, rows)
    return 0


def cmd_plot(args) -> int:
    labels = args.labels or [Path(p).stem for p in args.input]
    if len(labels) != len(args.input):
        raise ConfigError("--labels must match --input in length")
    curves = []
    if args.kind == "transition":
        for label, path in zip(labels, args.input):
            curve = fileio.read_transition_csv(path)
            curves.append(
                svgplot.Curve(label=label, xs=curve.delta_values, ys=curve.rho_star)
            )
        if args.reference:
            xs, ys = fileio.read_curve_csv(args.reference)
            curves.append(
                svgplot.Curve(
                    label="l1 reference",
                    xs=xs,
                    ys=ys,
                    dashed=True,
                    color=svgplot.REFERENCE_STYLE[0],
                )
            )
        svg = svgplot.render_line_plot(
            curves,
            title=args.title or "Phase transitions",
            x_label="indeterminacy delta = n/N",
            y_label="density rho = k/n",
            x_range=(0.0, 1.0),
            y_range=(0.0, 1.0),
        )
    elif args.kind == "timing-delta":
        from .timing import TimingRow

        for label, path in zip(labels, args.input):
            raw = fileio.read_timing_csv(path)
            big_n = args.N or max(r[0] for r in raw)
            rows = [
                TimingRow(N=r[0], delta=r[1], rho=r[2], trials=r[3],
                          successes=r[4], mean_time_s=r[5], records=())
                for r in raw
            ]
            from .timing import aggregate_by_delta

            agg = aggregate_by_delta(rows, big_n)
            if not agg:
                raise ConfigError(f"{path}: no successful rows at N={big_n}")
            curves.append(
                svgplot.Curve(
                    label=label, xs=[a[0] for a in agg], ys=[a[1] for a in agg]
                )
            )
        svg = svgplot.render_line_plot(
            curves,
            title=args.title or "Reconstruction time vs indeterminacy",
            x_label="indeterminacy delta = n/N",
            y_label="mean time over successes [s]",
        )
    else:  # timing-n
        from .timing import TimingRow, aggregate_by_size

        for label, path in zip(labels, args.input):
            raw = fileio.read_timing_csv(path)
            rows = [
                TimingRow(N=r[0], delta=r[1], rho=r[2], trials=r[3],
                          successes=r[4], mean_time_s=r[5], records=())
                for r in raw
            ]
            agg = aggregate_by_size(rows, args.delta)
            if not agg:
                raise ConfigError(
                    f"{path}: no successful rows at delta={args.delta}"
                )
            curves.append(
                svgplot.Curve(
                    label=label, xs=[a[0] for a in agg], ys=[a[1] for a in agg]
                )
            )
        svg = svgplot.render_line_plot(
            curves,
            title=args.title or "Reconstruction time vs problem size",
            x_label="signal length N",
            y_label="mean time over successes [s]",
            x_log=True,
            y_log=True,
        )
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "plot":
            return cmd_plot(args)
        cfg = _load_config_file(args.config) if args.config else {}
        if args.command == "solve":
            return cmd_solve(_solve_config(args, cfg))
        if args.command == "phase":
            return cmd_phase(_phase_config(args, cfg))
        if args.command == "timing":
            return cmd_timing(_timing_config(args, cfg))
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, fileio.MalformedFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
