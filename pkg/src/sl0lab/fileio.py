"""Result-file schemas: versioned CSVs plus JSON mirrors.

All files are UTF-8 with LF line endings and start with the schema comment
line.  Floats are written with ``repr`` so values round-trip exactly and
repeated runs of a deterministic experiment produce byte-identical files.
The phase CSVs deliberately carry no timing columns.
"""

from __future__ import annotations

import json
from typing import Sequence

from .phase import FitMethod, LogisticFit, PhaseCell, TransitionCurve
from .timing import TimingRow

SCHEMA_LINE = "# sl0lab-schema v1"

CELLS_HEADER = "delta,rho,trials,successes"
TRANSITION_HEADER = "delta,rho_star,method,beta0,beta1"
TIMING_HEADER = "N,delta,rho,trials,successes,mean_time_s"
REFERENCE_HEADER = "delta,rho"


class MalformedFileError(ValueError):
    """A results file failed to parse; the message names the line."""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_cells_csv(path, cells: Sequence[PhaseCell]) -> None:
    lines = [SCHEMA_LINE, CELLS_HEADER]
    for c in cells:
        lines.append(f"{_fmt(c.delta)},{_fmt(c.rho)},{c.trials},{c.successes}")
    _write(path, lines)


def write_transition_csv(path, curve: TransitionCurve) -> None:
    lines = [SCHEMA_LINE, TRANSITION_HEADER]
    for i, delta in enumerate(curve.delta_values):
        lines.append(
            ",".join(
                [
                    _fmt(delta),
                    _fmt(curve.rho_star[i]),
                    curve.fit_method[i].value,
                    _fmt(curve.beta0[i]),
                    _fmt(curve.beta1[i]),
                ]
            )
        )
    _write(path, lines)


def write_timing_csv(path, rows: Sequence[TimingRow]) -> None:
    lines = [SCHEMA_LINE, TIMING_HEADER]
    for r in rows:
        lines.append(
            f"{r.N},{_fmt(r.delta)},{_fmt(r.rho)},{r.trials},"
            f"{r.successes},{_fmt(r.mean_time_s)}"
        )
    _write(path, lines)


def write_cells_json(path, cells: Sequence[PhaseCell]) -> None:
    payload = {
        "schema": "sl0lab-schema v1",
        "cells": [
            {
                "delta": c.delta,
                "rho": c.rho,
                "trials": c.trials,
                "successes": c.successes,
            }
            for c in cells
        ],
    }
    _write(path, [json.dumps(payload, indent=2, sort_keys=True)])


def write_transition_json(path, curve: TransitionCurve) -> None:
    payload = {
        "schema": "sl0lab-schema v1",
        "transition": [
            {
                "delta": d,
                "rho_star": curve.rho_star[i],
                "method": curve.fit_method[i].value,
                "beta0": curve.beta0[i],
                "beta1": curve.beta1[i],
            }
            for i, d in enumerate(curve.delta_values)
        ],
    }
    _write(path, [json.dumps(payload, indent=2, sort_keys=True)])


def write_timing_json(path, rows: Sequence[TimingRow]) -> None:
    payload = {
        "schema": "sl0lab-schema v1",
        "rows": [
            {
                "N": r.N,
                "delta": r.delta,
                "rho": r.rho,
                "trials": r.trials,
                "successes": r.successes,
                "mean_time_s": r.mean_time_s,
                "records": [
                    {"seed": t.seed, "success": t.success, "elapsed": t.elapsed}
                    for t in r.records
                ],
            }
            for r in rows
        ],
    }
    _write(path, [json.dumps(payload, indent=2, sort_keys=True)])


def _write(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _data_lines(path):
    """Yield (line_number, fields) for every non-comment, non-header row."""
    with open(path, encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            first = line.split(",")[0]
            try:
                float(first)
            except ValueError:
                # Column-name header row.
                continue
            yield number, line.split(",")


def _parse(path, number, value, kind, column):
    try:
        return kind(value)
    except ValueError:
        raise MalformedFileError(
            f"{path}: line {number}: bad {column} value {value!r}"
        ) from None


def read_transition_csv(path) -> TransitionCurve:
    deltas, stars, methods, beta0s, beta1s = [], [], [], [], []
    for number, fields in _data_lines(path):
        if len(fields) != 5:
            raise MalformedFileError(
                f"{path}: line {number}: expected 5 fields, got {len(fields)}"
            )
        deltas.append(_parse(path, number, fields[0], float, "delta"))
        stars.append(_parse(path, number, fields[1], float, "rho_star"))
        try:
            methods.append(FitMethod(fields[2]))
        except ValueError:
            raise MalformedFileError(
                f"{path}: line {number}: unknown method {fields[2]!r}"
            ) from None
        beta0s.append(
            _parse(path, number, fields[3], float, "beta0") if fields[3] else None
        )
        beta1s.append(
            _parse(path, number, fields[4], float, "beta1") if fields[4] else None
        )
    if not deltas:
        raise MalformedFileError(f"{path}: no transition rows found")
    return TransitionCurve(
        delta_values=tuple(deltas),
        rho_star=tuple(stars),
        fit_method=tuple(methods),
        beta0=tuple(beta0s),
        beta1=tuple(beta1s),
        fit_converged=tuple(True for _ in deltas),
        monotone_violation=tuple(0.0 for _ in deltas),
    )


def read_timing_csv(path) -> list[tuple[int, float, float, int, int, float | None]]:
    rows = []
    for number, fields in _data_lines(path):
        if len(fields) != 6:
            raise MalformedFileError(
                f"{path}: line {number}: expected 6 fields, got {len(fields)}"
            )
        rows.append(
            (
                _parse(path, number, fields[0], int, "N"),
                _parse(path, number, fields[1], float, "delta"),
                _parse(path, number, fields[2], float, "rho"),
                _parse(path, number, fields[3], int, "trials"),
                _parse(path, number, fields[4], int, "successes"),
                _parse(path, number, fields[5], float, "mean_time_s")
                if fields[5]
                else None,
            )
        )
    if not rows:
        raise MalformedFileError(f"{path}: no timing rows found")
    return rows


def read_curve_csv(path) -> tuple[list[float], list[float]]:
    """Two-column (delta, rho) curve, e.g. a reference transition."""
    xs, ys = [], []
    for number, fields in _data_lines(path):
        if len(fields) < 2:
            raise MalformedFileError(
                f"{path}: line {number}: expected at least 2 fields"
            )
        xs.append(_parse(path, number, fields[0], float, "delta"))
        ys.append(_parse(path, number, fields[1], float, "rho"))
    if not xs:
        raise MalformedFileError(f"{path}: no curve rows found")
    return xs, ys
