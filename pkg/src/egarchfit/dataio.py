"""File ingestion and result persistence: CSV for series/grids/tables, JSON
for structured results. All writes are atomic (temp file + rename) and all
floats are emitted with 17 significant digits so round-trips are lossless.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .errors import NonFiniteValueError, ParseError, TooShortError
from .experiments import DomainGrid, MCStudyReport
from .inversion import StabilityTable
from .model import ModelParams, SeriesSample


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path: str, text: str):
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def series_to_csv(series: SeriesSample) -> str:
    """Header t,x plus log_sigma2,z columns when the latent path is present."""
    lines = []
    if series.has_latent:
        lines.append("t,x,log_sigma2,z")
        for t in range(len(series)):
            lines.append(
                f"{t + 1},{_fmt(series.returns[t])},"
                f"{_fmt(series.latent_log_var[t])},{_fmt(series.innovations[t])}"
            )
    else:
        lines.append("t,x")
        for t in range(len(series)):
            lines.append(f"{t + 1},{_fmt(series.returns[t])}")
    return "\n".join(lines) + "\n"


def save_series(path: str, series: SeriesSample):
    atomic_write_text(path, series_to_csv(series))


def _looks_numeric(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_series(path: str, column: str | None = None, min_rows: int = 1) -> SeriesSample:
    """Load a return series from CSV (with header) or a headerless single column.

    column selects the return column by header name (default "x", else the
    sole non-index column). Non-numeric cells raise ParseError with the
    row/column location; NaN/inf cells raise NonFiniteValueError naming the
    row; fewer than min_rows rows raise TooShortError.
    """
    if not os.path.exists(path):
        raise ParseError(f"no such file: {path}")
    with open(path, "r") as handle:
        rows = [line.strip() for line in handle if line.strip()]
    if not rows:
        raise TooShortError(f"{path}: empty file")

    header_tokens = [tok.strip() for tok in rows[0].split(",")]
    has_header = not all(_looks_numeric(tok) for tok in header_tokens)
    if has_header:
        names = header_tokens
        data_rows = rows[1:]
        if column is not None:
            if column not in names:
                raise ParseError(f"{path}: no column named {column!r} in header {names}")
            col_idx = names.index(column)
        elif "x" in names:
            col_idx = names.index("x")
        elif len(names) == 1:
            col_idx = 0
        else:
            candidates = [i for i, nm in enumerate(names) if nm != "t"]
            if len(candidates) != 1:
                raise ParseError(
                    f"{path}: ambiguous columns {names}; pass an explicit column name"
                )
            col_idx = candidates[0]
        extra = {}
        for name in ("log_sigma2", "z"):
            if name in names:
                extra[name] = names.index(name)
    else:
        if column is not None:
            raise ParseError(f"{path}: headerless file has no column names")
        if len(header_tokens) != 1:
            raise ParseError(f"{path}: headerless input must be a single column")
        data_rows = rows
        col_idx = 0
        extra = {}

    def parse_cell(line: str, row_number: int, idx: int, name: str) -> float:
        cells = line.split(",")
        if idx >= len(cells):
            raise ParseError(f"{path}: row {row_number} has no column {name!r}")
        token = cells[idx].strip()
        try:
            value = float(token)
        except ValueError:
            raise ParseError(
                f"{path}: row {row_number}, column {name!r}: cannot parse {token!r}"
            ) from None
        if not math.isfinite(value):
            raise NonFiniteValueError(
                f"{path}: row {row_number}, column {name!r} is non-finite ({token})"
            )
        return value

    offset = 2 if has_header else 1
    x = [parse_cell(line, i + offset, col_idx, "x") for i, line in enumerate(data_rows)]
    if len(x) < min_rows:
        raise TooShortError(f"{path}: {len(x)} rows < required {min_rows}")
    latent = innovations = None
    if "log_sigma2" in extra:
        latent = [
            parse_cell(line, i + offset, extra["log_sigma2"], "log_sigma2")
            for i, line in enumerate(data_rows)
        ]
    if "z" in extra:
        innovations = [
            parse_cell(line, i + offset, extra["z"], "z") for i, line in enumerate(data_rows)
        ]
    return SeriesSample(
        returns=np.array(x),
        latent_log_var=np.array(latent) if latent is not None else None,
        innovations=np.array(innovations) if innovations is not None else None,
    )


def save_params(path: str, params: ModelParams):
    write_json(path, params.to_dict())


def load_params(path: str) -> ModelParams:
    """Accept either a bare params JSON or a FitResult JSON (theta_hat key)."""
    with open(path, "r") as handle:
        obj = json.load(handle)
    if "theta_hat" in obj:
        obj = obj["theta_hat"]
    try:
        return ModelParams.from_dict(obj)
    except KeyError as exc:
        raise ParseError(f"{path}: missing parameter key {exc}") from None


def stability_to_csv(table: StabilityTable) -> str:
    """Header t,diff_max[,criterion]; criterion is the first initial value's."""
    lines = []
    if table.criteria is not None:
        lines.append("t,diff_max,criterion")
        for i in range(table.t.shape[0]):
            lines.append(
                f"{table.t[i]},{_fmt(table.diff_max[i])},{_fmt(table.criteria[i, 0])}"
            )
    else:
        lines.append("t,diff_max")
        for i in range(table.t.shape[0]):
            lines.append(f"{table.t[i]},{_fmt(table.diff_max[i])}")
    return "\n".join(lines) + "\n"


def domain_grid_to_csv(grid: DomainGrid) -> str:
    """Rows gamma,delta,beta_max over admissible cells only."""
    lines = ["gamma,delta,beta_max"]
    for i, ga in enumerate(grid.gamma_axis):
        for j, de in enumerate(grid.delta_axis):
            value = grid.beta_max[i, j]
            if np.isnan(value):
                continue
            lines.append(f"{_fmt(ga)},{_fmt(de)},{_fmt(value)}")
    return "\n".join(lines) + "\n"


def standardized_estimates_csv(report: MCStudyReport) -> str:
    """Per-replication standardized estimates, one block per sample size."""
    lines = ["n,rep,coord,standardized"]
    names = ("alpha", "beta", "gamma", "delta")
    for n in report.n_grid:
        std = report.standardized(n)
        for r in range(std.shape[0]):
            for c, name in enumerate(names):
                lines.append(f"{n},{r},{name},{_fmt(std[r, c])}")
    return "\n".join(lines) + "\n"
