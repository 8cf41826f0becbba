"""Experiment grid runner with CSV output.

Configuration files are INI files read with :mod:`configparser`::

    [experiment]
    approaches = minmax-small, minmax-large   ; default for every problem
    seeds = 0, 1, 2
    eps = 1e-3                                ; one value or a list
    sigma = 0.25                              ; one value or a list
    inner_sigma = 0.1                         ; optional, small-dimension approaches
    timing = true                             ; false writes wall_ms = 0

    [problem saddle]
    family = QuadSaddle
    n_x = 2
    n_y = 2
    mu_x = 1
    mu_y = 1
    L_xx = 4
    L_yy = 4
    L_xy = 1
    box = 1
    approaches = minmax-small                 ; optional override

Every ``[problem NAME]`` section is crossed with its approaches, the seeds
and the ``eps`` and ``sigma`` lists. The seed fixes both the instance and the
solver's random stream, so a grid reproduces byte-identical CSVs when timing
is off.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .approaches import solve_minmax_large, solve_minmax_small, solve_minmin_small
from .core import MixedOracleError, Mode, NumericalFailure
from .problems import InvalidSpec, ProblemSpec, generate_problem

CSV_HEADER = ["spec", "approach", "eps", "sigma", "seed", "gap", "first_calls",
              "zeroth_calls", "wall_ms", "ok"]
APPROACHES = {
    "minmin-small": Mode.MIN_MIN,
    "minmax-small": Mode.MIN_MAX,
    "minmax-large": Mode.MIN_MAX,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    spec: ProblemSpec
    approach: str
    eps: float
    sigma: float
    seed: int
    inner_sigma: float = 0.1
    timing: bool = True
    record_queries: bool = False  # keep outer queries in the report (small approaches)


@dataclass
class RunRecord:
    spec: str
    approach: str
    eps: float
    sigma: float
    seed: int
    gap: float
    first_calls: int
    zeroth_calls: int
    wall_ms: int
    ok: bool
    error: str = ""
    numerical_failure: bool = False

    def row(self) -> list:
        return [self.spec, self.approach, repr(self.eps), repr(self.sigma), str(self.seed),
                repr(self.gap), str(self.first_calls), str(self.zeroth_calls),
                str(self.wall_ms), "true" if self.ok else "false"]


@dataclass
class ExperimentConfig:
    problems: List[ProblemSpec] = field(default_factory=list)
    approaches: dict = field(default_factory=dict)  # problem name -> list of approaches
    seeds: List[int] = field(default_factory=list)
    eps: List[float] = field(default_factory=list)
    sigma: List[float] = field(default_factory=lambda: [0.25])
    inner_sigma: float = 0.1
    timing: bool = True

    def cells(self) -> List[Cell]:
        out = []
        for spec in self.problems:
            for approach in self.approaches.get(spec.name, []):
                for eps in self.eps:
                    for sigma in self.sigma:
                        for seed in self.seeds:
                            out.append(Cell(replace(spec, seed=seed), approach, eps, sigma,
                                            seed, self.inner_sigma, self.timing))
        return out


def _split(value: str) -> list:
    return [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]


def _floats(value: str, key: str) -> List[float]:
    try:
        return [float(v) for v in _split(value)]
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _approaches(value: str) -> List[str]:
    names = _split(value)
    for a in names:
        if a not in APPROACHES:
            raise ConfigError(f"unknown approach {a!r}; expected one of {sorted(APPROACHES)}")
    return names


SPEC_KEYS = {"family": str, "n_x": int, "n_y": int, "mu_x": float, "mu_y": float,
             "L_xx": float, "L_yy": float, "L_xy": float, "box": float}


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keys such as L_xx are case sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = ExperimentConfig()
    default_approaches: List[str] = []
    if cp.has_section("experiment"):
        ex = cp["experiment"]
        unknown = set(ex) - {"approaches", "seeds", "eps", "sigma", "inner_sigma", "timing"}
        if unknown:
            raise ConfigError(f"unknown keys in [experiment]: {sorted(unknown)}")
        default_approaches = _approaches(ex.get("approaches", ""))
        try:
            cfg.seeds = [int(v) for v in _split(ex.get("seeds", ""))]
        except ValueError as exc:
            raise ConfigError(f"seeds: {exc}") from None
        cfg.eps = _floats(ex.get("eps", ""), "eps")
        if "sigma" in ex:
            cfg.sigma = _floats(ex["sigma"], "sigma")
        if "inner_sigma" in ex:
            cfg.inner_sigma = _floats(ex["inner_sigma"], "inner_sigma")[0]
        try:
            cfg.timing = ex.getboolean("timing", True)
        except ValueError as exc:
            raise ConfigError(f"timing: {exc}") from None
    for sec in cp.sections():
        if sec == "experiment":
            continue
        if not sec.startswith("problem "):
            raise ConfigError(f"unknown section [{sec}]")
        name = sec[len("problem "):].strip()
        body = cp[sec]
        kw = {"name": name}
        for key, val in body.items():
            if key == "approaches":
                continue
            if key not in SPEC_KEYS:
                raise ConfigError(f"[{sec}]: unknown key {key!r}")
            try:
                kw[key] = SPEC_KEYS[key](val)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key}: {exc}") from None
        if "family" not in kw or "n_x" not in kw or "n_y" not in kw:
            raise ConfigError(f"[{sec}] needs family, n_x and n_y")
        try:
            spec = ProblemSpec(**kw)
        except InvalidSpec as exc:
            raise ConfigError(f"[{sec}]: {exc}") from None
        approaches = _approaches(body["approaches"]) if "approaches" in body else default_approaches
        mode = Mode.MIN_MIN if spec.family == "QuadMinMin" else Mode.MIN_MAX
        for a in approaches:
            if APPROACHES[a] is not mode:
                raise ConfigError(f"[{sec}]: approach {a} does not apply to {spec.family}")
        cfg.problems.append(spec)
        cfg.approaches[name] = approaches
    for e in cfg.eps:
        if not e > 0:
            raise ConfigError("eps values must be positive")
    for s in cfg.sigma:
        if not 0 < s < 1:
            raise ConfigError("sigma values must lie in (0, 1)")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)


def solver_rng(seed: int) -> np.random.Generator:
    """Solver stream, independent of the stream that built the instance."""
    return np.random.default_rng([seed, 1])


def run_cell_with_report(cell: Cell):
    """Run one cell; return ``(RunRecord, ApproachReport or None)``."""
    t0 = time.perf_counter()
    gap, first, zeroth, err, numerical = math.nan, 0, 0, "", False
    rep = None
    try:
        problem, truth = generate_problem(cell.spec)
        rng = solver_rng(cell.seed)
        if cell.approach == "minmin-small":
            rep = solve_minmin_small(problem, cell.eps, rng=rng, inner_sigma=cell.inner_sigma,
                                     record_queries=cell.record_queries)
            gap = truth.outer_gap(rep.x_hat)
        elif cell.approach == "minmax-small":
            rep = solve_minmax_small(problem, cell.eps, rng=rng, inner_sigma=cell.inner_sigma,
                                     record_queries=cell.record_queries)
            gap = truth.outer_gap(rep.x_hat)
        else:
            rep = solve_minmax_large(problem, cell.eps, cell.sigma, rng=rng)
            gap = truth.dual_gap(rep.y_hat)
        first, zeroth = rep.ledger.first_calls, rep.ledger.zeroth_calls
    except NumericalFailure as exc:
        err, numerical = str(exc), True
    except MixedOracleError as exc:
        err = str(exc)
        cause = getattr(exc, "cause", None)
        numerical = isinstance(cause, NumericalFailure)
    wall = int(round((time.perf_counter() - t0) * 1000)) if cell.timing else 0
    ok = not err and math.isfinite(gap) and gap <= cell.eps
    rec = RunRecord(cell.spec.name or cell.spec.label, cell.approach, cell.eps, cell.sigma,
                    cell.seed, float(gap), first, zeroth, wall, ok, err, numerical)
    return rec, rep


def run_cell(cell: Cell) -> RunRecord:
    return run_cell_with_report(cell)[0]


def run_cells(cells: List[Cell], jobs: int = 1) -> List[RunRecord]:
    if jobs <= 1 or len(cells) <= 1:
        return [run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_cell, cells))


def records_to_csv(records: List[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def write_csv(records: List[RunRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))


def exit_code(records: List[RunRecord]) -> int:
    if any(r.numerical_failure for r in records):
        return 3
    if any(not r.ok for r in records):
        return 1
    return 0


def run_experiment(config: ExperimentConfig, out: Optional[str] = None, jobs: int = 1):
    """Run the grid; return ``(records, exit_code)`` and write ``out`` if given."""
    records = run_cells(config.cells(), jobs)
    if out is not None:
        write_csv(records, out)
    return records, exit_code(records)


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
