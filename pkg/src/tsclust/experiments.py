"""Seeded Monte Carlo experiment harness.

A JSON spec names a scenario and its parameter grid; every grid cell runs
``trials`` independent instances whose seeds derive from the master seed, and
one CSV row per cell reports the averaged metrics.  Trial execution is pure,
so results are identical whether trials run serially or in a process pool.

Scenarios
---------
``intersect``   two subspaces sharing a ``t``-dimensional intersection,
                swept over ``t`` (cluster count estimated by default).
``grid``        L i.i.d. random subspaces (or the shared-intersection
                ensemble) swept over (d, n), with optional erasures/noise.
``noise-grid``  random subspaces under additive noise, swept over
                (sigma2, d, n).
``huge-noise``  low-dimensional subspaces in a large ambient dimension under
                heavy noise, swept over (sigma2, n).
``outliers``    inliers on random subspaces plus structure-free outliers,
                swept over the ambient dimension; scores the detection rule.
``mnist``       handwritten-digit clustering on an IDX dataset, swept over
                the per-digit sample size.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import __version__
from .errors import ConfigError
from .ingest import load_idx, subsample_digits
from .metrics import clustering_error, el_error, feature_detection_error, outlier_confusion
from .numerics import derive_seed
from .outliers import NOISELESS_C, NOISY_C, detect_outliers
from .synth import (
    haar_basis,
    intersecting_pair,
    shared_intersection_ensemble,
    union_of_subspaces,
)
from .tsc import TscConfig, default_q, run_tsc

SCENARIOS = ("intersect", "grid", "noise-grid", "huge-noise", "outliers", "mnist")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a scenario tag plus its resolved parameters.

    Unset fields take scenario defaults in :func:`load_spec`.  ``q = None``
    applies the per-cluster-size default rule cell by cell.
    """

    scenario: str
    seed: int = 0
    trials: int = 20
    variant: str = "exp"
    L_known: bool | None = None
    q: int | None = None
    max_L: int | None = None
    m: int | None = None
    d: int | None = None
    L: int | None = None
    n: int | None = None
    t_values: tuple | None = None
    d_values: tuple | None = None
    n_values: tuple | None = None
    sigma2_values: tuple | None = None
    m_values: tuple | None = None
    sigma2: float = 0.0
    s: int = 0
    ensemble: str = "haar"
    noise_first: bool = True
    c: object = None
    outlier_factor: float = 1.0
    images: str | None = None
    labels: str | None = None
    digits: tuple = (2, 4, 8)
    center: bool = False


_SCENARIO_DEFAULTS: dict[str, dict] = {
    "intersect": dict(m=200, d=10, n=200, L=2, L_known=False),
    "grid": dict(
        m=50, L=10, L_known=False, d_values=(5, 10, 15), n_values=(50, 100, 200)
    ),
    "noise-grid": dict(
        m=50, L=10, L_known=True, d_values=(5,), n_values=(100,),
        sigma2_values=(0.0, 0.1, 0.2, 0.3),
    ),
    "huge-noise": dict(
        m=400, L=5, d=5, L_known=True, n_values=(100,), sigma2_values=(0.5, 1.0)
    ),
    "outliers": dict(d=5, n=50, m_values=(50, 100, 200), L_known=True),
    "mnist": dict(L_known=True, n_values=(100,)),
}

_ROW_HEADERS: dict[str, list[str]] = {
    "intersect": ["t", "fde_mean", "ce_mean", "ce_std", "el_mean"],
    "grid": ["d", "n", "s", "fde_mean", "ce_mean", "ce_std", "el_mean"],
    "noise-grid": ["sigma2", "d", "n", "fde_mean", "ce_mean", "ce_std", "el_mean"],
    "huge-noise": ["sigma2", "n", "fde_mean", "ce_mean", "ce_std", "el_mean"],
    "outliers": ["m", "misclassification_error", "misclassification_std", "fn_mean", "fp_mean"],
    "mnist": ["n", "ce_mean", "ce_std"],
}

_FIELD_NAMES = {f.name for f in fields(ExperimentSpec)}
_TUPLE_FIELDS = {"t_values", "d_values", "n_values", "sigma2_values", "m_values", "digits"}


def load_spec(raw: dict) -> ExperimentSpec:
    """Build a validated spec from a JSON-style dict, applying scenario
    defaults to unset fields.

    Raises
    ------
    ConfigError
        On unknown keys, unknown scenarios, or infeasible dimensions.
    """
    if not isinstance(raw, dict):
        raise ConfigError("experiment spec must be a JSON object")
    unknown = set(raw) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
    merged = dict(_SCENARIO_DEFAULTS[scenario])
    merged.update({k: v for k, v in raw.items() if k != "scenario"})
    for key in _TUPLE_FIELDS & set(merged):
        if merged[key] is not None:
            merged[key] = tuple(merged[key])
    spec = ExperimentSpec(scenario=scenario, **merged)
    if spec.scenario == "intersect" and spec.t_values is None:
        spec = replace(spec, t_values=tuple(range(spec.d + 1)))
    _validate(spec)
    return spec


def load_spec_file(path) -> ExperimentSpec:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return load_spec(raw)


def _validate(spec: ExperimentSpec) -> None:
    if spec.trials < 1:
        raise ConfigError(f"trials must be >= 1, got {spec.trials}")
    if spec.variant not in ("exp", "ls"):
        raise ConfigError(f"variant must be 'exp' or 'ls', got {spec.variant!r}")
    if spec.q is not None and spec.q < 1:
        raise ConfigError(f"q must be >= 1, got {spec.q}")
    if spec.sigma2 < 0:
        raise ConfigError(f"sigma2 must be >= 0, got {spec.sigma2}")
    sc = spec.scenario
    if sc == "intersect":
        if spec.d > spec.m:
            raise ConfigError(f"need d <= m, got d={spec.d}, m={spec.m}")
        for t in spec.t_values:
            if not 0 <= t <= spec.d:
                raise ConfigError(f"t values must lie in [0, d], got {t}")
            if 2 * spec.d - t > spec.m:
                raise ConfigError(f"need 2d - t <= m, got t={t}")
    elif sc in ("grid", "noise-grid"):
        if spec.ensemble not in ("haar", "shared"):
            raise ConfigError(f"ensemble must be 'haar' or 'shared', got {spec.ensemble!r}")
        for d in spec.d_values:
            if d > spec.m:
                raise ConfigError(f"need d <= m, got d={d}, m={spec.m}")
            if spec.ensemble == "shared" and d % 3 != 0:
                raise ConfigError(f"shared ensemble needs d divisible by 3, got {d}")
        if not 0 <= spec.s < spec.m:
            raise ConfigError(f"need 0 <= s < m, got s={spec.s}")
    elif sc == "huge-noise":
        if spec.d > spec.m:
            raise ConfigError(f"need d <= m, got d={spec.d}, m={spec.m}")
    elif sc == "outliers":
        for m in spec.m_values:
            if 2 * m % spec.d != 0:
                raise ConfigError(f"2m must be divisible by d, got m={m}, d={spec.d}")
            if spec.d > m:
                raise ConfigError(f"need d <= m, got d={spec.d}, m={m}")
        if spec.c is not None and not isinstance(spec.c, str) and float(spec.c) <= 0:
            raise ConfigError("c must be positive")
    elif sc == "mnist":
        if not spec.images or not spec.labels:
            raise ConfigError("mnist scenario needs 'images' and 'labels' paths")
        if len(spec.digits) < 2:
            raise ConfigError("mnist scenario needs at least two digits")


def _cells(spec: ExperimentSpec) -> list[dict]:
    sc = spec.scenario
    if sc == "intersect":
        return [{"t": int(t)} for t in spec.t_values]
    if sc == "grid":
        return [{"d": int(d), "n": int(n)} for d in spec.d_values for n in spec.n_values]
    if sc == "noise-grid":
        return [
            {"sigma2": float(s2), "d": int(d), "n": int(n)}
            for s2 in spec.sigma2_values
            for d in spec.d_values
            for n in spec.n_values
        ]
    if sc == "huge-noise":
        return [
            {"sigma2": float(s2), "n": int(n)}
            for s2 in spec.sigma2_values
            for n in spec.n_values
        ]
    if sc == "outliers":
        return [{"m": int(m)} for m in spec.m_values]
    return [{"n": int(n)} for n in spec.n_values]


def _resolve_c(spec: ExperimentSpec) -> float:
    c = spec.c
    if c is None:
        c = "noisy" if spec.sigma2 > 0 else "noiseless"
    if isinstance(c, str):
        if c == "noiseless":
            return NOISELESS_C
        if c == "noisy":
            return NOISY_C
        try:
            return float(c)
        except ValueError:
            raise ConfigError(f"c must be 'noiseless', 'noisy', or a number, got {c!r}") from None
    return float(c)


def _tsc_config(spec: ExperimentSpec, n: int, L: int, seed: int) -> TscConfig:
    q = spec.q if spec.q is not None else default_q(n, spec.L_known)
    return TscConfig(
        q=q,
        weight_variant=spec.variant,
        num_subspaces=L if spec.L_known else None,
        max_L=spec.max_L,
        seed=seed,
    )


def _cluster_record(spec: ExperimentSpec, gt, L_true: int, n: int, seed: int) -> dict:
    config = _tsc_config(spec, n, L_true, derive_seed(seed, 3))
    result = run_tsc(gt.points, config)
    return {
        "ce": clustering_error(gt.points.labels, result.labels),
        "el": el_error(L_true, result.L_hat),
        "fde": feature_detection_error(result.graph.A, gt.points.labels),
        "l_hat": result.L_hat,
    }


def _trial_intersect(spec: ExperimentSpec, cell: dict, seed: int) -> dict:
    U1, U2 = intersecting_pair(spec.m, spec.d, cell["t"], derive_seed(seed, 1))
    gt = union_of_subspaces([U1, U2], spec.n, derive_seed(seed, 2))
    return _cluster_record(spec, gt, 2, spec.n, seed)


def _make_bases(spec: ExperimentSpec, d: int, seed: int):
    if spec.ensemble == "shared":
        return shared_intersection_ensemble(spec.m, spec.L, d, seed)
    return [haar_basis(spec.m, d, derive_seed(seed, l)) for l in range(spec.L)]


def _trial_grid(spec: ExperimentSpec, cell: dict, seed: int) -> dict:
    bases = _make_bases(spec, cell["d"], derive_seed(seed, 1))
    gt = union_of_subspaces(
        bases,
        cell["n"],
        derive_seed(seed, 2),
        sigma2=cell.get("sigma2", spec.sigma2),
        erasures=spec.s,
        noise_first=spec.noise_first,
    )
    return _cluster_record(spec, gt, spec.L, cell["n"], seed)


def _trial_huge_noise(spec: ExperimentSpec, cell: dict, seed: int) -> dict:
    bases = [haar_basis(spec.m, spec.d, derive_seed(derive_seed(seed, 1), l)) for l in range(spec.L)]
    gt = union_of_subspaces(bases, cell["n"], derive_seed(seed, 2), sigma2=cell["sigma2"])
    return _cluster_record(spec, gt, spec.L, cell["n"], seed)


def _trial_outliers(spec: ExperimentSpec, cell: dict, seed: int) -> dict:
    m = cell["m"]
    L = 2 * m // spec.d
    n_outliers = int(round(spec.outlier_factor * L * spec.n))
    bases = [haar_basis(m, spec.d, derive_seed(derive_seed(seed, 1), l)) for l in range(L)]
    noisy = spec.sigma2 > 0
    gt = union_of_subspaces(
        bases,
        spec.n,
        derive_seed(seed, 2),
        sigma2=spec.sigma2,
        n_outliers=n_outliers,
        outlier_mode="gaussian" if noisy else "sphere",
        inlier_scale=1.0 / math.sqrt(1.0 + spec.sigma2) if noisy else 1.0,
    )
    report = detect_outliers(gt.points, _resolve_c(spec))
    err, fn, fp = outlier_confusion(report.flags, gt.outlier_mask)
    return {"outlier_err": err, "fn": fn, "fp": fp}


_IDX_CACHE: dict = {}


def _idx_cached(images: str, labels: str):
    key = (images, labels)
    if key not in _IDX_CACHE:
        _IDX_CACHE[key] = load_idx(images, labels)
    return _IDX_CACHE[key]


def _trial_mnist(spec: ExperimentSpec, cell: dict, seed: int) -> dict:
    ds = _idx_cached(spec.images, spec.labels)
    points = subsample_digits(ds, spec.digits, cell["n"], derive_seed(seed, 2), spec.center)
    L = len(set(spec.digits))
    config = _tsc_config(spec, cell["n"], L, derive_seed(seed, 3))
    result = run_tsc(points, config)
    return {
        "ce": clustering_error(points.labels, result.labels),
        "el": el_error(L, result.L_hat),
        "fde": feature_detection_error(result.graph.A, points.labels),
        "l_hat": result.L_hat,
    }


_TRIAL_FUNCS = {
    "intersect": _trial_intersect,
    "grid": _trial_grid,
    "noise-grid": _trial_grid,
    "huge-noise": _trial_huge_noise,
    "outliers": _trial_outliers,
    "mnist": _trial_mnist,
}


def trial_seed(master_seed: int, cell_index: int, trial_index: int) -> int:
    """Per-trial seed: a sub-stream of the cell's sub-stream of the master."""
    return derive_seed(derive_seed(master_seed, cell_index), trial_index)


def _run_trial_task(args):
    spec, cell, seed = args
    start = time.perf_counter()
    record = _TRIAL_FUNCS[spec.scenario](spec, cell, seed)
    record["seconds"] = time.perf_counter() - start
    return record


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregated rows plus per-trial records and the reproducibility manifest."""

    header: list[str]
    rows: list[list]
    trial_header: list[str]
    trial_rows: list[list]
    manifest: dict


def _aggregate(spec: ExperimentSpec, cell: dict, records: list[dict]) -> list:
    def mean(key):
        return float(np.mean([r[key] for r in records]))

    def std(key):
        vals = [r[key] for r in records]
        return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

    sc = spec.scenario
    if sc == "intersect":
        return [cell["t"], mean("fde"), mean("ce"), std("ce"), mean("el")]
    if sc == "grid":
        return [cell["d"], cell["n"], spec.s, mean("fde"), mean("ce"), std("ce"), mean("el")]
    if sc == "noise-grid":
        return [cell["sigma2"], cell["d"], cell["n"], mean("fde"), mean("ce"), std("ce"), mean("el")]
    if sc == "huge-noise":
        return [cell["sigma2"], cell["n"], mean("fde"), mean("ce"), std("ce"), mean("el")]
    if sc == "outliers":
        return [cell["m"], mean("outlier_err"), std("outlier_err"), mean("fn"), mean("fp")]
    return [cell["n"], mean("ce"), std("ce")]


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Execute every (cell, trial) instance and aggregate per cell.

    ``jobs > 1`` fans trials out to a process pool; records are collected in
    task order, so the output is bit-identical to a serial run.
    """
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    cells = _cells(spec)
    tasks = [
        (spec, cell, trial_seed(spec.seed, ci, ti))
        for ci, cell in enumerate(cells)
        for ti in range(spec.trials)
    ]
    if jobs == 1 or len(tasks) == 1:
        records = [_run_trial_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_trial_task, tasks, chunksize=1))

    param_keys = list(cells[0].keys())
    rows, trial_rows, manifest_cells = [], [], []
    for ci, cell in enumerate(cells):
        cell_records = records[ci * spec.trials:(ci + 1) * spec.trials]
        rows.append(_aggregate(spec, cell, cell_records))
        for ti, rec in enumerate(cell_records):
            trial_rows.append(
                [spec.scenario, ti, trial_seed(spec.seed, ci, ti)]
                + [rec.get(k) for k in ("ce", "el", "fde", "outlier_err")]
                + [cell[k] for k in param_keys]
            )
        manifest_cells.append(
            {
                "params": cell,
                "trial_seeds": [trial_seed(spec.seed, ci, ti) for ti in range(spec.trials)],
                "trial_seconds": [rec["seconds"] for rec in cell_records],
            }
        )
    manifest = {
        "artifact_version": __version__,
        "spec": {k: v for k, v in asdict(spec).items() if v is not None},
        "master_seed": spec.seed,
        "jobs": jobs,
        "cells": manifest_cells,
    }
    return ExperimentResult(
        header=_ROW_HEADERS[spec.scenario],
        rows=rows,
        trial_header=["scenario", "trial", "seed", "ce", "el", "fde", "outlier_err"] + param_keys,
        trial_rows=trial_rows,
        manifest=manifest,
    )


def format_cell(value) -> str:
    """CSV cell formatting: 17 significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
