"""Seeded Monte-Carlo sweeps, log-log slope fits, and phase-transition grids.

Every trial derives its own random stream from (root seed, trial index), so
reruns are bit-identical regardless of how trials are scheduled, and the same
trial index reuses the same standard draws across swept parameter values.
Estimator failures never abort a sweep: the failed trial is censored at the
torus diameter (md = 1/2) and counted.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from ._blas import set_blas_threads
from .bounds import sigma_s
from .esprit import EstimatorDegeneracy, esprit_estimate, matching_distance
from .music import NscProfile, default_grid_size, nsc_sup_perturbation, sample_nsc
from .signal_model import (
    ClumpsSpec,
    NoiseModel,
    SupportSet,
    generate_clumps_support,
    min_separation,
    steering_matrix,
    synthesize_snapshots,
)
from .subspace import empirical_covariance, signal_space, true_signal_space

__all__ = [
    "ExperimentConfig",
    "PhaseAxes",
    "PhaseGrid",
    "SweepAxis",
    "SweepResult",
    "SweepRow",
    "TrialResult",
    "config_from_json",
    "fit_loglog_slope",
    "phase_grid",
    "phase_grid_to_csv",
    "run_trial",
    "sweep",
    "sweep_to_csv",
]

logger = logging.getLogger(__name__)

MD_CENSOR_CAP = 0.5  # torus diameter
NSC_CENSOR_CAP = 1.0  # correlation values live in [0, 1]
_LOG_FLOOR = 1e-16

_SWEEP_PARAMS = ("nu", "L", "srf")
_ESTIMATORS = ("music", "esprit", "both")


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter: nu, L, or srf (srf adjusts alpha with M fixed).

    ``x`` selects the coordinate used for the log-log fit: the swept value
    itself, or "sigma_s" to fit against the resulting steering-matrix
    conditioning.
    """

    param: str
    values: tuple[float, ...]
    x: str = "value"

    def __post_init__(self):
        if self.param not in _SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.param!r}; use one of {_SWEEP_PARAMS}")
        vals = tuple(float(v) for v in np.atleast_1d(self.values))
        if len(vals) < 1 or any(v <= 0 for v in vals):
            raise ValueError("sweep values must be positive")
        object.__setattr__(self, "values", vals)
        if self.x not in ("value", "sigma_s"):
            raise ValueError(f"unknown fit coordinate {self.x!r}")


@dataclass(frozen=True)
class PhaseAxes:
    """Two orthogonal sweep axes plus the resolution threshold for crossings."""

    axis1: SweepAxis
    axis2: SweepAxis
    threshold: float = -1.0  # mean log2(md / Delta) level taken as "resolved"

    def __post_init__(self):
        if self.axis1.param == self.axis2.param:
            raise ValueError("phase axes must sweep different parameters")


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte-Carlo experiment: geometry, model parameters, and sweep plan."""

    geometry: ClumpsSpec | SupportSet
    L: int
    nu: float
    M: int | None = None
    estimator: str = "both"
    trials: int | None = None
    root_seed: int = 0
    amplitude: str = "cn01"
    grid_size: int | None = None
    sweep: SweepAxis | None = None
    phase: PhaseAxes | None = None

    def __post_init__(self):
        if isinstance(self.geometry, ClumpsSpec):
            if self.M is not None and self.M != self.geometry.M:
                raise ValueError(
                    f"M={self.M} contradicts the clumps spec (M={self.geometry.M})"
                )
            object.__setattr__(self, "M", self.geometry.M)
        elif isinstance(self.geometry, SupportSet):
            if self.M is None:
                raise ValueError("explicit point supports need M")
        else:
            raise ValueError("geometry must be a ClumpsSpec or a SupportSet")
        if self.L < 1:
            raise ValueError("need at least one snapshot")
        if self.nu < 0:
            raise ValueError("noise level must be nonnegative")
        if self.estimator not in _ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}; use one of {_ESTIMATORS}")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be positive")
        if self.amplitude != "cn01":
            raise ValueError(f"unknown amplitude model {self.amplitude!r}")

    @property
    def resolved_trials(self) -> int:
        if self.trials is not None:
            return self.trials
        # heavier clumps need far more averaging for stable means
        if isinstance(self.geometry, ClumpsSpec) and self.geometry.max_clump_size >= 3:
            return 2500
        return 100

    def support(self) -> SupportSet:
        if isinstance(self.geometry, ClumpsSpec):
            return generate_clumps_support(self.geometry)
        return self.geometry


def config_from_json(doc) -> ExperimentConfig:
    """Parse the single-document JSON configuration (see README for the schema)."""
    data = json.loads(doc) if isinstance(doc, str) else doc
    geom = data.get("geometry")
    if not isinstance(geom, dict):
        raise ValueError("config needs a 'geometry' object")
    if "points" in geom:
        geometry: ClumpsSpec | SupportSet = SupportSet.from_json(geom)
    elif "num_clumps" in geom:
        geometry = ClumpsSpec.from_json(geom)
    else:
        raise ValueError("geometry must carry either 'points' or 'num_clumps'")

    def axis(obj) -> SweepAxis:
        return SweepAxis(
            param=obj["param"],
            values=tuple(obj["values"]),
            x=obj.get("x", "value"),
        )

    sweep_axis = axis(data["sweep"]) if data.get("sweep") else None
    phase_axes = None
    if data.get("phase"):
        p = data["phase"]
        phase_axes = PhaseAxes(
            axis1=axis(p["axis1"]),
            axis2=axis(p["axis2"]),
            threshold=float(p.get("threshold", -1.0)),
        )
    return ExperimentConfig(
        geometry=geometry,
        L=int(data["L"]),
        nu=float(data["nu"]),
        M=int(data["M"]) if data.get("M") is not None else None,
        estimator=data.get("estimator", "both"),
        trials=int(data["trials"]) if data.get("trials") is not None else None,
        root_seed=int(data.get("root_seed", 0)),
        amplitude=data.get("amplitude", "cn01"),
        grid_size=int(data["grid_size"]) if data.get("grid_size") is not None else None,
        sweep=sweep_axis,
        phase=phase_axes,
    )


@dataclass(frozen=True)
class TrialResult:
    nsc_sup: float | None
    md: float | None
    censored: bool
    noise_level_ok: bool


@dataclass(frozen=True)
class _TrialContext:
    """Per-sweep-point precomputation shared by all trials of that point."""

    support: SupportSet
    M: int
    L: int
    nu: float
    estimator: str
    grid_size: int
    sigma_s_value: float
    true_profile: NscProfile | None


def _make_context(
    support: SupportSet, M: int, L: int, nu: float, estimator: str, grid_size: int | None
) -> _TrialContext:
    G = default_grid_size(M) if grid_size is None else grid_size
    profile = None
    if estimator in ("music", "both"):
        profile = sample_nsc(true_signal_space(support, M), G, basis_tag="true")
    return _TrialContext(
        support=support,
        M=M,
        L=L,
        nu=nu,
        estimator=estimator,
        grid_size=G,
        sigma_s_value=sigma_s(steering_matrix(support, M)),
        true_profile=profile,
    )


def _run_single(ctx: _TrialContext, root_seed: int, trial_index: int) -> TrialResult:
    seed = np.random.SeedSequence(root_seed, spawn_key=(trial_index,))
    batch = synthesize_snapshots(
        ctx.support, ctx.M, ctx.L, noise=NoiseModel(ctx.nu), seed=seed
    )
    lam_min = batch.ground_truth.amplitudes.lambda_min
    noise_ok = ctx.nu <= ctx.sigma_s_value * np.sqrt(max(lam_min, 0.0))

    want_music = ctx.estimator in ("music", "both")
    want_esprit = ctx.estimator in ("esprit", "both")
    nsc_sup = md = None
    censored = False
    try:
        basis = signal_space(empirical_covariance(batch), ctx.support.S)
        if want_music:
            hat = sample_nsc(basis, ctx.grid_size, basis_tag="empirical")
            nsc_sup = nsc_sup_perturbation(ctx.true_profile, hat)
        if want_esprit:
            solution = esprit_estimate(basis)
            md = matching_distance(ctx.support, solution.estimated_support)
    except (EstimatorDegeneracy, np.linalg.LinAlgError) as exc:
        censored = True
        logger.debug("trial %d censored: %s", trial_index, exc)
        if want_music and nsc_sup is None:
            nsc_sup = NSC_CENSOR_CAP
        if want_esprit and md is None:
            md = MD_CENSOR_CAP
    return TrialResult(nsc_sup=nsc_sup, md=md, censored=censored, noise_level_ok=noise_ok)


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialResult:
    """Run one seeded trial of the configured experiment."""
    ctx = _make_context(
        config.support(), config.M, config.L, config.nu, config.estimator, config.grid_size
    )
    return _run_single(ctx, config.root_seed, trial_index)


def _run_trials(
    ctx: _TrialContext, root_seed: int, trials: int, threads: int
) -> list[TrialResult]:
    if threads <= 1 or trials == 1:
        return [_run_single(ctx, root_seed, i) for i in range(trials)]
    chunk = max(1, trials // (threads * 8))
    with ProcessPoolExecutor(
        max_workers=threads, initializer=set_blas_threads, initargs=(1,)
    ) as pool:
        return list(pool.map(partial(_run_single, ctx, root_seed), range(trials), chunksize=chunk))


def fit_loglog_slope(points) -> tuple[float, float, float]:
    """Ordinary least squares of log10(y) against log10(x).

    Returns (slope, intercept, residual) with residual the RMS misfit in
    log10 units. Rejects non-positive coordinates.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (x, y) points")
    if np.any(pts <= 0):
        raise ValueError("log-log fit needs positive coordinates")
    lx = np.log10(pts[:, 0])
    ly = np.log10(pts[:, 1])
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return float(slope), float(intercept), residual


@dataclass(frozen=True)
class SweepRow:
    """Aggregate of one sweep point: swept value, fit coordinate, error moments."""

    value: float
    x: float
    mean: float
    std: float
    n: int
    n_censored: int


@dataclass(frozen=True)
class SweepResult:
    """Tabulated Monte-Carlo errors for one metric across the swept values."""

    metric: str
    rows: tuple[SweepRow, ...]
    slope: float | None
    intercept: float | None
    residual: float | None
    excluded: tuple[int, ...] = ()


def _axis_assignments(config: ExperimentConfig, assignments: dict) -> tuple[SupportSet, int, int, float]:
    """Apply {param: value} assignments, rebuilding the geometry when alpha moves."""
    geometry = config.geometry
    L, nu = config.L, config.nu
    for param, value in assignments.items():
        if param == "nu":
            nu = float(value)
        elif param == "L":
            L = int(round(value))
        elif param == "srf":
            if not isinstance(geometry, ClumpsSpec):
                raise ValueError("srf sweeps need a clumps geometry")
            # equispaced clumps have Delta = alpha/(M-1), so SRF = 1/alpha
            geometry = dataclasses.replace(geometry, alpha=1.0 / float(value))
        else:
            raise ValueError(f"unknown sweep parameter {param!r}")
    support = (
        generate_clumps_support(geometry) if isinstance(geometry, ClumpsSpec) else geometry
    )
    return support, config.M, L, nu


def _metrics_for(estimator: str) -> tuple[str, ...]:
    if estimator == "music":
        return ("nsc_sup",)
    if estimator == "esprit":
        return ("md",)
    return ("nsc_sup", "md")


def sweep(config: ExperimentConfig, threads: int = 1) -> list[SweepResult]:
    """Monte-Carlo means and log-log slope for every metric of the configured sweep.

    Censored trials enter the means at their caps (dropping them would bias
    the averages); points whose trials all censored, or whose mean is not
    positive, are excluded from the fit and reported in ``excluded``.
    """
    if config.sweep is None:
        raise ValueError("config has no sweep axis")
    axis = config.sweep
    if len(axis.values) < 3:
        raise ValueError("a sweep needs at least 3 values")
    trials = config.resolved_trials
    metrics = _metrics_for(config.estimator)

    per_point: list[tuple[float, float, list[TrialResult]]] = []
    for value in axis.values:
        support, M, L, nu = _axis_assignments(config, {axis.param: value})
        ctx = _make_context(support, M, L, nu, config.estimator, config.grid_size)
        results = _run_trials(ctx, config.root_seed, trials, threads)
        x = ctx.sigma_s_value if axis.x == "sigma_s" else value
        per_point.append((value, x, results))
        n_ok = sum(r.noise_level_ok for r in results)
        logger.info(
            "sweep %s=%g: %d/%d trials within the nominal noise-level condition",
            axis.param, value, n_ok, trials,
        )

    out = []
    for metric in metrics:
        rows = []
        excluded = []
        for idx, (value, x, results) in enumerate(per_point):
            errs = np.array([getattr(r, metric) for r in results], dtype=float)
            n_censored = sum(r.censored for r in results)
            row = SweepRow(
                value=value,
                x=x,
                mean=float(errs.mean()),
                std=float(errs.std(ddof=1)) if len(errs) > 1 else 0.0,
                n=len(errs),
                n_censored=n_censored,
            )
            rows.append(row)
            if n_censored == row.n or not row.mean > 0:
                excluded.append(idx)
        fit_pts = [(r.x, r.mean) for i, r in enumerate(rows) if i not in excluded]
        slope = intercept = residual = None
        if len(fit_pts) >= 3:
            slope, intercept, residual = fit_loglog_slope(fit_pts)
        out.append(
            SweepResult(
                metric=metric,
                rows=tuple(rows),
                slope=slope,
                intercept=intercept,
                residual=residual,
                excluded=tuple(excluded),
            )
        )
    return out


def sweep_to_csv(results: list[SweepResult], path) -> None:
    """One row per (sweep point, metric): metric,value,x,mean,std,n."""
    with open(path, "w") as fh:
        fh.write("metric,value,x,mean,std,n\n")
        for res in results:
            for row in res.rows:
                fh.write(
                    f"{res.metric},{row.value:.10g},{row.x:.10g},"
                    f"{row.mean:.10g},{row.std:.10g},{row.n}\n"
                )


@dataclass(frozen=True)
class PhaseGrid:
    """Average log2(md / Delta) over a two-parameter grid, with threshold crossings.

    ``cells[i, j]`` corresponds to axis1.values[i] and axis2.values[j].
    ``crossings[i]`` is the interpolated axis2 value where column i crosses
    the threshold, or None; columns without a crossing are skipped in the
    transition fit.
    """

    axis1: SweepAxis
    axis2: SweepAxis
    threshold: float
    cells: np.ndarray
    crossings: tuple[float | None, ...]
    transition_slope: float | None
    transition_intercept: float | None
    skipped_columns: tuple[int, ...]


def _column_crossing(levels: np.ndarray, yvals: np.ndarray, threshold: float) -> float | None:
    """First threshold crossing along a column, interpolated in log10(y)."""
    ly = np.log10(yvals)
    for j in range(levels.size - 1):
        c0, c1 = levels[j] - threshold, levels[j + 1] - threshold
        if c0 == 0.0:
            return float(yvals[j])
        if c0 * c1 < 0:
            frac = c0 / (c0 - c1)
            return float(10.0 ** (ly[j] + frac * (ly[j + 1] - ly[j])))
    if levels[-1] == threshold:
        return float(yvals[-1])
    return None


def phase_grid(
    config: ExperimentConfig,
    axis1: SweepAxis | None = None,
    axis2: SweepAxis | None = None,
    threads: int = 1,
) -> PhaseGrid:
    """Support-error phase portrait over two swept parameters.

    Cells average log2(md / Delta) over the trials; md comes from the
    shift-invariance estimator (the phase transition is a support-recovery
    phenomenon). A fitted line through the per-column threshold crossings
    summarizes the transition in log10-log10 coordinates.
    """
    axes = config.phase
    if axis1 is not None and axis2 is not None:
        axes = PhaseAxes(axis1=axis1, axis2=axis2, threshold=axes.threshold if axes else -1.0)
    if axes is None:
        raise ValueError("config has no phase axes")
    if len(axes.axis1.values) < 4 or len(axes.axis2.values) < 4:
        raise ValueError("phase grids need at least 4 values per axis")
    trials = config.resolved_trials

    n1, n2 = len(axes.axis1.values), len(axes.axis2.values)
    cells = np.empty((n1, n2))
    for i, v1 in enumerate(axes.axis1.values):
        for j, v2 in enumerate(axes.axis2.values):
            support, M, L, nu = _axis_assignments(
                config, {axes.axis1.param: v1, axes.axis2.param: v2}
            )
            delta = min_separation(support)
            ctx = _make_context(support, M, L, nu, "esprit", config.grid_size)
            results = _run_trials(ctx, config.root_seed, trials, threads)
            mds = np.maximum([r.md for r in results], _LOG_FLOOR)
            cells[i, j] = float(np.mean(np.log2(mds / delta)))

    yvals = np.asarray(axes.axis2.values)
    crossings = [ _column_crossing(cells[i], yvals, axes.threshold) for i in range(n1) ]
    skipped = tuple(i for i, c in enumerate(crossings) if c is None)
    fit_pts = [
        (axes.axis1.values[i], crossings[i]) for i in range(n1) if crossings[i] is not None
    ]
    slope = intercept = None
    if len(fit_pts) >= 3:
        slope, intercept, _ = fit_loglog_slope(fit_pts)
    return PhaseGrid(
        axis1=axes.axis1,
        axis2=axes.axis2,
        threshold=axes.threshold,
        cells=cells,
        crossings=tuple(crossings),
        transition_slope=slope,
        transition_intercept=intercept,
        skipped_columns=skipped,
    )


def phase_grid_to_csv(grid: PhaseGrid, cells_path, crossings_path) -> None:
    """Long-form cells CSV (axis1,axis2,cell) plus a per-column crossings CSV."""
    with open(cells_path, "w") as fh:
        fh.write(f"{grid.axis1.param},{grid.axis2.param},cell\n")
        for i, v1 in enumerate(grid.axis1.values):
            for j, v2 in enumerate(grid.axis2.values):
                fh.write(f"{v1:.10g},{v2:.10g},{grid.cells[i, j]:.10g}\n")
    with open(crossings_path, "w") as fh:
        fh.write(f"{grid.axis1.param},{grid.axis2.param}_crossing\n")
        for v1, cross in zip(grid.axis1.values, grid.crossings):
            if cross is not None:
                fh.write(f"{v1:.10g},{cross:.10g}\n")
