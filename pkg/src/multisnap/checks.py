"""Named reproduction gates: scripted experiments with pass/fail tolerances.

Each gate pins one published scaling law or exactness property to a concrete
seeded experiment and tolerance, so CI can assert the whole reproduction with
`check --suite all`. Gates return CriterionResult rows; the CLI prints one
line per row and fails the run when any row fails.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bounds import crb, crb_clumps_scaling, sigma_s
from .esprit import _md_brute_force, _md_cyclic, esprit_pipeline
from .harness import ExperimentConfig, PhaseAxes, SweepAxis, fit_loglog_slope, phase_grid, sweep
from .music import extract_support, noise_space_correlation, sample_nsc
from .signal_model import (
    ClumpsSpec,
    SupportSet,
    derivative_steering,
    generate_clumps_support,
    steering_matrix,
    steering_vector,
    synthesize_snapshots,
)
from .subspace import (
    SubspaceBasis,
    projector_distance,
    sin_theta_distance,
    sin_theta_from_gram,
    true_signal_space,
)

__all__ = ["CriterionResult", "SUITES", "format_result", "run_suite"]

ROOT_SEED = 20250809


@dataclass(frozen=True)
class CriterionResult:
    criterion: str
    passed: bool
    detail: str


def format_result(result: CriterionResult) -> str:
    tag = "PASS" if result.passed else "FAIL"
    return f"{tag} {result.criterion}: {result.detail}"


def _paper_clumps(lam: int, alpha: float = 0.2, M: int = 100) -> ClumpsSpec:
    return ClumpsSpec(
        num_clumps=2,
        clump_sizes=(lam, lam),
        alpha=alpha,
        beta=30.0,
        M=M,
        anchors=(0.2, 0.7),
    )


def _slope_row(name, slope, lo, hi, extra="") -> CriterionResult:
    detail = f"slope {slope:+.3f} within [{lo:+.2f}, {hi:+.2f}]{extra}"
    return CriterionResult(name, lo <= slope <= hi, detail)


def _random_support(rng, S, min_sep):
    while True:
        pts = np.sort(rng.uniform(size=S))
        support = SupportSet(pts)
        if S == 1:
            return support
        gaps = np.diff(pts, append=pts[0] + 1.0)
        if gaps.min() >= min_sep:
            return support


def check_noiseless_exactness(threads: int = 1) -> list[CriterionResult]:
    """Gate 1: both estimators are exact on 50 random noise-free configurations."""
    rng = np.random.default_rng(ROOT_SEED)
    t0 = time.perf_counter()
    worst_esprit = worst_music = 0.0
    for i in range(50):
        S = int(rng.integers(1, 9))
        M = int(rng.integers(S + 2, 65))
        support = _random_support(rng, S, 0.3 / (M - 1))
        batch = synthesize_snapshots(support, M, S, seed=np.random.SeedSequence(ROOT_SEED, spawn_key=(1, i)))
        from .esprit import matching_distance
        from .subspace import empirical_covariance, signal_space

        basis = signal_space(empirical_covariance(batch), S)
        _, md_esprit = esprit_pipeline(batch, S)
        estimate = extract_support(sample_nsc(basis, 8192), S, refine=True)
        md_music = matching_distance(support, estimate)
        worst_esprit = max(worst_esprit, md_esprit)
        worst_music = max(worst_music, md_music)
    elapsed = time.perf_counter() - t0
    return [
        CriterionResult(
            "1a noiseless shift-invariance",
            worst_esprit <= 1e-9,
            f"worst md {worst_esprit:.2e} <= 1e-9 over 50 configs",
        ),
        CriterionResult(
            "1b noiseless imaging peaks",
            worst_music <= 1e-5,
            f"worst md {worst_music:.2e} <= 1e-5 (G=8192, refined)",
        ),
        CriterionResult(
            "1c runtime", elapsed < 30.0, f"{elapsed:.1f}s < 30s"
        ),
    ]


def check_noise_slope(threads: int = 1) -> list[CriterionResult]:
    """Gate 2: both error metrics grow linearly with the noise level."""
    config = ExperimentConfig(
        geometry=_paper_clumps(2),
        L=1000,
        nu=0.1,
        estimator="both",
        trials=100,
        root_seed=ROOT_SEED,
        sweep=SweepAxis("nu", tuple(np.logspace(-3.0, -1.5, 6))),
    )
    return [
        _slope_row(f"2 noise slope ({r.metric})", r.slope, 0.85, 1.15)
        for r in sweep(config, threads=threads)
    ]


def check_snapshot_slope(threads: int = 1) -> list[CriterionResult]:
    """Gate 3: both error metrics contract like one over root snapshot count."""
    config = ExperimentConfig(
        geometry=_paper_clumps(2),
        L=1000,
        nu=0.1,
        estimator="both",
        trials=100,
        root_seed=ROOT_SEED,
        sweep=SweepAxis("L", tuple(np.logspace(2.0, 4.0, 6))),
    )
    return [
        _slope_row(f"3 snapshot slope ({r.metric})", r.slope, -0.6, -0.4)
        for r in sweep(config, threads=threads)
    ]


def check_conditioning_slope(threads: int = 1) -> list[CriterionResult]:
    """Gate 4: support error scales inversely with the steering conditioning.

    The support error tracks sigma_S tightly. The sup-perturbation of the
    correlation profile is dominated by its root-zone floor (about nu over
    sqrt L) in this regime and stays flat; its slope is reported for the
    record but the gate is the support error.
    """
    config = ExperimentConfig(
        geometry=_paper_clumps(2),
        L=1000,
        nu=0.1,
        estimator="both",
        trials=100,
        root_seed=ROOT_SEED,
        sweep=SweepAxis("srf", tuple(float(f) for f in range(2, 11)), x="sigma_s"),
    )
    results = {r.metric: r for r in sweep(config, threads=threads)}
    rows = [_slope_row("4 conditioning slope (md)", results["md"].slope, -1.25, -0.75)]
    rows.append(
        CriterionResult(
            "4i conditioning slope (nsc_sup, informational)",
            True,
            f"slope {results['nsc_sup'].slope:+.3f} (root-zone floor dominates; not gated)",
        )
    )
    return rows


def check_srf_slope(lam: int, threads: int = 1) -> list[CriterionResult]:
    """Gate 5: support error grows like SRF^(lam-1) for clump size lam."""
    if lam == 2:
        L, trials, lo, hi = 1000, 100, 0.8, 1.2
    else:
        L, trials, lo, hi = 25000, 200, 1.7, 2.4
    config = ExperimentConfig(
        geometry=_paper_clumps(lam),
        L=L,
        nu=0.1,
        estimator="esprit",
        trials=trials,
        root_seed=ROOT_SEED,
        sweep=SweepAxis("srf", tuple(float(f) for f in range(2, 11))),
    )
    results = {r.metric: r for r in sweep(config, threads=threads)}
    return [
        _slope_row(
            f"5 SRF slope (md, lam={lam})", results["md"].slope, lo, hi,
            extra=f" (L={L}, {trials} trials)",
        )
    ]


def check_sigma_law(threads: int = 1) -> list[CriterionResult]:
    """Gate 6: sigma_S decays like SRF^-(lam-1), by direct SVD."""
    rows = []
    for lam in (2, 3):
        srfs = np.arange(2.0, 11.0)
        sig = [
            sigma_s(steering_matrix(generate_clumps_support(_paper_clumps(lam, alpha=1.0 / f)), 100))
            for f in srfs
        ]
        slope = fit_loglog_slope(list(zip(srfs, sig)))[0]
        rows.append(
            _slope_row(f"6 sigma law (lam={lam})", slope, -(lam - 1) - 0.3, -(lam - 1) + 0.3)
        )
    # singleton clumps cannot sit closer than one Rayleigh length without
    # merging, so the lam=1 exponent (zero) is checked on separations of
    # 2..20 Rayleigh lengths
    sub_srfs = np.array([0.05, 0.08, 0.125, 0.2, 0.32, 0.5])
    sig = [
        sigma_s(steering_matrix(SupportSet([0.2, 0.2 + 1.0 / (99.0 * f)]), 100))
        for f in sub_srfs
    ]
    slope = fit_loglog_slope(list(zip(sub_srfs, sig)))[0]
    rows.append(_slope_row("6 sigma law (lam=1)", slope, -0.3, 0.3))
    return rows


def check_crb_closed_form(threads: int = 1) -> list[CriterionResult]:
    """Gate 7: single-source closed form and exact noise/snapshot rescaling."""
    nu, L, xbar = 0.3, 50, 2.5
    result = crb(SupportSet([0.3]), np.array([[xbar]]), nu, L, 2)
    expected = nu**2 / (4 * np.pi**2 * L * xbar)
    rel = abs(result.trace_bound - expected) / expected
    rows = [
        CriterionResult(
            "7a single-source closed form",
            rel <= 1e-9,
            f"relative error {rel:.2e} <= 1e-9",
        )
    ]
    support = SupportSet([0.1, 0.32, 0.67])
    X = np.eye(3)
    base = crb(support, X, 0.1, 100, 16).matrix
    nu2 = crb(support, X, 0.2, 100, 16).matrix
    l2 = crb(support, X, 0.1, 200, 16).matrix
    scale = np.max(np.abs(base))
    err_nu = np.max(np.abs(nu2 - 4.0 * base)) / (4.0 * scale)
    err_l = np.max(np.abs(l2 - 0.5 * base)) / (0.5 * scale)
    rows.append(
        CriterionResult(
            "7b rescaling identities",
            max(err_nu, err_l) <= 1e-12,
            f"max relative error {max(err_nu, err_l):.2e} <= 1e-12",
        )
    )
    return rows


def check_crb_clumps_exponent(threads: int = 1) -> list[CriterionResult]:
    """Gate 8: the exact floor and the constant-free proxy share the SRF exponent."""
    rows = []
    for lam in (2, 3):
        srfs = np.arange(2.0, 11.0)
        traces = []
        for f in srfs:
            spec = _paper_clumps(lam, alpha=1.0 / f)
            support = generate_clumps_support(spec)
            traces.append(
                crb(support, np.eye(support.S), 0.1, 1000, 100, clumps=spec).trace_bound
            )
        slope = fit_loglog_slope(list(zip(srfs, traces)))[0]
        target = 2 * lam - 2
        rows.append(
            _slope_row(f"8 floor exponent (lam={lam})", slope, target - 0.3, target + 0.3)
        )
    return rows


def check_oracle_equivalences(threads: int = 1) -> list[CriterionResult]:
    """Gate 9: dual routes agree (matching, subspace distance, derivative)."""
    rng = np.random.default_rng(ROOT_SEED)
    mismatches = 0
    for _ in range(1000):
        S = int(rng.integers(1, 9))
        a = np.sort(rng.uniform(size=S))
        b = np.sort(rng.uniform(size=S))
        if _md_cyclic(a, b) != _md_brute_force(a, b):
            mismatches += 1
    rows = [
        CriterionResult(
            "9a matching oracle equivalence",
            mismatches == 0,
            f"{mismatches} mismatches in 1000 instances (exact equality required)",
        )
    ]
    worst = 0.0
    for _ in range(100):
        M = int(rng.integers(3, 17))
        S = int(rng.integers(1, M))
        g = rng.standard_normal((M, S)) + 1j * rng.standard_normal((M, S))
        h = rng.standard_normal((M, S)) + 1j * rng.standard_normal((M, S))
        a = SubspaceBasis(np.linalg.qr(g)[0])
        b = SubspaceBasis(np.linalg.qr(h)[0])
        worst = max(worst, abs(projector_distance(a, b) - sin_theta_from_gram(a, b)))
    rows.append(
        CriterionResult(
            "9b distance formula cross-check",
            worst <= 1e-10,
            f"max |projector - gram| {worst:.2e} <= 1e-10 on 100 pairs",
        )
    )
    h = 1e-6
    worst = 0.0
    for _ in range(50):
        omega = float(rng.uniform())
        fd = (steering_vector(omega + h, 8) - steering_vector(omega - h, 8)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - derivative_steering(omega, 8)))))
    rows.append(
        CriterionResult(
            "9c steering derivative vs central differences",
            worst <= 1e-4,
            f"max error {worst:.2e} <= 1e-4",
        )
    )
    return rows


def check_nsc_inequality(threads: int = 1) -> list[CriterionResult]:
    """Gate 10: pointwise correlation gap never exceeds the subspace distance."""
    rng = np.random.default_rng(ROOT_SEED)
    worst = -np.inf
    for _ in range(1000):
        M = int(rng.integers(3, 13))
        S = int(rng.integers(1, M))
        g = rng.standard_normal((M, S)) + 1j * rng.standard_normal((M, S))
        h = rng.standard_normal((M, S)) + 1j * rng.standard_normal((M, S))
        a = SubspaceBasis(np.linalg.qr(g)[0])
        b = SubspaceBasis(np.linalg.qr(h)[0])
        omega = float(rng.uniform())
        gap = abs(noise_space_correlation(a, omega) - noise_space_correlation(b, omega))
        worst = max(worst, gap - sin_theta_distance(a, b))
    return [
        CriterionResult(
            "10 pointwise correlation inequality",
            worst <= 1e-12,
            f"max (gap - dist) {worst:.2e} <= 1e-12 on 1000 triples",
        )
    ]


def check_phase_transitions(lam: int, kind: str, threads: int = 1) -> list[CriterionResult]:
    """Gate 11: coarse phase-transition grids reproduce the published slopes."""
    if kind == "nu_L":
        axes = PhaseAxes(
            axis1=SweepAxis("L", tuple(np.logspace(2.0, 4.0, 6))),
            axis2=SweepAxis("nu", tuple(np.logspace(-3.4, -1.0, 6))),
        )
        target, tol = 0.5, 0.15
        base = dict(L=1000, nu=0.1)
    elif kind == "nu_srf":
        axes = PhaseAxes(
            axis1=SweepAxis("srf", tuple(np.logspace(np.log10(2.0), 1.0, 6))),
            axis2=SweepAxis("nu", tuple(np.logspace(-3.4, -0.4, 6))),
        )
        target, tol = -(lam - 1), 0.3
        base = dict(L=1000 if lam == 2 else 2500, nu=0.1)
    else:
        raise ValueError(f"unknown phase kind {kind!r}")
    config = ExperimentConfig(
        geometry=_paper_clumps(lam),
        estimator="esprit",
        trials=50,
        root_seed=ROOT_SEED,
        phase=axes,
        **base,
    )
    grid = phase_grid(config, threads=threads)
    name = f"11 phase {kind} (lam={lam})"
    if grid.transition_slope is None:
        return [
            CriterionResult(
                name, False, f"too few crossings ({len(grid.skipped_columns)} columns skipped)"
            )
        ]
    n_cross = len(axes.axis1.values) - len(grid.skipped_columns)
    return [
        _slope_row(
            name, grid.transition_slope, target - tol, target + tol,
            extra=f" ({n_cross}/{len(axes.axis1.values)} columns crossed)",
        )
    ]


SUITES = {
    "noiseless": [check_noiseless_exactness],
    "slopes-lambda2": [
        check_noise_slope,
        check_snapshot_slope,
        check_conditioning_slope,
        lambda threads=1: check_srf_slope(2, threads),
    ],
    "slopes-lambda3": [lambda threads=1: check_srf_slope(3, threads)],
    "sigma-law": [check_sigma_law],
    "crb": [check_crb_closed_form, check_crb_clumps_exponent],
    "oracles": [check_oracle_equivalences, check_nsc_inequality],
    "phase-lambda2": [
        lambda threads=1: check_phase_transitions(2, "nu_L", threads),
        lambda threads=1: check_phase_transitions(2, "nu_srf", threads),
    ],
    "phase-lambda3": [lambda threads=1: check_phase_transitions(3, "nu_srf", threads)],
}
SUITES["all"] = [fn for suite in SUITES.values() for fn in suite]


def run_suite(name: str, threads: int = 1) -> list[CriterionResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; available: {', '.join(SUITES)}")
    results = []
    for fn in SUITES[name]:
        results.extend(fn(threads=threads))
    return results
