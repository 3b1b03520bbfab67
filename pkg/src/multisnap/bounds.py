"""Conditioning diagnostics and theoretical error floors.

Collects the quantities that govern estimator stability: the S-th singular
value of the steering matrix, the constant-free shapes of the known
mean-square stability bounds, the exact unbiased-estimator covariance floor

    (nu^2 / 2L) * ( Re( Psi* (I - P_Phi) Psi  o  X ) )^{-1}

with Psi the columnwise steering derivative and o the Hadamard product, and
its clumped-support scaling proxy SRF^{2 lam - 2} nu^2 / (L (M-1)^3 ||X||_2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signal_model import ClumpsSpec, SupportSet, steering_matrix

__all__ = [
    "CrbResult",
    "FisherSingularError",
    "TheoryBound",
    "bound_shapes",
    "crb",
    "crb_clumps_scaling",
    "sigma_s",
]

_FISHER_RCOND = 1e-14


class FisherSingularError(RuntimeError):
    """The Fisher-information matrix is numerically singular (degenerate geometry)."""


def sigma_s(phi: np.ndarray) -> float:
    """S-th largest singular value of an M x S steering matrix, by direct SVD."""
    phi = np.asarray(phi)
    if phi.ndim != 2 or phi.shape[0] < phi.shape[1]:
        raise ValueError("steering matrix must be tall (M >= S)")
    return float(np.linalg.svd(phi, compute_uv=False)[-1])


@dataclass(frozen=True)
class TheoryBound:
    """One evaluated bound expression.

    ``constant_free`` marks values whose distribution-dependent constant was
    dropped; those are shapes for slope comparisons, not absolute bounds.
    """

    name: str
    value: float
    constant_free: bool
    inputs: dict

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("bound values are nonnegative")


def bound_shapes(
    M: int,
    S: int,
    L: int,
    nu: float,
    lambda_s: float,
    sigma_s_value: float,
    delta: float,
) -> list[TheoryBound]:
    """Evaluate the stability-bound shapes and SNR diagnostics for one configuration.

    Returns, in order: the mean-square subspace-distance shape, the identical
    NSC sup-perturbation shape, the moderate-SNR and large-SNR support-error
    shapes, and the exact regime diagnostics xi (scaled squared SNR) and rho
    (separation-conditioning ratio).
    """
    for name, val in [
        ("M", M), ("S", S), ("L", L), ("nu", nu),
        ("lambda_s", lambda_s), ("sigma_s", sigma_s_value), ("delta", delta),
    ]:
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    inputs = {
        "M": M, "S": S, "L": L, "nu": nu,
        "lambda_s": lambda_s, "sigma_s": sigma_s_value, "delta": delta,
    }
    subspace_sq = M * nu**2 / (lambda_s * sigma_s_value**2 * L)
    moderate_sq = 16.0 ** (S + 2) * S**3 * M**2 * nu**2 / (lambda_s * sigma_s_value**4 * L)
    xi = sigma_s_value**2 * lambda_s * L / (M * nu**2)
    rho = 4.0 ** (S + 2) * sigma_s_value**2 * delta / (math.sqrt(6.0) * S**2 * M)
    return [
        TheoryBound("subspace_dist_sq", subspace_sq, True, inputs),
        TheoryBound("nsc_sup_sq", subspace_sq, True, inputs),
        TheoryBound("esprit_md_sq_moderate", moderate_sq, True, inputs),
        TheoryBound("esprit_md_sq_large_snr", subspace_sq, True, inputs),
        TheoryBound("xi", xi, False, inputs),
        TheoryBound("rho", rho, False, inputs),
    ]


@dataclass(frozen=True)
class CrbResult:
    """Unbiased-estimator covariance floor for the support locations.

    ``matrix`` is the S x S lower-bound matrix, ``trace_bound`` its trace
    divided by S (a floor on the mean-square error averaged over sources),
    ``rcond`` the reciprocal condition number of the inverted Fisher factor,
    and ``scaling_reference`` the constant-free clumped-support proxy when a
    clumps spec was supplied.
    """

    matrix: np.ndarray
    trace_bound: float
    rcond: float
    scaling_reference: float | None = None


def crb(
    support: SupportSet,
    X: np.ndarray,
    nu: float,
    L: int,
    M: int,
    clumps: ClumpsSpec | None = None,
) -> CrbResult:
    """Evaluate the covariance floor of any unbiased support estimator.

    The projector complement is applied through an orthonormal factorization
    of the steering matrix (never through its normal equations, which are
    hopeless in the ill-conditioned regimes of interest). The Hadamard
    product with X is taken first, then the real part, then the inverse.
    """
    S = support.S
    if M < S:
        raise ValueError(f"need M >= S (M={M}, S={S})")
    if nu <= 0 or L < 1:
        raise ValueError("need positive noise level and at least one snapshot")
    X = np.asarray(X, dtype=complex)
    if X.shape != (S, S):
        raise ValueError(f"amplitude covariance must be {S} x {S}, got {X.shape}")
    if not np.allclose(X, X.conj().T, atol=1e-10):
        raise ValueError("amplitude covariance must be Hermitian")
    if float(np.linalg.eigvalsh(X)[0]) <= 0:
        raise ValueError("amplitude covariance must be strictly positive definite")

    phi = steering_matrix(support, M)
    psi = (-2j * np.pi * np.arange(M))[:, None] * phi
    q = np.linalg.qr(phi)[0]
    resid = psi - q @ (q.conj().T @ psi)
    fisher_core = resid.conj().T @ resid
    a = (fisher_core * X).real
    a = (a + a.T) / 2.0

    w, v = np.linalg.eigh(a)
    rcond = float(w[0] / w[-1]) if w[-1] > 0 else 0.0
    # a collapsed factor can be roundoff noise in every direction (e.g. M = S
    # leaves no residual), so also compare against the unprojected scale
    scale = float(np.linalg.norm(psi, "fro") ** 2 * np.linalg.norm(X, 2))
    if w[0] <= 0 or rcond < _FISHER_RCOND or w[-1] <= _FISHER_RCOND * scale:
        raise FisherSingularError(
            f"fisher_singular: reciprocal condition {rcond:.2e} "
            f"(largest eigenvalue {w[-1]:.2e} against scale {scale:.2e})"
        )
    inv = (v / w) @ v.T
    matrix = (nu**2 / (2.0 * L)) * (inv + inv.T) / 2.0
    reference = crb_clumps_scaling(clumps, X, nu, L) if clumps is not None else None
    return CrbResult(
        matrix=matrix,
        trace_bound=float(np.trace(matrix)) / S,
        rcond=rcond,
        scaling_reference=reference,
    )


def crb_clumps_scaling(spec: ClumpsSpec, X: np.ndarray, nu: float, L: int) -> float:
    """Constant-free clumped-support floor SRF^{2 lam - 2} nu^2 / (L (M-1)^3 ||X||_2).

    Requires every clump to have the same size lam (the exponent is set by
    the common clump cardinality; mixed sizes have no single scaling law).
    For singleton clumps the value is SRF-independent.
    """
    sizes = set(spec.clump_sizes)
    if len(sizes) != 1:
        raise ValueError("clumped-support scaling needs equal clump sizes")
    lam = sizes.pop()
    if nu <= 0 or L < 1:
        raise ValueError("need positive noise level and at least one snapshot")
    # equispaced clumps have separation alpha/(M-1), so SRF = 1/alpha
    srf_value = 1.0 / spec.alpha
    x_norm = float(np.linalg.norm(np.atleast_2d(np.asarray(X)), 2))
    return srf_value ** (2 * lam - 2) * nu**2 / (L * (spec.M - 1) ** 3 * x_norm)
