"""Empirical covariance, signal-space extraction, and subspace distances."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .signal_model import SnapshotBatch, SupportSet, steering_matrix

__all__ = [
    "EigengapWarning",
    "SubspaceBasis",
    "empirical_covariance",
    "projector_distance",
    "signal_space",
    "sin_theta_distance",
    "sin_theta_from_gram",
    "true_signal_space",
]

# relative eigenvalue gap below which the S-dimensional eigenspace is ambiguous
_GAP_TOL = 1e-12


class EigengapWarning(UserWarning):
    """The eigenvalue gap at the subspace cut is numerically zero."""


def empirical_covariance(batch: SnapshotBatch) -> np.ndarray:
    """Sample covariance (1/L) sum_l y(t_l) y(t_l)* as an M x M Hermitian matrix."""
    cov = batch.data @ batch.data.conj().T
    return (cov + cov.conj().T) / 2.0


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of an S-dimensional subspace of C^M.

    ``eigenvalues`` holds the S associated covariance eigenvalues in
    descending order when the basis came from an eigendecomposition, and is
    None for bases constructed directly from a span.
    """

    basis: np.ndarray
    eigenvalues: np.ndarray | None = None

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2 or b.shape[0] < b.shape[1]:
            raise ValueError("basis must be a tall M x S matrix")
        gram = b.conj().T @ b
        if not np.allclose(gram, np.eye(b.shape[1]), atol=1e-10):
            raise ValueError("basis columns must be orthonormal")
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)
        if self.eigenvalues is not None:
            ev = np.asarray(self.eigenvalues, dtype=float)
            if ev.shape != (b.shape[1],):
                raise ValueError("need one eigenvalue per basis column")
            if np.any(np.diff(ev) > 0):
                raise ValueError("eigenvalues must be sorted descending")
            ev.flags.writeable = False
            object.__setattr__(self, "eigenvalues", ev)

    @property
    def M(self) -> int:
        return self.basis.shape[0]

    @property
    def S(self) -> int:
        return self.basis.shape[1]


def signal_space(cov: np.ndarray, S: int) -> SubspaceBasis:
    """Eigenvectors of the S largest eigenvalues of a Hermitian covariance.

    Warns (never fails) when eigenvalues S and S+1 coincide to working
    precision, since the extracted eigenspace is then solver-order dependent.
    """
    cov = np.asarray(cov)
    M = cov.shape[0]
    if not (1 <= S <= M):
        raise ValueError(f"subspace dimension must be in 1..{M}, got {S}")
    w, v = np.linalg.eigh(cov)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    if S < M and abs(w[S - 1] - w[S]) <= _GAP_TOL * max(abs(w[0]), 1.0):
        warnings.warn(
            f"eigenvalues {S} and {S + 1} coincide to {_GAP_TOL:g}; "
            "signal space is ambiguous",
            EigengapWarning,
        )
    return SubspaceBasis(basis=v[:, :S], eigenvalues=w[:S])


def true_signal_space(support: SupportSet, M: int) -> SubspaceBasis:
    """Orthonormal basis of the noise-free signal space, the range of Phi."""
    u = np.linalg.svd(steering_matrix(support, M), full_matrices=False)[0]
    return SubspaceBasis(basis=u)


def sin_theta_distance(a: SubspaceBasis, b: SubspaceBasis) -> float:
    """Sine of the largest canonical angle between two equal-dimension subspaces.

    Computed as the largest singular value of the residual B - A (A* B),
    which keeps full precision for nearly equal spans (the textbook
    sqrt(1 - sigma_min(A* B)^2) form cancels to half precision there; that
    form and the projector-difference norm survive as cross-check routes).
    Equals the spectral norm of the projector difference.
    """
    if a.basis.shape != b.basis.shape:
        raise ValueError("subspace dimensions do not match")
    resid = b.basis - a.basis @ (a.basis.conj().T @ b.basis)
    s = np.linalg.svd(resid, compute_uv=False)
    return float(min(s[0], 1.0))


def sin_theta_from_gram(a: SubspaceBasis, b: SubspaceBasis) -> float:
    """sqrt(1 - sigma_min(A* B)^2); cross-check route, inaccurate near zero angle."""
    if a.basis.shape != b.basis.shape:
        raise ValueError("subspace dimensions do not match")
    s = np.linalg.svd(a.basis.conj().T @ b.basis, compute_uv=False)
    smin = min(float(s[-1]), 1.0)
    return float(np.sqrt(max(0.0, 1.0 - smin * smin)))


def projector_distance(a: SubspaceBasis, b: SubspaceBasis) -> float:
    """|| P_A - P_B ||_2 via explicit projectors; cross-check route only."""
    if a.basis.shape != b.basis.shape:
        raise ValueError("subspace dimensions do not match")
    pa = a.basis @ a.basis.conj().T
    pb = b.basis @ b.basis.conj().T
    return float(np.linalg.norm(pa - pb, 2))
