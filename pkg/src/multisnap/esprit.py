"""Shift-invariance frequency estimation and the support matching distance.

The two row-shifted subbases U0 (first M-1 rows) and U1 (last M-1 rows) of a
signal-space basis satisfy U1 = U0 Psi up to noise, where the eigenvalues of
Psi are exp(-2 pi i omega_j). Frequencies are read off the eigenvalue
arguments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .signal_model import SnapshotBatch, SupportSet
from .subspace import SubspaceBasis, empirical_covariance, signal_space

__all__ = [
    "EspritSolution",
    "EstimatorDegeneracy",
    "ShiftInvarianceError",
    "esprit_estimate",
    "esprit_pipeline",
    "matching_distance",
]

# singular values of U0 below this fraction of the largest are treated as zero
_PINV_RCOND = 1e-12

# exhaustive matching is factorial; switch to the cyclic matcher above this size
_BRUTE_FORCE_MAX = 8


class EstimatorDegeneracy(RuntimeError):
    """The estimator hit a numerically degenerate configuration."""


class ShiftInvarianceError(EstimatorDegeneracy):
    """U0 is rank deficient, so the shift-invariance system has no stable solution."""


@dataclass(frozen=True)
class EspritSolution:
    psi_hat: np.ndarray
    eigenvalues: np.ndarray
    estimated_support: SupportSet


def esprit_estimate(basis: SubspaceBasis) -> EspritSolution:
    """Solve U0 Psi = U1 in least squares and map eigenvalue arguments to [0, 1).

    The estimate depends only on the span of ``basis``: right-multiplying by
    any unitary matrix changes Psi by a similarity and leaves its eigenvalues
    fixed.
    """
    u = basis.basis
    M, S = u.shape
    if M < S + 1:
        raise ValueError(f"shift invariance needs M >= S + 1 (M={M}, S={S})")
    u0 = u[:-1, :]
    u1 = u[1:, :]
    left, sing, righth = np.linalg.svd(u0, full_matrices=False)
    if sing[-1] <= _PINV_RCOND * sing[0]:
        ratio = sing[-1] / sing[0] if sing[0] > 0 else 0.0
        raise ShiftInvarianceError(
            "shift_invariance_degenerate: first-rows subbasis is rank deficient "
            f"(sigma_min/sigma_max = {ratio:.2e})"
        )
    psi = righth.conj().T @ ((left.conj().T @ u1) / sing[:, None])
    lam = np.linalg.eigvals(psi)
    # np.angle is the principal value in (-pi, pi]; -arg/2pi then lands in [0, 1)
    omegas = np.mod(-np.angle(lam) / (2.0 * np.pi), 1.0)
    try:
        estimate = SupportSet(omegas)
    except ValueError as exc:
        raise EstimatorDegeneracy(f"coincident frequency estimates: {exc}") from exc
    return EspritSolution(psi_hat=psi, eigenvalues=lam, estimated_support=estimate)


def _torus_distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = np.mod(np.abs(a[:, None] - b[None, :]), 1.0)
    return np.minimum(d, 1.0 - d)


@lru_cache(maxsize=None)
def _permutation_table(S: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(S))), dtype=np.intp)


def _md_brute_force(truth: np.ndarray, estimate: np.ndarray) -> float:
    d = _torus_distance_matrix(truth, estimate)
    S = truth.size
    perms = _permutation_table(S)
    costs = d[np.arange(S)[None, :], perms].max(axis=1)
    return float(costs.min())


def _md_cyclic(truth: np.ndarray, estimate: np.ndarray) -> float:
    # the min-max criterion on a circle admits an order-preserving optimal
    # matching, so only the S cyclic shifts of sorted-to-sorted need checking
    t = np.sort(truth)
    e = np.sort(estimate)
    best = np.inf
    for shift in range(t.size):
        cost = _torus_distance_matrix(t, np.roll(e, -shift)).diagonal().max()
        best = min(best, float(cost))
    return best


def matching_distance(truth: SupportSet, estimate: SupportSet) -> float:
    """Smallest over pairings of the largest wrap-around location error.

    Exhaustive over permutations for small supports; larger supports use the
    cyclic order-preserving matcher, which is equivalent for this min-max
    criterion.
    """
    if truth.S != estimate.S:
        raise ValueError(f"cardinality mismatch: {truth.S} vs {estimate.S}")
    if truth.S <= _BRUTE_FORCE_MAX:
        return _md_brute_force(truth.points, estimate.points)
    return _md_cyclic(truth.points, estimate.points)


def esprit_pipeline(batch: SnapshotBatch, S: int) -> tuple[EspritSolution, float | None]:
    """Covariance, signal space, and shift-invariance estimate in one call.

    Returns the solution together with its matching distance against the
    batch ground truth, or None when the batch carries no truth.
    """
    basis = signal_space(empirical_covariance(batch), S)
    solution = esprit_estimate(basis)
    md = None
    if batch.ground_truth is not None:
        md = matching_distance(batch.ground_truth.support, solution.estimated_support)
    return solution, md
