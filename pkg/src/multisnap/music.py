"""Noise-space correlation profiles and circular peak extraction.

The noise-space correlation R(omega) = ||(I - P_U) phi(omega)|| / sqrt(M) of
a signal-space basis U vanishes exactly on the support in the noise-free
case; its reciprocal is the imaging function whose S largest local maxima
are the location estimates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .signal_model import SupportSet, steering_vector
from .subspace import SubspaceBasis

__all__ = [
    "DegeneratePeaksWarning",
    "NscProfile",
    "default_grid_size",
    "extract_support",
    "noise_space_correlation",
    "nsc_sup_perturbation",
    "sample_nsc",
]


class DegeneratePeaksWarning(UserWarning):
    """Fewer clean local minima than sources; result padded with best grid points."""


def default_grid_size(M: int) -> int:
    # 64 grid points per Rayleigh length keeps quantization far below the
    # statistical errors being measured
    return max(4096, 64 * M)


@lru_cache(maxsize=8)
def _grid_steering(M: int, G: int) -> np.ndarray:
    # one steering vector per grid node; identical across trials, so cached
    phig = np.exp(-2j * np.pi * np.outer(np.arange(M), np.arange(G) / G))
    phig.flags.writeable = False
    return phig


def noise_space_correlation(basis: SubspaceBasis, omega: float) -> float:
    """Normalized residual of phi(omega) against the basis span, in [0, 1].

    Evaluated as the norm of the explicit residual vector phi - U (U* phi);
    the Pythagorean shortcut sqrt(1 - ||U* phi||^2 / M) cancels to half
    precision at the roots, where exact zeros are the whole point.
    """
    phi = steering_vector(omega, basis.M)
    resid = phi - basis.basis @ (basis.basis.conj().T @ phi)
    val = float(np.linalg.norm(resid)) / np.sqrt(basis.M)
    return min(val, 1.0)


@dataclass(frozen=True)
class NscProfile:
    """Noise-space correlation sampled on the uniform circular grid k/G."""

    values: np.ndarray
    basis_tag: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("profile needs a 1-d grid of at least 2 values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def grid_size(self) -> int:
        return self.values.size

    @property
    def omegas(self) -> np.ndarray:
        return np.arange(self.grid_size) / self.grid_size

    def to_csv(self, path) -> None:
        np.savetxt(
            path,
            np.column_stack([self.omegas, self.values]),
            delimiter=",",
            header="omega,value",
            comments="",
        )


def sample_nsc(basis: SubspaceBasis, grid_size: int | None = None, basis_tag: str = "") -> NscProfile:
    """Evaluate the noise-space correlation of ``basis`` on the grid k/G."""
    G = default_grid_size(basis.M) if grid_size is None else int(grid_size)
    if G < 4 * basis.M:
        raise ValueError(f"grid too coarse: need at least 4M = {4 * basis.M} points, got {G}")
    phig = _grid_steering(basis.M, G)
    proj = basis.basis.conj().T @ phig
    s2 = np.einsum("ij,ij->j", proj.real, proj.real) + np.einsum(
        "ij,ij->j", proj.imag, proj.imag
    )
    vals = np.sqrt(np.clip(1.0 - s2 / basis.M, 0.0, 1.0))
    # the Pythagorean form cancels near roots; redo those few columns with
    # the explicit residual, which keeps full precision at exact zeros
    near_root = vals < 1e-5
    if np.any(near_root):
        resid = phig[:, near_root] - basis.basis @ proj[:, near_root]
        vals[near_root] = np.linalg.norm(resid, axis=0) / np.sqrt(basis.M)
    return NscProfile(values=np.minimum(vals, 1.0), basis_tag=basis_tag)


def nsc_sup_perturbation(profile_a: NscProfile, profile_b: NscProfile) -> float:
    """Grid sup-norm of the difference of two profiles.

    A lower bound on the continuum sup-norm distance, exact up to grid
    resolution.
    """
    if profile_a.grid_size != profile_b.grid_size:
        raise ValueError("profiles sampled on different grids")
    return float(np.max(np.abs(profile_a.values - profile_b.values)))


def _circular_local_minima(values: np.ndarray) -> np.ndarray:
    """Indices of strict circular local minima; a flat run counts once, at its start."""
    starts = np.flatnonzero(values != np.roll(values, 1))
    if starts.size == 0:
        return np.array([], dtype=np.intp)
    run_vals = values[starts]
    is_min = (run_vals < np.roll(run_vals, 1)) & (run_vals < np.roll(run_vals, -1))
    return starts[is_min]


def _refined_location(squares: np.ndarray, k: int) -> float:
    """Parabolic vertex through the squared profile on the 3-point stencil at k.

    The squared correlation is smooth through its roots (the correlation
    itself has a kink there), so the vertex of the parabola through the
    squares locates the minimum to O(1/G^2). Moves at most half a cell.
    """
    G = squares.size
    gm, g0, gp = squares[(k - 1) % G], squares[k], squares[(k + 1) % G]
    denom = gm - 2.0 * g0 + gp
    delta = 0.5 * (gm - gp) / denom if denom > 0 else 0.0
    delta = min(max(delta, -0.5), 0.5)
    return ((k + delta) / G) % 1.0


def extract_support(profile: NscProfile, S: int, refine: bool = True) -> SupportSet:
    """Estimate S locations from the S deepest circular local minima.

    Ranks local minima by profile value (equivalently by imaging-function
    peak height). When fewer than S minima exist the result is padded with
    the lowest-valued remaining grid points and a DegeneratePeaksWarning is
    issued.
    """
    v = profile.values
    G = v.size
    if not (1 <= S <= G):
        raise ValueError(f"need 1 <= S <= grid size, got S={S}")
    minima = _circular_local_minima(v)
    order = np.lexsort((minima, v[minima]))
    chosen = list(minima[order][:S])
    padded = len(chosen) < S
    if padded:
        taken = set(chosen)
        for k in np.lexsort((np.arange(G), v)):
            if len(chosen) >= S:
                break
            if int(k) not in taken:
                chosen.append(int(k))
                taken.add(int(k))
        warnings.warn(
            f"found {minima.size} local minima for {S} sources; "
            "padded with lowest-value grid points",
            DegeneratePeaksWarning,
        )
    minima_set = set(int(k) for k in minima)
    points = []
    squares = v * v
    for k in chosen:
        if refine and int(k) in minima_set:
            points.append(_refined_location(squares, int(k)))
        else:
            points.append(k / G)
    return SupportSet(np.asarray(points))
