"""Uniform-array measurement model.

Point sources live on the unit torus [0, 1). An M-sensor uniform array
responds to a unit source at omega with the steering vector
phi(omega) = [exp(-2 pi i k omega)]_{k=0..M-1}, and a batch of L snapshots is

    y(t_l) = Phi x(t_l) + e(t_l),   l = 1..L,

with Phi the M x S steering matrix of the support, x(t_l) the complex
amplitudes, and e(t_l) additive complex Gaussian noise. Matrices of stacked
snapshots carry a 1/sqrt(L) scaling so that second-moment quantities are
already normalized per snapshot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AmplitudeBatch",
    "ClumpsSpec",
    "ClumpsSpecError",
    "GroundTruth",
    "NoiseModel",
    "SnapshotBatch",
    "SupportSet",
    "UndefinedSeparationError",
    "derivative_steering",
    "generate_clumps_support",
    "min_separation",
    "srf",
    "steering_matrix",
    "steering_vector",
    "synthesize_snapshots",
    "torus_distance",
]


class UndefinedSeparationError(ValueError):
    """Minimum separation requested for a support with fewer than two points."""


class ClumpsSpecError(ValueError):
    """A clumped-support specification violates the separated-clumps rules."""


def _reduce_mod1(values) -> np.ndarray:
    pts = np.mod(np.asarray(values, dtype=float), 1.0)
    # mod can round tiny negatives up to exactly 1.0
    pts[pts >= 1.0] -= 1.0
    return pts


def torus_distance(a, b) -> np.ndarray | float:
    """Wrap-around distance |a - b| on the unit torus, elementwise."""
    d = np.mod(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)), 1.0)
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class SupportSet:
    """Distinct source locations on [0, 1), stored sorted ascending."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_1d(_reduce_mod1(self.points))
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("a support needs at least one point")
        pts = np.sort(pts)
        if np.unique(pts).size != pts.size:
            raise ValueError("support points must be pairwise distinct mod 1")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def S(self) -> int:
        return int(self.points.size)

    def to_json(self) -> str:
        return json.dumps({"points": self.points.tolist()})

    @classmethod
    def from_json(cls, doc) -> "SupportSet":
        data = json.loads(doc) if isinstance(doc, str) else doc
        return cls(np.asarray(data["points"], dtype=float))


def min_separation(support: SupportSet) -> float:
    """Smallest wrap-around distance between two support points.

    Raises UndefinedSeparationError for singleton supports rather than
    returning a sentinel; there is no meaningful separation of one point.
    """
    if support.S < 2:
        raise UndefinedSeparationError(
            "minimum separation is undefined for a single-point support"
        )
    # the minimum cyclic gap of the sorted points is <= 1/2, hence equals
    # the minimum torus distance over all pairs
    gaps = np.diff(support.points, append=support.points[0] + 1.0)
    return float(gaps.min())


def srf(support: SupportSet, M: int) -> float:
    """Super-resolution factor 1 / ((M - 1) * Delta) of a support under M sensors."""
    if M < 2:
        raise ValueError("super-resolution factor needs at least two sensors")
    return 1.0 / ((M - 1) * min_separation(support))


def steering_vector(omega: float, M: int) -> np.ndarray:
    """Array response [exp(-2 pi i k omega)] for k = 0..M-1; Euclidean norm sqrt(M)."""
    if M < 1:
        raise ValueError("need at least one sensor")
    return np.exp(-2j * np.pi * np.arange(M) * (omega % 1.0))


def steering_matrix(support: SupportSet, M: int) -> np.ndarray:
    """M x S matrix whose columns are the steering vectors of the support points."""
    if M < support.S:
        raise ValueError(
            f"need at least as many sensors as sources (M={M}, S={support.S})"
        )
    return np.exp(-2j * np.pi * np.outer(np.arange(M), support.points))


def derivative_steering(omega: float, M: int) -> np.ndarray:
    """Entrywise derivative of the steering vector: (-2 pi i k) exp(-2 pi i k omega)."""
    if M < 1:
        raise ValueError("need at least one sensor")
    k = np.arange(M)
    return (-2j * np.pi * k) * np.exp(-2j * np.pi * k * (omega % 1.0))


@dataclass(frozen=True)
class ClumpsSpec:
    """R clumps of equally spaced points, each clump within one Rayleigh length.

    All spacings are expressed in units of the Rayleigh length 1/(M-1).
    A valid spec obeys three rules:

      (a) each clump of size lam spans (lam - 1) * alpha <= 1 Rayleigh lengths;
      (b) the generated support has minimum separation >= alpha / (M - 1);
      (c) with more than one clump, the anchors of any two clumps are at
          least beta / (M - 1) apart.

    When ``anchors`` is omitted the clumps are placed at r / num_clumps,
    r = 0..num_clumps-1, and rule (c) is validated against that placement.
    """

    num_clumps: int
    clump_sizes: tuple[int, ...]
    alpha: float
    beta: float
    M: int
    anchors: tuple[float, ...] | None = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in np.atleast_1d(self.clump_sizes))
        object.__setattr__(self, "clump_sizes", sizes)
        if self.num_clumps < 1:
            raise ClumpsSpecError("need at least one clump")
        if len(sizes) != self.num_clumps:
            raise ClumpsSpecError("clump_sizes length must equal num_clumps")
        if any(s < 1 for s in sizes):
            raise ClumpsSpecError("every clump needs at least one point")
        if not (self.alpha > 0 and self.beta > 0):
            raise ClumpsSpecError("alpha and beta must be positive")
        if self.M < 2:
            raise ClumpsSpecError("need at least two sensors")
        if self.anchors is None:
            anchors = tuple(r / self.num_clumps for r in range(self.num_clumps))
        else:
            anchors = tuple(float(a) for a in _reduce_mod1(np.atleast_1d(self.anchors)))
            if len(anchors) != self.num_clumps:
                raise ClumpsSpecError("anchors length must equal num_clumps")
        object.__setattr__(self, "anchors", anchors)
        self._validate_geometry()

    @property
    def max_clump_size(self) -> int:
        return max(self.clump_sizes)

    @property
    def total_points(self) -> int:
        return sum(self.clump_sizes)

    def _clump_points(self) -> list[np.ndarray]:
        spacing = self.alpha / (self.M - 1)
        return [
            _reduce_mod1(theta + spacing * np.arange(size))
            for theta, size in zip(self.anchors, self.clump_sizes)
        ]

    def _validate_geometry(self):
        rl = 1.0 / (self.M - 1)
        for r, size in enumerate(self.clump_sizes):
            width = (size - 1) * self.alpha
            if width > 1.0 + 1e-12:
                raise ClumpsSpecError(
                    f"rule (a) violated: clump {r} spans {width:.6g} Rayleigh "
                    "lengths but must fit within one"
                )
        if self.num_clumps > 1:
            for r in range(self.num_clumps):
                for s in range(r + 1, self.num_clumps):
                    gap = float(torus_distance(self.anchors[r], self.anchors[s]))
                    if gap < self.beta * rl * (1.0 - 1e-12):
                        raise ClumpsSpecError(
                            f"rule (c) violated: clumps {r} and {s} are anchored "
                            f"{gap / rl:.6g} Rayleigh lengths apart, below beta={self.beta:.6g}"
                        )
        support = SupportSet(np.concatenate(self._clump_points()))
        if support.S >= 2 and min_separation(support) < self.alpha * rl * (1.0 - 1e-12):
            raise ClumpsSpecError(
                "rule (b) violated: generated support is tighter than alpha/(M-1); "
                "decrease alpha or separate the clumps further"
            )

    def to_json(self) -> str:
        return json.dumps(
            {
                "num_clumps": self.num_clumps,
                "clump_sizes": list(self.clump_sizes),
                "alpha": self.alpha,
                "beta": self.beta,
                "anchors": list(self.anchors),
                "M": self.M,
            }
        )

    @classmethod
    def from_json(cls, doc) -> "ClumpsSpec":
        data = json.loads(doc) if isinstance(doc, str) else doc
        return cls(
            num_clumps=int(data["num_clumps"]),
            clump_sizes=tuple(data["clump_sizes"]),
            alpha=float(data["alpha"]),
            beta=float(data["beta"]),
            M=int(data["M"]),
            anchors=tuple(data["anchors"]) if data.get("anchors") is not None else None,
        )


def generate_clumps_support(spec: ClumpsSpec) -> SupportSet:
    """Materialize the clumped support: anchors plus multiples of alpha/(M-1)."""
    return SupportSet(np.concatenate(spec._clump_points()))


@dataclass(frozen=True)
class AmplitudeBatch:
    """Snapshot amplitudes packed as the 1/sqrt(L)-scaled S x L matrix."""

    columns: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=complex)
        if cols.ndim != 2:
            raise ValueError("amplitudes must be a 2-d (S x L) array")
        cols.flags.writeable = False
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_samples(cls, samples) -> "AmplitudeBatch":
        """Build from raw per-snapshot amplitude columns x(t_l)."""
        x = np.asarray(samples, dtype=complex)
        if x.ndim != 2:
            raise ValueError("amplitude samples must be a 2-d (S x L) array")
        return cls(x / np.sqrt(x.shape[1]))

    @property
    def S(self) -> int:
        return self.columns.shape[0]

    @property
    def L(self) -> int:
        return self.columns.shape[1]

    @property
    def covariance(self) -> np.ndarray:
        """Per-snapshot amplitude covariance X = X_L X_L*."""
        cov = self.columns @ self.columns.conj().T
        return (cov + cov.conj().T) / 2.0

    @property
    def lambda_min(self) -> float:
        """Smallest eigenvalue of the amplitude covariance; > 0 iff full rank."""
        return float(np.linalg.eigvalsh(self.covariance)[0])


@dataclass(frozen=True)
class NoiseModel:
    """Per-entry complex noise level.

    Noise entries are complex Gaussian: real and imaginary parts independent
    with variance nu**2 / 2 each, so a noise vector e has E[e e*] = nu**2 I.
    ``distribution`` is an extension hook for heavier-tailed families; only
    the complex Gaussian is implemented, and sub-Gaussian proxy parameters
    (which matter only inside non-computable constants) are deliberately not
    represented at runtime.
    """

    nu: float
    distribution: str = "complex_gaussian"

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("noise level must be nonnegative")
        if self.distribution != "complex_gaussian":
            raise ValueError(
                f"unsupported noise distribution {self.distribution!r}; "
                "only 'complex_gaussian' is implemented"
            )


@dataclass(frozen=True)
class GroundTruth:
    support: SupportSet
    amplitudes: AmplitudeBatch
    noise: NoiseModel
    seed: object = None


@dataclass(frozen=True)
class SnapshotBatch:
    """L measurement vectors packed as the 1/sqrt(L)-scaled M x L matrix."""

    data: np.ndarray
    ground_truth: GroundTruth | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2:
            raise ValueError("snapshot data must be a 2-d (M x L) array")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def M(self) -> int:
        return self.data.shape[0]

    @property
    def L(self) -> int:
        return self.data.shape[1]

    def to_csv(self, path) -> None:
        """Write M rows of 2L interleaved re/im columns for cross-tool checks."""
        flat = np.empty((self.M, 2 * self.L), dtype=float)
        flat[:, 0::2] = self.data.real
        flat[:, 1::2] = self.data.imag
        np.savetxt(path, flat, delimiter=",")

    @classmethod
    def from_csv(cls, path) -> "SnapshotBatch":
        flat = np.atleast_2d(np.loadtxt(path, delimiter=","))
        return cls(flat[:, 0::2] + 1j * flat[:, 1::2])


def _complex_standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1): unit total variance split over real and imaginary parts."""
    z = rng.standard_normal((2,) + tuple(shape))
    out = np.empty(shape, dtype=complex)
    out.real = z[0]
    out.imag = z[1]
    out *= 1.0 / np.sqrt(2.0)
    return out


def synthesize_snapshots(
    support: SupportSet,
    M: int,
    L: int,
    amplitudes="cn01",
    noise: NoiseModel = NoiseModel(0.0),
    seed=None,
) -> SnapshotBatch:
    """Draw an M x L snapshot batch y(t_l) = Phi x(t_l) + e(t_l).

    ``amplitudes`` is either the string "cn01" (i.i.d. CN(0,1) entries) or an
    explicit S x L array of raw amplitude columns. The amplitude and noise
    streams are split off the seed independently, so the same seed reuses the
    same standard draws at every noise level. Bit-identical given the seed.
    """
    if L < 1:
        raise ValueError("need at least one snapshot")
    if M < support.S:
        raise ValueError(f"need at least as many sensors as sources (M={M}, S={support.S})")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    amp_stream, noise_stream = root.spawn(2)

    if isinstance(amplitudes, str):
        if amplitudes != "cn01":
            raise ValueError(f"unknown amplitude source {amplitudes!r}")
        raw = _complex_standard_normal(np.random.default_rng(amp_stream), (support.S, L))
    else:
        raw = np.asarray(amplitudes, dtype=complex)
        if raw.shape != (support.S, L):
            raise ValueError(f"amplitudes must have shape ({support.S}, {L}), got {raw.shape}")
    batch = AmplitudeBatch.from_samples(raw)

    data = steering_matrix(support, M) @ batch.columns
    if noise.nu > 0:
        e = _complex_standard_normal(np.random.default_rng(noise_stream), (M, L))
        e *= noise.nu / np.sqrt(L)
        data += e
    truth = GroundTruth(support=support, amplitudes=batch, noise=noise, seed=seed)
    return SnapshotBatch(data=data, ground_truth=truth)
