import numpy as np
import pytest

from multisnap import SupportSet, SubspaceBasis, min_separation


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)


def random_support(rng, S, min_sep=None, max_tries=10_000):
    """Uniform random support, rejection-sampled to a minimum separation."""
    for _ in range(max_tries):
        support = SupportSet(rng.uniform(0.0, 1.0, size=S))
        if S == 1 or min_sep is None or min_separation(support) >= min_sep:
            return support
    raise RuntimeError("could not draw a support with the requested separation")


def random_subspace(rng, M, S):
    """Haar-ish random S-dimensional subspace of C^M via QR of a Gaussian."""
    g = rng.standard_normal((M, S)) + 1j * rng.standard_normal((M, S))
    return SubspaceBasis(basis=np.linalg.qr(g)[0])
