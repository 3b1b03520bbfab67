"""Best-effort BLAS thread pinning for worker processes.

Each pool worker should run single-threaded BLAS: an n-worker pool on top of
k-thread BLAS oversubscribes the machine n*k ways. OpenBLAS only reads its
environment at load time, so already-loaded libraries are adjusted through
their C API when one can be found.
"""

from __future__ import annotations

import ctypes

_SETTER_NAMES = (
    "openblas_set_num_threads",
    "openblas_set_num_threads64_",
    "scipy_openblas_set_num_threads64_",
    "goto_set_num_threads",
)


def _loaded_blas_paths() -> list[str]:
    paths = []
    try:
        with open("/proc/self/maps") as fh:
            for line in fh:
                parts = line.split()
                if len(parts) < 6:
                    continue
                path = parts[-1]
                if "blas" in path.lower() and path not in paths:
                    paths.append(path)
    except OSError:
        pass
    return paths


def set_blas_threads(n: int) -> bool:
    """Pin every discoverable loaded BLAS to n threads. True when any applied."""
    applied = False
    for path in _loaded_blas_paths():
        try:
            lib = ctypes.CDLL(path)
        except OSError:
            continue
        for name in _SETTER_NAMES:
            fn = getattr(lib, name, None)
            if fn is not None:
                try:
                    fn(int(n))
                    applied = True
                except (ctypes.ArgumentError, OSError):
                    continue
                break
    return applied
