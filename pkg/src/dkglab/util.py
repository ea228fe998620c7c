"""Shared helpers: deterministic per-mode hashing, thread pool sizing, versioning."""

from __future__ import annotations

import os
import subprocess
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "DKGLAB_THREADS"


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer on uint64 arrays."""
    x = x.astype(np.uint64, copy=True)
    with np.errstate(over="ignore"):
        x += np.uint64(0x9E3779B97F4A7C15)
        z = x
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def mode_hash_uniform(seed: int, *indices) -> np.ndarray:
    """
    Deterministic uniform(0,1) value per integer lattice mode.

    Depends only on (seed, indices), not on array layout or grid size, so a
    coarse lattice's modes keep their values on any refinement.
    """
    arrs = [np.asarray(ix) for ix in indices]
    shape = np.broadcast_shapes(*(a.shape for a in arrs)) if arrs else ()
    acc = np.full(shape, np.uint64(seed) ^ np.uint64(0xD6E8FEB86659FD93), dtype=np.uint64)
    acc = splitmix64(acc)
    for k, idx in enumerate(arrs):
        with np.errstate(over="ignore"):
            term = idx.astype(np.int64).view(np.uint64) + np.uint64(0x9E3779B97F4A7C15) * np.uint64(k + 1)
            acc = splitmix64(acc ^ splitmix64(term))
    # 53-bit mantissa keeps the uniform deterministic across platforms
    return (acc >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def thread_count() -> int:
    """Worker count for scan pools, overridable via the DKGLAB_THREADS env var."""
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def run_jobs(fn, args_list):
    """Run fn over args_list, possibly in a thread pool; results keep input order."""
    n = thread_count()
    if n <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, args_list))


def smooth_time_cutoff(t: np.ndarray) -> np.ndarray:
    """Even C-infinity cutoff: 1 for |t| <= 1, 0 for |t| >= 2."""
    t = np.abs(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    out[t <= 1.0] = 1.0
    mid = (t > 1.0) & (t < 2.0)
    u = 2.0 - t[mid]  # in (0, 1)

    def b(x):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(x > 0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)

    out[mid] = b(u) / (b(u) + b(1.0 - u))
    return out


def code_version() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except Exception:
        pass
    from dkglab import __version__

    return __version__
