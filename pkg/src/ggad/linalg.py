"""Numerical kernels: sparse aggregation, cosine similarity, seeded sampling.

All arrays are float64. Random streams come from numpy's PCG64 bit generator,
which is a fixed algorithm, so a given seed reproduces across platforms.
"""

from __future__ import annotations

import numpy as np

from .errors import LengthMismatch, NegativeStd, ShapeMismatch

COSINE_EPS = 1e-12


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """``n`` independent generators derived from one seed."""
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def spmm(adj, x: np.ndarray) -> np.ndarray:
    """Sparse-dense product ``adj @ x`` where ``adj`` is a NormalizedAdjacency."""
    m = adj.matrix if hasattr(adj, "matrix") else adj
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"cannot aggregate {x.shape} with adjacency {m.shape}")
    return np.asarray(m @ x)


def cosine_sim(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < COSINE_EPS or nb < COSINE_EPS:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def row_normalize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit-normalize rows; rows with norm below ``COSINE_EPS`` map to zero.

    Returns the normalized rows and the norms (zero where guarded), which is
    what the cosine backward pass needs.
    """
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    ok = norms >= COSINE_EPS
    safe = np.where(ok, norms, 1.0)
    out = np.where(ok[:, None], x / safe[:, None], 0.0)
    return out, np.where(ok, norms, 0.0)


def row_normalize_backward(grad_unit, unit, norms):
    """Pull a gradient w.r.t. normalized rows back to the raw rows."""
    ok = norms > 0
    safe = np.where(ok, norms, 1.0)
    radial = np.einsum("ij,ij->i", grad_unit, unit)
    g = (grad_unit - radial[:, None] * unit) / safe[:, None]
    return np.where(ok[:, None], g, 0.0)


def gaussian(rng: np.random.Generator, mean: float, std: float, shape) -> np.ndarray:
    if std < 0:
        raise NegativeStd(f"std must be >= 0, got {std}")
    if std == 0:
        return np.full(shape, float(mean))
    return rng.normal(mean, std, size=shape)


def glorot_init(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))
