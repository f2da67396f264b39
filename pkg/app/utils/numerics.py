"""
Finite-difference and chunked-evaluation helpers.

All helpers broadcast over leading axes: points carry their coordinates
on the last axis.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from ..config import settings


EPS = np.finfo(float).eps

# Fourth-order central stencil for a first derivative.
STENCIL_OFFSETS = (-2.0, -1.0, 1.0, 2.0)
STENCIL_WEIGHTS = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)

HESSIAN_STEP = EPS ** (1.0 / 6.0)
GRADIENT_STEP = EPS ** (1.0 / 5.0)


def unit_vectors(y: np.ndarray) -> tuple:
    """Split ``y`` into its Euclidean length and direction."""
    norm = np.linalg.norm(y, axis=-1)
    safe = np.where(norm > 0.0, norm, 1.0)
    return norm, y / safe[..., None]


def hessian_y(fun: Callable, x: np.ndarray, y: np.ndarray, step: float = HESSIAN_STEP) -> np.ndarray:
    """
    Hessian of ``fun(x, y)`` in ``y`` by a nested fourth-order stencil.

    Args:
        fun: Callable (x, y) -> values, broadcasting over leading axes
        x: Base points, shape (..., n)
        y: Fiber points, shape (..., n), nonzero
        step: Stencil step

    Returns:
        np.ndarray: Symmetric Hessians, shape (..., n, n)
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    n = y.shape[-1]
    eye = np.eye(n)
    hess = np.zeros(y.shape[:-1] + (n, n))
    for k in range(n):
        for l in range(k, n):
            acc = np.zeros(y.shape[:-1])
            for ma, ca in zip(STENCIL_OFFSETS, STENCIL_WEIGHTS):
                for mb, cb in zip(STENCIL_OFFSETS, STENCIL_WEIGHTS):
                    shifted = y + step * (ma * eye[k] + mb * eye[l])
                    acc = acc + ca * cb * fun(x, shifted)
            hess[..., k, l] = acc / step**2
            hess[..., l, k] = hess[..., k, l]
    return hess


def gradient_x(fun: Callable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of ``fun(x, y)`` in ``x``; step scales with 1 + |x|."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    n = x.shape[-1]
    eye = np.eye(n)
    h = GRADIENT_STEP * (1.0 + np.linalg.norm(x, axis=-1))
    grad = np.zeros(x.shape)
    for k in range(n):
        acc = np.zeros(x.shape[:-1])
        for m, c in zip(STENCIL_OFFSETS, STENCIL_WEIGHTS):
            acc = acc + c * fun(x + (m * h)[..., None] * eye[k], y)
        grad[..., k] = acc / h
    return grad


def mixed_xy(fun: Callable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Mixed second derivatives d^2 fun / dy^l dx^k.

    Returns:
        np.ndarray: shape (..., n, n) indexed [l, k]
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    n = x.shape[-1]
    eye = np.eye(n)
    hx = GRADIENT_STEP * (1.0 + np.linalg.norm(x, axis=-1))
    hy = GRADIENT_STEP
    out = np.zeros(x.shape[:-1] + (n, n))
    for k in range(n):
        for l in range(n):
            acc = np.zeros(x.shape[:-1])
            for ma, ca in zip(STENCIL_OFFSETS, STENCIL_WEIGHTS):
                xs = x + (ma * hx)[..., None] * eye[k]
                for mb, cb in zip(STENCIL_OFFSETS, STENCIL_WEIGHTS):
                    acc = acc + ca * cb * fun(xs, y + mb * hy * eye[l])
            out[..., l, k] = acc / (hx * hy)
    return out


def central_gradient(fun: Callable, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Second-order central gradient of a scalar field, step ``step * (1 + |x|)``."""
    x = np.asarray(x, float)
    n = x.shape[-1]
    eye = np.eye(n)
    h = step * (1.0 + np.linalg.norm(x, axis=-1))
    grad = np.zeros(x.shape)
    for k in range(n):
        shift = h[..., None] * eye[k]
        grad[..., k] = (fun(x + shift) - fun(x - shift)) / (2.0 * h)
    return grad


def chunked_map(fn: Callable, points: np.ndarray, threads: int = None, chunk: int = 4096) -> np.ndarray:
    """
    Apply ``fn`` to row chunks of ``points`` and concatenate in input order.

    Each chunk is computed independently, so the assembled array (and any
    reduction over it) does not depend on the number of threads.
    """
    threads = threads or settings.THREADS
    count = points.shape[0]
    if count == 0:
        return fn(points)
    slices = [points[i:i + chunk] for i in range(0, count, chunk)]
    if threads <= 1 or len(slices) == 1:
        parts = [fn(part) for part in slices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, slices))
    return np.concatenate(parts, axis=0)
