"""Finite differences on uniform grids.

Interior points use 4th-order central stencils; boundary points use one-sided
stencils of matching order built with Fornberg's recurrence, so the accuracy
does not collapse at segment ends. Curvature needs second derivatives with
error well below the cost tolerances even right next to a near-stationary
point, which 2nd-order boundary stencils cannot deliver.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def fornberg_weights(x0: float, grid: tuple[float, ...], order: int) -> np.ndarray:
    """Finite-difference weights for the derivative of given order at x0.

    Classic Fornberg recurrence over the (small) stencil `grid`.
    """
    x = np.asarray(grid, dtype=float)
    n = x.size
    if order >= n:
        raise ValueError("stencil too short for requested derivative order")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    for i in range(1, n):
        c2 = 1.0
        x_i = x[i]
        prev_row = c[i - 1].copy()  # row i builds on the pre-update row i-1
        for j in range(i):
            c3 = x_i - x[j]
            c2 *= c3
            for m in range(min(i, order), 0, -1):
                c[j, m] = ((x_i - x0) * c[j, m] - m * c[j, m - 1]) / c3
            c[j, 0] = (x_i - x0) * c[j, 0] / c3
        x_prev = x[i - 1]
        for m in range(min(i, order), 0, -1):
            c[i, m] = c1 * (m * prev_row[m - 1] - (x_prev - x0) * prev_row[m]) / c2
        c[i, 0] = -c1 * (x_prev - x0) * prev_row[0] / c2
        c1 = c2
    return c[:, order]


@lru_cache(maxsize=64)
def _boundary_weights(n: int, order: int, stencil: int) -> np.ndarray:
    """(rows, n) matrix mapping samples to the derivative at the first
    `rows` points, using one-sided `stencil`-point Fornberg weights on a
    unit-step grid. Mirrored for the right boundary by the caller."""
    rows = min(2, n - 1)
    W = np.zeros((rows, n))
    pts = tuple(range(min(stencil, n)))
    for i in range(rows):
        W[i, : len(pts)] = fornberg_weights(float(i), pts, order)
    return W


def _apply(values: np.ndarray, h: float, order: int) -> np.ndarray:
    y = np.asarray(values, dtype=float)
    n = y.shape[0]
    min_pts = 3 if order == 1 else 4
    if n < min_pts:
        raise ValueError(f"need at least {min_pts} samples")
    d = np.empty_like(y)
    scale = h**order

    if order == 1:
        d[1:-1] = (y[2:] - y[:-2]) / (2.0 * h)
        if n >= 5:
            d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)
    else:
        d[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)
        if n >= 5:
            d[2:-2] = (
                -y[:-4] + 16.0 * y[1:-3] - 30.0 * y[2:-2] + 16.0 * y[3:-1] - y[4:]
            ) / (12.0 * h * h)

    stencil = 6 if n >= 6 else n
    W = _boundary_weights(n, order, stencil)
    rows = W.shape[0]
    head = (W @ y.reshape(n, -1)).reshape((rows,) + y.shape[1:]) / scale
    Wr = W[:, ::-1]
    sign = -1.0 if order == 1 else 1.0
    tail = sign * (Wr @ y.reshape(n, -1)).reshape((rows,) + y.shape[1:]) / scale
    d[:rows] = head
    d[-rows:] = tail[::-1]
    return d


def first_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """d/dt of uniformly sampled values (along axis 0)."""
    return _apply(values, h, 1)


def second_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """d^2/dt^2 of uniformly sampled values (along axis 0)."""
    return _apply(values, h, 2)


def is_uniform(times: np.ndarray, rel_tol: float = 1e-8) -> bool:
    t = np.asarray(times, dtype=float)
    if t.size < 2:
        return True
    dt = np.diff(t)
    scale = max(abs(t[-1] - t[0]), 1.0)
    return bool(np.all(dt > 0) and np.max(np.abs(dt - dt.mean())) <= rel_tol * scale)
