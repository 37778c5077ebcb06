"""Chebyshev-Tau machinery on the meridional interval y in [0, pi].

Coefficient vectors always live on the last axis.  The physical coordinate
is mapped from the Chebyshev variable by ``y = pi * (xi + 1) / 2`` so every
y-derivative carries a factor ``2 / pi``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft
import scipy.linalg
from numpy.polynomial import chebyshev as C

Y_LENGTH = np.pi
DY_FACTOR = 2.0 / np.pi


class SingularOperatorError(np.linalg.LinAlgError):
    """Raised when a tau system has no unique solution."""


def to_xi(y):
    return 2.0 * np.asarray(y) / Y_LENGTH - 1.0


def gl_points(n: int) -> np.ndarray:
    """Gauss-Lobatto points mapped to [0, pi], in ascending order."""
    if n < 2:
        raise ValueError("need at least two Gauss-Lobatto points")
    xi = -np.cos(np.pi * np.arange(n) / (n - 1))
    return Y_LENGTH * (xi + 1.0) / 2.0


def cheb_transform(samples: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients from values at ``gl_points(n)``.

    Uses a type-I DCT, so polynomial inputs of degree < n are recovered exactly
    (to round-off).  Works along the last axis; complex input is allowed.
    """
    s = np.asarray(samples)
    n = s.shape[-1]
    if n < 2:
        raise ValueError(f"expected at least 2 samples, got {n}")
    # DCT-I wants xi_j = cos(pi j / K), i.e. descending, i.e. reversed y
    c = scipy.fft.dct(s[..., ::-1], type=1, axis=-1) / (n - 1)
    c[..., 0] /= 2.0
    c[..., -1] /= 2.0
    return c


def cheb_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Values at ``gl_points(n)`` of a Chebyshev series with n coefficients."""
    c = np.array(coeffs, copy=True)
    n = c.shape[-1]
    if n < 2:
        raise ValueError(f"expected at least 2 coefficients, got {n}")
    c[..., 1:-1] /= 2.0
    return scipy.fft.dct(c, type=1, axis=-1)[..., ::-1]


def cheb_interp(func, n: int) -> np.ndarray:
    """Interpolating Chebyshev coefficients of ``func(y)`` with n terms."""
    return cheb_transform(func(gl_points(n)))


def cheb_eval(coeffs: np.ndarray, y) -> np.ndarray:
    """Evaluate a series (last axis) at arbitrary y; result has shape ``(..., len(y))``."""
    V = C.chebvander(to_xi(np.atleast_1d(y)), np.shape(coeffs)[-1] - 1)
    return np.asarray(coeffs) @ V.T


@lru_cache(maxsize=None)
def eval_matrix(n: int, n_points: int) -> np.ndarray:
    """Matrix mapping n coefficients to values on ``gl_points(n_points)``."""
    m = C.chebvander(to_xi(gl_points(n_points)), n - 1)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def transform_matrix(n_points: int, n: int) -> np.ndarray:
    """Matrix mapping values on ``gl_points(n_points)`` to the first n coefficients."""
    t = cheb_transform(np.eye(n_points))[:, :n].T
    t = np.ascontiguousarray(t)
    t.setflags(write=False)
    return t


def ddy(coeffs: np.ndarray) -> np.ndarray:
    """d/dy of a Chebyshev series on [0, pi]; the output keeps the input length."""
    c = np.asarray(coeffs)
    n = c.shape[-1]
    if n == 1:
        return np.zeros_like(c)
    d = C.chebder(c, axis=-1) * DY_FACTOR
    pad = [(0, 0)] * (c.ndim - 1) + [(0, 1)]
    return np.pad(d, pad)


def y_integral(coeffs: np.ndarray) -> np.ndarray:
    """Antiderivative vanishing at y = 0; n + 1 output coefficients."""
    c = np.asarray(coeffs)
    return C.chebint(c, lbnd=-1.0, axis=-1) / DY_FACTOR


@lru_cache(maxsize=None)
def derivative_matrix(n: int, order: int = 1) -> np.ndarray:
    D = ddy(np.eye(n)).T
    out = np.linalg.matrix_power(D, order) if order != 1 else D
    out = np.ascontiguousarray(out)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def integral_weights(n: int) -> np.ndarray:
    """w with ``w @ c`` equal to the integral over [0, pi] (Clenshaw-Curtis, exact)."""
    j = np.arange(n)
    w = np.zeros(n)
    even = j % 2 == 0
    w[even] = 2.0 / (1.0 - j[even] ** 2)
    w *= Y_LENGTH / 2.0
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def gram_matrix(n: int) -> np.ndarray:
    """G[i, j] = integral over [0, pi] of T_i T_j."""
    w = integral_weights(2 * n)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    g = 0.5 * (w[i + j] + w[np.abs(i - j)])
    g.setflags(write=False)
    return g


def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Integral over [0, pi] of a * conj(b), reduced over the last axis."""
    G = gram_matrix(np.shape(a)[-1])
    return np.einsum("...i,ij,...j->...", a, G, np.conj(b))


@lru_cache(maxsize=None)
def _product_index(n: int):
    k, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i1 = np.where(k >= j, k - j, n)
    i2 = np.where(k + j < n, k + j, n)
    i3 = np.where((j >= k) & (k > 0), j - k, n)
    return i1, i2, i3


def product_matrix(a: np.ndarray) -> np.ndarray:
    """Matrix of ``b -> P_n(a * b)``, the product truncated to n coefficients.

    Built from ``T_i T_j = (T_{i+j} + T_{|i-j|}) / 2``.  Leading axes of ``a``
    are treated as a batch.
    """
    a = np.asarray(a)
    n = a.shape[-1]
    pad = [(0, 0)] * (a.ndim - 1) + [(0, 1)]
    ap = np.pad(a, pad)
    i1, i2, i3 = _product_index(n)
    return 0.5 * (ap[..., i1] + ap[..., i2] + ap[..., i3])


@lru_cache(maxsize=None)
def boundary_rows(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows evaluating a series at y = 0 and at y = pi."""
    j = np.arange(n)
    return (-1.0) ** j, np.ones(n)


@lru_cache(maxsize=None)
def parity_rows(n: int) -> np.ndarray:
    """Dirichlet conditions in the form used for the two tau rows.

    Row ``r`` (for r in n-2, n-1) sums the coefficients whose index has the
    parity of r.  Both vanish iff the series vanishes at both walls; the split
    keeps even/odd subspaces decoupled.
    """
    j = np.arange(n)
    rows = np.array([(j % 2 == (n - 2) % 2), (j % 2 == (n - 1) % 2)], dtype=float)
    rows.setflags(write=False)
    return rows


def tau_matrix(a, b, n: int) -> np.ndarray:
    """``a D^2 + b I`` with its two highest rows replaced by the Dirichlet rows."""
    D2 = derivative_matrix(n, 2)
    A = a * D2 + b * np.eye(n)
    A[n - 2 :] = parity_rows(n)
    return A


def _check_conditioning(A: np.ndarray, m) -> None:
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularOperatorError(
            f"tau operator for mode {m} is singular (condition number {cond:.3e})"
        )


def tau_solve(m, a, b, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(a D^2 + b) V = rhs`` with ``V(0) = V(pi) = 0``.

    ``m`` only labels the mode in error messages.  The last two rows of
    ``rhs`` are discarded (classical tau).
    """
    rhs = np.asarray(rhs)
    n = rhs.shape[-1]
    if n < 3:
        raise ValueError("tau_solve needs at least 3 coefficients")
    A = tau_matrix(a, b, n)
    _check_conditioning(A, m)
    r = np.array(rhs, dtype=np.result_type(A, rhs), copy=True)
    r[..., n - 2 :] = 0.0
    lu = scipy.linalg.lu_factor(A)
    if r.ndim == 1:
        return scipy.linalg.lu_solve(lu, r)
    return scipy.linalg.lu_solve(lu, r.reshape(-1, n).T).T.reshape(r.shape)
