"""Pseudo-spectral evaluation of the advective and topographic terms.

Products are formed on a grid padded by the 3/2 rule in x and, by default,
in y as well.  With both paddings the result is the exact product truncated
to the stored modes, which is what the analytic continuation Jacobian
differentiates.
"""

from __future__ import annotations

import numpy as np
import scipy.fft

from . import chebyshev as cb
from .fields import SpectralState
from .params import ChannelParams


def dealiased_points(N: int) -> int:
    """Gauss-Lobatto count that keeps quadratic aliasing out of the first N coefficients."""
    return int(np.ceil((3 * N - 2) / 2)) + 1


def mode_stride(symmetry: str) -> int:
    return 1 if symmetry == "full" else 2


def _real_apply(A: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """``A @ cols`` for complex ``cols`` of shape (..., n, J) using a real product."""
    c = np.ascontiguousarray(cols)
    out = A @ c.view(np.float64)
    return out.view(np.complex128)


class Transform:
    """Forward/backward transforms between mode coefficients and grid values.

    Only every ``stride``-th Fourier mode is carried, so the x grid covers one
    period ``2 pi / stride``.  Internally coefficients are handled column-wise,
    shape (..., N, J), so the Chebyshev stage is a real matrix product.
    """

    def __init__(self, M: int, N: int, stride: int = 1, dealias_y: bool = True, Nx: int | None = None):
        self.M, self.N, self.stride = M, N, stride
        self.J = (M + stride - 1) // stride
        self.wavenumbers = stride * np.arange(self.J)
        nx = max(3 * self.J, 4)
        self.Nx = Nx or nx + (nx % 2)
        self.Ny = dealiased_points(N) if dealias_y else N
        self.E = np.ascontiguousarray(cb.eval_matrix(N, self.Ny))  # (Ny, N)
        self.T = np.ascontiguousarray(cb.transform_matrix(self.Ny, N))  # (N, Ny)
        self.x = 2 * np.pi / stride * np.arange(self.Nx) / self.Nx
        self.y = cb.gl_points(self.Ny)

    def cols_to_physical(self, cols: np.ndarray) -> np.ndarray:
        """(..., N, J) complex coefficients -> (..., Ny, Nx) real values."""
        vals = _real_apply(self.E, cols)  # (..., Ny, J)
        return scipy.fft.irfft(vals, n=self.Nx, axis=-1, norm="forward")

    def physical_to_cols(self, values: np.ndarray) -> np.ndarray:
        """(..., Ny, Nx) real values -> (..., N, J) complex coefficients."""
        spec = scipy.fft.rfft(values, axis=-1, norm="forward")[..., : self.J]
        return _real_apply(self.T, spec)

    def to_physical(self, modes: np.ndarray) -> np.ndarray:
        """(..., J, N) complex coefficients -> (..., Ny, Nx) real values."""
        return self.cols_to_physical(np.swapaxes(np.asarray(modes, dtype=complex), -1, -2))

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        """(..., Ny, Nx) real values -> (..., J, N) complex coefficients."""
        return np.swapaxes(self.physical_to_cols(values), -1, -2)


class NonlinearTerm:
    """Explicit tendencies of the mean-flow and mode equations for fixed params.

    Calling the object on a state returns ``(mean, modes)``:

    * ``mean`` (N,) real: ``-P(U U_x + V U_y)_0 + P(h V)_0``
    * ``modes`` (M, N) complex, row m: ``-i m P(U lap V - V lap U + U h_x + V h_y)_m``

    where P is the truncated Fourier-Chebyshev projection.  Rows of modes not
    carried by the symmetry stride are returned as zero.
    """

    def __init__(self, params: ChannelParams, M: int, N: int, symmetry: str = "full", dealias_y: bool = True):
        self.params = params
        self.M, self.N = M, N
        self.tr = Transform(M, N, mode_stride(symmetry), dealias_y)
        self.D = np.ascontiguousarray(cb.derivative_matrix(N))
        self.D2 = np.ascontiguousarray(cb.derivative_matrix(N, 2))
        self.D3 = self.D2 @ self.D
        m = self.tr.wavenumbers
        self.m = m
        self.inv_m = np.zeros(m.size)
        self.inv_m[1:] = 1.0 / m[1:]
        self.h_modes = params.topography_modes(M, N)
        h = self.h_modes[:: self.tr.stride].T  # (N, J)
        hx = 1j * m * h
        hy = self.D @ h
        self.h_phys = self.tr.cols_to_physical(np.stack([h, hx, hy]))

    def fields_cols(self, U0: np.ndarray, Vc: np.ndarray) -> np.ndarray:
        """Stacked U, U_x, U_y, V, lap V, lap U as (6, N, J) columns.

        ``Vc`` holds V of the carried modes column-wise, column 0 ignored.
        """
        m, im = self.m, self.inv_m
        DV, D2V, D3V = (_real_apply(A, Vc) for A in (self.D, self.D2, self.D3))
        U = 1j * im * DV
        U[:, 0] = U0
        Uy = 1j * im * D2V
        Uy[:, 0] = self.D @ U0
        lapV = D2V - m**2 * Vc
        lapU = 1j * im * D3V - 1j * m * DV
        lapU[:, 0] = self.D2 @ U0
        Vc = Vc.copy()
        Vc[:, 0] = 0.0
        return np.stack([U, 1j * m * U, Uy, Vc, lapV, lapU])

    def fields(self, state: SpectralState) -> np.ndarray:
        """Stacked spectral fields U, U_x, U_y, V, lap V, lap U on the carried modes, (6, J, N)."""
        Vc = state.V[:: self.tr.stride].T
        return np.swapaxes(self.fields_cols(state.U0, Vc), -1, -2)

    def evaluate_cols(self, U0: np.ndarray, Vc: np.ndarray):
        """Tendencies from column-layout input; returns (mean (N,), modes (N, J))."""
        U, Ux, Uy, V, lapV, lapU = self.tr.cols_to_physical(self.fields_cols(U0, Vc))
        h, hx, hy = self.h_phys
        prods = np.stack(
            [U * Ux + V * Uy, U * lapV - V * lapU + U * hx + V * hy, h * V]
        )
        adv, vort, hV = self.tr.physical_to_cols(prods)
        mean = -adv[:, 0].real + hV[:, 0].real
        modes = -1j * self.m * vort
        modes[:, 0] = 0.0
        return mean, modes

    def __call__(self, state: SpectralState):
        if state.M != self.M or state.N != self.N:
            raise ValueError("state resolution does not match the nonlinear operator")
        mean, cols = self.evaluate_cols(state.U0, state.V[:: self.tr.stride].T)
        modes = np.zeros((self.M, self.N), dtype=complex)
        modes[self.tr.wavenumbers[1:]] = cols[:, 1:].T
        return mean, modes


def nonlinear_rhs(state: SpectralState, params: ChannelParams, dealias_y: bool = True):
    """Explicit advective and topographic tendencies; see :class:`NonlinearTerm`."""
    return NonlinearTerm(params, state.M, state.N, state.symmetry, dealias_y)(state)
