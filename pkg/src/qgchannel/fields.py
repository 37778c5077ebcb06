"""Spectral state of the channel flow and the diagnostics built on it.

The state stores the mean zonal velocity profile U_0(y) and the meridional
velocity V_m(y) of each Fourier mode 1 <= m < M as Chebyshev coefficients.
The zonal velocity of a mode is never stored: ``U_m = (i/m) D V_m`` makes
the field divergence-free by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import chebyshev as cb

SYMMETRIES = ("full", "even", "sym")


@dataclass
class SpectralState:
    """Chebyshev-Fourier coefficients of a divergence-free velocity field.

    Attributes
    ----------
    U0 : ndarray, shape (N,)
        Real coefficients of the mean zonal velocity.
    V : ndarray, shape (M, N)
        Complex coefficients of the meridional velocity per mode.  Row 0 is
        always zero (``V_0 = 0``) and kept only to make indexing by m direct.
    symmetry : {"full", "even", "sym"}
        Space the state is meant to live in.
    """

    U0: np.ndarray
    V: np.ndarray
    symmetry: str = "full"

    def __post_init__(self):
        self.U0 = np.asarray(self.U0, dtype=float)
        self.V = np.asarray(self.V, dtype=complex)
        if self.V.ndim != 2 or self.V.shape[1] != self.U0.shape[0]:
            raise ValueError(
                f"inconsistent shapes U0 {self.U0.shape} and V {self.V.shape}"
            )
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"unknown symmetry {self.symmetry!r}")

    @property
    def M(self) -> int:
        return self.V.shape[0]

    @property
    def N(self) -> int:
        return self.U0.shape[0]

    @classmethod
    def zeros(cls, M: int, N: int, symmetry: str = "full") -> "SpectralState":
        return cls(np.zeros(N), np.zeros((M, N), dtype=complex), symmetry)

    def copy(self) -> "SpectralState":
        return SpectralState(self.U0.copy(), self.V.copy(), self.symmetry)

    def __add__(self, other: "SpectralState") -> "SpectralState":
        return SpectralState(self.U0 + other.U0, self.V + other.V, self.symmetry)

    def __sub__(self, other: "SpectralState") -> "SpectralState":
        return SpectralState(self.U0 - other.U0, self.V - other.V, self.symmetry)

    def scaled(self, a: float) -> "SpectralState":
        return SpectralState(a * self.U0, a * self.V, self.symmetry)

    def U_modes(self) -> np.ndarray:
        """Zonal-velocity coefficients per mode, row 0 being U_0."""
        U = np.empty_like(self.V)
        U[0] = self.U0
        m = np.arange(1, self.M)[:, None]
        U[1:] = 1j / m * cb.ddy(self.V[1:])
        return U

    def resized(self, M: int, N: int) -> "SpectralState":
        """Zero-pad or truncate to a new resolution.

        Truncation in N re-imposes the wall conditions on V by correcting its
        two highest kept coefficients.
        """
        out = SpectralState.zeros(M, N, self.symmetry)
        mm, nn = min(M, self.M), min(N, self.N)
        out.U0[:nn] = self.U0[:nn]
        out.V[:mm, :nn] = self.V[:mm, :nn]
        if N < self.N:
            out.V[1:] = enforce_dirichlet(out.V[1:])
        return out

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.U0)) and np.all(np.isfinite(self.V)))


def enforce_dirichlet(coeffs: np.ndarray) -> np.ndarray:
    """Adjust the two highest coefficients so the series vanishes at both walls."""
    c = np.array(coeffs, copy=True)
    n = c.shape[-1]
    rows = cb.parity_rows(n)
    for r in (n - 2, n - 1):
        c[..., r] -= c @ rows[r - (n - 2)]
    return c


# --------------------------------------------------------------------------
# symmetry subspaces


def parity_of_mode(m: int) -> int:
    """Chebyshev parity kept by V_m in the sym space (0 even, 1 odd).

    ``U(x + pi/2, pi - y) = U(x, y)`` and ``V(x + pi/2, pi - y) = -V(x, y)``
    give V_m odd about mid-channel for m = 0 mod 4 and even for m = 2 mod 4.
    """
    return 1 if m % 4 == 0 else 0


def symmetry_project(state: SpectralState, target: str) -> SpectralState:
    """Orthogonal projection onto S, S_even or S_sym."""
    if target not in SYMMETRIES:
        raise ValueError(f"unknown symmetry {target!r}")
    out = state.copy()
    out.symmetry = target
    if target == "full":
        return out
    out.V[1::2] = 0.0
    if target == "sym":
        n = np.arange(state.N)
        out.U0[n % 2 == 1] = 0.0
        for m in range(2, state.M, 2):
            out.V[m, n % 2 != parity_of_mode(m)] = 0.0
    return out


def symmetry_residual(state: SpectralState, target: str | None = None) -> float:
    target = target or state.symmetry
    p = symmetry_project(state, target)
    return max(np.abs(state.U0 - p.U0).max(initial=0.0), np.abs(state.V - p.V).max(initial=0.0))


# --------------------------------------------------------------------------
# physical space


@dataclass
class PhysicalField:
    """Point values on the tensor grid; ``values[j, i]`` sits at (x[i], y[j])."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray

    @property
    def Nx(self) -> int:
        return self.x.size

    @property
    def Ny(self) -> int:
        return self.y.size


class Fields(NamedTuple):
    U: PhysicalField
    V: PhysicalField
    psi: PhysicalField
    zeta: PhysicalField


def x_grid(Nx: int, period: float = 2 * np.pi) -> np.ndarray:
    return period * np.arange(Nx) / Nx


def synthesize(modes: np.ndarray, y: np.ndarray, Nx: int) -> np.ndarray:
    """Real field ``sum_m f_m(y) e^{imx}`` on an Nx-point x grid, shape (Ny, Nx)."""
    M = modes.shape[0]
    if Nx < 2 * M:
        raise ValueError(f"Nx = {Nx} must be at least 2M = {2 * M}")
    vals = cb.cheb_eval(modes, y)  # (M, Ny)
    spec = np.zeros((y.size, Nx // 2 + 1), dtype=complex)
    spec[:, :M] = vals.T
    return np.fft.irfft(spec * Nx, n=Nx, axis=-1)


def psi_modes(state: SpectralState) -> np.ndarray:
    """Stream-function coefficients (N + 1 terms) with psi = 0 on y = 0."""
    psi = np.zeros((state.M, state.N + 1), dtype=complex)
    psi[0] = -cb.y_integral(state.U0)
    m = np.arange(1, state.M)[:, None]
    psi[1:, :-1] = -1j * state.V[1:] / m
    return psi


def zeta_modes(state: SpectralState) -> np.ndarray:
    """Vorticity ``zeta = V_x - U_y`` per mode."""
    U = state.U_modes()
    m = np.arange(state.M)[:, None]
    return 1j * m * state.V - cb.ddy(U)


def eval_physical(state: SpectralState, Nx: int, Ny: int) -> Fields:
    """U, V, psi and zeta on an Nx x Ny grid (Gauss-Lobatto in y)."""
    x = x_grid(Nx)
    y = cb.gl_points(Ny)
    U = synthesize(state.U_modes(), y, Nx)
    V = synthesize(state.V, y, Nx)
    psi = synthesize(psi_modes(state), y, Nx)
    zeta = synthesize(zeta_modes(state), y, Nx)
    return Fields(*(PhysicalField(x, y, f) for f in (U, V, psi, zeta)))


# --------------------------------------------------------------------------
# domain averages


def compute_Uave(state: SpectralState) -> float:
    """``U_ave = (1/pi) * integral of U_0 over the channel width``."""
    return float(cb.integral_weights(state.N) @ state.U0 / np.pi)


def compute_Eave(state: SpectralState) -> float:
    """Average kinetic energy ``(1/2 pi^2) iint (U^2 + V^2)/2``."""
    U = state.U_modes()
    G = cb.gram_matrix(state.N)
    e = state.U0 @ G @ state.U0
    e += 2.0 * np.real(np.einsum("mi,ij,mj->", U[1:], G, U[1:].conj()))
    e += 2.0 * np.real(np.einsum("mi,ij,mj->", state.V[1:], G, state.V[1:].conj()))
    return float(e / (2.0 * np.pi))


def mean_hV(state: SpectralState, h_modes: np.ndarray) -> float:
    """Topographic drag ``(hV)_ave = (1/2 pi^2) iint h V``."""
    M = min(state.M, h_modes.shape[0])
    if M < 2:
        return 0.0
    s = cb.inner(h_modes[1:M], state.V[1:M])
    return float(2.0 * np.real(s.sum()) / np.pi)


def energy_weight_mean(N: int) -> np.ndarray:
    """W0 with ``U0^T W0 U0`` the mean-flow share of E_ave."""
    return cb.gram_matrix(N) / (2.0 * np.pi)


def energy_weight_mode(N: int, m: int) -> np.ndarray:
    """Wm with ``Re(V_m^H Wm V_m)`` the share of mode m (both signs) in E_ave."""
    G = cb.gram_matrix(N)
    D = cb.derivative_matrix(N)
    return (G + D.T @ G @ D / m**2) / np.pi


def lowdim_to_state(psi_A, psi_K, psi_L, M: int, N: int, symmetry: str = "sym") -> SpectralState:
    """Spectral state of ``psi = sqrt2 A cos y + 2K cos2x sin y + 2L sin2x sin y``."""
    s = SpectralState.zeros(M, N, symmetry)
    sin = cb.cheb_interp(np.sin, N)
    s.U0[:] = np.sqrt(2.0) * psi_A * sin
    if M > 2:
        s.V[2] = (2.0 * psi_L + 2.0j * psi_K) * sin
    return s
