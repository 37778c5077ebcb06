"""Physical configuration of the forced-dissipative channel: friction, beta,
forcing, topography and the closure on the mean zonal flow."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .chebyshev import cheb_interp, integral_weights

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Zonal:
    """``h = C * eta * cos(y)``."""

    C: float
    eta: float

    def modes(self, M: int, N: int) -> np.ndarray:
        h = np.zeros((M, N), dtype=complex)
        h[0] = cheb_interp(lambda y: self.C * self.eta * np.cos(y), N)
        return h


@dataclass(frozen=True)
class Ridge:
    """``h = h0 * cos(2x) * sin(y)``."""

    h0: float

    def modes(self, M: int, N: int) -> np.ndarray:
        h = np.zeros((M, N), dtype=complex)
        if M > 2:
            h[2] = cheb_interp(lambda y: 0.5 * self.h0 * np.sin(y), N)
        return h


@dataclass(frozen=True, eq=False)
class Spectral:
    """Topography given by Chebyshev coefficients per Fourier mode m >= 0.

    ``table[m]`` holds the coefficients of the complex profile h_m(y); the
    negative modes are implied by conjugate symmetry, so ``table[0]`` must be
    real.
    """

    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=complex)
        if t.ndim != 2:
            raise ValueError("spectral topography table must be 2-D (modes x coefficients)")
        if np.any(np.abs(t[0].imag) > 1e-14):
            raise ValueError("mode-0 topography must be real (conjugate symmetry)")
        object.__setattr__(self, "table", t)

    def modes(self, M: int, N: int) -> np.ndarray:
        h = np.zeros((M, N), dtype=complex)
        mm = min(M, self.table.shape[0])
        nn = min(N, self.table.shape[1])
        h[:mm, :nn] = self.table[:mm, :nn]
        h[0] = h[0].real
        return h


Topography = Union[Zonal, Ridge, Spectral]


@dataclass(frozen=True)
class ConstantFave:
    F_ave: float


@dataclass(frozen=True)
class ConstantUave:
    U_ave: float


@dataclass(frozen=True)
class Affine:
    """``a * F_ave + b * U_ave + c = 0``."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a == 0 and self.b == 0:
            raise ValueError("affine closure needs a != 0 or b != 0")


Closure = Union[ConstantFave, ConstantUave, Affine]


@dataclass(frozen=True)
class ChannelParams:
    """Nondimensional channel configuration.

    The fluctuating zonal force is ``F' = sqrt(2) k psi_A0 (sin y - 2/pi)``.
    """

    k: float
    beta: float
    psi_A0: float
    topography: Topography = field(default_factory=lambda: Ridge(0.0))
    closure: Closure = field(default_factory=lambda: ConstantFave(0.0))

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"friction k must be positive, got {self.k}")
        # zero-mean topography: only the mode-0 profile can carry a mean
        h0 = self.topography.modes(1, 64)[0].real
        mean = integral_weights(64) @ h0 / np.pi
        if abs(mean) > 1e-12 * max(1.0, np.abs(h0).max()):
            raise ValueError(f"topography must have zero channel mean, got {mean:.3e}")

    @property
    def forcing_amplitude(self) -> float:
        """C in ``F' = k C (sin y - 2/pi)``."""
        return SQRT2 * self.psi_A0

    def forcing(self, N: int) -> np.ndarray:
        """Chebyshev coefficients of F'(y)."""
        C = self.forcing_amplitude
        return cheb_interp(lambda y: self.k * C * (np.sin(y) - 2.0 / np.pi), N)

    def topography_modes(self, M: int, N: int) -> np.ndarray:
        return self.topography.modes(M, N)

    def with_closure(self, closure: Closure) -> "ChannelParams":
        return ChannelParams(self.k, self.beta, self.psi_A0, self.topography, closure)

    def with_topography(self, topography: Topography) -> "ChannelParams":
        return ChannelParams(self.k, self.beta, self.psi_A0, topography, self.closure)
