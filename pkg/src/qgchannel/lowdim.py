"""Three-mode Galerkin truncation of the channel model.

The stream function is approximated by
``psi = sqrt2 psi_A cos y + 2 psi_K cos 2x sin y + 2 psi_L sin 2x sin y``
and the vorticity equation is projected onto these three modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT2 = np.sqrt(2.0)
A_COEF = 8 * SQRT2 / (3 * np.pi)
B_COEF = 64 * SQRT2 / (15 * np.pi)
C_COEF = 8 * SQRT2 / (15 * np.pi)


@dataclass(frozen=True)
class LowDimState:
    psi_A: float
    psi_K: float
    psi_L: float

    def __array__(self, dtype=None, copy=None):
        return np.array([self.psi_A, self.psi_K, self.psi_L], dtype=dtype)

    @classmethod
    def from_array(cls, a) -> "LowDimState":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class LowDimParams:
    k: float = 0.01
    beta: float = 0.25
    h0: float = 0.2
    psi_A0: float = 0.2

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"friction k must be positive, got {self.k}")


def _rhs(s: np.ndarray, p: LowDimParams) -> np.ndarray:
    A, K, L = s[..., 0], s[..., 1], s[..., 2]
    b = 0.4 * p.beta
    return np.stack(
        [
            A_COEF * p.h0 * L - p.k * (A - p.psi_A0),
            -B_COEF * A * L + b * L - p.k * K,
            B_COEF * A * K - C_COEF * p.h0 * A - b * K - p.k * L,
        ],
        axis=-1,
    )


def lowdim_rhs(s, p: LowDimParams) -> np.ndarray:
    """Time derivatives ``(dpsi_A/dt, dpsi_K/dt, dpsi_L/dt)``."""
    return _rhs(np.asarray(s, dtype=float), p)


def lowdim_jacobian(s, p: LowDimParams) -> np.ndarray:
    A, K, L = np.asarray(s, dtype=float)
    b = 0.4 * p.beta
    return np.array(
        [
            [-p.k, 0.0, A_COEF * p.h0],
            [-B_COEF * L, -p.k, -B_COEF * A + b],
            [B_COEF * K - C_COEF * p.h0, B_COEF * A - b, -p.k],
        ]
    )


def reduced_cubic(p: LowDimParams) -> np.ndarray:
    """Coefficients (highest first) of the cubic in psi_A left after eliminating psi_K, psi_L.

    ``(A - A0) ((b2 A - b)^2 + k^2) + a1 c h0^2 A = 0``
    """
    b = 0.4 * p.beta
    a2, k = B_COEF, p.k
    return np.array(
        [
            a2**2,
            -2 * a2 * b - p.psi_A0 * a2**2,
            b**2 + k**2 + 2 * a2 * b * p.psi_A0 + A_COEF * C_COEF * p.h0**2,
            -p.psi_A0 * (b**2 + k**2),
        ]
    )


def real_cubic_roots(coeffs) -> np.ndarray:
    """Real roots of ``a x^3 + b x^2 + c x + d`` by Cardano / Viete."""
    a, b, c, d = (float(x) for x in coeffs)
    b, c, d = b / a, c / a, d / a
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2 * b**3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    scale = max(abs(p) ** 1.5, abs(q), 1e-300)
    if disc > 1e-14 * scale**2:
        r = np.sqrt(disc)
        t = np.cbrt(-q / 2.0 + r) + np.cbrt(-q / 2.0 - r)
        roots = [t]
    elif abs(p) < 1e-300:
        roots = [0.0]
    else:
        # three real roots (possibly repeated)
        rho = 2.0 * np.sqrt(-p / 3.0)
        arg = np.clip(3.0 * q / (p * rho), -1.0, 1.0)
        theta = np.arccos(arg) / 3.0
        roots = [rho * np.cos(theta - 2 * np.pi * j / 3.0) for j in range(3)]
    return np.sort(np.array(roots) - shift)[::-1]


def _complete(A: float, p: LowDimParams) -> np.ndarray:
    b = 0.4 * p.beta
    L = -C_COEF * p.h0 * A * p.k / ((B_COEF * A - b) ** 2 + p.k**2)
    K = (b - B_COEF * A) * L / p.k
    return np.array([A, K, L])


def _polish(s: np.ndarray, p: LowDimParams, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
    for _ in range(max_iter):
        r = _rhs(s, p)
        if np.abs(r).max() < tol * 1e-2:
            break
        s = s - np.linalg.solve(lowdim_jacobian(s, p), r)
    return s


def lowdim_equilibria(p: LowDimParams) -> list[LowDimState]:
    """All real equilibria, sorted by descending psi_A, each with ``|rhs| < 1e-12``."""
    roots = real_cubic_roots(reduced_cubic(p))
    out: list[np.ndarray] = []
    for A in roots:
        s = _polish(_complete(A, p), p)
        if np.abs(_rhs(s, p)).max() >= 1e-12:
            raise ArithmeticError(f"equilibrium polish failed at psi_A = {A}")
        if all(np.abs(s - o).max() > 1e-10 for o in out):
            out.append(s)
    out.sort(key=lambda s: -s[0])
    return [LowDimState.from_array(s) for s in out]


def lowdim_integrate(s0, p: LowDimParams, T: float, dt: float):
    """Classical fourth-order Runge-Kutta trajectory.

    Returns ``(t, states)`` with ``states`` of shape (n + 1, 3).  The last step
    is shortened so the trajectory ends exactly at T.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = int(np.ceil(T / dt - 1e-12))
    t = np.minimum(np.arange(n + 1) * dt, T)
    out = np.empty((n + 1, 3))
    s = np.asarray(s0, dtype=float).copy()
    out[0] = s
    # overflow is reported below as a non-finite state, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            h = t[i + 1] - t[i]
            k1 = _rhs(s, p)
            k2 = _rhs(s + 0.5 * h * k1, p)
            k3 = _rhs(s + 0.5 * h * k2, p)
            k4 = _rhs(s + h * k3, p)
            s = s + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(s)):
                raise FloatingPointError(f"non-finite low-order state at step {i + 1} (t = {t[i + 1]})")
            out[i + 1] = s
    return t, out


def lowdim_diagnostics(s, p: LowDimParams) -> tuple[float, float, float]:
    """``(U_ave, F_ave, closure_residual)`` of a truncated state.

    The closure residual measures the distance from the line
    ``F_ave = (1 - 3 pi^2/32) k U_ave + 3 pi/(8 sqrt2) k psi_A0`` which every
    equilibrium of the psi_A equation lies on.
    """
    A, _, L = np.asarray(s, dtype=float)
    U = 2 * SQRT2 / np.pi * A
    F = (32 / (3 * np.pi**2) - 1) * p.h0 * L + 2 * SQRT2 / np.pi * p.k * p.psi_A0
    return float(U), float(F), float(F - closure_line(U, p))


def closure_line(U_ave, p: LowDimParams):
    return (1 - 3 * np.pi**2 / 32) * p.k * U_ave + 3 * np.pi / (8 * SQRT2) * p.k * p.psi_A0


def implied_affine(p: LowDimParams) -> tuple[float, float, float]:
    """``(a, b, c)`` of the affine closure the truncated model imposes."""
    return 1.0, -(1 - 3 * np.pi**2 / 32) * p.k, -3 * np.pi / (8 * SQRT2) * p.k * p.psi_A0
