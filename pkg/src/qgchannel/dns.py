"""Semi-implicit time integration of the spectral channel equations.

Each step is a four-stage, third-order low-storage Runge-Kutta scheme for the
explicit terms (advection, everything containing h, and the mean force F_ave)
combined with a Crank-Nicolson treatment, stage by stage, of the friction and
beta terms.  Stage coefficients (Spalart, Moser & Rogers 1991)::

    a = (8/17, 17/60, 5/12, 3/4)
    b = (0, -15/68, -17/60, -5/12)
    alpha_i = a_i + b_i        (sum alpha_i = 1)

Stage i advances ``u_t = L u + N(u)`` by

    (1 - alpha_i dt L/2) u^i = (1 + alpha_i dt L/2) u^{i-1}
                               + dt (a_i N(u^{i-1}) + b_i N(u^{i-2})).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.signal

from . import chebyshev as cb
from .fields import SpectralState, compute_Eave, compute_Uave, mean_hV
from .nonlinear import NonlinearTerm
from .params import Affine, ChannelParams, ConstantFave, ConstantUave

RK_A = np.array([8 / 17, 17 / 60, 5 / 12, 3 / 4])
RK_B = np.array([0.0, -15 / 68, -17 / 60, -5 / 12])
RK_ALPHA = RK_A + RK_B


class SimulationError(RuntimeError):
    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class DnsConfig:
    dt: float
    T: float
    M: int
    N: int
    sample_every: int = 1
    symmetry: str = "sym"
    dealias_y: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if self.M < 1 or self.N < 4:
            raise ValueError(f"resolution too small: M={self.M}, N={self.N}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


def closure_force(state: SpectralState, params: ChannelParams, h_modes: np.ndarray | None = None) -> float:
    """Mean zonal force demanded by the closure at the current state."""
    c = params.closure
    if isinstance(c, ConstantFave):
        return float(c.F_ave)
    if h_modes is None:
        h_modes = params.topography_modes(state.M, state.N)
    if isinstance(c, ConstantUave):
        return params.k * c.U_ave - mean_hV(state, h_modes)
    if isinstance(c, Affine):
        if c.a == 0:
            # U_ave pinned at -c/b; F_ave follows from the mean-flow balance
            return params.k * (-c.c / c.b) - mean_hV(state, h_modes)
        return -(c.b / c.a) * compute_Uave(state) - c.c / c.a
    raise TypeError(f"unknown closure {c!r}")


@dataclass
class TimeSeries:
    """Sampled diagnostics.  ``mean_residual`` is filled in by :meth:`finalize`."""

    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    U_ave: np.ndarray = field(default_factory=lambda: np.zeros(0))
    E_ave: np.ndarray = field(default_factory=lambda: np.zeros(0))
    hV_ave: np.ndarray = field(default_factory=lambda: np.zeros(0))
    F_ave: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mean_residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    k: float = 0.0
    snapshots: list = field(default_factory=list)

    def __len__(self) -> int:
        return self.t.size

    def finalize(self) -> "TimeSeries":
        """Residual of ``dU_ave/dt = (hV)_ave - k U_ave + F_ave`` by central differences."""
        if self.t.size >= 3:
            dU = np.gradient(self.U_ave, self.t, edge_order=2)
            self.mean_residual = dU - self.hV_ave + self.k * self.U_ave - self.F_ave
        else:
            self.mean_residual = np.full(self.t.size, np.nan)
        return self

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "U_ave", "E_ave", "mean_residual"])
            for row in zip(self.t, self.U_ave, self.E_ave, self.mean_residual):
                w.writerow(["%.17g" % v for v in row])


class DNSSolver:
    """Precomputed stage operators for one parameter set and resolution."""

    def __init__(self, params: ChannelParams, cfg: DnsConfig):
        self.params, self.cfg = params, cfg
        M, N = cfg.M, cfg.N
        self.nl = NonlinearTerm(params, M, N, cfg.symmetry, cfg.dealias_y)
        self.h_modes = params.topography_modes(M, N)
        self.forcing = params.forcing(N)
        self.wn = self.nl.tr.wavenumbers[1:]
        k, beta, dt = params.k, params.beta, cfg.dt
        D2 = cb.derivative_matrix(N, 2)
        I = np.eye(N)
        n_modes = self.wn.size
        # stage maps [V | N] -> V, right-side tau rows already dropped
        self.PQ = np.empty((4, n_modes, N, 2 * N), dtype=complex)
        self.mean_lhs = np.empty(4)
        self.mean_rhs = np.empty(4)
        for i, al in enumerate(RK_ALPHA * dt):
            self.mean_lhs[i] = 1.0 + 0.5 * al * k
            self.mean_rhs[i] = 1.0 - 0.5 * al * k
            for j, m in enumerate(self.wn):
                lap = D2 - m**2 * I
                A = (1 + 0.5 * al * k) * lap + 0.5j * m * beta * al * I
                A[N - 2 :] = cb.parity_rows(N)
                cb._check_conditioning(A, m)
                Ainv = np.linalg.inv(A)
                Ainv[:, N - 2 :] = 0.0  # tau rows of the right side are discarded
                B = (1 - 0.5 * al * k) * lap - 0.5j * m * beta * al * I
                self.PQ[i, j, :, :N] = Ainv @ B
                self.PQ[i, j, :, N:] = dt * Ainv

    def explicit(self, state: SpectralState):
        mean, modes = self.nl(state)
        mean = mean + self.forcing
        mean[0] += closure_force(state, self.params, self.h_modes)
        return mean, modes[self.wn]

    def _explicit_rows(self, U0: np.ndarray, V: np.ndarray, scratch: SpectralState):
        Vc = np.zeros((self.cfg.N, self.wn.size + 1), dtype=complex)
        Vc[:, 1:] = V.T
        mean, cols = self.nl.evaluate_cols(U0, Vc)
        scratch.U0 = U0
        scratch.V[self.wn] = V
        mean = mean + self.forcing
        mean[0] += closure_force(scratch, self.params, self.h_modes)
        return mean, cols[:, 1:].T

    def step(self, state: SpectralState) -> SpectralState:
        U0 = state.U0.copy()
        V = state.V[self.wn].copy()
        scratch = SpectralState.zeros(state.M, state.N, state.symmetry)
        dt = self.cfg.dt
        prev = None
        for i in range(4):
            n0, nm = self._explicit_rows(U0, V, scratch)
            if prev is not None:
                r0 = RK_A[i] * n0 + RK_B[i] * prev[0]
                rm = RK_A[i] * nm + RK_B[i] * prev[1]
            else:
                r0, rm = RK_A[i] * n0, RK_A[i] * nm
            prev = (n0, nm)
            U0 = (self.mean_rhs[i] * U0 + dt * r0) / self.mean_lhs[i]
            V = np.matmul(self.PQ[i], np.concatenate([V, rm], axis=1)[..., None])[..., 0]
        out = SpectralState(U0, np.zeros_like(state.V), state.symmetry)
        out.V[self.wn] = V
        return out

    def diagnostics(self, state: SpectralState) -> tuple[float, float, float, float]:
        return (
            compute_Uave(state),
            compute_Eave(state),
            mean_hV(state, self.h_modes),
            closure_force(state, self.params, self.h_modes),
        )

    def run(
        self,
        state0: SpectralState,
        callback: Optional[Callable[[float, SpectralState], None]] = None,
        snapshot_every: int | None = None,
    ) -> tuple[TimeSeries, SpectralState]:
        cfg = self.cfg
        if state0.M != cfg.M or state0.N != cfg.N:
            raise ValueError(
                f"state resolution ({state0.M}, {state0.N}) does not match config ({cfg.M}, {cfg.N})"
            )
        n = cfg.n_steps
        n_samples = n // cfg.sample_every + 1
        rec = np.empty((n_samples, 5))
        ts = TimeSeries(k=self.params.k)
        s = state0.copy()
        j = 0
        for it in range(n + 1):
            if it > 0:
                s = self.step(s)
                if not s.is_finite():
                    raise SimulationError(f"non-finite coefficients at step {it} (t = {it * cfg.dt:g})", it)
            if it % cfg.sample_every == 0:
                t = it * cfg.dt
                rec[j] = (t, *self.diagnostics(s))
                j += 1
                if callback is not None:
                    callback(t, s)
                if snapshot_every and (it // cfg.sample_every) % snapshot_every == 0:
                    ts.snapshots.append((t, s.copy()))
        rec = rec[:j]
        ts.t, ts.U_ave, ts.E_ave, ts.hV_ave, ts.F_ave = rec.T.copy()
        return ts.finalize(), s


def step(state: SpectralState, params: ChannelParams, cfg: DnsConfig) -> SpectralState:
    """One time step (builds the stage operators; use :class:`DNSSolver` in loops)."""
    if state.M != cfg.M or state.N != cfg.N:
        raise ValueError("state resolution does not match config")
    return DNSSolver(params, cfg).step(state)


def run(state0: SpectralState, params: ChannelParams, cfg: DnsConfig, callback=None):
    """Integrate to ``cfg.T`` and return ``(TimeSeries, final state)``."""
    return DNSSolver(params, cfg).run(state0, callback)


def basic_flow(params: ChannelParams, N: int, M: int = 1, C_prime: float = 0.0, symmetry: str = "full") -> SpectralState:
    """Parallel flow ``U_0 = C sin y + C'`` with C the forcing amplitude."""
    s = SpectralState.zeros(M, N, symmetry)
    C = params.forcing_amplitude
    s.U0[:] = cb.cheb_interp(lambda y: C * np.sin(y) + C_prime, N)
    return s


# --------------------------------------------------------------------------
# limit-cycle detection


@dataclass(frozen=True)
class Steady:
    value: float


@dataclass(frozen=True)
class Cycle:
    period: float
    u_min: float
    u_max: float
    periods: tuple = ()


@dataclass(frozen=True)
class Undetermined:
    reason: str


CycleResult = Union[Steady, Cycle, Undetermined]


def _parabolic_extrema(t: np.ndarray, u: np.ndarray, idx: np.ndarray):
    """Vertex of the parabola through the three samples around each index."""
    t0, t1, t2 = t[idx - 1], t[idx], t[idx + 1]
    u0, u1, u2 = u[idx - 1], u[idx], u[idx + 1]
    # uniform-spacing formula is adequate for sampled DNS output; use the general one anyway
    d = (t0 - t1) * (t0 - t2) * (t1 - t2)
    A = (t2 * (u1 - u0) + t1 * (u0 - u2) + t0 * (u2 - u1)) / d
    B = (t2**2 * (u0 - u1) + t1**2 * (u2 - u0) + t0**2 * (u1 - u2)) / d
    Cc = (t1 * t2 * (t1 - t2) * u0 + t2 * t0 * (t2 - t0) * u1 + t0 * t1 * (t0 - t1) * u2) / d
    tv = -B / (2 * A)
    return tv, Cc - B**2 / (4 * A)


def detect_limit_cycle(
    series: TimeSeries,
    discard: float = 0.5,
    steady_tol: float = 1e-6,
    consistency: float = 0.05,
    min_periods: int = 5,
) -> CycleResult:
    """Classify U_ave(t) after dropping the first ``discard`` fraction of samples."""
    t = np.asarray(series.t)
    u = np.asarray(series.U_ave)
    start = int(np.floor(discard * t.size))
    t, u = t[start:], u[start:]
    if t.size < 5:
        return Undetermined("series too short")
    if np.ptp(u) < steady_tol:
        return Steady(float(u.mean()))
    imax, _ = scipy.signal.find_peaks(u)
    imin, _ = scipy.signal.find_peaks(-u)
    imax = imax[(imax > 0) & (imax < u.size - 1)]
    imin = imin[(imin > 0) & (imin < u.size - 1)]
    if imax.size < min_periods + 1:
        return Undetermined(f"only {imax.size} maxima after the transient; need {min_periods + 1}")
    tmax, umax = _parabolic_extrema(t, u, imax)
    periods = np.diff(tmax)
    P = float(periods.mean())
    if np.abs(periods - P).max() > consistency * P:
        return Undetermined("successive period estimates disagree by more than "
                            f"{100 * consistency:g}%")
    if imin.size:
        _, umin = _parabolic_extrema(t, u, imin)
        lo = float(umin.mean())
    else:
        lo = float(u.min())
    return Cycle(P, lo, float(umax.mean()), tuple(float(p) for p in periods))
