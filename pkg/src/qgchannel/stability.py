"""Energy-stability diagnostics for parallel basic flows over zonal topography.

All integrals run over the full channel (0, 2 pi) x (0, pi) and are evaluated
exactly on the Chebyshev-Fourier representation (Gram-matrix quadrature).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import Chebyshev

from . import chebyshev as cb
from .dns import DnsConfig, DNSSolver, basic_flow
from .fields import SpectralState, symmetry_project, zeta_modes
from .params import ChannelParams, ConstantFave, ConstantUave, Zonal

TWO_PI = 2 * np.pi


class NotApplicable(ValueError):
    """The requested check's hypotheses do not hold."""


@dataclass
class PerturbationState:
    """Velocity disturbance (u, v) relative to a parallel basic flow, in spectral form."""

    delta: SpectralState

    @classmethod
    def from_states(cls, state: SpectralState, basic: SpectralState) -> "PerturbationState":
        d = state.copy()
        d.U0 = state.U0 - basic.U0
        return cls(d)

    @property
    def u_modes(self) -> np.ndarray:
        return self.delta.U_modes()

    @property
    def v_modes(self) -> np.ndarray:
        return self.delta.V

    @property
    def zeta_modes(self) -> np.ndarray:
        return zeta_modes(self.delta)


def _channel_sq(modes: np.ndarray) -> float:
    """Integral over the channel of the square of ``sum_m f_m e^{imx}`` (real field)."""
    G = cb.gram_matrix(modes.shape[-1])
    s = modes[0].real @ G @ modes[0].real
    if modes.shape[0] > 1:
        s += 2.0 * np.real(np.einsum("mi,ij,mj->", modes[1:], G, modes[1:].conj()))
    return float(TWO_PI * s)


def kinetic_integral(p: PerturbationState) -> float:
    """``iint (u^2 + v^2)``."""
    return _channel_sq(p.u_modes) + _channel_sq(p.v_modes)


def enstrophy_integral(p: PerturbationState) -> float:
    """``iint zeta'^2``."""
    return _channel_sq(p.zeta_modes)


def mean_u_integral(p: PerturbationState) -> float:
    """``iint u``."""
    return float(TWO_PI * cb.integral_weights(p.delta.N) @ p.delta.U0)


def boundary_integral(p: PerturbationState) -> float:
    """``int (u(x, 0) - u(x, pi)) dx``."""
    at0, atpi = cb.boundary_rows(p.delta.N)
    return float(TWO_PI * (at0 - atpi) @ p.delta.U0)


def energy_functional(p: PerturbationState, eta: float) -> float:
    """``L = iint (zeta'^2 + (eta - 1)(u^2 + v^2))``, which obeys ``dL/dt = -2kL``."""
    return enstrophy_integral(p) + (eta - 1.0) * kinetic_integral(p)


def h1_distance_sq(p: PerturbationState) -> float:
    """``iint (zeta'^2 + u^2 + v^2)``, the norm the decay theorem bounds."""
    return enstrophy_integral(p) + kinetic_integral(p)


# --------------------------------------------------------------------------
# inequalities


def wirtinger_periodic_slack(f, L_y: float = np.pi, deg: int = 64) -> float:
    """``int f'^2 - (2 pi/L_y)^2 int f^2`` over (0, L_y) for f(0) = f(L_y), zero mean."""
    c = Chebyshev.interpolate(f, deg, domain=[0.0, L_y])
    d = c.deriv()
    i1 = (d * d).integ(lbnd=0.0)(L_y)
    i0 = (c * c).integ(lbnd=0.0)(L_y)
    return float(i1 - (2 * np.pi / L_y) ** 2 * i0)


def wirtinger_dirichlet_slack(f, deg: int = 64) -> float:
    """``int f''^2 - int f^2`` over (0, pi) for f(0) = f(pi) = 0."""
    c = Chebyshev.interpolate(f, deg, domain=[0.0, np.pi])
    d2 = c.deriv(2)
    return float((d2 * d2).integ(lbnd=0.0)(np.pi) - (c * c).integ(lbnd=0.0)(np.pi))


@dataclass(frozen=True)
class LemmaReport:
    sharp_ratio: Optional[float]
    general_slack: float
    wirtinger1_slack: float
    wirtinger2_slack: float
    sharp_applicable: bool


def lemma_checks(p: PerturbationState, tol: float = 1e-12) -> LemmaReport:
    """Ratios and slacks of the Wirtinger-type inequalities for one field.

    ``sharp_ratio`` is ``iint zeta'^2 / iint (u^2 + v^2)`` and is only
    reported when u has zero mean and equal boundary line integrals; the
    corrected form (``general_slack``) needs neither.
    """
    Z = enstrophy_integral(p)
    E = kinetic_integral(p)
    I = mean_u_integral(p)
    Jb = boundary_integral(p)
    scale = np.sqrt(max(E, 1e-300))
    ok = abs(I) <= tol * scale * TWO_PI and abs(Jb) <= tol * scale * TWO_PI
    ratio = Z / E if (ok and E > 0) else None
    general = Z - (2 * E - 2 / np.pi**2 * I**2 - (np.pi**2 - 3) / (6 * np.pi**2) * Jb**2)

    N = p.delta.N
    G = cb.gram_matrix(N)
    D = cb.derivative_matrix(N)
    u0 = p.delta.U0
    at0, atpi = cb.boundary_rows(N)
    jump = (at0 - atpi) @ u0
    # mean-free, periodic-in-y version of u_0 used in the proof
    lin = np.zeros(N)
    lin[0], lin[1] = 0.0, 0.5  # (y/pi - 1/2) = xi/2
    f = u0 + jump * lin
    f[0] -= cb.integral_weights(N) @ f / np.pi
    w1 = f @ D.T @ G @ D @ f - 4.0 * f @ G @ f

    D2 = cb.derivative_matrix(N, 2)
    V = p.delta.V[1:]
    if V.shape[0]:
        a = np.real(np.einsum("mi,ij,mj->m", V @ D2.T, G, (V @ D2.T).conj()))
        b = np.real(np.einsum("mi,ij,mj->m", V, G, V.conj()))
        w2 = float((a - b).min())
    else:
        w2 = 0.0
    return LemmaReport(ratio, float(general), float(w1), w2, bool(ok))


def random_admissible(
    M: int,
    N: int,
    rng: np.random.Generator,
    symmetry: str = "full",
    side_conditions: bool = True,
    decay: float = 2.0,
) -> PerturbationState:
    """Random divergence-free disturbance with v = 0 on the walls.

    Coefficients fall off like ``(1 + n)^-decay``.  With ``side_conditions`` the mean
    profile is made mean-free with equal wall values.
    """
    n = np.arange(N)
    amp = (1.0 + n) ** -decay
    s = SpectralState.zeros(M, N, "full")
    s.U0[:] = rng.standard_normal(N) * amp
    if M > 1:
        # (1 - xi^2) g(xi) vanishes on both walls and stays as smooth as g
        g = (rng.standard_normal((M - 1, N - 2)) + 1j * rng.standard_normal((M - 1, N - 2))) * amp[: N - 2]
        bubble = np.array([0.5, 0.0, -0.5])
        for j in range(M - 1):
            s.V[j + 1] = (Chebyshev(g[j].real) * Chebyshev(bubble)).coef[:N] + 1j * (
                Chebyshev(g[j].imag) * Chebyshev(bubble)
            ).coef[:N]
    if side_conditions:
        s.U0[1] -= s.U0[1::2].sum()
        s.U0[0] -= cb.integral_weights(N) @ s.U0 / np.pi
    return PerturbationState(symmetry_project(s, symmetry))


def smooth_perturbation(
    M: int,
    N: int,
    rng: np.random.Generator,
    amplitude: float = 0.01,
    symmetry: str = "full",
    mean_free: bool = True,
) -> PerturbationState:
    """Small, smooth disturbance concentrated in the lowest x-modes.

    The basic-flow shear tilts disturbances into ever finer y-scales, so a
    rough or high-wavenumber start outruns a modest Chebyshev resolution long
    before the decay becomes visible.  Mode m is damped by ``exp(-m)``.
    With ``mean_free=False`` the mean and wall terms of the bound are active.
    """
    q = random_admissible(M, N, rng, "full", side_conditions=mean_free, decay=4.0)
    d = q.delta
    d.U0 *= amplitude
    d.V *= amplitude * np.exp(-np.arange(M))[:, None]
    return PerturbationState(symmetry_project(d, symmetry))


def bound_prefactor(eta: float, C1: float, C2: float, C3: float) -> float:
    """Square of the decay envelope at t = 0."""
    if not eta > -1:
        raise NotApplicable(f"decay bound needs eta > -1, got {eta}")
    e = min(eta, 2.0)
    return (
        3.0 / (1.0 + e) * C1
        + 2.0 * (2.0 - e) / (np.pi**2 * (1.0 + e)) * C2
        + (np.pi**2 - 3.0) * (2.0 - e) / (6.0 * np.pi**2 * (1.0 + e)) * C3
    )


# --------------------------------------------------------------------------
# DNS-driven checks


def fit_rate(t: np.ndarray, y: np.ndarray, window: tuple[float, float] = (0.1, 0.9)) -> float:
    """Least-squares slope of ``log y`` over the middle part of the record."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    T0, T1 = t[0], t[-1]
    sel = (t >= T0 + window[0] * (T1 - T0)) & (t <= T0 + window[1] * (T1 - T0)) & (y > 0)
    if sel.sum() < 2:
        raise NotApplicable("not enough positive samples to fit a rate")
    return float(np.polyfit(t[sel], np.log(y[sel]), 1)[0])


def _zonal_setup(params: ChannelParams):
    topo = params.topography
    if not isinstance(topo, Zonal):
        raise NotApplicable("energy identity needs Zonal topography")
    if not topo.eta > -1:
        raise NotApplicable(f"eta must exceed -1, got {topo.eta}")
    C = params.forcing_amplitude
    if abs(topo.C - C) > 1e-12 * max(1.0, abs(C)):
        raise NotApplicable("topography amplitude C must match the forcing amplitude sqrt2*psi_A0")
    cl = params.closure
    if isinstance(cl, ConstantFave):
        C_prime = cl.F_ave / params.k - 2 * C / np.pi
    elif isinstance(cl, ConstantUave):
        C_prime = cl.U_ave - 2 * C / np.pi
    else:
        raise NotApplicable("decay checks support ConstantFave and ConstantUave closures")
    return topo.eta, C_prime


def zonal_params(k: float, beta: float, psi_A0: float, eta: float, F_ave: float | None = None, U_ave: float | None = None) -> ChannelParams:
    """Parameters satisfying the decay theorems' hypotheses (C' = 0 by default)."""
    C = np.sqrt(2.0) * psi_A0
    if U_ave is not None:
        closure = ConstantUave(U_ave)
    else:
        closure = ConstantFave(k * 2 * C / np.pi if F_ave is None else F_ave)
    return ChannelParams(k, beta, psi_A0, Zonal(C, eta), closure)


@dataclass
class DecayRecord:
    t: np.ndarray
    L: np.ndarray
    h1_sq: np.ndarray
    mean_u: np.ndarray
    boundary: np.ndarray


def _track(params: ChannelParams, pert0: PerturbationState, T: float, dt: float, sample_every: int, symmetry: str):
    eta, C_prime = _zonal_setup(params)
    M, N = pert0.delta.M, pert0.delta.N
    base = basic_flow(params, N, M, C_prime, symmetry)
    s0 = SpectralState(base.U0 + pert0.delta.U0, pert0.delta.V.copy(), symmetry)
    cfg = DnsConfig(dt=dt, T=T, M=M, N=N, sample_every=sample_every, symmetry=symmetry)
    rows = []

    def cb_(t, s):
        p = PerturbationState.from_states(s, base)
        rows.append((t, energy_functional(p, eta), h1_distance_sq(p), mean_u_integral(p), boundary_integral(p)))

    DNSSolver(params, cfg).run(s0, callback=cb_)
    a = np.array(rows)
    return eta, DecayRecord(*(a[:, i].copy() for i in range(5)))


@dataclass
class DecayIdentityReport:
    rate: Optional[float]
    steady: bool
    record: Optional[DecayRecord] = None
    max_relative_deviation: float = float("nan")


def verify_decay_identity(
    params: ChannelParams,
    perturbation0: PerturbationState,
    T: float,
    dt: float = 0.05,
    sample_every: int = 10,
    symmetry: str = "full",
) -> DecayIdentityReport:
    """Run DNS from basic flow + disturbance and fit the decay rate of L(t)."""
    eta, _ = _zonal_setup(params)
    L0 = energy_functional(perturbation0, eta)
    if L0 == 0.0 and kinetic_integral(perturbation0) == 0.0:
        return DecayIdentityReport(None, True)
    _, rec = _track(params, perturbation0, T, dt, sample_every, symmetry)
    if np.any(rec.L <= 0):
        raise NotApplicable("L(t) became nonpositive; the functional is not definite here")
    rate = fit_rate(rec.t, rec.L)
    dev = np.abs(rec.L - rec.L[0] * np.exp(-2 * params.k * rec.t)).max() / rec.L[0]
    return DecayIdentityReport(rate, False, rec, float(dev))


@dataclass
class StabilityReport:
    L0: float
    fitted_rate: Optional[float]
    theorem_bound: float
    C1: float
    C2: float
    C3: float
    eta_prime: float
    violations: list = field(default_factory=list)
    mean_u_rate: Optional[float] = None
    boundary_rate: Optional[float] = None
    record: Optional[DecayRecord] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "L0": self.L0,
            "fitted_rate": self.fitted_rate,
            "bound_prefactor": self.theorem_bound,
            "C1": self.C1,
            "C2": self.C2,
            "C3": self.C3,
            "eta_prime": self.eta_prime,
            "mean_u_rate": self.mean_u_rate,
            "boundary_rate": self.boundary_rate,
            "violations": [{"t": t, "distance": d, "bound": b} for t, d, b in self.violations],
        }


def theorem_decay_check(
    params: ChannelParams,
    perturbation0: PerturbationState,
    T: float,
    dt: float = 0.05,
    sample_every: int = 10,
    symmetry: str = "full",
    rel_slack: float = 1e-10,
) -> StabilityReport:
    """Check ``||U(t) - U_0||_{H1} <= sqrt(prefactor) exp(-kt)`` at every sample."""
    eta, _ = _zonal_setup(params)
    C1 = energy_functional(perturbation0, eta)
    C2 = mean_u_integral(perturbation0) ** 2
    C3 = boundary_integral(perturbation0) ** 2
    pref = bound_prefactor(eta, C1, C2, C3)
    rep = StabilityReport(C1, None, pref, C1, C2, C3, min(eta, 2.0))
    if h1_distance_sq(perturbation0) == 0.0:
        return rep
    _, rec = _track(params, perturbation0, T, dt, sample_every, symmetry)
    rep.record = rec
    dist = np.sqrt(np.maximum(rec.h1_sq, 0.0))
    env = np.sqrt(pref) * np.exp(-params.k * rec.t)
    bad = np.flatnonzero(dist > env * (1 + rel_slack))
    rep.violations = [(float(rec.t[i]), float(dist[i]), float(env[i])) for i in bad]
    rep.fitted_rate = fit_rate(rec.t, dist)
    if C2 > 0:
        rep.mean_u_rate = fit_rate(rec.t, np.abs(rec.mean_u))
    if C3 > 0:
        rep.boundary_rate = fit_rate(rec.t, np.abs(rec.boundary))
    return rep
