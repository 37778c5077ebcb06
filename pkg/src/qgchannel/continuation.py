"""Pseudo-arclength continuation of steady states in the forcing F_ave.

The steady mean-flow and mode equations, with the mode equations' two
highest Chebyshev rows replaced by the wall conditions, form ``G(f, F) = 0``
for the real unknown vector f.  Branches are traced with a tangent predictor
and a bordered Newton corrector in the norm
``||(f, F)||^2 = f^T W f + F^2 / (2 k^2)`` where ``f^T W f`` is E_ave.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import chebyshev as cb
from .fields import (
    SpectralState,
    compute_Eave,
    compute_Uave,
    energy_weight_mean,
    energy_weight_mode,
    parity_of_mode,
)
from .nonlinear import NonlinearTerm, mode_stride
from .params import ChannelParams


class ContinuationError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# unknown-vector layout


class Layout:
    """Mapping between a SpectralState and the real unknown vector f.

    f = (U0[sel0], Re V_m[sel_m], Im V_m[sel_m], ...) over the active modes.
    In the sym space only the Chebyshev parity allowed for each mode is kept.
    """

    def __init__(self, M: int, N: int, symmetry: str = "sym"):
        if N < 4:
            raise ValueError("need N >= 4")
        self.M, self.N, self.symmetry = M, N, symmetry
        stride = mode_stride(symmetry)
        self.modes = list(range(stride, M, stride))
        n = np.arange(N)
        if symmetry == "sym":
            self.sel0 = n[n % 2 == 0]
            self.sel = {m: n[n % 2 == parity_of_mode(m)] for m in self.modes}
        else:
            self.sel0 = n
            self.sel = {m: n for m in self.modes}
        self.offsets = {}
        off = self.sel0.size
        for m in self.modes:
            self.offsets[m] = off
            off += 2 * self.sel[m].size
        self.size = off

    def block(self, m: int) -> tuple[slice, slice]:
        """Slices of Re and Im parts of mode m in f."""
        o, n = self.offsets[m], self.sel[m].size
        return slice(o, o + n), slice(o + n, o + 2 * n)

    def pack(self, state: SpectralState) -> np.ndarray:
        f = np.empty(self.size)
        f[: self.sel0.size] = state.U0[self.sel0]
        for m in self.modes:
            re, im = self.block(m)
            f[re] = state.V[m, self.sel[m]].real
            f[im] = state.V[m, self.sel[m]].imag
        return f

    def unpack(self, f: np.ndarray) -> SpectralState:
        s = SpectralState.zeros(self.M, self.N, self.symmetry)
        s.U0[self.sel0] = f[: self.sel0.size]
        for m in self.modes:
            re, im = self.block(m)
            s.V[m, self.sel[m]] = f[re] + 1j * f[im]
        return s

    def pack_rows(self, mean: np.ndarray, modes: np.ndarray) -> np.ndarray:
        g = np.empty(self.size)
        g[: self.sel0.size] = mean[self.sel0]
        for m in self.modes:
            re, im = self.block(m)
            g[re] = modes[m, self.sel[m]].real
            g[im] = modes[m, self.sel[m]].imag
        return g

    def weight_blocks(self) -> list[tuple[slice, np.ndarray]]:
        """Diagonal blocks of W; the mode blocks act on Re and Im alike."""
        ns = self.sel0.size
        out = [(slice(0, ns), energy_weight_mean(self.N)[np.ix_(self.sel0, self.sel0)])]
        for m in self.modes:
            Wm = energy_weight_mode(self.N, m)[np.ix_(self.sel[m], self.sel[m])]
            re, im = self.block(m)
            out += [(re, Wm), (im, Wm)]
        return out


class Norm:
    """``||(f, F)||^2 = f^T W f + F^2 / (2 k^2)`` with block-diagonal W."""

    def __init__(self, layout: Layout, k: float):
        self.blocks = layout.weight_blocks()
        self.k = k

    def Wf(self, f: np.ndarray) -> np.ndarray:
        out = np.empty_like(f)
        for sl, W in self.blocks:
            out[sl] = W @ f[sl]
        return out

    def inner(self, a: tuple[np.ndarray, float], b: tuple[np.ndarray, float]) -> float:
        return float(a[0] @ self.Wf(b[0]) + a[1] * b[1] / (2 * self.k**2))

    def __call__(self, f: np.ndarray, F: float) -> float:
        return math.sqrt(max(self.inner((f, F), (f, F)), 0.0))


# --------------------------------------------------------------------------
# residual and Jacobian


# coefficients of D^0..D^3 producing each field of mode p from V_p (p >= 1) or U_0 (p = 0)
def _alpha(name: str, p: int) -> np.ndarray:
    a = np.zeros(4, dtype=complex)
    if p == 0:
        if name == "U":
            a[0] = 1
        elif name == "Uy":
            a[1] = 1
        elif name == "lapU":
            a[2] = 1
        return a
    if name == "U":
        a[1] = 1j / p
    elif name == "Ux":
        a[1] = -1
    elif name == "Uy":
        a[2] = 1j / p
    elif name == "V":
        a[0] = 1
    elif name == "lapV":
        a[0], a[2] = -(p**2), 1
    elif name == "lapU":
        a[1], a[3] = -1j * p, 1j / p
    return a


_FIELD_NAMES = ("U", "Ux", "Uy", "V", "lapV", "lapU")
_MEAN_TERMS = ((-1.0, "U", "Ux"), (-1.0, "V", "Uy"), (1.0, "h", "V"))
_MODE_TERMS = ((1.0, "U", "lapV"), (-1.0, "V", "lapU"), (1.0, "U", "hx"), (1.0, "V", "hy"))


class SteadyProblem:
    """G(f, F) and its derivatives for one parameter set and layout."""

    def __init__(self, params: ChannelParams, layout: Layout, dealias_y: bool = True):
        self.params, self.layout = params, layout
        M, N = layout.M, layout.N
        self.nl = NonlinearTerm(params, M, N, layout.symmetry, dealias_y)
        self.forcing = params.forcing(N)
        self.D = [np.eye(N)] + [np.asarray(cb.derivative_matrix(N, r)) for r in (1, 2, 3)]
        self.norm = Norm(layout, params.k)
        h = self.nl.h_modes
        m = np.arange(M)[:, None]
        self.topo = {"h": h, "hx": 1j * m * h, "hy": h @ self.D[1].T}
        self._GF = np.zeros(layout.size)
        self._GF[0] = 1.0  # F multiplies T_0 of the mean equation

    # -- residual ---------------------------------------------------------
    def G(self, f: np.ndarray, F: float) -> np.ndarray:
        p, lay = self.params, self.layout
        s = lay.unpack(f)
        mean, modes = self.nl(s)
        mean = mean - p.k * s.U0 + self.forcing
        mean[0] += F
        D2 = self.D[2]
        N = lay.N
        rows = cb.parity_rows(N)
        for m in lay.modes:
            V = s.V[m]
            r = modes[m] - 1j * m * p.beta * V - p.k * (D2 @ V - m**2 * V)
            r[N - 2 :] = rows @ V
            modes[m] = r
        return lay.pack_rows(mean, modes)

    def GF(self) -> np.ndarray:
        return self._GF.copy()

    # -- Jacobian ---------------------------------------------------------
    def _field_table(self, s: SpectralState) -> dict:
        f6 = self.nl.fields(s)  # (6, J, N) on carried modes
        M, N = self.layout.M, self.layout.N
        table = {}
        for name, arr in zip(_FIELD_NAMES, f6):
            full = np.zeros((M, N), dtype=complex)
            full[self.nl.tr.wavenumbers] = arr
            table[name] = full
        table.update(self.topo)
        return table

    @staticmethod
    def _mode(table: dict, name: str, j: int, M: int):
        if abs(j) >= M:
            return None
        v = table[name][abs(j)]
        return v.conj() if j < 0 else v

    def _coupling(self, table, terms, m: int, p: int):
        """Coefficient vectors g_r (A part) and gB_r (conjugate part), each (4, N)."""
        M, N = self.layout.M, self.layout.N
        gA = np.zeros((4, N), dtype=complex)
        gB = np.zeros((4, N), dtype=complex)
        live = False
        for c, X, Y in terms:
            for a_name, other, sgn in ((X, Y, 1), (Y, X, 1)):
                if a_name.startswith("h"):
                    continue
                alpha = _alpha(a_name, p)
                if not alpha.any():
                    continue
                w = self._mode(table, other, m - p, M)
                if w is not None and w.any():
                    gA += c * alpha[:, None] * w[None, :]
                    live = True
                if p > 0:
                    w = self._mode(table, other, m + p, M)
                    if w is not None and w.any():
                        gB += c * alpha.conj()[:, None] * w[None, :]
                        live = True
        return (gA, gB) if live else (None, None)

    def _block(self, g: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        out = np.zeros((rows.size, cols.size), dtype=complex)
        for r in range(4):
            if not g[r].any():
                continue
            Mult = cb.product_matrix(g[r])[rows]
            Dr = self.D[r][:, cols]
            out += Mult.real @ Dr + 1j * (Mult.imag @ Dr)
        return out

    def jacobian_Gf(self, f: np.ndarray, F: float = 0.0) -> np.ndarray:
        """Analytic ``dG/df`` (F enters linearly, so it does not appear)."""
        p, lay = self.params, self.layout
        s = lay.unpack(f)
        table = self._field_table(s)
        N = lay.N
        J = np.zeros((lay.size, lay.size))
        outs = [0] + lay.modes
        ins = [0] + lay.modes
        n0 = lay.sel0.size
        for m in outs:
            rows = lay.sel0 if m == 0 else lay.sel[m]
            terms = _MEAN_TERMS if m == 0 else _MODE_TERMS
            pref = 1.0 if m == 0 else -1j * m
            rsl = [slice(0, n0)] if m == 0 else list(lay.block(m))
            for q in ins:
                cols = lay.sel0 if q == 0 else lay.sel[q]
                gA, gB = self._coupling(table, terms, m, q)
                A = np.zeros((rows.size, cols.size), dtype=complex)
                B = np.zeros_like(A)
                if gA is not None:
                    A = pref * self._block(gA, rows, cols)
                    B = pref * self._block(gB, rows, cols)
                if m == q:
                    if m == 0:
                        A += -p.k * np.eye(rows.size)
                    else:
                        D2 = self.D[2][np.ix_(rows, cols)]
                        A += -1j * m * p.beta * np.eye(rows.size) - p.k * (D2 - m**2 * np.eye(rows.size))
                if m > 0:
                    tau = np.isin(rows, (N - 2, N - 1))
                    A[tau] = cb.parity_rows(N)[rows[tau] - (N - 2)][:, cols] if m == q else 0.0
                    B[tau] = 0.0
                csl = [slice(0, n0)] if q == 0 else list(lay.block(q))
                if m == 0:
                    if q == 0:
                        J[rsl[0], csl[0]] = A.real
                    else:
                        J[rsl[0], csl[0]] = (A + B).real
                        J[rsl[0], csl[1]] = -(A - B).imag
                else:
                    if q == 0:
                        J[rsl[0], csl[0]] = A.real
                        J[rsl[1], csl[0]] = A.imag
                    else:
                        J[rsl[0], csl[0]] = (A + B).real
                        J[rsl[1], csl[0]] = (A + B).imag
                        J[rsl[0], csl[1]] = -(A - B).imag
                        J[rsl[1], csl[1]] = (A - B).real
        return J

    # -- diagnostics ------------------------------------------------------
    def point(self, f: np.ndarray, F: float, ds: float = 0.0, sign: int = 0, iterations: int = 0) -> "BranchPoint":
        s = self.layout.unpack(f)
        return BranchPoint(
            f=f.copy(),
            F=float(F),
            U_ave=compute_Uave(s),
            E_ave=compute_Eave(s),
            ds_used=float(ds),
            tangent_sign=int(sign),
            residual=float(np.abs(self.G(f, F)).max()),
            iterations=iterations,
        )


def residual_G(f: np.ndarray, F: float, params: ChannelParams, layout: Layout) -> np.ndarray:
    return SteadyProblem(params, layout).G(f, F)


def jacobian_Gf(f: np.ndarray, F: float, params: ChannelParams, layout: Layout) -> np.ndarray:
    return SteadyProblem(params, layout).jacobian_Gf(f, F)


def jacobian_GF(f: np.ndarray, F: float, params: ChannelParams, layout: Layout) -> np.ndarray:
    return SteadyProblem(params, layout).GF()


# --------------------------------------------------------------------------
# branch data


@dataclass
class BranchPoint:
    f: np.ndarray
    F: float
    U_ave: float
    E_ave: float
    ds_used: float = 0.0
    tangent_sign: int = 0
    residual: float = 0.0
    iterations: int = 0

    def state(self, layout: Layout) -> SpectralState:
        return layout.unpack(self.f)


@dataclass
class Branch:
    points: list = field(default_factory=list)
    termination_reason: str = ""
    layout: Optional[Layout] = None
    events: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def F(self) -> np.ndarray:
        return np.array([p.F for p in self.points])

    @property
    def U_ave(self) -> np.ndarray:
        return np.array([p.U_ave for p in self.points])

    @property
    def E_ave(self) -> np.ndarray:
        return np.array([p.E_ave for p in self.points])

    def fold_flags(self) -> np.ndarray:
        """True at interior points where F has a local extremum along the branch."""
        F = self.F
        flags = np.zeros(F.size, dtype=bool)
        if F.size >= 3:
            d = np.diff(F)
            flags[1:-1] = d[:-1] * d[1:] < 0
        return flags

    def write_csv(self, path) -> None:
        flags = self.fold_flags()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "F_ave", "U_ave", "E_ave", "ds", "fold_flag"])
            for i, p in enumerate(self.points):
                w.writerow([i, "%.6g" % p.F, "%.6g" % p.U_ave, "%.6g" % p.E_ave, "%.6g" % p.ds_used, int(flags[i])])


@dataclass(frozen=True)
class ContinuationConfig:
    M: int = 16
    N: int = 128
    symmetry: str = "sym"
    newton_tol: float = 1e-10
    arc_tol: float = 1e-10
    max_corrector: int = 25
    max_newton: int = 50
    ds_init: float = 0.01
    ds_min: float = 1e-6
    ds_max: float = 0.01
    max_points: int = 5000
    F_min: float = 0.0
    F_max: float = 0.01
    first_direction: int = -1
    seed_F: float = 0.003
    dealias_y: bool = True
    grow_after: int = 3


# --------------------------------------------------------------------------
# first solution


def default_seed(params: ChannelParams, layout: Layout, F: float = 0.003) -> tuple[np.ndarray, float]:
    """Approximate solution ``U0 = (F + F')/k``, ``V_2 = 0.2 i h0 sin y``."""
    s = SpectralState.zeros(layout.M, layout.N, layout.symmetry)
    s.U0[:] = params.forcing(layout.N) / params.k
    s.U0[0] += F / params.k
    h = params.topography_modes(layout.M, layout.N)
    if layout.M > 2 and 2 in layout.modes:
        # ridge profile h_2 = (h0/2) sin y, so 0.2 i h0 sin y = 0.4 i h_2
        s.V[2] = 0.4j * h[2]
    return layout.pack(s), F


def newton_fixed_F(
    prob: SteadyProblem, f: np.ndarray, F: float, tol: float = 1e-10, max_iter: int = 50
) -> tuple[np.ndarray, int]:
    g = prob.G(f, F)
    for it in range(1, max_iter + 1):
        J = prob.jacobian_Gf(f, F)
        try:
            df = scipy.linalg.solve(J, -g, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as err:
            raise ContinuationError(f"singular Jacobian during Newton at F = {F:g}: {err}") from err
        f = f + df
        g = prob.G(f, F)
        if not np.all(np.isfinite(g)):
            break
        r = np.abs(g).max()
        if r < tol:
            return f, it
        if r > 1e6:
            break
    raise ContinuationError(
        f"Newton at fixed F_ave = {F:g} did not converge; retry with a larger starting F_ave"
    )


def first_solution(
    params: ChannelParams,
    seed: tuple[np.ndarray, float] | None = None,
    cfg: ContinuationConfig = ContinuationConfig(),
    prob: SteadyProblem | None = None,
) -> BranchPoint:
    layout = prob.layout if prob else Layout(cfg.M, cfg.N, cfg.symmetry)
    prob = prob or SteadyProblem(params, layout, cfg.dealias_y)
    f0, F = seed if seed is not None else default_seed(params, layout, cfg.seed_F)
    f, it = newton_fixed_F(prob, np.asarray(f0, float), F, cfg.newton_tol, cfg.max_newton)
    return prob.point(f, F, iterations=it)


# --------------------------------------------------------------------------
# predictor and corrector


def tangent(prob: SteadyProblem, point: BranchPoint, prev_dir: tuple[np.ndarray, float] | None = None):
    """Unit tangent ``(df, dF)`` with dF > 0 before orientation.

    Solves ``G_f t = -G_F``.  At an exact fold G_f is singular; then the
    bordered system with the previous direction as the extra row is used.
    """
    J = prob.jacobian_Gf(point.f, point.F)
    GF = prob.GF()
    try:
        lu = scipy.linalg.lu_factor(J, check_finite=True)
        if np.abs(np.diag(lu[0])).min() < 1e-14 * np.abs(np.diag(lu[0])).max():
            raise np.linalg.LinAlgError("singular")
        t = scipy.linalg.lu_solve(lu, -GF)
        d = (t, 1.0)
    except (np.linalg.LinAlgError, ValueError):
        if prev_dir is None:
            raise ContinuationError("singular Jacobian at the first point; cannot start the branch")
        n = J.shape[0]
        Bm = np.zeros((n + 1, n + 1))
        Bm[:n, :n] = J
        Bm[:n, n] = GF
        Bm[n, :n] = prob.norm.Wf(prev_dir[0])
        Bm[n, n] = prev_dir[1] / (2 * prob.params.k**2)
        rhs = np.zeros(n + 1)
        rhs[n] = 1.0
        x = scipy.linalg.solve(Bm, rhs)
        d = (x[:n], float(x[n]))
    nrm = prob.norm(*d)
    return d[0] / nrm, d[1] / nrm


def tangent_predictor(
    prob: SteadyProblem,
    prev: BranchPoint,
    prev2: BranchPoint | None,
    ds: float,
    first_direction: int = -1,
    prev_dir: tuple[np.ndarray, float] | None = None,
):
    """Predicted ``(f, F)`` at arclength ds along the oriented tangent, and the direction."""
    tf, tF = tangent(prob, prev, prev_dir)
    if prev2 is None and prev_dir is None:
        sign = 1 if np.sign(tF) == np.sign(first_direction) else -1
    else:
        ref = prev_dir if prev_dir is not None else (prev.f - prev2.f, prev.F - prev2.F)
        sign = 1 if prob.norm.inner((tf, tF), ref) >= 0 else -1
    tf, tF = sign * tf, sign * tF
    return (prev.f + ds * tf, prev.F + ds * tF), (tf, tF), sign


def corrector_step(
    prob: SteadyProblem,
    pred: tuple[np.ndarray, float],
    prev: BranchPoint,
    ds: float,
    cfg: ContinuationConfig = ContinuationConfig(),
) -> BranchPoint | None:
    """Bordered Newton iteration on ``G = 0`` and ``||x - x_prev||^2 = ds^2``.

    Returns None when it fails to converge within ``cfg.max_corrector``
    iterations or wanders further than ``2 ds`` from the prediction.
    """
    f, F = pred[0].copy(), float(pred[1])
    k2 = prob.params.k**2
    n = f.size
    GF = prob.GF()
    Bm = np.empty((n + 1, n + 1))
    for it in range(1, cfg.max_corrector + 1):
        g = prob.G(f, F)
        df, dF = f - prev.f, F - prev.F
        arc = prob.norm(df, dF)
        if not np.all(np.isfinite(g)):
            return None
        if np.abs(g).max() < cfg.newton_tol and abs(arc - ds) < cfg.arc_tol and it > 1:
            return prob.point(f, F, ds, iterations=it - 1)
        A = arc**2 - ds**2
        Bm[:n, :n] = prob.jacobian_Gf(f, F)
        Bm[:n, n] = GF
        Bm[n, :n] = 2 * prob.norm.Wf(df)
        Bm[n, n] = dF / k2
        try:
            x = scipy.linalg.solve(Bm, -np.concatenate([g, [A]]), check_finite=True)
        except (np.linalg.LinAlgError, ValueError):
            return None
        f = f + x[:n]
        F = F + x[n]
        if prob.norm(f - pred[0], F - pred[1]) > 2 * ds:
            return None
    g = prob.G(f, F)
    arc = prob.norm(f - prev.f, F - prev.F)
    if np.abs(g).max() < cfg.newton_tol and abs(arc - ds) < cfg.arc_tol:
        return prob.point(f, F, ds, iterations=cfg.max_corrector)
    return None


def trace_branch(
    params: ChannelParams,
    cfg: ContinuationConfig = ContinuationConfig(),
    start: BranchPoint | None = None,
    progress=None,
) -> Branch:
    """Trace one branch from the first solution in the ``first_direction`` of F."""
    layout = Layout(cfg.M, cfg.N, cfg.symmetry)
    prob = SteadyProblem(params, layout, cfg.dealias_y)
    p0 = start or first_solution(params, cfg=cfg, prob=prob)
    branch = Branch([p0], layout=layout)
    ds = min(cfg.ds_init, cfg.ds_max)
    streak = 0
    direction = None
    while True:
        if len(branch.points) >= cfg.max_points:
            branch.termination_reason = "max_points"
            break
        prev = branch.points[-1]
        prev2 = branch.points[-2] if len(branch.points) > 1 else None
        try:
            pred, d, sign = tangent_predictor(prob, prev, prev2, ds, cfg.first_direction, direction)
        except ContinuationError:
            branch.termination_reason = "min_step_reached"
            branch.events.append(f"singular tangent at F = {prev.F:g}")
            break
        pt = corrector_step(prob, pred, prev, ds, cfg)
        if pt is None:
            ds *= 0.5
            streak = 0
            if ds < cfg.ds_min:
                branch.termination_reason = "min_step_reached"
                break
            continue
        if direction is not None and prob.norm.inner(
            (pt.f - prev.f, pt.F - prev.F), direction
        ) <= 0:
            # corrector jumped backwards along the branch
            ds *= 0.5
            streak = 0
            if ds < cfg.ds_min:
                branch.termination_reason = "min_step_reached"
                break
            continue
        pt.tangent_sign = sign
        branch.points.append(pt)
        direction = d
        if progress is not None:
            progress(pt)
        if not cfg.F_min <= pt.F <= cfg.F_max:
            branch.termination_reason = "parameter_bound"
            break
        streak += 1
        if streak >= cfg.grow_after and ds < cfg.ds_max:
            ds = min(2 * ds, cfg.ds_max)
            streak = 0
    return branch


# --------------------------------------------------------------------------
# post-processing


def folds(branch: Branch) -> list[float]:
    """F at each fold, from a parabola through the extremal point and its neighbours."""
    F = branch.F
    out = []
    for i in np.flatnonzero(branch.fold_flags()):
        s = np.array([-branch.points[i].ds_used, 0.0, branch.points[i + 1].ds_used])
        c = np.polyfit(s, F[i - 1 : i + 2], 2)
        out.append(float(c[2] - c[1] ** 2 / (4 * c[0])) if c[0] != 0 else float(F[i]))
    return out


def crossings(branch: Branch, F_target: float) -> list[tuple[int, float]]:
    """Segments (index i, fraction) where the branch crosses F = F_target."""
    F = branch.F
    out = []
    for i in range(F.size - 1):
        a, b = F[i] - F_target, F[i + 1] - F_target
        if a == 0.0:
            out.append((i, 0.0))
        elif a * b < 0:
            out.append((i, a / (a - b)))
    return out


def solve_at_F(
    params: ChannelParams, branch: Branch, F_target: float, cfg: ContinuationConfig = ContinuationConfig()
) -> list[BranchPoint]:
    """Every equilibrium on the branch at ``F = F_target``, by Newton from interpolated guesses."""
    layout = branch.layout or Layout(cfg.M, cfg.N, cfg.symmetry)
    prob = SteadyProblem(params, layout, cfg.dealias_y)
    out = []
    for i, w in crossings(branch, F_target):
        a, b = branch.points[i], branch.points[i + 1]
        guess = (1 - w) * a.f + w * b.f
        f, it = newton_fixed_F(prob, guess, F_target, cfg.newton_tol, cfg.max_newton)
        out.append(prob.point(f, F_target, iterations=it))
    return out


def refine(
    params: ChannelParams,
    state: SpectralState,
    F: float,
    M: int,
    N: int,
    symmetry: str = "sym",
    tol: float = 1e-10,
) -> tuple[SpectralState, BranchPoint]:
    """Resample a steady state to (M, N) and re-converge it at fixed F there."""
    layout = Layout(M, N, symmetry)
    prob = SteadyProblem(params, layout)
    f0 = layout.pack(state.resized(M, N))
    f, it = newton_fixed_F(prob, f0, F, tol)
    pt = prob.point(f, F, iterations=it)
    return layout.unpack(f), pt
