import numpy as np
import pytest

from qgchannel.dns import closure_force
from qgchannel.fields import SpectralState, compute_Uave
from qgchannel.lowdim import (
    C_COEF,
    LowDimParams,
    LowDimState,
    closure_line,
    implied_affine,
    lowdim_diagnostics,
    lowdim_equilibria,
    lowdim_integrate,
    lowdim_jacobian,
    lowdim_rhs,
    real_cubic_roots,
    reduced_cubic,
)
from qgchannel.params import Affine, ChannelParams, Ridge

TABLE = np.array(
    [
        [0.1535, 0.03773, -0.001937, 0.1382, 0.001769],
        [0.1212, 0.04358, -0.003282, 0.1091, 0.001748],
        [0.02943, -0.03088, -0.007104, 0.02650, 0.001686],
    ]
)
P = LowDimParams(0.01, 0.25, 0.2, 0.2)


def sig4(x: float) -> float:
    return float(f"{x:.4g}")


def test_rhs_small_at_table_rows():
    for row in TABLE:
        assert np.abs(lowdim_rhs(row[:3], P)).max() < 5e-6


def test_rhs_flat_fixed_point_and_plug_in():
    flat = LowDimParams(0.01, 0.25, 0.0, 0.2)
    assert np.all(lowdim_rhs([0.2, 0.0, 0.0], flat) == 0)
    r = lowdim_rhs(LowDimState(0.2, 0.0, 0.0), P)
    assert r[0] == 0 and r[1] == 0
    assert abs(r[2] - (-C_COEF * 0.2 * 0.2)) < 1e-15
    assert abs(r[2] + 9.603e-3) < 5e-7


def test_jacobian_matches_finite_differences():
    s = np.array([0.1, 0.02, -0.01])
    J = lowdim_jacobian(s, P)
    h = 1e-7
    Jfd = np.column_stack([(lowdim_rhs(s + h * e, P) - lowdim_rhs(s - h * e, P)) / (2 * h) for e in np.eye(3)])
    assert np.allclose(J, Jfd, atol=1e-9)


def test_equilibria_table():
    eq = lowdim_equilibria(P)
    assert len(eq) == 3
    for s, row in zip(eq, TABLE):
        U, F, res = lowdim_diagnostics(s, P)
        got = [sig4(v) for v in (s.psi_A, s.psi_K, s.psi_L, U, F)]
        assert got == [sig4(v) for v in row]
        assert np.abs(lowdim_rhs(s, P)).max() < 1e-12
        assert abs(res) < 1e-15


def test_equilibria_flat():
    eq = lowdim_equilibria(LowDimParams(0.01, 0.25, 0.0, 0.2))
    assert len(eq) == 1
    assert np.allclose(np.asarray(eq[0]), [0.2, 0.0, 0.0], atol=1e-15)


@pytest.mark.parametrize("h0", [0.01, 0.05, 0.1, 0.2, 0.3])
def test_root_count_against_sign_changes(h0):
    p = LowDimParams(0.01, 0.25, h0, 0.2)
    c = reduced_cubic(p)
    # every real root of the cubic lies in [0, psi_A0]: the sign at 0 and psi_A0 brackets it
    A = np.linspace(-0.05, 0.25, 300001)
    f = np.polyval(c, A)
    changes = int(np.sum(np.sign(f[1:]) != np.sign(f[:-1])))
    assert len(lowdim_equilibria(p)) == changes
    assert len(real_cubic_roots(c)) == changes


def test_cubic_roots_simple_cases():
    assert np.allclose(real_cubic_roots([1, -6, 11, -6]), [3, 2, 1])
    assert np.allclose(real_cubic_roots([1, 0, 0, -8]), [2])


def test_integrate_bounded_near_low_index_state():
    eq = lowdim_equilibria(P)
    s0 = np.asarray(eq[2]) + 1e-6
    _, traj = lowdim_integrate(s0, P, T=3000.0, dt=0.5)
    assert np.all(np.isfinite(traj))
    d = min(np.abs(traj[-1] - np.asarray(e)).max() for e in eq)
    assert d < 1e-4


def test_integrate_flat_decays_at_rate_k():
    flat = LowDimParams(0.01, 0.25, 0.0, 0.2)
    t, traj = lowdim_integrate([0.5, 0.1, -0.1], flat, T=100.0, dt=0.5)
    dev = np.abs(traj[:, 0] - 0.2)
    rate = np.polyfit(t, np.log(dev), 1)[0]
    assert abs(rate + 0.01) < 1e-8
    assert np.isclose(traj[-1, 0], 0.2 + 0.3 * np.exp(-1.0), rtol=1e-10)


def test_integrate_fourth_order():
    s0 = [0.15, 0.03, -0.01]
    ref = lowdim_integrate(s0, P, 40.0, 0.125)[1][-1]
    e1 = np.abs(lowdim_integrate(s0, P, 40.0, 2.0)[1][-1] - ref).max()
    e2 = np.abs(lowdim_integrate(s0, P, 40.0, 1.0)[1][-1] - ref).max()
    assert 16 * 0.8 < e1 / e2 < 16 * 1.2


def test_integrate_rhs_matches_trajectory_slope():
    dt = 0.01
    t, traj = lowdim_integrate([0.15, 0.03, -0.01], P, 2.0, dt)
    slope = (traj[2:] - traj[:-2]) / (2 * dt)
    # central differences are second order; the integrator itself is far more accurate
    assert np.abs(slope - lowdim_rhs(traj[1:-1], P)).max() < 1e-7


def test_integrate_errors():
    with pytest.raises(ValueError):
        lowdim_integrate([0, 0, 0], P, 1.0, 0.0)
    with pytest.raises(FloatingPointError, match="non-finite"):
        lowdim_integrate([1e200, 1e200, 1e200], P, 10.0, 1.0)
    with pytest.raises(ValueError):
        LowDimParams(k=0.0)


def test_diagnostics_zero_state():
    U, F, _ = lowdim_diagnostics([0, 0, 0], P)
    assert U == 0
    assert abs(F - 2 * np.sqrt(2) * 0.01 * 0.2 / np.pi) < 1e-17


def test_closure_line_matches_rounded_coefficients():
    slope = (1 - 3 * np.pi**2 / 32) * 0.01
    offset = 3 * np.pi / (8 * np.sqrt(2)) * 0.01 * 0.2
    assert round(slope, 6) == 0.000747
    assert round(offset, 5) == 0.00167
    for s in lowdim_equilibria(P):
        U, F, _ = lowdim_diagnostics(s, P)
        assert abs(F - closure_line(U, P)) < 1e-15


def test_implied_affine_closure_force():
    a, b, c = implied_affine(P)
    params = ChannelParams(0.01, 0.25, 0.2, Ridge(0.2), Affine(a, b, c))
    N = 24
    rng = np.random.default_rng(3)
    s = SpectralState.zeros(1, N)
    s.U0[:] = rng.standard_normal(N) / (1 + np.arange(N)) ** 2
    assert abs(closure_force(s, params) - closure_line(compute_Uave(s), P)) < 1e-15
