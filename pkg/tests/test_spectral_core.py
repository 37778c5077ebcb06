import numpy as np
import pytest
import scipy.integrate
from numpy.polynomial import chebyshev as C

from qgchannel import chebyshev as cb
from qgchannel.fields import (
    SpectralState,
    compute_Eave,
    compute_Uave,
    eval_physical,
    synthesize,
    lowdim_to_state,
    symmetry_project,
    symmetry_residual,
)
from qgchannel.nonlinear import nonlinear_rhs
from qgchannel.params import Affine, ChannelParams, ConstantFave, Ridge, Spectral, Zonal

from conftest import interp, random_state

# ---------------------------------------------------------------- transforms


def test_transform_of_T2_is_unit_vector():
    y = cb.gl_points(9)
    xi = cb.to_xi(y)
    c = cb.cheb_transform(2 * xi**2 - 1)
    expected = np.zeros(9)
    expected[2] = 1.0
    assert np.allclose(c, expected, atol=1e-15)


def test_transform_zero_and_roundtrip(rng):
    assert np.all(cb.cheb_transform(np.zeros(12)) == 0)
    for n in (5, 16, 33):
        s = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        back = cb.cheb_inverse(cb.cheb_transform(s))
        assert np.abs(back - s).max() < 1e-12 * np.abs(s).max()


def test_transform_rejects_tiny_input():
    with pytest.raises(ValueError):
        cb.cheb_transform(np.ones(1))


# ---------------------------------------------------------------- derivative


def test_ddy_cos_is_minus_sin():
    N = 64
    d = cb.ddy(interp(np.cos, N))
    y = np.linspace(0, np.pi, 101)
    assert np.abs(cb.cheb_eval(d, y) + np.sin(y)).max() < 1e-10


def test_ddy_constant_is_zero():
    c = np.zeros(8)
    c[0] = 3.0
    assert np.all(cb.ddy(c) == 0)


def test_ddy_quadratic_exact():
    # y (pi - y) has exact degree-2 coefficients; its derivative is pi - 2y
    N = 6
    d = cb.ddy(interp(lambda y: y * (np.pi - y), N))
    assert np.allclose(d, interp(lambda y: np.pi - 2 * y, N), atol=1e-14)
    assert np.all(np.abs(d[2:]) < 1e-14)


def test_derivative_matrix_matches_ddy(rng):
    c = rng.standard_normal(10)
    assert np.allclose(cb.derivative_matrix(10) @ c, cb.ddy(c), atol=1e-13)
    assert np.allclose(cb.derivative_matrix(10, 2) @ c, cb.ddy(cb.ddy(c)), atol=1e-12)


# ---------------------------------------------------------------- quadrature


def test_integral_weights_and_gram(rng):
    N = 24
    f = interp(lambda y: np.exp(np.sin(y)), N)
    ref = scipy.integrate.quad(lambda y: np.exp(np.sin(y)), 0, np.pi, epsabs=1e-14)[0]
    assert abs(cb.integral_weights(N) @ f - ref) < 1e-10
    a = rng.standard_normal(N)
    b = rng.standard_normal(N)
    prod = C.chebmul(a, b)
    w = cb.integral_weights(prod.size)
    assert abs(cb.inner(a, b) - w @ prod) < 1e-12


def test_product_matrix_truncates_chebmul(rng):
    a, b = rng.standard_normal(9), rng.standard_normal(9)
    assert np.allclose(cb.product_matrix(a) @ b, C.chebmul(a, b)[:9], atol=1e-14)


# ---------------------------------------------------------------- tau solve


def test_tau_solve_sin_eigenfunction():
    N = 32
    V = cb.tau_solve(1, 1.0, 0.0, interp(lambda y: -np.sin(y), N))
    assert np.allclose(V, interp(np.sin, N), atol=1e-12)
    V = cb.tau_solve(2, 1.0, -4.0, interp(lambda y: -5 * np.sin(y), N))
    assert np.allclose(V, interp(np.sin, N), atol=1e-12)


def test_tau_solve_residual_and_walls(rng):
    N = 20
    rhs = rng.standard_normal(N) / (1 + np.arange(N)) ** 2
    a, b = 1.0, -9.0
    V = cb.tau_solve(3, a, b, rhs)
    r = a * cb.derivative_matrix(N, 2) @ V + b * V - rhs
    assert np.abs(r[: N - 2]).max() <= 1e-10 * np.abs(rhs).max()
    lo, hi = cb.boundary_rows(N)
    assert abs(lo @ V) < 1e-14 and abs(hi @ V) < 1e-14


def test_tau_solve_singular_operator_raises():
    # D^2 + 1 annihilates sin y, which satisfies the wall conditions
    with pytest.raises(cb.SingularOperatorError, match="mode 1"):
        cb.tau_solve(1, 1.0, 1.0, np.ones(24))


# ---------------------------------------------------------------- fields


def test_sin_profile_stream_function():
    N = 32
    s = SpectralState.zeros(3, N)
    s.U0[:] = interp(np.sin, N)
    f = eval_physical(s, 8, 17)
    assert np.abs(f.psi.values - (np.cos(f.psi.y) - 1)[:, None]).max() < 1e-13
    assert abs(compute_Uave(s) - 2 / np.pi) < 1e-14
    assert np.abs(f.V.values).max() == 0


def test_zero_state_fields_zero():
    s = SpectralState.zeros(4, 10)
    f = eval_physical(s, 8, 11)
    assert all(np.all(g.values == 0) for g in f)
    assert compute_Uave(s) == 0 and compute_Eave(s) == 0


def test_stream_function_relations(rng):
    M, N = 4, 24
    s = random_state(M, N, rng, decay=3.0)
    f = eval_physical(s, 16, 25)
    assert np.abs(f.psi.values[0]).max() < 1e-13
    assert np.allclose(f.psi.values[-1], -np.pi * compute_Uave(s), atol=1e-12)
    # V = psi_x checked through dx in Fourier space
    kx = np.fft.rfftfreq(16, 1 / 16)
    psix = np.fft.irfft(1j * kx * np.fft.rfft(f.psi.values, axis=1), n=16, axis=1)
    assert np.abs(psix - f.V.values).max() < 1e-12


def test_divergence_free_by_construction(rng):
    s = random_state(5, 16, rng)
    U = s.U_modes()
    m = np.arange(s.M)[:, None]
    assert np.abs(1j * m * U + cb.ddy(s.V)).max() < 1e-13


def test_mean_velocity_of_basic_flow():
    N = 32
    C0 = np.sqrt(2) * 0.2
    s = SpectralState.zeros(1, N)
    s.U0[:] = interp(lambda y: C0 * np.sin(y), N)
    assert abs(compute_Uave(s) - 2 * np.sqrt(2) * 0.2 / np.pi) < 1e-14
    assert abs(compute_Uave(s) - 0.1801) < 5e-5


def test_lowdim_state_mean_velocity():
    s = lowdim_to_state(0.1535, 0.03773, -0.001937, 8, 32)
    assert round(compute_Uave(s), 4) == 0.1382


def test_energy_quadrature_against_gauss_legendre(rng):
    s = random_state(3, 20, rng, decay=3.0)
    # Gauss-Legendre with 64 nodes is exact for the degree-38 integrand in y
    xg, wg = np.polynomial.legendre.leggauss(64)
    y = np.pi * (xg + 1) / 2
    U = synthesize(s.U_modes(), y, 32)
    V = synthesize(s.V, y, 32)
    e = (wg * np.pi / 2) @ (U**2 + V**2).mean(axis=1) / (2 * np.pi)
    assert abs(compute_Eave(s) - e) < 1e-12 * e


# ---------------------------------------------------------------- symmetry


def test_symmetry_projection_idempotent(rng):
    s = random_state(8, 16, rng)
    for target in ("full", "even", "sym"):
        p = symmetry_project(s, target)
        q = symmetry_project(p, target)
        assert np.abs(p.V - q.V).max() < 1e-14 and np.abs(p.U0 - q.U0).max() < 1e-14
        assert symmetry_residual(p) == 0.0
        assert compute_Eave(p) <= compute_Eave(s) + 1e-15


def test_odd_modes_vanish_in_even_space(rng):
    s = random_state(6, 12, rng)
    s.V[::2] = 0.0
    s.U0[:] = 0.0
    p = symmetry_project(s, "even")
    assert np.all(p.V == 0)


def test_sym_space_invariant_under_shift_reflect(rng):
    s = symmetry_project(random_state(9, 16, rng), "sym")
    f = eval_physical(s, 36, 17)
    # U(x + pi/2, pi - y) = U(x, y) and V(x + pi/2, pi - y) = -V(x, y)
    shift = 36 // 4
    U, V = f.U.values, f.V.values
    assert np.allclose(np.roll(U[::-1], -shift, axis=1), U, atol=1e-13)
    assert np.allclose(np.roll(V[::-1], -shift, axis=1), -V, atol=1e-13)


def test_unknown_symmetry_rejected():
    with pytest.raises(ValueError):
        SpectralState.zeros(2, 4, "odd")


# ---------------------------------------------------------------- params


def test_params_validation():
    with pytest.raises(ValueError, match="positive"):
        ChannelParams(0.0, 0.25, 0.2)
    with pytest.raises(ValueError):
        Affine(0.0, 0.0, 1.0)
    bad = np.zeros((2, 8), complex)
    bad[0, 0] = 1.0  # nonzero channel mean
    with pytest.raises(ValueError, match="zero channel mean"):
        ChannelParams(0.01, 0.25, 0.2, Spectral(bad))
    with pytest.raises(ValueError, match="conjugate"):
        Spectral(np.full((2, 4), 1j))


def test_forcing_profile():
    p = ChannelParams(0.01, 0.25, 0.2)
    y = np.linspace(0, np.pi, 7)
    F = cb.cheb_eval(p.forcing(32), y)
    assert np.allclose(F, np.sqrt(2) * 0.01 * 0.2 * (np.sin(y) - 2 / np.pi), atol=1e-14)


# ---------------------------------------------------------------- nonlinear term


def _conv_oracle(state, hm):
    """Products of Chebyshev series done by exact multiplication, then truncated."""
    M, N = state.M, state.N

    def pad(c, n=N):
        c = np.asarray(c)
        return np.pad(c, (0, n - len(c)))

    def d(c):
        return pad(C.chebder(c) * 2 / np.pi)

    def mul(a, b):
        return pad(C.chebmul(a, b), 2 * N)[:N]

    U, V, H = {}, {}, {}
    for m in range(M):
        if m == 0:
            Um, Vm = state.U0.astype(complex), np.zeros(N, complex)
        else:
            Vm = state.V[m]
            Um = 1j / m * d(Vm)
        U[m], V[m], H[m] = Um, Vm, hm[m]
        U[-m], V[-m], H[-m] = Um.conj(), Vm.conj(), hm[m].conj()
    mean = np.zeros(N)
    modes = np.zeros((M, N), complex)
    for m in range(M):
        acc_mean = np.zeros(N, complex)
        acc = np.zeros(N, complex)
        for m1 in range(-(M - 1), M):
            m2 = m - m1
            if abs(m2) > M - 1:
                continue
            u1, v1, h1 = U[m1], V[m1], H[m1]
            u2, v2, h2 = U[m2], V[m2], H[m2]
            acc_mean += -(mul(u1, 1j * m2 * u2) + mul(v1, d(u2))) + mul(h1, v2)
            lapv = d(d(v2)) - m2**2 * v2
            lapu = d(d(u2)) - m2**2 * u2
            acc += mul(u1, lapv) - mul(v1, lapu) + mul(u1, 1j * m2 * h2) + mul(v1, d(h2))
        if m == 0:
            mean = acc_mean.real
        else:
            modes[m] = -1j * m * acc
    return mean, modes


@pytest.mark.parametrize("M,N", [(4, 16), (3, 12), (4, 9), (2, 16)])
def test_nonlinear_matches_convolution_oracle(rng, M, N):
    s = random_state(M, N, rng)
    tab = (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))) / (1 + np.arange(N)) ** 2
    tab[0] = tab[0].real
    tab[0, 0] -= cb.integral_weights(N) @ tab[0].real / np.pi
    p = ChannelParams(0.01, 0.25, 0.2, Spectral(tab))
    mean, modes = nonlinear_rhs(s, p)
    mo, vo = _conv_oracle(s, p.topography_modes(M, N))
    assert np.abs(mean - mo).max() < 1e-8 * np.abs(mo).max()
    assert np.abs(modes - vo).max() < 1e-8 * np.abs(vo).max()


def test_nonlinear_without_y_dealiasing_is_close():
    # smooth fields: skipping y-dealiasing only perturbs the spectral tail
    N = 32
    s = SpectralState.zeros(3, N)
    s.U0[:] = interp(lambda y: 0.2 * np.sin(y) + 0.05 * np.cos(2 * y), N)
    s.V[1] = interp(lambda y: 0.03 * np.sin(y) * (1 + 0.5j * np.cos(y)), N)
    s.V[2] = interp(lambda y: 0.01j * np.sin(2 * y), N)
    p = ChannelParams(0.01, 0.25, 0.2, Ridge(0.2))
    a = nonlinear_rhs(s, p, dealias_y=True)
    b = nonlinear_rhs(s, p, dealias_y=False)
    assert np.abs(a[1] - b[1]).max() < 1e-10 * np.abs(a[1]).max()
    assert np.abs(a[0] - b[0]).max() < 1e-10 * np.abs(a[0]).max()


def test_parallel_flow_has_no_tendency():
    N = 32
    s = SpectralState.zeros(4, N)
    s.U0[:] = interp(lambda y: 0.3 * np.sin(y) + 0.1, N)
    for topo in (Ridge(0.0), Zonal(0.3, 0.7)):
        mean, modes = nonlinear_rhs(s, ChannelParams(0.01, 0.25, 0.2, topo))
        assert np.abs(mean).max() < 1e-15
        assert np.abs(modes).max() < 1e-15


def test_nonlinear_closure_irrelevant(rng):
    s = random_state(3, 10, rng)
    a = nonlinear_rhs(s, ChannelParams(0.01, 0.25, 0.2, Ridge(0.1), ConstantFave(0.1)))
    b = nonlinear_rhs(s, ChannelParams(0.01, 0.25, 0.2, Ridge(0.1), Affine(1.0, 2.0, 3.0)))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
