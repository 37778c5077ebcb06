import numpy as np
import pytest

from qgchannel.continuation import (
    Branch,
    BranchPoint,
    ContinuationConfig,
    ContinuationError,
    Layout,
    Norm,
    SteadyProblem,
    crossings,
    first_solution,
    folds,
    jacobian_GF,
    jacobian_Gf,
    newton_fixed_F,
    default_seed,
    refine,
    residual_G,
    solve_at_F,
    trace_branch,
)
from qgchannel.dns import DnsConfig, DNSSolver
from qgchannel.fields import compute_Eave, compute_Uave, symmetry_project
from qgchannel.params import ChannelParams, ConstantFave, Ridge

from conftest import random_state

RIDGE = ChannelParams(0.01, 0.25, 0.2, Ridge(0.2))


def smooth_vector(layout: Layout, rng, scale: float = 0.05) -> np.ndarray:
    s = random_state(layout.M, layout.N, rng, decay=3.0)
    s = symmetry_project(s, layout.symmetry)
    return scale * layout.pack(s)


@pytest.mark.parametrize("sym,M,N", [("sym", 8, 16), ("even", 6, 12), ("full", 4, 10)])
def test_layout_roundtrip(rng, sym, M, N):
    lay = Layout(M, N, sym)
    f = rng.standard_normal(lay.size)
    assert np.array_equal(lay.pack(lay.unpack(f)), f)


def test_norm_is_energy_plus_force_term(rng):
    lay = Layout(8, 16, "sym")
    f = smooth_vector(lay, rng)
    nrm = Norm(lay, 0.01)
    s = lay.unpack(f)
    assert abs(nrm(f, 0.0) ** 2 - compute_Eave(s)) < 1e-14
    assert abs(nrm(np.zeros_like(f), 0.002) ** 2 - 0.002**2 / (2e-4)) < 1e-15


@pytest.mark.parametrize("sym,M,N", [("sym", 8, 16), ("even", 6, 12), ("full", 4, 10)])
def test_jacobian_matches_finite_differences(rng, sym, M, N):
    lay = Layout(M, N, sym)
    f = smooth_vector(lay, rng)
    d = smooth_vector(lay, rng, 1.0)
    J = jacobian_Gf(f, 0.002, RIDGE, lay)
    h = 1e-6
    fd = (residual_G(f + h * d, 0.002, RIDGE, lay) - residual_G(f - h * d, 0.002, RIDGE, lay)) / (2 * h)
    assert np.abs(J @ d - fd).max() <= 1e-6 * np.abs(fd).max()
    # dG/dF is the unit vector of the mean coefficient
    GF = jacobian_GF(f, 0.002, RIDGE, lay)
    fdF = (residual_G(f, 0.002 + 1e-4, RIDGE, lay) - residual_G(f, 0.002, RIDGE, lay)) / 1e-4
    assert np.allclose(GF, fdF, atol=1e-9)


def test_steady_residual_agrees_with_dns_tendency(rng):
    # a steady point of G must be a fixed point of the time stepper
    cfg = ContinuationConfig(M=8, N=16)
    pt = first_solution(RIDGE, cfg=cfg)
    lay = Layout(8, 16, "sym")
    s = lay.unpack(pt.f)
    sol = DNSSolver(RIDGE.with_closure(ConstantFave(pt.F)), DnsConfig(0.05, 1.0, 8, 16, symmetry="sym"))
    s2 = sol.step(s)
    assert np.abs(s2.U0 - s.U0).max() < 1e-9
    assert np.abs(s2.V - s.V).max() < 1e-9


def test_seed_matches_described_guess():
    lay = Layout(8, 16, "sym")
    f, F = default_seed(RIDGE, lay, 0.003)
    s = lay.unpack(f)
    assert F == 0.003
    assert abs(compute_Uave(s) - 0.3) < 1e-12
    assert np.all(s.V[2].real == 0)
    assert np.abs(s.V[2].imag).max() > 0


def test_newton_failure_is_reported():
    lay = Layout(8, 16, "sym")
    prob = SteadyProblem(RIDGE, lay)
    f = np.full(lay.size, 1e3)
    with pytest.raises(ContinuationError, match="larger starting F_ave"):
        newton_fixed_F(prob, f, 0.003, max_iter=3)


def test_flat_branch_is_exact_line():
    cfg = ContinuationConfig(M=8, N=16, F_min=0.0, F_max=0.004)
    b = trace_branch(ChannelParams(0.01, 0.25, 0.2, Ridge(0.0)), cfg)
    assert b.termination_reason == "parameter_bound"
    assert np.allclose(b.U_ave, b.F / 0.01, atol=1e-12)
    assert not folds(b)
    assert np.all(np.diff(b.F) < 0)


@pytest.fixture(scope="module")
def toy_branch():
    # below F ~ 0.0016 this coarse resolution has spurious branch points
    cfg = ContinuationConfig(M=8, N=16, F_min=0.0017, F_max=0.0035)
    return trace_branch(RIDGE, cfg), cfg


def test_toy_branch_points_converged(toy_branch):
    b, cfg = toy_branch
    assert b.termination_reason in ("parameter_bound", "min_step_reached", "max_points")
    prob = SteadyProblem(RIDGE, b.layout)
    for p in b.points:
        assert np.abs(prob.G(p.f, p.F)).max() < 1e-10
        assert p.residual < 1e-10


def test_toy_branch_folds_and_crossings(toy_branch):
    b, cfg = toy_branch
    flags = b.fold_flags()
    assert flags.sum() >= 2
    fs = folds(b)
    assert len(fs) == flags.sum()
    pts = solve_at_F(RIDGE, b, 0.002, cfg)
    assert len(pts) == len(crossings(b, 0.002)) == 3
    assert all(abs(p.F - 0.002) == 0 for p in pts)
    U = sorted(p.U_ave for p in pts)
    assert len(set(np.round(U, 6))) == len(U)


def test_branch_csv(toy_branch, tmp_path):
    b, _ = toy_branch
    path = tmp_path / "branch.csv"
    b.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,F_ave,U_ave,E_ave,ds,fold_flag"
    assert len(lines) == len(b) + 1
    assert sum(int(l.split(",")[-1]) for l in lines[1:]) == b.fold_flags().sum()


def test_refine_to_higher_resolution(toy_branch):
    b, cfg = toy_branch
    p = solve_at_F(RIDGE, b, 0.002, cfg)[0]
    s, q = refine(RIDGE, p.state(b.layout), 0.002, 8, 24)
    assert q.residual < 1e-10
    assert s.N == 24 and abs(q.U_ave - p.U_ave) < 0.05 * p.U_ave


def test_crossings_exact_hits():
    pts = [BranchPoint(np.zeros(1), F, 0.0, 0.0) for F in (1.0, 2.0, 1.0, 0.5)]
    b = Branch(pts)
    assert crossings(b, 1.5) == [(0, 0.5), (1, 0.5)]
    assert crossings(b, 1.0)[0] == (0, 0.0)
    assert list(b.fold_flags()) == [False, True, False, False]
