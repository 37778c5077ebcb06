import numpy as np
import pytest

from qgchannel import chebyshev as cb
from qgchannel.fields import SpectralState, enforce_dirichlet
from qgchannel.params import ChannelParams, ConstantFave, Ridge


def random_state(M: int, N: int, rng: np.random.Generator, decay: float = 2.0) -> SpectralState:
    """Random real-analytic-looking state with V = 0 on the walls."""
    amp = (1.0 + np.arange(N)) ** -decay
    s = SpectralState.zeros(M, N)
    s.U0[:] = rng.standard_normal(N) * amp
    V = (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))) * amp
    s.V[1:] = enforce_dirichlet(V[1:])
    return s


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ridge_params():
    return ChannelParams(0.01, 0.25, 0.2, Ridge(0.2), ConstantFave(0.002))


def interp(func, N: int) -> np.ndarray:
    return cb.cheb_interp(func, N)


# one line per acceptance criterion, printed after the run
_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records the verdict, then asserts it."""

    def record(n: int, ok: bool, detail: str) -> None:
        _ACCEPTANCE[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in range(1, 11):
            terminalreporter.write_line(_ACCEPTANCE.get(n, f"criterion {n:2d}: FAIL  no verdict (not run or errored)"))
