import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nonstoch_ais import StateSpaceModel, random_system  # noqa: E402

CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"


def toy_t0(observed: bool = True) -> StateSpaceModel:
    """T=0, X0={0,1}, U={0,1}, d=|x-u|; observation y=x or constant."""
    return StateSpaceModel(
        0, [0, 1], [0, 1], [0], [0],
        dynamics=lambda t, x, u, w: x,
        observation=(lambda t, x, n: x) if observed else (lambda t, x, n: 0),
        cost=lambda t, x, u: abs(x - u),
    )


def parity_system(horizon: int = 2, criterion: str = "instantaneous") -> StateSpaceModel:
    """Position 0..3 pushed by action and disturbance, observed through parity."""
    return StateSpaceModel(
        horizon, [0, 1, 2, 3], [-1, 0, 1], [0, 1], [0],
        dynamics=lambda t, x, u, w: min(3, max(0, x + u + w)),
        observation=lambda t, x, n: x % 2,
        cost=lambda t, x, u: abs(x - 2),
        criterion=criterion,
    )


def corpus(n: int = 50, seed: int = 2024, **kw) -> list:
    rng = np.random.default_rng(seed)
    return [random_system(rng, **kw) for _ in range(n)]


@pytest.fixture(scope="session")
def small_corpus():
    return corpus(30, seed=11)


@pytest.fixture
def configs_dir():
    return CONFIGS


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
