from pathlib import Path

import numpy as np
import pytest

from lassovrft.closed_loop import eval_reference, ideal_controller, simulate_closed_loop
from lassovrft.plant import builtin_plant, gen_input, reference_model, simulate_plant
from lassovrft.vrft import Dataset

ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = ROOT / "configs"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def td():
    return reference_model()


@pytest.fixture(scope="session")
def plant1_noise_free():
    u = gen_input("random", 1000, 24.0, seed=0)
    return Dataset(u, simulate_plant(builtin_plant(1), u))


@pytest.fixture(scope="session")
def ideal_loop_data(td):
    """Noise-free plant-1 data recorded with the ideal controller in the loop."""
    rng = np.random.default_rng(7)
    r = np.repeat(rng.uniform(-6, 6, 40), 25)
    res = simulate_closed_loop(builtin_plant(1), ideal_controller(1), r, td)
    return Dataset(res.u, res.y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
