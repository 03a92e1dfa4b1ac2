"""Hammerstein benchmark plants, measurement noise and excitation signals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lti
from .lti import TransferFunction
from .nonlin import PiecewiseAffineMap, benchmark_phi

# Reference model shared by both case studies: double pole at 0.9, unit DC gain.
TD_NUM = (0.01,)
TD_DEN = (1.0, -1.8, 0.81)

STEP_LEVELS = (0.25, -0.6, 1.0, -0.25, 0.6, -1.0)


def reference_model() -> TransferFunction:
    return TransferFunction(TD_NUM, TD_DEN)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white gaussian output noise, drawn with numpy's PCG64 generator."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")

    def sample(self, n: int) -> np.ndarray:
        if self.sigma == 0:
            return np.zeros(n)
        return self.sigma * np.random.default_rng(self.seed).standard_normal(n)


@dataclass(frozen=True)
class HammersteinPlant:
    input_nonlinearity: PiecewiseAffineMap
    linear_block: TransferFunction
    label: str = ""

    def __post_init__(self):
        if lti.relative_degree(self.linear_block) < 1:
            raise ValueError("linear block must be strictly proper")


def builtin_plant(plant_id: int) -> HammersteinPlant:
    if plant_id == 1:
        g = TransferFunction([0.2], [1.0, -0.8])
    elif plant_id == 2:
        g = TransferFunction([0.04, 0.0], np.polymul([1.0, -0.8], [1.0, -0.8]))
    else:
        raise ValueError(f"unknown plant id {plant_id!r}; expected 1 or 2")
    return HammersteinPlant(benchmark_phi(), g, label=f"plant{plant_id}")


def simulate_plant(plant: HammersteinPlant, u, noise: NoiseSpec = NoiseSpec()) -> np.ndarray:
    """Open-loop response ``G(phi(u)) + noise`` from rest."""
    u = lti.as_signal(u, "u")
    y = lti.filter(plant.linear_block, plant.input_nonlinearity(u))
    return y + noise.sample(u.size)


def excitation_filter(td: TransferFunction, tol: float = 1e-9) -> tuple[TransferFunction, float]:
    """Build ``F = Td (1 - Td) a / (z - 1)`` with the ``(z-1)`` factor cancelled.

    Returns ``(F, a)`` with ``a`` chosen so that ``F(1) = 1``.
    """
    n, d = td.num, td.den
    g1 = np.polyval(n, 1.0) / np.polyval(d, 1.0)
    if abs(g1 - 1.0) > tol:
        raise ValueError(f"reference model must have unit DC gain, got {g1!r}")
    one_minus = np.polysub(d, n)  # numerator of 1 - Td over den d
    reduced = lti.deflate_root(one_minus, 1.0, tol)
    num = np.polymul(n, reduced)
    den = np.polymul(d, d)
    unscaled = TransferFunction(num, den)
    a = 1.0 / lti.dc_gain(unscaled)
    return TransferFunction(a * unscaled.num, unscaled.den), a


def step_sequence(levels, dwell: int, n: int) -> np.ndarray:
    """Cycle through ``levels``, holding each for ``dwell`` samples, truncated to ``n``."""
    if dwell < 1:
        raise ValueError("dwell must be at least 1")
    reps = -(-n // (dwell * len(levels)))
    return np.tile(np.repeat(np.asarray(levels, dtype=float), dwell), reps)[:n]


def gen_input(kind: str = "random", n: int = 1000, amplitude: float = 10.0, seed: int = 0,
              td: TransferFunction | None = None, dwell: int = 100) -> np.ndarray:
    """Filtered excitation signal: uniform white noise or a step train."""
    if n < 1:
        raise ValueError("n must be positive")
    f, _ = excitation_filter(td if td is not None else reference_model())
    if kind == "random":
        raw = np.random.default_rng(seed).uniform(-amplitude, amplitude, n)
    elif kind == "steps":
        raw = amplitude * step_sequence(STEP_LEVELS, dwell, n)
    else:
        raise ValueError(f"unknown input kind {kind!r}")
    return lti.filter(f, raw)
