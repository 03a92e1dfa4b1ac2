"""Closed-loop simulation of a Hammerstein plant under an integrating controller."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lti
from .lti import TransferFunction
from .nonlin import benchmark_phi, dict_eval, pwa_invert
from .plant import HammersteinPlant, NoiseSpec
from .solvers import ControllerParams, nonzero_count

DIVERGENCE_LIMIT = 1e6
OSCILLATION_TOL = 0.05
MIN_HOLD = 30
DEFAULT_AMPLITUDES = (2.0, 6.0, -2.0, -6.0)
DEFAULT_DWELL = 150


class Controller:
    """Integrator followed by a static map.

    ``output()`` returns u(t) from errors up to t-1; ``observe(e)`` feeds e(t).
    """

    def reset(self) -> None:
        raise NotImplementedError

    def output(self) -> float:
        raise NotImplementedError

    def observe(self, e: float) -> None:
        raise NotImplementedError


class DictionaryController(Controller):
    def __init__(self, params: ControllerParams):
        self.params = params
        self._nz = np.flatnonzero(params.rho)
        self.reset()

    def reset(self):
        self.z = 0.0

    def output(self):
        if self._nz.size == 0:
            return 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            # non-finite output is caught by the divergence check
            return float(dict_eval(self.params.dictionary, self.z)[self._nz] @ self.params.rho[self._nz])

    def observe(self, e):
        self.z += e


class IdealController(Controller):
    """Exact model-reference controllers of the two benchmark plants.

    Plant 1: ``v(t) = v(t-1) + 0.05 e(t-1)``.
    Plant 2: ``v(t) = v(t-1) + 0.25 e(t-1) - 0.2 e(t-2)``.
    Both apply ``u = phi^{-1}(v)``.
    """

    GAINS = {1: (0.05, 0.0), 2: (0.25, -0.2)}

    def __init__(self, plant_id: int):
        if plant_id not in self.GAINS:
            raise ValueError(f"no ideal controller for plant {plant_id!r}")
        self.plant_id = plant_id
        self._g1, self._g2 = self.GAINS[plant_id]
        self._inv = pwa_invert(benchmark_phi())
        self.reset()

    def reset(self):
        self.v = 0.0
        self.e_prev = 0.0

    def output(self):
        return float(self._inv(self.v))

    def observe(self, e):
        self.v += self._g1 * e + self._g2 * self.e_prev
        self.e_prev = e


def ideal_controller(plant_id: int) -> IdealController:
    return IdealController(plant_id)


@dataclass
class ClosedLoopResult:
    r: np.ndarray
    y: np.ndarray
    u: np.ndarray
    y_d: np.ndarray
    J: float
    stable: bool
    divergence_index: int | None = None
    failure: str | None = None

    def summary(self, params: ControllerParams | None = None) -> dict:
        out = {"J": self.J if np.isfinite(self.J) else None, "stable": self.stable,
               "divergence_index": self.divergence_index, "failure": self.failure}
        out["nonzero_count"] = nonzero_count(params) if params is not None else None
        return out

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "r", "y", "y_d", "u"])
            for t in range(self.y.size):
                w.writerow([t + 1, repr(float(self.r[t])), repr(float(self.y[t])),
                            repr(float(self.y_d[t])), repr(float(self.u[t]))])

    def write_summary(self, path, params=None, extra: dict | None = None) -> None:
        doc = self.summary(params)
        if extra:
            doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=2))


def desired_response(td: TransferFunction, r) -> np.ndarray:
    return lti.filter(td, r)


def mr_cost(y, y_d) -> float:
    y = np.asarray(y, dtype=float)
    y_d = np.asarray(y_d, dtype=float)
    if y.shape != y_d.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {y_d.shape}")
    d = y_d - y
    return float(d @ d)


def eval_reference(amplitudes=DEFAULT_AMPLITUDES, dwell: int = DEFAULT_DWELL) -> np.ndarray:
    """Step train holding each amplitude for ``dwell`` samples."""
    if dwell < 1:
        raise ValueError("dwell must be at least 1")
    return np.repeat(np.asarray(amplitudes, dtype=float), dwell)


def _hold_segments(r: np.ndarray):
    """(start, stop) index pairs of constant runs of ``r`` at least MIN_HOLD long."""
    edges = np.flatnonzero(np.diff(r) != 0) + 1
    bounds = np.concatenate([[0], edges, [r.size]])
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b - a >= MIN_HOLD]


def find_sustained_oscillation(r, y, rel_tol: float = OSCILLATION_TOL) -> int | None:
    """First sample (1-based) of a hold-segment tail that fails to settle.

    Over the final third of every constant-reference hold the output must
    stay within a peak-to-peak band of ``rel_tol * max|r|``.
    """
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    band = rel_tol * max(float(np.max(np.abs(r))), 1e-12)
    for a, b in _hold_segments(r):
        lo = b - (b - a) // 3
        if np.ptp(y[lo:b]) > band:
            return int(lo) + 1
    return None


def simulate_closed_loop(plant: HammersteinPlant, ctrl: Controller, r, td: TransferFunction,
                         noise: NoiseSpec = NoiseSpec(),
                         oscillation_tol: float | None = OSCILLATION_TOL) -> ClosedLoopResult:
    """Run the loop from rest: measure y(t), form e(t), apply u(t), advance the plant.

    The loop is reported unstable if |y| or |u| exceeds ``DIVERGENCE_LIMIT``
    or, unless ``oscillation_tol`` is None, if the noise-free part of the
    output keeps oscillating at the end of a reference hold
    (see :func:`find_sustained_oscillation`). Either way the traces are cut at
    ``divergence_index`` and ``J`` is infinite.
    """
    r = lti.as_signal(r, "r")
    n = r.size
    b, a = lti.lfilter_coeffs(plant.linear_block)
    order = a.size - 1
    b = np.concatenate([b, np.zeros(order + 1 - b.size)])
    nu = noise.sample(n)
    phi = plant.input_nonlinearity

    # histories, most recent first
    y_hist = np.zeros(order)
    w_hist = np.zeros(order)
    y = np.zeros(n)
    y_true = np.zeros(n)
    u = np.zeros(n)
    ctrl.reset()
    div = None
    for t in range(n):
        y_clean = float(b[1:] @ w_hist - a[1:] @ y_hist) if order else 0.0
        y_true[t] = y_clean
        y[t] = y_clean + nu[t]
        u[t] = ctrl.output()
        if not (abs(y[t]) <= DIVERGENCE_LIMIT and abs(u[t]) <= DIVERGENCE_LIMIT):
            div = t + 1
            break
        ctrl.observe(r[t] - y[t])
        if order:
            y_hist = np.roll(y_hist, 1)
            y_hist[0] = y_clean
            w_hist = np.roll(w_hist, 1)
            w_hist[0] = phi(u[t])

    y_d = desired_response(td, r)
    failure = "diverged" if div is not None else None
    if div is None and oscillation_tol is not None:
        div = find_sustained_oscillation(r, y_true, oscillation_tol)
        failure = "oscillating" if div is not None else None
    if div is not None:
        k = div - 1
        return ClosedLoopResult(r[:k], y[:k], u[:k], y_d[:k], float("inf"), False, div, failure)
    return ClosedLoopResult(r, y, u, y_d, mr_cost(y, y_d), True, None)
