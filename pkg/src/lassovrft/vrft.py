"""Virtual-reference regression: turns measured (u, y) data into a least-squares problem."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lti
from .lti import TransferFunction
from .nonlin import Dictionary, dict_eval

MIN_SAMPLES = 10


class DataFormatError(ValueError):
    """Malformed dataset file."""


@dataclass(frozen=True, eq=False)
class Dataset:
    u: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        u = lti.as_signal(self.u, "u")
        y = lti.as_signal(self.y, "y")
        if u.size != y.size:
            raise ValueError(f"u and y lengths differ ({u.size} vs {y.size})")
        if u.size < MIN_SAMPLES:
            raise ValueError(f"dataset needs at least {MIN_SAMPLES} samples, got {u.size}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.u.size


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """``target ~ phi @ rho``; row k corresponds to sample ``t = k + 1``."""

    phi: np.ndarray
    target: np.ndarray
    zbar: np.ndarray
    dictionary: Dictionary

    @property
    def n_eff(self) -> int:
        return self.target.size

    @property
    def m(self) -> int:
        return self.phi.shape[1]


def _check_reference_model(td: TransferFunction, tol: float = 1e-9) -> None:
    if not td.is_stable():
        raise ValueError("reference model must be stable")
    if lti.relative_degree(td) < 0:
        raise ValueError("reference model must be proper")
    if abs(lti.dc_gain(td) - 1.0) > tol:
        raise ValueError("reference model must have unit DC gain")


def virtual_reference(td: TransferFunction, y) -> np.ndarray:
    """Apply ``Td^{-1}`` to ``y`` exactly, losing the last ``d`` samples.

    ``Td^{-1} = z^d * H`` with ``H = den / (z^d num)`` proper, so
    ``rbar(t) = (H y)(t + d)``.
    """
    _check_reference_model(td)
    y = lti.as_signal(y, "y")
    d = lti.relative_degree(td)
    if y.size <= d:
        raise ValueError(f"need more than {d} samples")
    inner = TransferFunction(td.den, np.concatenate([td.num, np.zeros(d)]))
    w = lti.filter(inner, y)
    return w[d:]


def build_regression(data: Dataset, td: TransferFunction, dictionary: Dictionary) -> RegressionProblem:
    rbar = virtual_reference(td, data.y)
    n_eff = rbar.size
    ebar = rbar - data.y[:n_eff]
    zbar = np.concatenate([[0.0], np.cumsum(ebar[:-1])])
    bad = np.flatnonzero(~np.isfinite(zbar))
    if bad.size:
        raise ValueError(f"integrator state is not finite at sample {int(bad[0]) + 1}")
    phi = dict_eval(dictionary, zbar)
    if not np.all(np.isfinite(phi)):
        row = int(np.flatnonzero(~np.all(np.isfinite(phi), axis=1))[0])
        raise ValueError(f"regressor not finite at sample {row + 1}")
    return RegressionProblem(phi=phi, target=data.u[:n_eff].copy(), zbar=zbar, dictionary=dictionary)


def vrft_cost(problem: RegressionProblem, rho) -> float:
    rho = np.asarray(rho, dtype=float).reshape(-1)
    if rho.size != problem.m:
        raise ValueError(f"rho has length {rho.size}, expected {problem.m}")
    r = problem.target - problem.phi @ rho
    return float(r @ r)


def write_dataset_csv(path, u, y) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "u", "y"])
        for t, (ui, yi) in enumerate(zip(u, y), start=1):
            w.writerow([t, repr(float(ui)), repr(float(yi))])


def read_dataset_csv(path) -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: line 1: empty file") from None
        header = [h.strip() for h in header]
        missing = {"t", "u", "y"} - set(header)
        if missing:
            raise DataFormatError(f"{path}: line 1: missing columns {sorted(missing)}")
        iu, iy = header.index("u"), header.index("y")
        u, y = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ui, yi = float(row[iu]), float(row[iy])
            except (ValueError, IndexError):
                raise DataFormatError(f"{path}: line {lineno}: cannot parse row {row!r}") from None
            if not (np.isfinite(ui) and np.isfinite(yi)):
                raise DataFormatError(f"{path}: line {lineno}: non-finite value")
            u.append(ui)
            y.append(yi)
    return Dataset(np.array(u), np.array(y))


def write_regression_csv(path, problem: RegressionProblem) -> None:
    """Dump ``zbar``, ``target`` and every regressor column for external solvers."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["zbar", "target"] + [f"phi{i}" for i in range(1, problem.m + 1)])
        for z, tgt, row in zip(problem.zbar, problem.target, problem.phi):
            w.writerow([repr(float(z)), repr(float(tgt))] + [repr(float(v)) for v in row])
