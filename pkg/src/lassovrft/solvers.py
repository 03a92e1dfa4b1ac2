"""Least-squares and L1-regularized (LASSO) solvers for VRFT regression problems."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import scipy.linalg

from .nonlin import Dictionary
from .vrft import RegressionProblem

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100_000


@dataclass
class ControllerParams:
    rho: np.ndarray
    dictionary: Dictionary
    alpha: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float).reshape(-1)
        if self.rho.size != self.dictionary.m:
            raise ValueError(f"rho has length {self.rho.size}, dictionary has m={self.dictionary.m}")
        if not np.all(np.isfinite(self.rho)):
            raise ValueError("rho must be finite")

    def to_dict(self) -> dict:
        return {
            "dictionary": self.dictionary.to_dict(),
            "alpha": self.alpha,
            "rho": self.rho.tolist(),
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ControllerParams":
        return cls(np.array(d["rho"], dtype=float), Dictionary.from_dict(d["dictionary"]),
                   float(d.get("alpha", 0.0)), dict(d.get("diagnostics", {})))

    def save(self, path, extra: dict | None = None) -> None:
        doc = self.to_dict()
        if extra:
            doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=2))

    @classmethod
    def load(cls, path) -> "ControllerParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _check_finite(problem: RegressionProblem) -> None:
    if problem.phi.size == 0:
        raise ValueError("regressor matrix is empty")
    if not (np.all(np.isfinite(problem.phi)) and np.all(np.isfinite(problem.target))):
        raise ValueError("regression problem contains non-finite entries")


def ols_solve(problem: RegressionProblem) -> ControllerParams:
    """Minimum-norm least squares via complete orthogonal decomposition (LAPACK gelsy)."""
    _check_finite(problem)
    rho, _, rank, _ = scipy.linalg.lstsq(problem.phi, problem.target, lapack_driver="gelsy")
    resid = problem.target - problem.phi @ rho
    diag = {
        "solver": "ols",
        "rank": int(rank),
        "rank_deficient": bool(rank < problem.m),
        "objective": float(resid @ resid),
    }
    return ControllerParams(rho, problem.dictionary, 0.0, diag)


def soft_threshold(x, lam):
    """``sign(x) * max(|x| - lam, 0)``."""
    if np.any(np.asarray(lam) < 0):
        raise ValueError("threshold must be nonnegative")
    out = np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)
    return float(out) if np.ndim(out) == 0 else out


@numba.njit(cache=True)
def _cd_sweeps(gram, corr, diag, rho, grad, alpha, tol, max_iter, gap_rule, yy):
    # grad = corr - gram @ rho is maintained incrementally
    m = rho.size
    for it in range(max_iter):
        max_delta = 0.0
        max_abs = 0.0
        for j in range(m):
            if diag[j] == 0.0:
                continue
            old = rho[j]
            zj = grad[j] + diag[j] * old
            if zj > alpha:
                new = (zj - alpha) / diag[j]
            elif zj < -alpha:
                new = (zj + alpha) / diag[j]
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                rho[j] = new
                for k in range(m):
                    grad[k] -= gram[j, k] * delta  # gram is symmetric; row access is contiguous
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
            if abs(new) > max_abs:
                max_abs = abs(new)
        if not gap_rule:
            if max_delta < tol:
                return it + 1, True
        elif max_abs == 0.0 or max_delta / max_abs < tol or it == max_iter - 1:
            if _duality_gap(gram, corr, rho, grad, alpha, yy) < tol * yy:
                return it + 1, True
    return max_iter, False


@numba.njit(cache=True)
def _duality_gap(gram, corr, rho, grad, alpha, yy):
    # per-sample quantities: yy = |y|^2/n, grad = X^T r / n
    c_rho = corr @ rho
    r2 = yy - 2.0 * c_rho + rho @ (gram @ rho)
    dual = np.max(np.abs(grad)) if grad.size else 0.0
    if dual > alpha:
        const = alpha / dual
        gap = 0.5 * (r2 + r2 * const * const)
    else:
        const = 1.0
        gap = r2
    return gap + alpha * np.sum(np.abs(rho)) - const * (yy - c_rho)


def duality_gap(problem: RegressionProblem, rho, alpha: float) -> float:
    """Duality gap of the per-sample LASSO objective at ``rho``."""
    n = problem.n_eff
    gram = problem.phi.T @ problem.phi / n
    corr = problem.phi.T @ problem.target / n
    rho = np.asarray(rho, dtype=float)
    return float(_duality_gap(gram, corr, rho, corr - gram @ rho, alpha,
                              float(problem.target @ problem.target) / n))


def lasso_objective(problem: RegressionProblem, rho, alpha: float) -> float:
    r = problem.target - problem.phi @ rho
    return float(r @ r) / (2.0 * problem.n_eff) + alpha * float(np.sum(np.abs(rho)))


def lasso_cd(problem: RegressionProblem, alpha: float, tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER, *, rho0=None, objective_scaling: str = "per-sample",
             standardize: bool = False, stopping: str = "coef",
             track_objective: bool = False) -> ControllerParams:
    """Cyclic coordinate descent for
    ``(1/(2 n)) ||target - phi rho||^2 + alpha ||rho||_1``.

    With ``objective_scaling="raw"`` the unscaled ``||.||^2 + alpha ||rho||_1``
    is minimized instead. One iteration is one full sweep over all coordinates.

    ``stopping="coef"`` stops once no coefficient moves by ``tol`` or more in
    a sweep. ``stopping="gap"`` follows scikit-learn's rule: when the largest
    move relative to the largest coefficient drops below ``tol``, stop if the
    duality gap is below ``tol * |target|^2 / n``.
    ``track_objective`` records the objective after every sweep (slow; for tests).
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if objective_scaling not in ("per-sample", "raw"):
        raise ValueError("objective_scaling must be 'per-sample' or 'raw'")
    if stopping not in ("coef", "gap"):
        raise ValueError("stopping must be 'coef' or 'gap'")
    _check_finite(problem)
    n = problem.n_eff
    eff_alpha = alpha / (2.0 * n) if objective_scaling == "raw" else alpha

    phi = problem.phi
    col_scale = np.ones(problem.m)
    if standardize:
        norms = np.sqrt(np.sum(phi * phi, axis=0) / n)
        col_scale = np.where(norms > 0, norms, 1.0)
        phi = phi / col_scale

    gram = phi.T @ phi / n
    corr = phi.T @ problem.target / n
    diag = np.ascontiguousarray(np.diag(gram)).copy()
    zero_cols = np.flatnonzero(diag == 0.0)

    rho = np.zeros(problem.m) if rho0 is None else np.asarray(rho0, dtype=float) * col_scale
    rho[zero_cols] = 0.0
    grad = corr - gram @ rho
    yy = float(problem.target @ problem.target) / n
    gap_rule = stopping == "gap"

    history = []
    if track_objective:
        scaled = RegressionProblem(phi, problem.target, problem.zbar, problem.dictionary)
        history.append(lasso_objective(scaled, rho, eff_alpha))
        iters, converged = 0, False
        while iters < max_iter:
            used, converged = _cd_sweeps(gram, corr, diag, rho, grad, eff_alpha, tol, 1, gap_rule, yy)
            iters += 1
            history.append(lasso_objective(scaled, rho, eff_alpha))
            if converged:
                break
    else:
        iters, converged = _cd_sweeps(gram, corr, diag, rho, grad, eff_alpha, tol,
                                      int(max_iter), gap_rule, yy)

    rho = rho / col_scale
    rho[rho == 0.0] = 0.0  # normalize -0.0
    diag_out = {
        "solver": "lasso",
        "iterations": int(iters),
        "converged": bool(converged),
        "objective": lasso_objective(problem, rho, eff_alpha),
        "objective_scaling": objective_scaling,
        "tol": tol,
        "stopping": stopping,
        "max_iter": int(max_iter),
    }
    if zero_cols.size:
        diag_out["zero_columns"] = zero_cols.tolist()
        diag_out["note"] = "identically zero regressor columns pinned to 0"
    if track_objective:
        diag_out["objective_history"] = history
    return ControllerParams(rho, problem.dictionary, float(alpha), diag_out)


def lasso_path(problem: RegressionProblem, alphas, tol: float = DEFAULT_TOL,
               max_iter: int = DEFAULT_MAX_ITER, **kw) -> list[ControllerParams]:
    """Solve for each alpha, largest first, warm-starting from the previous solution.

    Results are returned in the order of ``alphas``.
    """
    order = sorted(range(len(alphas)), key=lambda i: -alphas[i])
    out: list[ControllerParams | None] = [None] * len(alphas)
    rho = None
    for i in order:
        res = lasso_cd(problem, alphas[i], tol, max_iter, rho0=rho, **kw)
        rho = res.rho
        out[i] = res
    return out


def nonzero_count(params) -> int:
    rho = params.rho if isinstance(params, ControllerParams) else np.asarray(params)
    return int(np.count_nonzero(rho))
