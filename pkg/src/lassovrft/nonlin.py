"""Scalar nonlinear maps: piecewise-affine functions and controller dictionaries."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class PiecewiseAffineMap:
    """Continuous, strictly increasing piecewise-affine map.

    ``slopes[k]`` applies on the k-th interval delimited by ``breakpoints``;
    ``anchor`` is the value at ``x = 0``. Intercepts are derived, so the map
    is continuous by construction.
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    anchor: float = 0.0
    _knot_values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        sl = np.asarray(self.slopes, dtype=float).reshape(-1)
        if sl.size != bp.size + 1:
            raise ValueError("need exactly one more slope than breakpoints")
        if bp.size and np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(sl <= 0) or not np.all(np.isfinite(sl)):
            raise ValueError("slopes must be positive (map must be strictly increasing)")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "slopes", sl)
        object.__setattr__(self, "anchor", float(self.anchor))
        object.__setattr__(self, "_knot_values", self._eval_knots(bp))

    def _eval_knots(self, bp: np.ndarray) -> np.ndarray:
        # integrate slopes outward from x = 0
        vals = np.empty(bp.size)
        k0 = int(np.searchsorted(bp, 0.0, side="right"))  # piece containing 0
        for k in range(k0, bp.size):
            left = 0.0 if k == k0 else bp[k - 1]
            base = self.anchor if k == k0 else vals[k - 1]
            vals[k] = base + self.slopes[k] * (bp[k] - left)
        for k in range(k0 - 1, -1, -1):
            right = 0.0 if k == k0 - 1 else bp[k + 1]
            base = self.anchor if k == k0 - 1 else vals[k + 1]
            vals[k] = base - self.slopes[k + 1] * (right - bp[k])
        return vals

    def __call__(self, x):
        return pwa_eval(self, x)

    def __eq__(self, other):
        if not isinstance(other, PiecewiseAffineMap):
            return NotImplemented
        return (self.breakpoints.shape == other.breakpoints.shape
                and np.allclose(self.breakpoints, other.breakpoints, rtol=0, atol=1e-12)
                and np.allclose(self.slopes, other.slopes, rtol=0, atol=1e-12)
                and abs(self.anchor - other.anchor) <= 1e-12)


def pwa_eval(pwa: PiecewiseAffineMap, x):
    """Evaluate ``pwa`` at scalar or array ``x``."""
    xa = np.asarray(x, dtype=float)
    bp = pwa.breakpoints
    if bp.size == 0:
        out = pwa.anchor + pwa.slopes[0] * xa
    else:
        k = np.searchsorted(bp, xa, side="right")
        # reference point of each piece: the nearest knot (or 0 for the centre piece)
        k0 = int(np.searchsorted(bp, 0.0, side="right"))
        ref_x = np.where(k > k0, bp[np.clip(k - 1, 0, bp.size - 1)],
                         np.where(k < k0, bp[np.clip(k, 0, bp.size - 1)], 0.0))
        ref_y = np.where(k > k0, pwa._knot_values[np.clip(k - 1, 0, bp.size - 1)],
                         np.where(k < k0, pwa._knot_values[np.clip(k, 0, bp.size - 1)], pwa.anchor))
        out = ref_y + pwa.slopes[k] * (xa - ref_x)
    return float(out) if np.ndim(out) == 0 else out


def pwa_invert(pwa: PiecewiseAffineMap) -> PiecewiseAffineMap:
    """Exact inverse of a strictly increasing piecewise-affine map."""
    if np.any(pwa.slopes <= 0):
        raise ValueError("map is not strictly increasing")
    new_bp = pwa._knot_values.copy()
    new_slopes = 1.0 / pwa.slopes
    # inverse value at y = 0: solve pwa(x) = 0 on the right piece
    k = int(np.searchsorted(new_bp, 0.0, side="right"))
    if pwa.breakpoints.size == 0:
        x0 = -pwa.anchor / pwa.slopes[0]
    else:
        j = min(k, pwa.breakpoints.size - 1)
        x_ref, y_ref = pwa.breakpoints[j], new_bp[j]
        x0 = x_ref + (0.0 - y_ref) / pwa.slopes[k]
    return PiecewiseAffineMap(new_bp, new_slopes, x0)


def benchmark_phi() -> PiecewiseAffineMap:
    """The odd input nonlinearity shared by both benchmark plants."""
    return PiecewiseAffineMap([-2.0, -1.0, 1.0, 2.0], [2.0, 5.0, 1.0, 5.0, 2.0], 0.0)


def identity_map() -> PiecewiseAffineMap:
    return PiecewiseAffineMap([], [1.0], 0.0)


DICTIONARY_KINDS = ("polynomial-odd", "deadzone", "custom")


@dataclass(frozen=True)
class Dictionary:
    """Ordered scalar basis ``psi_1 .. psi_m`` used to parameterize the static map.

    Built-in kinds are normalized to unit magnitude at ``x = scale``. The
    ``custom`` kind takes a sequence of vectorized callables in ``functions``.
    """

    kind: str
    m: int
    scale: float = 200.0
    spacing: float = 10.0
    functions: Sequence[Callable] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in DICTIONARY_KINDS:
            raise ValueError(f"unknown dictionary kind {self.kind!r}; expected one of {DICTIONARY_KINDS}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be a positive integer")
        object.__setattr__(self, "m", int(self.m))
        if self.kind == "custom":
            if self.functions is None or len(self.functions) != self.m:
                raise ValueError("custom dictionary needs exactly m basis functions")
            return
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "deadzone":
            if not self.spacing >= 0:
                raise ValueError("spacing must be nonnegative")
            if self.spacing * (self.m - 1) >= self.scale:
                raise ValueError(
                    f"deadzone spacing*(m-1) = {self.spacing * (self.m - 1)} must be below scale {self.scale}")

    @property
    def thresholds(self) -> np.ndarray:
        """Deadzone half-widths ``spacing*(i-1)``."""
        return self.spacing * np.arange(self.m)

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom dictionaries are not serializable")
        return {"kind": self.kind, "m": self.m, "scale": self.scale, "spacing": self.spacing}

    @classmethod
    def from_dict(cls, d: dict) -> "Dictionary":
        return cls(kind=d["kind"], m=int(d["m"]), scale=float(d.get("scale", 200.0)),
                   spacing=float(d.get("spacing", 10.0)))


def polynomial_dictionary(m: int, scale: float = 200.0) -> Dictionary:
    return Dictionary("polynomial-odd", m, scale)


def deadzone_dictionary(m: int, spacing: float = 10.0, scale: float = 200.0) -> Dictionary:
    return Dictionary("deadzone", m, scale, spacing)


def dict_eval(d: Dictionary, x) -> np.ndarray:
    """Basis values; shape ``(m,)`` for scalar ``x``, ``(len(x), m)`` for arrays."""
    xa = np.asarray(x, dtype=float)
    col = xa.reshape(-1, 1)
    if d.kind == "polynomial-odd":
        powers = 2 * np.arange(1, d.m + 1) - 1
        out = (col / d.scale) ** powers
    elif d.kind == "deadzone":
        th = d.thresholds
        out = np.sign(col) * np.maximum(np.abs(col) - th, 0.0) / (d.scale - th)
    else:
        out = np.column_stack([np.broadcast_to(np.asarray(f(col[:, 0]), dtype=float), col.shape[:1])
                               for f in d.functions])
    return out[0] if xa.ndim == 0 else out


def static_map(rho, d: Dictionary, x):
    """``sum_i rho_i * psi_i(x)``."""
    rho = np.asarray(rho, dtype=float).reshape(-1)
    if rho.size != d.m:
        raise ValueError(f"parameter length {rho.size} does not match dictionary size {d.m}")
    val = dict_eval(d, x) @ rho
    return float(val) if np.ndim(val) == 0 else val
