"""Discrete-time SISO transfer functions and zero-initial-condition filtering.

Polynomials are plain coefficient sequences in descending powers of ``z``.
Signals are 1-D float arrays; sample ``t = 1`` is stored at index 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as _sps

SETTLING_HORIZON = 10_000


def as_signal(values, name: str = "signal") -> np.ndarray:
    """Validate and return ``values`` as a finite, nonempty 1-D float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValueError(f"{name} has a non-finite value at index {bad}")
    return arr


def _trim(poly) -> np.ndarray:
    p = np.atleast_1d(np.asarray(poly, dtype=float))
    nz = np.flatnonzero(p != 0.0)
    if nz.size == 0:
        return np.zeros(1)
    return p[nz[0]:].copy()


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """Rational map ``num(z) / den(z)``, stored with a monic denominator.

    Improper instances are allowed so that inverses can be expressed, but
    :func:`filter` refuses them.
    """

    num: np.ndarray
    den: np.ndarray

    def __init__(self, num, den):
        n = _trim(num)
        d = _trim(den)
        if d[0] == 0.0:
            raise ValueError("denominator is identically zero")
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(d))):
            raise ValueError("coefficients must be finite")
        lead = d[0]
        n = n / lead
        d = d / lead
        n.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "num", n)
        object.__setattr__(self, "den", d)

    @property
    def is_proper(self) -> bool:
        return relative_degree(self) >= 0

    def poles(self) -> np.ndarray:
        return np.roots(self.den) if self.den.size > 1 else np.array([])

    def is_stable(self) -> bool:
        p = self.poles()
        return bool(np.all(np.abs(p) < 1.0))

    def __mul__(self, other: "TransferFunction") -> "TransferFunction":
        return TransferFunction(np.polymul(self.num, other.num), np.polymul(self.den, other.den))

    def __call__(self, z):
        return np.polyval(self.num, z) / np.polyval(self.den, z)

    def __eq__(self, other):
        if not isinstance(other, TransferFunction):
            return NotImplemented
        return (self.num.shape == other.num.shape and self.den.shape == other.den.shape
                and np.allclose(self.num, other.num, rtol=0, atol=1e-12)
                and np.allclose(self.den, other.den, rtol=0, atol=1e-12))

    def __repr__(self):
        return f"TransferFunction(num={self.num.tolist()}, den={self.den.tolist()})"

    def to_dict(self) -> dict:
        return {"num": self.num.tolist(), "den": self.den.tolist()}


def relative_degree(tf: TransferFunction) -> int:
    """Pole excess ``deg(den) - deg(num)``; equals the input-output delay."""
    return (tf.den.size - 1) - (tf.num.size - 1)


def lfilter_coeffs(tf: TransferFunction) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients in ascending powers of ``z^-1`` for a proper ``tf``."""
    rd = relative_degree(tf)
    if rd < 0:
        raise ValueError(f"transfer function is improper (relative degree {rd})")
    b = np.concatenate([np.zeros(rd), tf.num])
    return b, tf.den


def filter(tf: TransferFunction, x) -> np.ndarray:
    """Response of ``tf`` to ``x`` from rest (zero initial conditions)."""
    x = as_signal(x, "input")
    b, a = lfilter_coeffs(tf)
    return _sps.lfilter(b, a, x)


def dc_gain(tf: TransferFunction) -> float:
    d1 = float(np.polyval(tf.den, 1.0))
    if d1 == 0.0:
        raise ZeroDivisionError(
            "denominator vanishes at z=1; deflate the (z-1) factor first (see deflate_root)")
    return float(np.polyval(tf.num, 1.0)) / d1


def deflate_root(poly, root: float, tol: float = 1e-9) -> np.ndarray:
    """Divide ``poly`` by ``(z - root)`` and return the quotient.

    Raises ``ValueError`` if ``root`` leaves a remainder larger than
    ``tol`` relative to the coefficient scale of ``poly``.
    """
    p = _trim(poly)
    if p.size < 2:
        raise ValueError("cannot deflate a constant polynomial")
    q = np.empty(p.size - 1)
    acc = 0.0
    for i in range(p.size - 1):
        acc = acc * root + p[i]
        q[i] = acc
    remainder = acc * root + p[-1]
    scale = float(np.sum(np.abs(p) * np.abs(root) ** np.arange(p.size - 1, -1, -1)))
    scale = max(scale, float(np.max(np.abs(p))))
    if abs(remainder) > tol * scale:
        raise ValueError(f"{root} is not a root: remainder {remainder:.3e} exceeds tolerance")
    return q


def step_response(tf: TransferFunction, n: int) -> np.ndarray:
    return filter(tf, np.ones(n))


def settling_time(tf: TransferFunction, band: float = 0.02) -> int:
    """First sample ``t`` (1-based) from which the step response stays within
    ``band * |final value|`` of the final value."""
    if not 0.0 < band < 1.0:
        raise ValueError("band must lie in (0, 1)")
    if not tf.is_stable():
        raise ValueError("settling time requires a stable transfer function")
    final = dc_gain(tf)
    y = step_response(tf, SETTLING_HORIZON)
    outside = np.abs(y - final) > band * abs(final)
    if outside[-1]:
        raise ValueError(f"step response not settled within {SETTLING_HORIZON} samples")
    idx = np.flatnonzero(outside)
    return 1 if idx.size == 0 else int(idx[-1]) + 2


def tf_from_dict(d: dict) -> TransferFunction:
    return TransferFunction(d["num"], d["den"])
