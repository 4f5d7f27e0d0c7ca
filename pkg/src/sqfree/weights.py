"""Smooth bump weights on [1/2, 1] and their Mellin transforms.

The family is omega(y) = c * exp(-beta / ((y - 1/2)(1 - y))) on (1/2, 1),
zero elsewhere, with c = amplitude * exp(16 beta) so that the peak value
(at y = 3/4) equals ``amplitude``. Mellin transforms use composite
Gauss-Legendre rules on dyadic panels, doubled until two successive rules
agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument, QuadratureFailure

NODES_PER_PANEL = 16
MAX_PANELS = 2**14
OSCILLATORY_HEIGHT = 200.0


@dataclass(frozen=True)
class SmoothWeight:
    beta: float = 1.0
    amplitude: float = 1.0
    tol: float = 1e-10
    family: str = "exp-bump"
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.beta <= 0:
            raise InvalidArgument("beta must be positive")
        if self.amplitude <= 0:
            raise InvalidArgument("amplitude must be positive")
        if self.family != "exp-bump":
            raise InvalidArgument(f"unknown weight family {self.family!r}")

    @property
    def normalization(self) -> float:
        return self.amplitude * math.exp(16.0 * self.beta)

    @property
    def clamped(self) -> bool:
        """True when 0 <= omega <= 1 everywhere."""
        return self.amplitude <= 1.0

    def __call__(self, y):
        return bump(y, self)

    def scaled(self, factor: float) -> SmoothWeight:
        return SmoothWeight(self.beta, self.amplitude * factor, self.tol, self.family)

    def weighted_nodes(self, panels: int):
        """(y, w * omega(y)) for the composite rule with ``panels`` panels."""
        if panels not in self._cache:
            y, w = _composite_rule(panels)
            self._cache[panels] = (y, w * bump(y, self))
        return self._cache[panels]


def bump(y, w: SmoothWeight):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = (y > 0.5) & (y < 1.0)
    yi = y[inside]
    out[inside] = w.normalization * np.exp(-w.beta / ((yi - 0.5) * (1.0 - yi)))
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def _gauss_legendre():
    return np.polynomial.legendre.leggauss(NODES_PER_PANEL)


@lru_cache(maxsize=32)
def _composite_rule(panels: int):
    x, wx = _gauss_legendre()
    edges = np.linspace(0.5, 1.0, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    y = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    w = (half[:, None] * wx[None, :]).ravel()
    return y, w


def _min_panels(t_max: float) -> int:
    panels = 2
    if t_max > OSCILLATORY_HEIGHT:
        periods = math.log(2.0) * t_max / (2 * math.pi)
        need = math.ceil(8 * periods / NODES_PER_PANEL)
        panels = max(panels, 1 << max(1, math.ceil(math.log2(need))))
    return panels


def _apply(w: SmoothWeight, panels: int, s: np.ndarray) -> np.ndarray:
    y, wy = w.weighted_nodes(panels)
    logy = np.log(y)
    return np.exp(np.outer(s - 1, logy)) @ wy


@dataclass(frozen=True)
class MellinValue:
    s: complex
    value: complex
    error: float


def _select_panels(w: SmoothWeight, s: np.ndarray, tol: float) -> tuple[int, np.ndarray, np.ndarray]:
    """Refine until every point in ``s`` converges; returns (panels, values, errors)."""
    t_max = float(np.max(np.abs(s.imag))) if s.size else 0.0
    panels = _min_panels(t_max)
    prev = _apply(w, panels, s)
    while True:
        panels *= 2
        if panels > MAX_PANELS:
            raise QuadratureFailure(f"Mellin quadrature did not reach tolerance {tol:g}")
        cur = _apply(w, panels, s)
        err = np.abs(cur - prev)
        if np.all(err <= tol):
            return panels, cur, err
        prev = cur


def mellin(w: SmoothWeight, s: complex, tol: float | None = None) -> MellinValue:
    """Integral of y^(s-1) omega(y) over [1/2, 1]."""
    tol = w.tol if tol is None else tol
    sv = np.array([complex(s)])
    _, val, err = _select_panels(w, sv, tol)
    v = complex(val[0])
    if complex(s).imag == 0:
        v = complex(v.real, 0.0)
    return MellinValue(complex(s), v, float(err[0]))


def mellin_many(w: SmoothWeight, s, tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Mellin transform on an array of points: (values, error estimates)."""
    tol = w.tol if tol is None else tol
    s = np.asarray(s, dtype=complex)
    _, val, err = _select_panels(w, s.ravel(), tol)
    return val.reshape(s.shape), err.reshape(s.shape)


@dataclass(frozen=True)
class DecayReport:
    A: float
    sigma: float
    t: tuple
    magnitudes: tuple
    exponent: float
    constant: float  # max |w~(s)| |s|^(A+1) over the samples
    passed: bool


def decay_check(w: SmoothWeight, A: float, t_samples, sigma: float = 2.0) -> DecayReport:
    """Empirical decay exponent of |w~(sigma + it)| against |s|."""
    t = np.asarray(t_samples, dtype=float)
    if t.size < 3:
        raise InvalidArgument("decay_check needs at least 3 heights")
    if np.any(np.diff(t) <= 0):
        raise InvalidArgument("t_samples must be increasing")
    if A <= 0:
        raise InvalidArgument("A must be positive")
    s = sigma + 1j * t
    vals, _ = mellin_many(w, s)
    mags = np.abs(vals)
    floor = np.finfo(float).tiny
    slope, _ = np.polyfit(np.log(np.abs(s)), np.log(np.maximum(mags, floor)), 1)
    const = float(np.max(mags * np.abs(s) ** (A + 1)))
    return DecayReport(A, sigma, tuple(t), tuple(mags), float(slope), const,
                       bool(slope <= -(A + 1) + 0.25))
