"""Binary entropy, BSC capacities and the secrecy-capacity admissibility test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Largest QBER for which 1 - 2*h2(p) stays non-negative.
QBER_THRESHOLD = 0.11

_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 200
_LN2 = math.log(2.0)


class DomainError(ValueError):
    """Raised when a probability or entropy argument is outside its domain."""


def _check_unit(name: str, value: float, hi: float = 1.0) -> float:
    value = float(value)
    if not (0.0 <= value <= hi) or math.isnan(value):
        raise DomainError(f"{name}={value!r} outside [0, {hi}]")
    return value


@dataclass(frozen=True)
class ChannelSpec:
    """Binary symmetric channel described by its crossover probability."""

    crossover: float

    def __post_init__(self) -> None:
        _check_unit("crossover", self.crossover, 0.5)

    @property
    def capacity(self) -> float:
        return bsc_capacity(self.crossover)


@dataclass(frozen=True)
class CapacitySummary:
    i_ab: float
    i_ae: float
    c_sec: float

    @property
    def admissible(self) -> bool:
        return self.c_sec >= 0.0


def binary_entropy(p: float) -> float:
    """h2(p) in bits, with 0*log2(0) taken as 0."""
    p = _check_unit("p", p)
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def inverse_binary_entropy(h: float) -> float:
    """The unique p in [0, 0.5] with h2(p) == h, found by bisection."""
    h = _check_unit("h", h)
    if h == 0.0:
        return 0.0
    if h == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BISECT_TOL:
            break
    return 0.5 * (lo + hi)


def wiretap_crossover(p_m: float) -> float:
    """Crossover p_w of the wiretap BSC, solving 1 - h2(p_w) = h2(p_m)."""
    p_m = _check_unit("p_m", p_m, 0.5)
    return inverse_binary_entropy(1.0 - binary_entropy(p_m))


def capacity_summary(p_m: float) -> CapacitySummary:
    h = binary_entropy(_check_unit("p_m", p_m, 0.5))
    i_ab = 1.0 - h
    return CapacitySummary(i_ab=i_ab, i_ae=h, c_sec=i_ab - h)


def bsc_capacity(p: float) -> float:
    return float(capacity_from_error(np.asarray(_check_unit("p", p))))


def capacity_from_error(pe: np.ndarray) -> np.ndarray:
    """Vectorised 1 - h2(pe), accurate when pe is very close to 1/2.

    With u = 1 - 2*pe the capacity is ((1+u)ln(1+u) + (1-u)ln(1-u)) / (2 ln 2);
    for |u| < 1e-4 the even power series is used instead to avoid cancellation.
    """
    pe = np.clip(np.asarray(pe, dtype=np.float64), 0.0, 1.0)
    u = np.abs(1.0 - 2.0 * pe)
    out = np.empty_like(u)
    small = u < 1e-4
    us = u[small]
    u2 = us * us
    out[small] = u2 * (0.5 + u2 * (1.0 / 12.0 + u2 / 30.0)) / _LN2
    ub = u[~small]
    with np.errstate(divide="ignore", invalid="ignore"):
        neg = np.where(ub < 1.0, (1.0 - ub) * np.log1p(-ub), 0.0)
    out[~small] = ((1.0 + ub) * np.log1p(ub) + neg) / (2.0 * _LN2)
    return np.clip(out, 0.0, 1.0)
