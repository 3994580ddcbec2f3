"""Wiretap-aware partition of polar subchannels into random, key and frozen sets."""

from __future__ import annotations

import hashlib
import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from pcep.channel_math import capacity_from_error, capacity_summary, wiretap_crossover
from pcep.construction import DEFAULT_MU, ReliabilityVector, polarize_reliabilities


class InadmissibleQBERError(ValueError):
    """QBER too high for a positive secrecy capacity."""


@dataclass(frozen=True)
class PartitionTargets:
    fer_target: float = 0.1
    pai_target: float = 1e-7
    # Compare the leakage sum against pai_target * N instead of pai_target.
    pai_normalized: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.fer_target < 1.0:
            raise ValueError(f"fer_target={self.fer_target} must lie in (0, 1)")
        if not self.pai_target > 0.0:
            raise ValueError(f"pai_target={self.pai_target} must be positive")


def _bounds(reliab: ReliabilityVector | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(reliab, ReliabilityVector):
        return reliab.bounds
    return np.asarray(reliab, dtype=np.float64)


def _budget_prefix(scores: np.ndarray, budget: float) -> tuple[np.ndarray, np.ndarray]:
    """Longest prefix of the ascending (index-tie-broken) order with sum <= budget."""
    order = np.argsort(scores, kind="stable")
    k = int(np.searchsorted(np.cumsum(scores[order]), budget, side="right"))
    return np.sort(order[:k]), np.sort(order[k:])


def select_good_main(
    reliab: ReliabilityVector | Sequence[float], fer_target: float
) -> tuple[np.ndarray, np.ndarray]:
    """Split into (good, bad): good is the most reliable set whose error sum fits the FER budget."""
    bounds = _bounds(reliab)
    if bounds.size == 0:
        raise ValueError("empty reliability vector")
    return _budget_prefix(bounds, fer_target)


def select_bad_wiretap(
    reliab_w: ReliabilityVector | Sequence[float], pai_target: float
) -> tuple[np.ndarray, np.ndarray]:
    """Split into (bad_star, good_star) by the eavesdropper's subchannel capacities."""
    return _budget_prefix(capacity_from_error(_bounds(reliab_w)), pai_target)


@dataclass(frozen=True, eq=False)
class CodeStructure:
    n_exp: int
    set_r: np.ndarray
    set_a: np.ndarray
    set_b: np.ndarray
    p_m: float
    p_w: float
    fer_target: float = 0.1
    pai_target: float = 1e-7
    mu: int = DEFAULT_MU
    anomaly_count: int = 0
    main_bounds: np.ndarray | None = field(default=None, repr=False, compare=False)
    wiretap_bounds: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = 1 << self.n_exp
        sets = []
        for name in ("set_r", "set_a", "set_b"):
            arr = np.sort(np.asarray(getattr(self, name), dtype=np.int64))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            sets.append(arr)
        joined = np.concatenate(sets)
        if joined.size != n or not np.array_equal(np.sort(joined), np.arange(n)):
            raise ValueError("R, A and B must partition range(N)")

    def __eq__(self, other) -> bool:
        if not isinstance(other, CodeStructure):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(self._digest)

    @property
    def length(self) -> int:
        return 1 << self.n_exp

    @property
    def rate(self) -> float:
        return self.set_a.size / self.length

    def to_dict(self) -> dict:
        return {
            "n_exp": self.n_exp,
            "p_m": self.p_m,
            "p_w": self.p_w,
            "fer_target": self.fer_target,
            "pai_target": self.pai_target,
            "mu": self.mu,
            "r": self.set_r.tolist(),
            "a": self.set_a.tolist(),
            "b": self.set_b.tolist(),
            "rate": self.rate,
            "anomaly_count": self.anomaly_count,
        }

    def to_json(self, indent: int | None = None) -> str:
        if indent is None:
            return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return json.dumps(self.to_dict(), sort_keys=True, indent=indent)

    @classmethod
    def from_json(cls, text: str) -> CodeStructure:
        d = json.loads(text)
        return cls(
            n_exp=d["n_exp"],
            set_r=d["r"],
            set_a=d["a"],
            set_b=d["b"],
            p_m=d["p_m"],
            p_w=d["p_w"],
            fer_target=d["fer_target"],
            pai_target=d["pai_target"],
            mu=d["mu"],
            anomaly_count=d["anomaly_count"],
        )

    def digest(self) -> str:
        """64-bit BLAKE2b checksum of the canonical JSON, as 16 hex digits."""
        return self._digest

    @cached_property
    def _digest(self) -> str:
        # Safe to memoise: every field is immutable after __post_init__.
        return hashlib.blake2b(self.to_json().encode(), digest_size=8).hexdigest()

    def residual_error_sum(self) -> float:
        """Sum of Bob's subchannel error bounds over the non-frozen sets R and A."""
        if self.main_bounds is None:
            raise ValueError("structure carries no reliability data")
        idx = np.concatenate([self.set_a, self.set_r])
        return float(self.main_bounds[idx].sum())

    def leakage_sum(self) -> float:
        """Sum of the eavesdropper's subchannel capacities over A and B."""
        if self.wiretap_bounds is None:
            raise ValueError("structure carries no reliability data")
        idx = np.concatenate([self.set_a, self.set_b])
        return float(capacity_from_error(self.wiretap_bounds[idx]).sum())


def partition_sets(
    good: np.ndarray, bad: np.ndarray, bad_star: np.ndarray, good_star: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """R = G*, A = B* & G, B = B; indices in both B and G* go to B and are counted."""
    bad_set = np.asarray(bad)
    anomalies = np.intersect1d(bad_set, good_star)
    set_r = np.setdiff1d(good_star, anomalies)
    set_a = np.intersect1d(bad_star, good)
    return set_r, set_a, np.sort(bad_set), int(anomalies.size)


def build_code_structure(
    p_m: float,
    n_exp: int,
    targets: PartitionTargets | None = None,
    mu: int = DEFAULT_MU,
    cache_dir=None,
) -> CodeStructure:
    """Derive the R/A/B code structure for QBER ``p_m`` deterministically.

    Alice and Bob each call this with the same arguments and obtain identical
    structures, so nothing about the partition has to be exchanged.
    """
    targets = targets or PartitionTargets()
    if not capacity_summary(p_m).admissible:
        raise InadmissibleQBERError(f"p_m={p_m} gives negative secrecy capacity")
    p_w = wiretap_crossover(p_m)
    main = polarize_reliabilities(p_m, n_exp, mu, cache_dir=cache_dir)
    wire = polarize_reliabilities(p_w, n_exp, mu, cache_dir=cache_dir)
    good, bad = select_good_main(main, targets.fer_target)
    pai = targets.pai_target * (main.length if targets.pai_normalized else 1)
    bad_star, good_star = select_bad_wiretap(wire, pai)
    set_r, set_a, set_b, anomalies = partition_sets(good, bad, bad_star, good_star)
    return CodeStructure(
        n_exp=int(n_exp),
        set_r=set_r,
        set_a=set_a,
        set_b=set_b,
        p_m=float(p_m),
        p_w=p_w,
        fer_target=targets.fer_target,
        pai_target=targets.pai_target,
        mu=int(mu),
        anomaly_count=anomalies,
        main_bounds=main.bounds,
        wiretap_bounds=wire.bounds,
    )
