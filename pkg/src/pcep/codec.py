"""Polar encoding, systematic encoding and successive-cancellation decoding.

The generator is the n-fold Kronecker power of ``F = [[1, 0], [1, 1]]``
without a bit-reversal permutation, so source index ``i`` and codeword
position ``i`` share one index space. Subchannel ``i`` is the channel whose
reliability :func:`pcep.construction.polarize_reliabilities` reports at ``i``.

LLRs are natural-log ratios ``ln P(y|0)/P(y|1)``: positive favours bit 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from pcep.channel_math import DomainError

# Saturation for noiseless observations.
LLR_MAX = 100.0

# exp(-x) is below double resolution of O(1) LLRs beyond this.
_CORRECTION_CUTOFF = 37.0


class SingularSystemError(ArithmeticError):
    """The systematic-encoding system had no solution for the given sets."""


@dataclass(frozen=True)
class FrozenSpec:
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        val = np.asarray(self.values, dtype=np.uint8).ravel()
        if idx.shape != val.shape:
            raise ValueError("one frozen value is required per frozen index")
        if np.unique(idx).size != idx.size:
            raise ValueError("frozen indices must be distinct")
        if np.any(val > 1):
            raise ValueError("frozen values must be bits")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def zeros(cls, indices) -> FrozenSpec:
        idx = np.asarray(indices, dtype=np.int64)
        return cls(idx, np.zeros(idx.size, dtype=np.uint8))

    def mask(self, n: int) -> np.ndarray:
        """int8 array: -1 where free, otherwise the frozen bit."""
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise IndexError(f"frozen index outside [0, {n})")
        out = np.full(n, -1, dtype=np.int8)
        out[self.indices] = self.values
        return out


def _log2_length(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    return n.bit_length() - 1


def polar_encode(u: np.ndarray) -> np.ndarray:
    """x = u G over GF(2). Works on the last axis, so batches are fine."""
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    _log2_length(n)
    h = 1
    while h < n:
        view = x.reshape(*x.shape[:-1], n // (2 * h), 2, h)
        view[..., 0, :] ^= view[..., 1, :]
        h *= 2
    return x


@numba.njit(cache=True, nogil=True)
def _systematic_kernel(u, x, info):
    # Recursive solve unrolled: for G_N = [[G', 0], [G', G']], the lower half
    # is an independent subproblem and the upper half is a subproblem in the
    # variable u_top ^ u_bot. Leaves are visited from N-1 down to 0.
    n = u.size
    for j in range(n - 1, -1, -1):
        h = n >> 1
        while h >= 1:
            if j % (2 * h) == h - 1:
                lo = j - h + 1
                for t in range(h):
                    u[lo + t] ^= u[lo + h + t]
            h >>= 1
        if info[j]:
            u[j] = x[j]
        else:
            x[j] = u[j]
        h = 1
        while h < n and j % (2 * h) == 0:
            for t in range(h):
                u[j + t] ^= u[j + h + t]
            h <<= 1


def systematic_encode(
    key: np.ndarray, set_a: np.ndarray, frozen: FrozenSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Find (u, x) with x = polar_encode(u), u = frozen values off A, x[A] = key.

    ``set_a`` and the frozen indices must partition ``range(N)``; ``key`` is
    given in ascending order of ``set_a``.
    """
    set_a = np.sort(np.asarray(set_a, dtype=np.int64))
    key = np.asarray(key, dtype=np.uint8).ravel()
    if key.size != set_a.size:
        raise ValueError(f"key has {key.size} bits but |A| = {set_a.size}")
    n = set_a.size + frozen.indices.size
    _log2_length(n)
    mask = frozen.mask(n)
    info = np.zeros(n, dtype=np.bool_)
    info[set_a] = True
    if np.any(info & (mask >= 0)) or np.count_nonzero(info | (mask >= 0)) != n:
        raise ValueError("A and the frozen indices must partition range(N)")
    u = np.where(mask >= 0, mask, 0).astype(np.uint8)
    x = np.zeros(n, dtype=np.uint8)
    x[set_a] = key
    _systematic_kernel(u, x, info)
    if not (
        np.array_equal(polar_encode(u), x)
        and np.array_equal(x[set_a], key)
        and np.array_equal(u[~info], mask[~info].astype(np.uint8))
    ):
        raise SingularSystemError("systematic system has no solution for this index set")
    return u, x


@numba.njit(cache=True, nogil=True)
def _boxplus(a, b, minsum):
    aa = abs(a)
    ab = abs(b)
    s = 1.0 if (a >= 0.0) == (b >= 0.0) else -1.0
    lo = min(aa, ab)
    if minsum:
        return s * lo
    # ln((1 + e^-(|a|+|b|)) / (1 + e^-(|a|-|b|))) is the exact correction term
    diff = abs(aa - ab)
    if diff >= _CORRECTION_CUTOFF:
        return s * lo
    return s * (lo + math.log((1.0 + math.exp(-(aa + ab))) / (1.0 + math.exp(-diff))))


@numba.njit(cache=True, nogil=True)
def _sc_kernel(llr, frozen, minsum):
    n = llr.size
    m = 0
    while (1 << m) < n:
        m += 1
    L = np.empty((m + 1, n))
    L[0, :] = llr
    left = np.zeros((m + 1, n), np.uint8)  # codeword of the last finished left child per depth
    work = np.zeros((m + 1, n), np.uint8)
    u = np.zeros(n, np.uint8)
    for i in range(n):
        d0 = 0
        if i > 0:
            x = i ^ (i - 1)
            bits = 0
            while x > 0:
                bits += 1
                x >>= 1
            lca = m - bits
            h = n >> (lca + 1)
            for j in range(h):
                if left[lca + 1, j]:
                    L[lca + 1, j] = L[lca, h + j] - L[lca, j]
                else:
                    L[lca + 1, j] = L[lca, h + j] + L[lca, j]
            d0 = lca + 1
        for d in range(d0, m):
            h = n >> (d + 1)
            for j in range(h):
                L[d + 1, j] = _boxplus(L[d, j], L[d, h + j], minsum)
        if frozen[i] >= 0:
            u[i] = frozen[i]
        else:
            u[i] = 1 if L[m, 0] < 0.0 else 0
        d = m
        node = i
        work[m, 0] = u[i]
        while d > 0 and (node & 1) == 1:
            size = n >> d
            for j in range(size):
                work[d - 1, j] = left[d, j] ^ work[d, j]
                work[d - 1, size + j] = work[d, j]
            d -= 1
            node >>= 1
        if d > 0:
            size = n >> d
            for j in range(size):
                left[d, j] = work[d, j]
    return u, work[0, :].copy()


def sc_decode(
    llrs: np.ndarray, frozen: FrozenSpec, *, minsum: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Successive-cancellation decode in natural source order.

    Frozen bits take their given values; free bits follow the sign of the
    propagated LLR, ties resolving to 0. Returns ``(u_hat, x_hat)`` with
    ``x_hat == polar_encode(u_hat)``. ``minsum`` swaps the exact check-node
    update for the min-sum approximation.
    """
    llrs = np.ascontiguousarray(llrs, dtype=np.float64).ravel()
    _log2_length(llrs.size)
    return _sc_kernel(llrs, frozen.mask(llrs.size), bool(minsum))


def channel_llr(observed_bit: int, p: float) -> float:
    """LLR of one BSC(p) observation; p = 0 saturates at LLR_MAX."""
    if not 0.0 <= p < 0.5:
        raise DomainError(f"crossover {p!r} outside [0, 0.5)")
    mag = LLR_MAX if p == 0.0 else min(math.log((1.0 - p) / p), LLR_MAX)
    return mag if observed_bit == 0 else -mag


def bsc_llrs(bits: np.ndarray, p: float) -> np.ndarray:
    """Vectorised :func:`channel_llr`; p = 0.5 yields all-zero LLRs."""
    bits = np.asarray(bits)
    if p == 0.5:
        return np.zeros(bits.shape)
    mag = abs(channel_llr(0, p))
    return np.where(bits == 0, mag, -mag)


def noiseless_llrs(bits: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(bits) == 0, LLR_MAX, -LLR_MAX)
