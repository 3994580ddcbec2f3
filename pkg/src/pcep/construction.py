"""Polar subchannel reliabilities via degrading-merge (Tal-Vardy) construction.

Channels are binary-input, output-symmetric. Internally a channel is held as
one representative ``(a, b) = (W(y|0), W(y|1))`` per conjugate output pair,
oriented so that ``a >= b``; the conjugate ``(b, a)`` is implicit. With this
representation the ML error probability is simply ``sum(b)``.

Subchannel ``i`` of a length ``N = 2**n`` code is reached by applying the
check-node (minus) or variable-node (plus) transform once per bit of ``i``,
most significant bit first. This is the ordering seen by the encoder in
:mod:`pcep.codec`.
"""

from __future__ import annotations

import functools
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from pcep.channel_math import DomainError

DEFAULT_MU = 256
MAX_N_EXP = 24
# Bytes allowed for the un-merged product alphabet of a single transform.
MEMORY_BUDGET = 512 * 2**20

_CACHE_MAGIC = b"PCEP"
_CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<4sHBId")

# Pre-binning grid: symbols are first pooled into bins that are uniform in
# log-scale of tanh(L/2) (or of its complement for large L), _SUB_BINS per
# octave over _OCTAVES octaves. Anything finer than 2**-_OCTAVES shares a bin.
_SUB_BINS = 16
_OCTAVES = 64
_SIDE = _OCTAVES * _SUB_BINS + 1
_TINY = 2.0**-_OCTAVES
_LN2 = math.log(2.0)


class ResourceLimitError(MemoryError):
    """The requested construction would exceed the configured memory budget."""


class OracleSizeError(ValueError):
    """Brute-force enumeration requested for a code that is too long."""


@dataclass(frozen=True)
class SymmetricDiscreteChannel:
    """Full output alphabet as rows of ``(p(y|0), p(y|1))``."""

    pairs: np.ndarray

    def __post_init__(self) -> None:
        pairs = np.asarray(self.pairs, dtype=np.float64).reshape(-1, 2)
        if np.any(pairs < 0.0) or np.any(pairs > 1.0):
            raise DomainError("transition probabilities must lie in [0, 1]")
        if not np.allclose(pairs.sum(axis=0), 1.0, atol=1e-9):
            raise DomainError("each conditional distribution must sum to 1")
        fwd = np.array(sorted(map(tuple, pairs)))
        rev = np.array(sorted(map(tuple, pairs[:, ::-1])))
        if not np.allclose(fwd, rev, atol=1e-12):
            raise DomainError("output alphabet is not closed under conjugation")
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_representatives(cls, a: np.ndarray, b: np.ndarray) -> SymmetricDiscreteChannel:
        rows = []
        for ai, bi in zip(a, b):
            if ai + bi <= 0.0:
                continue
            if ai == bi:
                rows.append((2 * ai, 2 * bi))
            else:
                rows.append((ai, bi))
                rows.append((bi, ai))
        return cls(np.array(rows))

    def representatives(self) -> tuple[np.ndarray, np.ndarray]:
        """One ``(a, b)`` with ``a >= b`` per conjugate pair; erasures are halved."""
        a, b = [], []
        for p0, p1 in self.pairs:
            if p0 > p1:
                a.append(p0)
                b.append(p1)
            elif p0 == p1 and p0 > 0.0:
                a.append(p0 / 2)
                b.append(p1 / 2)
        return np.array(a), np.array(b)

    def error_probability(self) -> float:
        return 0.5 * float(np.minimum(self.pairs[:, 0], self.pairs[:, 1]).sum())


@dataclass(frozen=True)
class ReliabilityVector:
    """Upper bounds on the ML error probability of every subchannel."""

    n_exp: int
    bounds: np.ndarray
    p: float = math.nan
    mu: int = DEFAULT_MU
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        bounds = np.array(self.bounds, dtype=np.float64)
        if bounds.shape != (1 << self.n_exp,):
            raise ValueError(f"expected {1 << self.n_exp} bounds, got {bounds.shape}")
        if np.any(bounds < 0.0) or np.any(bounds > 1.0):
            raise ValueError("bounds must lie in [0, 1]")
        bounds.setflags(write=False)
        object.__setattr__(self, "bounds", bounds)

    @property
    def length(self) -> int:
        return 1 << self.n_exp


def bsc_channel(p: float) -> SymmetricDiscreteChannel:
    p = float(p)
    if not 0.0 <= p <= 0.5:
        raise DomainError(f"BSC crossover {p!r} outside [0, 0.5]")
    return SymmetricDiscreteChannel(np.array([[1.0 - p, p], [p, 1.0 - p]]))


# --------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True, nogil=True)
def _pair_capacity(a, b):
    s = a + b
    if s <= 0.0:
        return 0.0
    d = (a - b) / s
    out = 0.0
    if a > 0.0:
        out += a * math.log1p(d)
    if b > 0.0:
        out += b * math.log1p(-d)
    return out / _LN2


@numba.njit(cache=True, nogil=True)
def _minus(a, b):
    # (i, j) and (j, i) give the same output pair, so only i <= j is formed.
    k = a.size
    oa = np.empty(k * (k + 1) // 2)
    ob = np.empty_like(oa)
    c = 0
    for i in range(k):
        for j in range(i, k):
            w = 1.0 if i == j else 2.0
            x = a[i] * a[j] + b[i] * b[j]
            y = a[i] * b[j] + b[i] * a[j]
            if x >= y:
                oa[c] = w * x
                ob[c] = w * y
            else:
                oa[c] = w * y
                ob[c] = w * x
            c += 1
    return oa, ob


@numba.njit(cache=True, nogil=True)
def _plus(a, b):
    k = a.size
    oa = np.empty(k * (k + 1))
    ob = np.empty_like(oa)
    c = 0
    for i in range(k):
        for j in range(i, k):
            w = 1.0 if i == j else 2.0
            oa[c] = w * a[i] * a[j]
            ob[c] = w * b[i] * b[j]
            c += 1
            x = a[i] * b[j]
            y = b[i] * a[j]
            if x >= y:
                oa[c] = w * x
                ob[c] = w * y
            else:
                oa[c] = w * y
                ob[c] = w * x
            c += 1
    return oa, ob


@numba.njit(cache=True, nogil=True)
def _bin_index(a, b):
    s = a + b
    t = (a - b) / s
    if t <= 0.5:
        x = t
        side = 0
    else:
        x = 2.0 * b / s
        side = 1
    if x < _TINY:
        idx = 0
    else:
        m, e = math.frexp(x)
        idx = (e + _OCTAVES - 1) * _SUB_BINS + int((m - 0.5) * (2 * _SUB_BINS)) + 1
        if idx >= _SIDE:
            idx = _SIDE - 1
    if side == 0:
        return idx
    return 2 * _SIDE - 1 - idx


@numba.njit(cache=True, nogil=True)
def _prebin(a, b, acc_a, acc_b, used):
    """Pool symbols into LLR-ordered bins; returns pooled symbols sorted by LLR."""
    count = 0
    for i in range(a.size):
        if a[i] + b[i] <= 0.0:
            continue
        k = _bin_index(a[i], b[i])
        if acc_a[k] == 0.0 and acc_b[k] == 0.0:
            used[count] = k
            count += 1
        acc_a[k] += a[i]
        acc_b[k] += b[i]
    keys = np.sort(used[:count])
    oa = np.empty(count)
    ob = np.empty(count)
    for j in range(count):
        k = keys[j]
        oa[j] = acc_a[k]
        ob[j] = acc_b[k]
        acc_a[k] = 0.0
        acc_b[k] = 0.0
    return oa, ob


@numba.njit(cache=True, nogil=True)
def _heap_push(keys, idx, stamps, size, key, i, stamp):
    j = size
    keys[j] = key
    idx[j] = i
    stamps[j] = stamp
    while j > 0:
        parent = (j - 1) >> 1
        if keys[parent] <= keys[j]:
            break
        keys[parent], keys[j] = keys[j], keys[parent]
        idx[parent], idx[j] = idx[j], idx[parent]
        stamps[parent], stamps[j] = stamps[j], stamps[parent]
        j = parent
    return size + 1


@numba.njit(cache=True, nogil=True)
def _heap_pop(keys, idx, stamps, size):
    size -= 1
    keys[0] = keys[size]
    idx[0] = idx[size]
    stamps[0] = stamps[size]
    j = 0
    while True:
        c = 2 * j + 1
        if c >= size:
            break
        if c + 1 < size and keys[c + 1] < keys[c]:
            c += 1
        if keys[j] <= keys[c]:
            break
        keys[c], keys[j] = keys[j], keys[c]
        idx[c], idx[j] = idx[j], idx[c]
        stamps[c], stamps[j] = stamps[j], stamps[c]
        j = c
    return size


@numba.njit(cache=True, nogil=True)
def _greedy_merge(sa, sb, kmax):
    """Merge LLR-adjacent symbols, cheapest capacity loss first, down to kmax."""
    m = sa.size
    if m <= kmax:
        return sa, sb
    nxt = np.arange(1, m + 1)
    prv = np.arange(-1, m - 1)
    nxt[m - 1] = -1
    stamp = np.zeros(m, np.int64)
    alive = np.ones(m, np.bool_)
    hk = np.empty(3 * m)
    hi = np.empty(3 * m, np.int64)
    hs = np.empty(3 * m, np.int64)
    size = 0
    cap = np.empty(m)
    for i in range(m):
        cap[i] = _pair_capacity(sa[i], sb[i])
    for i in range(m - 1):
        loss = cap[i] + cap[i + 1] - _pair_capacity(sa[i] + sa[i + 1], sb[i] + sb[i + 1])
        size = _heap_push(hk, hi, hs, size, loss, i, 0)
    count = m
    while count > kmax:
        i = hi[0]
        st = hs[0]
        size = _heap_pop(hk, hi, hs, size)
        if not alive[i] or st != stamp[i] or nxt[i] < 0:
            continue
        j = nxt[i]
        sa[i] += sa[j]
        sb[i] += sb[j]
        cap[i] = _pair_capacity(sa[i], sb[i])
        alive[j] = False
        nxt[i] = nxt[j]
        if nxt[j] >= 0:
            prv[nxt[j]] = i
        count -= 1
        stamp[i] += 1
        k = nxt[i]
        if k >= 0:
            loss = cap[i] + cap[k] - _pair_capacity(sa[i] + sa[k], sb[i] + sb[k])
            size = _heap_push(hk, hi, hs, size, loss, i, stamp[i])
        p = prv[i]
        if p >= 0:
            stamp[p] += 1
            loss = cap[p] + cap[i] - _pair_capacity(sa[p] + sa[i], sb[p] + sb[i])
            size = _heap_push(hk, hi, hs, size, loss, p, stamp[p])
    oa = np.empty(count)
    ob = np.empty(count)
    c = 0
    for i in range(m):
        if alive[i]:
            oa[c] = sa[i]
            ob[c] = sb[i]
            c += 1
    return oa, ob


@numba.njit(cache=True, nogil=True)
def _degrade(ca, cb, kmax, acc_a, acc_b, used):
    if ca.size > kmax:
        pa, pb = _prebin(ca, cb, acc_a, acc_b, used)
        return _greedy_merge(pa, pb, kmax)
    keep = (ca + cb) > 0.0
    return ca[keep], cb[keep]


@numba.njit(cache=True, nogil=True)
def _construct(a0, b0, n, kmax):
    # Depth-first over the polarization tree: one channel per depth is live.
    N = 1 << n
    A = np.zeros((n + 1, max(kmax, a0.size)))
    B = np.zeros_like(A)
    K = np.zeros(n + 1, np.int64)
    A[0, : a0.size] = a0
    B[0, : b0.size] = b0
    K[0] = a0.size
    acc_a = np.zeros(2 * _SIDE)
    acc_b = np.zeros(2 * _SIDE)
    used = np.empty(2 * _SIDE, np.int64)
    out = np.empty(N)
    for i in range(N):
        d0 = 0
        if i > 0:
            x = i ^ (i - 1)
            bits = 0
            while x > 0:
                bits += 1
                x >>= 1
            lca = n - bits
            ca, cb = _plus(A[lca, : K[lca]], B[lca, : K[lca]])
            ma, mb = _degrade(ca, cb, kmax, acc_a, acc_b, used)
            K[lca + 1] = ma.size
            A[lca + 1, : ma.size] = ma
            B[lca + 1, : ma.size] = mb
            d0 = lca + 1
        for d in range(d0, n):
            ca, cb = _minus(A[d, : K[d]], B[d, : K[d]])
            ma, mb = _degrade(ca, cb, kmax, acc_a, acc_b, used)
            K[d + 1] = ma.size
            A[d + 1, : ma.size] = ma
            B[d + 1, : ma.size] = mb
        err = 0.0
        mass = 0.0
        for t in range(K[n]):
            err += B[n, t]
            mass += A[n, t] + B[n, t]
        out[i] = err / mass if mass > 0.0 else 0.5
    return out


# --------------------------------------------------------------------------
# public API


def _validate(p: float, n_exp: int, mu: int) -> None:
    if not 0.0 <= p <= 0.5:
        raise DomainError(f"crossover {p!r} outside [0, 0.5]")
    if not 1 <= n_exp <= MAX_N_EXP:
        raise DomainError(f"n_exp={n_exp} outside [1, {MAX_N_EXP}]")
    if mu < 2 or mu % 2:
        raise DomainError(f"mu={mu} must be an even integer >= 2")
    k = mu // 2
    needed = 16 * k * (k + 1)
    if needed > MEMORY_BUDGET:
        raise ResourceLimitError(
            f"mu={mu} needs {needed} bytes per transform, budget is {MEMORY_BUDGET}"
        )


def polarize_reliabilities(
    p: float,
    n_exp: int,
    mu: int = DEFAULT_MU,
    cache_dir: str | os.PathLike | None = None,
) -> ReliabilityVector:
    """Upper bounds on P_e of all ``2**n_exp`` subchannels of BSC(p).

    Results are memoised in-process; when ``cache_dir`` is given they are also
    persisted there in the binary cache format (see :func:`save_reliabilities`).
    """
    p, n_exp, mu = float(p), int(n_exp), int(mu)
    _validate(p, n_exp, mu)
    if cache_dir is not None:
        path = Path(cache_dir) / cache_filename(p, n_exp, mu)
        if path.exists():
            return load_reliabilities(path)
        rv = _polarize_cached(p, n_exp, mu)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_reliabilities(path, rv)
        return rv
    return _polarize_cached(p, n_exp, mu)


@functools.lru_cache(maxsize=64)
def _polarize_cached(p: float, n_exp: int, mu: int) -> ReliabilityVector:
    bounds = _construct(np.array([1.0 - p]), np.array([p]), n_exp, mu // 2)
    return ReliabilityVector(n_exp=n_exp, bounds=np.clip(bounds, 0.0, 0.5), p=p, mu=mu)


def cache_filename(p: float, n_exp: int, mu: int) -> str:
    return f"pcep_n{n_exp}_mu{mu}_p{p.hex()}.bin"


def save_reliabilities(path: str | os.PathLike, rv: ReliabilityVector) -> None:
    """Write ``{magic, version u16, n_exp u8, mu u32, p f64}`` then LE f64 bounds."""
    header = _CACHE_HEADER.pack(_CACHE_MAGIC, _CACHE_VERSION, rv.n_exp, rv.mu, rv.p)
    Path(path).write_bytes(header + rv.bounds.astype("<f8").tobytes())


def load_reliabilities(path: str | os.PathLike) -> ReliabilityVector:
    raw = Path(path).read_bytes()
    if len(raw) < _CACHE_HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n_exp, mu, p = _CACHE_HEADER.unpack_from(raw)
    if magic != _CACHE_MAGIC or version != _CACHE_VERSION:
        raise ValueError(f"{path}: not a version-{_CACHE_VERSION} PCEP table")
    body = raw[_CACHE_HEADER.size :]
    if len(body) != 8 * (1 << n_exp):
        raise ValueError(f"{path}: expected {1 << n_exp} bounds")
    return ReliabilityVector(n_exp=n_exp, bounds=np.frombuffer(body, "<f8"), p=p, mu=mu)


def polarize_channel(
    channel: SymmetricDiscreteChannel, n_exp: int, mu: int = DEFAULT_MU
) -> np.ndarray:
    """Same construction as :func:`polarize_reliabilities` for any symmetric channel."""
    _validate(0.0, n_exp, mu)
    a, b = channel.representatives()
    return _construct(a, b, int(n_exp), mu // 2)


def exact_subchannel_error(p: float, n_exp: int, i: int) -> float:
    """Exact genie-aided ML error of subchannel ``i`` by full enumeration.

    Every output word and every source word is enumerated; preceding source
    bits are revealed to the decider and ties count as an error with
    probability 1/2. Only feasible for ``n_exp <= 3``.
    """
    if n_exp > 3:
        raise OracleSizeError(f"n_exp={n_exp} too large for enumeration (max 3)")
    if not 0.0 <= p <= 0.5:
        raise DomainError(f"crossover {p!r} outside [0, 0.5]")
    N = 1 << n_exp
    if not 0 <= i < N:
        raise IndexError(f"subchannel {i} outside [0, {N})")
    words = np.arange(1 << N)
    # bit k of a word is position k, counted from the most significant end
    bits = (words[:, None] >> (N - 1 - np.arange(N))) & 1
    gen = generator_matrix(n_exp)
    codewords = bits @ gen % 2
    dist = (codewords[:, None, :] != bits[None, :, :]).sum(axis=2)
    like = p**dist * (1.0 - p) ** (N - dist)  # [source word, output word]
    joint = like.reshape(1 << i, 2, 1 << (N - 1 - i), 1 << N).sum(axis=2)
    joint /= 2.0 ** (N - 1)
    return float(0.5 * np.minimum(joint[:, 0, :], joint[:, 1, :]).sum())


def generator_matrix(n_exp: int) -> np.ndarray:
    """Kronecker power of the 2x2 kernel [[1, 0], [1, 1]] over GF(2)."""
    kernel = np.array([[1, 0], [1, 1]], dtype=np.int64)
    g = np.ones((1, 1), dtype=np.int64)
    for _ in range(n_exp):
        g = np.kron(g, kernel)
    return g
