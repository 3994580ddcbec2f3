"""Brute-force references shared by the unit and acceptance tests."""

import functools
import itertools

import numpy as np

from pcep.construction import generator_matrix


def gf2_encode(u):
    n = len(u)
    return (np.asarray(u, dtype=np.int64) @ generator_matrix(n.bit_length() - 1)) % 2


@functools.lru_cache(maxsize=None)
def _codebook(n):
    """All 2^n source words (row r has u_i = bit i of r, MSB first) and their codewords."""
    us = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)
    return us, (us @ generator_matrix(n.bit_length() - 1)) % 2


def _likelihoods(llr, xs):
    # P(y|x) up to a factor shared by every x: prod_j sigmoid(+-llr_j)
    signed = np.where(xs == 1, np.asarray(llr), -np.asarray(llr))
    return np.prod(1.0 / (1.0 + np.exp(signed)), axis=1)


def successive_ml(llr, frozen_mask, prefix):
    """Per-bit successive ML: for bit i, sum P(y|x(u)) over all future bits
    with the past fixed to ``prefix``. Returns (P(u_i=0), P(u_i=1)) per index.
    """
    n = len(llr)
    us, xs = _codebook(n)
    lik = _likelihoods(llr, xs)
    prefix = np.asarray(prefix)
    out = []
    for i in range(n):
        match = np.all(us[:, :i] == prefix[:i], axis=1)
        out.append((lik[match & (us[:, i] == 0)].sum(), lik[match & (us[:, i] == 1)].sum()))
    return out


def block_ml(llr, frozen_mask):
    """Codeword maximising the likelihood among those consistent with frozen bits."""
    n = len(llr)
    us, xs = _codebook(n)
    ok = np.ones(len(us), dtype=bool)
    for i, f in enumerate(frozen_mask):
        if f >= 0:
            ok &= us[:, i] == f
    lik = np.where(ok, _likelihoods(llr, xs), -1.0)
    return xs[int(np.argmax(lik))]


def gf2_solve_systematic(key, set_a, frozen_mask):
    """Gaussian elimination over GF(2) for the free source bits on A."""
    n = len(frozen_mask)
    g = generator_matrix(n.bit_length() - 1).astype(np.uint8)
    set_a = sorted(set_a)
    fixed = np.array([max(f, 0) for f in frozen_mask], dtype=np.uint8)
    # x[A] = u[A] G[A, A] + u_fixed G[:, A]
    rhs = (np.asarray(key, dtype=np.uint8) ^ (fixed @ g[:, set_a] % 2).astype(np.uint8)) % 2
    m = g[np.ix_(set_a, set_a)].T.copy()  # rows are equations
    k = len(set_a)
    aug = np.concatenate([m, rhs[:, None]], axis=1)
    row = 0
    pivots = []
    for col in range(k):
        sel = [r for r in range(row, k) if aug[r, col]]
        if not sel:
            continue
        aug[[row, sel[0]]] = aug[[sel[0], row]]
        for r in range(k):
            if r != row and aug[r, col]:
                aug[r] ^= aug[row]
        pivots.append(col)
        row += 1
    if row < k:
        return None
    u = fixed.copy()
    u[set_a] = aug[:, -1]
    return u
