# Licensed under the MIT license

"""
Eigenvalues of small dense real matrices: balancing, Householder reduction to
Hessenberg form, then complex single-shift QR with Wilkinson shifts.
"""

import logging
from typing import Optional

import numpy as np

from .types import InvalidParameter, NoConvergence

RADIX = 2.0
BALANCE_THRESHOLD = 0.95
ITERATIONS_PER_EIGENVALUE = 30
EXCEPTIONAL_SHIFT_EVERY = 10

EPS = np.finfo(float).eps

log = logging.getLogger(__name__)


def _check_square(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParameter(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidParameter("matrix has non-finite entries")
    return a


def balance(a: np.ndarray) -> np.ndarray:
    """Diagonal similarity that evens out row and column norms (radix 2)."""
    a = _check_square(a)
    n = a.shape[0]
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            if c == 0 or r == 0:
                continue

            s = c + r
            f = 1.0
            g = r / RADIX
            while c < g:
                f *= RADIX
                c *= RADIX * RADIX
            g = r * RADIX
            while c > g:
                f /= RADIX
                c /= RADIX * RADIX

            if (c + r) / f < BALANCE_THRESHOLD * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Upper Hessenberg matrix similar to `a`, by Householder reflections."""
    h = _check_square(a)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k].copy()
        norm_x = np.linalg.norm(x)
        if norm_x == 0:
            continue
        v = x
        v[0] += norm_x if x[0] >= 0 else -norm_x
        v /= np.linalg.norm(v)

        h[k + 1 :, k:] -= 2.0 * np.outer(v, v @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v)
        h[k + 2 :, k] = 0.0
    return h


def _wilkinson(block: np.ndarray) -> complex:
    a, b = block[-2, -2], block[-2, -1]
    c, d = block[-1, -2], block[-1, -1]
    half = 0.5 * (a + d)
    root = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    mu1, mu2 = half + root, half - root
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def _qr_step(block: np.ndarray, mu: complex) -> None:
    """One shifted QR sweep, RQ + mu, in place on a Hessenberg block."""
    m = block.shape[0]
    block -= mu * np.eye(m)
    rotations = []
    for k in range(m - 1):
        x, y = block[k, k], block[k + 1, k]
        r = np.hypot(abs(x), abs(y))
        if r == 0:
            c, s = 1.0 + 0j, 0j
        else:
            c, s = x / r, y / r
        g = np.array([[np.conj(c), np.conj(s)], [-s, c]])
        block[k : k + 2, :] = g @ block[k : k + 2, :]
        rotations.append(g)

    for k, g in enumerate(rotations):
        block[:, k : k + 2] = block[:, k : k + 2] @ g.conj().T

    block += mu * np.eye(m)
    block[:] = np.triu(block, -1)


def eigenvalues(a: np.ndarray, max_iter: Optional[int] = None) -> np.ndarray:
    """All eigenvalues of a real square matrix, as complex numbers."""
    a = _check_square(a)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex)

    h = hessenberg(balance(a)).astype(complex)
    scale_all = np.linalg.norm(h) or 1.0
    cap = max_iter if max_iter is not None else ITERATIONS_PER_EIGENVALUE * n

    found = []
    hi = n - 1
    total = 0
    since_deflation = 0
    while hi >= 0:
        lo = hi
        while lo > 0:
            scale = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if scale == 0:
                scale = scale_all
            if abs(h[lo, lo - 1]) <= EPS * scale:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1

        if lo == hi:
            found.append(h[hi, hi])
            hi -= 1
            since_deflation = 0
            continue

        if total >= cap:
            raise NoConvergence(
                f"QR iteration did not converge in {cap} steps "
                f"({len(found)} of {n} eigenvalues found)"
            )
        total += 1
        since_deflation += 1

        block = h[lo : hi + 1, lo : hi + 1]
        if since_deflation % EXCEPTIONAL_SHIFT_EVERY == 0:
            mu = block[-1, -1] + 0.75 * abs(block[-1, -2])
        else:
            mu = _wilkinson(block)
        _qr_step(block, mu)

    log.debug(f"eigenvalues of {n}x{n} matrix in {total} QR steps")
    return np.array(found[::-1])


def leading_eigenvalue(a: np.ndarray) -> complex:
    """Eigenvalue with the largest real part."""
    eigs = eigenvalues(a)
    if eigs.size == 0:
        raise InvalidParameter("empty matrix has no eigenvalues")
    return complex(eigs[int(np.argmax(eigs.real))])
