"""Shared fixtures and independent oracles used across the test modules."""

import itertools
import math

import numpy as np

from codedgrad import LinearCode

# Worked-example generator: [4, 2] code whose first two columns are systematic
# and any two columns are independent (distance 3).
EXAMPLE_G = np.array([[1.0, 0.0, 1.0, 1.0], [0.0, 1.0, 1.0, 2.0]])


def example_code(systematic=True):
    return LinearCode(
        N=4,
        K=2,
        generator=EXAMPLE_G.copy(),
        systematic_positions=(1, 2) if systematic else None,
    )


def oracle_min_distance(G, tol=1e-9):
    """Independent distance oracle: smallest weight w such that some set of
    N - w columns no longer determines the message (its complement then
    supports a nonzero codeword)."""
    K, N = G.shape
    for w in range(1, N + 1):
        if N - w < K:
            return w  # fewer than K kept columns can never have rank K
        for kept in itertools.combinations(range(N), N - w):
            sv = np.linalg.svd(G[:, kept], compute_uv=False)
            if int((sv > tol * sv.max()).sum()) < K:
                return w
    return N


def naive_f(s, m, kappa, t, constant=6.414):
    """Direct (non-log) evaluation of the union-bound function."""
    e = t - m + 1
    return (
        math.comb(m + s, t)
        * (constant * t / (kappa * e)) ** e
        / math.sqrt(2.0 * math.pi)
    )


def finite_difference_gradient(loss, w, h=1e-6):
    """Central finite differences of a scalar loss."""
    w = np.asarray(w, dtype=np.float64)
    grad = np.zeros_like(w)
    for i in range(w.size):
        step = np.zeros_like(w)
        step[i] = h
        grad[i] = (loss(w + step) - loss(w - step)) / (2.0 * h)
    return grad
