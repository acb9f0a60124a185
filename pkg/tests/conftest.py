"""Shared helpers for the test suite."""

import numpy as np


def rand_spd(rng, n, jitter=1e-3):
    """Random symmetric positive definite matrix: G G^T plus a small ridge."""
    g = rng.standard_normal((n, n))
    return g @ g.T + jitter * np.eye(n)


def rand_correlation(rng, n):
    """Random correlation matrix (unit diagonal, PD)."""
    a = rand_spd(rng, n)
    d = 1.0 / np.sqrt(np.diag(a))
    return a * np.outer(d, d)
