"""Linear cross-entropy benchmark statistics.

chi(p, q) = 2^N sum_x p(x) q(x) - 1 compares an ideal distribution p
with a candidate q; the empirical variant replaces the sum over q by an
average over samples drawn from q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["EnsembleStat", "xeb_exact", "xeb_empirical", "ensemble_average"]


@dataclass(frozen=True)
class EnsembleStat:
    mean: float
    std: float
    standard_error: float
    n_instances: int


def _check_normalized(dist, name):
    if not dist.normalized:
        raise ValueError(f"{name} must be a normalized distribution")
    if dist.sum_error() > 1e-6:
        raise ValueError(f"{name} does not sum to 1 (off by {dist.sum_error():.2e})")


def xeb_exact(p, q):
    """2^N sum_x p(x) q(x) - 1 for two full distributions.

    The inner product uses numpy's pairwise summation, which keeps the
    result reproducible to rounding regardless of how callers batch work.
    """
    if p.n_qubits != q.n_qubits:
        raise ValueError("distributions live on different qubit counts")
    _check_normalized(p, "p")
    _check_normalized(q, "q")
    return float(2.0**p.n_qubits * np.sum(p.probabilities * q.probabilities) - 1.0)


def xeb_empirical(p, samples):
    """Unbiased estimate (2^N / m) sum_i p(x_i) - 1 from samples of q."""
    samples = np.asarray(samples)
    m = samples.size
    if m < 1:
        raise ValueError("need at least one sample")
    return float(2.0**p.n_qubits / m * np.sum(p.probabilities[samples]) - 1.0)


def ensemble_average(values):
    """Mean, sample STD (n-1 denominator) and standard error of a list.

    A single value has zero STD by convention.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 1:
        raise ValueError("need at least one value")
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return EnsembleStat(mean, std, std / math.sqrt(n), n)
