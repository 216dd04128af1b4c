"""Exact pure-state and noisy simulation of sampled circuits.

States are indexed so that qubit 0 is the most significant bit of the
computational-basis integer.  The evolution order per entangling layer t
is: dressing layer t, entangling layer t, then (noisy backends only) one
noise channel on every qubit.  A final dressing layer acts after the last
entangling layer and is never followed by noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import PAULIS, STREAM_TRAJECTORY, gate_rng

__all__ = [
    "StateVector",
    "DensityMatrix",
    "NoiseModel",
    "BitstringDistribution",
    "TrajectoryEstimate",
    "ResourceError",
    "UnravelingError",
    "run_pure",
    "run_density",
    "run_trajectories",
    "fidelity",
    "sample_bitstrings",
    "pt_moment_ratio",
    "distribution_from_state",
    "distribution_from_density",
]

PURE_CAP = 26
DENSITY_CAP = 12
STREAM_SAMPLE = 5


class ResourceError(RuntimeError):
    """Raised when a request exceeds the configured qubit caps."""


class UnravelingError(ValueError):
    """Raised when a noise model has no Pauli trajectory unraveling."""


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def norm_error(self):
        return abs(float(np.sum(np.abs(self.amplitudes) ** 2)) - 1.0)


@dataclass
class DensityMatrix:
    n_qubits: int
    entries: np.ndarray

    def trace_error(self):
        return abs(float(np.trace(self.entries).real) - 1.0)

    def hermiticity_error(self):
        return float(np.abs(self.entries - self.entries.conj().T).max())


@dataclass(frozen=True)
class NoiseModel:
    """Single-qubit noise applied to every qubit after each layer.

    kind is depolarizing (with probability rate the qubit is replaced by
    an equal mixture of its three Pauli conjugates) or amplitude-damping
    (two-Kraus decay toward |0> with damping probability rate).
    """

    kind: str
    rate: float

    def __post_init__(self):
        if self.kind not in ("depolarizing", "amplitude-damping"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not (0.0 <= self.rate <= 1.0):
            raise ValueError("noise rate must lie in [0, 1]")


@dataclass
class BitstringDistribution:
    n_qubits: int
    probabilities: np.ndarray
    normalized: bool = True

    def sum_error(self):
        return abs(float(np.sum(self.probabilities)) - 1.0)


@dataclass
class TrajectoryEstimate:
    distribution: BitstringDistribution
    distribution_se: np.ndarray
    fidelity: float
    fidelity_se: float
    n_trajectories: int


# ---------------------------------------------------------------------------
# tensor kernels


def _apply_1q(psi, u, q, n):
    t = psi.reshape((2,) * n)
    t = np.moveaxis(t, q, 0).reshape(2, -1)
    t = u @ t
    return np.moveaxis(t.reshape((2,) * n), 0, q).reshape(-1)


def _apply_2q(psi, u, a, b, n):
    t = psi.reshape((2,) * n)
    t = np.moveaxis(t, (a, b), (0, 1)).reshape(4, -1)
    t = u @ t
    return np.moveaxis(t.reshape((2,) * n), (0, 1), (a, b)).reshape(-1)


def _rho_apply_1q(rho, u, q, n):
    dim = 1 << n
    flat = rho.reshape(-1)
    flat = _apply_1q(flat, u, q, 2 * n)
    flat = _apply_1q(flat, u.conj(), n + q, 2 * n)
    return flat.reshape(dim, dim)


def _rho_apply_2q(rho, u, a, b, n):
    dim = 1 << n
    flat = rho.reshape(-1)
    flat = _apply_2q(flat, u, a, b, 2 * n)
    flat = _apply_2q(flat, u.conj(), n + a, n + b, 2 * n)
    return flat.reshape(dim, dim)


def _rho_kraus_1q(rho, kraus_ops, q, n):
    out = np.zeros_like(rho)
    for k in kraus_ops:
        flat = rho.reshape(-1)
        flat = _apply_1q(flat, k, q, 2 * n)
        flat = _apply_1q(flat, k.conj(), n + q, 2 * n)
        out += flat.reshape(rho.shape)
    return out


def _depolarize(rho, eps, q, n):
    # (1 - e) rho + e/3 sum_P P rho P  ==  (1 - 4e/3) rho + 2e/3 I_q (x) tr_q rho
    t = rho.reshape((2,) * (2 * n))
    t = np.moveaxis(t, (q, n + q), (0, 1))
    reduced = t[0, 0] + t[1, 1]
    out = (1.0 - 4.0 * eps / 3.0) * t
    out[0, 0] += (2.0 * eps / 3.0) * reduced
    out[1, 1] += (2.0 * eps / 3.0) * reduced
    out = np.moveaxis(out, (0, 1), (q, n + q))
    return out.reshape(rho.shape)


def _amplitude_damp_kraus(eps):
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - eps)]], dtype=complex)
    k1 = np.array([[0.0, math.sqrt(eps)], [0.0, 0.0]], dtype=complex)
    return k0, k1


# ---------------------------------------------------------------------------
# backends


def _dressing_layer(psi_or_rho, circuit, t, apply_fn):
    out = psi_or_rho
    for q in range(circuit.n_qubits):
        u = circuit.single_qubit_gates.get((t, q))
        if u is not None:
            out = apply_fn(out, u, q)
    return out


def run_pure(circuit, cap=PURE_CAP):
    """Apply the full circuit to |0...0> and return the state vector."""
    n = circuit.n_qubits
    if n > cap:
        raise ResourceError(f"{n} qubits exceeds the state-vector cap {cap}")
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0

    def one(p, u, q):
        return _apply_1q(p, u, q, n)

    for t, layer in enumerate(circuit.architecture.layers):
        psi = _dressing_layer(psi, circuit, t, one)
        for a, b in layer:
            psi = _apply_2q(psi, circuit.two_qubit_gates[(t, (a, b))], a, b, n)
    psi = _dressing_layer(psi, circuit, circuit.depth, one)
    return StateVector(n, psi)


def run_density(circuit, noise=None, cap=DENSITY_CAP):
    """Exact channel evolution of |0...0><0...0| under circuit plus noise.

    Noise acts on every qubit after each entangling layer; the final
    dressing layer is noiseless.
    """
    n = circuit.n_qubits
    if n > cap:
        raise ResourceError(f"{n} qubits exceeds the density-matrix cap {cap}")
    dim = 1 << n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    eps = 0.0 if noise is None else noise.rate
    kraus = _amplitude_damp_kraus(eps) if noise and noise.kind == "amplitude-damping" else None

    def one(r, u, q):
        return _rho_apply_1q(r, u, q, n)

    for t, layer in enumerate(circuit.architecture.layers):
        rho = _dressing_layer(rho, circuit, t, one)
        for a, b in layer:
            rho = _rho_apply_2q(rho, circuit.two_qubit_gates[(t, (a, b))], a, b, n)
        if eps > 0.0:
            for q in range(n):
                if kraus is None:
                    rho = _depolarize(rho, eps, q, n)
                else:
                    rho = _rho_kraus_1q(rho, kraus, q, n)
    rho = _dressing_layer(rho, circuit, circuit.depth, one)
    return DensityMatrix(n, rho)


def run_trajectories(circuit, noise, n_traj, seed, cap=PURE_CAP):
    """Monte Carlo Pauli unraveling of the depolarizing channel.

    Each trajectory evolves a pure state and independently inserts X, Y
    or Z (probability rate/3 each) on every qubit after every entangling
    layer.  Per-trajectory RNG streams derive from (seed, trajectory), so
    the estimate does not depend on execution order; the running sums use
    compensated accumulation in trajectory order.
    """
    if noise.kind != "depolarizing":
        raise UnravelingError(
            f"{noise.kind} noise has no Pauli trajectory unraveling"
        )
    n = circuit.n_qubits
    if n > cap:
        raise ResourceError(f"{n} qubits exceeds the state-vector cap {cap}")
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    eps = noise.rate
    ideal = run_pure(circuit, cap=cap).amplitudes

    dim = 1 << n
    s1 = np.zeros(dim)
    c1 = np.zeros(dim)
    s2 = np.zeros(dim)
    c2 = np.zeros(dim)
    fid_s = fid_c = fid_sq_s = fid_sq_c = 0.0

    def kahan_add(s, c, x):
        y = x - c
        t = s + y
        c_new = (t - s) - y
        return t, c_new

    def one(p, u, q):
        return _apply_1q(p, u, q, n)

    for i in range(n_traj):
        rng = gate_rng(seed, STREAM_TRAJECTORY, i, 0)
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
        for t, layer in enumerate(circuit.architecture.layers):
            psi = _dressing_layer(psi, circuit, t, one)
            for a, b in layer:
                psi = _apply_2q(psi, circuit.two_qubit_gates[(t, (a, b))], a, b, n)
            if eps > 0.0:
                hits = rng.random(n) < eps
                for q in np.nonzero(hits)[0]:
                    psi = _apply_1q(psi, PAULIS[int(rng.integers(3))], int(q), n)
        psi = _dressing_layer(psi, circuit, circuit.depth, one)

        probs = np.abs(psi) ** 2
        s1, c1 = kahan_add(s1, c1, probs)
        s2, c2 = kahan_add(s2, c2, probs * probs)
        f = float(np.abs(np.vdot(ideal, psi)) ** 2)
        fid_s, fid_c = kahan_add(fid_s, fid_c, f)
        fid_sq_s, fid_sq_c = kahan_add(fid_sq_s, fid_sq_c, f * f)

    mean = s1 / n_traj
    if n_traj > 1:
        var = np.maximum(s2 - n_traj * mean**2, 0.0) / (n_traj - 1)
        dist_se = np.sqrt(var / n_traj)
        fvar = max(fid_sq_s - fid_s**2 / n_traj, 0.0) / (n_traj - 1)
        fid_se = math.sqrt(fvar / n_traj)
    else:
        dist_se = np.zeros(dim)
        fid_se = 0.0
    return TrajectoryEstimate(
        BitstringDistribution(n, mean),
        dist_se,
        fid_s / n_traj,
        fid_se,
        n_traj,
    )


# ---------------------------------------------------------------------------
# measurements


def fidelity(psi, rho):
    """<psi| rho |psi>, clipped to [0, 1]."""
    if psi.n_qubits != rho.n_qubits:
        raise ValueError("state and density matrix sizes differ")
    val = np.vdot(psi.amplitudes, rho.entries @ psi.amplitudes)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"fidelity came out non-real ({val.imag:.2e})")
    out = float(val.real)
    if out < -1e-12 or out > 1.0 + 1e-12:
        raise ValueError(f"fidelity {out} outside [0, 1]")
    return min(max(out, 0.0), 1.0)


def distribution_from_state(state):
    return BitstringDistribution(state.n_qubits, np.abs(state.amplitudes) ** 2)


def distribution_from_density(rho):
    return BitstringDistribution(
        rho.n_qubits, np.maximum(np.diagonal(rho.entries).real, 0.0)
    )


def sample_bitstrings(dist, m, seed):
    """m i.i.d. samples from dist via inverse-CDF lookup.

    Bitstrings are returned as basis-state integers (qubit 0 is the most
    significant bit).  Deterministic in seed.
    """
    if not dist.normalized or dist.sum_error() > 1e-8:
        raise ValueError("can only sample a normalized distribution")
    cdf = np.cumsum(dist.probabilities)
    cdf[-1] = 1.0
    rng = gate_rng(seed, STREAM_SAMPLE, 0, 0)
    u = rng.random(m)
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def pt_moment_ratio(dist, k):
    """k-th moment of the distribution over the k-th Porter-Thomas moment.

    Returns 2^(N(k-1)) / k!  *  sum_x p(x)^k, which tends to 1 when the
    output probabilities follow the exponential law of deep scrambling
    circuits.
    """
    if k < 1:
        raise ValueError("moment order must be at least 1")
    p = dist.probabilities
    n = dist.n_qubits
    return float(2.0 ** (n * (k - 1)) / math.factorial(k) * np.sum(p**k))
