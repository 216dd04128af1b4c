"""Diffusion-reaction model of ensemble-averaged circuit statistics.

Averaging two copies of a dressed random circuit over its single-qubit
ensemble reduces every site to a two-state system: empty (I) or occupied
by a particle (Omega).  Each two-qubit gate turns into a 4x4
column-stochastic transfer matrix parameterized by a diffusion rate D
and a reaction rate R; single-qubit noise turns into a site factor
diag(1, 1 - c*eps) and an omitted gate into the projector diag(1, 0) on
both of its sites.  Propagating the per-site weight vector (1/2, 1/2)
through these kernels and contracting with fixed boundary vectors yields
the exact ensemble means of XEB and fidelity.

Site configurations are indexed with Omega as bit 1 and site 0 as the
most significant bit, matching the simulator's qubit convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import PAULIS, STREAM_MC, gate_rng, haar_unitary
from .simulator import ResourceError

__all__ = [
    "DRParams",
    "TransferMatrix4",
    "ParticleDistribution",
    "McEstimate",
    "ConsistencyError",
    "ETA",
    "DEPOLARIZING_C",
    "AMPLITUDE_DAMPING_C",
    "U_SITE",
    "V_XEB",
    "V_FID",
    "transfer_matrix_of_gate",
    "extract_DR",
    "dr_for_ensemble",
    "build_T",
    "attach_defects",
    "mdn_defects",
    "propagate_exact",
    "evaluate",
    "propagate_mc",
    "particle_count_marginal",
    "site_marginals",
    "weak_noise_fit",
]

ETA = 3.0
DEPOLARIZING_C = 4.0 / 3.0
AMPLITUDE_DAMPING_C = 2.0 / 3.0

DENSE_SITE_CAP = 26

# Per-site boundary vectors, index 0 = I (empty), index 1 = Omega.
U_SITE = np.array([0.5, 0.5])
V_XEB = np.array([2.0, 2.0 / 3.0])
V_FID = np.array([1.0, 1.0])


class ConsistencyError(RuntimeError):
    """An internal cross-check of the model construction failed."""


# ---------------------------------------------------------------------------
# per-gate transfer matrices


def _site_basis():
    """The two duplicated-space basis operators per site.

    Index order per site is (copy-1 row, copy-1 column, copy-2 row,
    copy-2 column).  I has squared norm 1, Omega has squared norm 3 and
    both are real.
    """
    eye = np.eye(2)
    s = np.zeros((2, 2, 2, 2, 2))
    s[0] = 0.5 * np.einsum("ab,cd->abcd", eye, eye)
    om = np.zeros((2, 2, 2, 2), dtype=complex)
    for p in PAULIS:
        om += np.einsum("ab,cd->abcd", p, p)
    if np.abs(om.imag).max() > 1e-14:
        raise ConsistencyError("particle basis operator came out complex")
    s[1] = 0.5 * om.real
    return s


_SITE_BASIS = _site_basis()
_BASIS_NORMS = np.array([1.0, 3.0, 3.0, 9.0])  # II, I-Omega, Omega-I, Omega-Omega


@dataclass(frozen=True)
class DRParams:
    """Diffusion rate D, reaction rate R and the fixed reaction ratio."""

    D: float
    R: float
    eta: float = ETA

    def __post_init__(self):
        if not (-1e-9 <= self.R <= self.D + 1e-9 <= 1.0 + 2e-9):
            raise ValueError(f"need 0 <= R <= D <= 1; got D={self.D}, R={self.R}")
        if self.R > 2.0 / 3.0 + 1e-9:
            raise ValueError(f"reaction rate {self.R} exceeds 2/3")
        if self.eta != ETA:
            raise ValueError("the reaction ratio is fixed at 3")


@dataclass(frozen=True)
class TransferMatrix4:
    """4x4 column-stochastic kernel in basis order II, IO, OI, OO."""

    matrix: np.ndarray

    def validate(self, tol=1e-12):
        m = self.matrix
        if m.shape != (4, 4):
            raise ValueError("transfer matrix must be 4x4")
        if np.abs(m.sum(axis=0) - 1.0).max() > tol:
            raise ConsistencyError("transfer-matrix columns do not sum to 1")
        if m.min() < -tol:
            raise ConsistencyError("transfer matrix has a negative entry")
        if np.abs(m[0] - np.array([1.0, 0, 0, 0])).max() > tol:
            raise ConsistencyError("vacuum row must read (1, 0, 0, 0)")
        if np.abs(m[:, 0] - np.array([1.0, 0, 0, 0])).max() > tol:
            raise ConsistencyError("vacuum column must read (1, 0, 0, 0)")
        return self


def transfer_matrix_of_gate(gate):
    """Contract four copies of a two-qubit gate into its 4x4 kernel.

    Rows index the output pair state and columns the input pair state;
    the input columns carry the weight 1/3 per occupied site, which makes
    every column sum to exactly 1 for a unitary gate.
    """
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (4, 4) or np.abs(gate @ gate.conj().T - np.eye(4)).max() > 1e-10:
        raise ValueError("input must be a 4x4 unitary")
    g = gate.reshape(2, 2, 2, 2)
    gc = g.conj()
    s = _SITE_BASIS
    raw = np.einsum(
        "xabcd,yABCD,aAeE,bBfF,cCgG,dDhH,uefgh,vEFGH->xyuv",
        s, s, g, gc, g, gc, s, s,
        optimize=True,
    ).reshape(4, 4)
    if np.abs(raw.imag).max() > 1e-11:
        raise ConsistencyError("transfer matrix came out complex")
    t = raw.real / _BASIS_NORMS[None, :]
    return TransferMatrix4(t).validate()


def extract_DR(gate):
    """Read (D, R) off a gate's transfer matrix, with consistency checks.

    D = 1 - T[IO -> IO], R = T[IO -> OO]; the ratio T[IO -> OO] over
    T[OO -> IO] must equal 3 and the matrix must match the two-parameter
    stochastic form it is collapsed to.
    """
    t = transfer_matrix_of_gate(gate).matrix
    d = 1.0 - t[1, 1]
    r = t[3, 1]
    if abs(r) > 1e-12 or abs(t[1, 3]) > 1e-12:
        if abs(r / t[1, 3] - ETA) > 1e-9:
            raise ConsistencyError(
                f"reaction ratio {r / t[1, 3]} deviates from 3"
            )
    params = DRParams(max(d, 0.0), max(r, 0.0))
    if np.abs(build_T(params).matrix - t).max() > 1e-9:
        raise ConsistencyError("transfer matrix does not fit the (D, R) form")
    return params


def dr_for_ensemble(ens, mc_samples=0, seed=0):
    """(D, R) for a gate ensemble.

    Fixed-entangler ensembles delegate to extract_DR.  Haar2 returns the
    analytic (4/5, 3/5); with mc_samples > 0 the raw transfer matrix is
    also averaged over that many Haar draws and must agree within five
    Monte Carlo standard errors.
    """
    fixed = ens.entangler()
    if fixed is not None:
        return extract_DR(fixed)
    analytic = DRParams(4.0 / 5.0, 3.0 / 5.0)
    if mc_samples:
        rng = gate_rng(seed, STREAM_MC, 0, 0)
        acc = np.zeros((mc_samples, 2))
        for i in range(mc_samples):
            t = transfer_matrix_of_gate(haar_unitary(4, rng)).matrix
            acc[i] = (1.0 - t[1, 1], t[3, 1])
        mean = acc.mean(axis=0)
        se = acc.std(axis=0, ddof=1) / math.sqrt(mc_samples)
        target = np.array([analytic.D, analytic.R])
        if np.any(np.abs(mean - target) > 5.0 * se + 1e-12):
            raise ConsistencyError(
                f"Haar-averaged (D, R) = {mean} is over 5 sigma from (4/5, 3/5)"
            )
    return analytic


def build_T(params):
    """The two-parameter column-stochastic kernel.

    Rows and columns are ordered II, IO, OI, OO.  The vacuum is inert,
    the one-particle sector hops with rate D - R or reacts into the
    two-particle state with rate R, and the two-particle state decays
    back with rate R/3 per side.
    """
    d, r = params.D, params.R
    h = params.eta
    t = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0 - d, d - r, r / h],
            [0.0, d - r, 1.0 - d, r / h],
            [0.0, r, r, 1.0 - 2.0 * r / h],
        ]
    )
    return TransferMatrix4(t)


# ---------------------------------------------------------------------------
# defects


def attach_defects(arch, noise=None, partition=None):
    """Site factors per (layer, qubit), stored as the Omega multiplier f.

    Noise puts f = 1 - c*eps on every site after every layer, with
    c = 4/3 for depolarizing and c = 2/3 for amplitude damping.  A
    partition puts f = 0 (full projection onto the vacuum) on both sites
    of every cut gate.  Sites absent from the map keep f = 1.
    """
    out = {}
    if noise is not None and noise.rate > 0.0:
        c = DEPOLARIZING_C if noise.kind == "depolarizing" else AMPLITUDE_DAMPING_C
        f = 1.0 - c * noise.rate
        if f < 0.0:
            raise ValueError(f"noise rate {noise.rate} leaves no valid site factor")
        for t in range(arch.depth):
            for q in range(arch.n_qubits):
                out[(t, q)] = f
    if partition is not None:
        for t, pair in partition.cut_gates:
            for q in pair:
                out[(t, q)] = 0.0
    return out


def mdn_defects(events):
    """Site factors for explicit full-depolarization insertions."""
    return {(int(t), int(q)): 0.0 for t, q in events}


# ---------------------------------------------------------------------------
# propagation


@dataclass
class ParticleDistribution:
    """Weights over occupation configurations.

    Either dense (weights: flat array of length 2^n_sites) or factorized
    into independent parts, each a (site index tuple, flat weights)
    pair.  Factorized form is only valid when every gate between parts
    projects both of its sites onto the vacuum.
    """

    n_sites: int
    weights: np.ndarray | None = None
    parts: list | None = None


def apply_pair_kernel(w, kernel, a, b):
    """Apply a 4x4 kernel to axes (a, b) of an occupation tensor."""
    n = w.ndim
    t = np.moveaxis(w, (a, b), (0, 1)).reshape(4, -1)
    t = kernel @ t
    return np.moveaxis(t.reshape((2, 2) + (2,) * (n - 2)), (0, 1), (a, b))


def apply_site_factor(w, f, q):
    """Multiply the Omega slice of axis q by f (in place)."""
    sl = [slice(None)] * w.ndim
    sl[q] = 1
    w[tuple(sl)] *= f
    return w


def _propagate_sites(sites, layers_of_pairs, kernel, defects, depth):
    """Dense propagation over an explicit site subset."""
    local = {q: i for i, q in enumerate(sites)}
    l = len(sites)
    w = np.full((2,) * l, 2.0**-l)
    for t in range(depth):
        for a, b in layers_of_pairs[t]:
            w = apply_pair_kernel(w, kernel, local[a], local[b])
        for q in sites:
            f = defects.get((t, q), 1.0)
            if f != 1.0:
                apply_site_factor(w, f, local[q])
    return w.reshape(-1)


def propagate_exact(arch, params, defects=None, partition=None, cap=DENSE_SITE_CAP):
    """Evolve the uniform per-site weights through all layers.

    Dense mode handles up to cap sites.  With a partition the weights
    stay factorized per subsystem, which requires the vacuum projector
    on both sides of every cross-subsystem gate (attach_defects with the
    same partition provides exactly that).
    """
    defects = defects or {}
    kernel = build_T(params).matrix
    n, depth = arch.n_qubits, arch.depth

    if partition is not None:
        internal = [[] for _ in range(depth)]
        for t, layer in enumerate(arch.layers):
            for a, b in layer:
                if any(a in sub and b in sub for sub in partition.subsystems):
                    internal[t].append((a, b))
                elif defects.get((t, a)) != 0.0 or defects.get((t, b)) != 0.0:
                    raise ValueError(
                        f"gate {(a, b)} at layer {t} crosses the partition "
                        "without vacuum projection on both sites"
                    )
        parts = []
        for sub in partition.subsystems:
            sites = tuple(sorted(sub))
            if len(sites) > cap:
                raise ResourceError(f"{len(sites)} sites exceeds the dense cap {cap}")
            pairs = [
                [(a, b) for a, b in internal[t] if a in sub] for t in range(depth)
            ]
            parts.append((sites, _propagate_sites(sites, pairs, kernel, defects, depth)))
        return ParticleDistribution(n, None, parts)

    if n > cap:
        raise ResourceError(f"{n} sites exceeds the dense cap {cap}")
    sites = tuple(range(n))
    w = _propagate_sites(sites, list(arch.layers), kernel, defects, depth)
    return ParticleDistribution(n, w, None)


def _contract(weights, l, v):
    t = weights.reshape((2,) * l) if l > 1 else weights
    for _ in range(l):
        t = np.tensordot(v, t, axes=([0], [0]))
    return float(t)


def evaluate(p, which="xeb"):
    """Contract a particle distribution into mean XEB or mean fidelity.

    XEB contracts every site with (2, 2/3), which equals
    2^N sum_s w(s) / 3^(#Omega) and returns that minus 1; fidelity
    contracts with (1, 1), the total weight.  Factorized parts multiply:
    (1 + chi) and F are both products over isolated parts.
    """
    if which not in ("xeb", "fidelity"):
        raise ValueError(f"unknown observable {which!r}")
    v = V_XEB if which == "xeb" else V_FID
    if p.parts is not None:
        total = 1.0
        for sites, w in p.parts:
            total *= _contract(w, len(sites), v)
    else:
        total = _contract(p.weights, p.n_sites, v)
    return total - 1.0 if which == "xeb" else total


def _popcounts(n):
    pc = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        pc = np.concatenate([pc, pc + 1])
    return pc


def particle_count_marginal(p):
    """Total weight per particle number, a vector of length n_sites + 1."""
    if p.weights is None:
        raise ValueError("particle-count marginal needs a dense distribution")
    return np.bincount(_popcounts(p.n_sites), weights=p.weights, minlength=p.n_sites + 1)


def site_marginals(p):
    """Per-site (empty, occupied) weights, shape (n_sites, 2)."""
    if p.weights is None:
        raise ValueError("site marginals need a dense distribution")
    t = p.weights.reshape((2,) * p.n_sites)
    out = np.zeros((p.n_sites, 2))
    for q in range(p.n_sites):
        axes = tuple(i for i in range(p.n_sites) if i != q)
        out[q] = t.sum(axis=axes)
    return out


def weak_noise_fit(p):
    """Fit the re-scaled equilibrium shape alpha * (1/4, 3 beta / 4).

    alpha captures the overall weight loss per site and beta the
    depletion of the particle density relative to the 3/4 equilibrium
    value.  Diagnostic only; nothing downstream consumes the fit.
    """
    m = site_marginals(p).mean(axis=0)
    alpha = 4.0 * m[0]
    beta = m[1] / (3.0 * m[0]) if m[0] > 0 else float("nan")
    return float(alpha), float(beta)


# ---------------------------------------------------------------------------
# Monte Carlo propagation


@dataclass(frozen=True)
class McEstimate:
    chi: float
    chi_se: float
    fidelity: float
    fidelity_se: float
    n_samples: int


def propagate_mc(arch, params, defects=None, n_samples=100_000, seed=0, chunk=16384):
    """Sample occupation trajectories instead of propagating densely.

    Initial configurations are uniform per site; every gate transitions
    its pair by the column probabilities of the kernel; site factors
    multiply a carried weight (a vacuum projector zeroes it).  The chi
    estimator averages 2^N * weight / 3^(#Omega) over final
    configurations.  Chunked streams keyed by (seed, chunk index) make
    the estimate independent of how chunks are scheduled.
    """
    defects = defects or {}
    kernel = build_T(params).matrix
    cum = np.cumsum(kernel, axis=0)
    n, depth = arch.n_qubits, arch.depth

    sums = np.zeros(2)  # chi-term, weight
    sumsqs = np.zeros(2)
    done = 0
    chunk_index = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        rng = gate_rng(seed, STREAM_MC, 1, chunk_index)
        st = (rng.random((m, n)) < 0.5).astype(np.int8)
        wgt = np.ones(m)
        for t, layer in enumerate(arch.layers):
            for a, b in layer:
                s = 2 * st[:, a] + st[:, b]
                thresholds = cum[:, s]
                new = (rng.random(m)[None, :] > thresholds).sum(axis=0)
                st[:, a] = new >> 1
                st[:, b] = new & 1
            for q in range(n):
                f = defects.get((t, q), 1.0)
                if f != 1.0:
                    hit = st[:, q] == 1
                    if f == 0.0:
                        wgt[hit] = 0.0
                    else:
                        wgt[hit] *= f
        x = wgt * 2.0**n * 3.0 ** (-st.sum(axis=1, dtype=np.int64))
        vals = np.stack([x, wgt])
        sums += vals.sum(axis=1)
        sumsqs += (vals**2).sum(axis=1)
        done += m
        chunk_index += 1

    mean = sums / n_samples
    if n_samples > 1:
        var = np.maximum(sumsqs - n_samples * mean**2, 0.0) / (n_samples - 1)
        se = np.sqrt(var / n_samples)
    else:
        se = np.zeros(2)
    return McEstimate(mean[0] - 1.0, se[0], mean[1], se[1], n_samples)
