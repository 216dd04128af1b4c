"""Circuit architectures, gate ensembles, and random circuit sampling.

A circuit is a layered arrangement of two-qubit couplings plus concrete
unitaries drawn from a gate ensemble.  Sampling is deterministic: every
gate slot gets its own random stream derived from (master seed, stream
kind, layer, position), so regeneration is bit-identical and safe to run
concurrently in any order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Architecture",
    "GateEnsemble",
    "CircuitInstance",
    "build_architecture",
    "load_architecture",
    "save_architecture",
    "fsim_matrix",
    "sample_circuit",
    "haar_unitary",
    "gate_rng",
    "z_rotation",
    "discrete_dressing_unitaries",
    "CZ_MATRIX",
    "SQRT_X",
    "SQRT_Y",
    "SQRT_W",
    "V_GATES",
]

# Stream kind tags used when deriving per-slot RNG streams.  Other modules
# reserve further tags (trajectories, Monte Carlo) from the same space so
# no two consumers of a master seed ever collide.
STREAM_SINGLE = 1
STREAM_PAIR = 2
STREAM_TRAJECTORY = 3
STREAM_MC = 4

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

CZ_MATRIX = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def _involution_sqrt(a):
    """Principal square root of a unitary involution (a @ a = identity)."""
    return ((1.0 + 1.0j) * np.eye(2) + (1.0 - 1.0j) * a) / 2.0


SQRT_X = _involution_sqrt(PAULI_X)
SQRT_Y = _involution_sqrt(PAULI_Y)
SQRT_W = _involution_sqrt((PAULI_X + PAULI_Y) / np.sqrt(2.0))
V_GATES = (SQRT_X, SQRT_Y, SQRT_W)


def gate_rng(seed, kind, layer, position):
    """Independent generator for one gate slot of one master seed."""
    return np.random.default_rng((int(seed), int(kind), int(layer), int(position)))


def z_rotation(theta):
    """diag(1, exp(i theta)); theta in radians."""
    return np.diag([1.0, np.exp(1.0j * theta)])


def fsim_matrix(theta, phi):
    """Excitation-conserving two-qubit gate, angles in degrees.

    The one-excitation block rotates by theta with imaginary off-diagonal
    entries, and the doubly excited state picks up a phase exp(-i phi):

        [[1, 0,          0,          0          ],
         [0, cos t,      -i sin t,   0          ],
         [0, -i sin t,   cos t,      0          ],
         [0, 0,          0,          exp(-i p)  ]]
    """
    t = np.deg2rad(theta)
    p = np.deg2rad(phi)
    c, s = np.cos(t), np.sin(t)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c, -1.0j * s, 0.0],
            [0.0, -1.0j * s, c, 0.0],
            [0.0, 0.0, 0.0, np.exp(-1.0j * p)],
        ]
    )


def haar_unitary(dim, rng):
    """Haar-uniform unitary via QR of a complex Gaussian matrix.

    The R-diagonal phases are normalized away, which makes the
    distribution exactly Haar rather than QR-convention dependent.
    """
    z = (rng.standard_normal((dim, dim)) + 1.0j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


# ---------------------------------------------------------------------------
# architectures


@dataclass(frozen=True)
class Architecture:
    """Layered coupling layout.

    layers is a tuple of layers; each layer is a tuple of (a, b) qubit
    pairs with a < b, disjoint within the layer.
    """

    n_qubits: int
    layers: tuple
    kind: str = "custom"
    boundary: str = "open"

    @property
    def depth(self):
        return len(self.layers)


def _validate_layers(n_qubits, layers):
    for t, layer in enumerate(layers):
        seen = set()
        for pair in layer:
            if len(pair) != 2 or pair[0] == pair[1]:
                raise ValueError(f"layer {t}: invalid pair {tuple(pair)}")
            a, b = pair
            if not (0 <= a < n_qubits and 0 <= b < n_qubits):
                raise ValueError(
                    f"layer {t}: pair {tuple(pair)} out of range for {n_qubits} qubits"
                )
            for q in pair:
                if q in seen:
                    raise ValueError(
                        f"layer {t}: qubit {q} appears in more than one pair"
                    )
                seen.add(q)


def _canonical_layers(layers):
    return tuple(
        tuple(sorted((min(a, b), max(a, b)) for a, b in layer)) for layer in layers
    )


def build_architecture(kind, n_qubits, depth, boundary="open"):
    """Standard layouts.

    brickwork-1d: even layers couple (2i, 2i+1), odd layers (2i+1, 2i+2);
    an open boundary drops the wrap pair, a periodic one keeps it (even
    n_qubits only).

    grid-2d: n_qubits must equal L*(L+1) for some L; qubits live on an
    (L+1)-row by L-column grid, index r*L + c, and layers cycle through
    the four coupling orientations right, left, down, up (horizontal
    pairs starting at even then odd columns, vertical pairs starting at
    even then odd rows).
    """
    if n_qubits < 2:
        raise ValueError("need at least 2 qubits")
    if depth < 1:
        raise ValueError("depth must be positive")
    if kind == "brickwork-1d":
        if boundary not in ("open", "periodic"):
            raise ValueError(f"unknown boundary {boundary!r}")
        if boundary == "periodic" and n_qubits % 2:
            raise ValueError("periodic brickwork needs an even qubit count")
        layers = []
        for t in range(depth):
            if t % 2 == 0:
                layer = [(a, a + 1) for a in range(0, n_qubits - 1, 2)]
            else:
                layer = [(a, a + 1) for a in range(1, n_qubits - 1, 2)]
                if boundary == "periodic":
                    layer.append((0, n_qubits - 1))
            layers.append(tuple(sorted(layer)))
        arch = Architecture(n_qubits, tuple(layers), "brickwork-1d", boundary)
    elif kind == "grid-2d":
        if boundary != "open":
            raise ValueError("grid-2d supports open boundary only")
        cols = 1
        while cols * (cols + 1) < n_qubits:
            cols += 1
        if cols * (cols + 1) != n_qubits:
            raise ValueError(
                f"grid-2d needs n_qubits = L*(L+1); got {n_qubits}"
            )
        rows = cols + 1

        def idx(r, c):
            return r * cols + c

        layers = []
        for t in range(depth):
            orientation = t % 4
            layer = []
            if orientation == 0:
                pairs = [(r, c) for r in range(rows) for c in range(0, cols - 1, 2)]
                layer = [(idx(r, c), idx(r, c + 1)) for r, c in pairs]
            elif orientation == 1:
                pairs = [(r, c) for r in range(rows) for c in range(1, cols - 1, 2)]
                layer = [(idx(r, c), idx(r, c + 1)) for r, c in pairs]
            elif orientation == 2:
                pairs = [(r, c) for r in range(0, rows - 1, 2) for c in range(cols)]
                layer = [(idx(r, c), idx(r + 1, c)) for r, c in pairs]
            else:
                pairs = [(r, c) for r in range(1, rows - 1, 2) for c in range(cols)]
                layer = [(idx(r, c), idx(r + 1, c)) for r, c in pairs]
            layers.append(tuple(sorted(layer)))
        arch = Architecture(n_qubits, tuple(layers), "grid-2d", boundary)
    else:
        raise ValueError(f"unknown architecture kind {kind!r}")
    _validate_layers(arch.n_qubits, arch.layers)
    return arch


def load_architecture(path):
    """Read an architecture from a JSON file.

    Expected fields: n_qubits (int) and layers (array of arrays of 2-int
    arrays).  Optional kind and boundary tags are honored when present.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if "n_qubits" not in data or "layers" not in data:
        raise ValueError("architecture file needs n_qubits and layers fields")
    n = int(data["n_qubits"])
    layers = _canonical_layers(
        [[(int(a), int(b)) for a, b in layer] for layer in data["layers"]]
    )
    _validate_layers(n, layers)
    return Architecture(
        n, layers, data.get("kind", "custom"), data.get("boundary", "open")
    )


def save_architecture(arch, path):
    data = {
        "n_qubits": arch.n_qubits,
        "layers": [[list(pair) for pair in layer] for layer in arch.layers],
        "kind": arch.kind,
        "boundary": arch.boundary,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# gate ensembles


_ENSEMBLE_KINDS = ("CZ", "Haar2", "FSim", "DiscreteFSim")
_Z_MODES = ("continuous-uniform", "binary")


@dataclass(frozen=True)
class GateEnsemble:
    """Which two-qubit gate is used and how it is dressed.

    CZ, FSim and DiscreteFSim hold their entangler fixed; CZ and FSim are
    dressed with independent Haar singles, DiscreteFSim with the discrete
    family Z(t1) V Z(t2), V in {sqrt X, sqrt Y, sqrt W}.  Haar2 draws the
    whole two-qubit gate Haar-uniformly and therefore carries no dressing.
    """

    kind: str
    theta: float = 0.0
    phi: float = 0.0
    z_mode: str = "continuous-uniform"

    def __post_init__(self):
        if self.kind not in _ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if not (0.0 <= self.theta < 360.0 and 0.0 <= self.phi < 360.0):
            raise ValueError("angles must lie in [0, 360) degrees")
        if self.z_mode not in _Z_MODES:
            raise ValueError(f"unknown z_mode {self.z_mode!r}")

    @property
    def dressing(self):
        if self.kind == "Haar2":
            return "none"
        if self.kind == "DiscreteFSim":
            return "discrete"
        return "haar"

    def entangler(self):
        """The fixed two-qubit gate, or None when it is drawn per slot."""
        if self.kind == "CZ":
            return CZ_MATRIX.copy()
        if self.kind in ("FSim", "DiscreteFSim"):
            return fsim_matrix(self.theta, self.phi)
        return None


def cz_ensemble():
    return GateEnsemble("CZ")


def haar2_ensemble():
    return GateEnsemble("Haar2")


def fsim_ensemble(theta, phi):
    return GateEnsemble("FSim", theta=theta, phi=phi)


def discrete_fsim_ensemble(theta, phi, z_mode="continuous-uniform"):
    return GateEnsemble("DiscreteFSim", theta=theta, phi=phi, z_mode=z_mode)


# ---------------------------------------------------------------------------
# sampling


@dataclass
class CircuitInstance:
    """A concrete sampled circuit.

    two_qubit_gates maps (layer, (a, b)) to a 4x4 unitary acting on the
    ordered pair (a is the more significant qubit).  single_qubit_gates
    maps (dressing layer, qubit) to a 2x2 unitary; dressing layer t acts
    right before entangling layer t, and dressing layer depth acts after
    the last entangling layer.  Haar2 circuits have no dressing entries.
    v_choices records the discrete-family V index per slot (DiscreteFSim
    only), kept so the no-repeat rule is checkable after the fact.
    """

    architecture: Architecture
    ensemble: GateEnsemble
    seed: int
    two_qubit_gates: dict
    single_qubit_gates: dict = field(default_factory=dict)
    v_choices: dict = field(default_factory=dict)

    @property
    def n_qubits(self):
        return self.architecture.n_qubits

    @property
    def depth(self):
        return self.architecture.depth


def _sample_discrete_single(rng, prev_v, z_mode):
    if prev_v < 0:
        v = int(rng.integers(3))
    else:
        others = [x for x in range(3) if x != prev_v]
        v = others[int(rng.integers(2))]
    if z_mode == "binary":
        t1, t2 = rng.integers(0, 2, size=2) * np.pi
    else:
        t1, t2 = rng.uniform(0.0, 2.0 * np.pi, size=2)
    return v, z_rotation(t1) @ V_GATES[v] @ z_rotation(t2)


def sample_circuit(arch, ens, seed):
    """Draw a concrete circuit; deterministic in (arch, ens, seed)."""
    if seed is None or int(seed) < 0:
        raise ValueError("seed must be a non-negative integer")
    seed = int(seed)
    n = arch.n_qubits
    two = {}
    singles = {}
    v_choices = {}

    fixed = ens.entangler()
    for t, layer in enumerate(arch.layers):
        for a, b in layer:
            if fixed is None:
                rng = gate_rng(seed, STREAM_PAIR, t, a * n + b)
                two[(t, (a, b))] = haar_unitary(4, rng)
            else:
                two[(t, (a, b))] = fixed.copy()

    if ens.dressing == "haar":
        for t in range(arch.depth + 1):
            for q in range(n):
                singles[(t, q)] = haar_unitary(2, gate_rng(seed, STREAM_SINGLE, t, q))
    elif ens.dressing == "discrete":
        # The V of two successive dressing layers on one qubit must
        # differ, so the draws walk each qubit's layers in order.
        for q in range(n):
            prev = -1
            for t in range(arch.depth + 1):
                rng = gate_rng(seed, STREAM_SINGLE, t, q)
                v, u = _sample_discrete_single(rng, prev, ens.z_mode)
                singles[(t, q)] = u
                v_choices[(t, q)] = v
                prev = v

    return CircuitInstance(arch, ens, seed, two, singles, v_choices)


def discrete_dressing_unitaries():
    """All 12 binary-mode discrete singles: 3 V choices times 4 Z sign pairs."""
    out = []
    for v in V_GATES:
        for t1 in (0.0, np.pi):
            for t2 in (0.0, np.pi):
                out.append(z_rotation(t1) @ v @ z_rotation(t2))
    return out
