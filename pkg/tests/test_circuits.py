"""Tests for architectures, gate ensembles and circuit sampling."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xeblab import circuits as cc


def assert_unitary(u, tol=1e-12):
    d = u.shape[0]
    assert np.max(np.abs(u.conj().T @ u - np.eye(d))) < tol


class TestFsimMatrix:
    def test_zero_angles_is_identity(self):
        assert np.allclose(cc.fsim_matrix(0.0, 0.0), np.eye(4), atol=1e-15)

    def test_canonical_point(self):
        """theta=90, phi=60 pins every entry of the matrix."""
        expected = np.array(
            [
                [1, 0, 0, 0],
                [0, 0, -1j, 0],
                [0, -1j, 0, 0],
                [0, 0, 0, np.exp(-1j * np.pi / 3)],
            ]
        )
        assert np.max(np.abs(cc.fsim_matrix(90.0, 60.0) - expected)) < 1e-15

    def test_phi_180_corner(self):
        m = cc.fsim_matrix(90.0, 180.0)
        assert abs(m[3, 3] - (-1.0)) < 1e-12
        assert abs(m[1, 2] - (-1j)) < 1e-12
        assert abs(m[2, 1] - (-1j)) < 1e-12
        assert abs(m[1, 1]) < 1e-12

    @given(
        st.floats(min_value=0.0, max_value=359.99),
        st.floats(min_value=0.0, max_value=359.99),
    )
    @settings(max_examples=60, deadline=None)
    def test_always_unitary(self, theta, phi):
        assert_unitary(cc.fsim_matrix(theta, phi))

    def test_number_conserving_block_structure(self):
        m = cc.fsim_matrix(33.0, 141.0)
        assert m[0, 0] == 1.0
        for i in (1, 2, 3):
            assert m[0, i] == 0.0 and m[i, 0] == 0.0
        assert m[1, 3] == 0.0 and m[3, 1] == 0.0


class TestDiscreteGateConstants:
    def test_v_gates_square_to_their_axes(self):
        w = (cc.PAULI_X + cc.PAULI_Y) / np.sqrt(2.0)
        for v, target in zip(cc.V_GATES, (cc.PAULI_X, cc.PAULI_Y, w)):
            assert_unitary(v)
            assert np.allclose(v @ v, target, atol=1e-12)

    def test_twelve_element_family_size(self):
        us = cc.discrete_dressing_unitaries()
        assert len(us) == 12
        for u in us:
            assert_unitary(u)

    def test_twelve_element_family_is_a_one_design(self):
        """Averaging u rho u+ over all 12 elements fully depolarizes."""
        us = cc.discrete_dressing_unitaries()
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            rho = a @ a.conj().T
            avg = sum(u @ rho @ u.conj().T for u in us) / len(us)
            expected = np.trace(rho) * np.eye(2) / 2.0
            assert np.max(np.abs(avg - expected)) < 1e-12


class TestBuildArchitecture:
    def test_brickwork_4_qubits(self):
        arch = cc.build_architecture("brickwork-1d", 4, 2)
        assert arch.layers == (((0, 1), (2, 3)), ((1, 2),))

    def test_brickwork_12_by_16_alternates(self):
        arch = cc.build_architecture("brickwork-1d", 12, 16)
        assert arch.depth == 16
        sizes = [len(layer) for layer in arch.layers]
        assert sizes == [6, 5] * 8

    def test_brickwork_periodic_wrap(self):
        arch = cc.build_architecture("brickwork-1d", 6, 2, boundary="periodic")
        assert (1, 2) in arch.layers[1] and (3, 4) in arch.layers[1]
        # the wrap pair closes the odd layer
        assert any(0 in p and 5 in p for p in arch.layers[1])

    def test_brickwork_periodic_rejects_odd_size(self):
        with pytest.raises(ValueError):
            cc.build_architecture("brickwork-1d", 5, 2, boundary="periodic")

    def test_grid_six_qubits_one_layer(self):
        arch = cc.build_architecture("grid-2d", 6, 1)
        (layer,) = arch.layers
        covered = sorted(q for pair in layer for q in pair)
        assert covered == list(range(6))

    def test_grid_rejects_bad_size(self):
        with pytest.raises(ValueError, match="L"):
            cc.build_architecture("grid-2d", 7, 4)

    def test_grid_cycles_orientations(self):
        arch = cc.build_architecture("grid-2d", 12, 8)
        assert arch.layers[0] == arch.layers[4]
        assert arch.layers[1] == arch.layers[5]
        assert len(set(arch.layers[:4])) > 1

    @pytest.mark.parametrize(
        "kind,n,d",
        [("brickwork-1d", 9, 7), ("brickwork-1d", 8, 5), ("grid-2d", 20, 9)],
    )
    def test_layer_disjointness(self, kind, n, d):
        arch = cc.build_architecture(kind, n, d)
        for layer in arch.layers:
            flat = [q for pair in layer for q in pair]
            assert len(flat) == len(set(flat))
            assert all(0 <= q < n for q in flat)

    def test_rejects_tiny_systems(self):
        with pytest.raises(ValueError):
            cc.build_architecture("brickwork-1d", 1, 4)
        with pytest.raises(ValueError):
            cc.build_architecture("brickwork-1d", 4, 0)


class TestArchitectureIO:
    def test_documented_format(self, tmp_path):
        path = tmp_path / "arch.json"
        path.write_text('{"n_qubits":3,"layers":[[[0,1]],[[1,2]]]}')
        arch = cc.load_architecture(path)
        assert arch.n_qubits == 3
        assert arch.layers == (((0, 1),), ((1, 2),))

    def test_round_trip(self, tmp_path):
        arch = cc.build_architecture("grid-2d", 12, 5)
        path = tmp_path / "grid.json"
        cc.save_architecture(arch, path)
        again = cc.load_architecture(path)
        assert again.n_qubits == arch.n_qubits
        assert again.layers == arch.layers

    def test_degenerate_pair_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n_qubits":3,"layers":[[[0,0]]]}')
        with pytest.raises(ValueError, match="layer 0"):
            cc.load_architecture(path)

    def test_overlapping_pairs_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n_qubits":4,"layers":[[[0,1],[1,2]]]}')
        with pytest.raises(ValueError, match="layer 0"):
            cc.load_architecture(path)

    def test_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n_qubits":2,"layers":[[[0,5]]]}')
        with pytest.raises(ValueError, match="layer 0"):
            cc.load_architecture(path)


class TestGateEnsemble:
    def test_angle_range_enforced(self):
        with pytest.raises(ValueError):
            cc.fsim_ensemble(360.0, 0.0)
        with pytest.raises(ValueError):
            cc.fsim_ensemble(90.0, -1.0)

    def test_dressing_tags(self):
        assert cc.cz_ensemble().dressing == "haar"
        assert cc.haar2_ensemble().dressing == "none"
        assert cc.fsim_ensemble(90.0, 60.0).dressing == "haar"
        assert cc.discrete_fsim_ensemble(90.0, 60.0).dressing == "discrete"

    def test_entanglers(self):
        assert np.allclose(cc.cz_ensemble().entangler(), np.diag([1, 1, 1, -1]))
        assert cc.haar2_ensemble().entangler() is None


class TestSampleCircuit:
    def test_deterministic_regeneration(self):
        arch = cc.build_architecture("brickwork-1d", 6, 4)
        for ens in (
            cc.cz_ensemble(),
            cc.haar2_ensemble(),
            cc.discrete_fsim_ensemble(90.0, 60.0),
        ):
            a = cc.sample_circuit(arch, ens, seed=123)
            b = cc.sample_circuit(arch, ens, seed=123)
            assert set(a.two_qubit_gates) == set(b.two_qubit_gates)
            for k in a.two_qubit_gates:
                assert np.array_equal(a.two_qubit_gates[k], b.two_qubit_gates[k])
            for k in a.single_qubit_gates:
                assert np.array_equal(a.single_qubit_gates[k], b.single_qubit_gates[k])

    def test_seeds_differ(self):
        arch = cc.build_architecture("brickwork-1d", 4, 2)
        a = cc.sample_circuit(arch, cc.haar2_ensemble(), seed=1)
        b = cc.sample_circuit(arch, cc.haar2_ensemble(), seed=2)
        key = (0, (0, 1))
        assert not np.allclose(a.two_qubit_gates[key], b.two_qubit_gates[key])

    def test_all_gates_unitary(self):
        arch = cc.build_architecture("brickwork-1d", 5, 3)
        for ens in (cc.cz_ensemble(), cc.haar2_ensemble()):
            inst = cc.sample_circuit(arch, ens, seed=5)
            for u in inst.two_qubit_gates.values():
                assert_unitary(u)
            for u in inst.single_qubit_gates.values():
                assert_unitary(u)

    def test_haar2_carries_no_dressing(self):
        arch = cc.build_architecture("brickwork-1d", 4, 3)
        inst = cc.sample_circuit(arch, cc.haar2_ensemble(), seed=9)
        assert inst.single_qubit_gates == {}

    def test_dressing_covers_all_layers(self):
        arch = cc.build_architecture("brickwork-1d", 4, 3)
        inst = cc.sample_circuit(arch, cc.cz_ensemble(), seed=9)
        assert set(inst.single_qubit_gates) == {
            (t, q) for t in range(4) for q in range(4)
        }

    @pytest.mark.parametrize("seed", [0, 1, 17, 91])
    def test_discrete_v_never_repeats(self, seed):
        arch = cc.build_architecture("brickwork-1d", 6, 8)
        inst = cc.sample_circuit(
            arch, cc.discrete_fsim_ensemble(90.0, 60.0, "binary"), seed=seed
        )
        for q in range(6):
            vs = [inst.v_choices[(t, q)] for t in range(9)]
            assert all(a != b for a, b in zip(vs, vs[1:]))

    def test_binary_mode_draws_from_the_twelve(self):
        arch = cc.build_architecture("brickwork-1d", 4, 2)
        inst = cc.sample_circuit(
            arch, cc.discrete_fsim_ensemble(90.0, 60.0, "binary"), seed=3
        )
        family = cc.discrete_dressing_unitaries()
        for u in inst.single_qubit_gates.values():
            assert any(np.max(np.abs(u - f)) < 1e-12 for f in family)

    def test_negative_seed_rejected(self):
        arch = cc.build_architecture("brickwork-1d", 4, 2)
        with pytest.raises(ValueError):
            cc.sample_circuit(arch, cc.cz_ensemble(), seed=-1)


def _haar_singles_batch(n, seed):
    rng_master = np.random.default_rng(seed)
    out = np.empty((n, 2, 2), dtype=complex)
    for i in range(n):
        out[i] = cc.haar_unitary(2, rng_master)
    return out


class TestHaarStatistics:
    """Monte Carlo checks of the single-qubit Haar sampler."""

    def test_one_design(self):
        """The average of u Z u+ vanishes within Monte Carlo error."""
        n = 100_000
        us = _haar_singles_batch(n, 11)
        conj = np.einsum("nab,bc,ndc->nad", us, cc.PAULI_Z, us.conj())
        mean = conj.mean(axis=0)
        se = conj.std(axis=0) / np.sqrt(n)
        assert np.all(np.abs(mean) < 5 * se + 1e-12)

    def test_two_design_moments(self):
        """E[u (x) u* (x) u (x) u*] matches the two invariant projectors."""
        n = 120_000
        us = _haar_singles_batch(n, 12)
        usc = us.conj()
        total = np.zeros((2,) * 8, dtype=complex)
        total_sq = np.zeros((2,) * 8)
        step = 20_000
        for lo in range(0, n, step):
            sl = slice(lo, lo + step)
            t = np.einsum(
                "nab,ncd,nef,ngh->nabcdefgh", us[sl], usc[sl], us[sl], usc[sl]
            )
            total += t.sum(axis=0)
            total_sq += (np.abs(t) ** 2).sum(axis=0)
        mean = total / n
        var = total_sq / n - np.abs(mean) ** 2
        se = np.sqrt(np.maximum(var, 0.0) / n)

        # exact projector form in the same index order
        eye = np.eye(2)
        s_i = np.einsum("ab,cd->abcd", eye, eye) / 2.0
        paulis = np.stack(cc.PAULIS).real.astype(complex)
        s_w = np.einsum("xab,xcd->abcd", np.stack(cc.PAULIS), np.stack(cc.PAULIS).conj()) / 2.0
        del paulis
        exact = np.einsum("abcd,efgh->abefcdgh", s_i, s_i.conj())
        exact += np.einsum("abcd,efgh->abefcdgh", s_w, s_w.conj()) / 3.0
        # index order: mean has (a b c d e f g h) with pairs (ab)(cd)(ef)(gh)
        exact = exact.transpose(0, 1, 4, 5, 2, 3, 6, 7)
        assert np.max(np.abs(mean - exact) - 5 * se) < 1e-3
        assert np.all(np.abs(mean - exact) <= 5 * se + 5e-4)


class TestGateRng:
    def test_streams_are_independent_of_visit_order(self):
        a = cc.gate_rng(4, cc.STREAM_PAIR, 3, 7).integers(0, 1 << 30)
        cc.gate_rng(4, cc.STREAM_PAIR, 9, 1).integers(0, 1 << 30)
        b = cc.gate_rng(4, cc.STREAM_PAIR, 3, 7).integers(0, 1 << 30)
        assert a == b

    def test_distinct_slots_decorrelate(self):
        draws = {
            cc.gate_rng(0, cc.STREAM_SINGLE, t, q).integers(0, 1 << 62)
            for t in range(8)
            for q in range(8)
        }
        assert len(draws) == 64
