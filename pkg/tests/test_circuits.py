import math

import numpy as np
import pytest

from thermovar.circuits import (
    FactorState,
    Gate,
    ParameterizedCircuit,
    RegisterLayout,
    apply_circuit,
    batched_system_states,
    build_ansatz,
    circuit_unitary,
    ising_rotation_ansatz,
    ising_single_parameter_ansatz,
    output_state,
    ry_matrix,
    xy_ring_ansatz,
)
from thermovar.states import DensityMatrix, partial_trace

from conftest import random_density


def random_unitary_circuit(rng, n_qubits, n_gates):
    gates = []
    n_params = 0
    for _ in range(n_gates):
        kind = rng.choice(["RY", "HGATE", "CNOT", "CZ"])
        if kind in ("RY", "HGATE"):
            targets = (int(rng.integers(n_qubits)),)
        else:
            targets = tuple(rng.choice(n_qubits, size=2, replace=False).tolist())
        if kind == "RY":
            gates.append(Gate("RY", targets, n_params))
            n_params += 1
        else:
            gates.append(Gate(kind, targets))
    return ParameterizedCircuit(n_qubits, tuple(gates))


class TestGateValidation:
    def test_param_index_only_for_ry(self):
        with pytest.raises(ValueError):
            Gate("CNOT", (0, 1), 0)
        with pytest.raises(ValueError):
            Gate("RY", (0,))

    def test_arity_checked(self):
        with pytest.raises(ValueError):
            Gate("CSWAP", (0, 1))

    def test_distinct_targets(self):
        with pytest.raises(ValueError):
            Gate("CNOT", (1, 1))

    def test_param_indices_contiguous(self):
        with pytest.raises(ValueError, match="contiguous"):
            ParameterizedCircuit(2, (Gate("RY", (0,), 1),))


class TestApplyCircuit:
    def test_ry_pi_flips_qubit(self):
        circ = ParameterizedCircuit(1, (Gate("RY", (0,), 0),))
        out = apply_circuit(circ, [math.pi], np.diag([1.0, 0.0]))
        assert np.allclose(out.matrix, np.diag([0.0, 1.0]), atol=1e-12)

    def test_reset_plus_state(self):
        circ = ParameterizedCircuit(1, (Gate("RESET", (0,)),))
        plus = np.full((2, 2), 0.5)
        out = apply_circuit(circ, [], plus)
        assert np.allclose(out.matrix, np.diag([1.0, 0.0]), atol=1e-12)

    def test_cnot_flips_target(self):
        circ = ParameterizedCircuit(2, (Gate("CNOT", (0, 1)),))
        rho = np.zeros((4, 4))
        rho[2, 2] = 1.0  # |10>
        out = apply_circuit(circ, [], rho)
        assert out.matrix[3, 3] == pytest.approx(1.0)

    def test_wrong_parameter_count(self):
        circ = ParameterizedCircuit(1, (Gate("RY", (0,), 0),))
        with pytest.raises(ValueError, match="parameters"):
            apply_circuit(circ, [0.1, 0.2], np.eye(2) / 2)

    def test_matches_brute_force_conjugation(self, rng):
        # the contraction simulator against U rho U^dag built by embedding
        for n in (2, 3, 4):
            circ = random_unitary_circuit(rng, n, 12)
            theta = rng.uniform(0, 2 * math.pi, circ.n_params)
            rho = random_density(rng, n)
            u = circuit_unitary(circ, theta)
            assert np.allclose(u @ u.conj().T, np.eye(2**n), atol=1e-10)
            expected = u @ rho @ u.conj().T
            got = apply_circuit(circ, theta, rho).matrix
            assert np.max(np.abs(got - expected)) < 1e-10

    def test_unitary_gates_preserve_purity(self, rng):
        circ = random_unitary_circuit(rng, 3, 10)
        theta = rng.uniform(0, 2 * math.pi, circ.n_params)
        rho = random_density(rng, 3, rank=2)
        before = np.trace(rho @ rho).real
        after_m = apply_circuit(circ, theta, rho).matrix
        after = np.trace(after_m @ after_m).real
        assert after == pytest.approx(before, abs=1e-10)

    def test_cptp_with_resets_on_random_inputs(self, rng):
        gates = (
            Gate("RY", (0,), 0),
            Gate("CNOT", (0, 1)),
            Gate("RESET", (1,)),
            Gate("CSWAP", (0, 1, 2)),
            Gate("HGATE", (2,)),
            Gate("RESET", (0,)),
            Gate("CZ", (1, 2)),
        )
        circ = ParameterizedCircuit(3, gates)
        for _ in range(10):
            rho = random_density(rng, 3)
            out = apply_circuit(circ, rng.uniform(0, 2 * math.pi, 1), rho)
            out.validate()  # Hermitian, unit trace, PSD

    def test_reset_discards_correlations(self, rng):
        circ = ParameterizedCircuit(2, (Gate("RESET", (0,)),))
        rho = random_density(rng, 2)
        out = apply_circuit(circ, [], rho)
        marginal = partial_trace(DensityMatrix(rho), {1}).matrix
        expected = np.kron(np.diag([1.0, 0.0]), marginal)
        assert np.max(np.abs(out.matrix - expected)) < 1e-10


class TestOutputState:
    def test_zero_angles_give_all_zeros(self):
        layout = RegisterLayout(1, 5)
        circ = build_ansatz("ising6", layout)
        rho = output_state(circ, np.zeros(6), layout).matrix
        assert rho[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_single_parameter_closed_form(self, rng):
        # cos^2(t/2)|0..0><0..0| + sin^2(t/2)|1..1><1..1| for any system size
        for n_system in range(2, 7):
            layout = RegisterLayout(1, n_system)
            circ = build_ansatz("ising1", layout)
            for _ in range(4):
                t = float(rng.uniform(0, 2 * math.pi))
                rho = output_state(circ, [t], layout).matrix
                expected = np.zeros_like(rho)
                expected[0, 0] = math.cos(t / 2) ** 2
                expected[-1, -1] = math.sin(t / 2) ** 2
                assert np.max(np.abs(rho - expected)) < 1e-12

    def test_half_angle_purity(self):
        layout = RegisterLayout(1, 5)
        circ = build_ansatz("ising1", layout)
        rho = output_state(circ, [math.pi / 2], layout).matrix
        assert np.trace(rho @ rho).real == pytest.approx(0.5, abs=1e-12)

    def test_layout_mismatch_rejected(self):
        layout = RegisterLayout(1, 5)
        circ = build_ansatz("ising6", layout)
        with pytest.raises(ValueError):
            output_state(circ, np.zeros(6), RegisterLayout(1, 4))


class TestAnsatzStructure:
    def test_ising6_counts(self):
        circ = ising_rotation_ansatz(RegisterLayout(1, 5))
        assert circ.n_params == 6
        kinds = [g.kind for g in circ.gates]
        assert kinds.count("RY") == 6 and kinds.count("CNOT") == 5

    def test_xy_parameter_counts(self):
        assert xy_ring_ansatz(RegisterLayout(1, 5), 4).n_params == 30
        assert xy_ring_ansatz(RegisterLayout(1, 5), 3).n_params == 24
        assert xy_ring_ansatz(RegisterLayout(3, 3), 8).n_params == 54

    def test_single_param_ansatz(self):
        circ = ising_single_parameter_ansatz(RegisterLayout(1, 4))
        assert circ.n_params == 1
        assert [g.kind for g in circ.gates].count("CNOT") == 4

    def test_family_lookup(self):
        layout = RegisterLayout(1, 5)
        assert build_ansatz("ising6", layout).n_params == 6
        assert build_ansatz("ising1", layout).n_params == 1
        assert build_ansatz("xy", layout, 4).n_params == 30
        with pytest.raises(ValueError, match="unknown ansatz"):
            build_ansatz("nope", layout)
        with pytest.raises(ValueError, match="depth"):
            build_ansatz("xy", layout)


class TestBatchedStates:
    def test_matches_single_runs(self, rng):
        layout = RegisterLayout(1, 3)
        circ = build_ansatz("xy", layout, 2)
        theta = rng.uniform(0, 2 * math.pi, circ.n_params)
        gate_ids = [i for i, g in enumerate(circ.gates) if g.kind == "RY"]
        variations = [None] + [[(gi, 0.3)] for gi in gate_ids[:5]]
        batch = batched_system_states(circ, theta, layout, variations)
        base = output_state(circ, theta, layout).matrix
        assert np.max(np.abs(batch[0] - base)) < 1e-12
        for row, gi in enumerate(gate_ids[:5], start=1):
            shifted = theta.copy()
            shifted[circ.gates[gi].param_index] += 0.3
            expected = output_state(circ, shifted, layout).matrix
            assert np.max(np.abs(batch[row] - expected)) < 1e-12

    def test_rejects_reset(self):
        circ = ParameterizedCircuit(2, (Gate("RESET", (0,)),))
        with pytest.raises(ValueError, match="reset-free"):
            batched_system_states(circ, [], RegisterLayout(1, 1), [None])

    def test_multi_gate_variation(self, rng):
        # one parameter driving two gates: shifting both must equal a theta shift
        gates = (Gate("RY", (0,), 0), Gate("CNOT", (0, 1)), Gate("RY", (1,), 0))
        circ = ParameterizedCircuit(2, gates)
        layout = RegisterLayout(1, 1)
        theta = np.array([0.8])
        batch = batched_system_states(circ, theta, layout, [[(0, 0.2), (2, 0.2)]])
        expected = output_state(circ, theta + 0.2, layout).matrix
        assert np.max(np.abs(batch[0] - expected)) < 1e-12


class TestFactorState:
    def test_roundtrip_from_density(self, rng):
        rho = random_density(rng, 2, rank=3)
        fac = FactorState.from_density(rho)
        assert np.max(np.abs(fac.density() - rho)) < 1e-12

    def test_reduced_matches_partial_trace(self, rng):
        rho = random_density(rng, 3)
        fac = FactorState.from_density(rho)
        expected = partial_trace(DensityMatrix(rho), {0, 2}).matrix
        assert np.max(np.abs(fac.reduced([0, 2]) - expected)) < 1e-12

    def test_diagonal(self, rng):
        rho = random_density(rng, 2)
        fac = FactorState.from_density(rho)
        assert np.allclose(fac.diagonal(), np.diag(rho).real, atol=1e-12)

    def test_ry_matrix_convention(self):
        # exp(-i t Y / 2): column |0> maps to cos(t/2)|0> + sin(t/2)|1>
        m = ry_matrix(0.6)
        assert m[0, 0] == pytest.approx(math.cos(0.3))
        assert m[1, 0] == pytest.approx(math.sin(0.3))
