"""Parameterized circuits and an exact density-matrix simulator.

The simulator keeps the state in factored form rho = A A^dag and applies every
gate to the columns of A. Unitary gates act locally on the row index, RESET is
the Kraus pair |0><0|, |0><1| (which stacks columns), so arbitrary mixed
inputs and mid-circuit resets run through one CPTP-safe code path. Dense
density matrices are only formed at the boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .states import DensityMatrix, as_matrix

GATE_ARITY = {"RY": 1, "HGATE": 1, "RESET": 1, "CNOT": 2, "CZ": 2, "CSWAP": 3}

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
# control first, then the two swapped qubits
_CSWAP = np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 6, 5, 7]]

# Columns of a factor whose squared norm falls below this are dropped.
_COLUMN_PRUNE = 1e-15


def ry_matrix(angle: float) -> np.ndarray:
    """exp(-i angle Y / 2)."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def gate_matrix(kind: str, angle: float | None = None) -> np.ndarray:
    if kind == "RY":
        if angle is None:
            raise ValueError("RY needs an angle")
        return ry_matrix(angle)
    return {"HGATE": _H, "CNOT": _CNOT, "CZ": _CZ, "CSWAP": _CSWAP}[kind]


@dataclass(frozen=True)
class Gate:
    """One gate: kind, target qubits (control first for CNOT/CZ/CSWAP),
    and the parameter-vector index for RY gates."""

    kind: str
    targets: tuple[int, ...]
    param_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != GATE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {GATE_ARITY[self.kind]} targets")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("gate targets must be distinct")
        if (self.param_index is not None) != (self.kind == "RY"):
            raise ValueError("param_index is present exactly for RY gates")


@dataclass(frozen=True)
class ParameterizedCircuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int = field(default=-1)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.targets) >= self.n_qubits or min(g.targets) < 0:
                raise ValueError(f"gate {g} out of range for {self.n_qubits} qubits")
        indices = {g.param_index for g in self.gates if g.param_index is not None}
        n_params = len(indices)
        if indices != set(range(n_params)):
            raise ValueError("param_index values must form a contiguous range from 0")
        object.__setattr__(self, "n_params", n_params)


@dataclass(frozen=True)
class RegisterLayout:
    """Ancilla register A on qubits [0, n_ancilla), system B after it."""

    n_ancilla: int
    n_system: int

    def __post_init__(self):
        if self.n_ancilla < 0 or self.n_system < 1:
            raise ValueError("need n_ancilla >= 0 and n_system >= 1")

    @property
    def n_total(self) -> int:
        return self.n_ancilla + self.n_system

    @property
    def system_qubits(self) -> range:
        return range(self.n_ancilla, self.n_total)


# ---------------------------------------------------------------------------
# column-wise gate application

_EINSUM = {
    1: "xy,ayb->axb",
    2: "xyuv,aubvc->axbyc",
    3: "xyzuvw,aubvcwd->axbyczd",
}


def _sorted_gate(mat: np.ndarray, targets: Sequence[int]) -> tuple[np.ndarray, list[int]]:
    order = sorted(range(len(targets)), key=lambda i: targets[i])
    if order == list(range(len(targets))):
        return mat, list(targets)
    k = len(targets)
    perm = order + [k + i for i in order]
    mat = mat.reshape((2,) * (2 * k)).transpose(perm).reshape(2**k, 2**k)
    return mat, [targets[i] for i in order]


def apply_matrix_columns(
    arr: np.ndarray, n_qubits: int, mat: np.ndarray, targets: Sequence[int]
) -> np.ndarray:
    """Apply a k-qubit operator to the row index of a (2^n, m) array."""
    mat, qs = _sorted_gate(mat, targets)
    k = len(qs)
    shape = []
    prev = -1
    for q in qs:
        shape.extend([2 ** (q - prev - 1), 2])
        prev = q
    shape.append(-1)
    out = np.einsum(
        _EINSUM[k], mat.reshape((2,) * (2 * k)), arr.reshape(shape), optimize=True
    )
    return out.reshape(arr.shape)


def reset_columns(arr: np.ndarray, n_qubits: int, qubit: int) -> np.ndarray:
    """Kraus reset of one qubit to |0>; the column count doubles, then prunes."""
    m = arr.shape[1]
    t = arr.reshape(2**qubit, 2, -1, m)
    out = np.zeros((2**qubit, 2, t.shape[2], 2 * m), dtype=complex)
    out[:, 0, :, :m] = t[:, 0]
    out[:, 0, :, m:] = t[:, 1]
    out = out.reshape(arr.shape[0], 2 * m)
    norms = np.einsum("ij,ij->j", out.real, out.real) + np.einsum(
        "ij,ij->j", out.imag, out.imag
    )
    keep = norms > _COLUMN_PRUNE
    if not keep.any():
        keep[0] = True
    return out[:, keep]


class FactorState:
    """Exact factored density matrix rho = A A^dag on ``n_qubits``."""

    __slots__ = ("n_qubits", "array")

    def __init__(self, n_qubits: int, array: np.ndarray):
        self.n_qubits = n_qubits
        self.array = array

    @classmethod
    def computational_basis(cls, n_qubits: int, index: int = 0) -> "FactorState":
        arr = np.zeros((2**n_qubits, 1), dtype=complex)
        arr[index, 0] = 1.0
        return cls(n_qubits, arr)

    @classmethod
    def from_density(cls, state) -> "FactorState":
        rho = as_matrix(state)
        n = int(round(math.log2(rho.shape[0])))
        w, v = np.linalg.eigh(rho)
        w = np.maximum(w, 0.0)
        keep = w > _COLUMN_PRUNE
        if not keep.any():
            keep[-1] = True
        return cls(n, v[:, keep] * np.sqrt(w[keep]))

    def apply_gate(self, gate: Gate, angle: float | None = None) -> None:
        if gate.kind == "RESET":
            self.array = reset_columns(self.array, self.n_qubits, gate.targets[0])
            if self.array.shape[1] > self.array.shape[0]:
                self._compress()
        else:
            mat = gate_matrix(gate.kind, angle)
            self.array = apply_matrix_columns(self.array, self.n_qubits, mat, gate.targets)

    def apply_matrix(self, mat: np.ndarray, targets: Sequence[int]) -> None:
        self.array = apply_matrix_columns(self.array, self.n_qubits, mat, targets)

    def _compress(self) -> None:
        w, v = np.linalg.eigh(self.array @ self.array.conj().T)
        w = np.maximum(w, 0.0)
        keep = w > _COLUMN_PRUNE
        if not keep.any():
            keep[-1] = True
        self.array = v[:, keep] * np.sqrt(w[keep])

    def tensor(self, other: "FactorState") -> "FactorState":
        return FactorState(self.n_qubits + other.n_qubits, np.kron(self.array, other.array))

    def discard_trailing(self, n_drop: int) -> "FactorState":
        """Trace out the trailing ``n_drop`` qubits and refactor."""
        n_keep = self.n_qubits - n_drop
        b = self.array.reshape(2**n_keep, -1)
        reduced = FactorState(n_keep, b)
        reduced._compress()
        return reduced

    def density(self) -> np.ndarray:
        return self.array @ self.array.conj().T

    def reduced(self, keep: Sequence[int]) -> np.ndarray:
        """Density matrix of the kept qubits (ascending order)."""
        keep = sorted(keep)
        n, m = self.n_qubits, self.array.shape[1]
        tensor = self.array.reshape((2,) * n + (m,))
        drop = [q for q in range(n) if q not in keep]
        tensor = np.moveaxis(tensor, keep, range(len(keep)))
        b = np.ascontiguousarray(tensor).reshape(2 ** len(keep), -1)
        return b @ b.conj().T

    def diagonal(self) -> np.ndarray:
        """Measurement probabilities in the computational basis."""
        return np.einsum("ij,ij->i", self.array.real, self.array.real) + np.einsum(
            "ij,ij->i", self.array.imag, self.array.imag
        )


# ---------------------------------------------------------------------------
# circuit execution

def resolve_angles(circ: ParameterizedCircuit, theta: Sequence[float]) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circ.n_params,):
        raise ValueError(f"expected {circ.n_params} parameters, got shape {theta.shape}")
    angles = np.full(len(circ.gates), np.nan)
    for i, g in enumerate(circ.gates):
        if g.param_index is not None:
            angles[i] = theta[g.param_index]
    return angles


def _run_factor(
    circ: ParameterizedCircuit, angles: np.ndarray, state: FactorState
) -> FactorState:
    for g, angle in zip(circ.gates, angles):
        state.apply_gate(g, None if math.isnan(angle) else angle)
    return state


def apply_circuit(circ: ParameterizedCircuit, theta: Sequence[float], state) -> DensityMatrix:
    """Run the circuit on a density matrix; the output is a valid DensityMatrix."""
    rho = as_matrix(state)
    if rho.shape[0] != 2**circ.n_qubits:
        raise ValueError(
            f"state dimension {rho.shape[0]} does not match {circ.n_qubits} qubits"
        )
    angles = resolve_angles(circ, theta)
    factor = _run_factor(circ, angles, FactorState.from_density(rho))
    return DensityMatrix(factor.density()).validate()


def output_state(
    circ: ParameterizedCircuit, theta: Sequence[float], layout: RegisterLayout
) -> DensityMatrix:
    """Run from |0...0>, trace out the ancilla register, return the system state."""
    if circ.n_qubits != layout.n_total:
        raise ValueError(
            f"circuit has {circ.n_qubits} qubits, layout expects {layout.n_total}"
        )
    angles = resolve_angles(circ, theta)
    factor = _run_factor(circ, angles, FactorState.computational_basis(circ.n_qubits))
    return DensityMatrix(factor.reduced(layout.system_qubits)).validate()


def embedded_gate_matrix(mat: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """Full-space matrix of a k-qubit gate, built by explicit index arithmetic.

    Deliberately independent of the contraction-based simulator; this is the
    brute-force reference used to cross-check it.
    """
    dim = 2**n_qubits
    k = len(targets)
    full = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        bits = [(i >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        row_sub = 0
        for q in targets:
            row_sub = row_sub * 2 + bits[q]
        for col_sub in range(2**k):
            val = mat[row_sub, col_sub]
            if val == 0:
                continue
            new_bits = list(bits)
            t = col_sub
            for q in reversed(targets):
                new_bits[q] = t & 1
                t >>= 1
            j = 0
            for b in new_bits:
                j = j * 2 + b
            full[i, j] += val
    return full


def circuit_unitary(circ: ParameterizedCircuit, theta: Sequence[float]) -> np.ndarray:
    """Dense unitary of a reset-free circuit (brute-force reference path)."""
    angles = resolve_angles(circ, theta)
    dim = 2**circ.n_qubits
    total = np.eye(dim, dtype=complex)
    for g, angle in zip(circ.gates, angles):
        if g.kind == "RESET":
            raise ValueError("circuit_unitary is undefined for circuits with RESET")
        mat = gate_matrix(g.kind, None if math.isnan(angle) else angle)
        total = embedded_gate_matrix(mat, g.targets, circ.n_qubits) @ total
    return total


Variation = Sequence[tuple[int, float]] | None


def batched_system_states(
    circ: ParameterizedCircuit,
    theta: Sequence[float],
    layout: RegisterLayout,
    variations: Sequence[Variation],
) -> np.ndarray:
    """System-register density matrices for many single-run variations at once.

    Each variation is None (the base angles) or a list of (gate_index, delta)
    pairs adding delta to that gate's angle. All runs share the gate sequence,
    so the whole batch advances through the circuit together; a varied RY gate
    is fixed up by one extra rotation on the affected column, exact because
    RY(a + d) = RY(d) RY(a). Requires a reset-free circuit.
    """
    if circ.n_qubits != layout.n_total:
        raise ValueError("layout does not match circuit size")
    angles = resolve_angles(circ, theta)
    fixups: dict[int, list[tuple[int, float]]] = {}
    for col, var in enumerate(variations):
        for gate_index, delta in var or ():
            if circ.gates[gate_index].kind != "RY":
                raise ValueError("only RY gates can be varied")
            fixups.setdefault(gate_index, []).append((col, delta))

    n = circ.n_qubits
    arr = np.zeros((2**n, len(variations)), dtype=complex)
    arr[0, :] = 1.0
    for i, (g, angle) in enumerate(zip(circ.gates, angles)):
        if g.kind == "RESET":
            raise ValueError("batched evaluation requires a reset-free circuit")
        arr = apply_matrix_columns(
            arr, n, gate_matrix(g.kind, None if math.isnan(angle) else angle), g.targets
        )
        for col, delta in fixups.get(i, ()):
            arr[:, col : col + 1] = apply_matrix_columns(
                arr[:, col : col + 1], n, ry_matrix(delta), g.targets
            )
    block = arr.reshape(2**layout.n_ancilla, 2**layout.n_system, len(variations))
    return np.einsum("aib,ajb->bij", block, block.conj(), optimize=True)


# ---------------------------------------------------------------------------
# ansatz families

def ising_rotation_ansatz(layout: RegisterLayout) -> ParameterizedCircuit:
    """One RY per qubit, then a CNOT cascade from the ancilla down the chain.

    At n_system = 5 this is the six-parameter circuit used for the Ising runs;
    other chain lengths get n_system + 1 parameters the same way.
    """
    if layout.n_ancilla != 1 or layout.n_system < 2:
        raise ValueError("ising ansatz uses one ancilla and at least two system qubits")
    n = layout.n_total
    gates = [Gate("RY", (q,), q) for q in range(n)]
    gates += [Gate("CNOT", (q, q + 1)) for q in range(n - 1)]
    return ParameterizedCircuit(n, tuple(gates))


def ising_single_parameter_ansatz(layout: RegisterLayout) -> ParameterizedCircuit:
    """A single RY on the ancilla whose bit is copied through the system register."""
    if layout.n_ancilla != 1 or layout.n_system < 2:
        raise ValueError("ising ansatz uses one ancilla and at least two system qubits")
    n = layout.n_total
    gates = [Gate("RY", (0,), 0)]
    gates += [Gate("CNOT", (q, q + 1)) for q in range(n - 1)]
    return ParameterizedCircuit(n, tuple(gates))


def xy_ring_ansatz(layout: RegisterLayout, depth: int) -> ParameterizedCircuit:
    """Initial RY layer, then ``depth`` blocks of [two CNOT rings, RY layer].

    Total parameter count is (n_ancilla + n_system) * (depth + 1). The ring
    runs CNOTs down all adjacent pairs and wraps around; doubling it per block
    is what makes depth 4 expressive enough for the reported fidelities.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    n = layout.n_total
    gates = [Gate("RY", (q,), q) for q in range(n)]
    p = n
    ring = [(q, q + 1) for q in range(n - 1)] + [(n - 1, 0)]
    for _ in range(depth):
        for c, t in ring + ring:
            gates.append(Gate("CNOT", (c, t)))
        for q in range(n):
            gates.append(Gate("RY", (q,), p))
            p += 1
    return ParameterizedCircuit(n, tuple(gates))


ANSATZ_FAMILIES = ("ising6", "ising1", "xy")


def build_ansatz(
    family: str, layout: RegisterLayout, depth: int | None = None
) -> ParameterizedCircuit:
    """Ansatz lookup by the string ids used on the command line."""
    if family == "ising6":
        return ising_rotation_ansatz(layout)
    if family == "ising1":
        return ising_single_parameter_ansatz(layout)
    if family == "xy":
        if depth is None:
            raise ValueError("the xy family needs a depth")
        return xy_ring_ansatz(layout, depth)
    raise ValueError(f"unknown ansatz family {family!r}; known: {ANSATZ_FAMILIES}")
