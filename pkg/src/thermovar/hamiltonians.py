"""Pauli-string Hamiltonians, the two benchmark spin chains, and the Gibbs oracle."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .states import DensityMatrix, as_matrix

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Dense eigendecomposition guard; beyond this the matrices no longer fit in RAM.
MAX_DENSE_QUBITS = 14

GAP_DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class PauliString:
    """One weighted tensor product of Pauli letters, e.g. -1.0 * "ZZIII"."""

    coefficient: float
    letters: str

    def __post_init__(self):
        bad = set(self.letters) - set("IXYZ")
        if bad:
            raise ValueError(f"unknown Pauli letters {bad!r}")


@dataclass(frozen=True)
class PauliHamiltonian:
    n_qubits: int
    terms: tuple[PauliString, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if len(t.letters) != self.n_qubits:
                raise ValueError(
                    f"term {t.letters!r} has {len(t.letters)} letters, expected {self.n_qubits}"
                )


def _string_with(n: int, assignments: dict[int, str]) -> str:
    letters = ["I"] * n
    for q, p in assignments.items():
        letters[q] = p
    return "".join(letters)


def ising_chain(chain_length: int) -> PauliHamiltonian:
    """Periodic -ZZ chain: one term per bond, the last bond wrapping around."""
    if chain_length < 2:
        raise ValueError("chain length must be at least 2")
    terms = []
    for i in range(chain_length):
        j = (i + 1) % chain_length
        terms.append(PauliString(-1.0, _string_with(chain_length, {i: "Z", j: "Z"})))
    return PauliHamiltonian(chain_length, tuple(terms))


def xy_chain(chain_length: int) -> PauliHamiltonian:
    """Periodic -(XX + YY) chain, 2L terms.

    The sum is expanded literally, so at L = 2 the single edge appears twice
    and the coupling is doubled.
    """
    if chain_length < 2:
        raise ValueError("chain length must be at least 2")
    terms = []
    for i in range(chain_length):
        j = (i + 1) % chain_length
        terms.append(PauliString(-1.0, _string_with(chain_length, {i: "X", j: "X"})))
        terms.append(PauliString(-1.0, _string_with(chain_length, {i: "Y", j: "Y"})))
    return PauliHamiltonian(chain_length, tuple(terms))


def pauli_string_matrix(letters: str) -> np.ndarray:
    mat = np.array([[1.0 + 0j]])
    for letter in letters:
        mat = np.kron(mat, PAULI[letter])
    return mat


@functools.lru_cache(maxsize=64)
def _dense(h: PauliHamiltonian) -> np.ndarray:
    dim = 2**h.n_qubits
    total = np.zeros((dim, dim), dtype=complex)
    for term in h.terms:
        total += term.coefficient * pauli_string_matrix(term.letters)
    total.setflags(write=False)
    return total


def to_dense(h: PauliHamiltonian) -> np.ndarray:
    """Dense matrix sum of the weighted Pauli strings."""
    return _dense(h).copy()


def spectrum(h: PauliHamiltonian) -> np.ndarray:
    """Ascending eigenvalues (length 2^n)."""
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"{h.n_qubits} qubits exceeds the dense guard of {MAX_DENSE_QUBITS}")
    return np.linalg.eigvalsh(_dense(h))


def spectral_gap(h: PauliHamiltonian) -> float:
    """Second-smallest distinct eigenvalue minus the smallest."""
    eig = spectrum(h)
    above = eig[eig > eig[0] + GAP_DEGENERACY_TOL]
    if above.size == 0:
        raise ValueError("spectrum is fully degenerate, gap undefined")
    return float(above[0] - eig[0])


def gibbs_state(h: PauliHamiltonian, beta: float) -> DensityMatrix:
    """Thermal state exp(-beta H) / Z at inverse temperature ``beta``.

    The ground energy is subtracted before exponentiating, so large beta
    (e.g. 50) does not overflow. beta = 0 gives the maximally mixed state.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    w, v = np.linalg.eigh(_dense(h))
    weights = np.exp(-beta * (w - w[0]))
    weights /= weights.sum()
    return DensityMatrix((v * weights) @ v.conj().T, check=False)


def energy_expectation(h: PauliHamiltonian, rho) -> float:
    """Real part of tr(H rho); raises if the imaginary part exceeds 1e-9."""
    mat = as_matrix(rho)
    dense = _dense(h)
    if mat.shape != dense.shape:
        raise ValueError(f"dimension mismatch: state {mat.shape} vs Hamiltonian {dense.shape}")
    val = complex(np.einsum("ij,ji->", dense, mat))
    if abs(val.imag) > 1e-9:
        raise ValueError(f"energy expectation has imaginary part {val.imag:.3e}")
    return float(val.real)
