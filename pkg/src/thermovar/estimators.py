"""Exact and shot-sampled estimation of the loss ingredients.

Three quantities feed the loss: the energy tr(H rho), the purity tr(rho^2)
via the ancilla-free swap test, and higher overlaps tr(rho^k) via a
Hadamard-test circuit that reuses one register through mid-circuit resets.
Sampled estimators draw measurement outcomes from the exact simulated
distribution; the seed fully determines the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import (
    FactorState,
    ParameterizedCircuit,
    RegisterLayout,
    gate_matrix,
    output_state,
)

_CNOT = gate_matrix("CNOT")
_HADAMARD = gate_matrix("HGATE")
_CSWAP = gate_matrix("CSWAP")
from .hamiltonians import PauliHamiltonian, energy_expectation, pauli_string_matrix
from .states import as_matrix, overlap_exact


@dataclass(frozen=True)
class ShotConfig:
    shots: int
    seed: int = 0

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be at least 1")


@dataclass(frozen=True)
class EstimateResult:
    value: float
    std_error: float
    mode: str

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "exact" and self.std_error != 0.0:
            raise ValueError("exact estimates carry no standard error")


def _pm_from_binomial(p_plus: float, cfg: ShotConfig, rng: np.random.Generator) -> EstimateResult:
    """Sample ``shots`` outcomes valued +-1 with P(+1) = p_plus."""
    p = min(max(p_plus, 0.0), 1.0)
    hits = rng.binomial(cfg.shots, p)
    mean = 2.0 * hits / cfg.shots - 1.0
    return EstimateResult(
        value=float(mean),
        std_error=float(np.sqrt(max(1.0 - mean**2, 0.0) / cfg.shots)),
        mode="sampled",
    )


def estimate_energy(h: PauliHamiltonian, rho, cfg: ShotConfig | None = None) -> EstimateResult:
    """tr(H rho), exactly or from per-term eigenbasis sampling.

    Each Pauli term gets its own ``cfg.shots`` independent +-1 outcomes; terms
    are never grouped. The estimator mean equals tr(H rho).
    """
    mat = as_matrix(rho)
    if cfg is None:
        return EstimateResult(energy_expectation(h, rho), 0.0, "exact")
    rng = np.random.default_rng(cfg.seed)
    value = 0.0
    variance = 0.0
    for term in h.terms:
        if set(term.letters) == {"I"}:
            value += term.coefficient
            continue
        mu = float(np.einsum("ij,ji->", pauli_string_matrix(term.letters), mat).real)
        est = _pm_from_binomial((1.0 + mu) / 2.0, cfg, rng)
        value += term.coefficient * est.value
        variance += term.coefficient**2 * max(1.0 - est.value**2, 0.0)
    return EstimateResult(float(value), float(np.sqrt(variance / cfg.shots)), "sampled")


# ---------------------------------------------------------------------------
# destructive swap test

def swap_test_distribution(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Outcome probabilities and +-1 parity values of the swap-test circuit.

    The circuit holds rho on the first n qubits and sigma on the next n,
    applies a CNOT from every rho qubit to its sigma partner, a Hadamard on
    each rho qubit, and measures everything. A shot with bits (a, b) is worth
    (-1)^(a.b); the mean of that parity equals tr(rho sigma).
    """
    r = as_matrix(rho)
    s = as_matrix(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {s.shape}")
    state = FactorState.from_density(r).tensor(FactorState.from_density(s))
    n = state.n_qubits // 2
    for i in range(n):
        state.apply_matrix(_CNOT, (i, n + i))
    for i in range(n):
        state.apply_matrix(_HADAMARD, (i,))
    probs = state.diagonal()
    outcomes = np.arange(probs.size, dtype=np.uint64)
    a = outcomes >> np.uint64(n)
    b = outcomes & np.uint64(2**n - 1)
    parity = np.bitwise_count(a & b).astype(np.int64) & 1
    return probs, 1.0 - 2.0 * parity


def swap_test_parity_expectation(rho, sigma) -> float:
    """Exact expectation of the swap-test parity; equals tr(rho sigma)."""
    probs, values = swap_test_distribution(rho, sigma)
    return float(probs @ values)


def destructive_swap_overlap(rho, sigma, cfg: ShotConfig | None = None) -> EstimateResult:
    """tr(rho sigma), exactly or by sampling the swap-test circuit."""
    r = as_matrix(rho)
    s = as_matrix(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {s.shape}")
    if cfg is None:
        return EstimateResult(float(np.einsum("ij,ji->", r, s).real), 0.0, "exact")
    probs, values = swap_test_distribution(r, s)
    probs = np.maximum(probs, 0.0)
    probs /= probs.sum()
    counts = np.random.default_rng(cfg.seed).multinomial(cfg.shots, probs)
    mean = float(counts @ values / cfg.shots)
    return EstimateResult(
        mean, float(np.sqrt(max(1.0 - mean**2, 0.0) / cfg.shots)), "sampled"
    )


# ---------------------------------------------------------------------------
# qubit-efficient higher-order overlaps

def _cyclic_ancilla_distribution(states: Sequence) -> float:
    """<Z> on the work ancilla of the reset-based overlap circuit.

    Registers are [ancilla | accumulator slot | fresh slot]. The ancilla is
    put in |+>, the first two preparations fill the slots, and each round
    applies an ancilla-controlled register SWAP (one CSWAP per qubit pair);
    afterwards the fresh slot is reset and reprepared for the next round.
    After a final Hadamard, <Z_ancilla> = Re tr of the product of the
    prepared states; with k equal preparations that is tr(rho^k).
    """
    if len(states) < 2:
        raise ValueError("need at least two preparations")
    factors = [FactorState.from_density(s) for s in states]
    nb = factors[0].n_qubits
    if any(f.n_qubits != nb for f in factors):
        raise ValueError("all prepared states must have the same qubit count")
    ancilla = FactorState.computational_basis(1)
    ancilla.apply_matrix(_HADAMARD, (0,))
    state = ancilla.tensor(factors[1]).tensor(factors[0])
    k = len(states)
    for step in range(k - 1):
        if step > 0:
            state = state.discard_trailing(nb).tensor(factors[step + 1])
        for i in range(nb):
            state.apply_matrix(_CSWAP, (0, 1 + i, 1 + nb + i))
    state.apply_matrix(_HADAMARD, (0,))
    probs = state.diagonal().reshape(2, -1).sum(axis=1)
    return float(probs[0] - probs[1])


def cyclic_overlap_expectation(states: Sequence) -> float:
    """Circuit-level exact value of the reset-based overlap estimator."""
    return _cyclic_ancilla_distribution(states)


def cyclic_overlap_estimate(states: Sequence, cfg: ShotConfig | None = None) -> EstimateResult:
    """Overlap of the prepared states via the reset circuit, exact or sampled."""
    if cfg is None:
        return EstimateResult(cyclic_overlap_expectation(states), 0.0, "exact")
    mean = cyclic_overlap_expectation(states)
    rng = np.random.default_rng(cfg.seed)
    return _pm_from_binomial((1.0 + mean) / 2.0, cfg, rng)


def higher_order_overlap(
    circ: ParameterizedCircuit,
    theta,
    layout: RegisterLayout,
    k: int,
    cfg: ShotConfig | None = None,
) -> EstimateResult:
    """tr(rho^k) for the circuit's system-register output state.

    Exact mode multiplies matrix powers; sampled mode measures the ancilla of
    the reset-based circuit, whose exact expectation equals tr(rho^k).
    """
    if k < 2:
        raise ValueError("overlap order k must be at least 2")
    rho = output_state(circ, theta, layout)
    if cfg is None:
        return EstimateResult(overlap_exact([rho] * k), 0.0, "exact")
    return cyclic_overlap_estimate([rho] * k, cfg)
