"""Truncated entropy, free-energy losses, and the analytic accuracy bounds."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .hamiltonians import PauliHamiltonian, energy_expectation
from .states import as_matrix, state_rank, von_neumann_entropy

E_INV = math.exp(-1.0)


@dataclass(frozen=True)
class TruncationCoefficients:
    """Order K and the K+1 coefficients of the polynomial entropy surrogate."""

    order: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.order < 1 or self.values.shape != (self.order + 1,):
            raise ValueError("need order >= 1 and order + 1 coefficients")


def truncation_coefficients(order: int) -> TruncationCoefficients:
    """Coefficients C_0..C_K of the order-K entropy surrogate.

    C_0 is the harmonic number H_K, C_j = sum_{k=j}^{K} binom(k, j) (-1)^j / k,
    and C_K reduces to (-1)^K / K.
    """
    if order < 1:
        raise ValueError("truncation order must be >= 1")
    values = [sum(1.0 / k for k in range(1, order + 1))]
    for j in range(1, order + 1):
        values.append(sum(math.comb(k, j) * (-1) ** j / k for k in range(j, order + 1)))
    return TruncationCoefficients(order, np.array(values))


def power_traces(rho, order: int) -> np.ndarray:
    """[tr(rho), tr(rho^2), ..., tr(rho^{order+1})] by repeated multiplication."""
    mat = as_matrix(rho)
    traces = np.empty(order + 1)
    power = mat
    traces[0] = np.trace(power).real
    for j in range(1, order + 1):
        power = power @ mat
        traces[j] = np.trace(power).real
    return traces


def truncated_entropy(rho, order: int) -> float:
    """Order-K polynomial entropy sum_j C_j tr(rho^{j+1}), in nats."""
    coeff = truncation_coefficients(order)
    return float(coeff.values @ power_traces(rho, order))


def free_energy(h: PauliHamiltonian, rho, beta: float) -> float:
    """tr(H rho) - S(rho) / beta with the exact von Neumann entropy."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return energy_expectation(h, rho) - von_neumann_entropy(rho) / beta


def truncated_free_energy(h: PauliHamiltonian, rho, beta: float, order: int) -> float:
    """tr(H rho) - S_K(rho) / beta, the trainable surrogate of the free energy."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return energy_expectation(h, rho) - truncated_entropy(rho, order) / beta


@functools.lru_cache(maxsize=None)
def delta_star(order: int) -> float:
    """Largest split point in (0, 1/e) with -d ln d < (1-d)^(K+1) / (K+1).

    The two sides cross exactly once on (0, 1/e); bisection to 1e-12 finds the
    crossing and the result is nudged down until the strict inequality holds.
    """
    if order < 1:
        raise ValueError("truncation order must be >= 1")

    def margin(d: float) -> float:
        return (1.0 - d) ** (order + 1) / (order + 1) + d * math.log(d)

    hi = E_INV
    if margin(hi) > 0:
        return hi
    lo = 1e-300
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if margin(mid) > 0:
            lo = mid
        else:
            hi = mid
    value = lo
    while margin(value) <= 0:
        value -= 1e-12
    return value


def truncation_bound(order: int, rank: int, delta: float | None = None) -> float:
    """Upper bound r (1 - delta)^(K+1) / (K+1) on |S - S_K| for a rank-r state."""
    if rank < 1 or order < 1:
        raise ValueError("need rank >= 1 and order >= 1")
    if delta is None:
        delta = delta_star(order)
    return rank / (order + 1) * (1.0 - delta) ** (order + 1)


def fidelity_floor_from_relative_entropy(delta: float) -> float:
    """1 - sqrt(2 delta): fidelity floor when the relative entropy is <= delta.

    Chains F >= 1 - D with the Pinsker inequality in its D <= sqrt(2 S) form.
    The standard tighter form D <= sqrt(S / 2) would give 1 - sqrt(delta / 2);
    the weaker constant is kept so the downstream floors match the published
    expressions exactly.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return 1.0 - math.sqrt(2.0 * delta)


def trained_fidelity_floor(
    order: int, rank: int, beta: float, eps: float, delta: float | None = None
) -> float:
    """Fidelity floor 1 - sqrt(2 (beta eps + 2r (1-delta)^(K+1) / (K+1))).

    Guaranteed between an eps-suboptimal minimizer of the order-K loss and the
    exact Gibbs state. Negative values are returned as-is: the bound is then
    vacuous but still informative about the regime.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    inner = beta * eps + 2.0 * truncation_bound(order, rank, delta)
    return 1.0 - math.sqrt(2.0 * inner)


def half_mixture_fidelity_bound(dim: int, beta: float, gap: float) -> float:
    """Closed-form floor 1 / sqrt(1 + (N/2 - 1) e^(-beta gap)).

    Fidelity between the equal mixture of the two degenerate ground states and
    the Gibbs state of an N-dimensional system with spectral gap ``gap``.
    """
    if dim < 4 or (dim & (dim - 1)) != 0:
        raise ValueError("dim must be a power of two, at least 4")
    if beta <= 0 or gap <= 0:
        raise ValueError("beta and gap must be positive")
    return 1.0 / math.sqrt(1.0 + (dim / 2 - 1.0) * math.exp(-beta * gap))


@dataclass(frozen=True)
class BoundReport:
    """delta_star, truncation bound and fidelity floor for one (K, r, beta, eps)."""

    order: int
    rank: int
    beta: float
    eps: float
    delta_star: float
    truncation_bound: float
    fidelity_floor: float
    vacuous: bool

    def __post_init__(self):
        d = self.delta_star
        if not (0.0 < d < E_INV):
            raise ValueError("delta_star outside (0, 1/e)")
        if -d * math.log(d) >= (1.0 - d) ** (self.order + 1) / (self.order + 1):
            raise ValueError("delta_star violates its defining inequality")

    @classmethod
    def compute(cls, order: int, rank: int, beta: float, eps: float) -> "BoundReport":
        d = delta_star(order)
        floor = trained_fidelity_floor(order, rank, beta, eps)
        return cls(
            order=order,
            rank=rank,
            beta=beta,
            eps=eps,
            delta_star=d,
            truncation_bound=truncation_bound(order, rank),
            fidelity_floor=floor,
            vacuous=floor < 0.0,
        )


def rank_of(rho, cutoff: float = 1e-10) -> int:
    """Numerical rank used by the bounds (eigenvalues above ``cutoff``)."""
    return state_rank(rho, cutoff)
