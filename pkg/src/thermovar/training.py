"""Gradients, ADAM, and the variational training loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import estimators
from .circuits import ParameterizedCircuit, RegisterLayout, batched_system_states
from .hamiltonians import PauliHamiltonian, gibbs_state, to_dense
from .loss import truncation_coefficients
from .states import fidelity

TWO_PI = 2.0 * math.pi

GRADIENT_MODES = ("auto", "parameter_shift", "finite_difference")
LOSS_MODES = ("exact", "sampled")


@dataclass(frozen=True)
class TrainConfig:
    beta: float
    order: int = 2
    learning_rate: float = 0.1
    max_iters: int = 200
    tolerance: float = 1e-6
    init_seed: int = 0
    init_range: tuple[float, float] = (0.0, TWO_PI)
    gradient_mode: str = "auto"
    loss_mode: str = "exact"
    shots: int = 10_000
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.beta <= 0 or self.learning_rate <= 0 or self.tolerance <= 0:
            raise ValueError("beta, learning_rate and tolerance must be positive")
        if self.order < 1 or self.max_iters < 1:
            raise ValueError("order and max_iters must be at least 1")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}")

    def resolved_gradient_mode(self) -> str:
        if self.gradient_mode == "auto":
            return "parameter_shift" if self.order == 2 else "finite_difference"
        if self.gradient_mode == "parameter_shift" and self.order != 2:
            raise ValueError("the parameter-shift gradient is specialized to order 2")
        return self.gradient_mode


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def initial(cls, n_params: int) -> "AdamState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params))


def adam_step(
    state: AdamState, theta: np.ndarray, gradient: np.ndarray, learning_rate: float
) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected ADAM update; returns the new state and parameters."""
    if theta.shape != gradient.shape or theta.shape != state.m.shape:
        raise ValueError("parameter, gradient and moment shapes must agree")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * gradient
    v = state.beta2 * state.v + (1 - state.beta2) * gradient**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_theta = theta - learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(m=m, v=v, t=t, beta1=state.beta1, beta2=state.beta2, eps=state.eps)
    return new_state, new_theta


@dataclass
class TrainTrace:
    """Per-iteration loss, exact fidelity to the Gibbs state, and gradient max-norm."""

    iterations: np.ndarray
    losses: np.ndarray
    fidelities: np.ndarray
    grad_norms: np.ndarray
    theta: np.ndarray
    converged: bool

    @property
    def iterations_used(self) -> int:
        return int(self.iterations.size)

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1])

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelities[-1])

    def fidelity_by(self, iteration: int) -> float:
        """Fidelity recorded at ``iteration``, or the last one if stopped earlier."""
        idx = min(iteration, self.iterations_used) - 1
        return float(self.fidelities[idx])


def _param_gate_indices(circ: ParameterizedCircuit) -> list[list[int]]:
    gates: list[list[int]] = [[] for _ in range(circ.n_params)]
    for i, g in enumerate(circ.gates):
        if g.param_index is not None:
            gates[g.param_index].append(i)
    return gates


def _batched_losses(
    rhos: np.ndarray, h_dense: np.ndarray, beta: float, coeffs: np.ndarray
) -> np.ndarray:
    """Truncated free energy of a batch of system density matrices."""
    energies = np.einsum("bij,ji->b", rhos, h_dense, optimize=True).real
    entropy = coeffs[0] * np.einsum("bii->b", rhos).real
    power = rhos
    for j in range(1, len(coeffs)):
        power = power @ rhos
        entropy = entropy + coeffs[j] * np.einsum("bii->b", power).real
    return energies - entropy / beta


def parameter_shift_gradient(
    circ: ParameterizedCircuit,
    theta: Sequence[float],
    h: PauliHamiltonian,
    beta: float,
    layout: RegisterLayout,
    shot_config: estimators.ShotConfig | None = None,
) -> np.ndarray:
    """Gradient of the order-2 loss from +-pi/2 shifted evaluations.

    Per rotation gate, the energy term contributes (1/2)(<K>+ - <K>-), the
    purity term 2/beta (<O>+ - <O>-), and the cubic term -3/(4 beta)
    (<G>+ - <G>-), where <K>, <O>, <G> evaluate tr(H rho+-),
    tr(rho+- rho) and tr(rho+- rho rho). Gates sharing one parameter index
    accumulate their contributions.
    """
    theta = np.asarray(theta, dtype=float)
    param_gates = _param_gate_indices(circ)
    shifted: list = [None]
    owners: list[tuple[int, int]] = []
    for p, gate_ids in enumerate(param_gates):
        for gi in gate_ids:
            shifted.append([(gi, math.pi / 2)])
            shifted.append([(gi, -math.pi / 2)])
            owners.append((p, gi))
    rhos = batched_system_states(circ, theta, layout, shifted)
    base = rhos[0]
    h_dense = to_dense(h)

    if shot_config is None:
        base_sq = base @ base
        k_vals = np.einsum("bij,ji->b", rhos, h_dense, optimize=True).real
        o_vals = np.einsum("bij,ji->b", rhos, base, optimize=True).real
        g_vals = np.einsum("bij,ji->b", rhos, base_sq, optimize=True).real
        grads = np.zeros(circ.n_params)
        for row, (p, _) in enumerate(owners):
            plus, minus = 1 + 2 * row, 2 + 2 * row
            grads[p] += 0.5 * (k_vals[plus] - k_vals[minus]) + (
                2.0 * (o_vals[plus] - o_vals[minus])
                - 0.75 * (g_vals[plus] - g_vals[minus])
            ) / beta
        return grads

    def seeded(*tags: int) -> estimators.ShotConfig:
        seed = np.random.SeedSequence((shot_config.seed,) + tags).generate_state(1)[0]
        return estimators.ShotConfig(shot_config.shots, int(seed))

    grads = np.zeros(circ.n_params)
    for row, (p, gi) in enumerate(owners):
        vals = []
        for s, rho_s in enumerate((rhos[1 + 2 * row], rhos[2 + 2 * row])):
            k_est = estimators.estimate_energy(h, rho_s, seeded(gi, s, 0)).value
            o_est = estimators.destructive_swap_overlap(rho_s, base, seeded(gi, s, 1)).value
            g_est = estimators.cyclic_overlap_estimate(
                [rho_s, base, base], seeded(gi, s, 2)
            ).value
            vals.append((k_est, o_est, g_est))
        (kp, op, gp), (km, om, gm) = vals
        grads[p] += 0.5 * (kp - km) + (2.0 * (op - om) - 0.75 * (gp - gm)) / beta
    return grads


def finite_difference_gradient(
    loss: Callable[[np.ndarray], float], theta: Sequence[float], step: float = 1e-5
) -> np.ndarray:
    """Central differences of an arbitrary loss callable."""
    if step <= 0:
        raise ValueError("step must be positive")
    theta = np.asarray(theta, dtype=float)
    grad = np.empty(theta.size)
    for m in range(theta.size):
        plus = theta.copy()
        minus = theta.copy()
        plus[m] += step
        minus[m] -= step
        grad[m] = (loss(plus) - loss(minus)) / (2 * step)
    return grad


def _fd_gradient_batched(
    circ: ParameterizedCircuit,
    theta: np.ndarray,
    layout: RegisterLayout,
    h_dense: np.ndarray,
    beta: float,
    coeffs: np.ndarray,
    step: float,
) -> np.ndarray:
    """Central differences of the exact loss, all 2P evaluations in one batch."""
    param_gates = _param_gate_indices(circ)
    variations: list = []
    for gate_ids in param_gates:
        variations.append([(gi, step) for gi in gate_ids])
        variations.append([(gi, -step) for gi in gate_ids])
    rhos = batched_system_states(circ, theta, layout, variations)
    losses = _batched_losses(rhos, h_dense, beta, coeffs)
    return (losses[0::2] - losses[1::2]) / (2 * step)


def train(
    circ: ParameterizedCircuit,
    layout: RegisterLayout,
    h: PauliHamiltonian,
    config: TrainConfig,
) -> TrainTrace:
    """Minimize the truncated free energy with ADAM.

    Parameters start uniform on ``init_range``. Each iteration records the
    loss, the gradient max-norm, and the exact fidelity to the Gibbs state
    (diagnostic only, never fed back into the optimizer). Training stops when
    the absolute loss change drops to ``tolerance`` or at ``max_iters``.
    """
    mode = config.resolved_gradient_mode()
    rng = np.random.default_rng(config.init_seed)
    theta = rng.uniform(config.init_range[0], config.init_range[1], circ.n_params)
    h_dense = to_dense(h)
    rho_gibbs = gibbs_state(h, config.beta).matrix
    coeffs = truncation_coefficients(config.order).values

    def system_state(angles: np.ndarray) -> np.ndarray:
        return batched_system_states(circ, angles, layout, [None])[0]

    def exact_loss_of(rho_b: np.ndarray) -> float:
        return float(_batched_losses(rho_b[None, :, :], h_dense, config.beta, coeffs)[0])

    def sampled_loss_of(rho_b: np.ndarray, iteration: int) -> float:
        def cfg_for(term: int) -> estimators.ShotConfig:
            seed = np.random.SeedSequence(
                (config.init_seed, iteration, term)
            ).generate_state(1)[0]
            return estimators.ShotConfig(config.shots, int(seed))

        value = estimators.estimate_energy(h, rho_b, cfg_for(0)).value
        entropy = coeffs[0]
        entropy += coeffs[1] * estimators.destructive_swap_overlap(
            rho_b, rho_b, cfg_for(1)
        ).value
        for j in range(2, config.order + 1):
            entropy += coeffs[j] * estimators.cyclic_overlap_estimate(
                [rho_b] * (j + 1), cfg_for(j)
            ).value
        return float(value - entropy / config.beta)

    def loss_at(angles: np.ndarray, iteration: int) -> tuple[float, np.ndarray]:
        rho_b = system_state(angles)
        if config.loss_mode == "sampled":
            return sampled_loss_of(rho_b, iteration), rho_b
        return exact_loss_of(rho_b), rho_b

    def gradient_at(angles: np.ndarray) -> np.ndarray:
        if mode == "parameter_shift":
            return parameter_shift_gradient(circ, angles, h, config.beta, layout)
        return _fd_gradient_batched(
            circ, angles, layout, h_dense, config.beta, coeffs, config.fd_step
        )

    previous, _ = loss_at(theta, 0)
    adam = AdamState.initial(circ.n_params)
    iterations: list[int] = []
    losses: list[float] = []
    fidelities: list[float] = []
    grad_norms: list[float] = []
    converged = False

    for t in range(1, config.max_iters + 1):
        grad = gradient_at(theta)
        if not np.all(np.isfinite(grad)):
            raise RuntimeError(f"non-finite gradient at iteration {t}")
        adam, theta = adam_step(adam, theta, grad, config.learning_rate)
        current, rho_b = loss_at(theta, t)
        if not math.isfinite(current):
            raise RuntimeError(f"non-finite loss {current} at iteration {t}")
        iterations.append(t)
        losses.append(current)
        fidelities.append(fidelity(rho_b, rho_gibbs))
        grad_norms.append(float(np.max(np.abs(grad))))
        if abs(current - previous) <= config.tolerance:
            converged = True
            break
        previous = current

    return TrainTrace(
        iterations=np.asarray(iterations, dtype=int),
        losses=np.asarray(losses),
        fidelities=np.asarray(fidelities),
        grad_norms=np.asarray(grad_norms),
        theta=theta,
        converged=converged,
    )


def scalar_loss_convexity_check(grid_points: int = 101) -> bool:
    """Convexity of the scalar surrogate f(x) = 2x^2 - x^3/2 - 3/2 on [0, 1].

    Checks the exact second derivative 4 - 3x >= 1 on a grid and confirms it
    against central second differences of f.
    """
    xs = np.linspace(0.0, 1.0, grid_points)
    second = 4.0 - 3.0 * xs
    if second.min() < 1.0:
        return False

    def f(x):
        return 2.0 * x**2 - 0.5 * x**3 - 1.5

    h = 1e-4
    inner = xs[1:-1]
    numeric = (f(inner + h) - 2.0 * f(inner) + f(inner - h)) / h**2
    return bool(np.max(np.abs(numeric - (4.0 - 3.0 * inner))) < 1e-5)
