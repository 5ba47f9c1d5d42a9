"""Dense linear algebra for quantum states on a few qubits.

Everything here works on plain complex numpy arrays; :class:`DensityMatrix`
and :class:`PureState` are thin validated wrappers used at module boundaries.
Qubit 0 is the most significant bit of a basis-state label, so an ancilla
register placed on the low qubit indices occupies the leading index block.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence

import numpy as np

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
# Spectrum values below this are treated as exact zeros for entropy, support
# and rank purposes (double-precision noise floor for dims <= 1024).
EIG_CUTOFF = 1e-12


def as_matrix(obj) -> np.ndarray:
    """Return the underlying complex matrix of a state or array-like."""
    mat = getattr(obj, "matrix", obj)
    return np.asarray(mat, dtype=complex)


def _qubit_count(dim: int) -> int:
    n = int(round(math.log2(dim)))
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix on ``n_qubits``."""

    __slots__ = ("matrix", "n_qubits")

    def __init__(self, matrix, check: bool = True):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {matrix.shape}")
        self.matrix = matrix
        self.n_qubits = _qubit_count(matrix.shape[0])
        if check:
            self.validate()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self) -> "DensityMatrix":
        """Check Hermiticity, unit trace and positivity; raise ValueError if violated."""
        m = self.matrix
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > HERM_TOL:
            raise ValueError(f"not Hermitian: max |M - M^dag| = {herm:.3e}")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr} is not 1 within {TRACE_TOL:.0e}")
        lam_min = float(np.linalg.eigvalsh(m)[0])
        if lam_min < -PSD_TOL:
            raise ValueError(f"not PSD: min eigenvalue {lam_min:.3e}")
        return self

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 2**n_qubits
        return cls(np.eye(dim, dtype=complex) / dim, check=False)

    def __repr__(self) -> str:
        return f"DensityMatrix(n_qubits={self.n_qubits})"


class PureState:
    """Normalized state vector on ``n_qubits``."""

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes, check: bool = True):
        amplitudes = np.asarray(amplitudes, dtype=complex).ravel()
        self.amplitudes = amplitudes
        self.n_qubits = _qubit_count(amplitudes.size)
        if check:
            norm = float(np.linalg.norm(amplitudes))
            if abs(norm - 1.0) > 1e-10:
                raise ValueError(f"state vector norm {norm} is not 1")

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> "PureState":
        """Computational basis state |index> on ``n_qubits`` qubits."""
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps, check=False)

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), check=False)


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the most significant index block."""
    return np.kron(as_matrix(a), as_matrix(b))


def _partial_trace_array(rho: np.ndarray, n_qubits: int, keep: Sequence[int]) -> np.ndarray:
    tensor = rho.reshape((2,) * (2 * n_qubits))
    dropped = [q for q in range(n_qubits) if q not in keep]
    n_left = n_qubits
    for q in sorted(dropped, reverse=True):
        tensor = np.trace(tensor, axis1=q, axis2=q + n_left)
        n_left -= 1
    dim = 2 ** len(keep)
    return tensor.reshape(dim, dim)


def partial_trace(state, keep: Iterable[int]) -> DensityMatrix:
    """Reduce onto the qubits in ``keep`` (ascending index order).

    Raises ValueError for an empty keep set or out-of-range indices.
    """
    rho = as_matrix(state)
    n = _qubit_count(rho.shape[0])
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep indices {keep} out of range for {n} qubits")
    return DensityMatrix(_partial_trace_array(rho, n, keep), check=False)


def herm_matrix_function(h, f) -> np.ndarray:
    """Apply the scalar function ``f`` to a Hermitian matrix via its eigenbasis."""
    mat = as_matrix(h)
    scale = max(1.0, float(np.max(np.abs(mat))))
    if float(np.max(np.abs(mat - mat.conj().T))) > 1e-9 * scale:
        raise ValueError("herm_matrix_function requires a Hermitian input")
    w, v = np.linalg.eigh(mat)
    fw = np.asarray(f(w))
    return (v * fw) @ v.conj().T


def _clipped_spectrum(state) -> np.ndarray:
    w = np.linalg.eigvalsh(as_matrix(state))
    return np.maximum(w, 0.0)


def von_neumann_entropy(rho) -> float:
    """Entropy -sum(lam ln lam) in nats over eigenvalues above the zero cutoff."""
    w = _clipped_spectrum(rho)
    w = w[w > EIG_CUTOFF]
    return float(-np.sum(w * np.log(w)))


def relative_entropy(rho, sigma) -> float:
    """Relative entropy tr(rho ln rho - rho ln sigma) in nats.

    Support is decided by the eigenvalue cutoff: if rho has weight outside
    the support of sigma the result is ``math.inf``.
    """
    r = as_matrix(rho)
    s = as_matrix(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {s.shape}")
    ws, vs = np.linalg.eigh(s)
    ws = np.maximum(ws, 0.0)
    kernel = vs[:, ws <= EIG_CUTOFF]
    if kernel.shape[1]:
        leak = float(np.real(np.einsum("ik,ij,jk->", kernel.conj(), r, kernel)))
        if leak > 1e-10:
            return math.inf
    wr = _clipped_spectrum(r)
    wr = wr[wr > EIG_CUTOFF]
    term_r = float(np.sum(wr * np.log(wr)))
    log_s = np.where(ws > EIG_CUTOFF, np.log(np.maximum(ws, EIG_CUTOFF)), 0.0)
    term_s = float(np.real(np.einsum("ik,ij,jk,k->", vs.conj(), r, vs, log_s)))
    return max(term_r - term_s, 0.0)


def fidelity(rho, sigma) -> float:
    """Root fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)), clamped to [0, 1]."""
    r = as_matrix(rho)
    s = as_matrix(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {s.shape}")
    sqrt_r = herm_matrix_function(r, lambda w: np.sqrt(np.maximum(w, 0.0)))
    inner = sqrt_r @ s @ sqrt_r
    w = np.maximum(np.linalg.eigvalsh(inner), 0.0)
    return float(min(1.0, np.sum(np.sqrt(w))))


def trace_distance(rho, sigma) -> float:
    """Half the sum of absolute eigenvalues of rho - sigma."""
    r = as_matrix(rho)
    s = as_matrix(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {s.shape}")
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(r - s))))


def overlap_exact(states: Sequence) -> float:
    """Real part of tr(rho_1 rho_2 ... rho_m) for an ordered list of states."""
    if not states:
        raise ValueError("need at least one state")
    mats = [as_matrix(s) for s in states]
    dim = mats[0].shape[0]
    if any(m.shape != (dim, dim) for m in mats):
        raise ValueError("all states must share one dimension")
    prod = mats[0]
    for m in mats[1:]:
        prod = prod @ m
    return float(np.trace(prod).real)


def state_rank(rho, cutoff: float = 1e-10) -> int:
    """Number of eigenvalues above ``cutoff`` (consistent with the entropy cutoff)."""
    return int(np.sum(np.linalg.eigvalsh(as_matrix(rho)) > cutoff))
