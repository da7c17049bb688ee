"""
Generic N-level Lindblad engine.

Superoperators act on row-major (numpy ``ravel``) stacked density matrices,
for which vec(A X B) = (A kron B^T) vec(X). Dense matrices only: the systems of
interest have N <= ~10.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from src.errors import (
    ContractError,
    DegenerateSteadyStateError,
    DomainError,
    InvariantError,
    PropagationError,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
PROJECTOR_TOL = 1e-10
KERNEL_ATOL = 1e-12
KERNEL_RTOL = 1e-12
STEADY_RESIDUAL_TOL = 1e-10
NEGATIVE_EIGENVALUE_TOL = -1e-8

# Qubit operators in the {|e>, |g>} basis (sigma_z = diag(1, -1)).
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


@dataclass(eq=False)
class DensityMatrix:
    """N x N density matrix. Construction does not validate; call ``validate``."""

    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise DomainError(f"density matrix must be square, got shape {self.entries.shape}")

    @classmethod
    def from_state(cls, vector: Sequence[complex]) -> "DensityMatrix":
        """Pure state |psi><psi| of a (normalized here) state vector."""
        psi = np.asarray(vector, dtype=complex)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise DomainError("state vector is zero")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def populations(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    def validate(self, tol: float = 1e-10, eig_tol: float = -1e-9) -> "DensityMatrix":
        """Raise InvariantError unless Hermitian, unit trace and positive within tolerance."""
        herm = np.max(np.abs(self.entries - self.entries.conj().T))
        if herm > tol:
            raise InvariantError(f"density matrix not Hermitian (drift {herm:.3e})")
        trace = np.trace(self.entries)
        if abs(trace - 1) > tol:
            raise InvariantError(f"density matrix trace {trace.real:.12g} != 1")
        min_eig = la.eigvalsh((self.entries + self.entries.conj().T) / 2).min()
        if min_eig < eig_tol:
            raise InvariantError(f"density matrix has eigenvalue {min_eig:.3e}")
        return self


@dataclass(eq=False)
class Channel:
    """One Lindblad channel: jump operator and non-negative rate."""

    operator: np.ndarray
    rate: float
    label: str = ""

    def __post_init__(self):
        self.operator = np.asarray(self.operator, dtype=complex)
        if self.operator.ndim != 2 or self.operator.shape[0] != self.operator.shape[1]:
            raise DomainError(f"channel '{self.label}': jump operator must be square")
        if not np.isfinite(self.rate) or self.rate < 0:
            raise DomainError(f"channel '{self.label}': rate must be >= 0, got {self.rate}")


@dataclass(eq=False)
class LindbladModel:
    """
    Hamiltonian plus weighted jump operators.

    ``channels`` are the bath channels; ``measurement`` (optional) is the
    measurement channel whose dissipator defines the heat current.
    """

    hamiltonian: np.ndarray
    channels: Tuple[Channel, ...] = ()
    measurement: Optional[Channel] = None

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=complex)
        h = self.hamiltonian
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise DomainError(f"Hamiltonian must be square, got shape {h.shape}")
        if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise DomainError("Hamiltonian is not Hermitian")
        self.channels = tuple(self.channels)
        for channel in self.all_channels:
            if channel.operator.shape != h.shape:
                raise DomainError(
                    f"channel '{channel.label}' has shape {channel.operator.shape}, "
                    f"Hamiltonian has {h.shape}"
                )

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def all_channels(self) -> Tuple[Channel, ...]:
        if self.measurement is None:
            return self.channels
        return self.channels + (self.measurement,)


@dataclass(eq=False)
class Liouvillian:
    """N^2 x N^2 generator acting on row-major stacked density matrices."""

    matrix: np.ndarray
    dim: int
    _eigenvalues: Optional[np.ndarray] = field(default=None, repr=False)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Matrix-form action L[rho]."""
        rho = np.asarray(rho, dtype=complex)
        return (self.matrix @ rho.ravel()).reshape(self.dim, self.dim)

    def eigenvalues(self) -> np.ndarray:
        if self._eigenvalues is None:
            self._eigenvalues = la.eigvals(self.matrix)
        return self._eigenvalues

    def slowest_decay_rate(self, tol: float = 1e-12) -> float:
        """Smallest |Re lambda| among the non-zero eigenvalues."""
        eig = self.eigenvalues()
        scale = max(1.0, np.max(np.abs(eig)))
        rates = -eig.real[np.abs(eig) > tol * scale]
        rates = rates[rates > tol * scale]
        return float(rates.min()) if rates.size else 0.0


class CPTPDiagnostics(NamedTuple):
    trace_drift: float
    hermiticity_drift: float
    min_eigenvalue: float


class EquatorSplit(NamedTuple):
    """Equator measurement written as an infinite-temperature bath plus a diagonal-free remainder."""

    absorb: Channel
    emit: Channel
    coherent_part: Callable[[np.ndarray], np.ndarray]


def dissipator_apply(channel: Channel, rho: np.ndarray) -> np.ndarray:
    """w (L rho L^dag - 1/2 {L^dag L, rho})."""
    rho = np.asarray(rho, dtype=complex)
    op = channel.operator
    op_dag = op.conj().T
    number = op_dag @ op
    return channel.rate * (op @ rho @ op_dag - 0.5 * (number @ rho + rho @ number))


def measurement_channel(projector: np.ndarray, gamma: float) -> Channel:
    """
    Continuous measurement of a projector as a Lindblad channel (jump operator P_n, rate gamma).

    Raises:
        ContractError: projector is not Hermitian and idempotent
    """
    projector = np.asarray(projector, dtype=complex)
    if np.max(np.abs(projector @ projector - projector)) > PROJECTOR_TOL:
        raise ContractError("measurement operator is not a projector (P^2 != P)")
    if np.max(np.abs(projector - projector.conj().T)) > PROJECTOR_TOL:
        raise ContractError("measurement operator is not Hermitian")
    return Channel(projector, gamma, label="measurement")


def state_projector(vector: Sequence[complex]) -> np.ndarray:
    """|n><n| for a (normalized here) state vector."""
    return DensityMatrix.from_state(vector).entries


def build_liouvillian(model: LindbladModel) -> Liouvillian:
    """
    Vectorized Lindblad generator.

    L = -i (H kron I - I kron H^T)
        + sum_k w_k [L_k kron L_k^* - 1/2 (L_k^dag L_k kron I + I kron (L_k^dag L_k)^T)]
    """
    n = model.dim
    ident = np.eye(n, dtype=complex)
    h = model.hamiltonian
    matrix = -1j * (np.kron(h, ident) - np.kron(ident, h.T))
    for channel in model.all_channels:
        if channel.operator.shape != (n, n):
            raise DomainError(f"channel '{channel.label}' does not match dimension {n}")
        if channel.rate == 0:
            continue
        op = channel.operator
        number = op.conj().T @ op
        matrix = matrix + channel.rate * (
            np.kron(op, op.conj()) - 0.5 * (np.kron(number, ident) + np.kron(ident, number.T))
        )
    logger.debug("built Liouvillian for N=%d with %d channels", n, len(model.all_channels))
    return Liouvillian(matrix=matrix, dim=n)


def steady_state(liouvillian: Liouvillian) -> DensityMatrix:
    """
    Null-space steady state from the smallest right singular vector of L.

    Raises:
        DegenerateSteadyStateError: kernel dimension != 1
    """
    _, singular, vh = la.svd(liouvillian.matrix)
    tol = max(KERNEL_ATOL, KERNEL_RTOL * singular[0])
    kernel_dim = int(np.sum(singular < tol))
    logger.debug(
        "steady state: smallest singular values %s, kernel dim %d", singular[-2:], kernel_dim
    )
    if kernel_dim != 1:
        raise DegenerateSteadyStateError(kernel_dim)

    rho = vh[-1].conj().reshape(liouvillian.dim, liouvillian.dim)
    rho = (rho + rho.conj().T) / 2
    trace = np.trace(rho).real
    if abs(trace) < 1e-14:
        raise DegenerateSteadyStateError(kernel_dim, "kernel vector is traceless")
    rho = rho / trace

    residual = np.max(np.abs(liouvillian.apply(rho)))
    if residual > STEADY_RESIDUAL_TOL * max(1.0, singular[0]):
        raise InvariantError(f"steady-state residual {residual:.3e} too large")
    return DensityMatrix(rho)


def evolve(
    liouvillian: Liouvillian,
    rho0: DensityMatrix,
    t_grid: Sequence[float],
    check: bool = False,
) -> List[DensityMatrix]:
    """
    rho(t) = exp(L t) rho0 on each grid time (rho0 is the state at t = 0).

    A uniform grid reuses a single step propagator.

    Raises:
        ContractError: grid not strictly increasing or negative
        PropagationError: non-finite entries
        InvariantError: check=True and the trajectory leaves the physical set
    """
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ContractError("time grid must be a non-empty 1-D sequence")
    if times[0] < 0:
        raise ContractError("time grid must start at t >= 0")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise ContractError("time grid must be strictly increasing")
    if rho0.dim != liouvillian.dim:
        raise DomainError(f"initial state has dimension {rho0.dim}, expected {liouvillian.dim}")

    n = liouvillian.dim
    vec = rho0.entries.ravel().copy()
    if times[0] > 0:
        vec = la.expm(liouvillian.matrix * times[0]) @ vec
    states = [DensityMatrix(vec.reshape(n, n).copy())]

    uniform = steps.size > 0 and np.allclose(steps, steps[0], rtol=1e-12, atol=0)
    step_map = la.expm(liouvillian.matrix * steps[0]) if uniform else None
    for k, dt in enumerate(steps, start=1):
        propagator = step_map if uniform else la.expm(liouvillian.matrix * dt)
        vec = propagator @ vec
        if not np.all(np.isfinite(vec)):
            raise PropagationError(f"non-finite density matrix at t={times[k]:.6g}")
        states.append(DensityMatrix(vec.reshape(n, n).copy()))

    if check:
        diag = cptp_diagnostics(states)
        if diag.min_eigenvalue < NEGATIVE_EIGENVALUE_TOL:
            raise InvariantError(f"negative eigenvalue {diag.min_eigenvalue:.3e} along trajectory")
        if diag.trace_drift > 1e-9 or diag.hermiticity_drift > 1e-9:
            raise InvariantError(f"trajectory drift too large: {diag}")
    return states


def cptp_diagnostics(states: Sequence[DensityMatrix]) -> CPTPDiagnostics:
    """Worst trace drift, Hermiticity drift and smallest eigenvalue over the states."""
    trace_drift = 0.0
    herm_drift = 0.0
    min_eig = np.inf
    for state in states:
        rho = state.entries
        trace_drift = max(trace_drift, abs(np.trace(rho) - 1))
        herm_drift = max(herm_drift, float(np.max(np.abs(rho - rho.conj().T))))
        min_eig = min(min_eig, float(la.eigvalsh((rho + rho.conj().T) / 2).min()))
    return CPTPDiagnostics(float(trace_drift), herm_drift, float(min_eig))


def equator_measurement_split(phi: float, gamma: float) -> EquatorSplit:
    """
    D_M of the qubit projector at theta = pi/2 as D1 + D2.

    D1 has sigma_+ and sigma_- channels at gamma/4 each (an infinite-temperature bath);
    D2[rho] = gamma/4 (e^{2i phi} s+ rho s+ + e^{-2i phi} s- rho s-) has zero diagonal.
    """
    rate = gamma / 4

    def coherent_part(rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return rate * (
            np.exp(2j * phi) * SIGMA_PLUS @ rho @ SIGMA_PLUS
            + np.exp(-2j * phi) * SIGMA_MINUS @ rho @ SIGMA_MINUS
        )

    return EquatorSplit(
        absorb=Channel(SIGMA_PLUS, rate, label="measurement-absorb"),
        emit=Channel(SIGMA_MINUS, rate, label="measurement-emit"),
        coherent_part=coherent_part,
    )
