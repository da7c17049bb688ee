"""Exception and warning types shared by the simulator modules."""

from typing import List, Optional


class HeatFlowError(Exception):
    """Base class for every error raised by the simulator."""


class DomainError(HeatFlowError, ValueError):
    """An argument lies outside the domain of a physical formula."""


class ContractError(HeatFlowError):
    """An operation was called outside its precondition."""


class DegenerateModelError(HeatFlowError):
    """A closed form has a vanishing denominator for this model."""


class DegenerateSteadyStateError(HeatFlowError):
    """The Liouvillian kernel is not one-dimensional."""

    def __init__(self, kernel_dim: int, message: Optional[str] = None):
        self.kernel_dim = kernel_dim
        super().__init__(message or f"Liouvillian kernel has dimension {kernel_dim}, expected 1")


class IntegrationError(HeatFlowError):
    """The Bloch integrator produced a non-finite state."""

    def __init__(self, time: float, message: Optional[str] = None):
        self.time = time
        super().__init__(message or f"non-finite Bloch state at t={time:.6g}")


class PropagationError(HeatFlowError):
    """The density-matrix propagator produced non-finite entries."""


class ConvergenceError(HeatFlowError):
    """A heat series has not relaxed to its steady value."""

    def __init__(self, residual: float, tolerance: float, tail_bound: float):
        self.residual = residual
        self.tolerance = tolerance
        self.tail_bound = tail_bound
        super().__init__(
            f"series not converged: |J(t_end) - J| = {residual:.3e} > {tolerance:.3e} "
            f"(tail bound {tail_bound:.3e})"
        )


class InvariantError(HeatFlowError):
    """A density matrix left the physical set beyond numerical tolerance."""


class ConfigError(HeatFlowError):
    """A scenario configuration could not be parsed or validated."""

    def __init__(self, messages: List[str]):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class WeakCouplingWarning(UserWarning):
    """Bath coupling is outside the weak-coupling regime of the Lindblad derivation."""


class ColdHotOrderWarning(UserWarning):
    """The hot bath of a Lambda model is not hotter than the cold bath."""
