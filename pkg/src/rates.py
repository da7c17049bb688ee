"""
Scalar physics inputs: Ohmic spectral density, Bose-Einstein occupation,
single-photon bath rates and the projector decomposition of the measured state.

Units: hbar = k_B = 1, energies in units of the qubit splitting, times in its inverse.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Tuple

import numpy as np

from src.errors import DomainError, WeakCouplingWarning

logger = logging.getLogger(__name__)

# Above this kappa the weak-coupling Lindblad derivation is questionable.
WEAK_COUPLING_LIMIT = 0.1
PROBABILITY_TOL = 1e-12


@dataclass(frozen=True)
class BathSpec:
    """One Ohmic heat bath: dimensionless coupling, temperature k_B*T and cutoff."""

    kappa: float
    temperature: float
    cutoff: float = 10.0
    label: str = "bath"

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa < 0:
            raise DomainError(f"bath '{self.label}': kappa must be >= 0, got {self.kappa}")
        if not np.isfinite(self.cutoff) or self.cutoff <= 0:
            raise DomainError(f"bath '{self.label}': cutoff must be > 0, got {self.cutoff}")
        if not np.isfinite(self.temperature) or self.temperature < 0:
            raise DomainError(
                f"bath '{self.label}': temperature must be >= 0, got {self.temperature}"
            )
        if self.kappa >= WEAK_COUPLING_LIMIT:
            warnings.warn(
                f"bath '{self.label}': kappa={self.kappa} is not << 1; "
                "the Lindblad description assumes weak coupling",
                WeakCouplingWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class MeasurementSpec:
    """
    Continuously measured pure state plus measurement strength.

    The state is c_g|g> + c_e|e> with c_g = cos(theta/2), c_e = exp(i phi) sin(theta/2),
    so theta = 0 monitors the ground state and theta = pi the excited state.
    """

    gamma: float
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise DomainError(f"measurement strength gamma must be >= 0, got {self.gamma}")
        if not np.isfinite(self.theta) or self.theta < -PROBABILITY_TOL or self.theta > np.pi + PROBABILITY_TOL:
            raise DomainError(f"theta must lie in [0, pi], got {self.theta}")
        if not np.isfinite(self.phi):
            raise DomainError(f"phi must be finite, got {self.phi}")
        object.__setattr__(self, "phi", float(np.mod(self.phi, 2 * np.pi)))

    @classmethod
    def from_coefficients(cls, c_g: complex, c_e: complex, gamma: float) -> "MeasurementSpec":
        """Build the measurement from (unnormalized) amplitudes of |g> and |e>."""
        norm = abs(c_g) ** 2 + abs(c_e) ** 2
        if norm == 0:
            raise DomainError("measured state amplitudes are both zero")
        theta = 2 * np.arctan2(abs(c_e), abs(c_g))
        phi = np.angle(c_e) - np.angle(c_g) if abs(c_e) > 0 and abs(c_g) > 0 else 0.0
        return cls(gamma=gamma, theta=float(theta), phi=float(phi))

    @property
    def alpha(self) -> float:
        return projector_coeffs(self.theta, self.phi)[0]

    @property
    def beta(self) -> complex:
        return projector_coeffs(self.theta, self.phi)[1]

    @property
    def beta_sq(self) -> float:
        """|beta|^2 = sin^2(theta) / 4."""
        return float(np.sin(self.theta) ** 2 / 4)


@dataclass(frozen=True)
class RatePair:
    """Absorption and emission rates of one single-photon channel."""

    absorb: float
    emit: float

    @classmethod
    def from_aggregates(cls, gamma_plus: float, gamma_minus: float) -> "RatePair":
        """Effective single channel with the given Gamma_+ and Gamma_-."""
        if gamma_plus < 0 or gamma_minus < 0 or gamma_minus > gamma_plus:
            raise DomainError(
                f"need 0 <= Gamma_- <= Gamma_+, got Gamma_+={gamma_plus}, Gamma_-={gamma_minus}"
            )
        return cls(absorb=(gamma_plus - gamma_minus) / 2, emit=(gamma_plus + gamma_minus) / 2)


class AggregateRates(NamedTuple):
    gamma_plus: float
    gamma_minus: float
    gamma_plus_tilde: float


def ohmic_spectral_density(omega: float, bath: BathSpec) -> float:
    """I(omega) = 2 kappa omega exp(-omega / omega_c)."""
    if omega < 0:
        raise DomainError(f"spectral density needs omega >= 0, got {omega}")
    return float(2 * bath.kappa * omega * np.exp(-omega / bath.cutoff))


def bose_einstein(energy: float, temperature: float) -> float:
    """
    Bose-Einstein occupation n = 1 / (exp(energy / T) - 1).

    Zero temperature is the exact limit n = 0. energy <= 0 is rejected
    (the occupation diverges at zero energy).
    """
    if energy <= 0:
        raise DomainError(f"Bose-Einstein occupation needs energy > 0, got {energy}")
    if temperature < 0:
        raise DomainError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0:
        return 0.0
    x = energy / temperature
    if x > 700:
        return 0.0
    return float(1.0 / np.expm1(x))


def bath_rates(delta: float, bath: BathSpec) -> RatePair:
    """
    Single-photon absorption and emission rates at transition energy delta.

    Args:
        delta: Transition energy (> 0)
        bath: Bath coupled to the transition

    Returns:
        RatePair with absorb = (pi/2) I(delta) n(delta), emit = (pi/2) I(delta) [1 + n(delta)]
    """
    if delta <= 0:
        raise DomainError(f"transition energy must be > 0, got {delta}")
    weight = ohmic_spectral_density(delta, bath)
    occupation = bose_einstein(delta, bath.temperature)
    rates = RatePair(
        absorb=np.pi / 2 * weight * occupation,
        emit=np.pi / 2 * weight * (1 + occupation),
    )
    logger.debug("bath %s at delta=%g: %s", bath.label, delta, rates)
    return rates


def aggregate_rates(rates: Iterable[RatePair], gamma: float) -> AggregateRates:
    """Gamma_+ = sum(emit + absorb), Gamma_- = sum(emit - absorb), Gamma~_+ = Gamma_+ + gamma/2."""
    rates = list(rates)
    gamma_plus = float(sum(r.emit + r.absorb for r in rates))
    gamma_minus = float(sum(r.emit - r.absorb for r in rates))
    return AggregateRates(gamma_plus, gamma_minus, gamma_plus + gamma / 2)


def projector_coeffs(theta: float, phi: float) -> Tuple[float, complex]:
    """
    Coefficients of P_n = I/2 + alpha sigma_z + beta sigma_+ + beta* sigma_-.

    alpha = -cos(theta)/2, beta = exp(i phi) sin(theta)/2, so alpha^2 + |beta|^2 = 1/4.
    """
    if theta < -PROBABILITY_TOL or theta > np.pi + PROBABILITY_TOL:
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    alpha = -np.cos(theta) / 2
    beta = np.exp(1j * phi) * np.sin(theta) / 2
    return float(alpha), complex(beta)
