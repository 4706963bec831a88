"""The cat / nucleus two-qubit scenario.

The decay law is a prescribed amplitude law, not generated by a Hamiltonian:

    |psi(t)> = e^{-lt/2} |up, alive> + sqrt(1 - e^{-lt}) |down, dead>

The joint space is the full 4-dimensional product even though |down, alive>
and |up, dead> are never populated.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from catbox._errors import DomainError, NormalizationError
from catbox._qcore import (
    DensityOperator,
    SpaceLabel,
    StateVector,
    apply_unitary,
    basis_state,
    entropy,
    partial_trace,
    purity,
    reduced_density,
    tensor,
    to_density,
)
from catbox._report import ReportRow, observe

logger = logging.getLogger(__name__)

NUCLEUS = SpaceLabel("nucleus", 2, ("up", "down"))
CAT = SpaceLabel("cat", 2, ("alive", "dead"))

HOUR = 3600.0
DEFAULT_HALF_LIFE = HOUR
DEFAULT_DECAY_RATE = math.log(2) / DEFAULT_HALF_LIFE

# Nucleus basis {|+>, |->} and cat basis {|S>, |A>} as rows of the change of basis.
PLUS_MINUS = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class DecayParams:
    """Decay rate in 1/s and elapsed time in s."""

    decay_rate: float = DEFAULT_DECAY_RATE
    t: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.decay_rate) or self.decay_rate <= 0:
            raise DomainError(f"decay rate must be positive, got {self.decay_rate!r}")
        if not math.isfinite(self.t) or self.t < 0:
            raise DomainError(f"elapsed time must be >= 0, got {self.t!r}")

    @classmethod
    def from_half_life(cls, half_life: float, t: float = 0.0) -> "DecayParams":
        if half_life <= 0:
            raise DomainError(f"half life must be positive, got {half_life!r}")
        return cls(math.log(2) / half_life, t)

    @property
    def survival(self) -> float:
        """e^{-lt}, the probability the nucleus has not decayed."""
        return math.exp(-self.decay_rate * self.t)


def initial_state() -> StateVector:
    """|up> (x) |alive> over (nucleus, cat)."""
    return tensor(basis_state(NUCLEUS, "up"), basis_state(CAT, "alive"))


def _branch_amplitudes(params: DecayParams) -> tuple[float, float]:
    lt = params.decay_rate * params.t
    return math.exp(-lt / 2), math.sqrt(-math.expm1(-lt))


def evolve_decay(params: DecayParams) -> StateVector:
    a, b = _branch_amplitudes(params)
    amps = np.zeros(4, dtype=complex)
    amps[0] = a  # |up, alive>
    amps[3] = b  # |down, dead>
    psi = StateVector((NUCLEUS, CAT), amps)
    if not psi.is_normalized():
        raise NormalizationError(f"decayed state norm {psi.norm():.15g} drifted from 1")
    return psi


def decay_unitary(params: DecayParams) -> np.ndarray:
    """The decay law as a rotation in the {|up,alive>, |down,dead>} plane.

    Column 0 carries exactly the amplitudes of `evolve_decay`; |up,dead> and
    |down,alive> are left untouched.
    """
    a, b = _branch_amplitudes(params)
    u = np.eye(4, dtype=complex)
    u[0, 0], u[3, 0] = a, b
    u[0, 3], u[3, 3] = -b, a
    return u


def reduced_cat(t: float, decay_rate: float = DEFAULT_DECAY_RATE) -> DensityOperator:
    return reduced_density(evolve_decay(DecayParams(decay_rate, t)), [CAT])


def reduced_nucleus(t: float, decay_rate: float = DEFAULT_DECAY_RATE) -> DensityOperator:
    return reduced_density(evolve_decay(DecayParams(decay_rate, t)), [NUCLEUS])


def rotated_basis_check(
    t: float,
    decay_rate: float = DEFAULT_DECAY_RATE,
    rotation: Optional[np.ndarray] = None,
) -> tuple[DensityOperator, DensityOperator]:
    """Reduce the cat in a rotated nucleus basis and in the {up, down} basis.

    The rotated reduction also expresses the cat in {|S>, |A>} and transforms
    the result back, so both returned operators are in the {alive, dead} basis.
    `rotation` (rows = new nucleus basis bras) defaults to {|+>, |->}.
    """
    psi = evolve_decay(DecayParams(decay_rate, t))
    standard = partial_trace(to_density(psi), [CAT])

    v = PLUS_MINUS if rotation is None else np.asarray(rotation, dtype=complex)
    rotated = apply_unitary(psi, v, [NUCLEUS])
    rotated = apply_unitary(rotated, PLUS_MINUS, [CAT])
    rho_sa = partial_trace(to_density(rotated), [CAT])
    back = PLUS_MINUS.conj().T @ rho_sa.matrix @ PLUS_MINUS
    return DensityOperator((CAT,), back), standard


def purity_law(t: float, decay_rate: float = DEFAULT_DECAY_RATE) -> float:
    """Closed-form purity of the reduced cat: e^{-2lt} + (1 - e^{-lt})^2."""
    s = math.exp(-decay_rate * t)
    return s * s + (1 - s) ** 2


def cat_report(params: DecayParams) -> list[ReportRow]:
    """One row for the reduced cat state at `params.t`."""
    rho = reduced_density(evolve_decay(params), [CAT])
    logger.debug("reduced cat at t=%g s: purity %.15g, entropy %.6g bit",
                 params.t, purity(rho), entropy(rho))
    scalars, matrices = observe(rho, populations=True, coherence=(0, 1), purity=True,
                                offdiag=True, matrix=True)
    return [ReportRow(branch="cat", probability=1.0, scalars=scalars, matrices=matrices)]
