"""Von Neumann premeasurement: a system correlated with an apparatus pointer.

The coupling is only fixed on the ready slice |s_k>|a0> -> |s_k>|a_k>. It is
completed to a permutation of the joint basis; two completions are provided and
every observable reported here is independent of the choice.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from catbox._catmodel import CAT, DecayParams, evolve_decay
from catbox._errors import DimensionError, DomainError, NormalizationError
from catbox._qcore import (
    NORM_TOL,
    DensityOperator,
    SpaceLabel,
    StateVector,
    apply_unitary,
    basis_state,
    reduced_density,
    tensor,
)
from catbox._report import ReportRow, observe

logger = logging.getLogger(__name__)

COMPLETIONS = ("cyclic", "swap")

# Ready position plus one pointer reading per cat state.
DEVICE = SpaceLabel("device", 3, ("ready", "nw", "ne"))


@dataclass(frozen=True, eq=False)
class PointerChain:
    coefficients: np.ndarray
    system_name: str = "system"
    apparatus_name: str = "apparatus"
    pointer_levels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex).reshape(-1)
        if c.size < 1:
            raise DimensionError("a pointer chain needs at least one coefficient")
        norm = float(np.linalg.norm(c))
        if abs(norm - 1.0) > NORM_TOL:
            raise NormalizationError(f"chain coefficients have norm {norm:.15g}, expected 1")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        levels = self.pointer_levels or tuple(f"a{k}" for k in range(c.size + 1))
        if len(levels) != c.size + 1:
            raise DimensionError(f"{len(levels)} apparatus levels for {c.size} system states; need {c.size + 1}")
        object.__setattr__(self, "pointer_levels", tuple(levels))

    @classmethod
    def uniform(cls, n: int, **kwargs) -> "PointerChain":
        if n < 1:
            raise DimensionError(f"chain dimension must be >= 1, got {n}")
        return cls(np.full(n, 1 / math.sqrt(n)), **kwargs)

    @property
    def n(self) -> int:
        return self.coefficients.size

    @property
    def system(self) -> SpaceLabel:
        return SpaceLabel(self.system_name, self.n, tuple(f"s{k + 1}" for k in range(self.n)))

    @property
    def apparatus(self) -> SpaceLabel:
        return SpaceLabel(self.apparatus_name, self.n + 1, self.pointer_levels)


def pointer_unitary(n: int, completion: str = "cyclic") -> np.ndarray:
    """Permutation over (system, apparatus) sending |k, a0> to |k, a_{k+1}>.

    `cyclic` shifts every apparatus level by k+1 modulo n+1; `swap` only
    exchanges a0 and a_{k+1}.
    """
    if completion not in COMPLETIONS:
        raise DomainError(f"unknown completion {completion!r}; choose from {COMPLETIONS}")
    m = n + 1
    u = np.zeros((n * m, n * m), dtype=complex)
    for k in range(n):
        for j in range(m):
            if completion == "cyclic":
                target = (j + k + 1) % m
            else:
                target = {0: k + 1, k + 1: 0}.get(j, j)
            u[k * m + target, k * m + j] = 1.0
    return u


def couple_pointer(
    psi: StateVector,
    system: SpaceLabel,
    apparatus: SpaceLabel,
    completion: str = "cyclic",
) -> StateVector:
    if apparatus.dim != system.dim + 1:
        raise DimensionError(
            f"apparatus {apparatus.name!r} needs dim {system.dim + 1} "
            f"(ready + one pointer per level of {system.name!r}), got {apparatus.dim}"
        )
    return apply_unitary(psi, pointer_unitary(system.dim, completion), [system, apparatus])


def premeasurement(chain: PointerChain, completion: str = "cyclic") -> StateVector:
    """(sum_k c_k |s_k>) |a0>  ->  sum_k c_k |s_k>|a_k>."""
    ready = basis_state(chain.apparatus, 0)
    psi = tensor(StateVector((chain.system,), chain.coefficients), ready)
    return couple_pointer(psi, chain.system, chain.apparatus, completion)


def apparatus_state(chain: PointerChain, completion: str = "cyclic") -> DensityOperator:
    return reduced_density(premeasurement(chain, completion), [chain.apparatus])


def measured_cat(t: float, decay_rate: Optional[float] = None) -> StateVector:
    """device (x) nucleus (x) cat after the device has read the cat.

    Alive is read as `nw`, dead as `ne`.
    """
    params = DecayParams(t=t) if decay_rate is None else DecayParams(decay_rate, t)
    psi = tensor(basis_state(DEVICE, "ready"), evolve_decay(params))
    logger.debug("device reads cat at t=%g s", t)
    return couple_pointer(psi, CAT, DEVICE)


def chain_report(chain: PointerChain, completion: str = "cyclic") -> list[ReportRow]:
    rho = apparatus_state(chain, completion)
    scalars, matrices = observe(rho, populations=True, purity=True, offdiag=True, matrix=True)
    return [ReportRow(branch=chain.apparatus_name, probability=1.0, scalars=scalars, matrices=matrices)]

