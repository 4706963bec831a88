"""Cavity QED building blocks and the two-atom / erasure protocols.

Atoms carry levels e, g and optionally the erasure level a. Fields are single
modes on a truncated Fock space |0>..|N>. Detection enumerates every outcome
deterministically; `sample_detection` picks one outcome from a seeded
generator for demonstration runs.
"""

import cmath
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg, special, stats

from catbox._errors import (
    DimensionError,
    DomainError,
    ErasureError,
    ErasureOrderError,
    LabelError,
    NormalizationError,
    TruncationError,
)
from catbox._qcore import (
    PROBABILITY_FLOOR,
    TRACE_TOL,
    DensityOperator,
    SpaceLabel,
    StateVector,
    apply_operator,
    apply_unitary,
    basis_state,
    product,
    reduced_density,
    reduced_state,
)
from catbox._report import ReportRow, observe

logger = logging.getLogger(__name__)

# Largest Poisson mass a truncated coherent state may drop.
TAIL_TOL = 1e-10

# Resonant pi/2 pulse on (e, g): |e> -> (|e> + |g>)/sqrt2, |g> -> (|g> - |e>)/sqrt2.
RAMSEY_PULSE = np.array([[1, -1], [1, 1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class FockSpace:
    """A single field mode truncated at photon number `cutoff`."""

    cutoff: int
    name: str = "field"

    def __post_init__(self):
        if isinstance(self.cutoff, bool) or int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise DimensionError(f"Fock cutoff must be an integer >= 1, got {self.cutoff!r}")
        object.__setattr__(self, "cutoff", int(self.cutoff))

    @classmethod
    def from_dim(cls, dim: int, name: str = "field") -> "FockSpace":
        return cls(int(dim) - 1, name)

    @classmethod
    def for_alpha(cls, alpha: complex, name: str = "field", dim: Optional[int] = None) -> "FockSpace":
        """The default cutoff for `alpha`, unless an explicit dimension is given."""
        if dim is None:
            space = cls(default_cutoff(alpha), name)
            logger.debug("fock cutoff %d for alpha=%s", space.cutoff, alpha)
            return space
        return cls.from_dim(dim, name)

    @classmethod
    def from_label(cls, label: SpaceLabel) -> "FockSpace":
        if not label.fock:
            raise LabelError(f"space {label.name!r} is not a Fock space")
        return cls.from_dim(label.dim, label.name)

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    @property
    def label(self) -> SpaceLabel:
        return SpaceLabel(self.name, self.dim, fock=True)


@dataclass(frozen=True)
class AtomSpace:
    """A two-level (e, g) or three-level (e, g, a) atom."""

    levels: tuple[str, ...] = ("e", "g")
    name: str = "atom"

    def __post_init__(self):
        levels = tuple(self.levels)
        if len(set(levels)) != len(levels):
            raise LabelError(f"atom {self.name!r}: level names must be unique")
        if set(levels) not in ({"e", "g"}, {"e", "g", "a"}):
            raise LabelError(f"atom {self.name!r}: levels must be e,g or e,g,a, got {levels}")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_label(cls, label: SpaceLabel) -> "AtomSpace":
        return cls(label.levels, label.name)

    @property
    def label(self) -> SpaceLabel:
        return SpaceLabel(self.name, len(self.levels), self.levels)

    @property
    def has_erasure_level(self) -> bool:
        return "a" in self.levels

    def index(self, level: str) -> int:
        return self.levels.index(level)


@dataclass(frozen=True)
class DetectionRecord:
    outcome: str
    probability: float
    post_state: Optional[StateVector]


@dataclass(frozen=True)
class Branch:
    """One outcome history: its state, path probability and detection outcomes."""

    state: Union[StateVector, DensityOperator]
    probability: float = 1.0
    outcomes: tuple[tuple[str, str], ...] = ()
    erasure_norm: Optional[float] = None

    @property
    def outcome_labels(self) -> tuple[str, ...]:
        return tuple(f"{space}={level}" for space, level in self.outcomes)

    def branch_id(self, label: Optional[str] = None) -> str:
        path = ",".join(self.outcome_labels)
        if not path:
            return label or "root"
        return f"{label}/{path}" if label else path


def default_cutoff(alpha: complex) -> int:
    r = abs(complex(alpha))
    return math.ceil(r * r + 7 * r + 10)


def tail_mass(alpha: complex, cutoff: int) -> float:
    """Poisson mass of photon numbers above `cutoff`."""
    mu = abs(complex(alpha)) ** 2
    if mu == 0:
        return 0.0
    return float(stats.poisson.sf(cutoff, mu))


def required_cutoff(alpha: complex) -> int:
    mu = abs(complex(alpha)) ** 2
    n = max(1, int(mu))
    while tail_mass(alpha, n) >= TAIL_TOL:
        n += 1
    return n


def coherent_state(space: FockSpace, alpha: complex) -> StateVector:
    """Glauber state |alpha> on the truncated space, renormalized."""
    alpha = complex(alpha)
    if tail_mass(alpha, space.cutoff) >= TAIL_TOL:
        need = required_cutoff(alpha)
        raise TruncationError(
            f"alpha={alpha} needs Fock cutoff N >= {need} (dimension {need + 1}); "
            f"space {space.name!r} has N = {space.cutoff}",
            required_dim=need + 1,
        )
    n = np.arange(space.dim)
    if alpha == 0:
        amps = np.zeros(space.dim, dtype=complex)
        amps[0] = 1.0
    else:
        r = abs(alpha)
        log_mag = -r * r / 2 + n * math.log(r) - 0.5 * special.gammaln(n + 1)
        amps = np.exp(log_mag) * np.exp(1j * n * cmath.phase(alpha))
    return StateVector((space.label,), amps).normalize()


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """Closed-form <alpha|beta> of untruncated coherent states."""
    alpha, beta = complex(alpha), complex(beta)
    return cmath.exp(-abs(alpha) ** 2 / 2 - abs(beta) ** 2 / 2 + alpha.conjugate() * beta)


def cat_state(space: FockSpace, alpha: complex, parity: int = 1) -> StateVector:
    """Normalized |alpha> + parity * |-alpha>."""
    v = (coherent_state(space, alpha).amplitudes
         + parity * coherent_state(space, -complex(alpha)).amplitudes)
    if np.linalg.norm(v) < 1e-12:
        raise DomainError(f"cat state with alpha={alpha}, parity={parity} is the zero vector")
    return StateVector((space.label,), v).normalize()


def mean_photon_number(psi: StateVector, field: FockSpace) -> float:
    rho = reduced_density(psi, [field.label])
    return float(np.real(np.diag(rho.matrix)) @ np.arange(field.dim))


def _atom_matrix(atom: AtomSpace, block: np.ndarray) -> np.ndarray:
    """Embed a 2x2 block on (e, g) into the atom's levels, identity on a."""
    m = np.eye(len(atom.levels), dtype=complex)
    eg = [atom.index("e"), atom.index("g")]
    m[np.ix_(eg, eg)] = block
    return m


def rotation_block(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rotate_atom(psi: StateVector, atom: AtomSpace, theta: float) -> StateVector:
    """Resonant pulse of area `theta` on the e <-> g transition."""
    return apply_unitary(psi, _atom_matrix(atom, rotation_block(theta)), [atom.label])


def ramsey_pulse(psi: StateVector, atom: AtomSpace) -> StateVector:
    return apply_unitary(psi, _atom_matrix(atom, RAMSEY_PULSE), [atom.label])


def dispersive_shift(
    psi: StateVector,
    atom: AtomSpace,
    field: FockSpace,
    phi_e: float,
    phi_g: float,
) -> StateVector:
    """Conditional phase e^{i phi n} on the field, phi chosen by the atom level."""
    n = np.arange(field.dim)
    phases = np.ones((len(atom.levels), field.dim), dtype=complex)
    phases[atom.index("e")] = np.exp(1j * phi_e * n)
    phases[atom.index("g")] = np.exp(1j * phi_g * n)
    return apply_unitary(psi, np.diag(phases.reshape(-1)), [atom.label, field.label])


def level_population(psi: StateVector, atom: AtomSpace, level: str) -> float:
    pos = psi.names.index(atom.name)
    sliced = np.take(psi.as_tensor(), atom.index(level), axis=pos)
    return float(np.sum(np.abs(sliced) ** 2))


def jc_hamiltonian(atom: AtomSpace, field: FockSpace) -> np.ndarray:
    """sigma+ (x) a + sigma- (x) a^dagger over (atom, field), in units of g."""
    d = len(atom.levels)
    sigma_plus = np.zeros((d, d), dtype=complex)
    sigma_plus[atom.index("e"), atom.index("g")] = 1.0
    a = np.diag(np.sqrt(np.arange(1, field.dim)), 1).astype(complex)
    return np.kron(sigma_plus, a) + np.kron(sigma_plus.T, a.conj().T)


def jc_evolve(psi: StateVector, atom: AtomSpace, field: FockSpace, g: float, t: float) -> StateVector:
    """Resonant Jaynes-Cummings evolution: |e,0> -> cos(gt)|e,0> + i sin(gt)|g,1>."""
    if atom.has_erasure_level and level_population(psi, atom, "a") > PROBABILITY_FLOOR:
        raise ErasureOrderError(
            f"atom {atom.name!r} already populates level a; JC evolution must precede erasure"
        )
    u = linalg.expm(1j * g * t * jc_hamiltonian(atom, field))
    return apply_unitary(psi, u, [atom.label, field.label])


def erase_which_path(psi: StateVector, atom: AtomSpace) -> tuple[StateVector, float]:
    """Apply |a><e| + |a><g| and renormalize.

    Returns the renormalized state and the squared norm before renormalization.
    """
    if not atom.has_erasure_level:
        raise ErasureError(f"atom {atom.name!r} has no level a to erase into")
    if level_population(psi, atom, "a") > PROBABILITY_FLOOR:
        raise ErasureOrderError(f"atom {atom.name!r} already populates level a")
    k = np.zeros((len(atom.levels),) * 2, dtype=complex)
    k[atom.index("a"), atom.index("e")] = 1.0
    k[atom.index("a"), atom.index("g")] = 1.0
    out = apply_operator(psi, k, [atom.label])
    weight = out.norm() ** 2
    if weight <= PROBABILITY_FLOOR:
        raise ErasureError("erasure map annihilates the state (no weight on e or g)")
    logger.debug("erased which-path information on %s, weight %.15g", atom.name, weight)
    return out.normalize(), weight


def detect_atom(psi: StateVector, atom: AtomSpace) -> list[DetectionRecord]:
    """State-selective detection: one record per level, in level order."""
    d = len(atom.levels)
    records = []
    for i, level in enumerate(atom.levels):
        proj = np.zeros((d, d), dtype=complex)
        proj[i, i] = 1.0
        branch = apply_operator(psi, proj, [atom.label])
        p = branch.norm() ** 2
        post = branch.normalize() if p > PROBABILITY_FLOOR else None
        records.append(DetectionRecord(level, p, post))
    total = sum(r.probability for r in records)
    if abs(total - 1.0) > TRACE_TOL:
        raise NormalizationError(f"detection probabilities sum to {total:.15g}")
    return records


def sample_detection(records: Sequence[DetectionRecord], rng: np.random.Generator) -> DetectionRecord:
    p = np.array([r.probability for r in records])
    return records[int(rng.choice(len(records), p=p / p.sum()))]


def fork_on_detection(
    branches: Sequence[Branch],
    atom: AtomSpace,
    rng: Optional[np.random.Generator] = None,
) -> list[Branch]:
    """Detect `atom` in every branch; zero-probability outcomes open no branch."""
    out = []
    for b in branches:
        if not isinstance(b.state, StateVector):
            raise TypeError("detection needs a pure branch state")
        records = detect_atom(b.state, atom)
        if rng is not None:
            records = [sample_detection(records, rng)]
        for r in records:
            if r.post_state is None:
                continue
            out.append(replace(
                b,
                state=r.post_state,
                probability=b.probability * r.probability,
                outcomes=b.outcomes + ((atom.name, r.outcome),),
            ))
    logger.debug("detected %s: %d -> %d branches", atom.name, len(branches), len(out))
    return out


def joint_populations(
    state: Union[StateVector, DensityOperator],
    atom_a: AtomSpace,
    atom_b: AtomSpace,
) -> np.ndarray:
    """P(level_a, level_b) as a matrix indexed [a level, b level]."""
    rho = reduced_state(state, [atom_a.label, atom_b.label])
    p = rho.populations().reshape(rho.dims)
    return p if rho.names[0] == atom_a.name else p.T


def correlation_scalars(joint: np.ndarray, atom_a: AtomSpace, atom_b: AtomSpace) -> dict[str, float]:
    """P(same) - P(different) over the e/g outcomes of two atoms."""
    ae, ag = atom_a.index("e"), atom_a.index("g")
    be, bg = atom_b.index("e"), atom_b.index("g")
    same = float(joint[ae, be] + joint[ag, bg])
    different = float(joint[ae, bg] + joint[ag, be])
    return {"correlation_signal": same - different, "p_same": same, "p_different": different}


def correlation_row(
    branches: Sequence[Branch],
    atom_a: AtomSpace,
    atom_b: AtomSpace,
    label: str = "correlation",
) -> ReportRow:
    joint = sum(b.probability * joint_populations(b.state, atom_a, atom_b) for b in branches)
    return ReportRow(
        branch=label,
        probability=sum(b.probability for b in branches),
        scalars=correlation_scalars(joint, atom_a, atom_b),
    )


def cat_fringe_signal(rho_field: DensityOperator, alpha: complex) -> float:
    """Tr(rho P+) - Tr(rho P-) for the even / odd cats built on +-alpha."""
    if len(rho_field.factors) != 1:
        raise DimensionError("fringe signal needs a field-only density operator")
    field = FockSpace.from_label(rho_field.factors[0])
    plus = coherent_state(field, alpha).amplitudes
    minus = coherent_state(field, -complex(alpha)).amplitudes
    value = 0.0
    for sign, v in ((1.0, plus + minus), (-1.0, plus - minus)):
        n = np.linalg.norm(v)
        if n < 1e-12:
            continue
        v = v / n
        value += sign * float(np.real(v.conj() @ rho_field.matrix @ v))
    return value


def paris_protocol(
    alpha: complex,
    with_r2: bool = True,
    with_detection: bool = True,
    fock_dim: Optional[int] = None,
) -> list[ReportRow]:
    """Two-atom Ramsey / dispersive correlation experiment.

    Atom 1 prepares the field (R1, C, optional R2, optional detection); probe
    atom 2 then passes R1, C, R2 and is detected. Without the first detection
    the joint statistics use the final e/g populations of atom 1.
    """
    alpha = complex(alpha)
    field = FockSpace.for_alpha(alpha, dim=fock_dim)
    atom1, atom2 = AtomSpace(name="atom1"), AtomSpace(name="atom2")

    def fringe(state: StateVector) -> dict[str, float]:
        return {"fringe_signal": cat_fringe_signal(reduced_density(state, [field.label]), alpha)}

    psi = product(
        basis_state(atom1.label, "e"),
        basis_state(atom2.label, "e"),
        coherent_state(field, alpha),
    )
    rows = []
    psi = ramsey_pulse(psi, atom1)
    rows.append(ReportRow("atom1:R1", 1.0, scalars=fringe(psi)))
    psi = dispersive_shift(psi, atom1, field, 0.0, math.pi)
    rows.append(ReportRow("atom1:C", 1.0, scalars=fringe(psi)))
    if with_r2:
        psi = ramsey_pulse(psi, atom1)
        rows.append(ReportRow("atom1:R2", 1.0, scalars=fringe(psi)))

    branches = [Branch(psi)]
    if with_detection:
        branches = fork_on_detection(branches, atom1)
        rows.extend(
            ReportRow(b.branch_id(), b.probability, b.outcome_labels, fringe(b.state))
            for b in branches
        )

    probes = []
    for b in branches:
        s = ramsey_pulse(b.state, atom2)
        s = dispersive_shift(s, atom2, field, 0.0, math.pi)
        s = ramsey_pulse(s, atom2)
        probes.append(replace(b, state=s))
    probes = fork_on_detection(probes, atom2)
    rows.extend(ReportRow(b.branch_id(), b.probability, b.outcome_labels) for b in probes)
    rows.append(correlation_row(probes, atom1, atom2))
    return rows


def garching_protocol(
    g: float = 1.0,
    t_prime: float = math.pi / 4,
    with_erasure: bool = True,
    fock_dim: Optional[int] = None,
) -> list[ReportRow]:
    """Vacuum Rabi oscillation from |e,0>, then optional which-path erasure."""
    atom = AtomSpace(("e", "g", "a"))
    field = FockSpace.from_dim(fock_dim) if fock_dim is not None else FockSpace(default_cutoff(0))
    psi = product(basis_state(atom.label, "e"), basis_state(field.label, 0))
    psi = jc_evolve(psi, atom, field, g, t_prime)

    branches = [Branch(psi)]
    if with_erasure:
        erased, weight = erase_which_path(psi, atom)
        branches = fork_on_detection([Branch(erased, erasure_norm=weight)], atom)

    rows = []
    for b in branches:
        rho = reduced_density(b.state, [field.label])
        scalars, matrices = observe(rho, populations=True, coherence=(0, 1), purity=True,
                                    offdiag=True, matrix=True)
        if b.erasure_norm is not None:
            scalars["erasure_norm"] = b.erasure_norm
        rows.append(ReportRow(b.branch_id(), b.probability, b.outcome_labels, scalars, matrices))
    return rows
