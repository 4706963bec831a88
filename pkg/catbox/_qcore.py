"""Dense complex linear algebra over labeled tensor-product Hilbert spaces.

Joint bases follow the factor order: the first factor is the most significant
index, exactly as `numpy.kron` lays out a product. All values are immutable;
every operation returns a new object.
"""

import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np
from scipy import linalg

from catbox._errors import (
    DensityError,
    DimensionError,
    LabelError,
    NormalizationError,
    ObservableError,
    UnitarityError,
)

logger = logging.getLogger(__name__)

# Single audit point for every numerical gate in the package.
HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-12
EIGEN_FLOOR = -1e-10
# Detection outcomes below this probability do not open a branch.
PROBABILITY_FLOOR = 1e-14


@dataclass(frozen=True)
class SpaceLabel:
    """A named tensor factor. `levels` names the basis states in index order."""

    name: str
    dim: int
    levels: tuple[str, ...] = ()
    fock: bool = False

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise LabelError("space name must be a non-empty string")
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise DimensionError(f"space {self.name!r}: dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        levels = tuple(self.levels) if self.levels else tuple(str(i) for i in range(self.dim))
        if len(levels) != self.dim:
            raise DimensionError(
                f"space {self.name!r}: {len(levels)} level names for dim {self.dim}"
            )
        if len(set(levels)) != len(levels):
            raise LabelError(f"space {self.name!r}: level names must be unique")
        object.__setattr__(self, "levels", levels)

    def index(self, level: Union[int, str]) -> int:
        """Basis index of a level given by name or by integer index."""
        if isinstance(level, str):
            try:
                return self.levels.index(level)
            except ValueError:
                raise LabelError(f"space {self.name!r} has no level {level!r}") from None
        i = int(level)
        if not 0 <= i < self.dim:
            raise LabelError(f"space {self.name!r}: level index {i} out of range 0..{self.dim - 1}")
        return i


class SpaceRegistry:
    """Declared spaces, unique by name, in declaration order."""

    def __init__(self, spaces: Iterable[SpaceLabel] = ()):
        self._spaces: dict[str, SpaceLabel] = {}
        for space in spaces:
            self.declare(space)

    def declare(self, space: SpaceLabel) -> SpaceLabel:
        if space.name in self._spaces:
            raise LabelError(f"space {space.name!r} already declared")
        self._spaces[space.name] = space
        return space

    def get(self, name: str) -> SpaceLabel:
        try:
            return self._spaces[name]
        except KeyError:
            raise LabelError(f"undeclared space {name!r}") from None

    def __contains__(self, name: object) -> bool:
        return name in self._spaces

    def __iter__(self):
        return iter(self._spaces.values())

    def __len__(self) -> int:
        return len(self._spaces)


Target = Union[SpaceLabel, str]


def _name(target: Target) -> str:
    return target.name if isinstance(target, SpaceLabel) else target


def _check_unique(factors: Sequence[SpaceLabel]) -> None:
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        raise LabelError(f"duplicate factor labels in {names}")


def _positions(factors: Sequence[SpaceLabel], targets: Iterable[Target]) -> list[int]:
    """Positions of `targets` in `factors`, in the order the targets are given."""
    names = [f.name for f in factors]
    out = []
    for t in targets:
        name = _name(t)
        if name not in names:
            raise LabelError(f"unknown label {name!r}; factors are {names}")
        pos = names.index(name)
        if isinstance(t, SpaceLabel) and t.dim != factors[pos].dim:
            raise DimensionError(f"label {name!r} has dim {factors[pos].dim}, not {t.dim}")
        if pos in out:
            raise LabelError(f"label {name!r} targeted twice")
        out.append(pos)
    return out


def _keep_positions(factors: Sequence[SpaceLabel], keep: Iterable[Target]) -> list[int]:
    """Positions of the kept factors in their original relative order."""
    pos = _positions(factors, keep)
    if not pos:
        raise LabelError("keep must name at least one factor")
    return sorted(pos)


def _to_natural(matrix: np.ndarray, order: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Reorder an operator whose tensor axes are laid out as `order` back to 0..n-1."""
    n = len(order)
    cur = [dims[i] for i in order]
    inv = list(np.argsort(order))
    t = matrix.reshape(cur + cur).transpose(inv + [n + i for i in inv])
    d = math.prod(dims)
    return t.reshape(d, d)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the joint basis of an ordered factor list."""

    factors: tuple[SpaceLabel, ...]
    amplitudes: np.ndarray
    norm_tolerance: float = NORM_TOL

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise DimensionError("a state needs at least one factor")
        _check_unique(factors)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        expected = math.prod(f.dim for f in factors)
        if amps.size != expected:
            raise DimensionError(f"{amps.size} amplitudes for joint dimension {expected}")
        amps.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, factors: Sequence[SpaceLabel], levels: Sequence[Union[int, str]]) -> "StateVector":
        """The product basis state with one level per factor."""
        factors = tuple(factors)
        if len(levels) != len(factors):
            raise DimensionError(f"{len(levels)} levels for {len(factors)} factors")
        idx = [f.index(lv) for f, lv in zip(factors, levels)]
        amps = np.zeros(math.prod(f.dim for f in factors), dtype=complex)
        amps[np.ravel_multi_index(idx, [f.dim for f in factors])] = 1.0
        return cls(factors, amps)

    @property
    def dims(self) -> list[int]:
        return [f.dim for f in self.factors]

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.factors]

    def factor(self, name: str) -> SpaceLabel:
        return self.factors[_positions(self.factors, [name])[0]]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self) -> bool:
        return abs(self.norm() - 1.0) <= self.norm_tolerance

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return StateVector(self.factors, self.amplitudes / n, self.norm_tolerance)

    def amplitude(self, *levels: Union[int, str]) -> complex:
        idx = [f.index(lv) for f, lv in zip(self.factors, levels, strict=True)]
        return complex(self.amplitudes[np.ravel_multi_index(idx, self.dims)])

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


def density_violations(matrix: np.ndarray) -> list[str]:
    """Names of the density-operator gates `matrix` fails (empty when valid)."""
    problems = []
    dev = hermiticity_deviation(matrix)
    if dev > HERMITIAN_TOL:
        problems.append(f"not Hermitian (deviation {dev:.3g})")
    tr = np.trace(matrix)
    if abs(tr - 1.0) > TRACE_TOL:
        problems.append(f"trace {tr.real:.15g}{tr.imag:+.3g}i != 1")
    lo = min_eigenvalue(matrix)
    if lo < EIGEN_FLOOR:
        problems.append(f"negative eigenvalue {lo:.3g}")
    return problems


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix over a joint basis."""

    factors: tuple[SpaceLabel, ...]
    matrix: np.ndarray

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise DimensionError("a density operator needs at least one factor")
        _check_unique(factors)
        m = np.array(self.matrix, dtype=complex)
        d = math.prod(f.dim for f in factors)
        if m.shape != (d, d):
            raise DimensionError(f"matrix shape {m.shape} for joint dimension {d}")
        problems = density_violations(m)
        if problems:
            raise DensityError("invalid density operator: " + "; ".join(problems))
        m.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "matrix", m)

    @property
    def dims(self) -> list[int]:
        return [f.dim for f in self.factors]

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.factors]

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()


@dataclass(frozen=True, eq=False)
class Observable:
    """A Hermitian operator over an ordered factor list."""

    factors: tuple[SpaceLabel, ...]
    matrix: np.ndarray

    def __post_init__(self):
        factors = tuple(self.factors)
        _check_unique(factors)
        m = np.array(self.matrix, dtype=complex)
        d = math.prod(f.dim for f in factors)
        if m.shape != (d, d):
            raise DimensionError(f"observable shape {m.shape} for joint dimension {d}")
        dev = hermiticity_deviation(m)
        if dev > HERMITIAN_TOL:
            raise ObservableError(f"observable is not Hermitian (deviation {dev:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "matrix", m)


State = Union[StateVector, DensityOperator]


def hermiticity_deviation(matrix: np.ndarray) -> float:
    m = np.asarray(matrix)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def min_eigenvalue(matrix: np.ndarray) -> float:
    m = np.asarray(matrix, dtype=complex)
    return float(linalg.eigvalsh((m + m.conj().T) / 2).min())


def is_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(matrix, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= tol


def basis_state(space: SpaceLabel, level: Union[int, str]) -> StateVector:
    return StateVector.basis((space,), (level,))


def tensor(a: State, b: State) -> State:
    """Kronecker product of two states over disjoint factor lists."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        _check_disjoint(a.factors, b.factors)
        return StateVector(a.factors + b.factors, np.kron(a.amplitudes, b.amplitudes), a.norm_tolerance)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        _check_disjoint(a.factors, b.factors)
        return DensityOperator(a.factors + b.factors, np.kron(a.matrix, b.matrix))
    raise TypeError(
        f"tensor needs two StateVectors or two DensityOperators, got "
        f"{type(a).__name__} and {type(b).__name__}"
    )


def product(*states: State) -> State:
    """Left-to-right tensor product of several states."""
    if not states:
        raise DimensionError("product of zero states")
    return reduce(tensor, states)


def _check_disjoint(a: Sequence[SpaceLabel], b: Sequence[SpaceLabel]) -> None:
    clash = {f.name for f in a} & {f.name for f in b}
    if clash:
        raise LabelError(f"label collision: {sorted(clash)}")


def to_density(psi: StateVector) -> DensityOperator:
    """The projector |psi><psi|."""
    _require_normalized(psi)
    return DensityOperator(psi.factors, np.outer(psi.amplitudes, psi.amplitudes.conj()))


def _require_normalized(psi: StateVector) -> None:
    n = psi.norm()
    if abs(n - 1.0) > psi.norm_tolerance:
        raise NormalizationError(f"state norm {n:.15g} is not 1 within {psi.norm_tolerance:g}")


def reduced_density(psi: StateVector, keep: Iterable[Target]) -> DensityOperator:
    """Partial trace of |psi><psi| computed directly from the amplitudes."""
    _require_normalized(psi)
    keep_idx = _keep_positions(psi.factors, keep)
    drop_idx = [i for i in range(len(psi.factors)) if i not in keep_idx]
    dk = math.prod(psi.dims[i] for i in keep_idx)
    t = psi.as_tensor().transpose(keep_idx + drop_idx).reshape(dk, -1)
    return DensityOperator(tuple(psi.factors[i] for i in keep_idx), t @ t.conj().T)


def partial_trace(rho: DensityOperator, keep: Iterable[Target]) -> DensityOperator:
    """Trace out every factor not in `keep`; kept factors stay in original order."""
    keep_idx = _keep_positions(rho.factors, keep)
    n = len(rho.factors)
    drop_idx = [i for i in range(n) if i not in keep_idx]
    dims = rho.dims
    dk = math.prod(dims[i] for i in keep_idx)
    dd = math.prod(dims[i] for i in drop_idx)
    order = keep_idx + drop_idx
    t = rho.matrix.reshape(dims + dims).transpose(order + [n + i for i in order])
    reduced = np.einsum("ajbj->ab", t.reshape(dk, dd, dk, dd))
    logger.debug("partial trace %s -> %s", ",".join(rho.names),
                 ",".join(rho.factors[i].name for i in keep_idx))
    return DensityOperator(tuple(rho.factors[i] for i in keep_idx), reduced)


def reduced_state(state: State, keep: Iterable[Target]) -> DensityOperator:
    """Reduced density operator of a pure or mixed state."""
    if isinstance(state, StateVector):
        return reduced_density(state, keep)
    return partial_trace(state, keep)


def lift(obs: Observable, factors: Sequence[SpaceLabel]) -> np.ndarray:
    """Matrix of obs (x) identity over `factors`, in the natural factor order."""
    factors = tuple(factors)
    pos = _positions(factors, obs.factors)
    rest = [i for i in range(len(factors)) if i not in pos]
    eye = np.eye(math.prod(factors[i].dim for i in rest), dtype=complex)
    return _to_natural(np.kron(obs.matrix, eye), pos + rest, [f.dim for f in factors])


def expectation(rho: DensityOperator, obs: Observable) -> float:
    """Tr(rho O), lifting O with identities on the factors it does not act on."""
    if [f.name for f in obs.factors] == rho.names:
        _positions(rho.factors, obs.factors)
        o = obs.matrix
    else:
        o = lift(obs, rho.factors)
    value = np.einsum("ij,ji->", rho.matrix, o)
    if abs(value.imag) > HERMITIAN_TOL:
        raise ObservableError(f"expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


def apply_operator(psi: StateVector, op: np.ndarray, targets: Sequence[Target]) -> StateVector:
    """Apply a linear map on `targets` (in the given order), identity elsewhere.

    No normalization and no unitarity check: this is the carrier for
    projections and the erasure map.
    """
    pos = _positions(psi.factors, targets)
    if not pos:
        raise LabelError("apply needs at least one target")
    dims = psi.dims
    dt = math.prod(dims[i] for i in pos)
    op = np.asarray(op, dtype=complex)
    if op.shape != (dt, dt):
        raise DimensionError(f"operator shape {op.shape} for target dimension {dt}")
    order = pos + [i for i in range(len(dims)) if i not in pos]
    t = psi.as_tensor().transpose(order).reshape(dt, -1)
    t = (op @ t).reshape([dims[i] for i in order]).transpose(np.argsort(order))
    return StateVector(psi.factors, t.reshape(-1), psi.norm_tolerance)


def apply_unitary(psi: StateVector, u: np.ndarray, targets: Sequence[Target]) -> StateVector:
    """Apply a unitary on `targets`; identity on every other factor."""
    if not is_unitary(u):
        raise UnitarityError("matrix is not unitary within tolerance")
    return apply_operator(psi, u, targets)


def coherence(rho: DensityOperator, bra: StateVector, ket: StateVector) -> complex:
    """<bra|rho|ket>."""
    for s in (bra, ket):
        if s.names != rho.names or s.dims != rho.dims:
            raise DimensionError(
                f"state over {list(zip(s.names, s.dims))} does not match "
                f"{list(zip(rho.names, rho.dims))}"
            )
    return complex(bra.amplitudes.conj() @ rho.matrix @ ket.amplitudes)


def purity(rho: DensityOperator) -> float:
    """Tr(rho^2)."""
    return float(np.real(np.vdot(rho.matrix, rho.matrix)))


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b> for states over the same factor list."""
    if a.names != b.names or a.dims != b.dims:
        raise DimensionError(f"inner product of states over {a.names} and {b.names}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 between normalized pure states."""
    return abs(inner(a, b)) ** 2


def schmidt_coefficients(psi: StateVector, keep: Iterable[Target]) -> np.ndarray:
    """Singular values of the bipartition (keep | rest), descending."""
    keep_idx = _keep_positions(psi.factors, keep)
    drop_idx = [i for i in range(len(psi.factors)) if i not in keep_idx]
    dk = math.prod(psi.dims[i] for i in keep_idx)
    t = psi.as_tensor().transpose(keep_idx + drop_idx).reshape(dk, -1)
    return linalg.svdvals(t)


def entropy(rho: DensityOperator, base: float = 2.0) -> float:
    """von Neumann entropy -Tr(rho log rho)."""
    w = linalg.eigvalsh((rho.matrix + rho.matrix.conj().T) / 2)
    w = w[w > PROBABILITY_FLOOR]
    return float(-np.sum(w * np.log(w)) / math.log(base))
