"""Report rows and their JSON / CSV encodings.

Floats are written with 15 significant digits so repeated runs produce
byte-identical documents.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Optional, TextIO

import numpy as np

from catbox._errors import DomainError
from catbox._qcore import DensityOperator, purity as _purity
from catbox._version import __version__

FLOAT_DIGITS = 15
CSV_HEADER = ("scenario", "branch", "outcomes", "probability", "quantity", "value")


@dataclass(frozen=True, eq=False)
class ReportRow:
    branch: str
    probability: float
    outcomes: tuple[str, ...] = ()
    scalars: dict[str, float] = field(default_factory=dict)
    matrices: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        p = float(self.probability)
        if not (-1e-10 <= p <= 1 + 1e-10):
            raise DomainError(f"row {self.branch!r}: probability {p!r} outside [0, 1]")
        object.__setattr__(self, "probability", min(max(p, 0.0), 1.0))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))

    def close_to(self, other: "ReportRow", tol: float = 1e-12) -> bool:
        """Field-by-field comparison with an absolute numeric tolerance."""
        if (self.branch, self.outcomes) != (other.branch, other.outcomes):
            return False
        if abs(self.probability - other.probability) > tol:
            return False
        if self.scalars.keys() != other.scalars.keys() or self.matrices.keys() != other.matrices.keys():
            return False
        if any(abs(self.scalars[k] - other.scalars[k]) > tol for k in self.scalars):
            return False
        return all(
            self.matrices[k].shape == other.matrices[k].shape
            and np.allclose(self.matrices[k], other.matrices[k], rtol=0, atol=tol)
            for k in self.matrices
        )


def observe(
    rho: DensityOperator,
    *,
    populations: bool = False,
    coherence: Optional[tuple[int, int]] = None,
    purity: bool = False,
    offdiag: bool = False,
    matrix: bool = False,
) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    """Named scalars and matrices describing `rho`, in a fixed order."""
    m = rho.matrix
    d = m.shape[0]
    scalars: dict[str, float] = {}
    matrices: dict[str, np.ndarray] = {}
    if populations:
        for i, p in enumerate(np.real(np.diag(m))):
            scalars[f"population[{i}]"] = float(p)
    if coherence is not None:
        i, j = coherence
        if not (0 <= i < d and 0 <= j < d):
            raise DomainError(f"coherence index ({i},{j}) out of range for dimension {d}")
        c = complex(m[i, j])
        scalars[f"coherence_abs[{i},{j}]"] = abs(c)
        scalars[f"coherence_re[{i},{j}]"] = c.real
        scalars[f"coherence_im[{i},{j}]"] = c.imag
    if purity:
        scalars["purity"] = _purity(rho)
    if offdiag:
        off = np.abs(m - np.diag(np.diag(m)))
        scalars["max_offdiag"] = float(off.max()) if d > 1 else 0.0
    if matrix:
        matrices["rho"] = np.array(m)
    return scalars, matrices


def fmt_float(x: float) -> float:
    """Round to FLOAT_DIGITS significant digits; negative zero becomes zero."""
    v = float(f"{float(x):.{FLOAT_DIGITS}g}")
    return 0.0 if v == 0 else v


def _plain(value: Any) -> Any:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [fmt_float(value.real), fmt_float(value.imag)]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    raise TypeError(f"cannot encode {type(value).__name__} in a report")


def _matrix_record(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "shape": list(m.shape),
        "data": [[fmt_float(z.real), fmt_float(z.imag)] for z in m.reshape(-1)],
    }


def row_record(row: ReportRow, dump_matrices: bool = False) -> dict:
    record = {
        "branch": row.branch,
        "outcomes": list(row.outcomes),
        "probability": fmt_float(row.probability),
        "scalars": {k: fmt_float(v) for k, v in row.scalars.items()},
    }
    if dump_matrices and row.matrices:
        record["matrices"] = {k: _matrix_record(v) for k, v in row.matrices.items()}
    return record


def build_document(
    scenario: str,
    parameters: dict,
    rows: Iterable[ReportRow],
    dump_matrices: bool = False,
) -> dict:
    return {
        "catbox_version": __version__,
        "scenario": scenario,
        "parameters": _plain(parameters),
        "rows": [row_record(r, dump_matrices) for r in rows],
    }


def dumps_json(documents: list[dict]) -> str:
    """A single JSON document; several runs are wrapped in a `runs` list."""
    if len(documents) == 1:
        payload = documents[0]
    else:
        payload = {"catbox_version": __version__, "runs": documents}
    return json.dumps(payload, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _num(x: float) -> str:
    v = fmt_float(x)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {v!r} in report")
    return repr(v)


def csv_records(document: dict) -> Iterator[list[str]]:
    scenario = document["scenario"]
    for row in document["rows"]:
        head = [scenario, row["branch"], ";".join(row["outcomes"]), _num(row["probability"])]
        yield head + ["probability", _num(row["probability"])]
        for name, value in row["scalars"].items():
            yield head + [name, _num(value)]
        for name, mat in row.get("matrices", {}).items():
            cols = mat["shape"][1]
            for k, (re, im) in enumerate(mat["data"]):
                i, j = divmod(k, cols)
                yield head + [f"{name}[{i},{j}].re", _num(re)]
                yield head + [f"{name}[{i},{j}].im", _num(im)]


def write_csv(documents: list[dict], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for document in documents:
        writer.writerows(csv_records(document))
