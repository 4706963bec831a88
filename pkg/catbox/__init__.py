from catbox._catmodel import DecayParams, cat_report, evolve_decay, reduced_cat, rotated_basis_check
from catbox._cavity import (
    AtomSpace,
    Branch,
    FockSpace,
    coherent_state,
    detect_atom,
    dispersive_shift,
    erase_which_path,
    garching_protocol,
    jc_evolve,
    paris_protocol,
    ramsey_pulse,
)
from catbox._errors import CatboxError
from catbox._measurement import PointerChain, apparatus_state, premeasurement
from catbox._protocol import Protocol, interpret, parse, unparse
from catbox._qcore import (
    DensityOperator,
    Observable,
    SpaceLabel,
    StateVector,
    apply_unitary,
    expectation,
    partial_trace,
    reduced_density,
    tensor,
    to_density,
)
from catbox._report import ReportRow
from catbox._runner import RunConfig, run
from catbox._version import __version__

__all__ = [
    "AtomSpace",
    "Branch",
    "CatboxError",
    "DecayParams",
    "DensityOperator",
    "FockSpace",
    "Observable",
    "PointerChain",
    "Protocol",
    "ReportRow",
    "RunConfig",
    "SpaceLabel",
    "StateVector",
    "__version__",
    "apparatus_state",
    "apply_unitary",
    "cat_report",
    "coherent_state",
    "detect_atom",
    "dispersive_shift",
    "erase_which_path",
    "evolve_decay",
    "expectation",
    "garching_protocol",
    "interpret",
    "jc_evolve",
    "paris_protocol",
    "parse",
    "partial_trace",
    "premeasurement",
    "ramsey_pulse",
    "reduced_cat",
    "reduced_density",
    "rotated_basis_check",
    "run",
    "tensor",
    "to_density",
    "unparse",
]
