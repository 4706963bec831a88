"""The `.qproto` scenario language.

One instruction per line, `OPCODE key=value ...`, `#` starts a comment. The
leading comment block of a file becomes the protocol description. `parse` is
total: malformed input yields diagnostics, never an exception. `unparse` emits
the canonical form, and `interpret` runs a protocol into report rows.
"""

import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np

from catbox._catmodel import DEFAULT_DECAY_RATE, DecayParams, decay_unitary
from catbox._cavity import (
    AtomSpace,
    Branch,
    FockSpace,
    cat_fringe_signal,
    coherent_state,
    correlation_row,
    dispersive_shift,
    erase_which_path,
    fork_on_detection,
    jc_evolve,
    ramsey_pulse,
    rotate_atom,
)
from catbox._errors import CatboxError, NormalizationError, ProtocolRuntimeError
from catbox._measurement import COMPLETIONS, couple_pointer
from catbox._qcore import (
    NORM_TOL,
    SpaceLabel,
    StateVector,
    apply_unitary,
    basis_state,
    product,
    reduced_state,
    to_density,
)
from catbox._report import ReportRow, observe

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_LEVEL = re.compile(r"^[A-Za-z0-9_]+$")
_LABEL = re.compile(r"^[A-Za-z0-9_:.\-]+$")
_REAL = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")
_INT = re.compile(r"^\d{1,6}$")

REPORT_FLAGS = ("populations", "purity", "offdiag", "matrix", "erasure")
# Opcodes that change the state; none may follow TRACE.
EVOLUTION = ("PULSE", "DISPERSE", "JC", "ERASE", "DETECT", "DECAY", "MEASURE")


@dataclass(frozen=True)
class _Schema:
    positional: tuple[str, ...] = ()
    required: tuple[str, ...] = ()
    optional: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()

    @property
    def keys(self) -> tuple[str, ...]:
        return self.positional + self.required + self.optional


SCHEMAS = {
    "VERSION": _Schema(positional=("version",), required=("version",)),
    "SPACE": _Schema(positional=("name",), required=("name",), optional=("levels", "fock", "dim")),
    "PULSE": _Schema(positional=("atom",), required=("atom",), optional=("theta",)),
    "DISPERSE": _Schema(required=("phi_e", "phi_g"), optional=("atom", "field")),
    "JC": _Schema(required=("g", "t"), optional=("atom", "field")),
    "ERASE": _Schema(positional=("atom",), required=("atom",)),
    "DETECT": _Schema(positional=("atom",), required=("atom",)),
    "DECAY": _Schema(required=("t",), optional=("lambda", "nucleus", "cat")),
    "MEASURE": _Schema(required=("system", "pointer"), optional=("completion",)),
    "TRACE": _Schema(required=("keep",)),
    "REPORT": _Schema(optional=("label", "keep", "coherence", "fringe", "correlation"), flags=REPORT_FLAGS),
}
OPCODES = ("VERSION", "SPACE", "INIT") + tuple(k for k in SCHEMAS if k not in ("VERSION", "SPACE"))


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


@dataclass(frozen=True)
class Ket:
    """An INIT factor state: a level name, a coherent amplitude or explicit amplitudes."""

    kind: str
    value: Any

    def __str__(self) -> str:
        if self.kind == "coh":
            return "coh:" + format_complex(self.value)
        if self.kind == "amps":
            return "amps:" + ",".join(format_complex(z) for z in self.value)
        return str(self.value)


@dataclass(frozen=True)
class Instruction:
    opcode: str
    args: dict[str, Any]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Protocol:
    instructions: tuple[Instruction, ...] = ()
    name: str = "protocol"
    description: str = ""
    version: int = PROTOCOL_VERSION


@dataclass(frozen=True)
class ParseResult:
    protocol: Optional[Protocol]
    diagnostics: tuple[Diagnostic, ...] = ()

    @property
    def ok(self) -> bool:
        return self.protocol is not None


# ---------------------------------------------------------------------------
# Literals
# ---------------------------------------------------------------------------

def parse_real(text: str) -> float:
    if not _REAL.match(text):
        raise ValueError(f"malformed number {text!r}")
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"number {text!r} is out of range")
    return value


def parse_complex(text: str) -> complex:
    """`re`, `imi`, `re+imi` or `re-imi`; `i` alone stands for a unit coefficient."""
    if not text.endswith("i"):
        return complex(parse_real(text), 0.0)
    body = text[:-1]
    split = None
    for k in range(len(body) - 1, 0, -1):
        if body[k] in "+-" and body[k - 1] not in "eE":
            split = k
            break
    real, imag = ("0", body) if split is None else (body[:split], body[split:])
    if imag in ("", "+", "-"):
        imag += "1"
    try:
        return complex(parse_real(real), parse_real(imag))
    except ValueError:
        raise ValueError(f"malformed complex number {text!r}") from None


def format_real(x: float) -> str:
    return repr(float(x))


def format_complex(z: complex) -> str:
    z = complex(z)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{format_real(z.real)}{sign}{format_real(abs(z.imag))}i"


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _is_atom(space: SpaceLabel) -> bool:
    return set(space.levels) in ({"e", "g"}, {"e", "g", "a"})


class _Parser:
    def __init__(self, name: str):
        self.name = name
        self.diagnostics: list[Diagnostic] = []
        self.instructions: list[Instruction] = []
        self.spaces: dict[str, SpaceLabel] = {}
        self.factors: Optional[list[str]] = None
        self.version: Optional[int] = None
        self.seen = False
        self.traced = False
        self.erased = False

    def error(self, line: int, column: int, message: str) -> None:
        self.diagnostics.append(Diagnostic(line, column, message))

    def run(self, source: str) -> ParseResult:
        lines = source.splitlines()
        description = _leading_comments(lines)
        for lineno, raw in enumerate(lines, 1):
            text = raw.split("#", 1)[0]
            tokens = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", text)]
            if tokens:
                self.line(lineno, tokens)
        if self.diagnostics:
            return ParseResult(None, tuple(self.diagnostics))
        protocol = Protocol(tuple(self.instructions), self.name, description, self.version or PROTOCOL_VERSION)
        return ParseResult(protocol, ())

    def line(self, lineno: int, tokens: list[tuple[str, int]]) -> None:
        opcode, col = tokens[0]
        first, self.seen = not self.seen, True
        if opcode not in OPCODES:
            self.error(lineno, col, f"unknown opcode {opcode!r}")
            return
        if opcode == "VERSION":
            if not first:
                self.error(lineno, col, "VERSION must be the first instruction")
            self.version_line(lineno, col, tokens[1:])
            return
        if opcode == "INIT":
            self.init(lineno, col, tokens[1:])
            return
        raw = self.collect(lineno, opcode, col, tokens[1:])
        if raw is None:
            return
        if opcode == "SPACE" and self.factors is not None:
            self.error(lineno, col, "SPACE after INIT")
            return
        if opcode != "SPACE" and self.factors is None:
            self.error(lineno, col, f"{opcode} before INIT")
            return
        if opcode in EVOLUTION and self.traced:
            self.error(lineno, col, f"{opcode} after TRACE: the state is already reduced")
            return
        args = getattr(self, "op_" + opcode.lower())(lineno, raw)
        if args is not None:
            self.instructions.append(Instruction(opcode, args, lineno))

    def collect(self, lineno, opcode, col, tokens) -> Optional[dict[str, tuple[Any, int]]]:
        """Match tokens against the opcode schema; values stay raw text."""
        schema = SCHEMAS[opcode]
        raw: dict[str, tuple[Any, int]] = {}
        slots = list(schema.positional)
        ok = True
        for tok, tcol in tokens:
            if "=" in tok:
                key, value = tok.split("=", 1)
                if not key or not value:
                    self.error(lineno, tcol, f"malformed argument {tok!r}")
                    ok = False
                    continue
                if key in schema.flags:
                    self.error(lineno, tcol, f"flag {key} takes no value")
                    ok = False
                    continue
                if key not in schema.keys:
                    self.error(lineno, tcol, f"unknown argument {key} for {opcode}")
                    ok = False
                    continue
            elif tok in schema.flags:
                key, value = tok, True
            elif slots:
                key, value = slots[0], tok
            else:
                self.error(lineno, tcol, f"unexpected word {tok!r}")
                ok = False
                continue
            if key in raw:
                self.error(lineno, tcol, f"duplicate argument {key}")
                ok = False
                continue
            if key in slots:
                slots.remove(key)
            raw[key] = (value, tcol)
        for name in schema.required:
            if name not in raw and ok:
                self.error(lineno, col, f"missing argument {name}")
                ok = False
        return raw if ok else None

    # -- value conversion ---------------------------------------------------

    def real(self, lineno, raw, key) -> Optional[float]:
        text, col = raw[key]
        try:
            return parse_real(text)
        except ValueError:
            self.error(lineno, col, f"malformed number {text!r} for {key}")
            return None

    def complex_(self, lineno, raw, key) -> Optional[complex]:
        text, col = raw[key]
        try:
            return parse_complex(text)
        except ValueError:
            self.error(lineno, col, f"malformed complex number {text!r} for {key}")
            return None

    def integer(self, lineno, raw, key, minimum: int) -> Optional[int]:
        text, col = raw[key]
        if not _INT.match(text):
            self.error(lineno, col, f"{key} must be a non-negative integer below 10**6, got {text!r}")
            return None
        value = int(text)
        if value < minimum:
            self.error(lineno, col, f"{key} must be >= {minimum}, got {value}")
            return None
        return value

    def space(self, lineno, name: str, col: int, kind: Optional[str] = None) -> Optional[str]:
        """Resolve a reference to a declared space present in the current state."""
        if name not in self.spaces:
            self.error(lineno, col, f"undeclared space {name!r}")
            return None
        if self.factors is not None and name not in self.factors:
            why = "was traced out" if self.traced else "is not part of the initial state"
            self.error(lineno, col, f"space {name!r} {why}")
            return None
        label = self.spaces[name]
        if kind == "atom" and not _is_atom(label):
            self.error(lineno, col, f"space {name!r} is not an atom (levels e,g or e,g,a)")
            return None
        if kind == "fock" and not label.fock:
            self.error(lineno, col, f"space {name!r} is not a Fock space")
            return None
        if kind == "qubit" and label.dim != 2:
            self.error(lineno, col, f"space {name!r} must have dim 2, got {label.dim}")
            return None
        return name

    def ref(self, lineno, raw, key, kind=None, default: Optional[str] = None, opcol: int = 1):
        if key in raw:
            return self.space(lineno, *raw[key], kind=kind)
        if default is not None:
            return self.space(lineno, default, opcol, kind=kind)
        pred = _is_atom if kind == "atom" else (lambda s: s.fock)
        found = [n for n in self.factors if pred(self.spaces[n])]
        if len(found) == 1:
            return found[0]
        what = "atom" if kind == "atom" else "field"
        problem = "no" if not found else "ambiguous"
        self.error(lineno, opcol, f"{problem} {what} in the state; name it with {key}=")
        return None

    def names(self, lineno, raw, key) -> Optional[tuple[str, ...]]:
        text, col = raw[key]
        parts = text.split(",")
        if any(not p for p in parts) or len(set(parts)) != len(parts):
            self.error(lineno, col, f"malformed name list {text!r} for {key}")
            return None
        resolved = [self.space(lineno, p, col) for p in parts]
        return None if None in resolved else tuple(resolved)

    # -- opcodes ------------------------------------------------------------

    def version_line(self, lineno, col, tokens) -> None:
        raw = self.collect(lineno, "VERSION", col, tokens)
        if raw is None:
            return
        text, vcol = raw["version"]
        if text != str(PROTOCOL_VERSION):
            self.error(lineno, vcol, f"unsupported protocol version {text!r}; expected {PROTOCOL_VERSION}")
            return
        self.version = PROTOCOL_VERSION

    def op_space(self, lineno, raw):
        name, col = raw["name"]
        if not _NAME.match(name):
            self.error(lineno, col, f"invalid space name {name!r}")
            return None
        if name in self.spaces:
            self.error(lineno, col, f"space {name!r} already declared")
            return None
        given = [k for k in ("levels", "fock", "dim") if k in raw]
        if len(given) != 1:
            self.error(lineno, col, "SPACE needs exactly one of levels=, fock=, dim=")
            return None
        kind = given[0]
        if kind == "levels":
            text, lcol = raw["levels"]
            levels = tuple(text.split(","))
            if any(not _LEVEL.match(lv) for lv in levels) or len(set(levels)) != len(levels):
                self.error(lineno, lcol, f"malformed level list {text!r}")
                return None
            label, value = SpaceLabel(name, len(levels), levels), levels
        else:
            value = self.integer(lineno, raw, kind, 2 if kind == "fock" else 1)
            if value is None:
                return None
            label = SpaceLabel(name, value, fock=kind == "fock")
        self.spaces[name] = label
        return {"name": name, kind: value}

    def init(self, lineno, col, tokens) -> None:
        if self.factors is not None:
            self.error(lineno, col, "INIT given twice")
            return
        args: dict[str, Ket] = {}
        ok = True
        for tok, tcol in tokens:
            key, sep, text = tok.partition("=")
            if not sep or not key or not text:
                self.error(lineno, tcol, f"INIT needs space=ket pairs, got {tok!r}")
                ok = False
            elif key not in self.spaces:
                self.error(lineno, tcol, f"undeclared space {key!r}")
                ok = False
            elif key in args:
                self.error(lineno, tcol, f"duplicate argument {key}")
                ok = False
            else:
                ket = self.ket(lineno, tcol, self.spaces[key], text)
                ok = ok and ket is not None
                if ket is not None:
                    args[key] = ket
        if not tokens:
            self.error(lineno, col, "INIT needs at least one space")
            ok = False
        self.factors = list(args) if ok else list(self.spaces)
        if ok:
            self.instructions.append(Instruction("INIT", args, lineno))

    def ket(self, lineno, col, space: SpaceLabel, text: str) -> Optional[Ket]:
        if text.startswith("|") and text[-1:] in ("⟩", ">"):
            text = text[1:-1]
        if text.startswith(("coh:", "amps:")):
            kind, _, body = text.partition(":")
            try:
                values = tuple(parse_complex(p) for p in body.split(","))
            except ValueError as exc:
                self.error(lineno, col, str(exc))
                return None
            if kind == "coh":
                if not space.fock:
                    self.error(lineno, col, f"coherent ket needs a Fock space, {space.name!r} is not one")
                    return None
                if len(values) != 1:
                    self.error(lineno, col, f"coherent ket takes one amplitude, got {len(values)}")
                    return None
                return Ket("coh", values[0])
            if len(values) != space.dim:
                self.error(lineno, col, f"{len(values)} amplitudes for {space.name!r} of dim {space.dim}")
                return None
            norm = float(np.linalg.norm(values))
            if abs(norm - 1.0) > NORM_TOL:
                self.error(lineno, col, f"amplitudes for {space.name!r} have norm {norm:.15g}, expected 1")
                return None
            return Ket("amps", values)
        if text == "vac" and space.fock:
            text = "0"
        if text not in space.levels:
            self.error(lineno, col, f"space {space.name!r} has no level {text!r}")
            return None
        return Ket("level", text)

    def op_pulse(self, lineno, raw):
        atom = self.ref(lineno, raw, "atom", "atom")
        args = {"atom": atom}
        if "theta" in raw:
            args["theta"] = self.real(lineno, raw, "theta")
        return None if None in args.values() else args

    def op_disperse(self, lineno, raw):
        args = {
            "atom": self.ref(lineno, raw, "atom", "atom"),
            "field": self.ref(lineno, raw, "field", "fock"),
            "phi_e": self.real(lineno, raw, "phi_e"),
            "phi_g": self.real(lineno, raw, "phi_g"),
        }
        return None if None in args.values() else args

    def op_jc(self, lineno, raw):
        args = {
            "atom": self.ref(lineno, raw, "atom", "atom"),
            "field": self.ref(lineno, raw, "field", "fock"),
            "g": self.real(lineno, raw, "g"),
            "t": self.real(lineno, raw, "t"),
        }
        return None if None in args.values() else args

    def op_erase(self, lineno, raw):
        atom = self.ref(lineno, raw, "atom", "atom")
        if atom is None:
            return None
        self.erased = True
        return {"atom": atom}

    def op_detect(self, lineno, raw):
        atom = self.ref(lineno, raw, "atom", "atom")
        return None if atom is None else {"atom": atom}

    def op_decay(self, lineno, raw):
        args = {
            "nucleus": self.ref(lineno, raw, "nucleus", "qubit", default="nucleus"),
            "cat": self.ref(lineno, raw, "cat", "qubit", default="cat"),
            "t": self.real(lineno, raw, "t"),
        }
        if "lambda" in raw:
            args["lambda"] = self.real(lineno, raw, "lambda")
        return None if None in args.values() else args

    def op_measure(self, lineno, raw):
        args = {
            "system": self.ref(lineno, raw, "system"),
            "pointer": self.ref(lineno, raw, "pointer"),
            "completion": raw.get("completion", ("cyclic", 1))[0],
        }
        if None in args.values():
            return None
        if args["completion"] not in COMPLETIONS:
            self.error(lineno, raw["completion"][1], f"unknown completion {args['completion']!r}")
            return None
        system, pointer = self.spaces[args["system"]], self.spaces[args["pointer"]]
        if pointer.dim != system.dim + 1:
            self.error(lineno, raw["pointer"][1],
                       f"pointer {pointer.name!r} needs dim {system.dim + 1}, got {pointer.dim}")
            return None
        return args

    def op_trace(self, lineno, raw):
        keep = self.names(lineno, raw, "keep")
        if keep is None:
            return None
        self.factors = [n for n in self.factors if n in keep]
        self.traced = True
        return {"keep": keep}

    def op_report(self, lineno, raw):
        args: dict[str, Any] = {}
        if "label" in raw:
            text, col = raw["label"]
            if not _LABEL.match(text):
                self.error(lineno, col, f"malformed label {text!r}")
                return None
            args["label"] = text
        if "correlation" in raw:
            others = [k for k in raw if k not in ("label", "correlation")]
            if others:
                self.error(lineno, raw[others[0]][1], "correlation= cannot be combined with other REPORT arguments")
                return None
            pair = self.names(lineno, raw, "correlation")
            if pair is None:
                return None
            if len(pair) != 2 or not all(_is_atom(self.spaces[n]) for n in pair):
                self.error(lineno, raw["correlation"][1], "correlation= needs two atom spaces")
                return None
            args["correlation"] = pair
            return args
        scope = self.factors
        if "keep" in raw:
            keep = self.names(lineno, raw, "keep")
            if keep is None:
                return None
            args["keep"] = keep
            scope = list(keep)
        if "coherence" in raw:
            text, col = raw["coherence"]
            parts = text.split(",")
            if len(parts) != 2 or not all(_INT.match(p) for p in parts):
                self.error(lineno, col, f"coherence needs two indices i,j, got {text!r}")
                return None
            args["coherence"] = (int(parts[0]), int(parts[1]))
        if "fringe" in raw:
            alpha = self.complex_(lineno, raw, "fringe")
            if alpha is None:
                return None
            fields = [n for n in scope if self.spaces[n].fock]
            if len(fields) != 1:
                self.error(lineno, raw["fringe"][1], "fringe= needs exactly one Fock space in scope; use keep=")
                return None
            args["fringe"] = alpha
        for flag in REPORT_FLAGS:
            if flag in raw:
                args[flag] = True
        if "erasure" in args and not self.erased:
            self.error(lineno, raw["erasure"][1], "REPORT erasure before any ERASE")
            return None
        return args


def _leading_comments(lines: list[str]) -> str:
    out = []
    for raw in lines:
        text = raw.strip()
        if not text:
            if out:
                break
            continue
        if not text.startswith("#"):
            break
        body = text[1:]
        out.append((body[1:] if body.startswith(" ") else body).rstrip())
    return "\n".join(out).strip("\n")


def parse(source: str, name: str = "protocol") -> ParseResult:
    """Parse a script; the result holds a Protocol or a non-empty diagnostic list."""
    return _Parser(name).run(source)


def parse_file(path: Union[str, Path]) -> ParseResult:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), name=path.stem)


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------

def _unparse_instruction(ins: Instruction) -> str:
    a = ins.args
    op = ins.opcode
    if op == "SPACE":
        kind = next(k for k in ("levels", "fock", "dim") if k in a)
        value = ",".join(a[kind]) if kind == "levels" else str(a[kind])
        return f"SPACE {a['name']} {kind}={value}"
    if op == "INIT":
        return "INIT " + " ".join(f"{space}={ket}" for space, ket in a.items())
    if op in ("ERASE", "DETECT"):
        return f"{op} {a['atom']}"
    if op == "PULSE":
        theta = f" theta={format_real(a['theta'])}" if "theta" in a else ""
        return f"PULSE {a['atom']}{theta}"
    parts = [op]
    for key, value in a.items():
        if value is True:
            continue
        if isinstance(value, tuple):
            text = ",".join(str(v) for v in value)
        elif isinstance(value, complex):
            text = format_complex(value)
        elif isinstance(value, float):
            text = format_real(value)
        else:
            text = str(value)
        parts.append(f"{key}={text}")
    parts.extend(k for k in REPORT_FLAGS if a.get(k) is True)
    return " ".join(parts)


def unparse(protocol: Protocol) -> str:
    lines = [f"# {d}".rstrip() for d in protocol.description.splitlines()] if protocol.description else []
    if lines:
        lines.append("")
    lines.append(f"VERSION {protocol.version}")
    lines.extend(_unparse_instruction(ins) for ins in protocol.instructions)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Interpreter
# ---------------------------------------------------------------------------

@dataclass
class _Context:
    rng: Optional[np.random.Generator]
    spaces: dict[str, SpaceLabel] = field(default_factory=dict)
    branches: list[Branch] = field(default_factory=list)
    rows: list[ReportRow] = field(default_factory=list)

    def atom(self, name: str) -> AtomSpace:
        return AtomSpace.from_label(self.spaces[name])

    def fock_space(self, name: str) -> FockSpace:
        return FockSpace.from_label(self.spaces[name])

    def each(self, fn: Callable[[StateVector], StateVector]) -> None:
        self.branches = [replace(b, state=fn(b.state)) for b in self.branches]


def _do_space(ctx: _Context, a: dict) -> None:
    kind = next(k for k in ("levels", "fock", "dim") if k in a)
    if kind == "levels":
        ctx.spaces[a["name"]] = SpaceLabel(a["name"], len(a["levels"]), a["levels"])
    else:
        ctx.spaces[a["name"]] = SpaceLabel(a["name"], a[kind], fock=kind == "fock")


def _do_init(ctx: _Context, a: dict) -> None:
    states = []
    for name, ket in a.items():
        label = ctx.spaces[name]
        if ket.kind == "coh":
            states.append(coherent_state(FockSpace.from_label(label), ket.value))
        elif ket.kind == "amps":
            states.append(StateVector((label,), ket.value))
        else:
            states.append(basis_state(label, ket.value))
    ctx.branches = [Branch(product(*states))]


def _do_pulse(ctx: _Context, a: dict) -> None:
    atom = ctx.atom(a["atom"])
    if "theta" in a:
        ctx.each(lambda s: rotate_atom(s, atom, a["theta"]))
    else:
        ctx.each(lambda s: ramsey_pulse(s, atom))


def _do_disperse(ctx: _Context, a: dict) -> None:
    atom, fock = ctx.atom(a["atom"]), ctx.fock_space(a["field"])
    ctx.each(lambda s: dispersive_shift(s, atom, fock, a["phi_e"], a["phi_g"]))


def _do_jc(ctx: _Context, a: dict) -> None:
    atom, fock = ctx.atom(a["atom"]), ctx.fock_space(a["field"])
    ctx.each(lambda s: jc_evolve(s, atom, fock, a["g"], a["t"]))


def _do_erase(ctx: _Context, a: dict) -> None:
    atom = ctx.atom(a["atom"])
    out = []
    for b in ctx.branches:
        state, weight = erase_which_path(b.state, atom)
        out.append(replace(b, state=state, erasure_norm=weight))
    ctx.branches = out


def _do_detect(ctx: _Context, a: dict) -> None:
    before = sum(b.probability for b in ctx.branches)
    ctx.branches = fork_on_detection(ctx.branches, ctx.atom(a["atom"]), ctx.rng)
    after = sum(b.probability for b in ctx.branches)
    if ctx.rng is None and abs(after - before) > 1e-10:
        raise NormalizationError(f"branch probability mass changed from {before:.15g} to {after:.15g}")


def _do_decay(ctx: _Context, a: dict) -> None:
    u = decay_unitary(DecayParams(a.get("lambda", DEFAULT_DECAY_RATE), a["t"]))
    targets = [ctx.spaces[a["nucleus"]], ctx.spaces[a["cat"]]]
    ctx.each(lambda s: apply_unitary(s, u, targets))


def _do_measure(ctx: _Context, a: dict) -> None:
    system, pointer = ctx.spaces[a["system"]], ctx.spaces[a["pointer"]]
    ctx.each(lambda s: couple_pointer(s, system, pointer, a["completion"]))


def _do_trace(ctx: _Context, a: dict) -> None:
    ctx.branches = [replace(b, state=reduced_state(b.state, a["keep"])) for b in ctx.branches]


def _do_report(ctx: _Context, a: dict) -> None:
    label = a.get("label")
    if "correlation" in a:
        first, second = (ctx.atom(n) for n in a["correlation"])
        ctx.rows.append(correlation_row(ctx.branches, first, second, label=label or "correlation"))
        return
    wants_rho = any(k in a for k in ("populations", "purity", "offdiag", "matrix", "coherence"))
    for b in ctx.branches:
        scalars: dict[str, float] = {}
        matrices: dict[str, np.ndarray] = {}
        if wants_rho:
            if "keep" in a:
                rho = reduced_state(b.state, a["keep"])
            elif isinstance(b.state, StateVector):
                rho = to_density(b.state)
            else:
                rho = b.state
            scalars, matrices = observe(
                rho,
                populations="populations" in a,
                coherence=a.get("coherence"),
                purity="purity" in a,
                offdiag="offdiag" in a,
                matrix="matrix" in a,
            )
        if "fringe" in a:
            scope = a.get("keep") or [f.name for f in b.state.factors]
            fock = next(n for n in scope if ctx.spaces[n].fock)
            scalars["fringe_signal"] = cat_fringe_signal(reduced_state(b.state, [fock]), a["fringe"])
        if "erasure" in a and b.erasure_norm is not None:
            scalars["erasure_norm"] = b.erasure_norm
        ctx.rows.append(ReportRow(b.branch_id(label), b.probability, b.outcome_labels, scalars, matrices))


_HANDLERS: dict[str, Callable[[_Context, dict], None]] = {
    "SPACE": _do_space,
    "INIT": _do_init,
    "PULSE": _do_pulse,
    "DISPERSE": _do_disperse,
    "JC": _do_jc,
    "ERASE": _do_erase,
    "DETECT": _do_detect,
    "DECAY": _do_decay,
    "MEASURE": _do_measure,
    "TRACE": _do_trace,
    "REPORT": _do_report,
}


def interpret(protocol: Protocol, rng: Optional[np.random.Generator] = None) -> list[ReportRow]:
    """Execute `protocol` and return its report rows in emission order.

    Detection enumerates every outcome unless `rng` is given, in which case one
    outcome per detection is sampled. Failures carry the instruction line.
    """
    ctx = _Context(rng)
    for ins in protocol.instructions:
        logger.debug("%s:%d %s (%d branches)", protocol.name, ins.line, ins.opcode, len(ctx.branches))
        try:
            _HANDLERS[ins.opcode](ctx, ins.args)
        except ProtocolRuntimeError:
            raise
        except CatboxError as exc:
            raise ProtocolRuntimeError(ins.line, f"{ins.opcode}: {exc}") from exc
    return ctx.rows
