import argparse
import logging
import sys
from typing import Optional

from catbox._version import __version__


def _complex_arg(text: str) -> complex:
    from catbox._protocol import parse_complex

    parts = text.split(",")
    try:
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
        return parse_complex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected re,im or a complex literal, got {text!r}") from None


def _coefficients_arg(text: str) -> list[complex]:
    from catbox._protocol import parse_complex

    try:
        return [parse_complex(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated complex literals (e.g. 0.6,0.8i), got {text!r}"
        ) from None


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="catbox",
        description="Entanglement and reduced-state experiments on small quantum systems.",
    )
    p.add_argument("--version", action="version", version=f"catbox {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="Log debug output to stderr.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="Run built-in scenarios or .qproto scripts.")
    r.add_argument("scenarios", nargs="+", metavar="SCENARIO",
                   help="Built-in scenario name (see `catbox list`) or a .qproto script path.")
    r.add_argument("--format", choices=("json", "csv"), default=None,
                   help="Report format (default: json).")
    r.add_argument("--output", "-o", default=None, help="Write the report here instead of stdout.")
    r.add_argument("--t", type=float, default=None, help="Elapsed time in seconds (cat).")
    rate = r.add_mutually_exclusive_group()
    rate.add_argument("--lambda", dest="decay_rate", type=float, default=None,
                      help="Decay rate in 1/s (cat).")
    rate.add_argument("--half-life", type=float, default=None,
                      help="Half life in seconds; sets lambda = ln2 / half-life (cat).")
    r.add_argument("--alpha", type=_complex_arg, default=None,
                   help="Coherent amplitude as re,im or a literal like 2+0.5i (paris).")
    r.add_argument("--g", type=float, default=None, help="Vacuum Rabi coupling in rad/s (garching).")
    r.add_argument("--t-prime", type=float, default=None, help="Interaction time in s (garching).")
    r.add_argument("--fock-dim", type=int, default=None,
                   help="Fock space dimension N+1 for cavity scenarios (env: CATBOX_FOCK_DIM).")
    r.add_argument("--coefficients", type=_coefficients_arg, default=None,
                   help="Normalized system coefficients c1,...,cn (vonneumann).")
    r.add_argument("--dimension", type=int, default=None,
                   help="System dimension n; uniform coefficients when --coefficients is absent.")
    r.add_argument("--r2", dest="with_r2", action=argparse.BooleanOptionalAction, default=None,
                   help="Apply the second Ramsey pulse to atom 1 (paris).")
    r.add_argument("--detection", dest="with_detection", action=argparse.BooleanOptionalAction,
                   default=None, help="Detect atom 1 before the probe (paris).")
    r.add_argument("--erasure", dest="with_erasure", action=argparse.BooleanOptionalAction,
                   default=None, help="Erase which-path information (garching).")
    r.add_argument("--sample", type=int, default=None, metavar="SEED",
                   help="Sample one detection outcome per DETECT in scripts.")
    r.add_argument("--dump-matrices", action="store_true", help="Include reduced density matrices.")
    r.add_argument("--jobs", "-j", type=int, default=1, help="Run up to this many scenarios at once.")

    sub.add_parser("list", help="List built-in scenarios.")

    c = sub.add_parser("check", help="Parse a .qproto script and report diagnostics.")
    c.add_argument("script")
    c.add_argument("--canonical", action="store_true", help="Print the canonical form of a valid script.")
    return p


def _run(args) -> int:
    from catbox._errors import UsageError
    from catbox._runner import resolve_config, run

    overrides = {
        "format": args.format,
        "output": args.output,
        "t": args.t,
        "decay_rate": args.decay_rate,
        "half_life": args.half_life,
        "alpha": args.alpha,
        "g": args.g,
        "t_prime": args.t_prime,
        "fock_dim": args.fock_dim,
        "coefficients": args.coefficients,
        "dimension": args.dimension,
        "with_r2": args.with_r2,
        "with_detection": args.with_detection,
        "with_erasure": args.with_erasure,
        "sample": args.sample,
        "dump_matrices": args.dump_matrices or None,
    }
    try:
        configs = [resolve_config(scenario=s, **overrides) for s in args.scenarios]
    except UsageError as exc:
        print(f"catbox: error: {exc}", file=sys.stderr)
        return 2
    return run(configs, jobs=args.jobs)


def _list() -> int:
    from catbox._scenarios import SCENARIOS

    for name, scenario in SCENARIOS.items():
        print(f"{name:<18} {scenario.description}")
    return 0


def _check(args) -> int:
    from catbox._protocol import parse_file, unparse

    try:
        result = parse_file(args.script)
    except (OSError, UnicodeDecodeError) as exc:
        print(f"catbox: error: cannot read script {args.script}: {exc}", file=sys.stderr)
        return 1
    if not result.ok:
        for d in result.diagnostics:
            print(f"{args.script}:{d}", file=sys.stderr)
        return 1
    if args.canonical:
        sys.stdout.write(unparse(result.protocol))
    else:
        print(f"{args.script}: ok ({len(result.protocol.instructions)} instructions)")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    """`catbox` CLI entry point."""
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "list":
        return _list()
    if args.command == "check":
        return _check(args)
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
