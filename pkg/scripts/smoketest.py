"""Walk through the headline numbers of every built-in scenario in a few seconds.

No pytest needed. Run:

    uv run scripts/smoketest.py
"""

import math
import sys

import numpy as np

from catbox._catmodel import HOUR, reduced_cat, rotated_basis_check
from catbox._cavity import FockSpace, cat_state, default_cutoff, garching_protocol, paris_protocol, tail_mass
from catbox._measurement import PointerChain, apparatus_state
from catbox._protocol import interpret, parse, parse_file
from catbox._qcore import density_violations
from catbox._scenarios import SCENARIOS

PASS, FAIL = "✔", "✗"
_failures = []


def check(label, cond):
    print(f"  {PASS if cond else FAIL} {label}")
    if not cond:
        _failures.append(label)


def _rows(rows):
    return {r.branch: r for r in rows}


def test_cat():
    print("\n[cat]")
    rho = reduced_cat(HOUR)
    check("one hour: equal populations", np.allclose(rho.populations(), [0.5, 0.5], atol=1e-15))
    check("one hour: no coherence", abs(rho.matrix[0, 1]) < 1e-14)
    check("two hours: (0.25, 0.75)", np.allclose(reduced_cat(2 * HOUR).populations(), [0.25, 0.75], atol=1e-12))
    rotated, standard = rotated_basis_check(HOUR)
    check("+/- nucleus basis gives the same reduction", np.allclose(rotated.matrix, standard.matrix, atol=1e-12))


def test_paris():
    print("\n[paris]")
    full = _rows(paris_protocol(2))
    eps = math.exp(-8)
    check("P(g) = (1 + e^-8)/2", abs(full["atom1=g"].probability - (1 + eps) / 2) < 1e-10)
    check("g branch holds the even cat", abs(full["atom1=g"].scalars["fringe_signal"] - 1) < 1e-8)
    check("full protocol correlates", full["correlation"].scalars["correlation_signal"] > 0.4)
    modified = _rows(paris_protocol(2, with_r2=False, with_detection=False))
    check("modified protocol does not", abs(modified["correlation"].scalars["correlation_signal"]) < 1e-3)
    field = FockSpace.for_alpha(2)
    check("even cat has no odd photon numbers", np.all(np.abs(cat_state(field, 2).amplitudes[1::2]) < 1e-12))


def test_garching():
    print("\n[garching]")
    (erased,) = garching_protocol()
    (kept,) = garching_protocol(with_erasure=False)
    check("erasure restores |rho01| = 0.5", abs(erased.scalars["coherence_abs[0,1]"] - 0.5) < 1e-12)
    check("no erasure: diag(0.5, 0.5)", abs(kept.scalars["population[0]"] - 0.5) < 1e-12)
    check("no erasure: no coherence", kept.scalars["coherence_abs[0,1]"] < 1e-14)
    sweep = [garching_protocol(t_prime=x)[0] for x in np.linspace(0, math.pi / 2, 32)]
    check("32-point sweep follows |sin 2gt|/2", all(
        abs(r.scalars["coherence_abs[0,1]"] - abs(math.sin(2 * x)) / 2) < 1e-12
        for r, x in zip(sweep, np.linspace(0, math.pi / 2, 32))
    ))
    check("every field state is a valid density operator",
          all(not density_violations(r.matrices["rho"]) for r in sweep + [erased, kept]))


def test_vonneumann():
    print("\n[vonneumann]")
    rng = np.random.default_rng(1)
    ok = True
    for _ in range(100):
        n = int(rng.integers(1, 6))
        c = rng.normal(size=n) + 1j * rng.normal(size=n)
        chain = PointerChain(c / np.linalg.norm(c))
        for completion in ("cyclic", "swap"):
            rho = apparatus_state(chain, completion).matrix
            ok &= np.allclose(rho, np.diag(np.concatenate([[0], np.abs(chain.coefficients) ** 2])), atol=1e-12)
    check("100 random chains reduce to diag(|c_k|^2), both completions", bool(ok))


def test_hygiene():
    print("\n[hygiene]")
    worst = max(tail_mass(r, default_cutoff(r)) for r in np.linspace(0, 3, 61))
    check(f"default cutoff tail < 1e-10 for |alpha| <= 3 (worst {worst:.2e})", worst < 1e-10)


def test_protocols():
    print("\n[protocol twins]")
    for name, scenario in SCENARIOS.items():
        _, native = scenario.run()
        scripted = interpret(parse_file(scenario.script).protocol)
        same = len(native) == len(scripted) and all(a.close_to(b) for a, b in zip(scripted, native))
        check(f"{name} script matches native rows", same)
    check("malformed script yields a diagnostic", not parse("JC g=1").ok)


if __name__ == "__main__":
    test_cat()
    test_paris()
    test_garching()
    test_vonneumann()
    test_hygiene()
    test_protocols()

    print("\n" + ("=" * 40))
    if _failures:
        print(f"SMOKETEST FAILED: {len(_failures)} check(s) failed:")
        for f in _failures:
            print(f"  - {f}")
        sys.exit(1)
    print("SMOKETEST PASSED")
