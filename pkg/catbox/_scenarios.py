"""Built-in scenarios.

Each scenario has a native builder and a `.qproto` twin under
`catbox/scenarios/`. At default parameters both produce the same rows.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

from catbox._catmodel import DEFAULT_DECAY_RATE, HOUR, DecayParams, cat_report
from catbox._cavity import default_cutoff, garching_protocol, paris_protocol
from catbox._errors import UsageError
from catbox._measurement import PointerChain, chain_report
from catbox._report import ReportRow

SCRIPT_DIR = Path(__file__).parent / "scenarios"

Settings = Mapping[str, Any]


def _pick(settings: Settings, key: str, default: Any) -> Any:
    value = settings.get(key)
    return default if value is None else value


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    resolve: Callable[[Settings], dict[str, Any]]
    build: Callable[..., list[ReportRow]]

    @property
    def script(self) -> Path:
        return SCRIPT_DIR / f"{self.name}.qproto"

    def run(self, settings: Optional[Settings] = None) -> tuple[dict[str, Any], list[ReportRow]]:
        """Resolve parameters from `settings` (unset keys take defaults) and build rows."""
        params = self.resolve(settings or {})
        return params, self.build(**params)


def _cat_params(s: Settings) -> dict[str, Any]:
    rate = s.get("decay_rate")
    if rate is None:
        half_life = s.get("half_life")
        rate = DEFAULT_DECAY_RATE if half_life is None else math.log(2) / half_life
    return {"t": float(_pick(s, "t", HOUR)), "decay_rate": float(rate)}


def _cat_build(t: float, decay_rate: float) -> list[ReportRow]:
    return cat_report(DecayParams(decay_rate, t))


def _paris_params(with_r2: bool, with_detection: bool) -> Callable[[Settings], dict[str, Any]]:
    def resolve(s: Settings) -> dict[str, Any]:
        alpha = complex(_pick(s, "alpha", 2.0))
        return {
            "alpha": alpha,
            "fock_dim": int(_pick(s, "fock_dim", default_cutoff(alpha) + 1)),
            "with_r2": bool(_pick(s, "with_r2", with_r2)),
            "with_detection": bool(_pick(s, "with_detection", with_detection)),
        }
    return resolve


def _garching_params(with_erasure: bool) -> Callable[[Settings], dict[str, Any]]:
    def resolve(s: Settings) -> dict[str, Any]:
        return {
            "g": float(_pick(s, "g", 1.0)),
            "t_prime": float(_pick(s, "t_prime", math.pi / 4)),
            "with_erasure": bool(_pick(s, "with_erasure", with_erasure)),
            "fock_dim": int(_pick(s, "fock_dim", default_cutoff(0) + 1)),
        }
    return resolve


def _vonneumann_params(s: Settings) -> dict[str, Any]:
    coefficients = s.get("coefficients")
    dimension = s.get("dimension")
    if coefficients is None:
        n = 2 if dimension is None else int(dimension)
        coefficients = tuple(PointerChain.uniform(n).coefficients)
    elif dimension is not None and int(dimension) != len(coefficients):
        raise UsageError(f"dimension {dimension} disagrees with {len(coefficients)} coefficients")
    coefficients = tuple(complex(c) for c in coefficients)
    return {"coefficients": coefficients, "dimension": len(coefficients)}


def _vonneumann_build(coefficients, dimension: int) -> list[ReportRow]:
    return chain_report(PointerChain(coefficients))


SCENARIOS: dict[str, Scenario] = {
    s.name: s
    for s in (
        Scenario("cat", "Reduced cat state after nuclear decay for time t",
                 _cat_params, _cat_build),
        Scenario("paris", "Two-atom field cat preparation and probe correlation",
                 _paris_params(True, True), paris_protocol),
        Scenario("paris-modified", "Probe correlation without R2 and first-atom detection",
                 _paris_params(False, False), paris_protocol),
        Scenario("garching", "Vacuum Rabi entanglement followed by which-path erasure",
                 _garching_params(True), garching_protocol),
        Scenario("garching-noerase", "Vacuum Rabi entanglement without erasure",
                 _garching_params(False), garching_protocol),
        Scenario("vonneumann", "Apparatus reduced state after a pointer premeasurement",
                 _vonneumann_params, _vonneumann_build),
    )
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None
