import asyncio
import cmath
import io
import logging
import os
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, TextIO, Union

import numpy as np
import yaml

from catbox._errors import CatboxError, ScriptError, UsageError
from catbox._protocol import Protocol, interpret, parse_file
from catbox._report import build_document, dumps_json, write_csv
from catbox._scenarios import SCENARIOS

logger = logging.getLogger(__name__)

CONFIG_NAME = "catbox_config.yaml"
FOCK_DIM_ENV = "CATBOX_FOCK_DIM"
FORMATS = ("json", "csv")
SCRIPT_SUFFIX = ".qproto"


@dataclass
class RunConfig:
    """Configuration for one catbox run."""

    # A built-in scenario name or the path of a .qproto script.
    scenario: Optional[str] = None
    format: str = "json"
    # None writes to stdout.
    output: Optional[str] = None
    # Unset numeric overrides (None) fall back to the scenario's own defaults.
    t: Optional[float] = None
    decay_rate: Optional[float] = None
    half_life: Optional[float] = None
    alpha: Optional[complex] = None
    g: Optional[float] = None
    t_prime: Optional[float] = None
    # Fock DIMENSION (cutoff + 1) for cavity scenarios.
    fock_dim: Optional[int] = None
    coefficients: Optional[list[complex]] = None
    dimension: Optional[int] = None
    with_r2: Optional[bool] = None
    with_detection: Optional[bool] = None
    with_erasure: Optional[bool] = None
    # Seed for sampled detection in scripts; None enumerates every branch.
    sample: Optional[int] = None
    dump_matrices: bool = False

    @classmethod
    def default(cls) -> "RunConfig":
        """Load defaults from bundled catbox_config.yaml."""
        try:
            with open(_find_config_file()) as f:
                data = yaml.safe_load(f) or {}
            return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})
        except Exception:
            return cls()


def _find_config_file() -> Path:
    """Find catbox_config.yaml: bundled (_data/) for pip install, project root for dev."""
    bundled = Path(__file__).parent / "_data" / CONFIG_NAME
    if bundled.exists():
        return bundled

    root = Path(__file__).resolve().parent.parent
    if (root / CONFIG_NAME).exists():
        return root / CONFIG_NAME

    raise FileNotFoundError(f"Cannot find {CONFIG_NAME}; the package may be installed incorrectly.")


def resolve_config(**overrides) -> RunConfig:
    """YAML defaults, then CATBOX_FOCK_DIM, then `overrides` (None means unset)."""
    unknown = sorted(set(overrides) - set(RunConfig.__dataclass_fields__))
    if unknown:
        raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")
    config = RunConfig.default()
    env = os.environ.get(FOCK_DIM_ENV)
    if env:
        try:
            config.fock_dim = int(env)
        except ValueError:
            raise UsageError(f"{FOCK_DIM_ENV} must be an integer, got {env!r}") from None
    config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    validate(config)
    return config


def validate(config: RunConfig) -> None:
    if not config.scenario:
        raise UsageError("no scenario given")
    if config.format not in FORMATS:
        raise UsageError(f"format must be one of {', '.join(FORMATS)}, got {config.format!r}")

    for name in ("t", "decay_rate", "half_life", "alpha", "g", "t_prime"):
        value = getattr(config, name)
        if value is not None and not cmath.isfinite(complex(value)):
            raise UsageError(f"{name} must be finite, got {value!r}")
    if config.t is not None and config.t < 0:
        raise UsageError(f"t must be >= 0, got {config.t!r}")
    for name in ("decay_rate", "half_life"):
        value = getattr(config, name)
        if value is not None and value <= 0:
            raise UsageError(f"{name} must be positive, got {value!r}")
    if config.fock_dim is not None and config.fock_dim < 2:
        raise UsageError(f"fock dimension must be >= 2, got {config.fock_dim}")
    if config.dimension is not None and config.dimension < 1:
        raise UsageError(f"dimension must be >= 1, got {config.dimension}")


def is_script(name: str) -> bool:
    return name.endswith(SCRIPT_SUFFIX) or "/" in name or os.sep in name


def load_script(path: Union[str, Path]) -> Protocol:
    try:
        result = parse_file(path)
    except (OSError, UnicodeDecodeError) as exc:
        raise ScriptError(f"cannot read script {path}: {exc}") from exc
    if not result.ok:
        raise ScriptError(f"{path}: {len(result.diagnostics)} diagnostic(s)", result.diagnostics)
    return result.protocol


def execute(config: RunConfig) -> dict:
    """Run one scenario or script and return its report document."""
    name = config.scenario
    if name in SCENARIOS:
        logger.debug("running built-in scenario %s", name)
        params, rows = SCENARIOS[name].run(asdict(config))
        return build_document(name, params, rows, config.dump_matrices)
    if not is_script(name):
        raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)} or a {SCRIPT_SUFFIX} file")
    protocol = load_script(name)
    rng = None if config.sample is None else np.random.default_rng(config.sample)
    logger.debug("running script %s (%d instructions)", name, len(protocol.instructions))
    rows = interpret(protocol, rng)
    return build_document(protocol.name, {"script": str(name), "sample": config.sample}, rows,
                          config.dump_matrices)


def run_many(configs: Sequence[RunConfig], jobs: int = 1) -> list[dict]:
    """Execute several configs, up to `jobs` at a time; output keeps input order."""
    if jobs <= 1 or len(configs) <= 1:
        return [execute(c) for c in configs]

    sem = asyncio.Semaphore(jobs)

    async def run_one(config: RunConfig) -> dict:
        async with sem:
            return await asyncio.to_thread(execute, config)

    async def _gather() -> "list[dict]":
        return await asyncio.gather(*(run_one(c) for c in configs))

    return asyncio.run(_gather())


def render(documents: list[dict], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        write_csv(documents, buf)
        return buf.getvalue()
    return dumps_json(documents)


def run(
    configs: Union[RunConfig, Sequence[RunConfig]],
    stream: Optional[TextIO] = None,
    jobs: int = 1,
) -> int:
    """Run configs and write one report. Returns the process exit code.

    All configs share the format and output of the first one. Errors go to
    stderr: 2 for usage errors, 1 for scenario and script failures.
    """
    configs = [configs] if isinstance(configs, RunConfig) else list(configs)
    if not configs:
        print("catbox: error: no scenario given", file=sys.stderr)
        return 2
    if jobs < 1:
        print(f"catbox: error: jobs must be >= 1, got {jobs}", file=sys.stderr)
        return 2
    try:
        for config in configs:
            validate(config)
        documents = run_many(configs, jobs)
    except UsageError as exc:
        print(f"catbox: error: {exc}", file=sys.stderr)
        return 2
    except ScriptError as exc:
        print(f"catbox: error: {exc}", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return 1
    except CatboxError as exc:
        print(f"catbox: error: {exc}", file=sys.stderr)
        return 1

    text = render(documents, configs[0].format)
    output = configs[0].output
    if output:
        try:
            with open(output, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        except OSError as exc:
            print(f"catbox: error: cannot write report {output}: {exc.strerror or exc}", file=sys.stderr)
            return 1
        print(f"Report: {output}", file=sys.stderr)
    else:
        (stream or sys.stdout).write(text)
    return 0
