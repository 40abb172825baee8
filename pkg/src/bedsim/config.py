"""Run configuration: defaults, flat key-value files, CLI flags, batches.

Config files are flat ``key = value`` lines; ``#`` starts a comment.  Rates
may be written as fractions (``sickness_rate = 1/300``).  Keys:

    population, sickness_rate, hospital_probability, bed_count, mu1, mu2,
    r_lo, r_hi, until, hospital_status, seed, warmup, rate_mode
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from bedsim.errors import ConfigError
from bedsim.model import InitialHospitalStatus, ModelParameters, RateMode

__all__ = [
    "SimulationConfig",
    "BatchSpec",
    "STANDARD_UNTILS",
    "STANDARD_STATUSES",
    "STANDARD_SEEDS",
    "add_simulation_arguments",
    "config_from_mapping",
    "config_from_namespace",
    "parse_config",
    "parse_number",
    "read_config_file",
]

STANDARD_UNTILS = (1000.0, 10000.0, 100000.0)
STANDARD_STATUSES = tuple(InitialHospitalStatus)
STANDARD_SEEDS = (978, 979)

_PARAM_KEYS = {
    "population": int,
    "sickness_rate": float,
    "hospital_probability": float,
    "bed_count": int,
    "mu1": float,
    "mu2": float,
    "r_lo": float,
    "r_hi": float,
}
_RUN_KEYS = ("until", "hospital_status", "seed", "warmup", "rate_mode")
_ALIASES = {"status": "hospital_status", "n": "population", "lam": "sickness_rate",
            "p": "hospital_probability", "k": "bed_count"}


@dataclass(frozen=True)
class SimulationConfig:
    params: ModelParameters = field(default_factory=ModelParameters)
    until: float = 10000.0
    hospital_status: InitialHospitalStatus = InitialHospitalStatus.EMPTY
    seed: int = 978
    warmup: float = 0.0
    rate_mode: RateMode = RateMode.EXACT

    def __post_init__(self):
        if not 0.0 < self.until < float("inf"):
            raise ConfigError("until", "must be a positive finite number of days")
        if not 0.0 <= self.warmup < self.until:
            raise ConfigError("warmup", "must satisfy 0 <= warmup < until")
        object.__setattr__(self, "hospital_status", InitialHospitalStatus.parse(self.hospital_status))
        try:
            object.__setattr__(self, "rate_mode", RateMode(self.rate_mode))
        except ValueError:
            raise ConfigError("rate_mode", f"unknown mode {self.rate_mode!r}") from None

    @property
    def key(self) -> tuple[float, str, int]:
        return (self.until, self.hospital_status.value, self.seed)

    def to_dict(self) -> dict:
        d = asdict(self.params)
        d.update(
            until=self.until,
            hospital_status=self.hospital_status.value,
            seed=self.seed,
            warmup=self.warmup,
            rate_mode=self.rate_mode.value,
        )
        return d


def parse_number(field_name, raw, kind=float):
    """Parse ints, floats and fractions such as ``1/300``."""
    if isinstance(raw, bool):
        raise ConfigError(field_name, f"not a number: {raw!r}")
    if isinstance(raw, (int, float)):
        value = raw
    else:
        try:
            value = Fraction(str(raw).strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigError(field_name, f"not a number: {raw!r}") from None
    if kind is int:
        if value != int(value):
            raise ConfigError(field_name, f"not an integer: {raw!r}")
        return int(value)
    return float(value)


def config_from_mapping(mapping, base: SimulationConfig | None = None) -> SimulationConfig:
    """Overlay flat ``mapping`` values on ``base`` (defaults if omitted)."""
    base = base or SimulationConfig()
    params = asdict(base.params)
    run = {k: getattr(base, k) for k in _RUN_KEYS}
    for raw_key, raw in mapping.items():
        if raw is None:
            continue
        name = raw_key.strip().lower().replace("-", "_")
        key = _ALIASES.get(name, name)
        if key in _PARAM_KEYS:
            params[key] = parse_number(key, raw, _PARAM_KEYS[key])
        elif key in ("until", "warmup"):
            run[key] = parse_number(key, raw, float)
        elif key == "seed":
            run[key] = parse_number(key, raw, int)
        elif key in ("hospital_status", "rate_mode"):
            run[key] = str(raw).strip()
        else:
            raise ConfigError(key, "unknown configuration key")
    return SimulationConfig(params=ModelParameters(**params), **run)


def read_config_file(path) -> dict[str, str]:
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from None
    return dict(parser["config"])


_FLAGS = [
    ("--population", "-N", "population"),
    ("--sickness-rate", "--lam", "sickness_rate"),
    ("--hospital-probability", "-p", "hospital_probability"),
    ("--bed-count", "-K", "bed_count"),
    ("--mu1", None, "mu1"),
    ("--mu2", None, "mu2"),
    ("--r-lo", None, "r_lo"),
    ("--r-hi", None, "r_hi"),
]


def add_model_arguments(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("model parameters (fractions like 1/300 accepted)")
    for flag, short, dest in _FLAGS:
        names = [flag] + ([short] if short else [])
        g.add_argument(*names, dest=dest, default=None, metavar="X")


def add_simulation_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", dest="config_file", default=None,
                        help="flat key = value file; flags override it")
    add_model_arguments(parser)
    g = parser.add_argument_group("run")
    g.add_argument("--until", default=None, help="run length in days (default 10000)")
    g.add_argument("--status", dest="hospital_status", default=None,
                   help="initial hospital: empty, half-full, full (default empty)")
    g.add_argument("--seed", default=None, help="random seed (default 978)")
    g.add_argument("--warmup", default=None, help="days discarded from statistics (default 0)")
    g.add_argument("--rate-mode", dest="rate_mode", default=None, choices=[m.value for m in RateMode],
                   help="arrival-rate handling (default exact)")


def config_from_namespace(ns: argparse.Namespace) -> SimulationConfig:
    values = {}
    if getattr(ns, "config_file", None):
        try:
            values.update(read_config_file(ns.config_file))
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
    for key in list(_PARAM_KEYS) + list(_RUN_KEYS):
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    return config_from_mapping(values)


def parse_config(argv=None) -> SimulationConfig:
    """Build a config from CLI-style arguments (``--until 10000 --status full``)."""
    parser = argparse.ArgumentParser(add_help=False)
    add_simulation_arguments(parser)
    ns, extra = parser.parse_known_args(argv if argv is not None else [])
    if extra:
        raise ConfigError(extra[0].lstrip("-").replace("-", "_"), "unrecognized argument")
    return config_from_namespace(ns)


@dataclass
class BatchSpec:
    """A list of flat config mappings, each overlaid on ``base``.

    Entries stay raw until run time so one bad entry fails alone.
    """

    entries: list[dict]
    base: SimulationConfig = field(default_factory=SimulationConfig)

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            k = self._raw_key(entry)
            if k in seen:
                raise ConfigError("batch", f"duplicate (until, status, seed) {k}")
            seen.add(k)

    def _raw_key(self, entry):
        def first(*names, default):
            return next((entry[n] for n in names if n in entry), default)

        until = first("until", default=self.base.until)
        status = first("hospital_status", "status", default=self.base.hospital_status)
        seed = first("seed", default=self.base.seed)
        try:
            until = float(Fraction(str(until)))
        except (ValueError, ZeroDivisionError):
            until = str(until)
        try:
            status = InitialHospitalStatus.parse(status).value
        except ConfigError:
            status = str(status)
        return until, status, str(seed)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def cross(cls, untils=STANDARD_UNTILS, statuses=STANDARD_STATUSES, seeds=STANDARD_SEEDS,
              base: SimulationConfig | None = None) -> "BatchSpec":
        entries = [
            {"until": u, "hospital_status": InitialHospitalStatus.parse(s).value, "seed": seed}
            for u, s, seed in itertools.product(untils, statuses, seeds)
        ]
        return cls(entries, base or SimulationConfig())

    @classmethod
    def from_file(cls, path, base: SimulationConfig | None = None) -> "BatchSpec":
        """JSON spec: ``{"base": {...}, "until": [...], "hospital_status": [...],
        "seed": [...]}`` for a cross product, or ``{"base": {...},
        "configs": [{...}, ...]}`` for an explicit list."""
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("spec", str(exc)) from None
        base = config_from_mapping(doc.get("base", {}), base)
        if "configs" in doc:
            return cls([dict(c) for c in doc["configs"]], base)
        return cls.cross(
            doc.get("until", STANDARD_UNTILS),
            doc.get("hospital_status", doc.get("status", STANDARD_STATUSES)),
            doc.get("seed", STANDARD_SEEDS),
            base,
        )

    def configs(self):
        """Yield ``(entry, SimulationConfig or ConfigError)`` per entry."""
        for entry in self.entries:
            try:
                yield entry, config_from_mapping(entry, self.base)
            except ConfigError as exc:
                yield entry, exc
