"""Scenario configuration: parameter containers, validation and (de)serialisation.

Two text formats are accepted by :func:`parse_config`:

* an INI-like document of ``key=value`` lines grouped under ``[section]``
  headers named after the parameter types (``ScenarioConfig``,
  ``RadioParams``, ``TrafficParams``, ``QueueParams``; the lower-case aliases
  ``scenario``, ``radio``, ``traffic`` and ``queue`` work too). Keys placed
  before the first header belong to ``ScenarioConfig``.
* a JSON object whose top level holds the scenario fields and whose
  ``radio``/``traffic``/``queue`` members hold the nested parameter groups.

Units: W, Hz, dB, m, transactions/s, blocks/s.
"""
from __future__ import annotations

import configparser
import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

from .errors import InvariantViolation, MalformedInput, UnknownKey

SPEED_OF_LIGHT = 3.0e8


class RegistrationPolicy(str, enum.Enum):
    UNIFORM_RANDOM = "UniformRandom"
    NEAREST = "Nearest"


def _require(ok, name, message):
    if not ok:
        raise InvariantViolation(name, message)


def _positive(obj, *names):
    for name in names:
        value = getattr(obj, name)
        _require(math.isfinite(value) and value > 0, name, f"must be > 0, got {value!r}")


@dataclass(frozen=True)
class RadioParams:
    carrier_frequency_hz: float = 914e6
    tx_power_w: float = 0.28183815
    gain_tx: float = 1.0
    gain_rx: float = 1.0
    sensitivity_w: float = 3.652e-10
    shadow_sigma_db: float = 6.0
    path_loss_exponent: float = 3.0

    def __post_init__(self):
        _positive(self, *(f.name for f in dataclasses.fields(self)))
        _require(self.path_loss_exponent >= 2, "path_loss_exponent",
                 f"must be >= 2, got {self.path_loss_exponent!r}")


@dataclass(frozen=True)
class TrafficParams:
    # None means "not chosen yet": the rate is swept by experiments and the
    # retry limit falls back to the number of witnesses.
    per_device_rate_tps: float | None = None
    retry_limit: int | None = None

    def __post_init__(self):
        rate = self.per_device_rate_tps
        if rate is not None:
            _require(math.isfinite(rate) and rate >= 0, "per_device_rate_tps",
                     f"must be >= 0, got {rate!r}")
        if self.retry_limit is not None:
            _require(self.retry_limit >= 1, "retry_limit",
                     f"must be >= 1, got {self.retry_limit!r}")


@dataclass(frozen=True)
class QueueParams:
    # Witness processing rates are not given by the evaluation table; these
    # defaults keep witnesses far from saturation at the default loads.
    mu1_tps: float = 10.0
    mu2_tps: float = 20.0
    block_size: int = 1000
    block_rate_bps: float = 1.8e-3

    def __post_init__(self):
        _positive(self, "mu1_tps", "mu2_tps", "block_rate_bps")
        _require(self.block_size >= 1, "block_size", f"must be >= 1, got {self.block_size!r}")

    @property
    def mean_block_time_s(self) -> float:
        return 1.0 / self.block_rate_bps


@dataclass(frozen=True)
class ScenarioConfig:
    num_witnesses: int | None = None
    area_side_m: float = 100.0
    num_devices: int = 500
    radio: RadioParams = field(default_factory=RadioParams)
    traffic: TrafficParams = field(default_factory=TrafficParams)
    queue: QueueParams = field(default_factory=QueueParams)
    registration_policy: RegistrationPolicy = RegistrationPolicy.UNIFORM_RANDOM
    rng_seed: int = 0
    deployment_replications: int = 1000
    distance_floor_m: float = 1.0

    def __post_init__(self):
        if not isinstance(self.registration_policy, RegistrationPolicy):
            try:
                policy = RegistrationPolicy(self.registration_policy)
            except ValueError:
                raise InvariantViolation(
                    "registration_policy",
                    f"expected one of {[p.value for p in RegistrationPolicy]}, "
                    f"got {self.registration_policy!r}") from None
            object.__setattr__(self, "registration_policy", policy)
        _require(self.num_witnesses is not None, "num_witnesses",
                 "has no default and must be given")
        _require(self.num_witnesses >= 1, "num_witnesses",
                 f"must be >= 1, got {self.num_witnesses!r}")
        _require(self.num_devices >= 1, "num_devices", f"must be >= 1, got {self.num_devices!r}")
        _positive(self, "area_side_m", "distance_floor_m")
        _require(self.deployment_replications >= 1, "deployment_replications",
                 f"must be >= 1, got {self.deployment_replications!r}")
        limit = self.traffic.retry_limit
        if limit is not None:
            _require(limit <= self.num_witnesses, "retry_limit",
                     f"must be <= num_witnesses ({self.num_witnesses}), got {limit}")

    @property
    def retry_limit(self) -> int:
        """Effective retry limit ``l`` (defaults to the number of witnesses)."""
        limit = self.traffic.retry_limit
        return self.num_witnesses if limit is None else limit

    @property
    def per_device_rate_tps(self) -> float:
        rate = self.traffic.per_device_rate_tps
        if rate is None:
            raise InvariantViolation("per_device_rate_tps", "is unset for this scenario")
        return rate

    def with_rate(self, rate: float) -> "ScenarioConfig":
        return dataclasses.replace(
            self, traffic=dataclasses.replace(self.traffic, per_device_rate_tps=rate))

    def with_witnesses(self, v: int) -> "ScenarioConfig":
        """Copy with ``v`` witnesses; an explicit retry limit is clipped to ``v``."""
        traffic = self.traffic
        if traffic.retry_limit is not None and traffic.retry_limit > v:
            traffic = dataclasses.replace(traffic, retry_limit=v)
        return dataclasses.replace(self, num_witnesses=v, traffic=traffic)

    def with_block_size(self, b: int) -> "ScenarioConfig":
        return dataclasses.replace(self, queue=dataclasses.replace(self.queue, block_size=b))


# --------------------------------------------------------------------------
# serialisation

_GROUPS = {"radio": RadioParams, "traffic": TrafficParams, "queue": QueueParams}
_SECTION_ALIASES = {
    "scenarioconfig": None, "scenario": None,
    "radioparams": "radio", "radio": "radio",
    "trafficparams": "traffic", "traffic": "traffic",
    "queueparams": "queue", "queue": "queue",
}
# section name given to keys that precede the first header
_LEADING = "\0leading"
_SECTION_TITLES = {None: "ScenarioConfig", "radio": "RadioParams",
                   "traffic": "TrafficParams", "queue": "QueueParams"}

_INT_FIELDS = {"num_witnesses", "num_devices", "rng_seed", "deployment_replications",
               "retry_limit", "block_size"}
_OPTIONAL_FIELDS = {"num_witnesses", "per_device_rate_tps", "retry_limit"}


def _scalar_fields(cls):
    return [f.name for f in dataclasses.fields(cls) if f.name not in _GROUPS]


def _convert(name, raw):
    if raw is None:
        if name in _OPTIONAL_FIELDS:
            return None
        raise InvariantViolation(name, "must not be null")
    if isinstance(raw, str):
        text = raw.strip()
        if name in _OPTIONAL_FIELDS and text.lower() in ("", "none", "null"):
            return None
        if name == "registration_policy":
            return text
        try:
            if name in _INT_FIELDS:
                value = float(text)
                if not value.is_integer():
                    raise ValueError
                return int(value)
            return float(text)
        except ValueError:
            raise InvariantViolation(name, f"cannot interpret {raw!r}") from None
    if name == "registration_policy":
        return raw
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise InvariantViolation(name, f"expected a number, got {raw!r}")
    if name in _INT_FIELDS:
        if not float(raw).is_integer():
            raise InvariantViolation(name, f"expected an integer, got {raw!r}")
        return int(raw)
    return float(raw)


def _build(top, groups):
    kwargs = dict(top)
    for gname, cls in _GROUPS.items():
        kwargs[gname] = cls(**groups.get(gname, {}))
    return ScenarioConfig(**kwargs)


def _parse_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedInput("JSON configuration must be an object")
    top, groups = {}, {}
    allowed_top = set(_scalar_fields(ScenarioConfig))
    for key, value in doc.items():
        if key in _GROUPS:
            if not isinstance(value, dict):
                raise MalformedInput(f"member {key!r} must be an object")
            allowed = set(_scalar_fields(_GROUPS[key]))
            for sub, raw in value.items():
                if sub not in allowed:
                    raise UnknownKey(sub, key)
                groups.setdefault(key, {})[sub] = _convert(sub, raw)
        elif key in allowed_top:
            top[key] = _convert(key, value)
        else:
            raise UnknownKey(key)
    return _build(top, groups)


def _parse_ini(text):
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",),
                                       interpolation=None, default_section="\0defaults")
    parser.optionxform = str
    try:
        parser.read_string(f"[{_LEADING}]\n" + text)
    except configparser.Error as exc:
        raise MalformedInput(str(exc).replace("\n", " ")) from None
    top, groups = {}, {}
    for section in parser.sections():
        key = "scenario" if section == _LEADING else section.strip().lower()
        if key not in _SECTION_ALIASES:
            raise MalformedInput(f"unknown section [{section}]")
        group = _SECTION_ALIASES[key]
        cls = ScenarioConfig if group is None else _GROUPS[group]
        allowed = set(_scalar_fields(cls))
        target = top if group is None else groups.setdefault(group, {})
        for name, raw in parser.items(section):
            if name not in allowed:
                raise UnknownKey(name, None if section == _LEADING else section)
            if name in target:
                raise MalformedInput(f"key {name!r} given twice")
            target[name] = _convert(name, raw)
    return _build(top, groups)


def parse_config(text: str) -> ScenarioConfig:
    """Parse a key=value or JSON document into a validated :class:`ScenarioConfig`.

    Missing fields take their defaults; ``num_witnesses`` has none, so a
    document that omits it raises :class:`InvariantViolation`.
    """
    if text.lstrip().startswith("{"):
        return _parse_json(text)
    return _parse_ini(text)


def _fmt(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = {}
    for name in _scalar_fields(ScenarioConfig):
        value = getattr(cfg, name)
        out[name] = value.value if isinstance(value, enum.Enum) else value
    for gname in _GROUPS:
        out[gname] = dataclasses.asdict(getattr(cfg, gname))
    return out


def emit_config(cfg: ScenarioConfig, fmt: str = "ini") -> str:
    """Serialise ``cfg`` so that ``parse_config(emit_config(cfg)) == cfg``."""
    if fmt == "json":
        return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"
    if fmt != "ini":
        raise ValueError(f"unknown format {fmt!r}")
    lines = []
    for group in (None, *_GROUPS):
        obj = cfg if group is None else getattr(cfg, group)
        cls = ScenarioConfig if group is None else _GROUPS[group]
        if lines:
            lines.append("")
        lines.append(f"[{_SECTION_TITLES[group]}]")
        for name in _scalar_fields(cls):
            value = getattr(obj, name)
            if value is None:
                continue
            lines.append(f"{name}={_fmt(value)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ScenarioConfig) -> str:
    """Short content hash used to tag output files."""
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
