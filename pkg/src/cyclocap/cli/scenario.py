"""Scenario files: a versioned YAML tree describing one computation.

Example::

    schema_version: 1
    name: fig3
    profile: {base: 0.2, amplitude: 4.8, period_tc_seconds: 5.0e-6,
              offset_phi: 0.0, duty: 0.47, rise: 0.01}
    sampling: {td: 2, eps: "pi/7"}
    power: 1.0
    sweep: {kind: n, n_min: 1, n_max: 500}
    series:
      - {label: "DC=1%", duty: 0.01}
      - {label: "DC=95%", duty: 0.95}
    output: {name: fig3, format: csv+svg}
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
import yaml

from cyclocap.errors import ConfigurationError
from cyclocap.profile import (
    REFERENCE_AMPLITUDE,
    REFERENCE_BASE,
    REFERENCE_PERIOD_TC,
    PulseShape,
    TabulatedProfile,
    VarianceProfile,
)

__all__ = [
    "SCHEMA_VERSION",
    "ScenarioParseError",
    "Series",
    "Scenario",
    "parse_eps",
    "format_eps",
    "parse_grid",
    "load_scenario",
    "scenario_from_dict",
]

SCHEMA_VERSION = 1

SWEEP_KINDS = ("n", "ratio", "power", "offset")
PROFILE_KEYS = ("base", "amplitude", "period_tc_seconds", "offset_phi", "duty", "rise", "table")
SERIES_KEYS = PROFILE_KEYS + ("td", "eps", "power", "label")
TOP_KEYS = ("schema_version", "name", "profile", "sampling", "power", "sweep", "series",
            "infospec", "output")

_PI_RE = re.compile(r"^\s*pi\s*/\s*(\d+(?:\.\d*)?)\s*$", re.IGNORECASE)
_FRAC_RE = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*$")


class ScenarioParseError(Exception):
    """Malformed file; carries the 1-based line and column when known."""

    exit_code = 2

    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


def parse_eps(value, key="sampling.eps"):
    """Parse a mismatch: ``"pi/K"`` gives a float, decimals and ``"u/v"`` a Fraction."""
    if isinstance(value, bool):
        raise ConfigurationError(f"not a number: {value!r}", key=key)
    if isinstance(value, (int, float)):
        eps = Fraction(repr(value)) if isinstance(value, float) else Fraction(value)
    elif isinstance(value, str):
        m = _PI_RE.match(value)
        f = _FRAC_RE.match(value)
        if m:
            eps = math.pi / float(m.group(1))
        elif f:
            if int(f.group(2)) == 0:
                raise ConfigurationError("zero denominator", key=key)
            eps = Fraction(int(f.group(1)), int(f.group(2)))
        else:
            try:
                eps = Fraction(value.strip())
            except ValueError:
                raise ConfigurationError(
                    f"expected 'pi/K', 'u/v' or a decimal, got {value!r}", key=key
                ) from None
    else:
        raise ConfigurationError(f"unsupported value {value!r}", key=key)
    if not (0 <= eps < 1):
        raise ConfigurationError(f"must lie in [0, 1), got {value!r}", key=key)
    return eps


def format_eps(eps):
    if isinstance(eps, Fraction):
        return str(eps)
    k = math.pi / eps if eps else 0
    if eps and abs(k - round(k)) < 1e-9:
        return f"pi/{round(k)}"
    return repr(float(eps))


def parse_grid(spec, key):
    """A grid is a non-empty list or a mapping with start/stop and num or step."""
    if isinstance(spec, (list, tuple)):
        values = [float(v) for v in spec]
    elif isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "num", "step", "endpoint"}
        if unknown:
            raise ConfigurationError(f"unknown grid keys {sorted(unknown)}", key=key)
        try:
            start, stop = float(spec["start"]), float(spec["stop"])
        except KeyError as exc:
            raise ConfigurationError(f"missing {exc.args[0]!r}", key=key) from None
        endpoint = bool(spec.get("endpoint", True))
        if "num" in spec:
            values = np.linspace(start, stop, int(spec["num"]), endpoint=endpoint).tolist()
        elif "step" in spec:
            step = float(spec["step"])
            if step <= 0:
                raise ConfigurationError("step must be positive", key=key)
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = (start + step * np.arange(count)).tolist()
            if not endpoint and values and abs(values[-1] - stop) < 1e-12:
                values = values[:-1]
        else:
            raise ConfigurationError("grid needs 'num' or 'step'", key=key)
    else:
        raise ConfigurationError(f"expected list or mapping, got {spec!r}", key=key)
    if not values:
        raise ConfigurationError("grid is empty", key=key)
    return values


@dataclass(frozen=True)
class Series:
    label: str
    profile: object
    td: int
    eps: object
    power: float


@dataclass
class Scenario:
    name: str
    series: list
    sweep: Optional[dict]
    infospec: Optional[dict]
    output: dict
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def kind(self):
        return None if self.sweep is None else self.sweep["kind"]

    def digest(self, seed=None):
        payload = json.dumps({"config": self.raw, "seed": seed}, sort_keys=True, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _number(block, key, prefix, default=None, cast=float):
    if key not in block:
        if default is None:
            raise ConfigurationError("missing required key", key=f"{prefix}.{key}")
        return default
    value = block[key]
    if isinstance(value, bool):
        raise ConfigurationError(f"expected a number, got {value!r}", key=f"{prefix}.{key}")
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"expected a number, got {value!r}", key=f"{prefix}.{key}") from None


def _build_profile(block, prefix="profile"):
    unknown = set(block) - set(PROFILE_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown keys {sorted(unknown)}", key=prefix)
    period = _number(block, "period_tc_seconds", prefix, REFERENCE_PERIOD_TC)
    phi = _number(block, "offset_phi", prefix, 0.0)
    if "table" in block:
        table = block["table"]
        if not isinstance(table, dict) or "knots" not in table or "values" not in table:
            raise ConfigurationError("table needs knots and values", key=f"{prefix}.table")
        return TabulatedProfile(tuple(table["knots"]), tuple(table["values"]), period, phi)
    try:
        shape = PulseShape(_number(block, "duty", prefix, 0.47), _number(block, "rise", prefix, 0.01))
        return VarianceProfile(
            _number(block, "base", prefix, REFERENCE_BASE),
            _number(block, "amplitude", prefix, REFERENCE_AMPLITUDE),
            period,
            phi,
            shape,
        )
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc).split(": ", 1)[-1], key=f"{prefix}.{exc.key}") from None


def _validate_sweep(sweep):
    if not isinstance(sweep, dict):
        raise ConfigurationError("expected a mapping", key="sweep")
    kind = sweep.get("kind")
    if kind not in SWEEP_KINDS:
        raise ConfigurationError(f"kind must be one of {SWEEP_KINDS}, got {kind!r}", key="sweep.kind")
    out = dict(sweep)
    if kind == "n":
        out["n_min"] = _number(sweep, "n_min", "sweep", 1, int)
        out["n_max"] = _number(sweep, "n_max", "sweep", 500, int)
        if not 1 <= out["n_min"] <= out["n_max"]:
            raise ConfigurationError("need 1 <= n_min <= n_max", key="sweep.n_min")
        out["step"] = _number(sweep, "step", "sweep", 1, int)
    else:
        if "grid" not in sweep:
            raise ConfigurationError("missing required key", key="sweep.grid")
        out["grid"] = parse_grid(sweep["grid"], "sweep.grid")
    if kind == "ratio":
        out["max_denominator"] = _number(sweep, "max_denominator", "sweep", 10**4, int)
        if any(r <= 1 for r in out["grid"]):
            raise ConfigurationError("ratios must exceed 1", key="sweep.grid")
    if kind == "power":
        if any(p <= 0 for p in out["grid"]):
            raise ConfigurationError("powers must be positive", key="sweep.grid")
        if "eps_list" in sweep:
            if not sweep["eps_list"]:
                raise ConfigurationError("eps_list is empty", key="sweep.eps_list")
            out["eps_list"] = [parse_eps(e, "sweep.eps_list") for e in sweep["eps_list"]]
    if kind == "offset" and any(not 0 <= p < 1 for p in out["grid"]):
        raise ConfigurationError("offsets must lie in [0, 1)", key="sweep.grid")
    out["tail_window"] = _number(sweep, "tail_window", "sweep", 250, int)
    if "n_max_liminf" in sweep:
        out["n_max_liminf"] = _number(sweep, "n_max_liminf", "sweep", None, int)
    return out


def scenario_from_dict(raw) -> Scenario:
    """Validate a parsed tree and expand it into one entry per series."""
    if not isinstance(raw, dict):
        raise ConfigurationError("top level must be a mapping", key="<root>")
    raw = copy.deepcopy(raw)
    unknown = set(raw) - set(TOP_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown keys {sorted(unknown)}", key="<root>")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"expected {SCHEMA_VERSION}, got {version!r}", key="schema_version")

    profile_block = raw.get("profile") or {}
    sampling = raw.get("sampling") or {}
    if not isinstance(profile_block, dict):
        raise ConfigurationError("expected a mapping", key="profile")
    if not isinstance(sampling, dict):
        raise ConfigurationError("expected a mapping", key="sampling")
    unknown = set(sampling) - {"td", "eps"}
    if unknown:
        raise ConfigurationError(f"unknown keys {sorted(unknown)}", key="sampling")

    sweep = None if raw.get("sweep") is None else _validate_sweep(raw["sweep"])
    power_default = raw.get("power", 1.0)

    overrides = raw.get("series") or [{}]
    if not isinstance(overrides, list):
        raise ConfigurationError("expected a list", key="series")
    eps_list = (sweep or {}).get("eps_list")
    if eps_list is not None:
        overrides = [
            {**o, "eps": e, "label": (o.get("label", "") + " " if o.get("label") else "")
             + f"eps={format_eps(e)}"}
            for o in overrides for e in eps_list
        ]

    series = []
    for idx, o in enumerate(overrides):
        if not isinstance(o, dict):
            raise ConfigurationError("expected a mapping", key=f"series[{idx}]")
        unknown = set(o) - set(SERIES_KEYS)
        if unknown:
            raise ConfigurationError(f"unknown keys {sorted(unknown)}", key=f"series[{idx}]")
        pblock = {**profile_block, **{k: v for k, v in o.items() if k in PROFILE_KEYS}}
        profile = _build_profile(pblock, "profile" if not o else f"series[{idx}]")
        td = o.get("td", sampling.get("td"))
        if td is None:
            raise ConfigurationError("missing required key", key="sampling.td")
        if isinstance(td, bool) or int(td) != td or td < 1:
            raise ConfigurationError(f"must be a positive integer, got {td!r}", key="sampling.td")
        eps_value = o.get("eps", sampling.get("eps", 0))
        eps = eps_value if isinstance(eps_value, (Fraction, float)) and not isinstance(
            eps_value, bool) and eps_list is not None else parse_eps(eps_value)
        power = _number({"power": o.get("power", power_default)}, "power", "power")
        if not power > 0:
            raise ConfigurationError(f"must be positive, got {power}", key="power")
        label = str(o.get("label") or f"series{idx}").replace(",", ";")
        series.append(Series(label, profile, int(td), eps, power))

    infospec = raw.get("infospec")
    if infospec is not None:
        if not isinstance(infospec, dict):
            raise ConfigurationError("expected a mapping", key="infospec")
        infospec = {
            "k_list": [int(k) for k in parse_grid(infospec.get("k_list", [100, 1000, 10000]),
                                                  "infospec.k_list")],
            "n_samples": int(infospec.get("n_samples", 1000)),
            "seed": int(infospec.get("seed", 0)),
            "n_list": [int(n) for n in infospec.get("n_list", [])],
            "delta": float(infospec.get("delta", 0.05)),
            "alpha_resolution": float(infospec.get("alpha_resolution", 1e-3)),
        }
    output = dict(raw.get("output") or {})
    fmt = output.get("format", "csv")
    if fmt not in ("csv", "csv+svg"):
        raise ConfigurationError(f"must be csv or csv+svg, got {fmt!r}", key="output.format")
    output["format"] = fmt
    name = str(raw.get("name") or output.get("name") or "scenario")
    output.setdefault("name", name)
    return Scenario(name, series, sweep, infospec, output, raw)


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    Raises
    ------
    ScenarioParseError
        The file is not valid YAML (carries line and column).
    ConfigurationError
        A key is missing or out of range (names the key).
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = None if mark is None else mark.line + 1
        col = None if mark is None else mark.column + 1
        raise ScenarioParseError(f"invalid YAML: {exc.problem}", line, col) from None
    except yaml.YAMLError as exc:
        raise ScenarioParseError(f"invalid YAML: {exc}") from None
    return scenario_from_dict(raw)
