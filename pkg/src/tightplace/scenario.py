"""Scenario files: a small line-oriented ``key = value`` format with sections.

Grammar::

    file     := line*
    line     := blank | comment | header | pair
    comment  := '#' text                      (also allowed after a value)
    header   := '[' name ']'                  name in {sensor, flow, construction}
    pair     := key '=' value
    value    := word (whitespace word)*       numbers, booleans or names

Top-level keys (before any header): ``dimension`` (2 or 3, required),
``target`` (d numbers, default origin), and defaults ``kind`` / ``sigma``
inherited by every sensor.

``[sensor]`` may repeat, one block per sensor, in order.  Keys: ``kind``
(bearing | range | rss), ``sigma``, and exactly one of ``range`` (construct
mode) or ``position`` (d numbers, simulate/check mode).  Range-only sensors
in construct mode may omit ``range`` (taken as 1).

``[flow]`` keys: ``dt``, ``t_end``, ``integrator`` (euler | rk4),
``convergence_tol``, ``seed``, ``renormalize`` (true | false),
``max_restarts``, ``stall_window``, ``stall_threshold``,
``altitude_targets`` (one number per sensor), ``altitude_tol``,
``record_every``.

``[construction]`` keys: ``method`` (auto | irregular | square | 2d |
dplus1 | five | partition | flow).
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .construction import METHODS
from .errors import ContractError
from .flow import FlowConfig, Integrator
from .geometry import Placement
from .sensors import SensorKind, SensorSpec


class ScenarioParseError(ContractError):
    def __init__(self, message, line=0, column=0, path=None):
        where = f"{path or '<scenario>'}:{line}:{column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


@dataclass
class SensorEntry:
    kind: Optional[SensorKind] = None
    sigma: Optional[float] = None
    range: Optional[float] = None
    position: Optional[np.ndarray] = None
    line: int = 0


@dataclass
class Scenario:
    dimension: int
    target: np.ndarray
    sensors: list
    flow: Optional[FlowConfig] = None
    method: str = "auto"
    path: Optional[str] = None

    @property
    def mode(self):
        return "simulate" if self.sensors[0].position is not None else "construct"

    @property
    def kind(self):
        return self.sensors[0].kind

    def specs(self):
        """Sensor specs; in position mode the ranges come from the geometry."""
        if self.mode == "construct":
            return [SensorSpec(s.kind, s.sigma, 1.0 if s.range is None else s.range)
                    for s in self.sensors]
        pl = self.placement()
        return [SensorSpec(s.kind, s.sigma, float(r)) for s, r in zip(self.sensors, pl.ranges)]

    def placement(self):
        """Placement from explicit positions (simulate/check mode only)."""
        if self.mode != "simulate":
            raise ContractError("scenario gives ranges, not positions")
        return Placement.from_positions(np.array([s.position for s in self.sensors]), self.target)

    def ranges(self):
        return np.array([1.0 if s.range is None else s.range for s in self.sensors])


_FLOW_KEYS = {
    "dt": float, "t_end": float, "integrator": Integrator.parse,
    "convergence_tol": float, "seed": int, "renormalize": "bool",
    "max_restarts": int, "stall_window": int, "stall_threshold": float,
    "altitude_targets": "floats", "altitude_tol": float, "record_every": int,
}


def _bool(text):
    key = text.lower()
    if key in ("true", "yes", "on", "1"):
        return True
    if key in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text):
    vals = [float(w) for w in text.split()]
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ValueError("expected finite numbers")
    return vals


def _float(text):
    vals = _floats(text)
    if len(vals) != 1:
        raise ValueError("expected a single number")
    return vals[0]


def parse_scenario(text, path=None):
    """Parse scenario text; errors carry the offending line and column."""
    top = {}
    sensors = []
    flow = None
    flow_line = 0
    method = "auto"
    section = None
    current = None

    def fail(msg, lineno, col=1):
        raise ScenarioParseError(msg, lineno, col, path)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                fail("unterminated section header", lineno, col)
            section = stripped[1:-1].strip().lower()
            if section == "sensor":
                current = SensorEntry(line=lineno)
                sensors.append(current)
            elif section == "flow":
                if flow is not None:
                    fail("duplicate [flow] section", lineno, col)
                flow = {}
                flow_line = lineno
            elif section == "construction":
                pass
            else:
                fail(f"unknown section [{section}]", lineno, col + 1)
            continue
        if "=" not in stripped:
            fail("expected 'key = value'", lineno, col)
        key, value = (part.strip() for part in stripped.split("=", 1))
        key = key.lower()
        vcol = line.index("=") + 2 + (len(line.split("=", 1)[1]) - len(line.split("=", 1)[1].lstrip()))
        if not value:
            fail(f"missing value for {key!r}", lineno, vcol)
        try:
            if section is None:
                if key == "dimension":
                    top[key] = int(value)
                elif key == "target":
                    top[key] = np.array(_floats(value))
                elif key == "kind":
                    top[key] = SensorKind.parse(value)
                elif key == "sigma":
                    top[key] = _float(value)
                else:
                    fail(f"unknown top-level key {key!r}", lineno, col)
            elif section == "sensor":
                if key == "kind":
                    current.kind = SensorKind.parse(value)
                elif key == "sigma":
                    current.sigma = _float(value)
                elif key == "range":
                    current.range = _float(value)
                elif key == "position":
                    current.position = np.array(_floats(value))
                else:
                    fail(f"unknown sensor key {key!r}", lineno, col)
            elif section == "flow":
                conv = _FLOW_KEYS.get(key)
                if conv is None:
                    fail(f"unknown flow key {key!r}", lineno, col)
                if conv == "bool":
                    flow[key] = _bool(value)
                elif conv == "floats":
                    flow[key] = tuple(_floats(value))
                else:
                    flow[key] = conv(value)
                    if isinstance(flow[key], float) and not math.isfinite(flow[key]):
                        raise ValueError("expected a finite number")
            elif section == "construction":
                if key != "method":
                    fail(f"unknown construction key {key!r}", lineno, col)
                if value.lower() not in METHODS:
                    fail(f"unknown method {value!r}", lineno, vcol)
                method = value.lower()
        except ScenarioParseError:
            raise
        except (ValueError, ContractError) as exc:
            fail(f"bad value for {key!r}: {exc}", lineno, vcol)

    if "dimension" not in top:
        fail("missing required key 'dimension'", 1)
    d = top["dimension"]
    if d not in (2, 3):
        fail(f"dimension must be 2 or 3, got {d}", 1)
    target = top.get("target", np.zeros(d))
    if target.shape != (d,):
        fail(f"target needs {d} coordinates", 1)
    if not sensors:
        fail("no [sensor] blocks", 1)

    for s in sensors:
        s.kind = s.kind or top.get("kind")
        s.sigma = s.sigma if s.sigma is not None else top.get("sigma")
        if s.kind is None:
            fail("sensor has no kind", s.line)
        if s.sigma is None or s.sigma <= 0:
            fail("sensor needs a positive sigma", s.line)
        if s.range is not None and s.position is not None:
            fail("give either range or position, not both", s.line)
        if s.range is not None and s.range <= 0:
            fail("range must be positive", s.line)
        if s.position is not None and s.position.shape != (d,):
            fail(f"position needs {d} coordinates", s.line)
        if s.range is None and s.position is None and s.kind is not SensorKind.RANGE_ONLY:
            fail("sensor needs a range or a position", s.line)
    if len({s.kind for s in sensors}) > 1:
        fail("mixed sensor kinds are not supported", sensors[0].line)
    positional = [s.position is not None for s in sensors]
    if any(positional) and not all(positional):
        bad = sensors[positional.index(False)]
        fail("mix of range-mode and position-mode sensors", bad.line)

    config = None
    if flow is not None:
        try:
            config = FlowConfig(**flow)
        except (ContractError, TypeError) as exc:
            fail(f"invalid [flow] block: {exc}", flow_line)
        if config.altitude_targets is not None and len(config.altitude_targets) != len(sensors):
            fail("altitude_targets needs one value per sensor", flow_line)
    return Scenario(d, target, sensors, config, method, path)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), str(path))


def _fmt(x):
    return repr(float(x))


def format_scenario(placement, specs, flow=None, comment=None):
    """Position-mode scenario text for a placement (round-trips through :func:`parse_scenario`)."""
    lines = []
    if comment:
        lines += [f"# {row}" for row in comment.splitlines()]
    lines.append(f"dimension = {placement.d}")
    lines.append("target = " + " ".join(_fmt(v) for v in placement.target))
    for spec, pos in zip(specs, placement.positions):
        lines += ["", "[sensor]", f"kind = {spec.kind.value}", f"sigma = {_fmt(spec.sigma)}",
                  "position = " + " ".join(_fmt(v) for v in pos)]
    if flow is not None:
        lines += ["", "[flow]"]
        for key in _FLOW_KEYS:
            val = getattr(flow, key)
            if val is None:
                continue
            if isinstance(val, Integrator):
                text = val.value
            elif isinstance(val, bool):
                text = "true" if val else "false"
            elif isinstance(val, tuple):
                text = " ".join(_fmt(v) for v in val)
            elif isinstance(val, int):
                text = str(val)
            else:
                text = _fmt(val)
            lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
