"""Scenario configuration: data model, text parser, canonical serialiser.

The on-disk format is a small block-structured key-value language:

    # comment
    phy = dot11b-11M
    payload_bytes = 1000
    duration_s = 180
    seed = 1

    controller {
      enabled = true
      alpha = 0.1
      update_period_s = 10
      disassociation_threshold = 6
      measurement_mode = realistic
    }

    estimator {
      z_score = 1.96
      epsilon = 0.01
    }

    capture {
      p_capture = 1.0
    }

    station sta1 {
      policy = compliant            # or cwmin_halved, fixed_cw(16),
                                    # aifs_sifs, large_txop(6413),
                                    # scripted(0.5, 0, -0.5)
      traffic = saturated           # or onoff(active_s=5, idle_mean_s=60)
                                    # or bernoulli(0.03)
      capture_priority = 0
      join_s = 0
      leave_s = none
      initial_penalty = 0
      forced_p_nack = none          # diagnostic: fixed ACK-drop probability
    }

Parse errors carry the offending line number.  serialize() emits the
canonical form; parse(serialize(cfg)) reproduces cfg exactly.
"""

import re
from dataclasses import dataclass, field, replace

from .adversary import LARGE_TXOP_DEFAULT_US, POLICY_KINDS, BehaviourPolicy
from .dcf import PHY_PRESETS, EstimatorConfig
from .policing import ControllerConfig

MEASUREMENT_MODES = ("realistic", "oracle")


class ScenarioError(ValueError):
    """Configuration problem, anchored to a source line when parsing."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class TrafficSpec:
    kind: str = "saturated"            # saturated | onoff | bernoulli
    active_s: float = 5.0              # onoff: fixed active-period length
    idle_mean_s: float = 60.0          # onoff: mean of exponential idle gap
    arrival_prob: float = 0.01         # bernoulli: frame arrivals per slot

    def __post_init__(self):
        if self.kind not in ("saturated", "onoff", "bernoulli"):
            raise ScenarioError(f"unknown traffic source {self.kind!r}")
        if self.kind == "onoff" and (self.active_s <= 0 or self.idle_mean_s <= 0):
            raise ScenarioError("onoff periods must be positive")
        if self.kind == "bernoulli" and not 0 < self.arrival_prob < 1:
            raise ScenarioError("bernoulli arrival_prob must lie in (0, 1)")


@dataclass(frozen=True)
class StationSpec:
    sid: str
    policy: BehaviourPolicy = field(default_factory=BehaviourPolicy)
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    capture_priority: int = 0
    join_s: float = 0.0
    leave_s: float = None              # None = stays for the whole run
    initial_penalty: float = 0.0
    forced_p_nack: float = None        # None = controller decides

    def __post_init__(self):
        if not re.fullmatch(r"[A-Za-z0-9_.:-]+", self.sid):
            raise ScenarioError(f"invalid station id {self.sid!r}")
        if self.join_s < 0:
            raise ScenarioError(f"station {self.sid}: join_s must be >= 0")
        if self.leave_s is not None and self.leave_s <= self.join_s:
            raise ScenarioError(f"station {self.sid}: leave must follow join")
        if self.forced_p_nack is not None and not 0 <= self.forced_p_nack <= 1:
            raise ScenarioError(f"station {self.sid}: forced_p_nack out of [0,1]")
        if self.initial_penalty < 0:
            raise ScenarioError(f"station {self.sid}: initial_penalty must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    stations: tuple
    phy: str = "dot11b-11M"
    payload_bytes: int = 1000
    duration_s: float = 180.0
    seed: int = 1
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    policing_enabled: bool = True
    measurement_mode: str = "realistic"
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    p_capture: float = 1.0

    def __post_init__(self):
        if self.phy not in PHY_PRESETS:
            raise ScenarioError(
                f"unknown phy preset {self.phy!r}; choose from {sorted(PHY_PRESETS)}")
        if self.measurement_mode not in MEASUREMENT_MODES:
            raise ScenarioError(f"unknown measurement mode {self.measurement_mode!r}")
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be positive")
        if self.payload_bytes <= 0:
            raise ScenarioError("payload_bytes must be positive")
        if not 0 <= self.p_capture <= 1:
            raise ScenarioError("p_capture must lie in [0, 1]")
        if not self.stations:
            raise ScenarioError("scenario needs at least one station")
        episodes = {}
        for st in self.stations:
            episodes.setdefault(st.sid, []).append(st)
        for sid, eps in episodes.items():
            if len(eps) == 1:
                continue
            # the same station may re-associate later (penalties carry over),
            # but its association episodes must not overlap
            eps = sorted(eps, key=lambda s: s.join_s)
            for cur, nxt in zip(eps, eps[1:]):
                if cur.leave_s is None or cur.leave_s > nxt.join_s:
                    raise ScenarioError(
                        f"duplicate station id {sid!r} with overlapping episodes")

    def timing(self):
        return PHY_PRESETS[self.phy](self.payload_bytes)


# ---------------------------------------------------------------------------
# parsing

_CALL_RE = re.compile(r"^([a-z_]+)\s*\(\s*(.*?)\s*\)$")


def _parse_scalar(text, line):
    if text == "none":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_args(argtext, line):
    """Arguments of policy/traffic calls: positional or key=value."""
    pos, kw = [], {}
    if argtext.strip():
        for part in argtext.split(","):
            part = part.strip()
            if "=" in part:
                k, v = part.split("=", 1)
                kw[k.strip()] = _parse_scalar(v.strip(), line)
            else:
                pos.append(_parse_scalar(part, line))
    return pos, kw


def _parse_policy(text, line):
    m = _CALL_RE.match(text)
    name, pos, kw = (text, [], {})
    if m:
        name = m.group(1)
        pos, kw = _parse_args(m.group(2), line)
    if name not in POLICY_KINDS:
        raise ScenarioError(f"unknown policy name {text!r}", line)
    try:
        if name == "fixed_cw":
            return BehaviourPolicy(kind=name, cw=int(pos[0] if pos else kw.get("cw", 16)))
        if name == "large_txop":
            txop = pos[0] if pos else kw.get("txop_us", LARGE_TXOP_DEFAULT_US)
            return BehaviourPolicy(kind=name, txop_us=float(txop))
        if name == "scripted":
            if not pos:
                raise ScenarioError("scripted policy needs y values", line)
            return BehaviourPolicy(kind=name, y_sequence=tuple(float(v) for v in pos))
        return BehaviourPolicy(kind=name)
    except (TypeError, ValueError, IndexError) as exc:
        raise ScenarioError(f"bad policy arguments in {text!r}: {exc}", line)


def _parse_traffic(text, line):
    m = _CALL_RE.match(text)
    name, pos, kw = (text, [], {})
    if m:
        name = m.group(1)
        pos, kw = _parse_args(m.group(2), line)
    try:
        if name == "saturated":
            return TrafficSpec()
        if name == "onoff":
            return TrafficSpec(kind="onoff",
                               active_s=float(kw.get("active_s", pos[0] if pos else 5.0)),
                               idle_mean_s=float(kw.get("idle_mean_s",
                                                        pos[1] if len(pos) > 1 else 60.0)))
        if name == "bernoulli":
            p = pos[0] if pos else kw.get("arrival_prob")
            return TrafficSpec(kind="bernoulli", arrival_prob=float(p))
    except ScenarioError:
        raise
    except (TypeError, ValueError, IndexError) as exc:
        raise ScenarioError(f"bad traffic arguments in {text!r}: {exc}", line)
    raise ScenarioError(f"unknown traffic source {text!r}", line)


_TOP_KEYS = {"phy", "payload_bytes", "duration_s", "seed"}
_CTRL_KEYS = {"enabled", "alpha", "update_period_s", "disassociation_threshold",
              "measurement_mode"}
_EST_KEYS = {"z_score", "epsilon"}
_CAP_KEYS = {"p_capture"}
_STA_KEYS = {"policy", "traffic", "capture_priority", "join_s", "leave_s",
             "initial_penalty", "forced_p_nack"}


def parse_scenario(text):
    """Parse scenario text into a validated ScenarioConfig.

    Raises ScenarioError naming the offending line for unknown keys or
    sections, malformed values, duplicate ids, and missing fields.
    """
    top = {}
    blocks = {"controller": {}, "estimator": {}, "capture": {}}
    stations = []
    context = None          # (kind, name, dict) while inside a block

    def handle(line, lineno):
        nonlocal context
        if line == "}":
            if context is None:
                raise ScenarioError("unmatched '}'", lineno)
            kind, name, body = context
            if kind == "station":
                stations.append(_build_station(name, body))
            context = None
            return
        if line.endswith("{"):
            if context is not None:
                raise ScenarioError("nested blocks are not allowed", lineno)
            header = line[:-1].strip().split()
            if len(header) == 1 and header[0] in blocks:
                context = (header[0], None, blocks[header[0]])
            elif len(header) == 2 and header[0] == "station":
                context = ("station", header[1], {})
            else:
                raise ScenarioError(f"unknown section {line[:-1].strip()!r}", lineno)
            return
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if context is None:
            if key not in _TOP_KEYS:
                raise ScenarioError(f"unknown top-level key {key!r}", lineno)
            top[key] = (_parse_scalar(value, lineno), lineno)
        else:
            kind, name, body = context
            allowed = {"controller": _CTRL_KEYS, "estimator": _EST_KEYS,
                       "capture": _CAP_KEYS, "station": _STA_KEYS}[kind]
            if key not in allowed:
                raise ScenarioError(f"unknown key {key!r} in {kind} block", lineno)
            body[key] = (value if kind == "station" and key in ("policy", "traffic")
                         else _parse_scalar(value, lineno), lineno)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "{" in line and line.endswith("}"):
            # single-line block, e.g. "station x { policy = compliant }"
            head, _, body = line.partition("{")
            body = body[:-1].strip()
            pieces = ([head.strip() + " {"]
                      + [p.strip() for p in body.split(";") if p.strip()]
                      + ["}"])
            for piece in pieces:
                handle(piece, lineno)
        else:
            handle(line, lineno)
    if context is not None:
        raise ScenarioError(f"unterminated {context[0]} block", len(text.splitlines()))

    def take(d, key, default):
        if key in d:
            return d.pop(key)[0]
        return default

    try:
        ctrl_body = blocks["controller"]
        controller = ControllerConfig(
            alpha=float(take(ctrl_body, "alpha", 0.1)),
            update_period_s=float(take(ctrl_body, "update_period_s", 10.0)),
            disassociation_threshold=int(take(ctrl_body, "disassociation_threshold", 6)))
        policing_enabled = bool(take(ctrl_body, "enabled", True))
        mode = str(take(ctrl_body, "measurement_mode", "realistic"))
        est_body = blocks["estimator"]
        estimator = EstimatorConfig(z_score=float(take(est_body, "z_score", 1.96)),
                                    epsilon=float(take(est_body, "epsilon", 0.01)))
        cap_body = blocks["capture"]
        p_capture = float(take(cap_body, "p_capture", 1.0))
        cfg = ScenarioConfig(
            stations=tuple(stations),
            phy=str(take(top, "phy", "dot11b-11M")),
            payload_bytes=int(take(top, "payload_bytes", 1000)),
            duration_s=float(take(top, "duration_s", 180.0)),
            seed=int(take(top, "seed", 1)),
            controller=controller,
            policing_enabled=policing_enabled,
            measurement_mode=mode,
            estimator=estimator,
            p_capture=p_capture)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc))
    return cfg


def _build_station(sid, body):
    def take(key, default):
        if key in body:
            value, line = body.pop(key)
            return value, line
        return default, None

    policy_text, pline = take("policy", "compliant")
    traffic_text, tline = take("traffic", "saturated")
    policy = (_parse_policy(policy_text.strip(), pline)
              if isinstance(policy_text, str) else policy_text)
    traffic = (_parse_traffic(traffic_text.strip(), tline)
               if isinstance(traffic_text, str) else traffic_text)
    leave, _ = take("leave_s", None)
    forced, _ = take("forced_p_nack", None)
    return StationSpec(
        sid=sid, policy=policy, traffic=traffic,
        capture_priority=int(take("capture_priority", 0)[0]),
        join_s=float(take("join_s", 0.0)[0]),
        leave_s=None if leave is None else float(leave),
        initial_penalty=float(take("initial_penalty", 0.0)[0]),
        forced_p_nack=None if forced is None else float(forced))


# ---------------------------------------------------------------------------
# serialisation

def _fmt(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _fmt_policy(p):
    if p.kind == "fixed_cw":
        return f"fixed_cw({p.cw})"
    if p.kind == "large_txop":
        return f"large_txop({_fmt(p.txop_us)})"
    if p.kind == "scripted":
        return "scripted(" + ", ".join(_fmt(v) for v in p.y_sequence) + ")"
    return p.kind


def _fmt_traffic(t):
    if t.kind == "onoff":
        return f"onoff(active_s={_fmt(t.active_s)}, idle_mean_s={_fmt(t.idle_mean_s)})"
    if t.kind == "bernoulli":
        return f"bernoulli({_fmt(t.arrival_prob)})"
    return "saturated"


def serialize_scenario(cfg):
    """Render a ScenarioConfig in canonical text form (stable ordering)."""
    out = [
        f"phy = {cfg.phy}",
        f"payload_bytes = {cfg.payload_bytes}",
        f"duration_s = {_fmt(cfg.duration_s)}",
        f"seed = {cfg.seed}",
        "",
        "controller {",
        f"  enabled = {_fmt(cfg.policing_enabled)}",
        f"  alpha = {_fmt(cfg.controller.alpha)}",
        f"  update_period_s = {_fmt(cfg.controller.update_period_s)}",
        f"  disassociation_threshold = {cfg.controller.disassociation_threshold}",
        f"  measurement_mode = {cfg.measurement_mode}",
        "}",
        "",
        "estimator {",
        f"  z_score = {_fmt(cfg.estimator.z_score)}",
        f"  epsilon = {_fmt(cfg.estimator.epsilon)}",
        "}",
        "",
        "capture {",
        f"  p_capture = {_fmt(cfg.p_capture)}",
        "}",
    ]
    for st in cfg.stations:
        out += [
            "",
            f"station {st.sid} {{",
            f"  policy = {_fmt_policy(st.policy)}",
            f"  traffic = {_fmt_traffic(st.traffic)}",
            f"  capture_priority = {st.capture_priority}",
            f"  join_s = {_fmt(st.join_s)}",
            f"  leave_s = {_fmt(st.leave_s)}",
            f"  initial_penalty = {_fmt(st.initial_penalty)}",
            f"  forced_p_nack = {_fmt(st.forced_p_nack)}",
            "}",
        ]
    return "\n".join(out) + "\n"


def with_overrides(cfg, seed=None, duration_s=None, measurement_mode=None,
                   policing_enabled=None):
    """Common CLI overrides without mutating the original config."""
    kwargs = {}
    if seed is not None:
        kwargs["seed"] = seed
    if duration_s is not None:
        kwargs["duration_s"] = duration_s
    if measurement_mode is not None:
        kwargs["measurement_mode"] = measurement_mode
    if policing_enabled is not None:
        kwargs["policing_enabled"] = policing_enabled
    return replace(cfg, **kwargs) if kwargs else cfg
