"""Data-capture rules and retention-state evaluation.

A rule is a condition over devices, sensors (space), and a daily time
window, bounded by a validity interval, carrying an opt-in or opt-out
action. Evaluation is a pure total order: among matching rules,
device-specific rules beat device-generic ones, then the latest
created_at wins, with rule_id as the final tie-break; no matches fall
back to the rule set's default action. Opt-in maps to Active (retain in
cleartext), opt-out to Passive (cleartext deleted).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .crypto import sha256
from .events import DeviceId, SensorId, SensorReading, SensorState, lp

MS_PER_DAY = 24 * 60 * 60 * 1000

_RULE_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,64}$")


class RuleError(ValueError):
    """Raised on malformed rules or rule-set records."""


class RuleAction(Enum):
    OPT_IN = "optin"
    OPT_OUT = "optout"

    @property
    def state(self) -> SensorState:
        return SensorState.ACTIVE if self is RuleAction.OPT_IN else SensorState.PASSIVE


@dataclass(frozen=True)
class DataCaptureRule:
    """One capture condition with an action and a validity interval.

    Empty device/sensor filters mean "all"; daily_window is a pair of
    millisecond-of-day bounds, half-open, and may wrap past midnight.
    Validity is inclusive on both ends.
    """

    rule_id: str
    action: RuleAction
    device_filter: frozenset[DeviceId] = frozenset()
    sensor_filter: frozenset[SensorId] = frozenset()
    daily_window: tuple[int, int] | None = None
    valid_from: int = 1
    valid_to: int = 2**63
    created_at: int = 1

    def __post_init__(self):
        if not _RULE_ID_RE.match(self.rule_id):
            raise RuleError(f"bad rule id {self.rule_id!r}")
        if self.valid_from >= self.valid_to:
            raise RuleError("validity interval must satisfy from < to")
        if self.daily_window is not None:
            start, end = self.daily_window
            if not (0 <= start < MS_PER_DAY and 0 <= end < MS_PER_DAY):
                raise RuleError("daily window bounds must be within one day")
            if start == end:
                raise RuleError("daily window must not be empty")

    @property
    def device_specific(self) -> bool:
        return bool(self.device_filter)


def in_daily_window(window: tuple[int, int], t: int) -> bool:
    """Whether t's time-of-day falls in a possibly midnight-wrapping window."""
    start, end = window
    tod = t % MS_PER_DAY
    if start < end:
        return start <= tod < end
    return tod >= start or tod < end


def matches(rule: DataCaptureRule, reading: SensorReading) -> bool:
    """True iff the reading satisfies every condition of the rule."""
    if not rule.valid_from <= reading.time <= rule.valid_to:
        return False
    if rule.device_filter and reading.device not in rule.device_filter:
        return False
    if rule.sensor_filter and reading.sensor not in rule.sensor_filter:
        return False
    if rule.daily_window is not None and not in_daily_window(rule.daily_window, reading.time):
        return False
    return True


def encode_rule(rule: DataCaptureRule) -> bytes:
    """Canonical rule encoding (filters sorted bytewise for determinism)."""
    out = [lp(rule.rule_id.encode("ascii"))]
    out.append(b"\x01" if rule.action is RuleAction.OPT_IN else b"\x00")
    devices = sorted(d.id for d in rule.device_filter)
    out.append(len(devices).to_bytes(2, "big"))
    out.extend(lp(d) for d in devices)
    sensors = sorted(s.id for s in rule.sensor_filter)
    out.append(len(sensors).to_bytes(2, "big"))
    out.extend(lp(s) for s in sensors)
    if rule.daily_window is None:
        out.append(b"\x00")
    else:
        out.append(b"\x01" + rule.daily_window[0].to_bytes(4, "big")
                   + rule.daily_window[1].to_bytes(4, "big"))
    out.append(rule.valid_from.to_bytes(8, "big"))
    out.append(rule.valid_to.to_bytes(8, "big"))
    out.append(rule.created_at.to_bytes(8, "big"))
    return b"".join(out)


def ruleset_digest(rules) -> bytes:
    """SHA-256 over length-prefixed canonical rule encodings in rule_id order."""
    parts = []
    for rule in sorted(rules, key=lambda r: r.rule_id):
        enc = encode_rule(rule)
        parts.append(len(enc).to_bytes(4, "big") + enc)
    return sha256(b"".join(parts))


@dataclass(frozen=True)
class RuleSet:
    """An immutable published rule batch plus its recomputable digest."""

    rules: tuple[DataCaptureRule, ...]
    default_action: RuleAction
    digest: bytes

    @classmethod
    def of(cls, rules, default_action: RuleAction = RuleAction.OPT_OUT) -> "RuleSet":
        rules = tuple(rules)
        ids = [r.rule_id for r in rules]
        if len(set(ids)) != len(ids):
            raise RuleError("duplicate rule ids")
        return cls(rules, default_action, ruleset_digest(rules))

    @classmethod
    def empty(cls, default_action: RuleAction = RuleAction.OPT_OUT) -> "RuleSet":
        return cls.of((), default_action)


EMPTY_RULESET_DIGEST = ruleset_digest(())


def evaluate_state(rs: RuleSet, reading: SensorReading) -> SensorState:
    """Retention state for a reading under a rule set.

    Order of the rule list never matters: the winner among matching
    rules is the maximum under (device-specific, created_at, rule_id).
    """
    winner: DataCaptureRule | None = None
    for rule in rs.rules:
        if not matches(rule, reading):
            continue
        if winner is None or (
            (rule.device_specific, rule.created_at, rule.rule_id)
            > (winner.device_specific, winner.created_at, winner.rule_id)
        ):
            winner = rule
    action = winner.action if winner is not None else rs.default_action
    return action.state


# --- line-oriented text format -------------------------------------------
#
# One record per line, pipe-separated, fixed field order:
#   default|<optin|optout>
#   rule|<id>|<action>|<devices>|<sensors>|<window>|<from>..<to>|<created>
# where <devices>/<sensors> are '*' or comma-joined hex, <window> is '*'
# or <start_ms>-<end_ms>. Auditors diff these files against notified rules.

def _ids_field(ids) -> str:
    if not ids:
        return "*"
    return ",".join(sorted(i.id.hex() for i in ids))


def format_rules(rs: RuleSet) -> str:
    lines = ["# sensorseal rules v1", f"default|{rs.default_action.value}"]
    for r in sorted(rs.rules, key=lambda r: r.rule_id):
        window = "*" if r.daily_window is None else f"{r.daily_window[0]}-{r.daily_window[1]}"
        lines.append(
            f"rule|{r.rule_id}|{r.action.value}|{_ids_field(r.device_filter)}"
            f"|{_ids_field(r.sensor_filter)}|{window}"
            f"|{r.valid_from}..{r.valid_to}|{r.created_at}"
        )
    return "\n".join(lines) + "\n"


def _parse_ids(field: str, wrap) -> frozenset:
    if field == "*":
        return frozenset()
    try:
        return frozenset(wrap(bytes.fromhex(part)) for part in field.split(","))
    except ValueError as e:
        raise RuleError(f"bad id list {field!r}") from e


def parse_rules(text: str) -> RuleSet:
    default = RuleAction.OPT_OUT
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        try:
            if fields[0] == "default" and len(fields) == 2:
                default = RuleAction(fields[1])
            elif fields[0] == "rule" and len(fields) == 8:
                window = None
                if fields[5] != "*":
                    start, end = fields[5].split("-")
                    window = (int(start), int(end))
                valid_from, valid_to = fields[6].split("..")
                rules.append(DataCaptureRule(
                    rule_id=fields[1],
                    action=RuleAction(fields[2]),
                    device_filter=_parse_ids(fields[3], DeviceId),
                    sensor_filter=_parse_ids(fields[4], SensorId),
                    daily_window=window,
                    valid_from=int(valid_from),
                    valid_to=int(valid_to),
                    created_at=int(fields[7]),
                ))
            else:
                raise RuleError(f"unrecognized record {fields[0]!r}")
        except (ValueError, IndexError) as e:
            raise RuleError(f"line {lineno}: {e}") from e
    return RuleSet.of(rules, default)
