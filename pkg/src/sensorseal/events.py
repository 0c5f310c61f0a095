"""Sensor-event value types and their canonical byte encodings.

Every digest in the system is computed over the byte layouts defined
here, so they are normative and bit-exact: a field is either a 2-byte
big-endian length prefix followed by raw bytes (device and sensor ids),
a single state byte (0x00 passive / 0x01 active), or an 8-byte
big-endian millisecond timestamp. Length prefixes make the full reading
encoding injective; `params` is carried for fidelity but never hashed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

from .crypto import sha256

MAX_ID_LEN = 64
MAX_TIMESTAMP = 2**64 - 1


class EncodingError(ValueError):
    """Raised when a value cannot be canonically encoded or decoded."""


def lp(data: bytes) -> bytes:
    """2-byte big-endian length prefix followed by the raw bytes."""
    if len(data) > 0xFFFF:
        raise EncodingError("field too long for length prefix")
    return len(data).to_bytes(2, "big") + data


def encode_time(t: int) -> bytes:
    return t.to_bytes(8, "big")


class SensorState(IntEnum):
    PASSIVE = 0
    ACTIVE = 1

    @property
    def byte(self) -> bytes:
        return bytes([self.value])


@dataclass(frozen=True)
class DeviceId:
    id: bytes

    def __post_init__(self):
        if not 1 <= len(self.id) <= MAX_ID_LEN:
            raise EncodingError(f"device id must be 1..{MAX_ID_LEN} bytes")

    def __str__(self) -> str:
        return self.id.hex()


@dataclass(frozen=True)
class SensorId:
    id: bytes

    def __post_init__(self):
        if not 1 <= len(self.id) <= MAX_ID_LEN:
            raise EncodingError(f"sensor id must be 1..{MAX_ID_LEN} bytes")

    def __str__(self) -> str:
        return self.id.decode("ascii", errors="backslashreplace")


@dataclass(frozen=True)
class SensorReading:
    """One association event: device seen at a sensor at a time (ms epoch)."""

    device: DeviceId
    sensor: SensorId
    time: int
    params: bytes = field(default=b"", compare=False)

    def __post_init__(self):
        if not 0 < self.time <= MAX_TIMESTAMP:
            raise EncodingError("timestamp must be a positive 64-bit integer")


@dataclass(frozen=True)
class StatefulReading:
    """A reading after policy evaluation assigned its retention state."""

    reading: SensorReading
    state: SensorState


def encode_reading(sr: StatefulReading) -> bytes:
    """Canonical encoding: LP(device) || LP(sensor) || state || t8."""
    r = sr.reading
    return lp(r.device.id) + lp(r.sensor.id) + sr.state.byte + encode_time(r.time)


def decode_reading(buf: bytes, offset: int = 0) -> tuple[StatefulReading, int]:
    """Inverse of `encode_reading`; returns the reading and the next offset."""
    try:
        dlen = int.from_bytes(buf[offset:offset + 2], "big")
        if dlen == 0 or offset + 2 + dlen > len(buf):
            raise EncodingError("bad device length")
        device = buf[offset + 2:offset + 2 + dlen]
        pos = offset + 2 + dlen
        slen = int.from_bytes(buf[pos:pos + 2], "big")
        if slen == 0 or pos + 2 + slen + 9 > len(buf):
            raise EncodingError("bad sensor length")
        sensor = buf[pos + 2:pos + 2 + slen]
        pos += 2 + slen
        state_byte = buf[pos]
        if state_byte not in (0, 1):
            raise EncodingError(f"bad state byte {state_byte:#x}")
        t = int.from_bytes(buf[pos + 1:pos + 9], "big")
        reading = SensorReading(DeviceId(device), SensorId(sensor), t)
        return StatefulReading(reading, SensorState(state_byte)), pos + 9
    except (IndexError, EncodingError) as e:
        raise EncodingError(f"malformed reading at offset {offset}: {e}") from e


def encode_wire_reading(r: SensorReading) -> bytes:
    """Transport encoding used inside the controller-to-sealer envelope."""
    return lp(r.device.id) + lp(r.sensor.id) + encode_time(r.time) + lp(r.params)


def decode_wire_reading(buf: bytes) -> SensorReading:
    try:
        dlen = int.from_bytes(buf[0:2], "big")
        device = buf[2:2 + dlen]
        pos = 2 + dlen
        slen = int.from_bytes(buf[pos:pos + 2], "big")
        sensor = buf[pos + 2:pos + 2 + slen]
        pos += 2 + slen
        t = int.from_bytes(buf[pos:pos + 8], "big")
        pos += 8
        plen = int.from_bytes(buf[pos:pos + 2], "big")
        params = buf[pos + 2:pos + 2 + plen]
        if pos + 2 + plen != len(buf) or len(device) != dlen or len(sensor) != slen:
            raise EncodingError("length mismatch")
        return SensorReading(DeviceId(device), SensorId(sensor), t, params)
    except (IndexError, EncodingError) as e:
        raise EncodingError(f"malformed wire reading: {e}") from e


def presence_digest(device: DeviceId, t: int) -> bytes:
    """Pseudonymous tag for (device, time): SHA-256(LP(device) || t8).

    Distinct times give distinct tags for the same device, so tag lists
    reveal neither identities nor per-device frequencies; the device's
    owner can still recognize their own entries.
    """
    return sha256(lp(device.id) + encode_time(t))


def state_digest(presence_tag: bytes, state: SensorState) -> bytes:
    """Binds a presence tag to the retention state: SHA-256(tag || state)."""
    return sha256(presence_tag + state.byte)


def encode_redacted(presence_tag: bytes, sensor: SensorId, state: SensorState, t: int) -> bytes:
    """Redacted record encoding: tag(32) || LP(sensor) || state || t8.

    Passive readings enter the auditor hash chain in this form, so
    non-retention stays verifiable without exposing the device id. The
    trailing state byte keeps redacted and full encodings disjoint
    (full encodings end 0x01 || t8, redacted end 0x00 || t8).
    """
    if len(presence_tag) != 32:
        raise EncodingError("presence tag must be 32 bytes")
    return presence_tag + lp(sensor.id) + state.byte + encode_time(t)


def decode_redacted(buf: bytes, offset: int = 0) -> tuple[tuple[bytes, SensorId, SensorState, int], int]:
    """Inverse of `encode_redacted`; returns (tag, sensor, state, t) and next offset."""
    try:
        if offset + 32 + 2 > len(buf):
            raise EncodingError("short redacted record")
        tag = buf[offset:offset + 32]
        pos = offset + 32
        slen = int.from_bytes(buf[pos:pos + 2], "big")
        if slen == 0 or pos + 2 + slen + 9 > len(buf):
            raise EncodingError("bad sensor length")
        sensor = buf[pos + 2:pos + 2 + slen]
        pos += 2 + slen
        state_byte = buf[pos]
        if state_byte not in (0, 1):
            raise EncodingError(f"bad state byte {state_byte:#x}")
        t = int.from_bytes(buf[pos + 1:pos + 9], "big")
        return (tag, SensorId(sensor), SensorState(state_byte), t), pos + 9
    except (IndexError, EncodingError) as e:
        raise EncodingError(f"malformed redacted record at offset {offset}: {e}") from e
