"""Untrusted persistence: chunk files, manifest, notices, and verifier bundles.

Nothing here is trusted; the whole point is that this layer can be
corrupted and the verifiers must notice. The chunk file format is
normative (see docs/FORMATS.md): one file per sealed chunk, sectioned
and length-prefixed with little-endian section headers, magic bytes and
a format version, so the tamper harness can corrupt it surgically and
parsers can reject anything non-canonical.

Bundles implement log minimality: a verifier receives exactly the
requested chunks plus the neighbor random strings its proofs need
(the published seed and terminal strings at the stream boundaries),
never the rest of the log. Deleted chunks appear as explicit gap
markers so verifiers flag them instead of silently skipping.
"""

from __future__ import annotations

import hmac
import json
import os
import struct
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .events import (
    SensorId,
    SensorState,
    StatefulReading,
    decode_reading,
    decode_redacted,
    encode_reading,
    encode_redacted,
)
from .notices import (
    Acknowledgment,
    NoticeEnvelope,
    NoticeMessage,
    decode_ack,
    decode_notice,
    encode_ack,
    encode_notice,
)
from .sealing import ChunkProof, RedactedRecord, SealedChunk

CHUNK_MAGIC = b"SSC1"
BUNDLE_MAGIC = b"SSB1"
FORMAT_VERSION = 1

SEC_ACTIVE = 1
SEC_REDACTED = 2
SEC_ORDER = 3
SEC_CHECKPOINTS = 4
SEC_INTEGRITY_PROOF = 5
SEC_USER_PROOF = 6
SEC_RULESET = 7
_SECTION_IDS = (SEC_ACTIVE, SEC_REDACTED, SEC_ORDER, SEC_CHECKPOINTS,
                SEC_INTEGRITY_PROOF, SEC_USER_PROOF, SEC_RULESET)

_HEADER = struct.Struct("<4sHQH")          # magic, version, chunk index, n_sections
_TABLE_ENTRY = struct.Struct("<HQQQ")      # section id, offset, length, count


class StoreError(Exception):
    pass


class AuthError(StoreError):
    """Verifier authentication refused."""


class ChunkFormatError(StoreError):
    """A chunk file failed strict parsing.

    `record` is the 1-based ordinal of the first record known to be
    involved, when the failure is attributable to one.
    """

    def __init__(self, message: str, record: int | None = None):
        super().__init__(message)
        self.record = record


# --- chunk file serialization ----------------------------------------------

def checkpoint_positions(n: int, every: int) -> list[int]:
    """Record ordinals at which running chain digests are stored."""
    positions = list(range(every, n + 1, every))
    if not positions or positions[-1] != n:
        positions.append(n)
    return positions


def _pack_order(order: Iterable[int]) -> bytes:
    bits = list(order)
    out = bytearray((len(bits) + 7) // 8)
    for i, bit in enumerate(bits):
        if bit:
            out[i // 8] |= 0x80 >> (i % 8)
    return bytes(out)


def _unpack_order(data: bytes, n: int) -> list[int]:
    if len(data) != (n + 7) // 8:
        raise ChunkFormatError("order section length mismatch")
    bits = [(data[i // 8] >> (7 - i % 8)) & 1 for i in range(n)]
    tail = n % 8
    if tail and data[-1] & ((1 << (8 - tail)) - 1):
        raise ChunkFormatError("order section has nonzero padding bits")
    return bits


def _proof_bytes(proof: ChunkProof) -> bytes:
    return proof.string + len(proof.sig).to_bytes(2, "little") + proof.sig


def _parse_proof(data: bytes) -> ChunkProof:
    if len(data) < 34:
        raise ChunkFormatError("proof section too short")
    sig_len = int.from_bytes(data[32:34], "little")
    if sig_len != 64 or len(data) != 34 + sig_len:
        raise ChunkFormatError("proof section length mismatch")
    return ChunkProof(data[:32], data[34:])


def serialize_sections(index: int, sections: dict[int, tuple[bytes, int]]) -> bytes:
    """Assemble a chunk file from raw section payloads (id -> (bytes, count))."""
    header = _HEADER.pack(CHUNK_MAGIC, FORMAT_VERSION, index, len(_SECTION_IDS))
    offset = _HEADER.size + _TABLE_ENTRY.size * len(_SECTION_IDS)
    table = bytearray()
    body = bytearray()
    for sec_id in _SECTION_IDS:
        data, count = sections[sec_id]
        table += _TABLE_ENTRY.pack(sec_id, offset, len(data), count)
        body += data
        offset += len(data)
    return header + bytes(table) + bytes(body)


def serialize_chunk(sc: SealedChunk) -> bytes:
    active = b"".join(encode_reading(sr) for sr in sc.active)
    redacted = b"".join(
        encode_redacted(r.tag, r.sensor, r.state, r.time) for r in sc.redacted
    )
    checkpoints = sc.checkpoint_every.to_bytes(4, "little") + b"".join(sc.checkpoints)
    sections = {
        SEC_ACTIVE: (active, len(sc.active)),
        SEC_REDACTED: (redacted, len(sc.redacted)),
        SEC_ORDER: (_pack_order(sc.order), len(sc.order)),
        SEC_CHECKPOINTS: (checkpoints, len(sc.checkpoints)),
        SEC_INTEGRITY_PROOF: (_proof_bytes(sc.integrity_proof), 1),
        SEC_USER_PROOF: (_proof_bytes(sc.user_proof), 1),
        SEC_RULESET: (sc.ruleset_digest, 1),
    }
    return serialize_sections(sc.index, sections)


def read_sections(blob: bytes) -> tuple[int, dict[int, tuple[bytes, int]]]:
    """Structural read of a chunk file: header checks plus exact section slicing."""
    if len(blob) < _HEADER.size:
        raise ChunkFormatError("file shorter than header")
    magic, version, index, n_sections = _HEADER.unpack_from(blob, 0)
    if magic != CHUNK_MAGIC:
        raise ChunkFormatError("bad magic")
    if version != FORMAT_VERSION:
        raise ChunkFormatError(f"unsupported format version {version}")
    if n_sections != len(_SECTION_IDS):
        raise ChunkFormatError("unexpected section count")
    table_end = _HEADER.size + _TABLE_ENTRY.size * n_sections
    if len(blob) < table_end:
        raise ChunkFormatError("file shorter than section table")
    sections: dict[int, tuple[bytes, int]] = {}
    expected_offset = table_end
    for i, sec_id in enumerate(_SECTION_IDS):
        sid, offset, length, count = _TABLE_ENTRY.unpack_from(blob, _HEADER.size + i * _TABLE_ENTRY.size)
        if sid != sec_id:
            raise ChunkFormatError(f"section id {sid} out of order")
        if offset != expected_offset or offset + length > len(blob):
            raise ChunkFormatError("section offsets not contiguous")
        sections[sec_id] = (blob[offset:offset + length], count)
        expected_offset = offset + length
    if expected_offset != len(blob):
        raise ChunkFormatError("trailing bytes after last section")
    return index, sections


@dataclass
class ParsedChunk:
    """A strictly parsed chunk file, ready for re-folding."""

    index: int
    active: list[StatefulReading]
    active_encs: list[bytes]
    redacted: list[RedactedRecord]
    redacted_encs: list[bytes]
    order: list[int]
    checkpoints: list[bytes]
    checkpoint_every: int
    integrity_proof: ChunkProof
    user_proof: ChunkProof
    ruleset_digest: bytes

    @property
    def n_readings(self) -> int:
        return len(self.order)

    def merged(self) -> Iterator[tuple[int, bytes, int]]:
        """Records in sealing order as (is_active, chain encoding, time)."""
        ai = ri = 0
        for bit in self.order:
            if bit:
                yield 1, self.active_encs[ai], self.active[ai].reading.time
                ai += 1
            else:
                yield 0, self.redacted_encs[ri], self.redacted[ri].time
                ri += 1


def parse_chunk(blob: bytes) -> ParsedChunk:
    """Strict parse: any non-canonical byte is a format error.

    Strictness is load-bearing: semantically dead bytes (padding,
    section slack) would otherwise be mutable without flipping any
    verifier's verdict.
    """
    index, sections = read_sections(blob)

    active_data, n_active = sections[SEC_ACTIVE]
    active: list[StatefulReading] = []
    active_encs: list[bytes] = []
    pos = 0
    for i in range(n_active):
        try:
            sr, end = decode_reading(active_data, pos)
        except ValueError as e:
            raise ChunkFormatError(f"active record {i + 1}: {e}", record=i + 1) from e
        if sr.state is not SensorState.ACTIVE:
            raise ChunkFormatError(f"passive state in cleartext section at record {i + 1}", record=i + 1)
        active.append(sr)
        active_encs.append(active_data[pos:end])
        pos = end
    if pos != len(active_data):
        raise ChunkFormatError("active section has trailing bytes")

    red_data, n_passive = sections[SEC_REDACTED]
    redacted: list[RedactedRecord] = []
    redacted_encs: list[bytes] = []
    pos = 0
    for i in range(n_passive):
        try:
            (tag, sensor, state, t), end = decode_redacted(red_data, pos)
        except ValueError as e:
            raise ChunkFormatError(f"redacted record {i + 1}: {e}", record=i + 1) from e
        if state is not SensorState.PASSIVE:
            raise ChunkFormatError(f"active state in redacted section at record {i + 1}", record=i + 1)
        redacted.append(RedactedRecord(tag, sensor, state, t))
        redacted_encs.append(red_data[pos:end])
        pos = end
    if pos != len(red_data):
        raise ChunkFormatError("redacted section has trailing bytes")

    order_data, n = sections[SEC_ORDER]
    if n != n_active + n_passive or n == 0:
        raise ChunkFormatError("order count disagrees with record counts")
    order = _unpack_order(order_data, n)
    if sum(order) != n_active:
        raise ChunkFormatError("order bits disagree with record counts")

    cp_data, n_cp = sections[SEC_CHECKPOINTS]
    if len(cp_data) < 4:
        raise ChunkFormatError("checkpoint section too short")
    every = int.from_bytes(cp_data[:4], "little")
    if every == 0:
        raise ChunkFormatError("checkpoint interval must be positive")
    if len(cp_data) != 4 + 32 * n_cp:
        raise ChunkFormatError("checkpoint section length mismatch")
    if n_cp != len(checkpoint_positions(n, every)):
        raise ChunkFormatError("checkpoint count disagrees with record count")
    checkpoints = [cp_data[4 + 32 * i:36 + 32 * i] for i in range(n_cp)]

    integrity_proof = _parse_proof(sections[SEC_INTEGRITY_PROOF][0])
    user_proof = _parse_proof(sections[SEC_USER_PROOF][0])
    if (sections[SEC_INTEGRITY_PROOF][1] != 1 or sections[SEC_USER_PROOF][1] != 1
            or sections[SEC_RULESET][1] != 1):
        raise ChunkFormatError("proof/digest sections must have count 1")
    if integrity_proof.string != user_proof.string:
        raise ChunkFormatError("integrity and user proofs carry different strings")

    digest_data = sections[SEC_RULESET][0]
    if len(digest_data) != 32:
        raise ChunkFormatError("ruleset digest must be 32 bytes")

    return ParsedChunk(
        index=index,
        active=active,
        active_encs=active_encs,
        redacted=redacted,
        redacted_encs=redacted_encs,
        order=order,
        checkpoints=checkpoints,
        checkpoint_every=every,
        integrity_proof=integrity_proof,
        user_proof=user_proof,
        ruleset_digest=digest_data,
    )


# --- verifier bundles -------------------------------------------------------

@dataclass(frozen=True)
class BundleStrings:
    """Neighbor random strings a bundle ships alongside its chunks."""

    seed: bytes | None
    terminal: bytes | None
    by_index: dict[int, bytes]
    log_first: int | None
    log_last: int | None

    def resolve(self, index: int) -> tuple[bytes | None, bytes | None, bytes | None]:
        """(previous, own, next) strings for a chunk, None where unavailable."""
        own = self.by_index.get(index)
        prev = self.by_index.get(index - 1)
        if prev is None and index == self.log_first:
            prev = self.seed
        nxt = self.by_index.get(index + 1)
        if nxt is None and index == self.log_last:
            nxt = self.terminal
        return prev, own, nxt


@dataclass(frozen=True)
class AuditorEntry:
    index: int
    raw: bytes | None  # None marks a gap: the store could not produce the chunk


@dataclass(frozen=True)
class UserRecord:
    tag: bytes
    sensor: SensorId
    state: SensorState
    time: int


@dataclass(frozen=True)
class UserEntry:
    index: int
    records: tuple[UserRecord, ...] | None
    proof: ChunkProof | None


@dataclass
class Bundle:
    kind: str  # "auditor" | "user"
    first: int
    last: int
    strings: BundleStrings
    notices: list[NoticeMessage]
    entries: Iterable


class Authenticator:
    """Pluggable verifier authentication hook for user-bundle requests."""

    def allow(self, credential: bytes | None) -> bool:  # pragma: no cover - interface
        raise NotImplementedError


class PresharedKeyAuth(Authenticator):
    def __init__(self, key: bytes):
        self._key = bytes(key)

    def allow(self, credential: bytes | None) -> bool:
        return credential is not None and hmac.compare_digest(self._key, credential)


def derive_user_records(parsed: ParsedChunk) -> tuple[UserRecord, ...]:
    """Per-reading (tag, sensor, state, time) view, device ids stripped.

    Tags for active readings are recomputed from the stored cleartext;
    the user proof was signed over the seal-time values, so recomputing
    from tampered cleartext cannot go unnoticed.
    """
    from .events import presence_digest

    records = []
    ai = ri = 0
    for bit in parsed.order:
        if bit:
            sr = parsed.active[ai]
            records.append(UserRecord(
                presence_digest(sr.reading.device, sr.reading.time),
                sr.reading.sensor, sr.state, sr.reading.time,
            ))
            ai += 1
        else:
            r = parsed.redacted[ri]
            records.append(UserRecord(r.tag, r.sensor, r.state, r.time))
            ri += 1
    return tuple(records)


# --- the store --------------------------------------------------------------

def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _append_record(path: Path, record: bytes) -> None:
    with open(path, "ab") as f:
        f.write(len(record).to_bytes(4, "little") + record)


def _read_records(path: Path) -> Iterator[bytes]:
    if not path.exists():
        return
    blob = path.read_bytes()
    pos = 0
    while pos < len(blob):
        length = int.from_bytes(blob[pos:pos + 4], "little")
        yield blob[pos + 4:pos + 4 + length]
        pos += 4 + length


class ChunkStore:
    """Single-writer, many-reader on-disk store rooted at one directory.

    Writes are atomic (write-then-rename), so readers never observe a
    partially written chunk or manifest. Long sealing runs should wrap
    their writes in `bulk()`, which defers the manifest rewrite until
    the end; chunks stay invisible to readers until the manifest lands.
    """

    def __init__(self, root: str | Path, user_auth: Authenticator | None = None):
        self.root = Path(root)
        self.user_auth = user_auth
        self._defer_manifest = False
        self._manifest: dict | None = None
        if self.manifest_path.exists():
            self._manifest = json.loads(self.manifest_path.read_text())

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    @property
    def manifest(self) -> dict:
        if self._manifest is None:
            raise StoreError(f"store at {self.root} is not initialized")
        return self._manifest

    def initialize(self, seed_string: bytes) -> None:
        if self.manifest_path.exists():
            raise StoreError(f"store at {self.root} already initialized")
        (self.root / "chunks").mkdir(parents=True, exist_ok=True)
        self._manifest = {
            "format": FORMAT_VERSION,
            "seed_string": seed_string.hex(),
            "terminal": None,
            "chunks": {},
        }
        self._save_manifest()

    def _save_manifest(self) -> None:
        if self._defer_manifest:
            return
        _atomic_write(self.manifest_path, json.dumps(self._manifest, indent=1).encode())

    @contextmanager
    def bulk(self):
        """Defer manifest rewrites across many chunk writes."""
        self._defer_manifest = True
        try:
            yield self
        finally:
            self._defer_manifest = False
            self._save_manifest()

    # --- chunk writes ---

    def put_sealed_chunk(self, sc: SealedChunk) -> dict:
        blob = serialize_chunk(sc)
        name = f"chunks/{sc.index:08d}.ssc"
        _atomic_write(self.root / name, blob)
        times = [sr.reading.time for sr in sc.active] + [r.time for r in sc.redacted]
        _, sections = read_sections(blob)
        entry = {
            "file": name,
            "string": sc.string.hex(),
            "n": sc.n_readings,
            "n_active": len(sc.active),
            "n_passive": len(sc.redacted),
            "bytes": len(blob),
            "ruleset_digest": sc.ruleset_digest.hex(),
            "first_t": min(times),
            "last_t": max(times),
            "sections": {str(sid): [len(data), count] for sid, (data, count) in sections.items()},
        }
        self.manifest["chunks"][str(sc.index)] = entry
        self._save_manifest()
        return entry

    def set_terminal(self, g: bytes) -> None:
        self.manifest["terminal"] = g.hex()
        self._save_manifest()

    # --- chunk reads ---

    def indices(self) -> list[int]:
        return sorted(int(k) for k in self.manifest["chunks"])

    def chunk_raw(self, index: int) -> bytes | None:
        entry = self.manifest["chunks"].get(str(index))
        if entry is None:
            return None
        path = self.root / entry["file"]
        if not path.exists():
            return None
        return path.read_bytes()

    def chunk_string(self, index: int) -> bytes | None:
        entry = self.manifest["chunks"].get(str(index))
        return bytes.fromhex(entry["string"]) if entry else None

    def seed_string(self) -> bytes:
        return bytes.fromhex(self.manifest["seed_string"])

    def terminal(self) -> bytes | None:
        t = self.manifest["terminal"]
        return bytes.fromhex(t) if t else None

    # --- notices / acks / rules ---

    def append_notice(self, notice: NoticeMessage) -> None:
        _append_record(self.root / "notices.bin", encode_notice(notice))

    def notices(self) -> list[NoticeMessage]:
        return [decode_notice(rec) for rec in _read_records(self.root / "notices.bin")]

    def append_ack(self, ack: Acknowledgment) -> None:
        _append_record(self.root / "acks.bin", encode_ack(ack))

    def acks(self) -> list[Acknowledgment]:
        return [decode_ack(rec) for rec in _read_records(self.root / "acks.bin")]

    def put_rule_envelope(self, envelope: NoticeEnvelope) -> None:
        """Persist the sealer's encrypted rule batch (ciphertext only)."""
        from .notices import encode_envelope

        path = self.root / "rules"
        path.mkdir(exist_ok=True)
        _atomic_write(path / f"{envelope.rules_digest.hex()}.env", encode_envelope(envelope))

    def rule_envelopes(self) -> list[NoticeEnvelope]:
        from .notices import decode_envelope

        path = self.root / "rules"
        if not path.is_dir():
            return []
        return [decode_envelope(p.read_bytes()) for p in sorted(path.glob("*.env"))]

    # --- bundles ---

    def _strings_for(self, first: int, last: int) -> BundleStrings:
        chunks = self.manifest["chunks"]
        present = sorted(int(k) for k in chunks)
        by_index = {
            i: bytes.fromhex(chunks[str(i)]["string"])
            for i in range(first - 1, last + 2)
            if str(i) in chunks
        }
        return BundleStrings(
            seed=self.seed_string(),
            terminal=self.terminal(),
            by_index=by_index,
            log_first=present[0] if present else None,
            log_last=present[-1] if present else None,
        )

    def get_auditor_bundle(self, first: int, last: int) -> Bundle:
        """Full-payload bundle: cleartext + redacted records and both proofs."""
        if first < 1 or last < first:
            raise StoreError("bad chunk range")
        entries = [AuditorEntry(i, self.chunk_raw(i)) for i in range(first, last + 1)]
        return Bundle("auditor", first, last, self._strings_for(first, last),
                      self.notices(), entries)

    def get_user_bundle(self, first: int, last: int, credential: bytes | None = None) -> Bundle:
        """Privacy-preserving bundle: per-reading tags, never raw device ids."""
        if self.user_auth is None or not self.user_auth.allow(credential):
            raise AuthError("user bundle request refused: authentication failed")
        if first < 1 or last < first:
            raise StoreError("bad chunk range")
        entries = []
        for i in range(first, last + 1):
            raw = self.chunk_raw(i)
            if raw is None:
                entries.append(UserEntry(i, None, None))
                continue
            try:
                parsed = parse_chunk(raw)
            except ChunkFormatError:
                entries.append(UserEntry(i, None, None))
                continue
            entries.append(UserEntry(i, derive_user_records(parsed), parsed.user_proof))
        return Bundle("user", first, last, self._strings_for(first, last),
                      self.notices(), entries)


# --- bundle files (offline transport) ---------------------------------------

_BUNDLE_HEADER = struct.Struct("<4sHBQQB")


def _encode_user_entry(entry: UserEntry) -> bytes:
    out = [len(entry.records).to_bytes(4, "little")]
    for rec in entry.records:
        out.append(encode_redacted(rec.tag, rec.sensor, rec.state, rec.time))
    out.append(_proof_bytes(entry.proof))
    return b"".join(out)


def _decode_user_entry(index: int, payload: bytes) -> UserEntry:
    n = int.from_bytes(payload[:4], "little")
    pos = 4
    records = []
    for _ in range(n):
        (tag, sensor, state, t), pos = decode_redacted(payload, pos)
        records.append(UserRecord(tag, sensor, state, t))
    proof = _parse_proof(payload[pos:])
    return UserEntry(index, tuple(records), proof)


def write_bundle_file(path: str | Path, bundle: Bundle) -> None:
    """Serialize a bundle for offline verification (streaming-readable)."""
    strings = bundle.strings
    flags = (
        (1 if strings.seed is not None else 0)
        | (2 if strings.terminal is not None else 0)
        | (4 if strings.log_first is not None else 0)
        | (8 if strings.log_last is not None else 0)
    )
    kind = 1 if bundle.kind == "auditor" else 2
    entries = list(bundle.entries)
    with open(path, "wb") as f:
        f.write(_BUNDLE_HEADER.pack(BUNDLE_MAGIC, FORMAT_VERSION, kind,
                                    bundle.first, bundle.last, flags))
        if strings.seed is not None:
            f.write(strings.seed)
        if strings.terminal is not None:
            f.write(strings.terminal)
        if strings.log_first is not None:
            f.write(strings.log_first.to_bytes(8, "little"))
        if strings.log_last is not None:
            f.write(strings.log_last.to_bytes(8, "little"))
        f.write(len(bundle.notices).to_bytes(2, "little"))
        for notice in bundle.notices:
            rec = encode_notice(notice)
            f.write(len(rec).to_bytes(4, "little") + rec)
        f.write(len(strings.by_index).to_bytes(4, "little"))
        for i in sorted(strings.by_index):
            f.write(i.to_bytes(8, "little") + strings.by_index[i])
        f.write(len(entries).to_bytes(4, "little"))
        for entry in entries:
            if bundle.kind == "auditor":
                payload = entry.raw
            else:
                payload = _encode_user_entry(entry) if entry.records is not None else None
            status = 1 if payload is not None else 0
            f.write(entry.index.to_bytes(8, "little") + bytes([status]))
            if payload is not None:
                f.write(len(payload).to_bytes(4, "little") + payload)


def read_bundle_file(path: str | Path) -> Bundle:
    """Open a bundle file; entries stream lazily to keep memory flat."""
    f = open(path, "rb")
    header = f.read(_BUNDLE_HEADER.size)
    if len(header) != _BUNDLE_HEADER.size:
        raise StoreError("bundle file truncated")
    magic, version, kind, first, last, flags = _BUNDLE_HEADER.unpack(header)
    if magic != BUNDLE_MAGIC or version != FORMAT_VERSION:
        raise StoreError("not a bundle file")
    seed = f.read(32) if flags & 1 else None
    terminal = f.read(32) if flags & 2 else None
    log_first = int.from_bytes(f.read(8), "little") if flags & 4 else None
    log_last = int.from_bytes(f.read(8), "little") if flags & 8 else None
    notices = []
    (n_notices,) = struct.unpack("<H", f.read(2))
    for _ in range(n_notices):
        (length,) = struct.unpack("<I", f.read(4))
        notices.append(decode_notice(f.read(length)))
    (n_strings,) = struct.unpack("<I", f.read(4))
    by_index = {}
    for _ in range(n_strings):
        idx = int.from_bytes(f.read(8), "little")
        by_index[idx] = f.read(32)
    (n_entries,) = struct.unpack("<I", f.read(4))
    kind_name = "auditor" if kind == 1 else "user"

    def entry_stream() -> Iterator:
        with f:
            for _ in range(n_entries):
                idx = int.from_bytes(f.read(8), "little")
                status = f.read(1)[0]
                if status == 0:
                    yield AuditorEntry(idx, None) if kind == 1 else UserEntry(idx, None, None)
                    continue
                (length,) = struct.unpack("<I", f.read(4))
                payload = f.read(length)
                if kind == 1:
                    yield AuditorEntry(idx, payload)
                else:
                    yield _decode_user_entry(idx, payload)

    strings = BundleStrings(seed, terminal, by_index, log_first, log_last)
    return Bundle(kind_name, first, last, strings, notices, entry_stream())
