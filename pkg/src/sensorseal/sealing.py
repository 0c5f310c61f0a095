"""The trusted sealer: hash-chained chunks and XOR-linked end-of-chunk proofs.

This is the simulated secure-hardware side of the system. It holds the
sealer's private keys, decrypts incoming readings, assigns retention
states from the installed capture rules, folds readings into per-chunk
hash chains, and at each chunk close emits two signed proofs:

  integrity proof:  (own string, sign(chain digest XOR eoc mask))
  user proof:       (own string, sign(user fold   XOR eoc mask))

where the end-of-chunk mask is the XOR of the previous, own, and next
chunks' random strings, tying each chunk to both neighbors, so deleting
or reordering chunks breaks the neighbors' proofs. Each next string is
pre-drawn at chunk close so a chunk's proof
can be emitted immediately; the stream's first chunk substitutes a
published seed string for its missing predecessor, and an explicit
finalize publishes the terminal string the last chunk's proof needs.

Passive readings are never written in cleartext: they enter the chain
as redacted records and their plaintext is dropped at append time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .crypto import (
    CryptoError,
    KeyPair,
    PublicKeys,
    RandomSource,
    seal_to,
    sha256,
    verify,
    xor_bytes,
)
from .events import (
    DeviceId,
    SensorId,
    SensorReading,
    SensorState,
    StatefulReading,
    decode_wire_reading,
    encode_reading,
    encode_redacted,
    presence_digest,
    state_digest,
)
from .notices import (
    Acknowledgment,
    NoticeEnvelope,
    NotificationModel,
    TransmissionReceipt,
    ack_payload,
    receipt_payload,
)
from .rules import EMPTY_RULESET_DIGEST, RuleSet, evaluate_state, format_rules

CHAIN_SEED = sha256(bytes(8))  # H(0): hash of eight zero bytes, fixed and normative

DEFAULT_MAX_BYTES = 5 * 1024 * 1024
DEFAULT_WINDOW_MS = 30 * 60 * 1000
DEFAULT_CHECKPOINT_EVERY = 256


class SealingError(Exception):
    """Raised on misuse of the sealing pipeline (not on adversarial input)."""


@dataclass(frozen=True)
class ChunkPolicy:
    """Chunk close limits: a chunk closes when either limit is hit."""

    max_bytes: int = DEFAULT_MAX_BYTES
    max_window_ms: int = DEFAULT_WINDOW_MS
    checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY

    def __post_init__(self):
        if self.max_bytes <= 0 or self.max_window_ms <= 0 or self.checkpoint_every <= 0:
            raise SealingError("chunk policy limits must be positive")


@dataclass(frozen=True)
class ChunkProof:
    """A per-chunk proof: the chunk's random string and one signature."""

    string: bytes
    sig: bytes


@dataclass(frozen=True)
class RedactedRecord:
    """What remains of a passive reading: pseudonymous tag plus context."""

    tag: bytes
    sensor: SensorId
    state: SensorState
    time: int


@dataclass(frozen=True)
class SealedChunk:
    index: int
    active: tuple[StatefulReading, ...]
    redacted: tuple[RedactedRecord, ...]
    order: tuple[int, ...]            # 1 = active, 0 = redacted, in sealing order
    checkpoints: tuple[bytes, ...]    # running chain digest every K records + final
    checkpoint_every: int
    string: bytes
    integrity_proof: ChunkProof
    user_proof: ChunkProof
    ruleset_digest: bytes

    @property
    def n_readings(self) -> int:
        return len(self.order)


class OpenChunk:
    """Accumulator for the chunk currently being sealed."""

    __slots__ = (
        "index", "string", "next_string", "deadline", "readings", "active",
        "redacted", "order", "checkpoints", "running_digest",
        "running_user_xor", "user_digests", "chain_bytes", "ruleset_digest",
        "effective_rules", "effective_acks", "closed",
    )

    def __init__(self, index: int, string: bytes, next_string: bytes):
        self.index = index
        self.string = string
        self.next_string = next_string
        self.deadline: int | None = None
        self.readings: list[StatefulReading] = []
        self.active: list[StatefulReading] = []
        self.redacted: list[RedactedRecord] = []
        self.order: list[int] = []
        self.checkpoints: list[bytes] = []
        self.running_digest = CHAIN_SEED
        self.running_user_xor = 0
        self.user_digests: list[tuple[bytes, int, SensorId, SensorState]] = []
        self.chain_bytes = 0
        self.ruleset_digest = EMPTY_RULESET_DIGEST
        self.effective_rules: RuleSet | None = None
        self.effective_acks: frozenset[DeviceId] = frozenset()
        self.closed = False

    def __len__(self) -> int:
        return len(self.order)


def seal_append(chunk: OpenChunk, sr: StatefulReading, checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY) -> OpenChunk:
    """Fold one reading into the open chunk's chains.

    Active readings enter the auditor chain under their full canonical
    encoding and are kept in cleartext; passive readings enter redacted
    and their device id is dropped on the spot. Both feed the user-side
    tag/state chain.
    """
    if chunk.closed:
        raise SealingError("chunk already closed")
    r = sr.reading
    tag = presence_digest(r.device, r.time)
    if sr.state is SensorState.ACTIVE:
        record = encode_reading(sr)
        chunk.active.append(sr)
        chunk.order.append(1)
    else:
        record = encode_redacted(tag, r.sensor, sr.state, r.time)
        chunk.redacted.append(RedactedRecord(tag, r.sensor, sr.state, r.time))
        chunk.order.append(0)
    chunk.readings.append(sr)
    chunk.running_digest = sha256(record + chunk.running_digest)
    chunk.chain_bytes += len(record)
    chunk.user_digests.append((tag, r.time, r.sensor, sr.state))
    chunk.running_user_xor ^= int.from_bytes(state_digest(tag, sr.state), "big")
    if len(chunk.order) % checkpoint_every == 0:
        chunk.checkpoints.append(chunk.running_digest)
    return chunk


def close_chunk(
    chunk: OpenChunk,
    prev_string: bytes,
    signer: KeyPair,
    checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY,
) -> SealedChunk:
    """Seal the chunk: mask both folds with the neighbor strings and sign."""
    if chunk.closed:
        raise SealingError("chunk already closed")
    if not chunk.order:
        raise SealingError("cannot seal an empty chunk")
    chunk.closed = True
    checkpoints = list(chunk.checkpoints)
    if not checkpoints or checkpoints[-1] != chunk.running_digest:
        checkpoints.append(chunk.running_digest)
    eoc_mask = xor_bytes(xor_bytes(prev_string, chunk.string), chunk.next_string)
    user_fold = chunk.running_user_xor.to_bytes(32, "big")
    return SealedChunk(
        index=chunk.index,
        active=tuple(chunk.active),
        redacted=tuple(chunk.redacted),
        order=tuple(chunk.order),
        checkpoints=tuple(checkpoints),
        checkpoint_every=checkpoint_every,
        string=chunk.string,
        integrity_proof=ChunkProof(
            chunk.string, signer.sign(xor_bytes(chunk.running_digest, eoc_mask))),
        user_proof=ChunkProof(
            chunk.string, signer.sign(xor_bytes(user_fold, eoc_mask))),
        ruleset_digest=chunk.ruleset_digest,
    )


@dataclass
class SealerAlert:
    """A discarded input or rejected control message, kept for operators."""

    reason: str
    at: float = field(default_factory=time.time)


class Sealer:
    """Single-writer sealing pipeline for one sensor stream.

    Control inputs (rule installs, notice receipts, ACKs) may arrive at
    any time but only take effect at the next chunk boundary, i.e. when
    the next chunk receives its first reading. Under the notice-only
    model rules become enforceable only after the trusted notifier's
    transmission receipt; under notice-and-ACK each device's readings
    stay passive until that device's acknowledgment is effective.
    """

    def __init__(
        self,
        keys: KeyPair,
        notifier_pub: PublicKeys,
        device_registry: dict[DeviceId, PublicKeys],
        store,
        policy: ChunkPolicy = ChunkPolicy(),
        model: NotificationModel = NotificationModel.NOM,
        rand: RandomSource | None = None,
    ):
        self._keys = keys
        self._notifier_pub = notifier_pub
        self._registry = dict(device_registry)
        self._store = store
        self._policy = policy
        self._model = model
        self._rand = rand or RandomSource()
        self.seed_string = self._rand.random32()
        self._prev_string = self.seed_string
        self._open = OpenChunk(1, self._rand.random32(), self._rand.random32())
        self._installed: RuleSet | None = None
        self._confirmed: RuleSet | None = None
        self._acks: set[DeviceId] = set()
        self._acked_notices: set[tuple[str, DeviceId]] = set()
        self._last_time = 0
        self._finalized = False
        self.alerts: list[SealerAlert] = []
        self.chunk_seal_seconds: list[float] = []
        store.initialize(self.seed_string)

    @property
    def public(self) -> PublicKeys:
        return self._keys.public

    @property
    def model(self) -> NotificationModel:
        return self._model

    # --- notification-side control plane ---------------------------------

    def install_ruleset(self, rs: RuleSet) -> NoticeEnvelope:
        """Record a rule set and emit its encrypted notice envelope.

        The cleartext rules stay inside the sealer; what crosses the
        boundary is ciphertext for the notifier plus, under
        notice-and-ACK, one sealed blob per registered device.
        """
        if self._finalized:
            raise SealingError("sealer is finalized")
        live = [rs_ for rs_ in (self._installed, self._confirmed) if rs_ is not None]
        if self._open.effective_rules is not None:
            live.append(self._open.effective_rules)
        live_ids = {r.rule_id for level in live for r in level.rules}
        clash = live_ids & {r.rule_id for r in rs.rules}
        if clash:
            raise SealingError(f"rule ids already live: {sorted(clash)}")
        text = format_rules(rs).encode()
        envelope = NoticeEnvelope(
            rules_digest=rs.digest,
            model=self._model,
            ct_for_notifier=seal_to(self._notifier_pub, text),
            per_device=tuple(
                (dev, seal_to(pub, text)) for dev, pub in sorted(
                    self._registry.items(), key=lambda kv: kv[0].id
                )
            ) if self._model is NotificationModel.NAM else (),
        )
        self._installed = rs
        if self._model is NotificationModel.NAM:
            # NaM needs no notifier receipt; per-device ACKs do the gating.
            self._confirmed = rs
        return envelope

    def confirm_notice_receipt(self, receipt: TransmissionReceipt) -> None:
        """Accept the notifier's transmission receipt (notice-only model)."""
        if self._installed is None:
            self.alerts.append(SealerAlert("receipt without installed rules"))
            return
        if receipt.rules_digest != self._installed.digest or not verify(
            self._notifier_pub, receipt_payload(receipt.notice_id, receipt.rules_digest),
            receipt.notifier_sig,
        ):
            self.alerts.append(SealerAlert("invalid notifier receipt rejected"))
            return
        self._confirmed = self._installed

    def register_ack(self, ack: Acknowledgment) -> bool:
        """Admit a device acknowledgment; effective from the next chunk.

        Signature must verify under the registered device key, defeating
        impersonation. Duplicate ACKs are idempotent.
        """
        pub = self._registry.get(ack.device)
        if pub is None:
            self.alerts.append(SealerAlert(f"ack from unregistered device {ack.device}"))
            return False
        if not verify(pub, ack_payload(ack.notice_id, ack.device), ack.device_sig):
            self.alerts.append(SealerAlert(f"ack signature rejected for {ack.device}"))
            return False
        key = (ack.notice_id, ack.device)
        if key not in self._acked_notices:
            self._acked_notices.add(key)
            self._acks.add(ack.device)
        return True

    # --- data plane -------------------------------------------------------

    def ingest(self, ciphertext: bytes) -> StatefulReading | None:
        """Decrypt, state-assign, and seal one transported reading.

        Returns None (with an alert) when the envelope fails
        authentication: a corrupted or rogue controller stream must not
        reach the chains.
        """
        try:
            plaintext = self._keys.open_sealed(ciphertext)
            reading = decode_wire_reading(plaintext)
        except (CryptoError, ValueError) as e:
            self.alerts.append(SealerAlert(f"discarded undecryptable reading: {e}"))
            return None
        return self.submit_reading(reading)

    def submit_reading(self, reading: SensorReading) -> StatefulReading:
        """Seal one already-decrypted reading (the post-transport path)."""
        if self._finalized:
            raise SealingError("sealer is finalized")
        if reading.time < self._last_time:
            raise SealingError("stream timestamps must be non-decreasing")
        self._last_time = reading.time
        chunk = self._open
        if chunk.deadline is not None and reading.time >= chunk.deadline:
            self._close_open()
            chunk = self._open
        if chunk.deadline is None:
            self._start_chunk(chunk, reading.time)
        sr = StatefulReading(reading, self._state_for(reading, chunk))
        record_len = self._record_len(sr)
        if chunk.order and chunk.chain_bytes + record_len > self._policy.max_bytes:
            self._close_open()
            chunk = self._open
            self._start_chunk(chunk, reading.time)
            sr = StatefulReading(reading, self._state_for(reading, chunk))
        seal_append(chunk, sr, self._policy.checkpoint_every)
        return sr

    def finalize(self) -> bytes:
        """Close the stream: seal any open readings, publish the terminal string."""
        if self._finalized:
            raise SealingError("sealer already finalized")
        if self._open.order:
            self._close_open()
        terminal = self._open.string
        self._store.set_terminal(terminal)
        self._finalized = True
        return terminal

    # --- internals ---------------------------------------------------------

    def _start_chunk(self, chunk: OpenChunk, first_time: int) -> None:
        window = self._policy.max_window_ms
        chunk.deadline = (first_time // window + 1) * window
        chunk.effective_rules = self._confirmed
        chunk.effective_acks = frozenset(self._acks)
        chunk.ruleset_digest = (
            self._confirmed.digest if self._confirmed is not None else EMPTY_RULESET_DIGEST
        )

    def _state_for(self, reading: SensorReading, chunk: OpenChunk) -> SensorState:
        rs = chunk.effective_rules
        if rs is None:
            return SensorState.PASSIVE
        if self._model is NotificationModel.NAM and reading.device not in chunk.effective_acks:
            return SensorState.PASSIVE
        return evaluate_state(rs, reading)

    @staticmethod
    def _record_len(sr: StatefulReading) -> int:
        r = sr.reading
        if sr.state is SensorState.ACTIVE:
            return 2 + len(r.device.id) + 2 + len(r.sensor.id) + 9
        return 32 + 2 + len(r.sensor.id) + 9

    def _close_open(self) -> None:
        started = time.perf_counter()
        chunk = self._open
        sealed = close_chunk(chunk, self._prev_string, self._keys, self._policy.checkpoint_every)
        self._store.put_sealed_chunk(sealed)
        self._prev_string = chunk.string
        self._open = OpenChunk(chunk.index + 1, chunk.next_string, self._rand.random32())
        self.chunk_seal_seconds.append(time.perf_counter() - started)
