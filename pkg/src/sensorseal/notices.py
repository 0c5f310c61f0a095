"""Notification phase: signed notices, delivery fan-out, and device ACKs.

Two models. Notice-only (NoM): a trusted notifier decrypts the sealer's
rule envelope, signs a notice, fans it out to every registered user, and
returns a transmission receipt; rules are enforceable only after the
sealer sees that receipt. Notice-and-ACK (NaM): delivery needs no
trusted notifier (the envelope carries one sealed blob per registered
device), and each device's readings stay passive until the device's
signed acknowledgment reaches the sealer.

The notifier is an in-process trusted role; transport is out of scope,
the trust relationship is what matters here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .crypto import KeyPair, PublicKeys, sha256, verify
from .events import DeviceId, lp, encode_time
from .rules import RuleSet, parse_rules


class NotificationModel(Enum):
    NOM = "nom"
    NAM = "nam"


class NoticeError(Exception):
    """Raised when a notice envelope or record cannot be accepted."""


@dataclass(frozen=True)
class NoticeEnvelope:
    """What the sealer writes across the boundary for a new rule set."""

    rules_digest: bytes
    model: NotificationModel
    ct_for_notifier: bytes
    per_device: tuple[tuple[DeviceId, bytes], ...] = ()


@dataclass(frozen=True)
class UserRegistration:
    device: DeviceId
    contact: str
    public: PublicKeys


@dataclass(frozen=True)
class NoticeMessage:
    """A published notice binding a rule-set digest to its delivery."""

    notice_id: str
    model: NotificationModel
    rules_digest: bytes
    encrypted_rules: bytes
    per_device: tuple[tuple[DeviceId, bytes], ...]
    notifier_sig: bytes
    issued_at: int


@dataclass(frozen=True)
class DeliveryReceipt:
    device: DeviceId
    delivered: bool
    at: int


@dataclass(frozen=True)
class TransmissionReceipt:
    """The notifier's signed acknowledgment of transmission back to the sealer."""

    notice_id: str
    rules_digest: bytes
    notifier_sig: bytes
    at: int


@dataclass(frozen=True)
class Acknowledgment:
    notice_id: str
    device: DeviceId
    device_sig: bytes
    received_at: int


def notice_payload(notice_id: str, issued_at: int, rules_digest: bytes, ciphertext: bytes) -> bytes:
    return b"notice" + lp(notice_id.encode()) + encode_time(issued_at) + rules_digest + sha256(ciphertext)


def receipt_payload(notice_id: str, rules_digest: bytes) -> bytes:
    return b"receipt" + lp(notice_id.encode()) + rules_digest


def ack_payload(notice_id: str, device: DeviceId) -> bytes:
    return b"ack" + lp(notice_id.encode()) + lp(device.id)


class Notifier:
    """The trusted notifier role (holds PR_N)."""

    def __init__(self, keys: KeyPair):
        self._keys = keys

    @property
    def public(self) -> PublicKeys:
        return self._keys.public

    def open_rules(self, envelope: NoticeEnvelope) -> RuleSet:
        """Decrypt and validate the sealer's rule envelope.

        Rejects the envelope unless the ciphertext authenticates and the
        decrypted rules reproduce the envelope's digest exactly.
        """
        from .crypto import CryptoError

        try:
            text = self._keys.open_sealed(envelope.ct_for_notifier)
        except CryptoError as e:
            raise NoticeError(f"rule envelope rejected: {e}") from e
        rs = parse_rules(text.decode())
        if rs.digest != envelope.rules_digest:
            raise NoticeError("decrypted rules do not match the envelope digest")
        return rs

    def publish(
        self,
        envelope: NoticeEnvelope,
        registrations: list[UserRegistration],
        notice_id: str,
        issued_at: int,
        unreachable: frozenset[DeviceId] = frozenset(),
    ) -> tuple[NoticeMessage, list[DeliveryReceipt], TransmissionReceipt]:
        """Sign and fan out a notice; return the transmission receipt.

        Delivery is best-effort per user (undeliverable users are
        recorded, not fatal); enforcement gates on the transmission
        receipt, which asserts the notifier accepted and sent the notice.
        """
        self.open_rules(envelope)
        notice = NoticeMessage(
            notice_id=notice_id,
            model=envelope.model,
            rules_digest=envelope.rules_digest,
            encrypted_rules=envelope.ct_for_notifier,
            per_device=envelope.per_device,
            notifier_sig=self._keys.sign(
                notice_payload(notice_id, issued_at, envelope.rules_digest, envelope.ct_for_notifier)
            ),
            issued_at=issued_at,
        )
        receipts = [DeliveryReceipt(reg.device, reg.device not in unreachable, issued_at)
                    for reg in registrations]
        transmission = TransmissionReceipt(
            notice_id=notice_id,
            rules_digest=envelope.rules_digest,
            notifier_sig=self._keys.sign(receipt_payload(notice_id, envelope.rules_digest)),
            at=issued_at,
        )
        return notice, receipts, transmission


def verify_notice(notice: NoticeMessage, notifier_pub: PublicKeys) -> bool:
    return verify(
        notifier_pub,
        notice_payload(notice.notice_id, notice.issued_at, notice.rules_digest, notice.encrypted_rules),
        notice.notifier_sig,
    )


def make_ack(device_keys: KeyPair, device: DeviceId, notice_id: str, at: int) -> Acknowledgment:
    """A device's signed consent to a published notice."""
    return Acknowledgment(
        notice_id=notice_id,
        device=device,
        device_sig=device_keys.sign(ack_payload(notice_id, device)),
        received_at=at,
    )


def verify_ack(ack: Acknowledgment, device_pub: PublicKeys) -> bool:
    return verify(device_pub, ack_payload(ack.notice_id, ack.device), ack.device_sig)


# --- length-prefixed binary records for untrusted persistence -------------
#
# Persisted records never include the per-device delivery blobs: an
# addressed fan-out would write every registered device id into the
# untrusted store, leaking the registry (including non-consenting
# users). Delivery is transport; the store keeps only what verification
# needs (digest, ciphertext for the notifier, signature).

def encode_notice(n: NoticeMessage) -> bytes:
    return b"".join([
        lp(n.notice_id.encode()),
        b"\x01" if n.model is NotificationModel.NAM else b"\x00",
        encode_time(n.issued_at),
        n.rules_digest,
        len(n.encrypted_rules).to_bytes(4, "big"), n.encrypted_rules,
        lp(n.notifier_sig),
    ])


def decode_notice(buf: bytes) -> NoticeMessage:
    try:
        nlen = int.from_bytes(buf[0:2], "big")
        notice_id = buf[2:2 + nlen].decode()
        pos = 2 + nlen
        model = NotificationModel.NAM if buf[pos] == 1 else NotificationModel.NOM
        issued_at = int.from_bytes(buf[pos + 1:pos + 9], "big")
        digest = buf[pos + 9:pos + 41]
        pos += 41
        ctlen = int.from_bytes(buf[pos:pos + 4], "big")
        ct = buf[pos + 4:pos + 4 + ctlen]
        pos += 4 + ctlen
        slen = int.from_bytes(buf[pos:pos + 2], "big")
        sig = buf[pos + 2:pos + 2 + slen]
        if pos + 2 + slen != len(buf) or len(sig) != slen or len(digest) != 32:
            raise NoticeError("length mismatch")
        return NoticeMessage(notice_id, model, digest, ct, (), sig, issued_at)
    except (IndexError, UnicodeDecodeError, NoticeError) as e:
        raise NoticeError(f"malformed notice record: {e}") from e


def encode_receipt(r: TransmissionReceipt) -> bytes:
    return lp(r.notice_id.encode()) + r.rules_digest + encode_time(r.at) + lp(r.notifier_sig)


def decode_receipt(buf: bytes) -> TransmissionReceipt:
    try:
        nlen = int.from_bytes(buf[0:2], "big")
        notice_id = buf[2:2 + nlen].decode()
        pos = 2 + nlen
        digest = buf[pos:pos + 32]
        at = int.from_bytes(buf[pos + 32:pos + 40], "big")
        pos += 40
        slen = int.from_bytes(buf[pos:pos + 2], "big")
        sig = buf[pos + 2:pos + 2 + slen]
        if pos + 2 + slen != len(buf) or len(digest) != 32 or len(sig) != slen:
            raise NoticeError("length mismatch")
        return TransmissionReceipt(notice_id, digest, sig, at)
    except (IndexError, UnicodeDecodeError, NoticeError) as e:
        raise NoticeError(f"malformed receipt record: {e}") from e


def encode_envelope(e: NoticeEnvelope) -> bytes:
    return b"".join([
        e.rules_digest,
        b"\x01" if e.model is NotificationModel.NAM else b"\x00",
        len(e.ct_for_notifier).to_bytes(4, "big"), e.ct_for_notifier,
    ])


def decode_envelope(buf: bytes) -> NoticeEnvelope:
    try:
        digest = buf[0:32]
        model = NotificationModel.NAM if buf[32] == 1 else NotificationModel.NOM
        ctlen = int.from_bytes(buf[33:37], "big")
        ct = buf[37:37 + ctlen]
        if 37 + ctlen != len(buf) or len(digest) != 32 or len(ct) != ctlen:
            raise NoticeError("length mismatch")
        return NoticeEnvelope(digest, model, ct, ())
    except (IndexError, NoticeError) as e:
        raise NoticeError(f"malformed envelope record: {e}") from e


def encode_ack(a: Acknowledgment) -> bytes:
    return lp(a.notice_id.encode()) + lp(a.device.id) + encode_time(a.received_at) + lp(a.device_sig)


def decode_ack(buf: bytes) -> Acknowledgment:
    try:
        nlen = int.from_bytes(buf[0:2], "big")
        notice_id = buf[2:2 + nlen].decode()
        pos = 2 + nlen
        dlen = int.from_bytes(buf[pos:pos + 2], "big")
        device = DeviceId(buf[pos + 2:pos + 2 + dlen])
        pos += 2 + dlen
        at = int.from_bytes(buf[pos:pos + 8], "big")
        pos += 8
        slen = int.from_bytes(buf[pos:pos + 2], "big")
        sig = buf[pos + 2:pos + 2 + slen]
        if pos + 2 + slen != len(buf) or len(sig) != slen:
            raise NoticeError("length mismatch")
        return Acknowledgment(notice_id, device, sig, at)
    except (IndexError, UnicodeDecodeError, NoticeError) as e:
        raise NoticeError(f"malformed ack record: {e}") from e
