"""Notification phase: publication, receipts, ACKs, persisted records."""

import pytest

from conftest import ALLOW_ALL, make_actors, sealed_run
from sensorseal import ChunkStore, KeyPair, Role, Sealer, make_ack
from sensorseal.notices import (
    NoticeError,
    NotificationModel,
    decode_ack,
    decode_envelope,
    decode_notice,
    decode_receipt,
    encode_ack,
    encode_envelope,
    encode_notice,
    encode_receipt,
    verify_ack,
    verify_notice,
)
from sensorseal.rules import EMPTY_RULESET_DIGEST, parse_rules


@pytest.fixture
def envelope_setup(tmp_path):
    actors = make_actors()
    store = ChunkStore(tmp_path / "s")
    sealer = Sealer(actors.enclave, actors.notifier.public, actors.registry, store,
                    model=NotificationModel.NOM)
    return actors, sealer, sealer.install_ruleset(ALLOW_ALL)


def test_publish_fans_out_to_every_registered_user(envelope_setup):
    actors, _, envelope = envelope_setup
    notice, deliveries, receipt = actors.notifier.publish(
        envelope, actors.registrations, "n1", 777)
    assert len(deliveries) == len(actors.devices)
    assert receipt.rules_digest == ALLOW_ALL.digest
    assert verify_notice(notice, actors.notifier.public)


def test_undeliverable_users_recorded_not_fatal(envelope_setup):
    actors, _, envelope = envelope_setup
    down = frozenset({actors.devices[1]})
    notice, deliveries, receipt = actors.notifier.publish(
        envelope, actors.registrations, "n1", 777, unreachable=down)
    assert [d.delivered for d in deliveries].count(False) == 1
    assert receipt.rules_digest == envelope.rules_digest  # enforcement still gated on this


def test_notifier_decrypts_rules_that_match_digest(envelope_setup):
    actors, _, envelope = envelope_setup
    rs = actors.notifier.open_rules(envelope)
    assert rs.digest == ALLOW_ALL.digest
    assert rs.rules == ALLOW_ALL.rules


def test_tampered_envelope_rejected(envelope_setup):
    actors, _, envelope = envelope_setup
    from dataclasses import replace

    ct = bytearray(envelope.ct_for_notifier)
    ct[50] ^= 1
    broken = replace(envelope, ct_for_notifier=bytes(ct))
    with pytest.raises(NoticeError):
        actors.notifier.publish(broken, actors.registrations, "n1", 777)


def test_wrong_digest_envelope_rejected(envelope_setup):
    actors, _, envelope = envelope_setup
    from dataclasses import replace

    lying = replace(envelope, rules_digest=EMPTY_RULESET_DIGEST)
    with pytest.raises(NoticeError):
        actors.notifier.open_rules(lying)


def test_notice_signature_binds_content(envelope_setup):
    actors, _, envelope = envelope_setup
    notice, _, _ = actors.notifier.publish(envelope, actors.registrations, "n1", 777)
    from dataclasses import replace

    assert not verify_notice(replace(notice, rules_digest=EMPTY_RULESET_DIGEST),
                             actors.notifier.public)
    assert not verify_notice(replace(notice, issued_at=778), actors.notifier.public)
    rogue = KeyPair.generate(Role.NOTIFIER)
    assert not verify_notice(notice, rogue.public)


def test_nam_per_device_blobs_open_for_each_device(tmp_path):
    actors = make_actors()
    store = ChunkStore(tmp_path / "s")
    sealer = Sealer(actors.enclave, actors.notifier.public, actors.registry, store,
                    model=NotificationModel.NAM)
    envelope = sealer.install_ruleset(ALLOW_ALL)
    assert len(envelope.per_device) == len(actors.devices)
    for device, blob in envelope.per_device:
        text = actors.device_keys[device].open_sealed(blob)
        assert parse_rules(text.decode()).digest == ALLOW_ALL.digest


def test_ack_round_trip_and_idempotence(envelope_setup):
    actors, sealer, _ = envelope_setup
    device = actors.devices[0]
    ack = make_ack(actors.device_keys[device], device, "n1", 55)
    assert verify_ack(ack, actors.registry[device])
    assert sealer.register_ack(ack)
    assert sealer.register_ack(ack)  # duplicate is idempotent, still accepted


def test_ack_from_unregistered_device_rejected(envelope_setup):
    actors, sealer, _ = envelope_setup
    from sensorseal import DeviceId

    stranger = DeviceId(b"\x99" * 6)
    pair = KeyPair.generate(Role.DEVICE)
    assert not sealer.register_ack(make_ack(pair, stranger, "n1", 55))


def test_record_round_trips(envelope_setup):
    actors, _, envelope = envelope_setup
    notice, _, receipt = actors.notifier.publish(envelope, actors.registrations, "n1", 777)
    decoded = decode_notice(encode_notice(notice))
    assert (decoded.notice_id, decoded.rules_digest, decoded.issued_at) == (
        notice.notice_id, notice.rules_digest, notice.issued_at)
    assert verify_notice(decoded, actors.notifier.public)
    assert decode_receipt(encode_receipt(receipt)) == receipt
    device = actors.devices[1]
    ack = make_ack(actors.device_keys[device], device, "n1", 60)
    assert decode_ack(encode_ack(ack)) == ack
    env2 = decode_envelope(encode_envelope(envelope))
    assert env2.rules_digest == envelope.rules_digest
    assert env2.per_device == ()  # delivery blobs are never persisted


def test_persisted_records_strip_device_ids(tmp_path):
    actors = make_actors()
    store = ChunkStore(tmp_path / "s")
    sealer = Sealer(actors.enclave, actors.notifier.public, actors.registry, store,
                    model=NotificationModel.NAM)
    envelope = sealer.install_ruleset(ALLOW_ALL)
    notice, _, _ = actors.notifier.publish(envelope, actors.registrations, "n1", 777)
    blob = encode_notice(notice) + encode_envelope(envelope)
    for device in actors.devices:
        assert device.id not in blob


def test_nonrepudiation_join_over_full_run(tmp_path):
    """Every sealed chunk's ruleset digest joins to a published notice
    (or the empty bootstrap set)."""
    actors = make_actors()
    store, _, _ = sealed_run(tmp_path, actors, ruleset=ALLOW_ALL, n_readings=30)
    published = {n.rules_digest.hex() for n in store.notices()
                 if verify_notice(n, actors.notifier.public)}
    published.add(EMPTY_RULESET_DIGEST.hex())
    for i in store.indices():
        assert store.manifest["chunks"][str(i)]["ruleset_digest"] in published


def test_nam_soundness_active_implies_prior_ack(tmp_path):
    """Under notice-and-ACK, an Active reading in any chunk implies that
    device acknowledged before the chunk opened."""
    import random

    from sensorseal import SensorReading, SensorState
    from sensorseal.store import parse_chunk

    actors = make_actors(n_devices=5)
    rng = random.Random(3)
    store = ChunkStore(tmp_path / "s")
    from sensorseal import ChunkPolicy

    sealer = Sealer(actors.enclave, actors.notifier.public, actors.registry, store,
                    policy=ChunkPolicy(max_window_ms=5_000),
                    model=NotificationModel.NAM)
    envelope = sealer.install_ruleset(ALLOW_ALL)
    actors.notifier.publish(envelope, actors.registrations, "n1", 1)

    ack_time: dict = {}
    t = 1_000
    for step in range(60):
        t += rng.randint(200, 1_500)
        if rng.random() < 0.15:
            device = rng.choice(actors.devices)
            if device not in ack_time:
                sealer.register_ack(make_ack(actors.device_keys[device], device, "n1", t))
                ack_time[device] = t
        sealer.submit_reading(SensorReading(
            rng.choice(actors.devices), rng.choice(actors.sensors), t))
    sealer.finalize()

    for i in store.indices():
        parsed = parse_chunk(store.chunk_raw(i))
        chunk_first_t = store.manifest["chunks"][str(i)]["first_t"]
        for sr in parsed.active:
            assert sr.state is SensorState.ACTIVE
            assert sr.reading.device in ack_time
            assert ack_time[sr.reading.device] < chunk_first_t
