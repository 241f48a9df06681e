"""Transient (per-pseudonym) signature scheme."""

import random

from avcs.groups import P192, ToyGroup
from avcs import transient

BIG_TOY = ToyGroup(2147483647)


def test_round_trip():
    for group in (BIG_TOY, P192):
        rng = random.Random(1)
        sk, pk = transient.gen_keypair(group, rng)
        sig = transient.sign(group, sk, pk, b"road is icy")
        assert len(sig) == transient.signature_byte_len(group)
        assert transient.verify(group, pk, b"road is icy", sig)
        assert not transient.verify(group, pk, b"road is dry", sig)


def test_signatures_are_deterministic():
    rng = random.Random(2)
    sk, pk = transient.gen_keypair(BIG_TOY, rng)
    assert transient.sign(BIG_TOY, sk, pk, b"x") == transient.sign(BIG_TOY, sk, pk, b"x")
    assert transient.sign(BIG_TOY, sk, pk, b"x") != transient.sign(BIG_TOY, sk, pk, b"y")


def test_wrong_key_rejects():
    rng = random.Random(3)
    sk1, pk1 = transient.gen_keypair(BIG_TOY, rng)
    _, pk2 = transient.gen_keypair(BIG_TOY, rng)
    sig = transient.sign(BIG_TOY, sk1, pk1, b"msg")
    assert not transient.verify(BIG_TOY, pk2, b"msg", sig)


def test_empty_message_is_fine():
    rng = random.Random(4)
    sk, pk = transient.gen_keypair(P192, rng)
    assert transient.verify(P192, pk, b"", transient.sign(P192, sk, pk, b""))


def test_garbage_signatures_reject_without_raising():
    rng = random.Random(5)
    sk, pk = transient.gen_keypair(P192, rng)
    good = transient.sign(P192, sk, pk, b"m")
    assert not transient.verify(P192, pk, b"m", b"")
    assert not transient.verify(P192, pk, b"m", good[:-1])
    assert not transient.verify(P192, pk, b"m", good + b"\x00")
    assert not transient.verify(P192, pk, b"m", b"\xff" * len(good))
    for i in range(0, len(good), 7):
        bad = bytearray(good)
        bad[i] ^= 0x01
        assert not transient.verify(P192, pk, b"m", bytes(bad))