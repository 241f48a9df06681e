"""Ring signatures from the ground up, on the toy group.

A manufactory publishes a vector of 256 public keys.  Every vehicle id
hashes to a subset of them; the sum of that subset is the vehicle's
combined public key E, and the matching private key d is handed over
once at provisioning.  A ring signature over ids {id_1..id_r} convinces
the verifier that the holder of SOME d in the ring signed, without
saying which.

The trick: for every non-signer the signer forges a valid-looking
tuple (m, U, v) against that member's E by choosing the "message" m
after the fact.  A hash chain over the forged m values then pins down
the one message slot the signer must fill honestly, which only a real
private key can do.  Run with:

    python3 demos/01_ring_signatures.py
"""

import random

from avcs import count_group_ops, get_group, keygen, ring_sign, ring_verify, setup
from avcs.ringsig import ManufactoryRegistry, RingSignature

group = get_group("toy:2147483647")
rng = random.Random(41)

print("== setup ==")
mk = setup(group, rng=rng, manufactory_id="acme")
registry = ManufactoryRegistry(group)
registry.register_master(mk)
print(f"group order q = {group.q}, master vector of {len(mk.Y)} public keys")

ids = [f"acme:car-{i}" for i in range(5)]
keys = {i: keygen(mk, i) for i in ids}
for i in ids:
    E = registry.extract_pubkey(i)
    print(f"  {i}: combined public key {group.encode_element(E).hex()}")

print()
print("== signing ==")
msg = b"brake hard, icy bridge ahead"
ring = ids[:4]
pos = 2  # acme:car-2 is the actual author
with count_group_ops() as ops:
    sig = ring_sign(msg, ring, keys[ring[pos]], pos, registry, rng)
print(f"ring of {len(ring)}: {ring}")
print(f"signature: x={sig.x}, {len(sig.tuples)} tuples, "
      f"{len(sig.to_bytes(group))} bytes on the wire")
print(f"cost: {ops.scalar_muls} scalar multiplications (2r-1 = {2*len(ring)-1})")
print("note: x is a uniformly random start index, not the author's slot")

print()
print("== verifying ==")
with count_group_ops() as ops:
    ok = ring_verify(msg, sig, registry)
print(f"verdict: {ok}, cost {ops.scalar_muls} multiplications (3r = {3*len(ring)})")

print()
print("== tampering ==")
wire = sig.to_bytes(group)
for label, attack in [
    ("flip one payload byte", (b"brake hard, icy bridge ahead!", wire)),
    ("flip one signature byte", (msg, wire[:-1] + bytes([wire[-1] ^ 1]))),
]:
    bad_msg, bad_wire = attack
    try:
        parsed = RingSignature.from_bytes(bad_wire, group)
        verdict = ring_verify(bad_msg, parsed, registry)
    except Exception as exc:
        verdict = f"parse error: {exc}"
    print(f"  {label}: {verdict}")

print()
print("== anonymity check ==")
# sign the same message from every position; the verifier-visible
# pieces, x included, are identically distributed
for p in range(len(ring)):
    s = ring_sign(msg, ring, keys[ring[p]], p, registry, random.Random(99))
    print(f"  author at slot {p}: published x={s.x}, "
          f"verifies={ring_verify(msg, s, registry)}")
print("same seed, same x from every author slot: the index leaks nothing")
