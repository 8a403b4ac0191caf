"""Trusted setup, proving, verification: completeness, soundness smoke
checks, key/proof serialization, and ceremony determinism."""

import random

import pytest

from hermes_seal.field import TEST_FIELD
from hermes_seal.groth16 import (Groth16Error, Proof, ProvingKey,
                                 VerifyingKey, prove, setup, verify)
from hermes_seal.pairing import toy_group
from hermes_seal.qap import EvaluationDomain, r1cs_to_qap
from hermes_seal.r1cs import CircuitBuilder, pad_to_power_of_two

P = TEST_FIELD.p


@pytest.fixture(scope="module")
def cubic():
    """x = y^3 + y with x public: the classic toy relation."""
    bld = CircuitBuilder()
    x = bld.alloc_public("x")
    y = bld.alloc_private("y")
    sq = bld.gadget_mul(y, y, "sq")
    cube = bld.gadget_mul(sq, y, "cube")
    bld.enforce(bld.lc(cube) + bld.lc(y), bld.lc(1), bld.lc(x), "bind")
    cs = pad_to_power_of_two(bld.finalize())
    dom = EvaluationDomain.for_size(cs.n_constraints, TEST_FIELD)
    qap = r1cs_to_qap(cs, dom)
    pk, vk = setup(qap, seed=42)
    return cs, qap, pk, vk, x, y


def test_completeness(cubic):
    cs, qap, pk, vk, x, y = cubic
    rng = random.Random(1)
    for _ in range(20):
        yv = rng.randrange(P)
        xv = (pow(yv, 3, P) + yv) % P
        w = cs.generate_witness({x: xv, y: yv})
        proof = prove(pk, qap, w, seed=rng.getrandbits(64))
        assert verify(vk, proof, cs.public_inputs(w))


def test_proofs_are_randomized(cubic):
    cs, qap, pk, vk, x, y = cubic
    w = cs.generate_witness({x: 30, y: 3})
    p1 = prove(pk, qap, w, seed=1)
    p2 = prove(pk, qap, w, seed=2)
    assert p1.to_bytes() != p2.to_bytes()
    assert verify(vk, p1, cs.public_inputs(w))
    assert verify(vk, p2, cs.public_inputs(w))


def test_wrong_public_input_rejected(cubic):
    cs, qap, pk, vk, x, y = cubic
    w = cs.generate_witness({x: 30, y: 3})
    proof = prove(pk, qap, w, seed=7)
    assert not verify(vk, proof, [31])
    assert not verify(vk, proof, [0])
    assert not verify(vk, proof, [])          # arity mismatch
    assert not verify(vk, proof, [30, 30])


def test_mangled_proof_rejected(cubic):
    cs, qap, pk, vk, x, y = cubic
    group = toy_group()
    w = cs.generate_witness({x: 30, y: 3})
    proof = prove(pk, qap, w, seed=7)
    publics = cs.public_inputs(w)
    for attr in ("a", "c"):
        bad = Proof(proof.a, proof.b, proof.c, proof.circuit_digest)
        setattr(bad, attr, getattr(proof, attr) + group.g1)
        assert not verify(vk, bad, publics)
    bad = Proof(proof.a, proof.b + group.g2, proof.c, proof.circuit_digest)
    assert not verify(vk, bad, publics)


def test_proof_serialization(cubic):
    cs, qap, pk, vk, x, y = cubic
    w = cs.generate_witness({x: 30, y: 3})
    proof = prove(pk, qap, w, seed=3)
    raw = proof.to_bytes()
    assert len(raw) == Proof.byte_length() == 95
    back = Proof.from_bytes(raw)
    assert back.to_bytes() == raw
    assert verify(vk, back, cs.public_inputs(w))
    with pytest.raises(Exception):
        Proof.from_bytes(raw[:-1])


def test_key_serialization(cubic):
    cs, qap, pk, vk, x, y = cubic
    pk2 = ProvingKey.from_bytes(pk.to_bytes())
    vk2 = VerifyingKey.from_bytes(vk.to_bytes())
    assert pk2.to_bytes() == pk.to_bytes()
    assert vk2.to_bytes() == vk.to_bytes()
    w = cs.generate_witness({x: 30, y: 3})
    proof = prove(pk2, qap, w, seed=4)
    assert verify(vk2, proof, cs.public_inputs(w))


def test_setup_determinism(cubic):
    cs, qap, pk, vk, x, y = cubic
    pk2, vk2 = setup(qap, seed=42)
    assert pk2.to_bytes() == pk.to_bytes()
    assert vk2.to_bytes() == vk.to_bytes()
    pk3, vk3 = setup(qap, seed=43)
    assert vk3.to_bytes() != vk.to_bytes()


def test_circuit_digest_binding(cubic):
    cs, qap, pk, vk, x, y = cubic
    # a proving key for a different circuit refuses to prove this witness
    bld = CircuitBuilder()
    a = bld.alloc_public("a")
    b = bld.alloc_private("b")
    bld.gadget_mul(b, b, "bsq")
    bld.assert_equal(a, b, "a=b")
    other_cs = pad_to_power_of_two(bld.finalize())
    other_qap = r1cs_to_qap(other_cs, EvaluationDomain.for_size(
        other_cs.n_constraints, TEST_FIELD))
    other_pk, _ = setup(other_qap, seed=9)
    w = cs.generate_witness({x: 30, y: 3})
    with pytest.raises(Groth16Error):
        prove(other_pk, qap, w, seed=1)


def test_verify_checks_digest(cubic):
    cs, qap, pk, vk, x, y = cubic
    w = cs.generate_witness({x: 30, y: 3})
    proof = prove(pk, qap, w, seed=5)
    bad = Proof(proof.a, proof.b, proof.c, b"\x00" * 32)
    assert not verify(vk, bad, cs.public_inputs(w))


def test_toxic_waste_zeroized(cubic):
    cs, qap, pk, vk, x, y = cubic
    pk2, vk2, toxic = setup(qap, seed=8, return_toxic=True)
    toxic.zeroize()
    assert toxic.tau == toxic.alpha == toxic.beta == 0
    assert toxic.gamma == toxic.delta == 0
