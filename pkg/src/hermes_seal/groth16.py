"""Groth16 zk-SNARK over the QAP layer: trusted setup, prover, verifier.

Setup samples toxic waste (tau, alpha, beta, gamma, delta), evaluates the
wire polynomials at tau via sparse accumulation (never materializing dense
polynomials), and commits everything to the curve with fixed-base window
tables plus Montgomery batch inversion.  Proofs are three group elements;
their byte encoding is constant-length regardless of circuit size.

The verifier runs subgroup checks on all three proof elements before the
single pairing equation
    e(A, B) = e(alpha, beta) * e(IC(x), gamma) * e(C, delta).
"""

from __future__ import annotations

import hashlib
import random
import struct

from .pairing import BilinearGroup, G1Element, G2Element, TOY_CURVE_PROFILE, toy_group
from .qap import QapInstance, compute_quotient

__all__ = [
    "ToxicWaste",
    "ProvingKey",
    "VerifyingKey",
    "Proof",
    "setup",
    "prove",
    "verify",
    "Groth16Error",
    "PROOF_MAGIC",
    "PK_MAGIC",
    "VK_MAGIC",
]

PK_MAGIC = b"HSPK"
VK_MAGIC = b"HSVK"
PROOF_MAGIC = b"HSPF"
KEY_VERSION = 1


class Groth16Error(Exception):
    pass


class ToxicWaste:
    """The five setup trapdoor scalars; zeroize() after use."""

    __slots__ = ("tau", "alpha", "beta", "gamma", "delta")

    def __init__(self, tau, alpha, beta, gamma, delta):
        self.tau, self.alpha, self.beta = tau, alpha, beta
        self.gamma, self.delta = gamma, delta

    def zeroize(self):
        self.tau = self.alpha = self.beta = self.gamma = self.delta = 0


class _FixedBaseTable:
    """Windowed fixed-base exponentiation with batched affine conversion.

    Precomputes [k * 2^(w*t)] * P for every window t and digit k, so each
    exponentiation is ~ceil(bits/w) mixed additions and zero doublings.
    """

    def __init__(self, curve, base_point, bits: int, window: int = 8):
        self.curve = curve
        self.window = window
        self.windows = (bits + window - 1) // window
        size = 1 << window
        tables = []
        block = base_point
        for _ in range(self.windows):
            row = [None] * size
            acc = None
            for k in range(1, size):
                acc = block if acc is None else curve.add(acc, block)
                row[k] = acc
            tables.append(row)
            block = curve.add(row[size - 1], block)  # 2^w * previous block
        self.tables = tables
        self.mask = size - 1

    def exp_many(self, scalars):
        """[s * P for s in scalars] as affine points, one batched inversion."""
        curve = self.curve
        p = curve.p
        jadd_mixed = curve._jadd_mixed
        jacobians = []
        for s in scalars:
            acc = (1, 1, 0)
            for t in range(self.windows):
                digit = (s >> (t * self.window)) & self.mask
                if digit:
                    acc = jadd_mixed(acc, self.tables[t][digit])
            jacobians.append(acc)
        # Montgomery batch inversion of the nonzero Z coordinates
        zs = [j[2] for j in jacobians if j[2] != 0]
        prefix = [1]
        for z in zs:
            prefix.append(prefix[-1] * z % p)
        inv_all = pow(prefix[-1], -1, p) if zs else 1
        invs = [0] * len(zs)
        for i in range(len(zs) - 1, -1, -1):
            invs[i] = inv_all * prefix[i] % p
            inv_all = inv_all * zs[i] % p
        out = []
        k = 0
        for X, Y, Z in jacobians:
            if Z == 0:
                out.append(None)
            else:
                zi = invs[k]
                k += 1
                z2 = zi * zi % p
                out.append((X * z2 % p, Y * z2 % p * zi % p))
        return out

    def exp(self, scalar):
        return self.exp_many([scalar])[0]


class ProvingKey:
    """All G1/G2 commitments the prover needs, bound to one circuit digest."""

    def __init__(self, group, circuit_digest, n_public,
                 alpha_g1, beta_g1, delta_g1, beta_g2, delta_g2,
                 a_g1, b_g1, b_g2, k_g1, h_g1):
        self.group = group
        self.circuit_digest = circuit_digest
        self.n_public = n_public
        self.alpha_g1 = alpha_g1
        self.beta_g1 = beta_g1
        self.delta_g1 = delta_g1
        self.beta_g2 = beta_g2
        self.delta_g2 = delta_g2
        self.a_g1 = a_g1    # [g1 * A_j(tau)], j = 0..m
        self.b_g1 = b_g1    # [g1 * B_j(tau)]
        self.b_g2 = b_g2    # [g2 * B_j(tau)]
        self.k_g1 = k_g1    # [g1 * (beta A_j + alpha B_j + C_j)/delta], j > l
        self.h_g1 = h_g1    # [g1 * tau^k t(tau)/delta], k = 0..n-2

    def to_bytes(self) -> bytes:
        g = self.group
        out = [PK_MAGIC, bytes([KEY_VERSION, TOY_CURVE_PROFILE]),
               self.circuit_digest,
               struct.pack("<IIII", self.n_public, len(self.a_g1),
                           len(self.k_g1), len(self.h_g1))]
        out += [g.g1_to_bytes(self.alpha_g1), g.g1_to_bytes(self.beta_g1),
                g.g1_to_bytes(self.delta_g1), g.g2_to_bytes(self.beta_g2),
                g.g2_to_bytes(self.delta_g2)]
        for lst, ser in ((self.a_g1, g.g1_to_bytes), (self.b_g1, g.g1_to_bytes),
                         (self.b_g2, g.g2_to_bytes), (self.k_g1, g.g1_to_bytes),
                         (self.h_g1, g.g1_to_bytes)):
            out += [ser(el) for el in lst]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, group: BilinearGroup = None) -> "ProvingKey":
        group = group or toy_group()
        if data[:4] != PK_MAGIC:
            raise Groth16Error("bad proving-key magic")
        if data[4] != KEY_VERSION:
            raise Groth16Error(f"unsupported proving-key version {data[4]}")
        if data[5] != TOY_CURVE_PROFILE:
            raise Groth16Error(f"unknown curve profile {data[5]:#x}")
        digest = data[6:38]
        n_public, m1, nk, nh = struct.unpack_from("<IIII", data, 38)
        off = 54
        pb = group.point_bytes

        def g1():
            nonlocal off
            el = group.g1_from_bytes(data[off:off + pb])
            off += pb
            return el

        def g2():
            nonlocal off
            el = group.g2_from_bytes(data[off:off + pb])
            off += pb
            return el

        alpha_g1, beta_g1, delta_g1 = g1(), g1(), g1()
        beta_g2, delta_g2 = g2(), g2()
        a_g1 = [g1() for _ in range(m1)]
        b_g1 = [g1() for _ in range(m1)]
        b_g2 = [g2() for _ in range(m1)]
        k_g1 = [g1() for _ in range(nk)]
        h_g1 = [g1() for _ in range(nh)]
        if off != len(data):
            raise Groth16Error("trailing bytes in proving-key encoding")
        return cls(group, digest, n_public, alpha_g1, beta_g1, delta_g1,
                   beta_g2, delta_g2, a_g1, b_g1, b_g2, k_g1, h_g1)


class VerifyingKey:
    """Verifier material: four constants plus the public-input commitments."""

    def __init__(self, group, circuit_digest, alpha_g1, beta_g2, gamma_g2,
                 delta_g2, ic):
        self.group = group
        self.circuit_digest = circuit_digest
        self.alpha_g1 = alpha_g1
        self.beta_g2 = beta_g2
        self.gamma_g2 = gamma_g2
        self.delta_g2 = delta_g2
        self.ic = ic  # [g1 * (beta A_j + alpha B_j + C_j)/gamma], j = 0..l
        self.alpha_beta = group.pair(alpha_g1, beta_g2)

    @property
    def n_public(self) -> int:
        return len(self.ic) - 1

    def to_bytes(self) -> bytes:
        g = self.group
        out = [VK_MAGIC, bytes([KEY_VERSION, TOY_CURVE_PROFILE]),
               self.circuit_digest, struct.pack("<I", len(self.ic)),
               g.g1_to_bytes(self.alpha_g1), g.g2_to_bytes(self.beta_g2),
               g.g2_to_bytes(self.gamma_g2), g.g2_to_bytes(self.delta_g2)]
        out += [g.g1_to_bytes(el) for el in self.ic]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, group: BilinearGroup = None) -> "VerifyingKey":
        group = group or toy_group()
        if data[:4] != VK_MAGIC:
            raise Groth16Error("bad verifying-key magic")
        if data[4] != KEY_VERSION:
            raise Groth16Error(f"unsupported verifying-key version {data[4]}")
        if data[5] != TOY_CURVE_PROFILE:
            raise Groth16Error(f"unknown curve profile {data[5]:#x}")
        digest = data[6:38]
        (ic_len,) = struct.unpack_from("<I", data, 38)
        off = 42
        pb = group.point_bytes
        alpha_g1 = group.g1_from_bytes(data[off:off + pb]); off += pb
        beta_g2 = group.g2_from_bytes(data[off:off + pb]); off += pb
        gamma_g2 = group.g2_from_bytes(data[off:off + pb]); off += pb
        delta_g2 = group.g2_from_bytes(data[off:off + pb]); off += pb
        ic = []
        for _ in range(ic_len):
            ic.append(group.g1_from_bytes(data[off:off + pb]))
            off += pb
        if off != len(data):
            raise Groth16Error("trailing bytes in verifying-key encoding")
        return cls(group, digest, alpha_g1, beta_g2, gamma_g2, delta_g2, ic)


class Proof:
    """(A, B, C) in G1 x G2 x G1; constant-size byte encoding."""

    __slots__ = ("a", "b", "c", "circuit_digest")

    def __init__(self, a: G1Element, b: G2Element, c: G1Element,
                 circuit_digest: bytes):
        self.a, self.b, self.c = a, b, c
        self.circuit_digest = circuit_digest

    def to_bytes(self) -> bytes:
        g = self.a.group
        return b"".join([PROOF_MAGIC, bytes([KEY_VERSION, TOY_CURVE_PROFILE]),
                         self.circuit_digest, g.g1_to_bytes(self.a),
                         g.g2_to_bytes(self.b), g.g1_to_bytes(self.c)])

    @classmethod
    def byte_length(cls, group: BilinearGroup = None) -> int:
        group = group or toy_group()
        return 6 + 32 + 3 * group.point_bytes

    @classmethod
    def from_bytes(cls, data: bytes, group: BilinearGroup = None) -> "Proof":
        group = group or toy_group()
        if len(data) != cls.byte_length(group):
            raise Groth16Error(f"proof must be {cls.byte_length(group)} bytes")
        if data[:4] != PROOF_MAGIC:
            raise Groth16Error("bad proof magic")
        if data[4] != KEY_VERSION:
            raise Groth16Error(f"unsupported proof version {data[4]}")
        if data[5] != TOY_CURVE_PROFILE:
            raise Groth16Error(f"unknown curve profile {data[5]:#x}")
        digest = data[6:38]
        pb = group.point_bytes
        a = group.g1_from_bytes(data[38:38 + pb])
        b = group.g2_from_bytes(data[38 + pb:38 + 2 * pb])
        c = group.g1_from_bytes(data[38 + 2 * pb:])
        return cls(a, b, c, digest)


def setup(qap: QapInstance, seed=None, group: BilinearGroup = None,
          return_toxic: bool = False):
    """Sample toxic waste and produce (pk, vk) for the circuit behind `qap`.

    A seed gives a reproducible ceremony for tests; omit it for fresh
    randomness.  The toxic waste is zeroized before returning unless
    `return_toxic` is set (test hook only).
    """
    group = group or toy_group()
    q = group.q
    rng = random.Random(seed) if seed is not None else random.SystemRandom()
    domain_points = set(qap.domain.points)
    while True:
        tau = rng.randrange(1, q)
        if tau not in domain_points:
            break
    alpha = rng.randrange(1, q)
    beta = rng.randrange(1, q)
    gamma = rng.randrange(1, q)
    delta = rng.randrange(1, q)
    toxic = ToxicWaste(tau, alpha, beta, gamma, delta)

    a_tau, b_tau, c_tau = qap.wire_evals_at(tau)
    t_tau = qap.domain.eval_vanishing(tau)
    gamma_inv = pow(gamma, -1, q)
    delta_inv = pow(delta, -1, q)
    l = qap.cs.n_public
    m1 = qap.cs.n_wires
    n = len(qap.domain)

    k_scalars = [(beta * a_tau[j] + alpha * b_tau[j] + c_tau[j]) % q
                 for j in range(m1)]
    ic_scalars = [k_scalars[j] * gamma_inv % q for j in range(l + 1)]
    priv_scalars = [k_scalars[j] * delta_inv % q for j in range(l + 1, m1)]
    h_scalars = []
    acc = t_tau * delta_inv % q
    for _ in range(n - 1):
        h_scalars.append(acc)
        acc = acc * tau % q

    bits = q.bit_length()
    t1 = _FixedBaseTable(group.curve, group.g1.point, bits)
    t2 = _FixedBaseTable(group.curve, group.g2.point, bits)

    g1_scalars = ([alpha, beta, delta] + a_tau + b_tau + priv_scalars
                  + h_scalars + ic_scalars)
    g1_points = t1.exp_many(g1_scalars)
    g2_points = t2.exp_many([beta, delta] + b_tau)

    def wrap1(pts):
        return [G1Element(pt, group) for pt in pts]

    def wrap2(pts):
        return [G2Element(pt, group) for pt in pts]

    off = 0
    alpha_g1, beta_g1, delta_g1 = wrap1(g1_points[0:3]); off = 3
    a_g1 = wrap1(g1_points[off:off + m1]); off += m1
    b_g1 = wrap1(g1_points[off:off + m1]); off += m1
    k_g1 = wrap1(g1_points[off:off + len(priv_scalars)]); off += len(priv_scalars)
    h_g1 = wrap1(g1_points[off:off + len(h_scalars)]); off += len(h_scalars)
    ic = wrap1(g1_points[off:off + l + 1])
    beta_g2, delta_g2 = wrap2(g2_points[0:2])
    b_g2 = wrap2(g2_points[2:])
    gamma_g2 = G2Element(t2.exp(gamma), group)

    digest = qap.cs.digest()
    pk = ProvingKey(group, digest, l, alpha_g1, beta_g1, delta_g1, beta_g2,
                    delta_g2, a_g1, b_g1, b_g2, k_g1, h_g1)
    vk = VerifyingKey(group, digest, alpha_g1, beta_g2, gamma_g2, delta_g2, ic)
    if return_toxic:
        return pk, vk, toxic
    toxic.zeroize()
    return pk, vk


def prove(pk: ProvingKey, qap: QapInstance, witness, seed=None) -> Proof:
    """Produce a randomized proof; raises if the witness is unsatisfying."""
    group = pk.group
    q = group.q
    values = witness.values if hasattr(witness, "values") else list(witness)
    if len(values) != len(pk.a_g1):
        raise Groth16Error(
            f"witness length {len(values)} != key wire count {len(pk.a_g1)}")
    if qap.cs.digest() != pk.circuit_digest:
        raise Groth16Error("proving key was generated for a different circuit")
    h = compute_quotient(qap, values)  # also rejects unsatisfying witnesses

    rng = random.Random(seed) if seed is not None else random.SystemRandom()
    r = rng.randrange(q)
    s = rng.randrange(q)

    msm = group.multi_scalar_mul
    a = pk.alpha_g1 + msm(values, pk.a_g1) + group.scalar_mul_g1(r, pk.delta_g1)
    b2 = pk.beta_g2 + msm(values, pk.b_g2) + group.scalar_mul_g2(s, pk.delta_g2)
    b1 = pk.beta_g1 + msm(values, pk.b_g1) + group.scalar_mul_g1(s, pk.delta_g1)

    priv = values[pk.n_public + 1:]
    c = msm(priv, pk.k_g1)
    if h.coeffs:
        c = c + msm(h.coeffs, pk.h_g1[:len(h.coeffs)])
    c = (c + group.scalar_mul_g1(s, a) + group.scalar_mul_g1(r, b1)
         - group.scalar_mul_g1(r * s % q, pk.delta_g1))
    return Proof(a, b2, c, pk.circuit_digest)


def verify(vk: VerifyingKey, proof: Proof, public_inputs) -> bool:
    """Subgroup checks, then the single Groth16 pairing equation."""
    group = vk.group
    inputs = [x.value if hasattr(x, "value") else int(x) % group.q
              for x in public_inputs]
    if len(inputs) != vk.n_public:
        return False
    if proof.circuit_digest != vk.circuit_digest:
        return False
    if not (group.in_subgroup_g1(proof.a) and group.in_subgroup_g2(proof.b)
            and group.in_subgroup_g1(proof.c)):
        return False
    ic = group.multi_scalar_mul([1] + inputs, vk.ic)
    lhs = group.pair(proof.a, proof.b)
    rhs = (vk.alpha_beta
           * group.pair(ic, vk.gamma_g2)
           * group.pair(proof.c, vk.delta_g2))
    return lhs == rhs
