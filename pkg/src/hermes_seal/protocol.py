"""Vehicle-to-verifier protocol: domain separation, signatures, certificates,
proof-package assembly, and the ordered verification pipeline.

A proof package bundles a zk-SNARK proof with everything a roadside verifier
needs to check it statelessly except for the two registries it already
holds: the enrollment authority's root key (certificate chain) and the
circuit registry mapping R1CS hashes to verifying keys.  The signed payload
binds, by hash, every artifact in the package plus context, commitment,
timestamp, and nonce, so any tampering breaks the signature before the
(more expensive) pairing check runs.

Verification order (cheapest/most-diagnostic first):
    1. certificate chain,  2. circuit registered,  3. signature,
    4. timestamp freshness,  5. nonce replay,  6. zk proof.
"""

from __future__ import annotations

import hashlib
import secrets
import struct

from .commitment import byte_hash
from .field import DTypeTag, FieldElement, NONCE_BYTES, TEST_FIELD, encode
from .groth16 import Proof, VerifyingKey, prove, verify
from .pairing import BilinearGroup, G1Element, toy_group

__all__ = [
    "DomainSeparator",
    "RSS_COMMIT_DOMAIN",
    "RSS_SIGN_DOMAIN",
    "AUDIT_COMMIT_DOMAIN",
    "AUDIT_SIGN_DOMAIN",
    "SignatureKeypair",
    "schnorr_keygen",
    "schnorr_sign",
    "schnorr_verify",
    "Certificate",
    "EnrollmentAuthority",
    "assemble_payload",
    "ProofPackage",
    "VerifierState",
    "create_package",
    "audit_open",
    "ProtocolError",
    "DEFAULT_FRESHNESS_WINDOW",
]

DEFAULT_FRESHNESS_WINDOW = 5  # seconds


class ProtocolError(Exception):
    pass


class DomainSeparator:
    """32-bit separator packed big-endian as [app][op][counter:2]."""

    __slots__ = ("app", "op", "counter")

    def __init__(self, app: int, op: int, counter: int = 0):
        for name, v, hi in (("app", app, 0xFF), ("op", op, 0xFF),
                            ("counter", counter, 0xFFFF)):
            if not 0 <= v <= hi:
                raise ProtocolError(f"domain separator {name}={v} out of range")
        self.app, self.op, self.counter = app, op, counter

    @property
    def value(self) -> int:
        return (self.app << 24) | (self.op << 16) | self.counter

    def __int__(self):
        return self.value

    def __eq__(self, other):
        return isinstance(other, DomainSeparator) and self.value == other.value

    def __repr__(self):
        return (f"DomainSeparator(app={self.app:#04x}, op={self.op:#04x}, "
                f"counter={self.counter})")


RSS_COMMIT_DOMAIN = DomainSeparator(0x00, 0x01)      # 65536
RSS_SIGN_DOMAIN = DomainSeparator(0x00, 0x02)        # 131072
AUDIT_COMMIT_DOMAIN = DomainSeparator(0x01, 0x01)    # 16842752
AUDIT_SIGN_DOMAIN = DomainSeparator(0x01, 0x02)      # 16908288


# -- Schnorr signatures over G1 ----------------------------------------------


class SignatureKeypair:
    __slots__ = ("sk", "pk", "group")

    def __init__(self, sk: int, pk: G1Element, group: BilinearGroup):
        self.sk = sk
        self.pk = pk
        self.group = group

    def pk_bytes(self) -> bytes:
        return self.group.g1_to_bytes(self.pk)


def schnorr_keygen(rng=None, group: BilinearGroup = None) -> SignatureKeypair:
    group = group or toy_group()
    sk = (rng.randrange(1, group.q) if rng is not None
          else secrets.randbelow(group.q - 1) + 1)
    return SignatureKeypair(sk, group.scalar_mul_g1(sk, group.g1), group)


def _challenge(r_bytes: bytes, pk_bytes: bytes, message: bytes, q: int) -> int:
    return int.from_bytes(
        hashlib.sha256(b"HS-SCHNORR-e" + r_bytes + pk_bytes + message).digest(),
        "big") % q


def schnorr_sign(keypair: SignatureKeypair, message: bytes) -> bytes:
    """Deterministic-nonce Schnorr; signature is e||s, 8 bytes each."""
    group = keypair.group
    q = group.q
    k = int.from_bytes(
        hashlib.sha256(b"HS-SCHNORR-k" + keypair.sk.to_bytes(8, "little")
                       + message).digest(), "big") % q
    k = k or 1
    r_bytes = group.g1_to_bytes(group.scalar_mul_g1(k, group.g1))
    e = _challenge(r_bytes, keypair.pk_bytes(), message, q)
    s = (k + e * keypair.sk) % q
    return e.to_bytes(8, "little") + s.to_bytes(8, "little")


def schnorr_verify(pk_bytes: bytes, message: bytes, signature: bytes,
                   group: BilinearGroup = None) -> bool:
    group = group or toy_group()
    if len(signature) != 16:
        return False
    q = group.q
    e = int.from_bytes(signature[:8], "little")
    s = int.from_bytes(signature[8:], "little")
    if not (0 <= e < q and 0 <= s < q):
        return False
    try:
        pk = group.g1_from_bytes(pk_bytes)
    except ValueError:
        return False
    if not group.in_subgroup_g1(pk):
        return False
    # R' = s*G - e*PK; accept iff H(R', PK, m) == e
    r_pt = group.scalar_mul_g1(s, group.g1) - group.scalar_mul_g1(e, pk)
    return _challenge(group.g1_to_bytes(r_pt), pk_bytes, message, q) == e


# -- certificates ------------------------------------------------------------


class Certificate:
    """Binds a vehicle ID to its signature verification key, with validity
    window, signed by the enrollment authority's root key."""

    __slots__ = ("vid", "vk_sig_bytes", "valid_from", "valid_to", "signature")

    def __init__(self, vid: int, vk_sig_bytes: bytes, valid_from: int,
                 valid_to: int, signature: bytes = b""):
        if not 0 <= vid < 1 << 32:
            raise ProtocolError("vehicle ID out of 32-bit range")
        if valid_to < valid_from:
            raise ProtocolError("certificate validity window is inverted")
        self.vid = vid
        self.vk_sig_bytes = vk_sig_bytes
        self.valid_from = valid_from
        self.valid_to = valid_to
        self.signature = signature

    def body_bytes(self) -> bytes:
        return (struct.pack("<I", self.vid)
                + struct.pack("<H", len(self.vk_sig_bytes)) + self.vk_sig_bytes
                + struct.pack("<QQ", self.valid_from, self.valid_to))

    def to_bytes(self) -> bytes:
        return (self.body_bytes()
                + struct.pack("<H", len(self.signature)) + self.signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Certificate":
        (vid,) = struct.unpack_from("<I", data, 0)
        (klen,) = struct.unpack_from("<H", data, 4)
        vk = data[6:6 + klen]
        valid_from, valid_to = struct.unpack_from("<QQ", data, 6 + klen)
        off = 22 + klen
        (slen,) = struct.unpack_from("<H", data, off)
        sig = data[off + 2:off + 2 + slen]
        if off + 2 + slen != len(data):
            raise ProtocolError("trailing bytes in certificate encoding")
        return cls(vid, vk, valid_from, valid_to, sig)


class EnrollmentAuthority:
    """Issues vehicle certificates under one root signature key."""

    def __init__(self, rng=None, group: BilinearGroup = None):
        self.group = group or toy_group()
        self.root = schnorr_keygen(rng, self.group)

    @property
    def root_pk_bytes(self) -> bytes:
        return self.root.pk_bytes()

    def issue(self, vid: int, vk_sig_bytes: bytes, valid_from: int,
              valid_to: int) -> Certificate:
        cert = Certificate(vid, vk_sig_bytes, valid_from, valid_to)
        cert.signature = schnorr_sign(self.root, cert.body_bytes())
        return cert

    @staticmethod
    def verify_certificate(cert: Certificate, root_pk_bytes: bytes,
                           now: int, group: BilinearGroup = None) -> bool:
        if not cert.valid_from <= now <= cert.valid_to:
            return False
        return schnorr_verify(root_pk_bytes, cert.body_bytes(),
                              cert.signature, group)


# -- signed payload ----------------------------------------------------------


def assemble_payload(sign_domain: DomainSeparator, r1cs_bytes: bytes,
                     vk_bytes: bytes, cert_bytes: bytes, proof_bytes: bytes,
                     commitment_value: FieldElement, timestamp: int,
                     nonce: bytes) -> bytes:
    """The message under the vehicle's signature: context, artifact hashes,
    commitment, timestamp, nonce -- in this fixed order."""
    return b"".join([
        encode(sign_domain.value, DTypeTag.CTX),
        byte_hash(encode(r1cs_bytes, DTypeTag.R1CS)),
        byte_hash(encode(vk_bytes, DTypeTag.VK)),
        byte_hash(encode(cert_bytes, DTypeTag.CERT)),
        byte_hash(encode(proof_bytes, DTypeTag.PROOF)),
        encode(commitment_value, DTypeTag.COMMIT),
        encode(timestamp, DTypeTag.TS),
        encode(nonce, DTypeTag.NONCE),
    ])


# -- proof package -----------------------------------------------------------

PACKAGE_MAGIC = b"HSPG"
PACKAGE_VERSION = 1

# section order is part of the wire format
_SECTION_ORDER = ["proof", "publics", "commit", "sig", "vk_sig", "cert",
                  "r1cs_hash", "ts", "nonce", "ctx"]


class ProofPackage:
    """Everything a vehicle transmits for one claim."""

    __slots__ = ("proof_bytes", "public_inputs", "commitment", "signature",
                 "vk_sig_bytes", "cert_bytes", "r1cs_hash", "timestamp",
                 "nonce", "sign_domain")

    def __init__(self, proof_bytes, public_inputs, commitment, signature,
                 vk_sig_bytes, cert_bytes, r1cs_hash, timestamp, nonce,
                 sign_domain: DomainSeparator):
        self.proof_bytes = proof_bytes
        self.public_inputs = [int(x) for x in public_inputs]
        self.commitment = commitment
        self.signature = signature
        self.vk_sig_bytes = vk_sig_bytes
        self.cert_bytes = cert_bytes
        self.r1cs_hash = r1cs_hash
        self.timestamp = timestamp
        self.nonce = nonce
        self.sign_domain = sign_domain

    def _sections(self, field):
        pubs = struct.pack("<I", len(self.public_inputs)) + b"".join(
            v.to_bytes(field.byte_width, "little") for v in self.public_inputs)
        return {
            "proof": self.proof_bytes,
            "publics": pubs,
            "commit": encode(self.commitment, DTypeTag.COMMIT, field),
            "sig": self.signature,
            "vk_sig": self.vk_sig_bytes,
            "cert": self.cert_bytes,
            "r1cs_hash": self.r1cs_hash,
            "ts": encode(self.timestamp, DTypeTag.TS),
            "nonce": encode(self.nonce, DTypeTag.NONCE),
            "ctx": encode(self.sign_domain.value, DTypeTag.CTX),
        }

    def to_bytes(self, field=TEST_FIELD) -> bytes:
        sections = self._sections(field)
        out = [PACKAGE_MAGIC, bytes([PACKAGE_VERSION])]
        for name in _SECTION_ORDER:
            payload = sections[name]
            out.append(struct.pack("<I", len(payload)))
            out.append(payload)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, field=TEST_FIELD) -> "ProofPackage":
        if data[:4] != PACKAGE_MAGIC:
            raise ProtocolError("bad package magic")
        if data[4] != PACKAGE_VERSION:
            raise ProtocolError(f"unsupported package version {data[4]}")
        off = 5
        raw = {}
        for name in _SECTION_ORDER:
            (length,) = struct.unpack_from("<I", data, off)
            off += 4
            raw[name] = data[off:off + length]
            off += length
        if off != len(data):
            raise ProtocolError("trailing bytes in package encoding")
        (n_pub,) = struct.unpack_from("<I", raw["publics"], 0)
        w = field.byte_width
        pubs = [int.from_bytes(raw["publics"][4 + i * w:4 + (i + 1) * w],
                               "little") for i in range(n_pub)]
        from .field import decode
        ctx_value = decode(raw["ctx"], DTypeTag.CTX)
        sign_domain = DomainSeparator((ctx_value >> 24) & 0xFF,
                                      (ctx_value >> 16) & 0xFF,
                                      ctx_value & 0xFFFF)
        return cls(raw["proof"], pubs,
                   decode(raw["commit"], DTypeTag.COMMIT, field),
                   raw["sig"], raw["vk_sig"], raw["cert"], raw["r1cs_hash"],
                   decode(raw["ts"], DTypeTag.TS),
                   decode(raw["nonce"], DTypeTag.NONCE), sign_domain)


def create_package(pk, qap, witness, commitment_value: FieldElement,
                   keypair: SignatureKeypair, cert: Certificate,
                   vk_bytes: bytes, r1cs_bytes: bytes, timestamp: int,
                   sign_domain: DomainSeparator, nonce: bytes = None,
                   proof_seed=None) -> ProofPackage:
    """Prove, then sign the assembled payload; returns the full package."""
    nonce = nonce if nonce is not None else secrets.token_bytes(NONCE_BYTES)
    proof = prove(pk, qap, witness, seed=proof_seed)
    proof_bytes = proof.to_bytes()
    cert_bytes = cert.to_bytes()
    message = assemble_payload(sign_domain, r1cs_bytes, vk_bytes, cert_bytes,
                               proof_bytes, commitment_value, timestamp, nonce)
    signature = schnorr_sign(keypair, message)
    publics = qap.cs.public_inputs(witness)
    return ProofPackage(proof_bytes, publics, commitment_value, signature,
                        keypair.pk_bytes(), cert_bytes,
                        hashlib.sha256(r1cs_bytes).digest(), timestamp, nonce,
                        sign_domain)


class VerifierState:
    """Roadside verifier: root key, circuit registry, replay cache."""

    def __init__(self, ea_root_pk_bytes: bytes,
                 freshness_window: int = DEFAULT_FRESHNESS_WINDOW,
                 group: BilinearGroup = None):
        self.group = group or toy_group()
        self.ea_root_pk_bytes = ea_root_pk_bytes
        self.freshness_window = freshness_window
        self.registry = {}       # r1cs_hash -> (VerifyingKey, vk_bytes, r1cs_bytes)
        self._nonces = {}        # nonce -> timestamp seen

    def register_circuit(self, r1cs_bytes: bytes, vk: VerifyingKey):
        self.registry[hashlib.sha256(r1cs_bytes).digest()] = \
            (vk, vk.to_bytes(), r1cs_bytes)

    def _prune_nonces(self, now: int):
        horizon = 2 * self.freshness_window
        stale = [n for n, ts in self._nonces.items() if now - ts > horizon]
        for n in stale:
            del self._nonces[n]

    def verify_package(self, package: ProofPackage, now: int):
        """(accepted, reason).  Reason is 'ok' on acceptance, else the name
        of the first failed check."""
        cert = Certificate.from_bytes(package.cert_bytes)
        if not EnrollmentAuthority.verify_certificate(
                cert, self.ea_root_pk_bytes, now, self.group):
            return False, "certificate"
        if cert.vk_sig_bytes != package.vk_sig_bytes:
            return False, "certificate"
        entry = self.registry.get(package.r1cs_hash)
        if entry is None:
            return False, "unknown_circuit"
        vk, vk_bytes, r1cs_bytes = entry
        message = assemble_payload(
            package.sign_domain, r1cs_bytes, vk_bytes, package.cert_bytes,
            package.proof_bytes, package.commitment, package.timestamp,
            package.nonce)
        if not schnorr_verify(package.vk_sig_bytes, message,
                              package.signature, self.group):
            return False, "signature"
        if abs(now - package.timestamp) > self.freshness_window:
            return False, "freshness"
        self._prune_nonces(now)
        if package.nonce in self._nonces:
            return False, "replay"
        try:
            proof = Proof.from_bytes(package.proof_bytes, self.group)
        except Exception:
            return False, "proof"
        if not verify(vk, proof, package.public_inputs):
            return False, "proof"
        self._nonces[package.nonce] = now
        return True, "ok"


def audit_open(package: ProofPackage, opening: dict,
               commitment_public_index: int, field=TEST_FIELD) -> bool:
    """Auditor-side check that a revealed opening matches the commitment the
    proof was bound to (both the package field and the public input)."""
    from .commitment import verify_commitment
    c = package.commitment
    if package.public_inputs[commitment_public_index] != c.value:
        return False
    return verify_commitment(c, opening, field)
