"""Prime-field arithmetic, real<->field scaling, and canonical tagged byte encodings.

The field layer is the universal value type of the toolkit: circuit wires,
sponge states, commitments and signature scalars are all elements of one of
the two field profiles defined here.
"""

from __future__ import annotations

import enum
import math

__all__ = [
    "PrimeModulus",
    "FieldElement",
    "ScalingFactor",
    "DTypeTag",
    "TEST_FIELD",
    "STANDARD_FIELD",
    "FIELD_PROFILES",
    "scale",
    "unscale",
    "encode",
    "decode",
    "EncodingError",
]


class EncodingError(ValueError):
    """Raised when encode/decode receives malformed input for a tag."""


class PrimeModulus:
    """Description of a prime field F_p: the modulus plus derived constants."""

    __slots__ = ("name", "p", "byte_width", "two_adicity", "_odd_part", "_generator")

    def __init__(self, name: str, p: int, generator: int):
        self.name = name
        self.p = p
        self.byte_width = (p.bit_length() + 7) // 8
        odd, s = p - 1, 0
        while odd % 2 == 0:
            odd //= 2
            s += 1
        self.two_adicity = s
        self._odd_part = odd
        self._generator = generator  # multiplicative generator of F_p^*

    def __repr__(self):
        return f"PrimeModulus({self.name}, {self.p.bit_length()}-bit)"

    def __eq__(self, other):
        return isinstance(other, PrimeModulus) and self.p == other.p

    def __hash__(self):
        return hash(self.p)

    def element(self, value: int) -> "FieldElement":
        return FieldElement(value % self.p, self)

    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    def one(self) -> "FieldElement":
        return FieldElement(1, self)

    def root_of_unity(self, order: int) -> int:
        """Primitive root of unity of the given power-of-two order, as an int."""
        if order & (order - 1) or order == 0:
            raise ValueError("order must be a power of two")
        if order > (1 << self.two_adicity):
            raise ValueError(f"field {self.name} has 2-adicity {self.two_adicity}, "
                             f"cannot supply order-{order} roots")
        root = pow(self._generator, self._odd_part, self.p)
        size = 1 << self.two_adicity
        while size > order:
            root = root * root % self.p
            size //= 2
        return root


# "test" profile: 62-bit prime with 2-adicity 32, q % 3 == 2 so x^3 is a
# permutation (sponge S-box), and 36*q - 1 is prime (toy pairing curve).
TEST_FIELD = PrimeModulus("test", 2305843327041273857, 3)

# "standard" profile: the 254-bit scalar field of the BN254 curve family.
STANDARD_FIELD = PrimeModulus(
    "standard",
    21888242871839275222246405745257275088548364400416034343698204186575808495617,
    5,
)

FIELD_PROFILES = {"test": TEST_FIELD, "standard": STANDARD_FIELD}


class FieldElement:
    """Element of F_p with eager reduction; arithmetic closed over one modulus."""

    __slots__ = ("value", "modulus")

    def __init__(self, value: int, modulus: PrimeModulus):
        if not 0 <= value < modulus.p:
            value %= modulus.p
        self.value = value
        self.modulus = modulus

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus.p != self.modulus.p:
                raise ValueError("mixed-modulus field arithmetic")
            return other.value
        if isinstance(other, int):
            return other % self.modulus.p
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement((self.value + v) % self.modulus.p, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement((self.value - v) % self.modulus.p, self.modulus)

    def __rsub__(self, other):
        v = self._coerce(other)
        return FieldElement((v - self.value) % self.modulus.p, self.modulus)

    def __mul__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.value * v % self.modulus.p, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.modulus.p, self.modulus)

    def __pow__(self, exponent: int):
        return FieldElement(pow(self.value, exponent, self.modulus.p), self.modulus)

    def inv(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("inverse of zero field element")
        return FieldElement(pow(self.value, -1, self.modulus.p), self.modulus)

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return self * FieldElement(v, self.modulus).inv()

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.value == other.value and self.modulus.p == other.modulus.p
        if isinstance(other, int):
            return self.value == other % self.modulus.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.modulus.p))

    def __repr__(self):
        return f"Fp({self.value})"

    def __bool__(self):
        return self.value != 0

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(self.modulus.byte_width, "little")


class ScalingFactor:
    """Positive integer scaling factor for the real<->field quantization maps."""

    __slots__ = ("rho",)

    def __init__(self, rho: int):
        if not isinstance(rho, int) or rho < 1:
            raise ValueError("scaling factor must be a positive integer")
        self.rho = rho

    def __repr__(self):
        return f"ScalingFactor({self.rho})"


def _rho_of(rho) -> int:
    if isinstance(rho, ScalingFactor):
        return rho.rho
    if isinstance(rho, int) and rho >= 1:
        return rho
    raise ValueError("scaling factor must be a positive integer")


def scale(x: float, rho, field: PrimeModulus = TEST_FIELD) -> FieldElement:
    """Quantize a real to F_p: floor(x * rho) mod p.

    Caller must keep |floor(x*rho)| < p/2 or the signed roundtrip breaks.
    Negative reals land in the upper half of the field.
    """
    if not math.isfinite(x):
        raise ValueError(f"cannot scale non-finite value {x!r}")
    r = _rho_of(rho)
    return FieldElement(math.floor(x * r) % field.p, field)


def unscale(z: FieldElement, rho) -> float:
    """Inverse of scale: z/rho for the lower half of the field, (z-p)/rho above."""
    r = _rho_of(rho)
    p = z.modulus.p
    signed = z.value if z.value <= (p - 1) // 2 else z.value - p
    return signed / r


class DTypeTag(enum.Enum):
    """Datatype tags selecting the canonical serialization rule."""

    CTX = "CTX"
    R1CS = "R1CS"
    VK = "VK"
    CERT = "CERT"
    PROOF = "PROOF"
    COMMIT = "COMMIT"
    TS = "TS"
    NONCE = "NONCE"


# Fixed-width rules.  The wire format is little-endian throughout; widths are
# part of this artifact's contract (CTX 4 bytes, TS 8 bytes, NONCE 16 bytes,
# COMMIT one field element).  The blob tags carry already-serialized binary
# sections unchanged.
_INT_WIDTHS = {DTypeTag.CTX: 4, DTypeTag.TS: 8}
_BLOB_TAGS = frozenset({DTypeTag.R1CS, DTypeTag.VK, DTypeTag.CERT, DTypeTag.PROOF})
NONCE_BYTES = 16


def encode(value, dtype: DTypeTag, field: PrimeModulus = TEST_FIELD) -> bytes:
    """Canonical byte encoding of a value under a datatype tag.

    Deterministic and injective per tag over the tag's declared domain.
    """
    if dtype in _INT_WIDTHS:
        if not isinstance(value, int) or isinstance(value, bool):
            raise EncodingError(f"{dtype.value} encodes integers, got {type(value).__name__}")
        width = _INT_WIDTHS[dtype]
        if not 0 <= value < 1 << (8 * width):
            raise EncodingError(f"{dtype.value} value {value} out of {width}-byte range")
        return value.to_bytes(width, "little")
    if dtype is DTypeTag.NONCE:
        if not isinstance(value, (bytes, bytearray)) or len(value) != NONCE_BYTES:
            raise EncodingError(f"NONCE encodes exactly {NONCE_BYTES} raw bytes")
        return bytes(value)
    if dtype is DTypeTag.COMMIT:
        if not isinstance(value, FieldElement):
            raise EncodingError("COMMIT encodes a field element")
        return value.to_bytes()
    if dtype in _BLOB_TAGS:
        if not isinstance(value, (bytes, bytearray)):
            raise EncodingError(f"{dtype.value} encodes raw bytes")
        return bytes(value)
    raise EncodingError(f"unknown dtype tag {dtype!r}")


def decode(data: bytes, dtype: DTypeTag, field: PrimeModulus = TEST_FIELD):
    """Exact inverse of encode for the same tag; rejects malformed buffers."""
    if not isinstance(data, (bytes, bytearray)):
        raise EncodingError("decode expects bytes")
    data = bytes(data)
    if dtype in _INT_WIDTHS:
        width = _INT_WIDTHS[dtype]
        if len(data) != width:
            raise EncodingError(f"{dtype.value} expects {width} bytes, got {len(data)}")
        return int.from_bytes(data, "little")
    if dtype is DTypeTag.NONCE:
        if len(data) != NONCE_BYTES:
            raise EncodingError(f"NONCE expects {NONCE_BYTES} bytes, got {len(data)}")
        return data
    if dtype is DTypeTag.COMMIT:
        if len(data) != field.byte_width:
            raise EncodingError(f"COMMIT expects {field.byte_width} bytes, got {len(data)}")
        v = int.from_bytes(data, "little")
        if v >= field.p:
            raise EncodingError("COMMIT bytes encode a value outside the field")
        return FieldElement(v, field)
    if dtype in _BLOB_TAGS:
        return data
    raise EncodingError(f"unknown dtype tag {dtype!r}")
