"""Bilinear group (G1, G2, GT) with a self-contained toy instantiation.

The toy curve is the supersingular curve y^2 = x^3 + x over F_p with
p = 36*q - 1 and p = 3 (mod 4), where q is the 62-bit "test" field prime.
E(F_p) has order p + 1 = 36*q, so the order-q subgroup exists with cofactor
36.  The embedding degree is 2: pairings land in F_{p^2} = F_p[i]/(i^2 + 1).
G2 is the image of the order-q subgroup under the distortion map
phi(x, y) = (-x, i*y); G2 elements store the preimage point over F_p and the
map is applied inside the pairing.  The modified Tate pairing
e(P, Q) = f_{q,P}(phi(Q))^((p^2-1)/q) is bilinear and non-degenerate here.

This instantiation is NOT cryptographically secure (64-bit discrete logs,
embedding degree 2); every serialized artifact carries the toy profile byte.
Internally points are affine int pairs; MSM and scalar multiplication use
Jacobian coordinates.
"""

from __future__ import annotations

from .field import FieldElement, PrimeModulus, TEST_FIELD

__all__ = [
    "BilinearGroup",
    "G1Element",
    "G2Element",
    "GtElement",
    "TOY_CURVE_PROFILE",
    "toy_group",
]

TOY_CURVE_PROFILE = 0x00  # profile byte: toy / insecure curve

_INF = None  # affine point at infinity sentinel


def _sqrt_3mod4(a: int, p: int):
    """Square root mod p for p = 3 (mod 4); None if a is a non-residue."""
    r = pow(a, (p + 1) // 4, p)
    return r if r * r % p == a else None


class _Curve:
    """Affine/Jacobian arithmetic on y^2 = x^3 + x over F_p (a = 1, b = 0)."""

    __slots__ = ("p",)

    def __init__(self, p: int):
        self.p = p

    def on_curve(self, pt) -> bool:
        if pt is _INF:
            return True
        x, y = pt
        p = self.p
        return y * y % p == (x * x % p * x + x) % p

    def neg(self, pt):
        if pt is _INF:
            return _INF
        x, y = pt
        return (x, (-y) % self.p)

    def add(self, a, b):
        if a is _INF:
            return b
        if b is _INF:
            return a
        p = self.p
        x1, y1 = a
        x2, y2 = b
        if x1 == x2:
            if (y1 + y2) % p == 0:
                return _INF
            lam = (3 * x1 * x1 + 1) * pow(2 * y1, -1, p) % p
        else:
            lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
        x3 = (lam * lam - x1 - x2) % p
        return (x3, (lam * (x1 - x3) - y1) % p)

    def scalar_mul(self, k: int, pt):
        """Double-and-add in Jacobian coordinates."""
        if pt is _INF or k == 0:
            return _INF
        if k < 0:
            raise ValueError("negative scalar")
        acc = self._jmul(k, pt)
        return self._to_affine(acc)

    # Jacobian helpers: points (X, Y, Z) with x = X/Z^2, y = Y/Z^3; Z = 0 at
    # infinity.  Curve coefficient a = 1 enters doubling as M = 3X^2 + Z^4.

    def _jdbl(self, pt):
        X, Y, Z = pt
        if Z == 0 or Y == 0:
            return (1, 1, 0)
        p = self.p
        YY = Y * Y % p
        S = 4 * X * YY % p
        ZZ = Z * Z % p
        M = (3 * X * X + ZZ * ZZ) % p
        X3 = (M * M - 2 * S) % p
        Y3 = (M * (S - X3) - 8 * YY * YY) % p
        Z3 = 2 * Y * Z % p
        return (X3, Y3, Z3)

    def _jadd_mixed(self, jac, aff):
        """jac (Jacobian) + aff (affine, not infinity)."""
        X1, Y1, Z1 = jac
        if Z1 == 0:
            return (aff[0], aff[1], 1)
        p = self.p
        x2, y2 = aff
        Z1Z1 = Z1 * Z1 % p
        U2 = x2 * Z1Z1 % p
        S2 = y2 * Z1 * Z1Z1 % p
        if U2 == X1:
            if S2 == Y1:
                return self._jdbl(jac)
            return (1, 1, 0)
        H = (U2 - X1) % p
        HH = H * H % p
        I = 4 * HH % p
        J = H * I % p
        r = 2 * (S2 - Y1) % p
        V = X1 * I % p
        X3 = (r * r - J - 2 * V) % p
        Y3 = (r * (V - X3) - 2 * Y1 * J) % p
        Z3 = 2 * Z1 * H % p
        return (X3, Y3, Z3)

    def _jadd(self, a, b):
        X1, Y1, Z1 = a
        X2, Y2, Z2 = b
        if Z1 == 0:
            return b
        if Z2 == 0:
            return a
        p = self.p
        Z1Z1 = Z1 * Z1 % p
        Z2Z2 = Z2 * Z2 % p
        U1 = X1 * Z2Z2 % p
        U2 = X2 * Z1Z1 % p
        S1 = Y1 * Z2 * Z2Z2 % p
        S2 = Y2 * Z1 * Z1Z1 % p
        if U1 == U2:
            if S1 == S2:
                return self._jdbl(a)
            return (1, 1, 0)
        H = (U2 - U1) % p
        HH = H * H % p
        I = 4 * HH % p
        J = H * I % p
        r = 2 * (S2 - S1) % p
        V = U1 * I % p
        X3 = (r * r - J - 2 * V) % p
        Y3 = (r * (V - X3) - 2 * S1 * J) % p
        Z3 = 2 * Z1 * Z2 % p * H % p
        return (X3, Y3, Z3)

    def _jmul(self, k: int, aff):
        acc = (1, 1, 0)
        for bit in bin(k)[2:]:
            acc = self._jdbl(acc)
            if bit == "1":
                acc = self._jadd_mixed(acc, aff)
        return acc

    def _to_affine(self, jac):
        X, Y, Z = jac
        if Z == 0:
            return _INF
        p = self.p
        zinv = pow(Z, -1, p)
        z2 = zinv * zinv % p
        return (X * z2 % p, Y * z2 % p * zinv % p)

    def msm(self, scalars, points):
        """Pippenger multi-scalar multiplication over affine points."""
        pairs = [(s, pt) for s, pt in zip(scalars, points) if s and pt is not _INF]
        if not pairs:
            return _INF
        if len(pairs) == 1:
            return self.scalar_mul(pairs[0][0], pairs[0][1])
        c = 8 if len(pairs) >= 32 else 4
        max_bits = max(s.bit_length() for s, _ in pairs)
        windows = (max_bits + c - 1) // c
        mask = (1 << c) - 1
        total = (1, 1, 0)
        jadd = self._jadd
        jadd_mixed = self._jadd_mixed
        jdbl = self._jdbl
        for w in range(windows - 1, -1, -1):
            shift = w * c
            if total[2] != 0:
                for _ in range(c):
                    total = jdbl(total)
            buckets = [None] * (mask + 1)
            for s, pt in pairs:
                idx = (s >> shift) & mask
                if idx:
                    cur = buckets[idx]
                    buckets[idx] = (pt[0], pt[1], 1) if cur is None else jadd_mixed(cur, pt)
            running = (1, 1, 0)
            window_sum = (1, 1, 0)
            for idx in range(mask, 0, -1):
                b = buckets[idx]
                if b is not None:
                    running = jadd(running, b)
                if running[2] != 0:
                    window_sum = jadd(window_sum, running)
            total = jadd(total, window_sum)
        return self._to_affine(total)


class _Fp2:
    """F_{p^2} = F_p[i]/(i^2+1) arithmetic on (real, imag) int pairs."""

    __slots__ = ("p",)

    def __init__(self, p: int):
        self.p = p

    def mul(self, a, b):
        p = self.p
        a0, a1 = a
        b0, b1 = b
        return ((a0 * b0 - a1 * b1) % p, (a0 * b1 + a1 * b0) % p)

    def square(self, a):
        p = self.p
        a0, a1 = a
        return ((a0 + a1) * (a0 - a1) % p, 2 * a0 * a1 % p)

    def pow(self, a, e: int):
        result = (1, 0)
        base = a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.square(base)
            e >>= 1
        return result

    def inv(self, a):
        p = self.p
        a0, a1 = a
        norm = (a0 * a0 + a1 * a1) % p
        ninv = pow(norm, -1, p)
        return (a0 * ninv % p, (-a1) * ninv % p)


class G1Element:
    """Point in the order-q subgroup of the toy curve (or the identity)."""

    __slots__ = ("point", "group")

    def __init__(self, point, group: "BilinearGroup"):
        self.point = point
        self.group = group

    def __add__(self, other):
        if not isinstance(other, G1Element):
            return NotImplemented
        return G1Element(self.group.curve.add(self.point, other.point), self.group)

    def __neg__(self):
        return G1Element(self.group.curve.neg(self.point), self.group)

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        return isinstance(other, G1Element) and self.point == other.point

    def __hash__(self):
        return hash(("G1", self.point))

    def is_identity(self) -> bool:
        return self.point is _INF

    def __repr__(self):
        return f"G1({self.point})"


class G2Element:
    """Order-q point represented by its preimage under the distortion map."""

    __slots__ = ("point", "group")

    def __init__(self, point, group: "BilinearGroup"):
        self.point = point
        self.group = group

    def __add__(self, other):
        if not isinstance(other, G2Element):
            return NotImplemented
        return G2Element(self.group.curve.add(self.point, other.point), self.group)

    def __neg__(self):
        return G2Element(self.group.curve.neg(self.point), self.group)

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        return isinstance(other, G2Element) and self.point == other.point

    def __hash__(self):
        return hash(("G2", self.point))

    def is_identity(self) -> bool:
        return self.point is _INF

    def __repr__(self):
        return f"G2({self.point})"


class GtElement:
    """Element of the order-q subgroup of F_{p^2}^*."""

    __slots__ = ("value", "group")

    def __init__(self, value, group: "BilinearGroup"):
        self.value = value
        self.group = group

    def __mul__(self, other):
        if not isinstance(other, GtElement):
            return NotImplemented
        return GtElement(self.group.fp2.mul(self.value, other.value), self.group)

    def __pow__(self, e: int):
        e %= self.group.scalar_field.p
        return GtElement(self.group.fp2.pow(self.value, e), self.group)

    def inv(self):
        return GtElement(self.group.fp2.inv(self.value), self.group)

    def __eq__(self, other):
        return isinstance(other, GtElement) and self.value == other.value

    def __hash__(self):
        return hash(("GT", self.value))

    def is_identity(self) -> bool:
        return self.value == (1, 0)

    def __repr__(self):
        return f"Gt({self.value})"


class BilinearGroup:
    """Toy bilinear group triple with generators, MSM, and the pairing map."""

    def __init__(self, scalar_field: PrimeModulus = TEST_FIELD, cofactor: int = 36):
        self.scalar_field = scalar_field
        self.q = scalar_field.p
        self.cofactor = cofactor
        self.p = cofactor * self.q - 1
        if self.p % 4 != 3:
            raise ValueError("toy curve needs p = 3 (mod 4)")
        self.curve = _Curve(self.p)
        self.fp2 = _Fp2(self.p)
        self.coord_bytes = (self.p.bit_length() + 7) // 8
        self.g1 = G1Element(self._find_generator(start_x=1), self)
        self.g2 = G2Element(self._find_generator(start_x=self.g1.point[0] + 1), self)
        self._final_exp = (self.p * self.p - 1) // self.q
        self.gt_generator = self.pair(self.g1, self.g2)
        if self.gt_generator.is_identity():
            raise ValueError("degenerate pairing on generators")

    def _find_generator(self, start_x: int):
        p = self.p
        x = start_x
        while True:
            rhs = (x * x % p * x + x) % p
            y = _sqrt_3mod4(rhs, p)
            if y is not None:
                pt = self.curve.scalar_mul(self.cofactor, (x, min(y, p - y)))
                if pt is not _INF:
                    return pt
            x += 1

    # -- group operations ---------------------------------------------------

    def _scalar_int(self, s) -> int:
        if isinstance(s, FieldElement):
            return s.value
        return s % self.q

    def scalar_mul_g1(self, s, P: G1Element) -> G1Element:
        return G1Element(self.curve.scalar_mul(self._scalar_int(s), P.point), self)

    def scalar_mul_g2(self, s, Q: G2Element) -> G2Element:
        return G2Element(self.curve.scalar_mul(self._scalar_int(s), Q.point), self)

    def identity_g1(self) -> G1Element:
        return G1Element(_INF, self)

    def identity_g2(self) -> G2Element:
        return G2Element(_INF, self)

    def identity_gt(self) -> GtElement:
        return GtElement((1, 0), self)

    def multi_scalar_mul(self, scalars, points):
        """MSM over a homogeneous list of G1 or G2 elements."""
        if len(scalars) != len(points):
            raise ValueError("scalar/point length mismatch")
        if not points:
            return self.identity_g1()
        cls = type(points[0])
        if any(type(pt) is not cls for pt in points):
            raise ValueError("mixed G1/G2 points in MSM")
        raw = self.curve.msm([self._scalar_int(s) for s in scalars],
                             [pt.point for pt in points])
        return cls(raw, self)

    def in_subgroup_g1(self, P: G1Element) -> bool:
        return self.curve.on_curve(P.point) and \
            self.curve.scalar_mul(self.q, P.point) is _INF

    def in_subgroup_g2(self, Q: G2Element) -> bool:
        return self.curve.on_curve(Q.point) and \
            self.curve.scalar_mul(self.q, Q.point) is _INF

    # -- pairing ------------------------------------------------------------

    def pair(self, P: G1Element, Q: G2Element) -> GtElement:
        """Modified Tate pairing e(P, phi(Q)) with denominator elimination.

        Vertical-line denominators are pure F_p values, killed by the final
        exponentiation (p^2-1)/q = 36*(p-1), so they are dropped from the
        Miller loop.
        """
        if P.point is _INF or Q.point is _INF:
            return self.identity_gt()
        p = self.p
        xq, yq = Q.point
        # phi(Q) = (-xq, i*yq): lines through F_p points evaluate there to
        # (lam*(xq + x_T) - y_T) + i*yq.
        f = (1, 0)
        fsq = self.fp2.square
        T = P.point
        xp, yp = P.point
        for bit in bin(self.q)[3:]:
            xt, yt = T
            f = fsq(f)
            if yt == 0:
                # tangent is vertical: contributes an F_p factor, eliminated
                T = _INF
            else:
                lam = (3 * xt * xt + 1) * pow(2 * yt, -1, p) % p
                a0 = (lam * (xq + xt) - yt) % p
                f = ((f[0] * a0 - f[1] * yq) % p, (f[0] * yq + f[1] * a0) % p)
                x3 = (lam * lam - 2 * xt) % p
                T = (x3, (lam * (xt - x3) - yt) % p)
            if bit == "1":
                if T is _INF:
                    T = P.point
                else:
                    xt, yt = T
                    if xt == xp:
                        # T = -P (or P with doubling handled above): vertical
                        T = self.curve.add(T, P.point)
                    else:
                        lam = (yp - yt) * pow(xp - xt, -1, p) % p
                        a0 = (lam * (xq + xt) - yt) % p
                        f = ((f[0] * a0 - f[1] * yq) % p,
                             (f[0] * yq + f[1] * a0) % p)
                        x3 = (lam * lam - xt - xp) % p
                        T = (x3, (lam * (xt - x3) - yt) % p)
        return GtElement(self.fp2.pow(f, self._final_exp), self)

    # -- serialization ------------------------------------------------------

    def _point_to_bytes(self, point) -> bytes:
        w = self.coord_bytes
        if point is _INF:
            return b"\x00" + b"\x00" * (2 * w)
        x, y = point
        return b"\x01" + x.to_bytes(w, "little") + y.to_bytes(w, "little")

    def _point_from_bytes(self, data: bytes):
        w = self.coord_bytes
        if len(data) != 1 + 2 * w:
            raise ValueError(f"point encoding must be {1 + 2 * w} bytes")
        flag = data[0]
        if flag == 0:
            if any(data[1:]):
                raise ValueError("nonzero coordinates on infinity encoding")
            return _INF
        if flag != 1:
            raise ValueError(f"bad point flag byte {flag:#x}")
        x = int.from_bytes(data[1:1 + w], "little")
        y = int.from_bytes(data[1 + w:], "little")
        if x >= self.p or y >= self.p:
            raise ValueError("point coordinate out of field range")
        pt = (x, y)
        if not self.curve.on_curve(pt):
            raise ValueError("point not on curve")
        return pt

    @property
    def point_bytes(self) -> int:
        return 1 + 2 * self.coord_bytes

    def g1_to_bytes(self, P: G1Element) -> bytes:
        return self._point_to_bytes(P.point)

    def g1_from_bytes(self, data: bytes) -> G1Element:
        return G1Element(self._point_from_bytes(data), self)

    def g2_to_bytes(self, Q: G2Element) -> bytes:
        return self._point_to_bytes(Q.point)

    def g2_from_bytes(self, data: bytes) -> G2Element:
        return G2Element(self._point_from_bytes(data), self)


_toy_group_cache = None


def toy_group() -> BilinearGroup:
    """The shared toy instantiation (construction is moderately expensive)."""
    global _toy_group_cache
    if _toy_group_cache is None:
        _toy_group_cache = BilinearGroup()
    return _toy_group_cache
