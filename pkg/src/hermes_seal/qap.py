"""R1CS -> QAP transformation: Lagrange interpolation of constraint columns,
vanishing polynomial, and quotient computation.

Two interchangeable evaluation paths exist:

* a generic path for arbitrary distinct-point domains (schoolbook Lagrange
  interpolation and exact long division), and
* an NTT path for radix-2 multiplicative-subgroup domains, used by the
  prover at scale.

Both produce bit-identical results on the same domain; the quotient H(x) is
unique given the domain, so the fast path is a pure optimization.
"""

from __future__ import annotations

from .field import PrimeModulus, TEST_FIELD

__all__ = [
    "Polynomial",
    "EvaluationDomain",
    "QapInstance",
    "r1cs_to_qap",
    "vanishing_poly",
    "compute_quotient",
    "InvalidWitnessError",
]


class InvalidWitnessError(ValueError):
    """Witness does not satisfy the originating R1CS (nonzero remainder)."""


class Polynomial:
    """Dense polynomial over F_p, low-degree coefficient first."""

    __slots__ = ("coeffs", "field")

    def __init__(self, coeffs, field: PrimeModulus):
        p = field.p
        c = [x % p for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = c
        self.field = field

    @property
    def degree(self) -> int:
        """Degree, or -1 for the zero polynomial (the -inf sentinel)."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other):
        return (isinstance(other, Polynomial) and self.coeffs == other.coeffs
                and self.field.p == other.field.p)

    def __repr__(self):
        return f"Polynomial({self.coeffs})"

    def __add__(self, other: "Polynomial"):
        p = self.field.p
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, v in enumerate(b):
            out[i] = (out[i] + v) % p
        return Polynomial(out, self.field)

    def __sub__(self, other: "Polynomial"):
        return self + other.scaled(-1)

    def scaled(self, k: int):
        p = self.field.p
        return Polynomial([c * k % p for c in self.coeffs], self.field)

    def __mul__(self, other: "Polynomial"):
        if self.is_zero() or other.is_zero():
            return Polynomial([], self.field)
        p = self.field.p
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return Polynomial([v % p for v in out], self.field)

    def divmod(self, divisor: "Polynomial"):
        """Exact long division: (quotient, remainder), deg(rem) < deg(divisor)."""
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        p = self.field.p
        rem = list(self.coeffs)
        dlen = len(divisor.coeffs)
        lead_inv = pow(divisor.coeffs[-1], -1, p)
        quot = [0] * max(len(rem) - dlen + 1, 0)
        for i in range(len(rem) - dlen, -1, -1):
            factor = rem[i + dlen - 1] * lead_inv % p
            if factor:
                quot[i] = factor
                for j, d in enumerate(divisor.coeffs):
                    rem[i + j] = (rem[i + j] - factor * d) % p
        return Polynomial(quot, self.field), Polynomial(rem[:dlen - 1], self.field)

    def eval(self, x: int) -> int:
        p = self.field.p
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % p
        return acc


class EvaluationDomain:
    """Distinct interpolation points r_1..r_n; optionally a radix-2 subgroup."""

    def __init__(self, points, field: PrimeModulus):
        points = [x % field.p for x in points]
        if len(set(points)) != len(points):
            raise ValueError("evaluation domain points must be pairwise distinct")
        if not points:
            raise ValueError("empty evaluation domain")
        self.points = points
        self.field = field
        self.omega = None  # set for radix-2 subgroup domains

    def __len__(self):
        return len(self.points)

    @classmethod
    def radix2(cls, size: int, field: PrimeModulus = TEST_FIELD):
        """Multiplicative subgroup {1, w, ..., w^(size-1)} of power-of-two size."""
        omega = field.root_of_unity(size)
        p = field.p
        points = [1] * size
        for i in range(1, size):
            points[i] = points[i - 1] * omega % p
        dom = cls(points, field)
        dom.omega = omega
        return dom

    @classmethod
    def for_size(cls, n: int, field: PrimeModulus = TEST_FIELD):
        """Smallest radix-2 subgroup domain holding n constraints."""
        size = 1 << max(1, (n - 1).bit_length())
        return cls.radix2(size, field)

    # -- Lagrange machinery --------------------------------------------------

    def barycentric_weights(self):
        """w_i = 1 / prod_{j != i} (r_i - r_j); O(n) for subgroup domains."""
        p = self.field.p
        n = len(self.points)
        if self.omega is not None:
            # t(x) = x^n - 1, t'(w^i) = n * w^(-i); weight = w^i / n
            ninv = pow(n, -1, p)
            return [pt * ninv % p for pt in self.points]
        weights = []
        for i, ri in enumerate(self.points):
            prod = 1
            for j, rj in enumerate(self.points):
                if i != j:
                    prod = prod * (ri - rj) % p
            weights.append(pow(prod, -1, p))
        return weights

    def lagrange_at(self, x: int):
        """[L_1(x), ..., L_n(x)] for a point x off the domain."""
        p = self.field.p
        x %= p
        if x in set(self.points):
            return [1 if pt == x else 0 for pt in self.points]
        t_x = self.eval_vanishing(x)
        weights = self.barycentric_weights()
        return [t_x * w % p * pow(x - pt, -1, p) % p
                for w, pt in zip(weights, self.points)]

    def eval_vanishing(self, x: int) -> int:
        p = self.field.p
        if self.omega is not None:
            return (pow(x, len(self.points), p) - 1) % p
        acc = 1
        for pt in self.points:
            acc = acc * (x - pt) % p
        return acc

    def interpolate(self, values) -> Polynomial:
        """Unique polynomial of degree < n through (r_i, values_i)."""
        if len(values) != len(self.points):
            raise ValueError("value count must match domain size")
        if self.omega is not None:
            coeffs = _intt(list(values), self.omega, self.field.p)
            return Polynomial(coeffs, self.field)
        # Newton-free schoolbook: sum of v_i * w_i * t(x)/(x - r_i)
        p = self.field.p
        t = vanishing_poly(self)
        weights = self.barycentric_weights()
        acc = [0] * len(self.points)
        for ri, vi, wi in zip(self.points, values, weights):
            if vi:
                q, _ = t.divmod(Polynomial([-ri, 1], self.field))
                k = vi * wi % p
                for idx, c in enumerate(q.coeffs):
                    acc[idx] = (acc[idx] + k * c) % p
        return Polynomial(acc, self.field)


def _ntt(values, omega, p):
    """In-place iterative radix-2 NTT; returns the (bit-reverse ordered fixed) list."""
    n = len(values)
    # bit-reversal permutation
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            values[i], values[j] = values[j], values[i]
    length = 2
    while length <= n:
        w_len = pow(omega, n // length, p)
        half = length >> 1
        for start in range(0, n, length):
            w = 1
            for k in range(start, start + half):
                u = values[k]
                v = values[k + half] * w % p
                values[k] = (u + v) % p
                values[k + half] = (u - v) % p
                w = w * w_len % p
        length <<= 1
    return values


def _intt(values, omega, p):
    n = len(values)
    out = _ntt(values, pow(omega, -1, p), p)
    ninv = pow(n, -1, p)
    return [v * ninv % p for v in out]


def vanishing_poly(domain: EvaluationDomain) -> Polynomial:
    """Monic degree-n polynomial vanishing exactly on the domain."""
    field = domain.field
    if domain.omega is not None:
        coeffs = [0] * (len(domain.points) + 1)
        coeffs[0] = field.p - 1
        coeffs[-1] = 1
        return Polynomial(coeffs, field)
    acc = Polynomial([1], field)
    for pt in domain.points:
        acc = acc * Polynomial([-pt, 1], field)
    return acc


class QapInstance:
    """Per-wire polynomials {A_j}, {B_j}, {C_j}, vanishing t(x), and domain.

    Wire polynomials are materialized lazily: large circuits only ever need
    their evaluations at single points (trusted setup) or witness-weighted
    sums (proving), both of which have cheaper dedicated paths below.
    """

    def __init__(self, cs, domain: EvaluationDomain):
        if len(domain) != cs.n_constraints:
            raise ValueError(
                f"domain size {len(domain)} != constraint count {cs.n_constraints}")
        self.cs = cs
        self.domain = domain
        self.field = cs.field
        self.t = vanishing_poly(domain)
        self._wire_polys = None

    @property
    def n_constraints(self):
        return self.cs.n_constraints

    @property
    def n_wires(self):
        return self.cs.n_wires

    def _materialize(self):
        if self._wire_polys is not None:
            return self._wire_polys
        field = self.field
        p = field.p
        n = len(self.domain)
        m1 = self.cs.n_wires
        # dense Lagrange basis polynomials L_i(x) via synthetic division of t
        weights = self.domain.barycentric_weights()
        basis = []
        for ri, wi in zip(self.domain.points, weights):
            q, _ = self.t.divmod(Polynomial([-ri, 1], field))
            basis.append([c * wi % p for c in q.coeffs])
        cols = []
        for which in range(3):
            polys = [[0] * n for _ in range(m1)]
            for i, triple in enumerate(self.cs.rows):
                li = basis[i]
                for j, coeff in triple[which].items():
                    target = polys[j]
                    for idx, c in enumerate(li):
                        target[idx] = (target[idx] + coeff * c) % p
            cols.append([Polynomial(col, field) for col in polys])
        self._wire_polys = tuple(cols)
        return self._wire_polys

    @property
    def a_polys(self):
        return self._materialize()[0]

    @property
    def b_polys(self):
        return self._materialize()[1]

    @property
    def c_polys(self):
        return self._materialize()[2]

    def wire_evals_at(self, x: int):
        """([A_j(x)], [B_j(x)], [C_j(x)]) for all wires, via sparse accumulation."""
        p = self.field.p
        lagrange = self.domain.lagrange_at(x)
        m1 = self.cs.n_wires
        a_vals = [0] * m1
        b_vals = [0] * m1
        c_vals = [0] * m1
        for li, (a, b, c) in zip(lagrange, self.cs.rows):
            for j, coeff in a.items():
                a_vals[j] = (a_vals[j] + li * coeff) % p
            for j, coeff in b.items():
                b_vals[j] = (b_vals[j] + li * coeff) % p
            for j, coeff in c.items():
                c_vals[j] = (c_vals[j] + li * coeff) % p
        return a_vals, b_vals, c_vals

    def constraint_evaluations(self, witness):
        """(Aw, Bw, Cw) values on the domain: the sparse row inner products."""
        values = witness.values if hasattr(witness, "values") else witness
        p = self.field.p
        aw, bw, cw = [], [], []
        for a, b, c in self.cs.rows:
            aw.append(sum(values[j] * k for j, k in a.items()) % p)
            bw.append(sum(values[j] * k for j, k in b.items()) % p)
            cw.append(sum(values[j] * k for j, k in c.items()) % p)
        return aw, bw, cw


def r1cs_to_qap(cs, domain: EvaluationDomain) -> QapInstance:
    return QapInstance(cs, domain)


def compute_quotient(qap: QapInstance, witness) -> Polynomial:
    """H(x) with A(x)B(x) - C(x) = H(x) t(x) exactly; errors on a bad witness.

    deg(H) <= n - 2 whenever the witness satisfies the system.
    """
    p = qap.field.p
    aw, bw, cw = qap.constraint_evaluations(witness)
    for i, (a, b, c) in enumerate(zip(aw, bw, cw)):
        if a * b % p != c:
            raise InvalidWitnessError(f"witness violates constraint {i}")
    domain = qap.domain
    if domain.omega is not None:
        return _quotient_ntt(qap, aw, bw, cw)
    field = qap.field
    A = domain.interpolate(aw)
    B = domain.interpolate(bw)
    C = domain.interpolate(cw)
    numerator = A * B - C
    if numerator.is_zero():
        return Polynomial([], field)
    h, rem = numerator.divmod(qap.t)
    if not rem.is_zero():
        raise InvalidWitnessError("nonzero remainder dividing by the vanishing polynomial")
    return h


def _quotient_ntt(qap: QapInstance, aw, bw, cw) -> Polynomial:
    """Coset-NTT quotient: identical output to the schoolbook path."""
    field = qap.field
    p = field.p
    n = len(qap.domain)
    omega = qap.domain.omega
    a_coeff = _intt(list(aw), omega, p)
    b_coeff = _intt(list(bw), omega, p)
    c_coeff = _intt(list(cw), omega, p)
    size = 2 * n
    omega2 = field.root_of_unity(size)
    shift = field._generator  # coset representative off the subgroup
    # evaluate on the coset shift * <omega2>
    def coset_eval(coeffs):
        scaled = [0] * size
        g = 1
        for i, c in enumerate(coeffs):
            scaled[i] = c * g % p
            g = g * shift % p
        return _ntt(scaled, omega2, p)

    av = coset_eval(a_coeff)
    bv = coset_eval(b_coeff)
    cv = coset_eval(c_coeff)
    # t on the coset: (shift * omega2^i)^n - 1 = shift^n * (-1)^i - 1
    sn = pow(shift, n, p)
    t0_inv = pow(sn - 1, -1, p)
    t1_inv = pow(-sn - 1, -1, p)
    hv = [0] * size
    for i in range(size):
        tinv = t0_inv if i % 2 == 0 else t1_inv
        hv[i] = (av[i] * bv[i] - cv[i]) % p * tinv % p
    h_scaled = _intt(hv, omega2, p)
    ginv = pow(shift, -1, p)
    g = 1
    coeffs = [0] * size
    for i in range(size):
        coeffs[i] = h_scaled[i] * g % p
        g = g * ginv % p
    # degree bound: satisfied witnesses always give deg(H) <= n - 2
    for i in range(n - 1, size):
        if coeffs[i]:
            raise InvalidWitnessError("quotient degree bound exceeded")
    return Polynomial(coeffs[:n - 1], field)
