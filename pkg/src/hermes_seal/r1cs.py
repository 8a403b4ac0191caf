"""Rank-1 constraint system builder, gadget library, and witness generation.

A circuit is built against a `CircuitBuilder`: allocate input wires, call
gadgets (which add constraints plus solver hooks for their internal wires),
then `finalize()` into an immutable `ConstraintSystem`.  Finalization
reorders wires so the constant-one wire is index 0, public wires occupy
1..l, and private wires l+1..m; Groth16's public-input slice is then simply
a witness prefix.

Hint wires (inverse trick, bit decompositions) are solver-provided and
constraint-verified; the constraint system never trusts a solver.
"""

from __future__ import annotations

import hashlib
import struct
import warnings

from .field import PrimeModulus, TEST_FIELD

__all__ = [
    "Wire",
    "LinearCombination",
    "CircuitBuilder",
    "ConstraintSystem",
    "Witness",
    "R1csError",
    "UnsatisfiableError",
    "MissingInputError",
    "R1CS_MAGIC",
    "pad_to_power_of_two",
]

R1CS_MAGIC = b"HSR1"
R1CS_VERSION = 1


class R1csError(Exception):
    pass


class MissingInputError(R1csError):
    pass


class UnsatisfiableError(R1csError):
    pass


class Wire:
    """Handle to a circuit wire; `index` is provisional until finalization."""

    __slots__ = ("index", "visibility", "label")

    def __init__(self, index: int, visibility: str, label: str):
        self.index = index
        self.visibility = visibility
        self.label = label

    def __repr__(self):
        return f"Wire({self.index}, {self.visibility}, {self.label!r})"


class LinearCombination:
    """Sparse sum of coefficient*wire terms over builder wire indices."""

    __slots__ = ("terms", "p")

    def __init__(self, terms: dict, p: int):
        self.terms = {i: c for i, c in terms.items() if c % p}
        for i in self.terms:
            self.terms[i] %= p
        self.p = p

    def __add__(self, other: "LinearCombination"):
        merged = dict(self.terms)
        for i, c in other.terms.items():
            merged[i] = merged.get(i, 0) + c
        return LinearCombination(merged, self.p)

    def __sub__(self, other: "LinearCombination"):
        merged = dict(self.terms)
        for i, c in other.terms.items():
            merged[i] = merged.get(i, 0) - c
        return LinearCombination(merged, self.p)

    def scaled(self, k: int) -> "LinearCombination":
        return LinearCombination({i: c * k for i, c in self.terms.items()}, self.p)

    def is_zero(self) -> bool:
        return not self.terms


class Witness:
    """Dense assignment vector; w[0] is always the constant 1."""

    __slots__ = ("values", "field")

    def __init__(self, values, field: PrimeModulus):
        if not values or values[0] != 1:
            raise R1csError("witness must start with the constant-one entry")
        self.values = list(values)
        self.field = field

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


class ConstraintSystem:
    """Finalized immutable R1CS with witness-generation solvers attached."""

    def __init__(self, field, rows, n_wires, n_public, labels, perm, solvers,
                 input_wires, row_labels):
        self.field = field
        self.rows = rows            # list of (a, b, c) dicts: final index -> coeff
        self.n_wires = n_wires      # m + 1 including the constant wire
        self.n_public = n_public    # l
        self.labels = labels        # final index -> label
        self._perm = perm           # provisional index -> final index
        self._solvers = solvers     # [(target provisional idxs, fn)]
        self._input_wires = input_wires  # [Wire] (provisional handles)
        self.row_labels = row_labels

    @property
    def n_constraints(self) -> int:
        return len(self.rows)

    def wire_index(self, wire: Wire) -> int:
        return self._perm[wire.index]

    def is_satisfied(self, witness) -> bool:
        ok, _ = self.check(witness)
        return ok

    def check(self, witness):
        """(satisfied, first_failing_row_or_None)."""
        values = witness.values if isinstance(witness, Witness) else witness
        if len(values) != self.n_wires:
            raise R1csError(f"witness length {len(values)} != wire count {self.n_wires}")
        p = self.field.p
        for i, (a, b, c) in enumerate(self.rows):
            av = sum(values[j] * k for j, k in a.items()) % p
            bv = sum(values[j] * k for j, k in b.items()) % p
            cv = sum(values[j] * k for j, k in c.items()) % p
            if av * bv % p != cv:
                return False, i
        return True, None

    def generate_witness(self, assignments: dict) -> Witness:
        """Solve all wires from the input assignment; error if unsolvable.

        `assignments` maps input Wire handles to int/field values.  The
        returned witness always satisfies the system (verified before
        returning).
        """
        p = self.field.p
        prov = [None] * self.n_wires
        prov[0] = 1
        assigned = {}
        for wire, value in assignments.items():
            if not isinstance(wire, Wire):
                raise MissingInputError(f"assignment key {wire!r} is not a Wire")
            v = value.value if hasattr(value, "value") else int(value)
            assigned[wire.index] = v % p
        for wire in self._input_wires:
            if wire.index not in assigned:
                raise MissingInputError(f"missing assignment for input wire {wire.label!r}")
            prov[wire.index] = assigned[wire.index]
        for targets, fn in self._solvers:
            fn(prov)
            for t in targets:
                if prov[t] is None:
                    raise R1csError(f"solver failed to assign wire {t}")
        for i, v in enumerate(prov):
            if v is None:
                raise R1csError(f"wire {i} left unassigned after solving")
        final = [0] * self.n_wires
        for i, v in enumerate(prov):
            final[self._perm[i]] = v
        witness = Witness(final, self.field)
        ok, row = self.check(witness)
        if not ok:
            label = self.row_labels[row] or f"row {row}"
            raise UnsatisfiableError(
                f"generated witness violates constraint {row} ({label})")
        return witness

    def public_inputs(self, witness) -> list:
        values = witness.values if isinstance(witness, Witness) else witness
        return values[1:1 + self.n_public]

    # -- serialization ------------------------------------------------------

    def to_bytes(self) -> bytes:
        """Canonical binary encoding; its SHA-256 is the circuit hash."""
        out = [R1CS_MAGIC, bytes([R1CS_VERSION]),
               struct.pack("<III", self.n_constraints, self.n_wires, self.n_public)]
        width = self.field.byte_width
        for a, b, c in self.rows:
            for row in (a, b, c):
                items = sorted(row.items())
                out.append(struct.pack("<I", len(items)))
                for j, coeff in items:
                    out.append(struct.pack("<I", j))
                    out.append(coeff.to_bytes(width, "little"))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, field: PrimeModulus):
        if data[:4] != R1CS_MAGIC:
            raise R1csError("bad R1CS magic")
        if data[4] != R1CS_VERSION:
            raise R1csError(f"unsupported R1CS version {data[4]}")
        n, n_wires, n_public = struct.unpack_from("<III", data, 5)
        off = 17
        width = field.byte_width
        rows = []
        for _ in range(n):
            triple = []
            for _ in range(3):
                (count,) = struct.unpack_from("<I", data, off)
                off += 4
                row = {}
                for _ in range(count):
                    (j,) = struct.unpack_from("<I", data, off)
                    off += 4
                    coeff = int.from_bytes(data[off:off + width], "little")
                    if coeff >= field.p:
                        raise R1csError("coefficient out of field range")
                    off += width
                    row[j] = coeff
                triple.append(row)
            rows.append(tuple(triple))
        if off != len(data):
            raise R1csError("trailing bytes in R1CS encoding")
        return cls(field, rows, n_wires, n_public, [None] * n_wires,
                   list(range(n_wires)), [], [], [None] * n)

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()


def pad_to_power_of_two(cs: ConstraintSystem) -> ConstraintSystem:
    """Pad with trivial 0*0=0 rows up to the next power of two (NTT domains).

    Padding rows are satisfied by every witness, so solvers, wire layout,
    and the public-input slice are unchanged.
    """
    n = cs.n_constraints
    size = 1 << max(1, (n - 1).bit_length())
    if size == n:
        return cs
    rows = list(cs.rows) + [({}, {}, {})] * (size - n)
    labels = list(cs.row_labels) + [None] * (size - n)
    return ConstraintSystem(cs.field, rows, cs.n_wires, cs.n_public,
                            cs.labels, cs._perm, cs._solvers,
                            cs._input_wires, labels)


class CircuitBuilder:
    """Mutable builder; single-threaded; frozen by finalize()."""

    def __init__(self, field: PrimeModulus = TEST_FIELD):
        self.field = field
        self.p = field.p
        self._wires = [Wire(0, "constant_one", "one")]
        self._constraints = []      # (a_terms, b_terms, c_terms, label)
        self._solvers = []
        self._input_wires = []
        self._labels_seen = set()
        self._finalized = False
        self._gadget_constraint_log = {}

    # -- allocation ---------------------------------------------------------

    def _alloc(self, visibility: str, label: str, is_input: bool) -> Wire:
        if self._finalized:
            raise R1csError("cannot allocate wires after finalize()")
        if label in self._labels_seen:
            warnings.warn(f"duplicate wire label {label!r} (labels are debug-only)")
        self._labels_seen.add(label)
        wire = Wire(len(self._wires), visibility, label)
        self._wires.append(wire)
        if is_input:
            self._input_wires.append(wire)
        return wire

    def alloc_public(self, label: str) -> Wire:
        return self._alloc("public", label, is_input=True)

    def alloc_private(self, label: str) -> Wire:
        return self._alloc("private", label, is_input=True)

    def alloc_internal(self, label: str) -> Wire:
        """Private wire whose value a gadget solver supplies."""
        return self._alloc("private", label, is_input=False)

    @property
    def one(self) -> Wire:
        return self._wires[0]

    # -- linear combinations ------------------------------------------------

    def lc(self, *terms) -> LinearCombination:
        """Build an LC from Wire, int, (Wire, coeff) or LinearCombination terms."""
        acc = {}
        for t in terms:
            if isinstance(t, LinearCombination):
                for i, c in t.terms.items():
                    acc[i] = acc.get(i, 0) + c
            elif isinstance(t, Wire):
                acc[t.index] = acc.get(t.index, 0) + 1
            elif isinstance(t, int):
                acc[0] = acc.get(0, 0) + t
            elif isinstance(t, tuple) and len(t) == 2 and isinstance(t[0], Wire):
                acc[t[0].index] = acc.get(t[0].index, 0) + t[1]
            else:
                raise R1csError(f"cannot build linear combination from {t!r}")
        return LinearCombination(acc, self.p)

    def _as_lc(self, x) -> LinearCombination:
        return x if isinstance(x, LinearCombination) else self.lc(x)

    # -- constraints --------------------------------------------------------

    def enforce(self, a, b, c, label: str = None):
        """Append the row <a,w> * <b,w> = <c,w>."""
        if self._finalized:
            raise R1csError("cannot add constraints after finalize()")
        a, b, c = self._as_lc(a), self._as_lc(b), self._as_lc(c)
        for lc in (a, b, c):
            for i in lc.terms:
                if i >= len(self._wires):
                    raise R1csError(f"constraint references unallocated wire {i}")
        self._constraints.append((a.terms, b.terms, c.terms, label))

    def assert_equal(self, a, b, label: str = None):
        self.enforce(self._as_lc(a) - self._as_lc(b), self.lc(1), self.lc(0),
                     label or "assert_equal")

    def assert_bool(self, x, label: str = None):
        lc = self._as_lc(x)
        self.enforce(lc, lc - self.lc(1), self.lc(0), label or "assert_bool")

    def add_solver(self, targets, fn):
        """Register a hint solver; runs in registration order on the dense vector."""
        self._solvers.append(([w.index for w in targets], fn))

    # -- gadgets ------------------------------------------------------------

    def gadget_mul(self, x, y, label: str = "mul") -> Wire:
        xl, yl = self._as_lc(x), self._as_lc(y)
        out = self.alloc_internal(label)
        self.enforce(xl, yl, out, label)
        p = self.p
        xt, yt, oi = dict(xl.terms), dict(yl.terms), out.index

        def solve(v, xt=xt, yt=yt, oi=oi, p=p):
            v[oi] = (sum(v[j] * k for j, k in xt.items())
                     * sum(v[j] * k for j, k in yt.items())) % p
        self.add_solver([out], solve)
        return out

    def gadget_is_zero(self, x, label: str = "is_zero") -> Wire:
        """Boolean wire: 1 iff <x,w> == 0, via the inverse-or-zero hint."""
        xl = self._as_lc(x)
        out = self.alloc_internal(f"{label}.out")
        inv = self.alloc_internal(f"{label}.inv")
        # x * inv = 1 - out ; x * out = 0
        self.enforce(xl, self.lc(inv), self.lc(1) - self.lc(out), f"{label}.inv_trick")
        self.enforce(xl, self.lc(out), self.lc(0), f"{label}.zero_out")
        p = self.p
        xt = dict(xl.terms)

        def solve(v, xt=xt, oi=out.index, ii=inv.index, p=p):
            xv = sum(v[j] * k for j, k in xt.items()) % p
            if xv == 0:
                v[oi], v[ii] = 1, 0
            else:
                v[oi], v[ii] = 0, pow(xv, -1, p)
        self.add_solver([out, inv], solve)
        return out

    def gadget_is_equal(self, x, y, label: str = "is_equal") -> Wire:
        return self.gadget_is_zero(self._as_lc(x) - self._as_lc(y), label)

    def gadget_bit_decompose(self, x, bits: int, label: str = "bits"):
        """Bit wires (low first), each boolean, with the recomposition row.

        Unsatisfiable at witness time if <x,w> >= 2^bits.
        """
        if bits < 1 or bits > self.p.bit_length() - 2:
            raise R1csError(f"bit width {bits} out of range for field")
        xl = self._as_lc(x)
        bit_wires = [self.alloc_internal(f"{label}.b{i}") for i in range(bits)]
        for w in bit_wires:
            self.assert_bool(w, f"{label}.bool{w.label[-2:]}")
        recomposed = LinearCombination(
            {w.index: 1 << i for i, w in enumerate(bit_wires)}, self.p)
        self.assert_equal(recomposed, xl, f"{label}.recompose")
        p = self.p
        xt = dict(xl.terms)
        idxs = [w.index for w in bit_wires]

        def solve(v, xt=xt, idxs=idxs, p=p):
            xv = sum(v[j] * k for j, k in xt.items()) % p
            for i, wi in enumerate(idxs):
                v[wi] = (xv >> i) & 1
        self.add_solver(bit_wires, solve)
        return bit_wires

    def gadget_geq(self, x, y, bits: int, label: str = "geq",
                   range_checked: bool = False) -> Wire:
        """Boolean wire: 1 iff x >= y as integers; operands range-proved.

        Range proofs by bit decomposition are skipped for operands that are
        compile-time constants already known to fit, and for both operands
        when `range_checked` asserts the caller has bounded them elsewhere
        (the difference decomposition below is only sound within 2^bits).
        """
        xl, yl = self._as_lc(x), self._as_lc(y)
        for name, lc in (("x", xl), ("y", yl)):
            const = lc.terms.get(0, 0) if set(lc.terms) <= {0} else None
            if const is None:
                if not range_checked:
                    self.gadget_bit_decompose(lc, bits, f"{label}.range_{name}")
            elif const >= 1 << bits:
                raise R1csError(f"{label}: constant operand {const} exceeds {bits} bits")
        shifted = xl - yl + self.lc(1 << bits)
        z_bits = self.gadget_bit_decompose(shifted, bits + 1, f"{label}.diff")
        return z_bits[bits]  # top bit: 1 iff x - y + 2^bits >= 2^bits

    def gadget_not(self, x) -> LinearCombination:
        return self.lc(1) - self._as_lc(x)

    def gadget_and(self, x, y, label: str = "and") -> Wire:
        return self.gadget_mul(x, y, label)

    def gadget_or(self, x, y, label: str = "or") -> Wire:
        xl, yl = self._as_lc(x), self._as_lc(y)
        out = self.alloc_internal(label)
        # x + y - out = x*y  =>  out = x + y - x*y
        self.enforce(xl, yl, xl + yl - self.lc(out), label)
        p = self.p
        xt, yt = dict(xl.terms), dict(yl.terms)

        def solve(v, xt=xt, yt=yt, oi=out.index, p=p):
            xv = sum(v[j] * k for j, k in xt.items()) % p
            yv = sum(v[j] * k for j, k in yt.items()) % p
            v[oi] = (xv + yv - xv * yv) % p
        self.add_solver([out], solve)
        return out

    # -- finalization -------------------------------------------------------

    def finalize(self) -> ConstraintSystem:
        if self._finalized:
            raise R1csError("builder already finalized")
        if not self._constraints:
            raise R1csError("cannot finalize an empty constraint system")
        self._finalized = True
        publics = [w for w in self._wires if w.visibility == "public"]
        privates = [w for w in self._wires if w.visibility == "private"]
        perm = [None] * len(self._wires)
        perm[0] = 0
        for new, w in enumerate(publics, start=1):
            perm[w.index] = new
        for new, w in enumerate(privates, start=1 + len(publics)):
            perm[w.index] = new
        rows = []
        row_labels = []
        for a, b, c, label in self._constraints:
            rows.append(({perm[j]: k for j, k in a.items()},
                         {perm[j]: k for j, k in b.items()},
                         {perm[j]: k for j, k in c.items()}))
            row_labels.append(label)
        labels = [None] * len(self._wires)
        for w in self._wires:
            labels[perm[w.index]] = w.label
        return ConstraintSystem(self.field, rows, len(self._wires), len(publics),
                                labels, perm, self._solvers, self._input_wires,
                                row_labels)

    @property
    def n_constraints(self) -> int:
        return len(self._constraints)
