"""Algebraic sponge hash (Poseidon-style), commitments, and security games.

One permutation family serves both the native hash and its in-circuit
gadget; the two are constraint-for-constraint identical, which the tests
pin down.  Parameters (round constants, MDS matrix) are derived
deterministically from a seed string via counter-mode SHA-256 so that no
external parameter files are needed and both field profiles get their own
consistent instances.

Commitments are hiding/binding in the random-sponge model:
    c = sponge(domain_sep, payload..., blinder).
Security-game harnesses at the bottom give empirical, falsifiable checks
(and a deliberately truncated variant that *does* break, validating the
harness itself).
"""

from __future__ import annotations

import hashlib
import random

from .field import FieldElement, PrimeModulus, TEST_FIELD

__all__ = [
    "SpongeParameters",
    "sponge_parameters",
    "sponge_permutation",
    "sponge_hash",
    "sponge_gadget",
    "byte_hash",
    "commit",
    "open_commitment",
    "verify_commitment",
    "game_collision",
    "game_binding",
    "game_hiding",
    "PARAMETER_SEED",
]

PARAMETER_SEED = b"HERMES-SEAL-POSEIDON-v1"

STATE_WIDTH = 3
RATE = 2
FULL_ROUNDS = 8


def _alpha_for(field: PrimeModulus) -> int:
    """Smallest odd S-box exponent coprime to p-1 (so x^alpha permutes F_p)."""
    from math import gcd
    a = 3
    while gcd(a, field.p - 1) != 1:
        a += 2
    return a


def _partial_rounds_for(field: PrimeModulus, alpha: int) -> int:
    """Enough partial rounds for full degree growth: ceil(log_alpha(p))."""
    import math
    return math.ceil(math.log(field.p) / math.log(alpha))


class SpongeParameters:
    """Round constants and MDS matrix for one field profile."""

    __slots__ = ("field", "alpha", "full_rounds", "partial_rounds",
                 "round_constants", "mds")

    def __init__(self, field, alpha, full_rounds, partial_rounds,
                 round_constants, mds):
        self.field = field
        self.alpha = alpha
        self.full_rounds = full_rounds
        self.partial_rounds = partial_rounds
        self.round_constants = round_constants  # [rounds][STATE_WIDTH] ints
        self.mds = mds                          # [STATE_WIDTH][STATE_WIDTH] ints

    @property
    def n_rounds(self):
        return self.full_rounds + self.partial_rounds


def _field_stream(field: PrimeModulus, label: bytes):
    """Counter-mode SHA-256 stream of uniform field elements (rejection-free
    bias is negligible at 256 bits per draw)."""
    counter = 0
    while True:
        digest = hashlib.sha256(
            PARAMETER_SEED + b"/" + field.name.encode() + b"/" + label
            + counter.to_bytes(4, "big")).digest()
        yield int.from_bytes(digest, "big") % field.p
        counter += 1


def _matrix_invertible(m, p: int) -> bool:
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    det = (a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)) % p
    return det != 0


_param_cache = {}


def sponge_parameters(field: PrimeModulus = TEST_FIELD) -> SpongeParameters:
    if field.p in _param_cache:
        return _param_cache[field.p]
    alpha = _alpha_for(field)
    partial = _partial_rounds_for(field, alpha)
    rc_stream = _field_stream(field, b"rc")
    rounds = FULL_ROUNDS + partial
    round_constants = [[next(rc_stream) for _ in range(STATE_WIDTH)]
                       for _ in range(rounds)]
    mds_stream = _field_stream(field, b"mds")
    while True:
        mds = [[next(mds_stream) for _ in range(STATE_WIDTH)]
               for _ in range(STATE_WIDTH)]
        if _matrix_invertible(mds, field.p):
            break
    params = SpongeParameters(field, alpha, FULL_ROUNDS, partial,
                              round_constants, mds)
    _param_cache[field.p] = params
    return params


def _sbox_fn(alpha: int, p: int):
    """Short multiply chains beat pow() for the small odd exponents in use."""
    if alpha == 3:
        return lambda x: x * x % p * x % p
    if alpha == 5:
        def quint(x, p=p):
            x2 = x * x % p
            return x2 * x2 % p * x % p
        return quint
    return lambda x: pow(x, alpha, p)


def sponge_permutation(state, params: SpongeParameters):
    """Apply the full permutation to a 3-element int state; returns new state."""
    p = params.field.p
    sbox = _sbox_fn(params.alpha, p)
    half = params.full_rounds // 2
    partial_end = half + params.partial_rounds
    s0, s1, s2 = state
    rcs = params.round_constants
    (m00, m01, m02), (m10, m11, m12), (m20, m21, m22) = params.mds
    for rnd in range(params.n_rounds):
        k0, k1, k2 = rcs[rnd]
        s0, s1, s2 = (s0 + k0) % p, (s1 + k1) % p, (s2 + k2) % p
        if half <= rnd < partial_end:
            s0 = sbox(s0)                       # partial round
        else:
            s0, s1, s2 = sbox(s0), sbox(s1), sbox(s2)
        s0, s1, s2 = ((m00 * s0 + m01 * s1 + m02 * s2) % p,
                      (m10 * s0 + m11 * s1 + m12 * s2) % p,
                      (m20 * s0 + m21 * s1 + m22 * s2) % p)
    return [s0, s1, s2]


def sponge_hash(inputs, field: PrimeModulus = TEST_FIELD) -> FieldElement:
    """Variable-length hash of field elements/ints to one field element.

    The input length is bound into the initial capacity element, so inputs
    of different lengths never collide via zero-padding.
    """
    params = sponge_parameters(field)
    p = field.p
    vals = [x.value if isinstance(x, FieldElement) else int(x) % p
            for x in inputs]
    state = [0, 0, len(vals) % p]
    for i in range(0, len(vals), RATE):
        chunk = vals[i:i + RATE]
        for j, v in enumerate(chunk):
            state[j] = (state[j] + v) % p
        state = sponge_permutation(state, params)
    if not vals:
        state = sponge_permutation(state, params)
    return FieldElement(state[0], field)


def sponge_gadget(builder, input_lcs, label: str = "sponge"):
    """In-circuit sponge identical to sponge_hash; returns the output wire.

    Each S-box x^3 costs exactly two constraints (square, then cube), so the
    per-permutation constraint count is
        2 * (3 * full_rounds + partial_rounds).
    Only the test-profile exponent (alpha = 3) is supported in-circuit.
    """
    params = sponge_parameters(builder.field)
    if params.alpha != 3:
        raise ValueError("sponge gadget supports the cube S-box only")
    lcs = [builder._as_lc(x) for x in input_lcs]
    state = [builder.lc(0), builder.lc(0), builder.lc(len(lcs))]
    n_chunks = max(1, (len(lcs) + RATE - 1) // RATE)
    for ci in range(n_chunks):
        chunk = lcs[ci * RATE:(ci + 1) * RATE]
        for j, v in enumerate(chunk):
            state[j] = state[j] + v
        state = _permutation_gadget(builder, state, params, f"{label}.p{ci}")
    out = builder.alloc_internal(f"{label}.out")
    builder.assert_equal(state[0], out, f"{label}.squeeze")
    st = dict(state[0].terms)
    p = builder.p

    def solve(v, st=st, oi=out.index, p=p):
        v[oi] = sum(v[j] * k for j, k in st.items()) % p
    builder.add_solver([out], solve)
    return out


def _cube_gadget(builder, lc, label):
    sq = builder.gadget_mul(lc, lc, f"{label}.sq")
    return builder.gadget_mul(sq, lc, f"{label}.cube")


def _permutation_gadget(builder, state, params, label):
    half = params.full_rounds // 2
    mds = params.mds
    for rnd in range(params.n_rounds):
        rc = params.round_constants[rnd]
        state = [s + builder.lc(k) for s, k in zip(state, rc)]
        if half <= rnd < half + params.partial_rounds:
            state[0] = builder.lc(_cube_gadget(builder, state[0],
                                               f"{label}.r{rnd}s0"))
        else:
            state = [builder.lc(_cube_gadget(builder, s, f"{label}.r{rnd}s{i}"))
                     for i, s in enumerate(state)]
        state = [state[0].scaled(mds[r][0]) + state[1].scaled(mds[r][1])
                 + state[2].scaled(mds[r][2]) for r in range(STATE_WIDTH)]
    return state


def gadget_constraints_per_permutation(field: PrimeModulus = TEST_FIELD) -> int:
    params = sponge_parameters(field)
    return 2 * (STATE_WIDTH * params.full_rounds + params.partial_rounds)


def byte_hash(data: bytes) -> bytes:
    """The toolkit's byte-level hash (for blobs, transcripts, signatures)."""
    return hashlib.sha256(data).digest()


# -- commitments -------------------------------------------------------------


def commit(domain_sep: int, payload, blinder,
           field: PrimeModulus = TEST_FIELD) -> FieldElement:
    """c = sponge(domain_sep, payload..., blinder)."""
    return sponge_hash([domain_sep] + list(payload) + [blinder], field)


def open_commitment(domain_sep: int, payload, blinder):
    """The opening is simply the preimage; bundled for protocol plumbing."""
    return {"domain_sep": domain_sep, "payload": list(payload),
            "blinder": blinder}

def verify_commitment(c: FieldElement, opening: dict,
                      field: PrimeModulus = TEST_FIELD) -> bool:
    return commit(opening["domain_sep"], opening["payload"],
                  opening["blinder"], field) == c


# -- empirical security games ------------------------------------------------


def _truncated(c: FieldElement, bits):
    return c.value & ((1 << bits) - 1) if bits else c.value


def game_collision(trials: int, rng: random.Random,
                   field: PrimeModulus = TEST_FIELD, truncate_bits: int = 0):
    """Birthday-search for colliding 2-element inputs; returns a colliding
    pair or None.  At full width a collision means the hash is broken; with
    truncate_bits ~16 a collision is expected (harness sanity check)."""
    seen = {}
    p = field.p
    for _ in range(trials):
        x = (rng.randrange(p), rng.randrange(p))
        h = _truncated(sponge_hash(list(x), field), truncate_bits)
        if h in seen and seen[h] != x:
            return seen[h], x
        seen[h] = x
    return None


def game_binding(trials: int, rng: random.Random,
                 field: PrimeModulus = TEST_FIELD, truncate_bits: int = 0):
    """Try to open a fixed commitment to a different payload; returns the
    equivocating opening or None."""
    p = field.p
    payload = [rng.randrange(p)]
    blinder = rng.randrange(p)
    c = _truncated(commit(0, payload, blinder, field), truncate_bits)
    for _ in range(trials):
        payload2 = [rng.randrange(p)]
        blinder2 = rng.randrange(p)
        if payload2 != payload and \
                _truncated(commit(0, payload2, blinder2, field),
                           truncate_bits) == c:
            return payload2, blinder2
    return None


def game_hiding(trials: int, rng: random.Random,
                field: PrimeModulus = TEST_FIELD) -> float:
    """Distinguishing advantage for commitments to two fixed payloads under
    fresh blinders, using a low-bit distinguisher; should be ~0."""
    p = field.p
    payloads = ([1], [2])
    correct = 0
    for _ in range(trials):
        bit = rng.randrange(2)
        c = commit(0, payloads[bit], rng.randrange(p), field)
        guess = c.value & 1  # any fixed efficient distinguisher
        if guess == bit:
            correct += 1
    return abs(correct / trials - 0.5)
