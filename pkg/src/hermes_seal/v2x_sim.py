"""Deterministic discrete-event simulation of the vehicle-to-verifier
broadcast protocol under packet loss, latency jitter, and active adversaries.

Logical time is integer milliseconds.  A single seeded RNG drives every
random choice in a fixed order, so identical scenarios produce
byte-identical reports.  The broadcast bus delivers each (message,
verifier) pair at most once, in timestamp order, with bounded jitter and an
independent drop probability per delivery.

Adversary types:
    replay           re-deliver an observed package unchanged
    stale-timestamp  re-deliver an observed package after the freshness
                     window has passed
    cross-context    rewrite the package's signing context (RSS <-> audit)
    tamper           flip one package field per delivery, cycling through
                     every field

Each adversarial delivery records the verifier's reject reason; an
acceptance that violates protocol guarantees counts as an attack success
(the report's `attack_successes` must be zero).  A replayed package
arriving at a verifier that never saw the original is *expected* to be
accepted -- nonce stores are per-verifier -- and is not a success.

The simulator drives the library APIs directly (no subprocesses).
"""

from __future__ import annotations

import dataclasses
import heapq
import random

from .field import FieldElement, NONCE_BYTES, TEST_FIELD
from .groth16 import setup
from .protocol import (AUDIT_SIGN_DOMAIN, DomainSeparator, EnrollmentAuthority,
                       ProofPackage, RSS_SIGN_DOMAIN, VerifierState,
                       create_package, schnorr_keygen)
from .qap import EvaluationDomain, r1cs_to_qap
from .rss_circuit import RssScenario, build_rss_circuit, make_rss_inputs

__all__ = [
    "SimScenario",
    "SimReport",
    "make_scenario",
    "run_scenario",
    "parse_sim_scenario",
    "format_sim_scenario",
    "SimArtifacts",
    "default_artifacts",
    "TEMPLATES",
    "ADVERSARY_TYPES",
]

ADVERSARY_TYPES = ("replay", "stale-timestamp", "cross-context", "tamper")

TAMPER_FIELDS = ["proof", "publics", "commit", "sig", "vk_sig", "cert",
                 "r1cs_hash", "ts", "nonce", "ctx"]

# which verifier reject reasons are protocol-correct for each attack; any
# acceptance outside these expectations is an attack success
_EXPECTED_REASONS = {
    "replay": {"replay"},
    "stale-timestamp": {"freshness"},
    "cross-context": {"signature"},
    "tamper:proof": {"signature"},
    # a publics-only tamper keeps the signature valid, so at a verifier that
    # already accepted the original the nonce check fires first ("replay");
    # "proof" fires when the original never arrived there
    "tamper:publics": {"proof", "replay"},
    "tamper:commit": {"signature"},
    "tamper:sig": {"signature"},
    "tamper:vk_sig": {"certificate"},
    "tamper:cert": {"certificate"},
    "tamper:r1cs_hash": {"unknown_circuit", "signature"},
    "tamper:ts": {"signature", "freshness"},
    "tamper:nonce": {"signature"},
    "tamper:ctx": {"signature"},
}


@dataclasses.dataclass
class SimScenario:
    """One reproducible simulation run."""
    template: str = "occluded-stop-sign"
    seed: int = 0
    n_provers: int = 1
    n_verifiers: int = 1
    n_broadcasts: int = 1          # per prover
    drop_prob: float = 0.0
    latency_min: int = 5           # ms
    latency_max: int = 50          # ms
    broadcast_period: int = 1000   # ms between a prover's broadcasts
    freshness_window: int = 5000   # ms
    adversaries: tuple = ()
    local_map_update: bool = False  # accepted claims update a toy local map
    full_circuit: bool = False      # use production-width keys (slower)

    def __post_init__(self):
        if self.latency_min > self.latency_max:
            raise ValueError("latency bounds are inverted")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop probability must be within [0, 1]")
        if self.latency_max >= self.freshness_window:
            raise ValueError("latency may not exceed the freshness window")
        for adv in self.adversaries:
            if adv not in ADVERSARY_TYPES:
                raise ValueError(f"unknown adversary type {adv!r}")
        self.adversaries = tuple(self.adversaries)


TEMPLATES = {
    # single ego vehicle warns one verifier about an occluded stop sign;
    # the accepted claim flips the verifier's toy local-map flag
    "occluded-stop-sign": dict(n_provers=1, n_verifiers=1, n_broadcasts=1,
                               drop_prob=0.0, adversaries=(),
                               local_map_update=True),
    # one honest prover, several verifiers, an adversary replaying every
    # observed package to everyone
    "replay-storm": dict(n_provers=1, n_verifiers=3, n_broadcasts=4,
                         drop_prob=0.25, adversaries=("replay",)),
    # several provers and verifiers with every adversary type active
    "mixed-fleet": dict(n_provers=2, n_verifiers=3, n_broadcasts=3,
                        drop_prob=0.1,
                        adversaries=("replay", "stale-timestamp",
                                     "cross-context", "tamper")),
}


def make_scenario(template: str, **overrides) -> SimScenario:
    if template not in TEMPLATES:
        raise ValueError(f"unknown template {template!r}; "
                         f"choose from {sorted(TEMPLATES)}")
    kwargs = dict(TEMPLATES[template])
    kwargs.update(overrides)
    return SimScenario(template=template, **kwargs)


# -- scenario text format ------------------------------------------------------

_SCENARIO_FIELDS = {f.name for f in dataclasses.fields(SimScenario)}


def format_sim_scenario(scenario: SimScenario) -> str:
    lines = []
    for f in dataclasses.fields(SimScenario):
        v = getattr(scenario, f.name)
        if f.name == "adversaries":
            v = ",".join(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def parse_sim_scenario(text: str) -> SimScenario:
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"scenario line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCENARIO_FIELDS:
            raise ValueError(f"scenario line {lineno}: unknown key {key!r}")
        if key == "template":
            kwargs[key] = value
        elif key == "adversaries":
            kwargs[key] = tuple(a for a in value.split(",") if a)
        elif key == "drop_prob":
            kwargs[key] = float(value)
        elif key in ("local_map_update", "full_circuit"):
            kwargs[key] = value in ("True", "true", "1")
        else:
            kwargs[key] = int(value)
    return SimScenario(**kwargs)


# -- shared proving artifacts --------------------------------------------------


class SimArtifacts:
    """Circuit, keys, and QAP shared across simulation runs (the circuit and
    ceremony are scenario-independent, so building them once is sound)."""

    def __init__(self, full_circuit: bool = False, seed: int = 2024):
        self.field = TEST_FIELD
        self.circuit = build_rss_circuit(
            include_commitment=full_circuit)
        cs = self.circuit.cs
        self.qap = r1cs_to_qap(
            cs, EvaluationDomain.for_size(cs.n_constraints, self.field))
        self.pk, self.vk = setup(self.qap, seed=seed)
        self.r1cs_bytes = cs.to_bytes()
        self.vk_bytes = self.vk.to_bytes()


_artifact_cache = {}


def default_artifacts(full_circuit: bool = False) -> SimArtifacts:
    if full_circuit not in _artifact_cache:
        _artifact_cache[full_circuit] = SimArtifacts(full_circuit)
    return _artifact_cache[full_circuit]


# -- report --------------------------------------------------------------------


@dataclasses.dataclass
class SimReport:
    template: str
    seed: int
    broadcasts: int = 0
    genuine_attempted: int = 0     # (message, verifier) delivery attempts
    adversarial_attempted: int = 0
    delivered: int = 0
    dropped: int = 0
    accepts: int = 0
    rejects: dict = dataclasses.field(default_factory=dict)
    attack_attempts: int = 0
    attack_successes: int = 0
    unexpected_reasons: int = 0    # adversarial rejects with wrong reason
    map_updates: int = 0

    @property
    def total_rejects(self) -> int:
        return sum(self.rejects.values())

    def conserved(self) -> bool:
        """accepts + rejects + drops == attempted deliveries (none lost)."""
        attempted = self.genuine_attempted + self.adversarial_attempted
        return (self.accepts + self.total_rejects + self.dropped == attempted
                and self.delivered == self.accepts + self.total_rejects)

    def to_text(self) -> str:
        lines = [
            f"template {self.template}",
            f"seed {self.seed}",
            f"broadcasts {self.broadcasts}",
            f"genuine-attempted {self.genuine_attempted}",
            f"adversarial-attempted {self.adversarial_attempted}",
            f"delivered {self.delivered}",
            f"dropped {self.dropped}",
            f"accepts {self.accepts}",
            f"rejects {self.total_rejects}",
        ]
        for reason in sorted(self.rejects):
            lines.append(f"reject[{reason}] {self.rejects[reason]}")
        lines += [
            f"attack-attempts {self.attack_attempts}",
            f"attack-successes {self.attack_successes}",
            f"unexpected-reasons {self.unexpected_reasons}",
            f"map-updates {self.map_updates}",
            f"conserved {self.conserved()}",
        ]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = ["metric,value",
                f"template,{self.template}",
                f"seed,{self.seed}",
                f"broadcasts,{self.broadcasts}",
                f"genuine-attempted,{self.genuine_attempted}",
                f"adversarial-attempted,{self.adversarial_attempted}",
                f"delivered,{self.delivered}",
                f"dropped,{self.dropped}",
                f"accepts,{self.accepts}",
                f"rejects,{self.total_rejects}"]
        rows += [f"reject[{r}],{self.rejects[r]}" for r in sorted(self.rejects)]
        rows += [f"attack-attempts,{self.attack_attempts}",
                 f"attack-successes,{self.attack_successes}",
                 f"unexpected-reasons,{self.unexpected_reasons}",
                 f"map-updates,{self.map_updates}",
                 f"conserved,{self.conserved()}"]
        return "\n".join(rows) + "\n"

    def to_bytes(self) -> bytes:
        return self.to_text().encode()


# -- package mutations (adversary toolbox) ------------------------------------


def _mutate_package(pkg: ProofPackage, what: str, field=TEST_FIELD) -> bytes:
    """Return package bytes with exactly one field altered."""
    p = ProofPackage.from_bytes(pkg.to_bytes(field), field)  # private copy
    if what == "proof":
        b = bytearray(p.proof_bytes)
        b[8] ^= 0x01
        p.proof_bytes = bytes(b)
    elif what == "publics":
        # flip the claimed outcome bit (last public input)
        p.public_inputs[-1] ^= 1
    elif what == "commit":
        p.commitment = FieldElement(p.commitment.value + 1, field)
    elif what == "sig":
        b = bytearray(p.signature)
        b[0] ^= 0x01
        p.signature = bytes(b)
    elif what == "vk_sig":
        b = bytearray(p.vk_sig_bytes)
        b[1] ^= 0x01
        p.vk_sig_bytes = bytes(b)
    elif what == "cert":
        b = bytearray(p.cert_bytes)
        b[0] ^= 0x01               # vehicle ID
        p.cert_bytes = bytes(b)
    elif what == "r1cs_hash":
        b = bytearray(p.r1cs_hash)
        b[0] ^= 0x01
        p.r1cs_hash = bytes(b)
    elif what == "ts":
        p.timestamp += 1
    elif what == "nonce":
        b = bytearray(p.nonce)
        b[0] ^= 0x01
        p.nonce = bytes(b)
    elif what == "ctx":
        other = (AUDIT_SIGN_DOMAIN if p.sign_domain.value
                 == RSS_SIGN_DOMAIN.value else RSS_SIGN_DOMAIN)
        p.sign_domain = DomainSeparator(other.app, other.op, other.counter)
    else:
        raise ValueError(f"unknown tamper field {what!r}")
    return p.to_bytes(field)


# -- the event loop ------------------------------------------------------------


def run_scenario(scenario: SimScenario,
                 artifacts: SimArtifacts = None) -> SimReport:
    art = artifacts or default_artifacts(scenario.full_circuit)
    field = art.field
    rng = random.Random(scenario.seed)
    report = SimReport(scenario.template, scenario.seed)

    # enrollment: one authority, one keypair + certificate per prover
    ea = EnrollmentAuthority(rng)
    provers = []
    for vid in range(1, scenario.n_provers + 1):
        kp = schnorr_keygen(rng)
        cert = ea.issue(vid, kp.pk_bytes(), 0, 1 << 40)
        provers.append((kp, cert))

    verifiers = []
    local_maps = []
    for _ in range(scenario.n_verifiers):
        vs = VerifierState(ea.root_pk_bytes,
                           freshness_window=scenario.freshness_window)
        vs.register_circuit(art.r1cs_bytes, art.vk)
        verifiers.append(vs)
        local_maps.append({})

    # build the honest broadcast schedule (packages proven up front, in a
    # fixed order, so RNG consumption stays deterministic)
    events = []   # heap of (time, seq, kind, payload)
    seq = 0

    def push(t, kind, payload):
        nonlocal seq
        heapq.heappush(events, (t, seq, kind, payload))
        seq += 1

    driving = RssScenario()
    broadcasts = []   # (time, package_bytes)
    for k in range(scenario.n_broadcasts):
        t = (k + 1) * scenario.broadcast_period
        for kp, cert in provers:
            driving.timestamp = t
            publics, witness, nonce = make_rss_inputs(
                driving, nonce=rng.randbytes(NONCE_BYTES),
                s_sec=rng.randrange(field.p), circuit=art.circuit, field=field)
            full = art.circuit.generate_witness(publics, witness)
            pkg = create_package(
                art.pk, art.qap, full, FieldElement(publics.c, field), kp,
                cert, art.vk_bytes, art.r1cs_bytes, t, RSS_SIGN_DOMAIN,
                nonce=nonce, proof_seed=rng.getrandbits(64))
            raw = pkg.to_bytes(field)
            broadcasts.append((t, raw))
            report.broadcasts += 1
            for v in range(scenario.n_verifiers):
                report.genuine_attempted += 1
                if rng.random() < scenario.drop_prob:
                    report.dropped += 1
                    continue
                latency = rng.randint(scenario.latency_min,
                                      scenario.latency_max)
                push(t + latency, "genuine", (v, raw))

    # adversaries observe every on-air broadcast and schedule injections
    tamper_cycle = 0
    for adv in scenario.adversaries:
        for t, raw in broadcasts:
            if adv == "replay":
                for v in range(scenario.n_verifiers):
                    report.adversarial_attempted += 1
                    push(t + scenario.latency_max + 1, "attack",
                         (v, raw, "replay"))
            elif adv == "stale-timestamp":
                v = rng.randrange(scenario.n_verifiers)
                report.adversarial_attempted += 1
                push(t + scenario.freshness_window + 10, "attack",
                     (v, raw, "stale-timestamp"))
            elif adv == "cross-context":
                v = rng.randrange(scenario.n_verifiers)
                pkg = ProofPackage.from_bytes(raw, field)
                report.adversarial_attempted += 1
                push(t + scenario.latency_max + 2, "attack",
                     (v, _mutate_package(pkg, "ctx", field), "cross-context"))
            elif adv == "tamper":
                what = TAMPER_FIELDS[tamper_cycle % len(TAMPER_FIELDS)]
                tamper_cycle += 1
                v = rng.randrange(scenario.n_verifiers)
                pkg = ProofPackage.from_bytes(raw, field)
                report.adversarial_attempted += 1
                push(t + scenario.latency_max + 3, "attack",
                     (v, _mutate_package(pkg, what, field), f"tamper:{what}"))

    # drain the bus in (time, insertion) order
    seen_nonces = [set() for _ in range(scenario.n_verifiers)]
    while events:
        now, _, kind, payload = heapq.heappop(events)
        if kind == "genuine":
            v, raw = payload
            pkg = ProofPackage.from_bytes(raw, field)
            accepted, reason = verifiers[v].verify_package(pkg, now=now)
            report.delivered += 1
            if accepted:
                report.accepts += 1
                seen_nonces[v].add(pkg.nonce)
                if scenario.local_map_update:
                    obj_id = pkg.public_inputs[1]
                    if obj_id not in local_maps[v]:
                        local_maps[v][obj_id] = True
                        report.map_updates += 1
            else:
                report.rejects[reason] = report.rejects.get(reason, 0) + 1
        else:
            v, raw, attack = payload
            report.delivered += 1
            report.attack_attempts += 1
            pkg = ProofPackage.from_bytes(raw, field)
            accepted, reason = verifiers[v].verify_package(pkg, now=now)
            if accepted:
                if attack == "replay" and pkg.nonce not in seen_nonces[v]:
                    # the verifier never saw the original: benign by design
                    report.accepts += 1
                    seen_nonces[v].add(pkg.nonce)
                else:
                    report.accepts += 1
                    report.attack_successes += 1
            else:
                report.rejects[reason] = report.rejects.get(reason, 0) + 1
                if reason not in _EXPECTED_REASONS[attack]:
                    report.unexpected_reasons += 1
    return report
