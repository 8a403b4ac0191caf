"""Hermes' Seal: a zero-knowledge proof toolkit for verifiable,
privacy-preserving perception exchange between vehicles and roadside
verifiers.

Layering (each module depends only on those before it):
    field       prime fields, fixed-point scaling, wire encodings
    pairing     toy supersingular pairing group, MSM
    r1cs        constraint systems, circuit builder, gadgets
    qap         polynomial arithmetic, NTT, R1CS -> QAP reduction
    groth16     trusted setup, prover, verifier
    commitment  algebraic sponge hash, commitments, security games
    protocol    signatures, certificates, proof packages, verifier state
    rss_circuit safe-stopping-distance case study
    audit_circuit  detection-audit case study
    cli         command-line front end
    v2x_sim     deterministic broadcast simulation harness
"""

from .field import (FieldElement, PrimeModulus, ScalingFactor, DTypeTag,
                    EncodingError, TEST_FIELD, STANDARD_FIELD, NONCE_BYTES,
                    scale, unscale, encode, decode)
from .pairing import BilinearGroup, G1Element, G2Element, GtElement, toy_group
from .r1cs import (CircuitBuilder, ConstraintSystem, LinearCombination,
                   MissingInputError, R1csError, UnsatisfiableError, Wire,
                   Witness, pad_to_power_of_two)
from .qap import (EvaluationDomain, InvalidWitnessError, Polynomial,
                  QapInstance, compute_quotient, r1cs_to_qap)
from .groth16 import (Groth16Error, Proof, ProvingKey, VerifyingKey, prove,
                      setup, verify)
from .commitment import (byte_hash, commit, open_commitment, sponge_gadget,
                         sponge_hash, verify_commitment)
from .protocol import (AUDIT_COMMIT_DOMAIN, AUDIT_SIGN_DOMAIN, Certificate,
                       DomainSeparator, EnrollmentAuthority, ProofPackage,
                       ProtocolError, RSS_COMMIT_DOMAIN, RSS_SIGN_DOMAIN,
                       SignatureKeypair, VerifierState, audit_open,
                       create_package, schnorr_keygen, schnorr_sign,
                       schnorr_verify)
from .rss_circuit import (RssCircuit, RssParams, RssPublicInputs, RssScenario,
                          RssWitness, build_rss_circuit, evaluate_predicate,
                          make_rss_inputs, parse_scenario, format_scenario,
                          rss_safe_distance, rss_safe_distance_general)
from .audit_circuit import (AuditCircuit, AuditPublicInputs, AuditThresholds,
                            AuditWitness, ChallengeSet, Detection,
                            GroundTruth, build_audit_circuit, greedy_match,
                            make_audit_inputs, parse_challenge_text,
                            parse_detections)

__version__ = "0.1.0"
