"""Protocol roles: clients, the simulated enclave aggregator and the public verifier."""

from .client import ClientIdentity, Opening, client_prepare_submission, client_verify_distribution, compute_anchor
from .enclave import ATTRIBUTABLE, Enclave, EnclaveKeys, IngestResult, RoundOutput, verify_attestation, verify_receipt
from .messages import (
    AggregationProof,
    AggregationStatement,
    Attestation,
    ClientSubmission,
    EnclavePublic,
    EnclaveReceipt,
    Participant,
    RoundHeader,
)
from .proof import MockBackend, TransparentBackend, VerifierContext, make_backend, verify_aggregation

__all__ = [
    "ATTRIBUTABLE",
    "AggregationProof",
    "AggregationStatement",
    "Attestation",
    "ClientIdentity",
    "ClientSubmission",
    "Enclave",
    "EnclaveKeys",
    "EnclavePublic",
    "EnclaveReceipt",
    "IngestResult",
    "MockBackend",
    "Opening",
    "Participant",
    "RoundHeader",
    "RoundOutput",
    "TransparentBackend",
    "VerifierContext",
    "client_prepare_submission",
    "client_verify_distribution",
    "compute_anchor",
    "make_backend",
    "verify_aggregation",
    "verify_attestation",
    "verify_receipt",
]
