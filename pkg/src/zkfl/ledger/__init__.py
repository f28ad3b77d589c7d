"""Simulated permissioned ledger: blocks, the verification contract and the auditor."""

from .audit import Auditor, AuditReport, Finding, audit_chain
from .block import Block, TxEntry
from .chain import Ledger, Receipt, Rejected
from .contract import REASON_CODES, Contract, FinalizedRound, GenesisConfig
from .throughput import ThroughputReport, WorkloadConfig, measure_throughput
from .tx import FinalizeRound, GenesisTx, PostCommitment, RegisterIdentity, RejectionReceiptTx, decode_tx

__all__ = [
    "AuditReport",
    "Auditor",
    "Block",
    "Contract",
    "FinalizeRound",
    "FinalizedRound",
    "Finding",
    "GenesisConfig",
    "GenesisTx",
    "Ledger",
    "PostCommitment",
    "REASON_CODES",
    "Receipt",
    "RegisterIdentity",
    "Rejected",
    "RejectionReceiptTx",
    "ThroughputReport",
    "TxEntry",
    "WorkloadConfig",
    "audit_chain",
    "decode_tx",
    "measure_throughput",
]
