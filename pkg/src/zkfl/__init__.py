"""Verifiable federated learning: committed client updates, proof-checked
aggregation inside a simulated enclave, and an auditable consortium ledger."""

__version__ = "0.1.0"
