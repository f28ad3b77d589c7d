"""Offline auditor: full replay of a persisted chain from genesis.

Two passes. The structural pass checks framing, heights, ticks, parent links
and block hashes. The semantic pass re-executes every transaction through a
fresh contract and requires the recorded verdicts to match, which re-verifies
every signature, anchor and aggregation proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import DecodeError, ZkflError
from .block import ZERO_HASH, Block, iter_frames
from .contract import Contract, GenesisConfig
from .tx import TX_REJECTION_RECEIPT, FinalizeRound, decode_tx, tx_hash


@dataclass(frozen=True)
class Finding:
    height: int
    kind: str
    detail: str

    def to_json(self) -> dict[str, Any]:
        return {"height": self.height, "kind": self.kind, "detail": self.detail}


@dataclass(frozen=True)
class RoundAudit:
    round_t: int
    height: int
    model_hash: bytes
    proof_reverified: bool
    commitment_set_match: bool
    registry_gated: bool

    def to_json(self) -> dict[str, Any]:
        d = dict(self.__dict__)
        d["model_hash"] = self.model_hash.hex()
        return d


@dataclass
class AuditReport:
    chain_valid: bool
    first_bad_height: int | None
    findings: list[Finding] = field(default_factory=list)
    rounds: list[RoundAudit] = field(default_factory=list)
    rejections: list[dict[str, Any]] = field(default_factory=list)
    receipts: list[dict[str, Any]] = field(default_factory=list)
    blocks: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            "chain_valid": self.chain_valid,
            "first_bad_height": self.first_bad_height,
            "blocks": self.blocks,
            "findings": [f.to_json() for f in self.findings],
            "rounds": [r.to_json() for r in self.rounds],
            "rejections": self.rejections,
            "receipts": self.receipts,
        }

    def model_hash(self, round_t: int) -> bytes | None:
        for r in self.rounds:
            if r.round_t == round_t:
                return r.model_hash
        return None


def _structural(chain: bytes, hash_name: str) -> tuple[list[Block], Finding | None]:
    blocks: list[Block] = []
    prev = ZERO_HASH
    for _, data in iter_frames(chain):
        h = len(blocks)
        if data is None:
            return blocks, Finding(h, "malformed", "truncated block frame")
        try:
            b = Block.from_bytes(data)
        except (DecodeError, ValueError) as exc:
            return blocks, Finding(h, "malformed", f"undecodable block: {exc}")
        if b.height != h or b.tick != h:
            return blocks, Finding(h, "height-mismatch", f"height {b.height} tick {b.tick} at position {h}")
        if b.prev_hash != prev:
            return blocks, Finding(h, "broken-link", "prev_hash does not match parent block hash")
        if b.recompute_hash(hash_name) != b.block_hash:
            return blocks, Finding(h, "hash-mismatch", "stored block hash does not match contents")
        blocks.append(b)
        prev = b.block_hash
    if not blocks:
        return blocks, Finding(0, "malformed", "empty chain")
    return blocks, None


class Auditor:
    """Reusable auditor for one genesis. Memoizes pure verification results and
    fully verified chain prefixes (identified by their tip hash, which commits
    to every earlier block), so repeated audits of related chains stay cheap
    without changing any verdict."""

    def __init__(self, genesis: GenesisConfig) -> None:
        self.genesis = genesis
        self._cache: dict[bytes, bool] = {}
        self._good_prefixes: set[bytes] = set()

    def audit(self, chain: bytes) -> AuditReport:
        hn = self.genesis.hash_name
        blocks, structural = _structural(bytes(chain), hn)
        report = AuditReport(True, None, blocks=len(blocks))
        if blocks and blocks[-1].block_hash in self._good_prefixes:
            semantic = None
        else:
            semantic = self._replay(blocks, report)
        findings = [f for f in (semantic, structural) if f is not None]
        if findings:
            first = min(findings, key=lambda f: f.height)
            report.findings = [first]
            report.chain_valid = False
            report.first_bad_height = first.height
        elif semantic is None and not report.rounds:
            # Prefix cache hit: replay once more for the per-round detail.
            self._replay(blocks, report)
        return report

    def _replay(self, blocks: list[Block], report: AuditReport) -> Finding | None:
        contract = Contract(self.genesis, cache=self._cache)
        hn = self.genesis.hash_name
        for b in blocks:
            if b.height == 0 and (len(b.entries) != 1 or not b.entries[0].ok):
                return Finding(0, "bad-genesis", "block 0 must hold exactly the genesis transaction")
            for i, e in enumerate(b.entries):
                before = contract.state.open_round.round_t
                reason = contract.apply(e.tx_bytes, b.tick)
                if reason != e.reason or (reason == "") != e.ok:
                    return Finding(
                        b.height,
                        "verdict-mismatch",
                        f"tx {i}: recorded {'ok' if e.ok else e.reason!r}, replay gives {reason or 'ok'!r}",
                    )
                if not e.ok:
                    report.rejections.append(
                        {"height": b.height, "tx_hash": tx_hash(e.tx_bytes, hn).hex(), "reason": e.reason}
                    )
                elif contract.state.open_round.round_t != before:
                    rec = contract.state.finalized[before]
                    report.rounds.append(RoundAudit(before, b.height, rec.model_hash, True, True, True))
                elif e.tx_bytes[1] == TX_REJECTION_RECEIPT:
                    rc = decode_tx(e.tx_bytes).receipt
                    report.receipts.append(
                        {
                            "height": b.height,
                            "tx_hash": tx_hash(e.tx_bytes, hn).hex(),
                            "round_t": rc.round_t,
                            "client_id": rc.client_id.hex(),
                            "reason": rc.reason,
                        }
                    )
            self._good_prefixes.add(b.block_hash)
        return None


def audit_chain(chain: bytes, genesis: GenesisConfig, auditor: Auditor | None = None) -> AuditReport:
    """Total over arbitrary bytes: malformed input becomes a finding, never an exception."""
    try:
        return (auditor or Auditor(genesis)).audit(chain)
    except ZkflError as exc:  # defensive: the contract itself is total
        return AuditReport(False, 0, [Finding(0, "malformed", str(exc))])


def finalize_txs(chain: bytes) -> list[tuple[int, FinalizeRound]]:
    """Accepted FinalizeRound transactions with their block height."""
    out = []
    for _, data in iter_frames(chain):
        if data is None:
            break
        b = Block.from_bytes(data)
        for e in b.entries:
            if e.ok:
                tx = decode_tx(e.tx_bytes)
                if isinstance(tx, FinalizeRound):
                    out.append((b.height, tx))
    return out
