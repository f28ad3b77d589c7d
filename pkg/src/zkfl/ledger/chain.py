"""Single-writer ledger: a block producer in front of the contract."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from ..errors import LedgerError
from ..protocol.messages import RoundHeader
from .block import ZERO_HASH, Block, TxEntry, frame_block
from .contract import Contract, FinalizedRound, GenesisConfig
from .tx import GenesisTx, Tx, tx_hash


@dataclass(frozen=True)
class Receipt:
    tx_hash: bytes
    tick: int
    ok: bool = True
    reason: str = ""


@dataclass(frozen=True)
class Rejected:
    tx_hash: bytes
    reason: str
    tick: int
    ok: bool = False


class Ledger:
    """Transactions are applied on submission and recorded, with their verdict,
    in the next produced block. Logical time is the block height."""

    def __init__(self, genesis: GenesisConfig, *, verify_proofs: bool = True) -> None:
        self.genesis = genesis
        self.contract = Contract(genesis, verify_proofs=verify_proofs)
        self.hash_name = genesis.hash_name
        self.blocks: list[Block] = []
        self._pending: list[TxEntry] = []
        self._lock = threading.Lock()
        self._persisted = 0
        self.submit_tx(GenesisTx(self.contract.genesis_digest))
        self.produce_block()

    @property
    def tick(self) -> int:
        return len(self.blocks)

    @property
    def pending(self) -> int:
        return len(self._pending)

    def submit_tx(self, tx: Union[Tx, bytes]) -> Union[Receipt, Rejected]:
        data = tx if isinstance(tx, (bytes, bytearray)) else tx.to_bytes()
        data = bytes(data)
        with self._lock:
            tick = self.tick
            reason = self.contract.apply(data, tick)
            self._pending.append(TxEntry(data, reason == "", reason))
        h = tx_hash(data, self.hash_name)
        return Receipt(h, tick) if reason == "" else Rejected(h, reason, tick)

    def produce_block(self) -> Block:
        with self._lock:
            prev = self.blocks[-1].block_hash if self.blocks else ZERO_HASH
            block = Block.seal(self.tick, prev, self.tick, tuple(self._pending), self.hash_name)
            self.blocks.append(block)
            self._pending = []
            return block

    # -- persistence ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        return b"".join(frame_block(b) for b in self.blocks)

    def save(self, path: str | Path) -> None:
        """Append blocks produced since the last save (creates the file on first call)."""
        mode = "ab" if self._persisted else "wb"
        with open(path, mode) as fh:
            for b in self.blocks[self._persisted :]:
                fh.write(frame_block(b))
        self._persisted = len(self.blocks)

    # -- read-only views -----------------------------------------------------

    def registry(self) -> dict[bytes, bytes]:
        return dict(self.contract.state.registry)

    def round_registry(self) -> dict[bytes, bytes]:
        """Registry snapshot the open round is gated on."""
        return dict(self.contract.state.round_registry)

    def open_round(self) -> RoundHeader:
        return self.contract.state.open_round

    def commitments(self, round_t: int) -> list[tuple[bytes, bytes]]:
        items = [(cid, a) for (t, cid), a in self.contract.state.commitments.items() if t == round_t]
        return sorted(items)

    def receipts(self, round_t: int) -> dict[bytes, str]:
        return {cid: r for (t, cid), r in self.contract.state.receipts.items() if t == round_t}

    def finalized(self, round_t: int) -> FinalizedRound:
        rec = self.contract.state.finalized.get(round_t)
        if rec is None:
            raise LedgerError("unknown-round", f"round {round_t} is not finalized")
        return rec

    def get_model_hash(self, round_t: int) -> bytes:
        return self.contract.get_model_hash(round_t)
