"""Hash-linked blocks and the append-only chain file format."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator

from ..crypto.hashing import DEFAULT_HASH, TAG_BLOCK, tagged_hash
from ..errors import DecodeError
from ..serialization import Reader, Writer

ZERO_HASH = bytes(32)


@dataclass(frozen=True)
class TxEntry:
    """A transaction as recorded on chain, with the contract's verdict."""

    tx_bytes: bytes
    ok: bool
    reason: str = ""


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    tick: int
    entries: tuple[TxEntry, ...]
    block_hash: bytes

    @staticmethod
    def body(height: int, prev_hash: bytes, tick: int, entries: tuple[TxEntry, ...]) -> bytes:
        w = Writer().u64(height).fixed(prev_hash, 32).u64(tick)
        w.items(entries, lambda w, e: w.var(e.tx_bytes).u8(int(e.ok)).text(e.reason))
        return w.getvalue()

    @classmethod
    def seal(
        cls, height: int, prev_hash: bytes, tick: int, entries: tuple[TxEntry, ...], hash_name: str = DEFAULT_HASH
    ) -> "Block":
        body = cls.body(height, prev_hash, tick, entries)
        return cls(height, prev_hash, tick, entries, tagged_hash(TAG_BLOCK, body, hash_name=hash_name))

    def to_bytes(self) -> bytes:
        return self.body(self.height, self.prev_hash, self.tick, self.entries) + self.block_hash

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        r = Reader(data)
        height, prev, tick = r.u64(), r.fixed(32), r.u64()

        def entry(r: Reader) -> TxEntry:
            tx, ok = r.var(), r.u8()
            if ok > 1:
                raise DecodeError("bad status byte")
            return TxEntry(tx, bool(ok), r.text())

        entries = tuple(r.items(entry))
        bh = r.fixed(32)
        r.done()
        return cls(height, prev, tick, entries, bh)

    def recompute_hash(self, hash_name: str = DEFAULT_HASH) -> bytes:
        return tagged_hash(TAG_BLOCK, self.body(self.height, self.prev_hash, self.tick, self.entries), hash_name=hash_name)


def frame_block(block: Block) -> bytes:
    data = block.to_bytes()
    return struct.pack("<I", len(data)) + data


def iter_frames(chain: bytes) -> Iterator[tuple[int, bytes | None]]:
    """Yield ``(offset, block_bytes)``; ``None`` marks a truncated frame and ends iteration."""
    pos = 0
    while pos < len(chain):
        if pos + 4 > len(chain):
            yield pos, None
            return
        (n,) = struct.unpack_from("<I", chain, pos)
        if pos + 4 + n > len(chain):
            yield pos, None
            return
        yield pos, chain[pos + 4 : pos + 4 + n]
        pos += 4 + n
