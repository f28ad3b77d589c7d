import pytest

from zkfl.federation import Federation
from zkfl.harness import attack_config
from zkfl.ledger import Auditor, audit_chain
from zkfl.ledger.block import Block, TxEntry, frame_block, iter_frames


@pytest.fixture(scope="module")
def chain_and_genesis():
    fed = Federation(attack_config())
    fed.run(3)
    return fed.ledger.to_bytes(), fed.genesis


def frames(chain):
    return [(off, data) for off, data in iter_frames(chain)]


def test_clean_chain_audits(chain_and_genesis):
    chain, genesis = chain_and_genesis
    rep = audit_chain(chain, genesis)
    assert rep.chain_valid and rep.first_bad_height is None
    assert [r.round_t for r in rep.rounds] == [1, 2, 3]
    assert all(r.proof_reverified for r in rep.rounds)


def test_truncation_detected(chain_and_genesis):
    chain, genesis = chain_and_genesis
    last_off = frames(chain)[-1][0]
    rep = audit_chain(chain[: last_off + 10], genesis)
    assert not rep.chain_valid and rep.first_bad_height == len(frames(chain)) - 1


def test_dropped_block_breaks_link(chain_and_genesis):
    chain, genesis = chain_and_genesis
    fr = frames(chain)
    off1, off2 = fr[2][0], fr[3][0]
    rep = audit_chain(chain[:off1] + chain[off2:], genesis)
    assert not rep.chain_valid and rep.first_bad_height == 2


def test_rehashed_forgery_caught_by_replay(chain_and_genesis):
    """Flip a recorded verdict and re-seal every later block: hashes all check out,
    but semantic replay disagrees with the recorded verdict."""
    chain, genesis = chain_and_genesis
    blocks = [Block.from_bytes(d) for _, d in frames(chain)]
    target = next(b.height for b in blocks if b.height > 0 and b.entries)
    out, prev = [], None
    for b in blocks:
        entries = b.entries
        if b.height == target:
            e = entries[0]
            entries = (TxEntry(e.tx_bytes, False, "bad-signature"),) + entries[1:]
        if b.height >= target:
            b = Block.seal(b.height, prev, b.tick, entries, genesis.hash_name)
        out.append(b)
        prev = b.block_hash
    rep = audit_chain(b"".join(frame_block(b) for b in out), genesis)
    assert not rep.chain_valid and rep.first_bad_height == target
    assert rep.findings[0].kind == "verdict-mismatch"


def test_wrong_genesis_rejected(chain_and_genesis):
    chain, _ = chain_and_genesis
    other = Federation(attack_config().replace(seed=99)).genesis
    rep = audit_chain(chain, other)
    assert not rep.chain_valid and rep.first_bad_height == 0


def test_garbage_and_empty_are_findings(chain_and_genesis):
    _, genesis = chain_and_genesis
    for data in (b"", b"\x01", b"\xff" * 100):
        rep = audit_chain(data, genesis)
        assert not rep.chain_valid and rep.first_bad_height == 0


def test_auditor_cache_does_not_change_verdicts(chain_and_genesis):
    chain, genesis = chain_and_genesis
    aud = Auditor(genesis)
    assert aud.audit(chain).chain_valid
    mutated = bytearray(chain)
    mutated[frames(chain)[2][0] + 20] ^= 4
    assert not aud.audit(bytes(mutated)).chain_valid
    again = aud.audit(chain)
    assert again.chain_valid and len(again.rounds) == 3
    assert again.to_json() == Auditor(genesis).audit(chain).to_json()
