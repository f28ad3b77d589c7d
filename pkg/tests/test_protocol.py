from dataclasses import replace

import numpy as np
import pytest

from zkfl.crypto import Scalar, commit_vector, setup_params
from zkfl.encoding import FixedPointConfig, QuantizedUpdate, encode_ints
from zkfl.errors import ProtocolError
from zkfl.fl import AggregationPolicy, ModelParams
from zkfl.protocol import (
    AggregationProof,
    AggregationStatement,
    ClientIdentity,
    Enclave,
    EnclaveKeys,
    MockBackend,
    RoundHeader,
    TransparentBackend,
    VerifierContext,
    client_prepare_submission,
    client_verify_distribution,
    verify_aggregation,
    verify_attestation,
    verify_receipt,
)
from zkfl.protocol.messages import ClientSubmission
from zkfl.protocol.sealing import SealError, seal, seal_keypair, unseal, public_bytes

D = 8


class Setup:
    def __init__(self, backend=None, n=3, norm_bound=None, seed=0):
        self.rng = np.random.default_rng(seed)
        self.params = setup_params(D, b"proto")
        self.cfg = FixedPointConfig(D, max_clients=8)
        self.policy = AggregationPolicy(norm_bound=norm_bound or 10 * self.cfg.scale, quorum=1)
        self.enclave = Enclave(self.params, self.cfg, self.policy, EnclaveKeys.generate(self.rng), backend)
        self.ids = [ClientIdentity.from_seed(b"c%d" % i) for i in range(n)]
        for c in self.ids:
            c.registered = True
        self.registry = {c.client_id: c.public_key for c in self.ids}
        self.header = RoundHeader(1, bytes(16), self.policy.policy_id, bytes(32), 10)
        self.enclave.open_round(self.header, self.registry)

    def submit(self, i, update=None, weight=10, header=None, **kw):
        u = np.full(D, 0.1 * (i + 1)) if update is None else update
        return client_prepare_submission(
            self.ids[i], u, header or self.header, self.enclave.public.seal_public, self.cfg,
            params=self.params, weight=weight, rng=self.rng, **kw,
        )

    def ctx(self):
        return VerifierContext(self.header, self.registry, 1, self.policy.policy_id, self.enclave.public.attest_public)


def run_honest(s):
    subs = [s.submit(i)[0] for i in range(len(s.ids))]
    for sub in subs:
        assert s.enclave.ingest(sub).accepted
    return s.enclave.aggregate_and_prove(ModelParams(np.zeros(D)))


@pytest.mark.parametrize("backend", [TransparentBackend(), MockBackend()])
def test_honest_round_verifies(backend):
    s = Setup(backend)
    out = run_honest(s)
    assert verify_aggregation(out.statement, out.proof, s.params, s.ctx())
    assert verify_attestation(out.attestation, out.statement, out.model_hash, s.enclave.public)
    assert np.allclose(out.delta, np.mean([0.1, 0.2, 0.3]), atol=1e-4)
    assert out.proof.size == (32 if backend.name == "transparent" else 128)


@pytest.mark.parametrize("backend", [TransparentBackend(), MockBackend()])
def test_tampered_aggregate_fails_verification(backend):
    s = Setup(backend)
    out = run_honest(s)
    agg = out.statement.aggregate.copy()
    agg[0] += 1
    bad = replace(out.statement, aggregate=agg)
    assert not verify_aggregation(bad, out.proof, s.params, s.ctx())


def test_tampered_weight_or_participants_fail():
    s = Setup()
    out = run_honest(s)
    st = out.statement
    p0 = replace(st.participants[0], weight=st.participants[0].weight + 1)
    bad = replace(st, participants=(p0,) + st.participants[1:], total_weight=st.total_weight + 1)
    assert not verify_aggregation(bad, out.proof, s.params, s.ctx())
    dropped = replace(st, participants=st.participants[1:])
    assert not verify_aggregation(dropped, out.proof, s.params, s.ctx())
    assert not verify_aggregation(st, AggregationProof("transparent", b"\x00" * 31), s.params, s.ctx())
    assert not verify_aggregation(st, AggregationProof("nope", out.proof.payload), s.params, s.ctx())


def test_context_checks():
    s = Setup()
    out = run_honest(s)
    wrong_header = replace(s.header, round_t=2)
    assert not verify_aggregation(out.statement, out.proof, s.params, replace(s.ctx(), expected_header=wrong_header))
    assert not verify_aggregation(out.statement, out.proof, s.params, replace(s.ctx(), quorum=4))
    reg = dict(s.registry)
    reg.pop(s.ids[0].client_id)
    assert not verify_aggregation(out.statement, out.proof, s.params, replace(s.ctx(), registry=reg))


def test_mock_proof_bound_to_statement_and_key():
    s = Setup(MockBackend(scale=0.5))
    out = run_honest(s)
    assert out.proof.simulated_prove_ms == pytest.approx(22_600.0)
    other = Setup(MockBackend(), seed=9)
    ctx = replace(s.ctx(), enclave_attest_public=other.enclave.public.attest_public)
    assert not verify_aggregation(out.statement, out.proof, s.params, ctx)
    assert not verify_aggregation(out.statement, out.proof, s.params, replace(s.ctx(), enclave_attest_public=None))


def test_enclave_rejection_reasons():
    s = Setup(norm_bound=1000)
    ok, _ = s.submit(0, update=np.zeros(D))
    assert s.enclave.ingest(ok).accepted
    assert s.enclave.ingest(ok).reason == "duplicate-client"

    stale, _ = s.submit(1, header=replace(s.header, round_t=0))
    assert s.enclave.ingest(stale).reason == "stale-round"

    sub, _ = s.submit(1)
    forged = replace(sub, signature=bytes(64))
    assert s.enclave.ingest(forged).reason == "bad-signature"

    stranger = ClientIdentity.from_seed(b"stranger")
    stranger.registered = True
    s.ids.append(stranger)
    sub, _ = s.submit(3)
    assert s.enclave.ingest(sub).reason == "unknown-client"

    big, _ = s.submit(1, update=np.full(D, 1.0))
    r = s.enclave.ingest(big)
    assert r.reason == "norm-exceeded" and r.attributable

    heavy, _ = s.submit(2, weight=0)
    assert s.enclave.ingest(heavy).reason == "weight-invalid"


def test_commitment_mismatch_and_receipts():
    s = Setup()
    sub, _ = s.submit(0)
    other = commit_vector(s.params, encode_ints([1] * D), Scalar(3))
    res = s.enclave.ingest(replace(sub, commitment=other))
    assert res.reason == "commitment-mismatch"
    assert verify_receipt(res.receipt, s.enclave.public)
    assert not verify_receipt(replace(res.receipt, reason="norm-exceeded"), s.enclave.public)
    res2 = s.enclave.ingest(replace(sub, sealed_payload=sub.sealed_payload[:-1]))
    assert res2.reason in ("commitment-mismatch", "duplicate-client")


def test_closed_round_and_quorum():
    s = Setup()
    with pytest.raises(ProtocolError):
        s.enclave.aggregate_and_prove(ModelParams(np.zeros(D)))
    assert s.enclave.ingest(s.submit(0)[0]).accepted
    s.enclave.aggregate_and_prove(ModelParams(np.zeros(D)))
    assert s.enclave.ingest(s.submit(1)[0]).reason == "round-closed"


def test_client_refuses_unregistered_and_stale():
    s = Setup()
    s.ids[0].registered = False
    with pytest.raises(ProtocolError):
        s.submit(0)
    with pytest.raises(ProtocolError):
        s.submit(1, latest_round=2)


def test_distribution_check():
    class View:
        def __init__(self, h):
            self.h = h

        def get_model_hash(self, t):
            if t != 1:
                raise KeyError(t)
            return self.h

    s = Setup()
    out = run_honest(s)
    assert client_verify_distribution(s.header, out.model, View(out.model_hash))
    bumped = ModelParams(out.model.weights + 1e-9)
    assert not client_verify_distribution(s.header, bumped, View(out.model_hash))
    with pytest.raises(ProtocolError):
        client_verify_distribution(replace(s.header, round_t=7), out.model, View(out.model_hash))


def test_sealing_round_trip_and_aad():
    rng = np.random.default_rng(0)
    k = seal_keypair(rng)
    blob = seal(public_bytes(k), b"secret", b"aad", rng)
    assert unseal(k, blob, b"aad") == b"secret"
    with pytest.raises(SealError):
        unseal(k, blob, b"other")
    with pytest.raises(SealError):
        unseal(seal_keypair(rng), blob, b"aad")


def test_message_round_trips():
    s = Setup()
    sub, _ = s.submit(0)
    assert ClientSubmission.from_bytes(sub.to_bytes()) == sub
    assert RoundHeader.from_bytes(s.header.to_bytes()) == s.header
    out = run_honest(Setup())
    st = out.statement
    assert AggregationStatement.from_bytes(st.to_bytes()) == st
    assert AggregationProof.from_bytes(out.proof.to_bytes()) == out.proof


def test_out_of_range_quantized_submission_rejected():
    s = Setup()
    lim = s.cfg.clamp_int + 1
    q = QuantizedUpdate(np.full(D, lim, dtype=np.int64), s.cfg.config_id(), 1)
    sub, _ = s.submit(0, quantized=q)
    assert s.enclave.ingest(sub).reason == "commitment-mismatch"
