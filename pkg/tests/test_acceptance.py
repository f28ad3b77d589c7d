"""End-to-end acceptance checks at their stated tolerances.

Each test records one PASS/FAIL line, printed together in the terminal summary.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from zkfl.bench import DEFAULT_CLIENTS, DEFAULT_DIMS, SweepConfig, bench_point, run_sweep, scaling_fits
from zkfl.cli import main as cli_main
from zkfl.config import CONTROL_SCENARIO, SCENARIO_NAMES, ExperimentConfig
from zkfl.crypto import ORDER, Scalar, combine, commit_vector, setup_params
from zkfl.encoding import FixedPointConfig, decode_from_scalars, encode_ints
from zkfl.federation import Federation
from zkfl.fl import AggregationPolicy, LogisticModel, MLPModel, ModelParams
from zkfl.harness import EXPECTATIONS, attack_config, run_all, run_scenario
from zkfl.ledger import Auditor
from zkfl.ledger.block import iter_frames
from zkfl.protocol import (
    ClientIdentity,
    Enclave,
    EnclaveKeys,
    RoundHeader,
    TransparentBackend,
    VerifierContext,
    client_prepare_submission,
    verify_aggregation,
)

pytestmark = pytest.mark.slow


# -- 1 ---------------------------------------------------------------------------


def test_utility_parity(acceptance):
    cfg = ExperimentConfig(rounds=30)
    assert (cfg.federation.num_sites, cfg.dimension, cfg.federation.skew) == (8, 128, 0.3)
    t0 = time.perf_counter()
    fed = Federation(cfg)
    records = fed.run(30)
    elapsed = time.perf_counter() - t0
    bound = cfg.parity_bound_l1()
    worst_gap = max(r.parity_gap_l1 for r in records)
    worst_acc = max(abs(r.accuracy - r.shadow_accuracy) for r in records)
    ok = len(records) == 30 and worst_gap <= bound and worst_acc < 0.005 and elapsed < 120
    acceptance(
        1,
        "utility parity vs plain FedAvg shadow (N=8, d=128, R=30)",
        ok,
        f"max L1 gap {worst_gap:.3g} <= {bound:.3g}; max |acc diff| {100 * worst_acc:.3f} pp < 0.5 pp; "
        f"final acc {records[-1].accuracy:.4f} vs {records[-1].shadow_accuracy:.4f}; {elapsed:.1f}s",
    )


# -- 2 ---------------------------------------------------------------------------


class Round:
    """One honest aggregation with N clients at dimension d."""

    params_cache: dict[int, object] = {}

    def __init__(self, rng: np.random.Generator, n: int, d: int, round_t: int = 1, clients=None):
        if d not in self.params_cache:
            self.params_cache[d] = setup_params(d, b"soundness")
        self.params = self.params_cache[d]
        self.cfg = FixedPointConfig(d, max_clients=16)
        self.policy = AggregationPolicy(norm_bound=1 << 40)
        self.enclave = Enclave(self.params, self.cfg, self.policy, EnclaveKeys.generate(rng), TransparentBackend())
        self.clients = clients or [ClientIdentity.from_seed(rng.bytes(32)) for _ in range(16)]
        for c in self.clients:
            c.registered = True
        self.registry = {c.client_id: c.public_key for c in self.clients}
        self.header = RoundHeader(round_t, rng.bytes(16), self.policy.policy_id, rng.bytes(32), 10)
        self.enclave.open_round(self.header, self.registry)
        weights = rng.choice(np.arange(1, 5000), size=n, replace=False)
        self.chosen = sorted(range(16), key=lambda _: rng.random())[:n]
        for i, w in zip(self.chosen, weights):
            update = rng.normal(scale=0.05, size=d)
            sub, _ = client_prepare_submission(
                self.clients[i], update, self.header, self.enclave.public.seal_public, self.cfg,
                params=self.params, weight=int(w), rng=rng,
            )
            assert self.enclave.ingest(sub).accepted
        self.out = self.enclave.aggregate_and_prove(ModelParams(np.zeros(d)))
        self.ctx = VerifierContext(self.header, self.registry, 1, self.policy.policy_id)

    def verify(self, statement=None, ctx=None) -> bool:
        return verify_aggregation(statement or self.out.statement, self.out.proof, self.params, ctx or self.ctx)


MUTATIONS = ("drop", "alter-coordinate", "alter-weight", "swap-commitment", "inject", "reuse-prior-commitment", "replay")


def mutate(kind: str, rnd: Round, prior: Round, rng: np.random.Generator):
    st = rnd.out.statement
    parts = list(st.participants)
    i = int(rng.integers(len(parts)))
    if kind == "drop":
        p = parts.pop(i)
        total = st.total_weight - p.weight if rng.random() < 0.5 else st.total_weight
        return replace(st, participants=tuple(parts), total_weight=total), rnd.ctx
    if kind == "alter-coordinate":
        agg = st.aggregate.copy()
        agg[int(rng.integers(len(agg)))] += int(rng.choice([-1, 1]) * rng.integers(1, 1 << 20))
        return replace(st, aggregate=agg), rnd.ctx
    if kind == "alter-weight":
        dw = int(rng.integers(1, 100))
        parts[i] = replace(parts[i], weight=parts[i].weight + dw)
        total = st.total_weight + dw if rng.random() < 0.5 else st.total_weight
        return replace(st, participants=tuple(parts), total_weight=total), rnd.ctx
    if kind == "swap-commitment":
        foreign = commit_vector(rnd.params, encode_ints(rng.integers(-1000, 1000, rnd.params.dimension)), Scalar.random(rng))
        parts[i] = replace(parts[i], commitment=foreign)
        return replace(st, participants=tuple(parts)), rnd.ctx
    if kind == "inject":
        absent = [c for c in rnd.clients if c.client_id not in {p.client_id for p in parts}]
        if not absent:
            # Every registered client participates: inject a second copy instead.
            parts.append(parts[i])
        else:
            victim = absent[int(rng.integers(len(absent)))]
            fake = commit_vector(rnd.params, encode_ints([0] * rnd.params.dimension), Scalar.random(rng))
            w = int(rng.integers(1, 100))
            parts.append(type(parts[0])(victim.client_id, fake, w))
        parts.sort(key=lambda p: p.client_id)
        return replace(st, participants=tuple(parts), total_weight=sum(p.weight for p in parts)), rnd.ctx
    if kind == "reuse-prior-commitment":
        old = {p.client_id: p.commitment for p in prior.out.statement.participants}
        shared = [j for j, p in enumerate(parts) if p.client_id in old]
        j = shared[int(rng.integers(len(shared)))] if shared else i
        old_c = old.get(parts[j].client_id, prior.out.statement.participants[0].commitment)
        parts[j] = replace(parts[j], commitment=old_c)
        return replace(st, participants=tuple(parts)), rnd.ctx
    # replay: the previous round's statement and proof presented in this round
    return prior.out.statement, rnd.ctx


def test_aggregation_soundness(acceptance):
    t0 = time.perf_counter()
    honest_ok = 0
    for k in range(500):
        rng = np.random.default_rng([2, k])
        rnd = Round(rng, int(rng.integers(1, 17)), int(rng.choice([8, 16, 32, 64, 128, 256])))
        honest_ok += rnd.verify()
    rejected, counts = 0, dict.fromkeys(MUTATIONS, 0)
    for k in range(500):
        rng = np.random.default_rng([3, k])
        n, d = int(rng.integers(1, 17)), int(rng.choice([8, 16, 32, 64, 128, 256]))
        prior = Round(rng, n, d, round_t=1)
        rnd = Round(rng, n, d, round_t=2, clients=prior.clients)
        kind = MUTATIONS[k % len(MUTATIONS)]
        counts[kind] += 1
        statement, ctx = mutate(kind, rnd, prior, rng)
        if kind == "replay":
            ok = verify_aggregation(statement, prior.out.proof, rnd.params, ctx)
        else:
            ok = rnd.verify(statement, ctx)
        rejected += not ok
    elapsed = time.perf_counter() - t0
    ok = honest_ok == 500 and rejected == 500 and elapsed < 300
    acceptance(
        2,
        "aggregation soundness (500 tamper + 500 honest, N<=16, d<=256)",
        ok,
        f"honest accepted {honest_ok}/500; tampered rejected {rejected}/500 over {counts}; {elapsed:.1f}s",
    )


# -- 3 ---------------------------------------------------------------------------


def test_threat_matrix(acceptance):
    t0 = time.perf_counter()
    res = run_all(seeds=range(50), include_control=True)
    elapsed = time.perf_counter() - t0
    per = {}
    for name in SCENARIO_NAMES:
        rs = [r for r in res.reports if r.scenario == name]
        per[name] = sum(r.as_expected and r.detecting_layer == EXPECTATIONS[name].layer for r in rs)
    control = [r for r in res.reports if r.scenario == CONTROL_SCENARIO]
    control_ok = sum(not r.detected and r.as_expected for r in control)
    clean = sum(b.baseline_clean and not b.detected and b.as_expected for b in res.baselines)
    ok = all(v == 50 for v in per.values()) and control_ok == 50 and clean == 50 and res.complete
    worst = min(per, key=per.get)
    acceptance(
        3,
        "threat matrix (9 scenarios x 50 seeds, honest baselines, semantic-poison control)",
        ok,
        f"min {per[worst]}/50 ({worst}); baselines clean {clean}/50; control undetected {control_ok}/50; "
        f"{elapsed:.1f}s",
    )


# -- 4 ---------------------------------------------------------------------------


def test_audit_tamper_evidence(acceptance):
    cfg = attack_config().replace(rounds=10)
    fed = Federation(cfg)
    fed.run(10)
    chain = fed.ledger.to_bytes()
    assert len(chain) <= 1 << 20
    owner = []
    for h, (off, data) in enumerate(iter_frames(chain)):
        owner += [h] * (4 + len(data))
    assert len(owner) == len(chain)
    auditor = Auditor(fed.genesis)
    clean = auditor.audit(chain).chain_valid
    t0 = time.perf_counter()
    flagged = correct = 0
    misses = []
    buf = bytearray(chain)
    for pos in range(len(chain)):
        buf[pos] ^= 0xFF
        rep = auditor.audit(bytes(buf))
        buf[pos] ^= 0xFF
        flagged += not rep.chain_valid
        if rep.first_bad_height == owner[pos]:
            correct += 1
        elif len(misses) < 5:
            misses.append((pos, owner[pos], rep.first_bad_height))
    elapsed = time.perf_counter() - t0
    n = len(chain)
    ok = clean and flagged == n and correct == n and elapsed < 300
    acceptance(
        4,
        "audit tamper evidence (every byte of a 10-round chain flipped)",
        ok,
        f"{n} bytes; flagged {flagged}/{n}; correct first_bad_height {correct}/{n}; honest clean={clean}; "
        f"{elapsed:.1f}s" + (f"; misses {misses}" if misses else ""),
    )


# -- 5 ---------------------------------------------------------------------------


def test_constant_proof_size(acceptance):
    dims = [2**k for k in range(6, 15)]
    transparent = {d: bench_point(d, 2, "transparent", repeats=1)[0].size for d in dims}
    mock = {d: bench_point(d, 2, "mock", repeats=1)[0].size for d in dims}
    ok = set(transparent.values()) == {32} and set(mock.values()) == {128}
    acceptance(
        5,
        "constant proof size across d in 64..16384",
        ok,
        f"transparent sizes {sorted(set(transparent.values()))} B; mock sizes {sorted(set(mock.values()))} B",
    )


# -- 6 ---------------------------------------------------------------------------


def test_verification_cost_envelope(acceptance):
    _, _, verify_ms = bench_point(4096, 16, "transparent", repeats=3)
    rows = run_sweep(SweepConfig(dims=DEFAULT_DIMS, clients=DEFAULT_CLIENTS, backends=("transparent",), ledger_txs=100))
    fits = scaling_fits(rows)
    ok = verify_ms < 1000.0 and fits["dN"] >= 0.9
    acceptance(
        6,
        "verification cost envelope (d=4096, N=16) and O(d*N) regression",
        ok,
        f"verify {verify_ms:.1f} ms < 1000 ms; R^2 on d*N = {fits['dN']:.3f} (needs >= 0.9); "
        f"R^2 on d+N = {fits['d_plus_N']:.3f}; R^2 on (d, N, d*N) = {fits['bilinear']:.3f}",
    )


# -- 7 ---------------------------------------------------------------------------


def test_freshness_and_replay(acceptance):
    replay = [run_scenario("replay-update", seed=s) for s in range(100)]
    dup = [run_scenario("duplicate-submission", seed=s) for s in range(100)]
    replay_ok = sum(r.as_expected and r.reason == "stale-round" for r in replay)
    dup_ok = sum(r.as_expected and r.reason == "duplicate-commitment" for r in dup)
    first_wins = sum(bool(r.evidence.get("first_submission_wins")) for r in dup)
    ok = replay_ok == dup_ok == first_wins == 100
    acceptance(
        7,
        "freshness and replay (100 seeded trials each)",
        ok,
        f"cross-round replay rejected {replay_ok}/100; duplicate rejected {dup_ok}/100; "
        f"first submission wins {first_wins}/100",
    )


# -- 8 ---------------------------------------------------------------------------


def _fd_grad(model, w, X, y, eps=1e-6):
    g = np.empty_like(w)
    for i in range(len(w)):
        e = np.zeros_like(w)
        e[i] = eps
        g[i] = (model.loss_and_grad(w + e, X, y)[0] - model.loss_and_grad(w - e, X, y)[0]) / (2 * eps)
    return g


def test_numerical_correctness(acceptance):
    worst = 0.0
    for k in range(100):
        rng = np.random.default_rng([8, k])
        feat, n = int(rng.integers(1, 12)), int(rng.integers(1, 40))
        model = LogisticModel(feat) if k % 2 == 0 else MLPModel(feat, hidden=int(rng.integers(1, 6)))
        w = rng.normal(size=model.dimension)
        X, y = rng.normal(size=(n, feat)), rng.integers(0, 2, n).astype(float)
        g = model.loss_and_grad(w, X, y)[1]
        fd = _fd_grad(model, w, X, y)
        worst = max(worst, float(np.abs(g - fd).max() / max(np.abs(fd).max(), 1e-8)))

    agg_ok = 0
    for k in range(1000):
        rng = np.random.default_rng([9, k])
        n, d = int(rng.integers(1, 17)), int(rng.integers(1, 33))
        cfg = FixedPointConfig(d, max_clients=16)
        extreme = k % 10 == 0
        lim = cfg.clamp_int
        values = [rng.choice([-lim, lim], d) if extreme else rng.integers(-lim, lim + 1, d) for _ in range(n)]
        weights = [cfg.max_weight if extreme else int(rng.integers(1, cfg.max_weight + 1)) for _ in range(n)]
        oracle = [sum(int(w) * int(v[j]) for v, w in zip(values, weights)) for j in range(d)]
        field = [0] * d
        for v, w in zip(values, weights):
            for j, e in enumerate(encode_ints(v.tolist())):
                field[j] = (field[j] + w * e) % ORDER
        machine = sum(w * v.astype(np.int64) for v, w in zip(values, weights))
        agg_ok += decode_from_scalars(field, cfg) == oracle and machine.tolist() == oracle

    ok = worst <= 1e-4 and agg_ok == 1000
    acceptance(
        8,
        "numerical correctness (gradients vs finite differences, field vs big-integer aggregation)",
        ok,
        f"worst relative gradient error {worst:.2e} over 100 cases (<= 1e-4); field == oracle on {agg_ok}/1000",
    )


def test_commitment_homomorphism_matches_oracle():
    params = setup_params(16, b"oracle")
    for k in range(50):
        rng = np.random.default_rng([10, k])
        n = int(rng.integers(1, 9))
        vals = [rng.integers(-(1 << 20), 1 << 20, 16) for _ in range(n)]
        ws = [int(w) for w in rng.integers(1, 1000, n)]
        rs = [Scalar.random(rng) for _ in range(n)]
        cs = [commit_vector(params, encode_ints(v.tolist()), r) for v, r in zip(vals, rs)]
        total = [sum(w * int(v[j]) for v, w in zip(vals, ws)) for j in range(16)]
        r_agg = sum((r * w for r, w in zip(rs, ws)), Scalar(0))
        assert commit_vector(params, encode_ints(total), r_agg) == combine(cs, ws)


# -- 9 ---------------------------------------------------------------------------


def test_data_minimization(acceptance):
    cfg = attack_config().replace(rounds=3)
    fed = Federation(cfg)
    fed.run(3)
    chain = fed.ledger.to_bytes()
    needles: list[tuple[str, bytes]] = []
    for c in fed.clients:
        for t, op in c.openings.items():
            q = op.update.values
            needles += [
                (f"quantized update c{c.index} r{t}", q.astype("<i8").tobytes()),
                (f"real update c{c.index} r{t}", (q / fed.fixed_point.scale).astype("<f8").tobytes()),
                (f"blinding c{c.index} r{t}", op.blinding.to_bytes()),
                (f"opening c{c.index} r{t}", op.update.to_bytes()),
            ]
            # Any 4-coordinate window of the update, in field or int64 encoding.
            enc = encode_ints(q.tolist())
            needles.append((f"field window c{c.index} r{t}", b"".join(x.to_bytes(32, "little") for x in enc[1:3])))
            needles.append((f"int64 window c{c.index} r{t}", q[5:9].astype("<i8").tobytes()))
        data = c.data
        needles.append((f"training features c{c.index}", data.features[:2].astype("<f8").tobytes()))
    needles.append(("final model parameters", fed.W.astype("<f8").tobytes()))
    needles.append(("model parameter window", fed.W[3:7].astype("<f8").tobytes()))
    hits = [name for name, b in needles if b in chain]
    acceptance(
        9,
        "data minimization scan of persisted chain bytes",
        not hits,
        f"{len(needles)} patterns over {len(chain)} bytes; hits {len(hits)}" + (f": {hits[:5]}" if hits else ""),
    )


# -- 10 --------------------------------------------------------------------------


def test_determinism(acceptance, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert cli_main(["run", "--out", str(out_a), "--seed", "11"]) == 0
    assert cli_main(["run", "--out", str(out_b), "--seed", "11"]) == 0
    same = {name: (out_a / name).read_bytes() == (out_b / name).read_bytes() for name in ("chain.bin", "metrics.csv")}
    other = tmp_path / "c"
    assert cli_main(["run", "--out", str(other), "--seed", "12"]) == 0
    differs = (other / "chain.bin").read_bytes() != (out_a / "chain.bin").read_bytes()
    acceptance(
        10,
        "determinism of cmd_run (chain and metrics byte-identical)",
        all(same.values()) and differs,
        f"identical {same}; different seed changes chain: {differs}",
    )
