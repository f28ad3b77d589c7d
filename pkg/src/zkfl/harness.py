"""Adversary harness: one scripted deviation per trust boundary, run against
the full stack, with machine-checkable detection outcomes.

Every scenario builds a private honest federation, runs one honest warm-up
round (which must stay clean), then one round with the deviation injected by
a hostile wrapper around the targeted component. Compromised-enclave
scenarios subclass ``Enclave`` and keep its keys, so the attestation is
valid and only the proof, the anchors or the inclusion rule can catch them.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .config import CONTROL_SCENARIO, SCENARIO_NAMES, ExperimentConfig, FederationSpec, PolicySpec
from .crypto.group import Scalar
from .crypto.pedersen import commit_vector
from .encoding import QuantizedUpdate, encode_ints
from .errors import ConfigError
from .federation import Federation, RoundFailed, RoundHooks, stream
from .fl import ModelParams, local_train
from .ledger.audit import Auditor, AuditReport
from .ledger.block import iter_frames
from .ledger.tx import RegisterIdentity
from .protocol.client import ClientIdentity, client_prepare_submission
from .protocol.enclave import Contribution, Enclave, RoundOutput
from .protocol.messages import ClientSubmission

LAYER_ENCLAVE = "enclave-ingest"
LAYER_CONTRACT = "contract-verify"
LAYER_CLIENT = "client-distribution-check"
LAYER_AUDITOR = "auditor"


@dataclass(frozen=True)
class Expectation:
    boundary: str  # component the adversary controls
    layer: str | None  # designated detecting layer; None = must stay undetected
    reason: str | None  # designated reason (None: any finding at that layer)
    behavior: str


EXPECTATIONS: dict[str, Expectation] = {
    "tamper-delta": Expectation("aggregator", LAYER_CONTRACT, "proof-invalid", "alter the aggregate after proving"),
    "exclude-client": Expectation("aggregator", LAYER_CONTRACT, "anchor-mismatch", "drop a validated participant"),
    "inject-fabricated": Expectation(
        "aggregator", LAYER_CONTRACT, "anchor-mismatch", "fabricate an update for an offline client"
    ),
    "replay-update": Expectation("network", LAYER_CONTRACT, "stale-round", "resubmit last round's submission"),
    "sybil-unregistered": Expectation("identity", LAYER_CONTRACT, "unknown-identity", "five unregistered clients"),
    "duplicate-submission": Expectation(
        "client", LAYER_CONTRACT, "duplicate-commitment", "second signed update in one round"
    ),
    "norm-poison": Expectation("client", LAYER_ENCLAVE, "norm-exceeded", "scaled update over the norm bound"),
    "equivocate-model": Expectation(
        "aggregator", LAYER_CLIENT, "model-hash-mismatch", "serve one client a different model"
    ),
    "ledger-mutation": Expectation("ledger", LAYER_AUDITOR, None, "rewrite one byte of persisted history"),
    CONTROL_SCENARIO: Expectation("client", None, None, "label-flipped training data with a valid norm"),
}


@dataclass
class DetectionReport:
    scenario: str
    seed: int
    detected: bool
    detecting_layer: str | None
    reason: str | None
    expected_layer: str | None
    expected_reason: str | None
    evidence: dict[str, Any] = field(default_factory=dict)
    baseline_clean: bool = True
    audit_confirmed: bool | None = None

    @property
    def as_expected(self) -> bool:
        if self.expected_layer is None:
            ok = not self.detected
        else:
            ok = (
                self.detected
                and self.detecting_layer == self.expected_layer
                and (self.expected_reason is None or self.reason == self.expected_reason)
            )
        return ok and self.baseline_clean and self.audit_confirmed is not False

    def to_json(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["as_expected"] = self.as_expected
        return d


@dataclass(frozen=True)
class Event:
    layer: str
    reason: str
    evidence: dict[str, Any]


def attack_config(base: ExperimentConfig | None = None) -> ExperimentConfig:
    """The default attack federation: N=8, d=128, small sites for speed."""
    if base is not None:
        return base
    return ExperimentConfig(
        federation=FederationSpec(num_sites=8, per_site=(40, 48, 56, 64, 72, 80, 88, 96), test_size=200),
        policy=PolicySpec(norm_bound=4.0, quorum=1, round_timeout=4),
        rounds=2,
    )


# -- compromised enclaves --------------------------------------------------------


class _Compromised(Enclave):
    """Behaves honestly until ``armed``; keeps the genuine enclave keys."""

    armed = False


class TamperingEnclave(_Compromised):
    """Proves the honest aggregate, then publishes ``Δ_q + e_j`` re-attested."""

    coordinate = 0

    def aggregate_and_prove(self, prev_model: ModelParams) -> RoundOutput:
        if not self.armed:
            return super().aggregate_and_prove(prev_model)
        self.close_round()
        statement, r_agg = self._build_statement(self._accepted)
        proof = self._prove(statement, r_agg)
        agg = statement.aggregate.copy()
        agg[self.coordinate] += 1
        forged = dataclasses.replace(statement, aggregate=agg)
        return self._publish(forged, proof, prev_model, 0.0)


class ExcludingEnclave(_Compromised):
    """Silently drops one validated participant and proves the rest honestly."""

    victim: bytes | None = None

    def aggregate_and_prove(self, prev_model: ModelParams) -> RoundOutput:
        if not self.armed:
            return super().aggregate_and_prove(prev_model)
        victim = self.victim or sorted(self._accepted)[0]
        self._accepted = {c: v for c, v in self._accepted.items() if c != victim}
        return super().aggregate_and_prove(prev_model)


class InjectingEnclave(_Compromised):
    """Adds a fabricated contribution for a registered client that never submitted."""

    victim: bytes | None = None
    victim_weight: int = 1
    rng: np.random.Generator | None = None

    def aggregate_and_prove(self, prev_model: ModelParams) -> RoundOutput:
        if not self.armed:
            return super().aggregate_and_prove(prev_model)
        assert self.victim is not None and self._header is not None
        rng = self.rng or np.random.default_rng(0)
        values = rng.integers(-self.cfg.scale, self.cfg.scale, size=self.params.dimension).astype(np.int64)
        qu = QuantizedUpdate(values, self.cfg.config_id(), self._header.round_t)
        r = Scalar.random(rng)
        c = commit_vector(self.params, encode_ints(values), r)
        self._accepted[self.victim] = Contribution(qu, r, self.victim_weight, c)
        return super().aggregate_and_prove(prev_model)


# -- scenario plumbing ---------------------------------------------------------


def _round_events(fed: Federation) -> list[Event]:
    ev = fed.events
    out = [Event(LAYER_CONTRACT, r["reason"], dict(r)) for r in ev.contract_rejections]
    out += [Event(LAYER_ENCLAVE, r["reason"], dict(r)) for r in ev.enclave_rejections]
    if ev.distribution_ok is False:
        out.append(
            Event(
                LAYER_CLIENT,
                "model-hash-mismatch",
                {
                    "round_t": ev.round_t,
                    "observer": fed.observer,
                    "received_model_hash": ev.received_model_hash.hex() if ev.received_model_hash else None,
                    "ledger_model_hash": fed.ledger.get_model_hash(ev.round_t).hex(),
                },
            )
        )
    return out


def _attack_round(fed: Federation, hooks: RoundHooks | None = None) -> tuple[list[Event], str | None]:
    try:
        fed.run_round(hooks)
        failure = None
    except RoundFailed as exc:
        failure = exc.reason
    return _round_events(fed), failure


def _warm_up(fed: Federation) -> bool:
    fed.run_round()
    return fed.events.clean


@dataclass
class _Outcome:
    events: list[Event]
    extra: dict[str, Any] = field(default_factory=dict)
    chain: bytes | None = None  # defaults to the federation's chain
    check: Callable[[AuditReport], bool] | None = None


def _s_tamper(fed: Federation, seed: int) -> _Outcome:
    assert isinstance(fed.enclave, TamperingEnclave)
    fed.enclave.coordinate = int(stream(seed, 40).integers(fed.cfg.dimension))
    events, failure = _attack_round(fed)
    return _Outcome(events, {"coordinate": fed.enclave.coordinate, "round_failed": failure})


def _s_exclude(fed: Federation, seed: int) -> _Outcome:
    assert isinstance(fed.enclave, ExcludingEnclave)
    victim = fed.clients[int(stream(seed, 41).integers(len(fed.clients)))]
    fed.enclave.victim = victim.identity.client_id
    events, failure = _attack_round(fed)
    return _Outcome(events, {"victim": victim.identity.client_id.hex(), "round_failed": failure})


def _s_inject(fed: Federation, seed: int) -> _Outcome:
    assert isinstance(fed.enclave, InjectingEnclave)
    victim = fed.clients[int(stream(seed, 42).integers(len(fed.clients)))]
    fed.online.discard(victim.index)
    fed.enclave.victim = victim.identity.client_id
    fed.enclave.victim_weight = victim.weight
    fed.enclave.rng = stream(seed, 43)
    events, failure = _attack_round(fed)
    return _Outcome(events, {"victim": victim.identity.client_id.hex(), "round_failed": failure})


class _ReplayHooks(RoundHooks):
    def __init__(self, old: ClientSubmission) -> None:
        self.old = old

    def submissions(self, fed, header, subs):
        return subs + [self.old]


def _s_replay(fed: Federation, seed: int) -> _Outcome:
    victim = int(stream(seed, 44).integers(len(fed.clients)))
    cid = fed.clients[victim].identity.client_id
    old = next(s for s in fed.last_submissions if s.client_id == cid)
    fed.online.discard(victim)
    events, failure = _attack_round(fed, _ReplayHooks(old))
    return _Outcome(events, {"victim": cid.hex(), "replayed_round": old.round_t, "round_failed": failure})


class _SybilHooks(RoundHooks):
    def __init__(self, sybils: list[ClientIdentity], seed: int) -> None:
        self.sybils = sybils
        self.seed = seed

    def submissions(self, fed, header, subs):
        extra = []
        for j, ident in enumerate(self.sybils):
            # Registration without a registrar signature.
            res = fed.ledger.submit_tx(RegisterIdentity(ident.public_key, f"sybil-{j}", bytes(64)))
            fed.events.contract_rejections.append(
                {"tx": "RegisterIdentity", "reason": res.reason, "tx_hash": res.tx_hash.hex(), "height": res.tick}
            )
            update = stream(self.seed, 45, j).normal(scale=0.05, size=fed.cfg.dimension)
            ident.registered = True  # the attacker proceeds as if registered
            sub, _ = client_prepare_submission(
                ident,
                update,
                header,
                fed.enclave.public.seal_public,
                fed.fixed_point,
                params=fed.params,
                weight=50,
                rng=stream(self.seed, 46, j),
            )
            extra.append(sub)
        return subs + extra


def _s_sybil(fed: Federation, seed: int) -> _Outcome:
    sybils = [ClientIdentity.from_seed(bytes(stream(seed, 47, j).bytes(32)), fed.hash_name) for j in range(5)]
    events, failure = _attack_round(fed, _SybilHooks(sybils, seed))
    return _Outcome(events, {"sybils": [s.client_id.hex() for s in sybils], "round_failed": failure})


class _DuplicateHooks(RoundHooks):
    def __init__(self, index: int, seed: int) -> None:
        self.index = index
        self.seed = seed
        self.first: ClientSubmission | None = None

    def submissions(self, fed, header, subs):
        cid = fed.clients[self.index].identity.client_id
        self.first = next(s for s in subs if s.client_id == cid)
        update = stream(self.seed, 48).normal(scale=0.05, size=fed.cfg.dimension)
        second = fed.prepare(header, self.index, update)
        return subs + [second]


def _s_duplicate(fed: Federation, seed: int) -> _Outcome:
    index = int(stream(seed, 49).integers(len(fed.clients)))
    hooks = _DuplicateHooks(index, seed)
    events, failure = _attack_round(fed, hooks)
    first_wins = False
    if failure is None and fed.last_output is not None and hooks.first is not None:
        part = {p.client_id: p.commitment for p in fed.last_output.statement.participants}
        first_wins = part.get(hooks.first.client_id) == hooks.first.commitment
    return _Outcome(events, {"client": index, "first_submission_wins": first_wins, "round_failed": failure})


class _NormHooks(RoundHooks):
    """Client ``a`` sits exactly on B², client ``b`` at B²+1, client ``c`` sends a 50x update."""

    def __init__(self, a: int, b: int, c: int) -> None:
        self.a, self.b, self.c = a, b, c

    def submissions(self, fed, header, subs):
        B = fed.policy.norm_bound
        d = fed.cfg.dimension
        cid = {i: fed.clients[i].identity.client_id for i in (self.a, self.b, self.c)}
        on_bound = np.zeros(d, dtype=np.int64)
        on_bound[0] = B
        over = on_bound.copy()
        over[1] = 1
        q_id = fed.fixed_point.config_id()
        out = []
        for s in subs:
            if s.client_id == cid[self.a]:
                s = fed.prepare(header, self.a, None, quantized=QuantizedUpdate(on_bound, q_id, header.round_t))
            elif s.client_id == cid[self.b]:
                s = fed.prepare(header, self.b, None, quantized=QuantizedUpdate(over, q_id, header.round_t))
            elif s.client_id == cid[self.c]:
                big = np.full(d, 50 * B // int(np.sqrt(d)) + 1, dtype=np.int64)
                big = np.minimum(big, fed.fixed_point.clamp_int)
                s = fed.prepare(header, self.c, None, quantized=QuantizedUpdate(big, q_id, header.round_t))
            out.append(s)
        return out


def _s_norm(fed: Federation, seed: int) -> _Outcome:
    a, b, c = (int(x) for x in stream(seed, 50).permutation(len(fed.clients))[:3])
    events, failure = _attack_round(fed, _NormHooks(a, b, c))
    ids = {i: fed.clients[i].identity.client_id.hex() for i in (a, b, c)}
    rejected = {r["client_id"]: r["reason"] for r in fed.events.enclave_rejections}
    boundary = {
        "at_B2_accepted": ids[a] not in rejected,
        "at_B2_plus_1_rejected": rejected.get(ids[b]) == "norm-exceeded",
        "scaled_rejected": rejected.get(ids[c]) == "norm-exceeded",
    }
    # Detection requires the boundary probe to behave exactly.
    if not all(boundary.values()):
        events = [e for e in events if e.reason != "norm-exceeded"]
    return _Outcome(events, {"boundary": boundary, "round_failed": failure})


class _EquivocateHooks(RoundHooks):
    def __init__(self, seed: int) -> None:
        self.seed = seed

    def distribute(self, fed, model, client_index):
        w = model.weights.copy()
        w[int(stream(self.seed, 51).integers(len(w)))] += 1e-3
        return ModelParams(w, model.kind)


def _s_equivocate(fed: Federation, seed: int) -> _Outcome:
    fed.observer = int(stream(seed, 52).integers(len(fed.clients)))
    events, failure = _attack_round(fed, _EquivocateHooks(seed))
    return _Outcome(events, {"round_failed": failure})


def _s_ledger_mutation(fed: Federation, seed: int) -> _Outcome:
    fed.run_round()
    chain = fed.ledger.to_bytes()
    frames = [(off, data) for off, data in iter_frames(chain)]
    rng = stream(seed, 53)
    height = int(rng.integers(1, len(frames)))
    off, data = frames[height]
    assert data is not None
    pos = off + 4 + int(rng.integers(len(data)))
    mutated = bytearray(chain)
    mutated[pos] ^= 1 << int(rng.integers(8))
    report = Auditor(fed.genesis).audit(bytes(mutated))
    events = []
    if not report.chain_valid:
        f = report.findings[0]
        events.append(Event(LAYER_AUDITOR, f.kind, {"first_bad_height": report.first_bad_height, "detail": f.detail}))
    return _Outcome(
        events,
        {"mutated_height": height, "byte_offset": pos, "first_bad_height": report.first_bad_height},
        chain=bytes(mutated),
        check=lambda rep: (not rep.chain_valid) and rep.first_bad_height == height,
    )


class _SemanticPoisonHooks(RoundHooks):
    def __init__(self, index: int) -> None:
        self.index = index

    def submissions(self, fed, header, subs):
        c = fed.clients[self.index]
        flipped = dataclasses.replace(c.data, labels=1.0 - c.data.labels)
        tc = fed.cfg.train_config(0)
        update = local_train(fed.W, flipped, tc, fed.model)
        poisoned = fed.prepare(header, self.index, update)
        return [poisoned if s.client_id == c.identity.client_id else s for s in subs]


def _s_semantic(fed: Federation, seed: int) -> _Outcome:
    index = int(stream(seed, 54).integers(len(fed.clients)))
    events, failure = _attack_round(fed, _SemanticPoisonHooks(index))
    return _Outcome(events, {"client": index, "round_failed": failure})


_SCENARIOS: dict[str, tuple[Callable[[Federation, int], _Outcome], type[Enclave]]] = {
    "tamper-delta": (_s_tamper, TamperingEnclave),
    "exclude-client": (_s_exclude, ExcludingEnclave),
    "inject-fabricated": (_s_inject, InjectingEnclave),
    "replay-update": (_s_replay, Enclave),
    "sybil-unregistered": (_s_sybil, Enclave),
    "duplicate-submission": (_s_duplicate, Enclave),
    "norm-poison": (_s_norm, Enclave),
    "equivocate-model": (_s_equivocate, Enclave),
    "ledger-mutation": (_s_ledger_mutation, Enclave),
    CONTROL_SCENARIO: (_s_semantic, Enclave),
}


def confirm_evidence(report: DetectionReport, chain: bytes, auditor: Auditor, outcome: _Outcome) -> bool:
    """Re-derive the finding from persisted chain bytes alone."""
    audit = auditor.audit(chain)
    if outcome.check is not None:
        return outcome.check(audit)
    if not audit.chain_valid:
        return False
    ev = report.evidence
    if report.detecting_layer == LAYER_CONTRACT:
        return any(r["tx_hash"] == ev["tx_hash"] and r["reason"] == ev["reason"] for r in audit.rejections)
    if report.detecting_layer == LAYER_ENCLAVE:
        return any(r["tx_hash"] == ev.get("receipt_tx_hash") and r["reason"] == ev["reason"] for r in audit.receipts)
    if report.detecting_layer == LAYER_CLIENT:
        mh = audit.model_hash(ev["round_t"])
        return mh is not None and mh.hex() == ev["ledger_model_hash"] != ev["received_model_hash"]
    return True  # nothing detected: the chain must simply audit clean


def run_scenario(
    name: str, cfg: ExperimentConfig | None = None, seed: int = 0, *, skip_verification: bool = False
) -> DetectionReport:
    if name not in _SCENARIOS:
        raise ConfigError(f"unknown-scenario: {name!r}")
    cfg = attack_config(cfg).replace(seed=seed)
    fn, enclave_cls = _SCENARIOS[name]
    fed = Federation(cfg, verify_proofs=not skip_verification, enclave_cls=enclave_cls)
    baseline_clean = _warm_up(fed)
    if isinstance(fed.enclave, _Compromised):
        fed.enclave.armed = True
    outcome = fn(fed, seed)
    exp = EXPECTATIONS[name]
    events = outcome.events
    hit = next((e for e in events if e.layer == exp.layer and (exp.reason is None or e.reason == exp.reason)), None)
    first = hit or (events[0] if events else None)
    rep = DetectionReport(
        scenario=name,
        seed=seed,
        detected=first is not None,
        detecting_layer=first.layer if first else None,
        reason=first.reason if first else None,
        expected_layer=exp.layer,
        expected_reason=exp.reason,
        evidence={**(first.evidence if first else {}), **outcome.extra},
        baseline_clean=baseline_clean,
    )
    if name == "duplicate-submission" and not outcome.extra.get("first_submission_wins"):
        rep.detected = False
    chain = outcome.chain if outcome.chain is not None else fed.ledger.to_bytes()
    rep.audit_confirmed = confirm_evidence(rep, chain, Auditor(fed.genesis), outcome)
    return rep


def run_baseline(cfg: ExperimentConfig | None = None, seed: int = 0, rounds: int = 2) -> DetectionReport:
    cfg = attack_config(cfg).replace(seed=seed)
    fed = Federation(cfg)
    clean = True
    for _ in range(rounds):
        fed.run_round()
        clean &= fed.events.clean
    audit = Auditor(fed.genesis).audit(fed.ledger.to_bytes())
    return DetectionReport(
        "honest-baseline", seed, not clean, None, None, None, None,
        {"rounds": rounds}, baseline_clean=clean, audit_confirmed=audit.chain_valid and not audit.rejections,
    )


@dataclass
class SuiteResult:
    reports: list[DetectionReport]
    baselines: list[DetectionReport]
    complete: bool

    def to_json(self) -> dict[str, Any]:
        return {
            "complete": self.complete,
            "reports": [r.to_json() for r in self.reports],
            "baselines": [b.to_json() for b in self.baselines],
        }

    def summary(self) -> str:
        rows = [("scenario", "runs", "detected", "layer", "reason", "expected", "ok")]
        names: list[str] = []
        for r in self.reports:
            if r.scenario not in names:
                names.append(r.scenario)
        for n in names:
            rs = [r for r in self.reports if r.scenario == n]
            det = sum(r.detected for r in rs)
            r0 = rs[0]
            exp = f"{r0.expected_layer}/{r0.expected_reason or '*'}" if r0.expected_layer else "undetected"
            rows.append((n, str(len(rs)), str(det), r0.detecting_layer or "-", r0.reason or "-", exp,
                         "yes" if all(r.as_expected for r in rs) else "NO"))
        clean = sum(not b.detected and b.as_expected for b in self.baselines)
        rows.append(("honest-baseline", str(len(self.baselines)), str(len(self.baselines) - clean), "-", "-",
                     "undetected", "yes" if clean == len(self.baselines) else "NO"))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def _job(args: tuple[str, ExperimentConfig | None, int, bool]) -> DetectionReport:
    name, cfg, seed, skip = args
    if name == "honest-baseline":
        return run_baseline(cfg, seed)
    return run_scenario(name, cfg, seed, skip_verification=skip)


def run_all(
    cfg: ExperimentConfig | None = None,
    *,
    seeds: Any = None,
    scenarios: tuple[str, ...] | None = None,
    include_control: bool = True,
    skip_verification: tuple[str, ...] = (),
    workers: int = 1,
) -> SuiteResult:
    """Run every scenario for every seed plus one honest baseline per seed."""
    if cfg is not None and cfg.attacks is not None:
        scenarios = scenarios or cfg.attacks.scenarios
        include_control = cfg.attacks.include_control
        skip_verification = skip_verification or cfg.attacks.skip_verification
        if seeds is None:
            seeds = range(cfg.seed, cfg.seed + cfg.attacks.repetitions)
    names = list(scenarios or SCENARIO_NAMES)
    unknown = set(names) - set(SCENARIO_NAMES)
    if unknown:
        raise ConfigError(f"unknown scenario(s): {sorted(unknown)}")
    if include_control:
        names.append(CONTROL_SCENARIO)
    seeds = list(seeds if seeds is not None else [cfg.seed if cfg else 0])
    jobs = [("honest-baseline", cfg, s, False) for s in seeds]
    jobs += [(n, cfg, s, n in skip_verification) for n in names for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    baselines = [r for r in results if r.scenario == "honest-baseline"]
    reports = [r for r in results if r.scenario != "honest-baseline"]
    complete = all(r.as_expected for r in results)
    return SuiteResult(reports, baselines, complete)


def load_suite(doc: Mapping[str, Any]) -> ExperimentConfig:
    """An attack config is an ordinary experiment config with an ``attacks`` section."""
    cfg = ExperimentConfig.from_json(doc)
    if cfg.attacks is None:
        raise ConfigError("attack config needs an 'attacks' section")
    return cfg


def dump_reports(result: SuiteResult) -> str:
    return json.dumps(result.to_json(), indent=2, sort_keys=True)
