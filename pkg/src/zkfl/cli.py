"""Command-line front end: ``zkfl {run,attack,audit,bench}``.

Exit codes: 0 success, 2 invalid or unreadable input, 3 a round failed,
4 an attack scenario was not handled as expected, 5 the audited chain is invalid.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from .bench import SweepConfig, code_digest, machine_manifest, rows_to_csv, run_sweep, scaling_fits
from .config import AttackSuiteSpec, ExperimentConfig
from .errors import ConfigError, ZkflError
from .federation import Federation, RoundFailed, RoundRecord
from .fl import ModelParams
from .harness import attack_config, dump_reports, run_all
from .ledger.audit import audit_chain
from .ledger.contract import GenesisConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ROUND_FAILED = 3
EXIT_ATTACK = 4
EXIT_AUDIT = 5

log = logging.getLogger("zkfl")

METRICS_COLUMNS = (
    "round_t",
    "accuracy",
    "auc",
    "shadow_accuracy",
    "shadow_auc",
    "accepted",
    "proof_backend",
    "proof_bytes",
    "prove_ms",
    "verify_ms",
    "timing_source",
    "ledger_txs",
    "finality_ticks",
    "parity_gap_l1",
    "parity_bound_l1",
    "model_gap_l1",
    "distribution_ok",
)
TIMINGS_COLUMNS = ("round_t", "prove_ms", "verify_ms", "source")

REPORT_HEADER = (
    "Utility parity is measured against a seed-matched plain FedAvg shadow run "
    "trained on the same synthetic sites; it stands in for a full-scale "
    "clinical comparison. Mock-backend timings are replayed from published "
    "figures, not measured."
)


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def metrics_rows(records: Sequence[RoundRecord], backend: str, bound: float) -> list[list[str]]:
    rows = []
    for r in records:
        mock = backend == "mock"
        rows.append(
            [
                _fmt(x)
                for x in (
                    r.round_t,
                    r.accuracy,
                    r.auc,
                    r.shadow_accuracy,
                    r.shadow_auc,
                    r.accepted,
                    backend,
                    r.proof_bytes,
                    r.replayed_prove_ms if mock else None,
                    r.replayed_verify_ms if mock else None,
                    "replayed-published" if mock else "measured:timings.csv",
                    r.ledger_txs,
                    r.finality_ticks,
                    r.parity_gap_l1,
                    bound,
                    r.model_gap_l1,
                    r.distribution_ok,
                )
            ]
        )
    return rows


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write(out: Path, name: str, data: str | bytes, written: dict[str, str]) -> None:
    path = out / name
    if isinstance(data, str):
        data = data.encode()
    path.write_bytes(data)
    written[name] = hashlib.sha256(data).hexdigest()


def _load_config(args: argparse.Namespace, default: ExperimentConfig | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else (default or ExperimentConfig())
    changes: dict[str, Any] = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.backend is not None:
        changes["backend"] = args.backend
    return cfg.replace(**changes) if changes else cfg


def _manifest(cfg_json: dict[str, Any], seed: int, written: dict[str, str], extra: dict[str, Any]) -> str:
    doc = {
        "config": cfg_json,
        "seed": seed,
        "code_digest": code_digest(),
        "outputs": dict(sorted(written.items())),
        **extra,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


# -- verbs ---------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fed = Federation(cfg)
    written: dict[str, str] = {}
    _write(out, "config.json", json.dumps(cfg.to_json(), indent=2, sort_keys=True), written)
    _write(out, "genesis.json", json.dumps(fed.genesis.to_json(), indent=2, sort_keys=True), written)
    chain_path = out / "chain.bin"
    chain_path.unlink(missing_ok=True)
    status, failure = EXIT_OK, None
    try:
        for _ in range(cfg.rounds):
            rec = fed.run_round()
            fed.ledger.save(chain_path)
            log.info("round %d finalized: acc=%.4f parity=%.3g", rec.round_t, rec.accuracy, rec.parity_gap_l1)
    except RoundFailed as exc:
        status, failure = EXIT_ROUND_FAILED, exc
        fed.ledger.save(chain_path)
        print(f"round-failed ({exc.reason}): {exc}", file=sys.stderr)
    written["chain.bin"] = hashlib.sha256(chain_path.read_bytes()).hexdigest()
    bound = cfg.parity_bound_l1()
    _write(out, "metrics.csv", _csv(METRICS_COLUMNS, metrics_rows(fed.records, cfg.backend, bound)), written)
    timings = [[r.round_t, _fmt(r.prove_ms), _fmt(r.verify_ms), "measured-wall-clock"] for r in fed.records]
    _write(out, "timings.csv", _csv(TIMINGS_COLUMNS, timings), written)
    _write(out, "model_final.bin", fed.model_params.to_bytes(), written)
    _write(out, "shadow_final.bin", ModelParams(fed.W_shadow, fed.model.kind).to_bytes(), written)
    final = fed.records[-1] if fed.records else None
    report = {
        "note": REPORT_HEADER,
        "rounds_requested": cfg.rounds,
        "rounds_finalized": len(fed.records),
        "round_failed": None if failure is None else {"reason": failure.reason, "message": str(failure)},
        "final_accuracy": final.accuracy if final else None,
        "final_shadow_accuracy": final.shadow_accuracy if final else None,
        "max_parity_gap_l1": max((r.parity_gap_l1 for r in fed.records), default=None),
        "parity_bound_l1": bound,
    }
    _write(out, "report.json", json.dumps(report, indent=2, sort_keys=True), written)
    manifest = _manifest(cfg.to_json(), cfg.seed, written, {"machine": machine_manifest()})
    (out / "manifest.json").write_text(manifest)
    if status == EXIT_OK:
        print(f"{len(fed.records)} rounds finalized; artifacts in {out}")
    return status


def cmd_attack(args: argparse.Namespace) -> int:
    default = attack_config().replace(attacks=AttackSuiteSpec())
    cfg = _load_config(args, default)
    if cfg.attacks is None:
        raise ConfigError("attack config needs an 'attacks' section")
    result = run_all(cfg, workers=cfg.workers)
    summary = result.summary()
    print(summary)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        written: dict[str, str] = {}
        _write(out, "reports.json", dump_reports(result), written)
        _write(out, "summary.txt", summary + "\n", written)
        (out / "manifest.json").write_text(_manifest(cfg.to_json(), cfg.seed, written, {}))
    if not result.complete:
        for r in result.reports + result.baselines:
            if not r.as_expected:
                print(
                    f"FAIL {r.scenario} seed={r.seed}: expected {r.expected_layer}/{r.expected_reason}, "
                    f"got detected={r.detected} {r.detecting_layer}/{r.reason} "
                    f"baseline_clean={r.baseline_clean} audit_confirmed={r.audit_confirmed}",
                    file=sys.stderr,
                )
        return EXIT_ATTACK
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    try:
        chain = Path(args.chain).read_bytes()
        genesis = GenesisConfig.from_json(json.loads(Path(args.genesis).read_text()))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read audit inputs: {exc}") from exc
    report = audit_chain(chain, genesis)
    print(json.dumps(report.to_json(), indent=2, sort_keys=True) if args.json else _audit_text(report))
    return EXIT_OK if report.chain_valid else EXIT_AUDIT


def _audit_text(report) -> str:
    lines = [f"chain_valid: {str(report.chain_valid).lower()}", f"blocks: {report.blocks}"]
    if not report.chain_valid:
        lines.append(f"first_bad_height: {report.first_bad_height}")
        lines += [f"finding: height {f.height} {f.kind}: {f.detail}" for f in report.findings]
    lines.append(f"finalized rounds re-verified: {len(report.rounds)}")
    lines.append(f"logged rejections: {len(report.rejections)}")
    return "\n".join(lines)


def cmd_bench(args: argparse.Namespace) -> int:
    if args.config:
        try:
            sweep = SweepConfig.from_json(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise ConfigError(f"bad sweep config: {exc}") from exc
    else:
        sweep = SweepConfig()
    if args.seed is not None:
        sweep = SweepConfig(**{**sweep.__dict__, "seed": args.seed})
    if args.backend is not None:
        sweep = SweepConfig(**{**sweep.__dict__, "backends": (args.backend,)})
    rows = run_sweep(sweep)
    text = rows_to_csv(rows)
    fits = scaling_fits(rows) if any(r.backend == "transparent" for r in rows) else {}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        written: dict[str, str] = {}
        _write(out, "bench.csv", text, written)
        extra = {"machine": machine_manifest(), "verify_fit_r2": fits, "note": REPORT_HEADER}
        (out / "manifest.json").write_text(_manifest(sweep.__dict__, sweep.seed, written, extra))
    else:
        sys.stdout.write(text)
    if fits:
        print("verify-time fit R^2: " + ", ".join(f"{k}={v:.3f}" for k, v in fits.items()), file=sys.stderr)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zkfl", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp: argparse.ArgumentParser, out_required: bool) -> None:
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--out", metavar="DIR", required=out_required)
        sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--workers", type=int, metavar="N")
        sp.add_argument("--backend", choices=("transparent", "mock"))

    common(sub.add_parser("run", help="run verified training rounds plus a FedAvg shadow"), True)
    common(sub.add_parser("attack", help="run the adversary suite"), False)
    common(sub.add_parser("bench", help="sweep proof and ledger costs"), False)
    a = sub.add_parser("audit", help="replay and verify a persisted chain")
    a.add_argument("chain", metavar="CHAIN")
    a.add_argument("genesis", metavar="GENESIS")
    a.add_argument("--json", action="store_true", help="print the full audit report as JSON")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    verbs = {"run": cmd_run, "attack": cmd_attack, "audit": cmd_audit, "bench": cmd_bench}
    try:
        return verbs[args.verb](args)
    except ZkflError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
