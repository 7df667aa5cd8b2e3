"""Command-line entry point.

Subcommands cover the whole pipeline: generate a synthetic dataset, train
the predictor, evaluate it, estimate the random baseline, replay a single
scripted session, and serve the HTTP backend for the browser tool.

Exit codes: 0 on success, 1 on validation errors (bad flags, bad config,
mismatched checkpoints), 2 on unexpected runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import evaluation, lstm, operators, robot, session
from .codec import CodecError, build_vocabulary, encode_session

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, per the CLI contract."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_VALIDATION)


def _load_config(path: str | None) -> robot.RobotConfig:
    if path is None:
        return robot.load_default_config()
    return robot.load_robot_config(Path(path).read_bytes())


def _load_dataset(data_path: str, splits_path: str | None):
    with open(data_path) as fh:
        logs = session.read_logs_jsonl(fh)
    assignment = None
    if splits_path:
        assignment = json.loads(Path(splits_path).read_text())
        missing = [log.session_id for log in logs if log.session_id not in assignment]
        if missing:
            raise operators.GenerationError(
                f"splits file lacks {len(missing)} session ids (first: {missing[0]})"
            )
    return logs, assignment


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    result = operators.generate_dataset(
        config, sessions_per_fault=args.sessions_per_fault, seed=args.seed
    )
    stats = result.dataset.stats
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as fh:
        session.write_logs_jsonl(result.dataset.logs, fh)
    splits_path = Path(args.splits) if args.splits else out_path.parent / "splits.json"
    splits_path.write_text(json.dumps(result.dataset.split_assignment, indent=2, sort_keys=True) + "\n")

    fr = result.filter_result
    print(f"raw sessions: {len(result.raw)}")
    print(f"kept: {stats.count} (removed {fr.removed_outliers} outliers, {fr.removed_unresolved} unresolved)")
    print(f"mean length: {stats.mean_length:.2f}")
    print(f"action-to-read ratio: {stats.action_to_read_ratio:.4f}")
    sizes = {name: len(result.dataset.split(name)) for name in ("train", "val", "test")}
    print(f"splits: {sizes['train']}/{sizes['val']}/{sizes['test']} -> {out_path}, {splits_path}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    vocab = build_vocabulary(config)
    logs, assignment = _load_dataset(args.data, args.splits)
    if assignment is None:
        raise operators.GenerationError("train requires --splits (generate writes it next to the data)")
    include_symptom = not args.no_symptom_token
    encoded = {
        name: [
            encode_session(vocab, config, log, include_symptom=include_symptom)
            for log in logs
            if assignment[log.session_id] == name
        ]
        for name in ("train", "val")
    }
    dims = lstm.dims_for(
        vocab, d_tok=args.d_tok, d_val=args.d_val, d_tax=args.d_tax, hidden=args.hidden
    )
    train_config = lstm.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        grad_clip_norm=args.clip,
        seed=args.seed,
        early_stop_patience=args.patience,
    )
    params = lstm.init_params(dims, seed=args.seed)
    result = lstm.train(params, encoded["train"], encoded["val"], train_config)
    lstm.save_checkpoint(
        args.out, result.params, vocab.vocab_hash, train_config, include_symptom=include_symptom
    )

    last = result.history[-1]
    best = result.history[result.best_epoch] if result.best_epoch >= 0 else last
    print(f"epochs run: {len(result.history)} (early stop: {result.stopped_early})")
    best_val = "n/a" if best.val_loss is None else f"{best.val_loss:.4f}"
    print(f"best epoch: {result.best_epoch} val loss {best_val}")
    print(f"final train loss: {last.train_loss:.4f}")
    print(f"checkpoint: {args.out} ({lstm.checkpoint_fingerprint(args.out)[:16]})")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    vocab = build_vocabulary(config)
    checkpoint = lstm.load_checkpoint(args.model, expected_vocab_hash=vocab.vocab_hash)
    logs, assignment = _load_dataset(args.data, args.splits)
    if assignment is None:
        raise operators.GenerationError("eval requires --splits")
    test_seqs = [
        encode_session(vocab, config, log, include_symptom=checkpoint.include_symptom)
        for log in logs
        if assignment[log.session_id] == "test"
    ]
    if not test_seqs:
        raise operators.GenerationError("no test sequences in the dataset")

    kstep = evaluation.kstep_experiment(
        checkpoint.params,
        vocab,
        config,
        test_seqs,
        horizons=args.horizons,
        start_buckets=args.start_buckets,
        eval_seed=args.seed,
        suffix_only=args.suffix_only,
    )
    autonomous = evaluation.autonomous_experiment(checkpoint.params, vocab, config, eval_seed=args.seed)
    baseline = evaluation.random_baseline(config, trials=args.trials, seed=args.seed)
    report = evaluation.EvalReport(
        kstep=kstep,
        autonomous=autonomous,
        random_baseline=baseline,
        dataset_fingerprint=evaluation.fingerprint_file(args.data),
        model_fingerprint=lstm.checkpoint_fingerprint(args.model),
    )
    json_path, csv_path = evaluation.emit_report(report, args.out_dir)

    print(f"k-step accuracy (rows: start buckets {list(kstep.start_buckets)}, cols: k {list(kstep.horizons)}):")
    for bi in range(len(kstep.start_buckets)):
        row = " ".join("  n/a" if np.isnan(v) else f"{v:.3f}" for v in kstep.accuracy[bi])
        print(f"  {row}")
    resolved = sum(o.resolved for o in autonomous.outcomes.values())
    print(f"autonomous: {resolved}/{len(autonomous.outcomes)} resolved (success rate {autonomous.success_rate:.3f})")
    print(f"random baseline: {baseline.mean:.4f} (95% CI {baseline.ci95[0]:.4f}-{baseline.ci95[1]:.4f})")
    print(f"report: {json_path}, {csv_path}")
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    estimate = evaluation.random_baseline(config, trials=args.trials, seed=args.seed)
    closed = evaluation.closed_form_baseline(config)
    print(f"random baseline: {estimate.mean:.4f} (95% CI {estimate.ci95[0]:.4f}-{estimate.ci95[1]:.4f}, "
          f"{estimate.trials} trials)")
    print(f"closed form: {closed:.4f}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    names = [name for name, _w, _p in operators.DEFAULT_PROFILE_MIX]
    if args.profile not in names:
        raise operators.GenerationError(f"unknown profile {args.profile!r}; choose from {names}")
    base = dict((name, profile) for name, _w, profile in operators.DEFAULT_PROFILE_MIX)[args.profile]
    fault_id = args.fault
    if fault_id is None:
        rng = np.random.default_rng(args.seed)
        fault_id = config.faults[int(rng.integers(len(config.faults)))].id
    profile = replace(base, seed=args.seed)
    log = operators.simulate_operator(config, fault_id, profile)
    line = session.log_to_json(log)
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(line + "\n")
        print(f"appended session {log.session_id} to {args.out}")
    else:
        print(line)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config(args.config or os.environ.get("TOC_CONFIG"))
    model_path = args.model or os.environ.get("TOC_MODEL")
    vocab = build_vocabulary(config)
    checkpoint = None
    if model_path:
        checkpoint = lstm.load_checkpoint(model_path, expected_vocab_hash=vocab.vocab_hash)
    data_out = Path(args.data_out or os.environ.get("TOC_DATA_OUT", "human_sessions.jsonl"))
    port = args.port if args.port is not None else int(os.environ.get("TOC_PORT", "8080"))
    app = create_app(config=config, checkpoint=checkpoint, data_out=data_out, master_seed=args.seed)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="tocbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="robot config JSON (default: shipped catalog)")
        p.add_argument("--seed", type=int, default=7, help="master seed (default 7)")

    p = sub.add_parser("generate", help="simulate, filter, and split a synthetic dataset")
    common(p)
    p.add_argument("--sessions-per-fault", type=int, default=30)
    p.add_argument("--out", default="data.jsonl")
    p.add_argument("--splits", help="splits sidecar path (default: splits.json next to --out)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the next-step predictor")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--splits", required=True)
    p.add_argument("--out", default="model.ckpt")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--patience", type=int, default=8)
    p.add_argument("--clip", type=float, default=5.0)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--d-tok", type=int, default=16)
    p.add_argument("--d-val", type=int, default=4)
    p.add_argument("--d-tax", type=int, default=4)
    p.add_argument("--no-symptom-token", action="store_true", help="ablate the symptom conditioning token")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the k-step and autonomous experiments")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--splits", required=True)
    p.add_argument("--out-dir", default="reports")
    p.add_argument("--horizons", type=_int_list, default=list(evaluation.DEFAULT_HORIZONS))
    p.add_argument("--start-buckets", type=_int_list, default=list(evaluation.DEFAULT_START_BUCKETS))
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--suffix-only", action="store_true", help="score membership in the unseen suffix only")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="Monte Carlo random baseline")
    common(p)
    p.add_argument("--trials", type=int, default=100_000)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("simulate", help="run one scripted operator session")
    common(p)
    p.add_argument("--fault", help="fault id (default: random under --seed)")
    p.add_argument("--profile", default="typical")
    p.add_argument("--out", help="append the log to this JSONL file instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="serve the HTTP backend")
    common(p)
    p.add_argument("--model", help="checkpoint path (default: TOC_MODEL)")
    p.add_argument("--data-out", help="JSONL for finished human sessions (default: TOC_DATA_OUT)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, help="default: TOC_PORT or 8080")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        robot.ConfigError,
        session.SessionError,
        operators.GenerationError,
        CodecError,
        lstm.CheckpointError,
        FileNotFoundError,
        json.JSONDecodeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failures
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
