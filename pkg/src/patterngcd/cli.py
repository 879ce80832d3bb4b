"""Command line entry points.

Exit codes: 0 success, 2 configuration problem, 3 data problem,
4 oracle problem, 1 anything else.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

from .config import RunConfig, load_config
from .datasets import load_dataset, synth_gcd, write_dataset
from .errors import PatternGCDError
from .evaluation import gcd_metrics, write_confusion_csv
from .oracle import make_backend
from .pipeline import Checkpoint, eval_predictions, run_baseline, run_training

log = logging.getLogger("patterngcd")

_OVERRIDE_FIELDS = [f.name for f in fields(RunConfig)]


def _add_config_overrides(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("config overrides")
    for name in _OVERRIDE_FIELDS:
        group.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None)


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    for name in _OVERRIDE_FIELDS:
        raw = getattr(args, name, None)
        if raw is None:
            continue
        ftype = next(f.type for f in fields(RunConfig) if f.name == name)
        if ftype == "int":
            overrides[name] = int(raw)
        elif ftype == "float":
            overrides[name] = float(raw)
        else:
            overrides[name] = None if str(raw).lower() in ("none", "null") else int(raw)
    return config.replace(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patterngcd",
        description="Generalized category discovery with oracle-mined class patterns",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the full training loop")
    p_train.add_argument("--config", default=None, help="flat key = value config file")
    p_train.add_argument("--data", required=True, help="JSONL dataset file")
    p_train.add_argument("--oracle", choices=("http", "mock", "replay"), default="mock")
    p_train.add_argument("--replay", default=None, help="transcript for the replay oracle")
    p_train.add_argument("--model", default=None, help="model name for the http oracle")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.add_argument("--resume", default=None, help="checkpoint to continue from")
    _add_config_overrides(p_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint on the test split")
    p_eval.add_argument("--ckpt", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--confusion-csv", default=None, help="write the aligned confusion matrix here")

    p_base = sub.add_parser("baseline", help="clustering-only reference metrics")
    p_base.add_argument("--data", required=True)
    p_base.add_argument("--seed", type=int, default=0)
    p_base.add_argument("--config", default=None)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--k", type=int, default=9, help="total number of classes")
    p_synth.add_argument("--known", type=int, default=6)
    p_synth.add_argument("--dim", type=int, default=16)
    p_synth.add_argument("--sizes", default=None, help="comma-separated per-class sizes")
    p_synth.add_argument("--noise", type=float, default=0.35)

    p_pat = sub.add_parser("patterns", help="dump the patterns stored in a checkpoint")
    p_pat.add_argument("--ckpt", required=True)

    return parser


def _cmd_train(args) -> int:
    config = _resolve_config(args)
    bundle = load_dataset(args.data)
    backend = make_backend(args.oracle, replay_path=args.replay, model=args.model)
    result = run_training(
        bundle, config, backend, seed=args.seed, out_dir=args.out, resume=args.resume
    )
    last = result.history[-1]["losses"] if result.history else {}
    print(
        json.dumps(
            {
                "epochs": config.epochs,
                "rounds": result.rounds,
                "final_losses": last,
                "checkpoint": result.checkpoint_path,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_eval(args) -> int:
    bundle = load_dataset(args.data)
    ckpt = Checkpoint.load(args.ckpt)
    pred = eval_predictions(ckpt, bundle)
    metrics = gcd_metrics(pred, bundle.eval_labels("test"), bundle.known_classes, bundle.K)
    print(json.dumps(metrics.to_json(), sort_keys=True))
    if args.confusion_csv:
        write_confusion_csv(
            pred, bundle.eval_labels("test"), bundle.K, metrics.permutation, args.confusion_csv
        )
    return 0


def _cmd_baseline(args) -> int:
    bundle = load_dataset(args.data)
    config = load_config(args.config) if args.config else RunConfig()
    metrics = run_baseline(bundle, seed=args.seed, config=config)
    print(json.dumps(metrics.to_json(), sort_keys=True))
    return 0


def _cmd_synth(args) -> int:
    sizes = None
    if args.sizes:
        sizes = [int(v) for v in args.sizes.split(",")]
    try:
        bundle = synth_gcd(
            seed=args.seed, K=args.k, known=args.known, dim=args.dim, sizes=sizes, noise=args.noise
        )
    except ValueError as exc:
        print(f"synth: {exc}", file=sys.stderr)
        return 2
    write_dataset(bundle, args.out)
    print(
        json.dumps(
            {
                "out": args.out,
                "K": bundle.K,
                "dim": bundle.dim,
                "n_labeled": len(bundle.indices("labeled")),
                "n_unlabeled": len(bundle.indices("unlabeled")),
                "n_test": len(bundle.indices("test")),
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_patterns(args) -> int:
    ckpt = Checkpoint.load(args.ckpt)
    print(json.dumps(ckpt.store.to_json(), sort_keys=True, indent=2))
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "baseline": _cmd_baseline,
    "synth": _cmd_synth,
    "patterns": _cmd_patterns,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PatternGCDError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
