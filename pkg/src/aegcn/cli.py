"""Command-line entry point: ``aegcn {train,eval,gradcheck,aggregate}``.

Exit codes: 0 success, 2 configuration error, 3 data validation error,
4 numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import load_graph
from .errors import ArgumentError, ConfigError, DataValidationError, NumericalError
from .harness import (
    GRADCHECK_CASES,
    RunLog,
    TrainConfig,
    aggregate,
    evaluate,
    format_gradcheck,
    format_summary,
    gradcheck,
    load_params,
    resolve_config,
    run_seeds,
    write_run,
)
from .models import Variant, prepare_hetero, prepare_homo

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

# flag name -> (TrainConfig field, type)
_TRAIN_FLAGS = {
    "--dataset": ("dataset", str),
    "--model": ("model", str),
    "--variant": ("variant", str),
    "--gamma": ("gamma", float),
    "--lr": ("lr", float),
    "--weight-decay": ("weight_decay", float),
    "--dropout": ("dropout", float),
    "--epochs": ("epochs", int),
    "--d0": ("d0", int),
    "--d1": ("d1", int),
    "--channels": ("channels", int),
    "--decoder-layers": ("decoder_layers", int),
    "--seed": ("seed", int),
    "--eval": ("eval", str),
    "--block-rows": ("block_rows", int),
    "--decoder": ("decoder", str),
    "--out": ("out", str),
    "--parallel": ("parallel", int),
}


def _seed_list(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="aegcn", description="Autoencoder-constrained GCN training engine.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train one or more seeds")
    train.add_argument("--config", help="JSON file with TrainConfig fields")
    for flag, (dest, kind) in _TRAIN_FLAGS.items():
        train.add_argument(flag, dest=dest, type=kind, default=None)
    train.add_argument("--seeds", type=_seed_list, default=None, help="comma-separated seeds")
    train.add_argument("--full-bce", dest="full_bce", action="store_const", const=True, default=None)
    train.add_argument("--raw-target", dest="normalized_target", action="store_const", const=False, default=None)
    train.add_argument(
        "--no-decoder-decay", dest="decoder_weight_decay", action="store_const", const=False, default=None,
        help="exclude the decoder weights from weight decay",
    )

    ev = sub.add_parser("eval", help="score saved parameters")
    ev.add_argument("--params", required=True, help=".npz written by 'train --out'")
    ev.add_argument("--dataset", default=None, help="defaults to the dataset recorded with the parameters")
    ev.add_argument("--out", default=None)

    gc = sub.add_parser("gradcheck", help="finite-difference gradient check on toy graphs")
    gc.add_argument("--model", choices=["homo", "hetero"], default=None)
    gc.add_argument("--variant", default=None)
    gc.add_argument("--decoder-layers", dest="decoder_layers", type=int, choices=[1, 2], default=None)
    gc.add_argument("--step", type=float, default=1e-5)
    gc.add_argument("--threshold", type=float, default=1e-4)

    agg = sub.add_parser("aggregate", help="mean/std over run logs")
    agg.add_argument("logs", nargs="+", help="run_seed*.json files")
    agg.add_argument("--out", default=None)
    return parser


def config_from_args(args):
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        raw = {k.replace("-", "_"): v for k, v in raw.items()}
    for dest, _ in list(_TRAIN_FLAGS.values()) + [("seeds", None), ("full_bce", None), ("normalized_target", None), ("decoder_weight_decay", None)]:
        value = getattr(args, dest)
        if value is not None:
            raw[dest] = value
    return TrainConfig.from_dict(raw)


def cmd_train(args):
    config = config_from_args(args)
    if not config.dataset:
        raise ConfigError("no dataset given (use --dataset or the config file)")
    graph = load_graph(config.dataset)
    resolve_config(config, graph)  # fail fast before any seed runs
    logs = run_seeds(config, graph, parallel=max(1, config.parallel or 1))
    for lg in logs:
        test = lg.final.get("test", {})
        print(
            f"seed {lg.config['seed']}: test accuracy {test.get('accuracy', float('nan')):.4f}"
            f"  macro-F1 {test.get('macro_f1', float('nan')):.4f}  ({lg.duration_s:.1f}s)"
        )
        if config.out:
            write_run(lg, config.out)
    if len(logs) > 1 and all("test" in lg.final for lg in logs):
        summary = aggregate(logs)
        print(format_summary(summary))
        if config.out:
            Path(config.out, "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_eval(args):
    saved, params = load_params(args.params)
    dataset = args.dataset or saved.get("dataset")
    if not dataset:
        raise ConfigError("no dataset recorded with the parameters; pass --dataset")
    graph = load_graph(dataset)
    cfg = resolve_config(TrainConfig.from_dict(dict(saved, dataset=dataset)), graph)
    if cfg.model == "homo":
        problem = prepare_homo(graph)
    else:
        problem = prepare_hetero(graph, cfg.variant, cfg.normalized_target)
    report = {}
    for split in ("train", "val", "test"):
        mask = getattr(graph, split)
        if mask.size:
            acc, f1 = evaluate(problem, params, mask)
            report[split] = {"accuracy": acc, "macro_f1": f1}
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_gradcheck(args):
    cases = GRADCHECK_CASES
    if args.model == "homo":
        cases = [c for c in cases if c[0] == "homo"]
    elif args.model == "hetero":
        cases = [c for c in cases if c[0] == "hetero"]
        if args.variant:
            try:
                v = Variant.parse(args.variant).value
            except ValueError:
                raise ConfigError(f"unknown variant {args.variant!r}") from None
            cases = [c for c in cases if c[1] == v]
    if args.decoder_layers:
        cases = [(m, v, args.decoder_layers) for m, v, _ in cases]
        cases = list(dict.fromkeys(cases))
    report = gradcheck(cases, step=args.step, threshold=args.threshold)
    print(format_gradcheck(report, args.threshold))
    ok = all(case["passed"] for case in report)
    print("gradcheck:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_aggregate(args):
    logs = []
    for path in args.logs:
        try:
            logs.append(RunLog.from_dict(json.loads(Path(path).read_text(encoding="utf-8"))))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise DataValidationError(f"not a run log: {exc}", path) from None
    summary = aggregate(logs)
    print(format_summary(summary))
    text = json.dumps(summary, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "gradcheck": cmd_gradcheck, "aggregate": cmd_aggregate}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ArgumentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataValidationError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(json.dumps(exc.diagnostics, indent=2, default=str), file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
