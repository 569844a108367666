"""Command-line entry point: ``ggad {synth,split,train,eval,gradcheck}``.

Exit codes: 0 success, 1 usage error, 2 runtime error. Every command first
prints its fully resolved settings as one ``config {...}`` JSON line.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import gradcheck
from .config import TrainConfig
from .data_io import Split, build_split, load_dataset, save_dataset, synth_generate
from .errors import GGADError
from .graph import normalize_adjacency
from .linalg import make_rng
from .losses import LOG_FIELDS
from .metrics import evaluate, score_split
from .model import load_params, save_params
from .outliers import STRATEGIES
from .trainer import train

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ggad", description="Semi-supervised graph anomaly detection with "
                "generated outlier nodes.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("synth", help="generate a synthetic benchmark dataset")
    s.add_argument("--nodes", type=int, default=2000)
    s.add_argument("--blocks", type=int, default=4)
    s.add_argument("--p-in", type=float, default=0.02)
    s.add_argument("--p-out", type=float, default=0.002)
    s.add_argument("--anomaly-rate", type=float, default=0.05)
    s.add_argument("--feature-dim", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="dataset directory to write")

    s = sub.add_parser("split", help="sample labeled normals and the test set")
    s.add_argument("--data", required=True)
    s.add_argument("--train-rate", type=float, default=15.0,
                   help="percent of normal nodes labeled for training")
    s.add_argument("--contamination", type=float, default=0.0,
                   help="fraction of the labeled set replaced by anomalies")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="split JSON file to write")

    d = TrainConfig()
    s = sub.add_parser("train", help="train a model")
    s.add_argument("--data", required=True)
    s.add_argument("--split", required=True)
    s.add_argument("--alpha", type=float, default=d.alpha)
    s.add_argument("--beta", type=float, default=d.beta)
    s.add_argument("--lambda", dest="lam", type=float, default=d.lam)
    s.add_argument("--s-ratio", type=float, default=d.s_ratio)
    s.add_argument("--eps-mean", type=float, default=d.eps_mean)
    s.add_argument("--eps-std", type=float, default=d.eps_std)
    s.add_argument("--lr", type=float, default=d.lr)
    s.add_argument("--epochs", type=int, default=d.epochs)
    s.add_argument("--hidden", type=int, default=d.hidden)
    s.add_argument("--dim", type=int, default=d.dim)
    s.add_argument("--outlier-strategy", choices=STRATEGIES, default=d.outlier_strategy)
    s.add_argument("--sigma-p", type=float, default=d.sigma_p,
                   help="perturbation scale of the gaussianp strategy")
    s.add_argument("--no-ala", action="store_true", help="drop the affinity margin loss")
    s.add_argument("--no-ec", action="store_true", help="drop the egocentric closeness loss")
    s.add_argument("--batch-size", type=int, default=None)
    s.add_argument("--seed", type=int, default=d.seed)
    s.add_argument("--out", required=True, help="model JSON file to write")
    s.add_argument("--log-out", default=None,
                   help="loss log CSV (default: <out> with suffix .losses.csv)")

    s = sub.add_parser("eval", help="score the test nodes and report AUROC/AUPRC")
    s.add_argument("--data", required=True)
    s.add_argument("--split", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--scores-out", required=True)

    s = sub.add_parser("gradcheck", help="finite-difference check of the gradients")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--outlier-strategy", choices=STRATEGIES, default="ggad")
    return p


def _echo(settings: dict) -> None:
    print("config " + json.dumps(settings, sort_keys=True), flush=True)


def _config_from(args) -> TrainConfig:
    return TrainConfig(
        lr=args.lr, epochs=args.epochs, alpha=args.alpha, beta=args.beta, lam=args.lam,
        s_ratio=args.s_ratio, eps_mean=args.eps_mean, eps_std=args.eps_std,
        hidden=args.hidden, dim=args.dim, batch_size=args.batch_size, seed=args.seed,
        outlier_strategy=args.outlier_strategy, disable_ala=args.no_ala,
        disable_ec=args.no_ec, sigma_p=args.sigma_p,
    )


def cmd_synth(args) -> int:
    _echo({k: v for k, v in vars(args).items() if k != "func"})
    g = synth_generate(n_nodes=args.nodes, n_blocks=args.blocks, p_in=args.p_in,
                       p_out=args.p_out, anomaly_rate=args.anomaly_rate,
                       feature_dim=args.feature_dim, rng=make_rng(args.seed))
    save_dataset(g, args.out)
    print(f"wrote {args.out}: {g.num_nodes} nodes, {g.num_edges} edges, "
          f"{int(g.labels.sum())} anomalies")
    return EXIT_OK


def cmd_split(args) -> int:
    _echo({k: v for k, v in vars(args).items() if k != "func"})
    g = load_dataset(args.data)
    split = build_split(g, args.train_rate, args.contamination,
                        rng=make_rng(args.seed), seed=args.seed)
    split.save(args.out)
    print(f"wrote {args.out}: {split.labeled_normals.size} labeled, "
          f"{split.test_nodes.size} test")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _config_from(args)
    log_out = args.log_out or str(Path(args.out).with_suffix(".losses.csv"))
    _echo({"data": args.data, "split": args.split, "out": args.out, "log_out": log_out,
           **config.as_dict()})
    g = load_dataset(args.data)
    split = Split.load(args.split)
    params, history = train(g, split, config)
    save_params(args.out, params, seed=config.seed, config=config.as_dict())
    with open(log_out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_FIELDS)
        for epoch, b in enumerate(history):
            w.writerow([epoch] + [repr(getattr(b, k)) for k in LOG_FIELDS[1:]])
    if history:
        last = history[-1]
        print(f"epoch {len(history) - 1}: l_total={last.l_total:.6f} l_bce={last.l_bce:.6f} "
              f"l_ala={last.l_ala:.6f} l_ec={last.l_ec:.6f}")
    print(f"wrote {args.out} and {log_out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    _echo({k: v for k, v in vars(args).items() if k != "func"})
    g = load_dataset(args.data)
    split = Split.load(args.split)
    params, _ = load_params(args.model)
    if params.dims[0] != g.num_features:
        raise GGADError(f"model expects {params.dims[0]} features, dataset has {g.num_features}")
    table = score_split(g, split, params, adj=normalize_adjacency(g))
    table.write_csv(args.scores_out)
    print(evaluate(table).line())
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    _echo({"seed": args.seed, "outlier_strategy": args.outlier_strategy,
           "step": gradcheck.STEP, "tolerance": gradcheck.TOLERANCE})
    res = gradcheck.check(args.seed, args.outlier_strategy)
    for name, err in res.errors.items():
        print(f"{name:6s} {err:.3e}")
    print(f"max relative error {res.max_error:.3e}")
    return EXIT_OK if res.max_error < gradcheck.TOLERANCE else EXIT_RUNTIME


COMMANDS = {"synth": cmd_synth, "split": cmd_split, "train": cmd_train,
            "eval": cmd_eval, "gradcheck": cmd_gradcheck}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (GGADError, ValueError, OSError) as exc:
        print(f"ggad {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
