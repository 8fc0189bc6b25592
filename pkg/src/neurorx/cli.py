"""Command-line entry point: ``neurorx <subcommand> [--config FILE] [--key value ...]``.

Every configuration key is also a flag (``n_sc`` -> ``--n-sc``); flags
override the file. Contract violations exit with status 2 and a message.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import KEYS, ConfigError, HarnessConfig, parse_config
from .training import TrainingError


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value configuration file")
    group = parser.add_argument_group("configuration keys (override the file)")
    for key in KEYS:
        group.add_argument("--" + key.name.replace("_", "-"), dest=f"cfg_{key.name}", metavar="VALUE", help=key.help)


def _load(args) -> HarnessConfig:
    overrides = {
        key.name: getattr(args, f"cfg_{key.name}")
        for key in KEYS
        if getattr(args, f"cfg_{key.name}", None) is not None
    }
    return parse_config(args.config, overrides)


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    from .harness import format_sweep_csv, run_sweep

    cfg = _load(args)
    sweep = cfg.sweep
    rows = run_sweep(
        replace(sweep, output=None),
        cfg.link,
        progress=(lambda r: print(f"Eb/N0 {r.ebn0_db:+.2f} dB  BER {r.ber:.3e}  BLER {r.bler:.3e}", file=sys.stderr))
        if not args.quiet else None,
    )
    _emit(format_sweep_csv(rows), sweep.output)
    return 0


def cmd_train(args) -> int:
    from .models import build_model
    from .training import train_loop

    cfg = _load(args)
    if not args.out:
        raise ConfigError("train needs --out CHECKPOINT")
    link = cfg.link
    model = build_model(cfg.model, link.n_sym, link.n_sc, link.n_features, link.bits_per_symbol,
                        cfg.model_config(), seed=cfg.model_seed)
    every = max(1, cfg.train.iterations // 20) if cfg.train.iterations else 1

    def report(rec):
        if not args.quiet and (rec.iteration % every == 0 or rec.iteration == cfg.train.iterations):
            print(f"iter {rec.iteration:6d}  loss {rec.loss:.4f}  Eb/N0 {rec.ebn0_db:+.2f} dB", file=sys.stderr)

    print(f"{cfg.model}: {model.num_parameters()} parameters", file=sys.stderr)
    train_loop(model, link, cfg.train, checkpoint_path=args.out, metrics_path=cfg.metrics, resume=args.resume,
               model_seed=cfg.model_seed, callback=report)
    return 0


def cmd_evaluate(args) -> int:
    from .estimators import NeuralReceiver
    from .harness import format_sweep_csv, run_sweep
    from .link import generate_frames, link_code

    cfg = _load(args)
    if not cfg.sweep.checkpoint:
        raise ConfigError("evaluate needs --checkpoint")
    rx = NeuralReceiver.from_checkpoint(cfg.sweep.checkpoint, cfg.link)
    link = cfg.link
    rng = np.random.default_rng([cfg.sweep.seed, 99])
    for ebn0 in cfg.sweep.ebn0_db:
        fb = generate_frames(link, args.heldout_frames, ebn0, rng, code=link_code(link))
        print(f"held-out BCE at {ebn0:+.2f} dB: {rx.loss(fb.y, fb.n0, fb.bit_grid):.4f}", file=sys.stderr)
    rows = run_sweep(replace(cfg.sweep, output=None), link, receiver=rx)
    _emit(format_sweep_csv(rows), cfg.sweep.output)
    return 0


def cmd_timing(args) -> int:
    from .estimators import make_receiver
    from .harness import format_timing, run_timing

    cfg = _load(args)
    names = [n.strip() for n in args.receivers.split(",") if n.strip()]
    checkpoints = dict(item.split("=", 1) for item in args.weights) if args.weights else {}
    receivers = {}
    for name in names:
        receivers[name] = make_receiver(name, cfg.link, checkpoints.get(name, cfg.sweep.checkpoint))
    rows = run_timing(receivers, cfg.link, warmup=args.warmup, runs=args.runs, seed=cfg.sweep.seed)
    _emit(format_timing(rows), cfg.sweep.output)
    return 0


def cmd_gradcheck(args) -> int:
    from .gradcheck_suite import run_gradcheck_suite

    results = run_gradcheck_suite(seed=args.seed)
    worst_fail = False
    for name, err, tol in results:
        status = "ok" if err < tol else "FAIL"
        worst_fail |= err >= tol
        print(f"{name:28s} max rel err {err:.2e}  (tol {tol:.0e})  {status}")
    return 1 if worst_fail else 0


def cmd_export_alist(args) -> int:
    from .ldpc import to_alist
    from .link import link_code

    cfg = _load(args)
    _emit(to_alist(link_code(cfg.link).H), args.out)
    return 0


def cmd_plot_data(args) -> int:
    from .harness import plot_columns, read_sweep_csv

    columns = tuple(c.strip() for c in args.columns.split(","))
    _emit(plot_columns(read_sweep_csv(args.csv), columns), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neurorx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="BER/BLER sweep for one receiver")
    _add_config_flags(p)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train a neural receiver")
    _add_config_flags(p)
    p.add_argument("--out", help="checkpoint path")
    p.add_argument("--resume", action="store_true", help="continue from --out if it exists")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="held-out BCE and BER/BLER sweep of a trained checkpoint")
    _add_config_flags(p)
    p.add_argument("--heldout-frames", type=int, default=64)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("timing", help="mean/std LLR time per resource grid")
    _add_config_flags(p)
    p.add_argument("--receivers", default="classical", help="comma-separated receiver names")
    p.add_argument("--weights", action="append", metavar="NAME=CHECKPOINT", help="checkpoint for a neural receiver (repeatable)")
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--runs", type=int, default=100)
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("gradcheck", help="finite-difference checks of every op and both networks (64-bit)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("export-alist", help="write the link's parity-check matrix in alist format")
    _add_config_flags(p)
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_export_alist)

    p = sub.add_parser("plot-data", help="gnuplot-ready columns from a sweep CSV")
    p.add_argument("csv")
    p.add_argument("--columns", default="ebn0_db,ber,bler")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, TrainingError) as exc:
        print(f"neurorx {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
