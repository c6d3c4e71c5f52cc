"""Command-line entry point.

Exit codes: 0 success, 1 a verification check failed, 2 usage or
configuration error, 3 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .attacks import AttackParseError, ChannelModel, apply_channel, parse_attacks
from .detect import identify
from .evaluation import (
    CALIBRATED_INVERSION_STD,
    SHIFT_FACTOR,
    STANDALONE_MODES,
    TrialCountError,
    energy_ratio_experiment,
    pipeline_shift_experiment,
    run_bench,
    shift_factor_experiment,
    standalone_watermark_experiment,
)
from .formats import FormatError, read_keyset, read_latent, write_keyset, write_latent
from .imprint import (
    CapacityError,
    WatermarkConfig,
    build_keyset,
    imprint,
    sample_latent,
    treering_baseline,
)

EXIT_USAGE = 2
EXIT_IO = 3

SHIFT_TOLERANCE = 0.015
ENERGY_TOLERANCE = 0.02


class UsageError(Exception):
    pass


def _config_from_args(args) -> WatermarkConfig:
    return WatermarkConfig(
        r_min=args.r_min,
        r_max=args.r_max,
        alpha=args.alpha,
        eta=args.eta,
        ring_channel=args.ring_channel,
        noise_channels=tuple(int(c) for c in args.noise_channels.split(",") if c.strip()),
        mask_style=args.style,
        enable_shift=not args.no_shift,
        enable_lossless=not args.no_lossless,
        enable_discretize=not args.no_discretize,
        baseline_center_offset=args.no_lossless,
    )


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r-min", type=int, default=3)
    p.add_argument("--r-max", type=int, default=14)
    p.add_argument("--alpha", type=float, default=64.0)
    p.add_argument("--eta", type=float, default=0.85)
    p.add_argument("--ring-channel", type=int, default=3)
    p.add_argument("--noise-channels", default="0", help="comma-separated; empty for none")
    p.add_argument("--style", choices=("rounder", "naive"), default="rounder")
    p.add_argument("--no-shift", action="store_true")
    p.add_argument("--no-lossless", action="store_true")
    p.add_argument("--no-discretize", action="store_true")


def _write_manifest(path: Path, argv, command: str, config, seeds: dict, artifacts) -> None:
    manifest = {
        "tool": "ringid",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "config": None if config is None else {k: v for k, v in asdict(config).items()},
        "seeds": seeds,
        "artifacts": [str(a) for a in artifacts],
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


# commands ----------------------------------------------------------------

def cmd_keygen(args, argv) -> int:
    try:
        config = _config_from_args(args)
        ks = build_keyset(args.keys, config, args.seed)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.output)
    write_keyset(out, ks)
    _write_manifest(_manifest_path(out), argv, "keygen", config, {"seed": args.seed}, [out])
    print(f"capacity={config.capacity} keys={len(ks)}")
    for c, v in sorted(ks.lam.items()):
        print(f"lambda[{c}]={v!r}")
    return 0


def cmd_embed(args, argv) -> int:
    ks = read_keyset(args.keyset)
    try:
        pair = ks.find(args.key_index)
    except KeyError:
        print(f"error: key index {args.key_index} is not in {args.keyset}", file=sys.stderr)
        return EXIT_USAGE
    config = ks.config
    if args.baseline_treering:
        config = treering_baseline(n=config.n, channels=config.channels,
                                   ring_channel=config.ring_channel, r_min=config.r_min,
                                   r_max=config.r_max, alpha=config.alpha)
    if args.latent:
        latent = read_latent(args.latent)
    elif args.sample_latent:
        latent = sample_latent(args.seed, config)
    else:
        raise UsageError("give --latent PATH or --sample-latent")
    try:
        marked = imprint(latent, pair, config)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.output)
    write_latent(out, marked)
    _write_manifest(_manifest_path(out), argv, "embed", config,
                    {"seed": args.seed, "key_index": args.key_index}, [out])
    print(f"embedded key {args.key_index} -> {out}")
    return 0


def cmd_identify(args, argv) -> int:
    ks = read_keyset(args.keyset)
    latent = read_latent(args.latent)
    attacks = parse_attacks(args.attacks)
    if attacks or args.sigma_inv:
        latent = apply_channel(latent, ChannelModel(args.sigma_inv, tuple(attacks), args.seed))
    try:
        result = identify(latent, ks)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(f"best_key={result.best_key} score={result.best_score:.6g}")
    if args.top_k:
        print("rank,key,score")
        for rank, (k, s) in enumerate(result.top(args.top_k), 1):
            print(f"{rank},{k},{s:.6g}")
    return 0


def _parse_grid(text: str) -> list:
    """Comma separates grid entries; '+' chains attacks inside one entry."""
    return [parse_attacks(entry.replace("+", ",")) for entry in text.split(",") if entry.strip()]


def cmd_bench(args, argv) -> int:
    try:
        key_counts = [int(k) for k in args.keys.split(",")]
    except ValueError:
        raise UsageError(f"malformed --keys {args.keys!r}") from None
    grid = _parse_grid(args.attacks)
    try:
        config = _config_from_args(args)
        ks = build_keyset(max(key_counts), config, args.seed)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    workers = max(1, int(os.environ.get("RINGID_THREADS", "1") or 1))
    report = run_bench(ks, grid, key_counts, args.trials, args.sigma_inv, args.seed, workers)
    text = report.to_csv()
    if args.output:
        out = Path(args.output)
        out.write_text(text)
        _write_manifest(_manifest_path(out), argv, "bench", config,
                        {"seed": args.seed, "trials": args.trials}, [out])
    else:
        sys.stdout.write(text)
    return 0


def cmd_prove_shift(args, argv) -> int:
    try:
        res = shift_factor_experiment(args.n, None, args.trials, args.seed)
    except TrialCountError as exc:
        raise UsageError(str(exc)) from exc
    energy, pixels = energy_ratio_experiment(treering_baseline(n=args.n), args.trials, args.seed)
    shift_ok = abs(res.ratio - SHIFT_FACTOR) <= SHIFT_TOLERANCE
    energy_ok = abs(energy - 0.5) <= ENERGY_TOLERANCE
    print(f"shift_ratio={res.ratio:.6f} ci95=+-{res.ci_halfwidth:.6f} "
          f"target={SHIFT_FACTOR:.6f}+-{SHIFT_TOLERANCE} samples={res.samples} "
          f"{'PASS' if shift_ok else 'FAIL'}")
    print(f"unshifted_l1_per_pixel={res.mean_unshifted_l1:.4f} shifted_l1_per_pixel={res.mean_shifted_l1:.4f}")
    print(f"energy_ratio={energy:.6f} target=0.5+-{ENERGY_TOLERANCE} samples={pixels} "
          f"{'PASS' if energy_ok else 'FAIL'}")
    return 0 if shift_ok and energy_ok else 1


def cmd_controls(args, argv) -> int:
    grid = _parse_grid(args.attacks)
    try:
        rows = pipeline_shift_experiment(treering_baseline(), args.trials, args.seed, grid,
                                         args.sigma_inv)
    except TrialCountError as exc:
        raise UsageError(str(exc)) from exc
    print("attack,auc_control1,auc_control2,mean_wm,mean_null,mean_null_shifted,delta1,delta2")
    for r in rows:
        print(f"{r.attack},{r.auc_control1:.4f},{r.auc_control2:.4f},{r.mean_wm:.3f},"
              f"{r.mean_null:.3f},{r.mean_null_shifted:.3f},{r.delta1:.3f},{r.delta2:.3f}")
    return 0


def cmd_standalone(args, argv) -> int:
    channel = ChannelModel(args.sigma_inv, tuple(parse_attacks(args.attacks)), 0)
    try:
        roc = standalone_watermark_experiment(args.mode, args.trials, channel, args.seed)
    except TrialCountError as exc:
        raise UsageError(str(exc)) from exc
    print(f"mode={args.mode} auc={roc.auc:.6f} tpr@1%fpr={roc.tpr_at_1pct_fpr:.6f}")
    if args.roc:
        Path(args.roc).write_text(roc.to_csv())
    return 0


def cmd_replay(args, argv) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except (OSError, ValueError) as exc:
        raise FormatError(f"cannot read manifest {args.manifest}: {exc}") from exc
    return main(manifest["argv"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ringid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="build a key set file")
    p.add_argument("--keys", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("embed", help="watermark a latent with one key")
    p.add_argument("--keyset", required=True)
    p.add_argument("--key-index", type=int, required=True)
    p.add_argument("--latent")
    p.add_argument("--sample-latent", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--baseline-treering", action="store_true",
                   help="lossy Tree-Ring imprint instead of the key set's configuration")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("identify", help="find the best matching key")
    p.add_argument("--keyset", required=True)
    p.add_argument("--latent", required=True)
    p.add_argument("--attacks", default="")
    p.add_argument("--sigma-inv", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top-k", type=int, default=0)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("bench", help="identification accuracy over an attack x key-count grid")
    p.add_argument("--keys", default="32,128,2048")
    p.add_argument("--attacks", default="clean,rotate=75,cs=0.75,blur=8,noise=0.1,quant=16,bright=2")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--sigma-inv", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("prove-shift", help="Monte-Carlo check of the sqrt(3)/2 shift and energy halving")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prove_shift)

    p = sub.add_parser("controls", help="distribution-shift control experiments on the lossy baseline")
    p.add_argument("--attacks", default="clean,rotate=75,cs=0.75,blur=8,noise=0.1,quant=16,bright=2")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--sigma-inv", type=float, default=CALIBRATED_INVERSION_STD)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_controls)

    p = sub.add_parser("standalone", help="imaginary-discard watermark on its own")
    p.add_argument("--mode", choices=STANDALONE_MODES, default="zero_l1")
    p.add_argument("--attacks", default="")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--sigma-inv", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--roc", help="write the ROC points as CSV")
    p.set_defaults(func=cmd_standalone)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, argv)
    except AttackParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
