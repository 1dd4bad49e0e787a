"""Command-line interface.

Every command writes CSV (header row first) to stdout or --out, formats
numbers to 9 significant digits, and is byte-reproducible given --seed.
Exit codes: 0 success, 1 domain/configuration error, 2 I/O or file-format
error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adaptmod import (
    BetaAdjusters,
    capacity_uniform,
    plan_from_thresholds,
    threshold_table,
)
from .bsec import RobustnessProfile, analytic_params
from .channel import FixedSnr, UniformMagnitude
from .constellation import build_constellation
from .datasets import load_idx, synth_dataset
from .demod import build_regions
from .errors import ConfigError, DomainError, FormatError, SemlinkError
from .harness import (
    RunRecord,
    chi_square_homogeneity,
    run_end_to_end,
    run_link_montecarlo,
    trit_histogram_bsec,
    trit_histogram_link,
)
from .jscc import ModelTriple, TrainingConfig, train
from .nn import load_model, save_model
from .numerics import RandomSource

MODEL_FILES = ("encoder.bin", "decoder.bin", "classifier.bin")


def fmt(x) -> str:
    """Fixed 9-significant-digit rendering for CSV cells."""
    if isinstance(x, float):
        return format(x, ".9g")
    return str(x)


def emit_csv(header: list[str], rows: list[list], out_path: str | None) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def emit_record(record: RunRecord, header: list[str], out_path: str | None) -> None:
    """CSV from a run record; timestamps stay internal to keep output reproducible."""
    emit_csv(header, [[row[k] for k in header] for row in record.rows], out_path)


def parse_sweep(spec: str) -> np.ndarray:
    """LO:HI:STEP inclusive sweep specification."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"sweep must be LO:HI:STEP, got {spec!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"invalid sweep {spec!r}: {exc}") from exc
    if step <= 0 or hi < lo:
        raise ConfigError(f"invalid sweep {spec!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def parse_betas(spec: str) -> BetaAdjusters:
    parts = spec.split(",")
    if len(parts) != 3:
        raise ConfigError(f"betas must be B2,B4,B6, got {spec!r}")
    try:
        return BetaAdjusters(*(float(p) for p in parts))
    except ValueError as exc:
        if isinstance(exc, ConfigError | DomainError):
            raise
        raise ConfigError(f"invalid betas {spec!r}: {exc}") from exc


def parse_range(spec: str) -> tuple[float, float]:
    """G1:G2 magnitude range."""
    parts = spec.split(":")
    if len(parts) != 2:
        raise ConfigError(f"range must be G1:G2, got {spec!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"invalid range {spec!r}: {exc}") from exc


def load_profile(path) -> RobustnessProfile:
    """Line-oriented profile file: `index,alpha,a` records, # comments."""
    entries = {}
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"{path}:{ln}: expected `index,alpha,a`, got {raw!r}")
        try:
            idx = int(parts[0])
            alpha_a = (float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ConfigError(f"{path}:{ln}: {exc}") from exc
        if idx in entries:
            raise ConfigError(f"{path}:{ln}: duplicate index {idx}")
        entries[idx] = alpha_a
    if not entries:
        raise ConfigError(f"{path}: empty profile")
    base = min(entries)
    if base not in (0, 1) or sorted(entries) != list(range(base, base + len(entries))):
        raise ConfigError(f"{path}: indices must be contiguous from 0 or 1")
    ordered = [entries[i] for i in sorted(entries)]
    return RobustnessProfile(
        np.array([alpha for alpha, _ in ordered]),
        np.array([a for _, a in ordered]),
    )


def load_config_file(path) -> dict[str, str]:
    """`key = value` lines, UTF-8, # comments."""
    out = {}
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected `key = value`, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _profile_from_args(args, n_bits: int) -> RobustnessProfile:
    if getattr(args, "profile", None):
        return load_profile(args.profile)
    if args.alpha_last is not None:
        return RobustnessProfile.linear_ramp(n_bits, args.alpha, args.alpha_last, a=args.a)
    return RobustnessProfile.homogeneous(n_bits, args.alpha, a=args.a)


# ---------------------------------------------------------------- commands


def cmd_capacity(args) -> int:
    emit_csv(["g1", "g2", "capacity"],
             [[args.g1, args.g2, capacity_uniform(args.g1, args.g2)]], args.out)
    return 0


def cmd_demod_regions(args) -> int:
    c = build_constellation(args.order)
    regions = build_regions(c, args.a)
    rows = []
    for br in regions.bits:
        for iv in br.intervals:
            rows.append([br.bit + 1, iv.output, iv.lower, iv.upper])
    emit_csv(["bit", "output", "lower", "upper"], rows, args.out)
    return 0


def cmd_bsec_table(args) -> int:
    rng = RandomSource(args.seed)
    sweep = parse_sweep(args.snr_db)
    record = RunRecord(config={"order": args.order, "a": args.a, "snr_db": args.snr_db,
                               "n_bits": args.n_bits}, seed=args.seed)
    for snr_db, child in zip(sweep, rng.split(len(sweep))):
        snr = 10.0 ** (snr_db / 10.0)
        p = analytic_params(args.order, snr, args.a)
        stats = run_link_montecarlo(args.order, float(snr_db), args.a, args.n_bits, child)
        record.rows.append({
            "snr_db": float(snr_db), "mu": p.mu, "d": p.d, "r": p.r,
            "empirical_mu": stats.flip_rate, "empirical_d": stats.erasure_rate,
            "empirical_r": stats.correct_rate, "n_bits": stats.n_bits,
        })
    emit_record(record, ["snr_db", "mu", "d", "r", "empirical_mu", "empirical_d",
                         "empirical_r", "n_bits"], args.out)
    return 0


def cmd_simulate_ber(args) -> int:
    rng = RandomSource(args.seed)
    sweep = parse_sweep(args.snr_db)
    record = RunRecord(config={"order": args.order, "a": args.a, "snr_db": args.snr_db,
                               "n_bits": args.n_bits}, seed=args.seed)
    for snr_db, child in zip(sweep, rng.split(len(sweep))):
        stats = run_link_montecarlo(args.order, float(snr_db), args.a, args.n_bits, child)
        record.rows.append({
            "snr_db": float(snr_db), "order": args.order, "a": args.a,
            "n_bits": stats.n_bits, "ber": stats.flip_rate,
            "erasure_rate": stats.erasure_rate,
        })
    emit_record(record, ["snr_db", "order", "a", "n_bits", "ber", "erasure_rate"],
                args.out)
    return 0


def cmd_adaptive_plan(args) -> int:
    profile = load_profile(args.profile)
    betas = parse_betas(args.betas)
    table = threshold_table(profile, betas)
    snr = 10.0 ** (args.snr_db / 10.0)
    plan = plan_from_thresholds(snr, table)
    rows = []
    for i, (alpha, (t2, t4, t6), order) in enumerate(
        zip(profile.alphas, table, plan.orders)
    ):
        rows.append([i, float(alpha), float(t2), float(t4), float(t6), order])
    emit_csv(["bit", "alpha", "tau2", "tau4", "tau6", "order"], rows, args.out)
    return 0


def _load_dataset(args):
    if args.idx_images:
        return load_idx(args.idx_images, args.idx_labels)
    return synth_dataset(args.classes, args.dim, args.per_class, args.noise_sigma,
                         RandomSource(args.data_seed))


def cmd_train(args) -> int:
    dataset = _load_dataset(args)
    profile = _profile_from_args(args, args.latent_bits)
    config = TrainingConfig(
        profile=profile,
        epochs=args.epochs,
        warmup_epochs=args.warmup_epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        loss_weight=args.loss_weight,
        seed=args.seed,
    )
    result = train(dataset, config)
    if args.model_dir:
        out_dir = Path(args.model_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        models = result.models
        for name, model in zip(MODEL_FILES,
                               (models.encoder, models.decoder, models.classifier)):
            save_model(model, out_dir / name)
    rows = [[m.epoch, m.loss, m.mse, m.ce, m.accuracy] for m in result.metrics]
    emit_csv(["epoch", "loss", "mse", "ce", "accuracy"], rows, args.out)
    return 0


def _load_models(model_dir) -> ModelTriple:
    base = Path(model_dir)
    enc, dec, clf = (load_model(base / name) for name in MODEL_FILES)
    return ModelTriple(enc, dec, clf)


def cmd_eval(args) -> int:
    eval_rng = RandomSource(args.seed)
    dataset = _load_dataset(args)
    models = _load_models(args.model_dir)
    profile = _profile_from_args(args, models.encoder.out_dim)
    betas = parse_betas(args.betas)
    header = ["channel", "snr_db", "accuracy", "mse", "spectral_efficiency",
              "flip_rate", "erasure_rate", "bit_bias"]
    if args.uniform is None and args.snr_db is None:
        raise ConfigError("eval needs either --snr-db or --uniform")
    record = RunRecord(
        config={"model_dir": args.model_dir, "adaptive": args.adaptive,
                "fixed_order": args.fixed_order, "betas": args.betas,
                "snr_db": args.snr_db, "uniform": args.uniform,
                "images_per_block": args.images_per_block},
        seed=args.seed,
    )
    if args.uniform:
        g1, g2 = parse_range(args.uniform)
        metrics = run_end_to_end(models, UniformMagnitude(g1, g2), profile, betas,
                                 args.adaptive, dataset, eval_rng,
                                 images_per_block=args.images_per_block,
                                 fixed_order=args.fixed_order)
        record.rows.append({"channel": "uniform", "snr_db": "", **metrics})
    else:
        sweep = parse_sweep(args.snr_db)
        for snr_db, child in zip(sweep, eval_rng.split(len(sweep))):
            snr = 10.0 ** (snr_db / 10.0)
            metrics = run_end_to_end(models, FixedSnr(snr=snr), profile, betas,
                                     args.adaptive, dataset, child,
                                     images_per_block=args.images_per_block,
                                     fixed_order=args.fixed_order)
            record.rows.append({"channel": "fixed", "snr_db": float(snr_db), **metrics})
    emit_record(record, header, args.out)
    return 0


def cmd_selfcheck(args) -> int:
    rng = RandomSource(args.seed)
    checks: list[tuple[str, bool, str]] = []

    cc = capacity_uniform(0.37, 2.5)
    checks.append(("capacity-uniform", abs(cc - 1.57) <= 0.005, f"C={cc:.6f}"))

    from .demod import a_from_rho

    anchor = all(a_from_rho(s, 2, s) == 0.5 for s in (0.1, 1.0, 10.0))
    checks.append(("offset-anchor", anchor, "a(rho=snr, order 2) == 0.5"))

    c4 = build_constellation(4)
    br = build_regions(c4, 0.5).bits[1]
    d = c4.d_min
    sets_ok = (br.index_set(0.0) == (-1, 3) and br.index_set(1.0) == (1,)
               and br.index_set(0.5) == (0, 2))
    ends = sorted(abs(v) / d for iv in br.intervals if iv.output == 0.5
                  for v in (iv.lower, iv.upper))
    ends_ok = np.allclose(ends, [0.75, 0.75, 1.25, 1.25], atol=1e-12)
    checks.append(("boundary-tables", sets_ok and ends_ok, "order-4 bit-2 regions"))

    p = analytic_params(2, 1.0, 0.5)
    stats = run_link_montecarlo(2, 0.0, 0.5, 10**5, rng.split(1)[0])
    tol = 4.0 * math.sqrt(p.mu * (1 - p.mu) / stats.n_bits)
    closure = abs(stats.flip_rate - p.mu) <= tol
    checks.append(("link-closure", closure,
                   f"flip {stats.flip_rate:.5f} vs {p.mu:.5f}"))

    h1 = trit_histogram_link(1.0, 0.5, 10**5, rng.split(1)[0])
    h2 = trit_histogram_bsec(1.0, 0.5, 10**5, rng.split(1)[0])
    _, pval = chi_square_homogeneity(h1, h2)
    checks.append(("train-test-match", pval > 0.01, f"p={pval:.4f}"))

    failed = [name for name, ok, _ in checks if not ok]
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in checks]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 1 if failed else 0


# ---------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    p.add_argument("--out", default=None, help="write output to a file instead of stdout")
    p.add_argument("--config", default=None,
                   help="key = value defaults file (flags override)")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="random seed")


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--idx-images", default=None, help="IDX image file")
    p.add_argument("--idx-labels", default=None, help="IDX label file")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--noise-sigma", type=float, default=2.0)
    p.add_argument("--data-seed", type=int, default=100,
                   help="seed of the synthetic dataset itself; keep it equal "
                        "between train and eval so they see the same data")


def _add_profile_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", default=None, help="profile file: index,alpha,a lines")
    p.add_argument("--alpha", type=float, default=0.4, help="robustness level")
    p.add_argument("--alpha-last", type=float, default=None,
                   help="ramp robustness linearly from --alpha to this value")
    p.add_argument("--a", type=float, default=0.5, help="erasure boundary offset")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semlink",
        description="Ternary-demodulated digital links with robustly trained "
                    "autoencoders and per-bit adaptive modulation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="ergodic capacity for sqrt(SNR) ~ U[g1, g2]",
                       epilog="CSV columns: g1, g2, capacity")
    p.add_argument("--g1", type=float, required=True)
    p.add_argument("--g2", type=float, required=True)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("demod-regions", help="decision interval table per bit (CSV)",
                       epilog="CSV columns: bit (1-based), output (0/0.5/1), "
                              "lower, upper (interval bounds, +/-inf at the ends)")
    p.add_argument("--order", type=int, required=True, choices=(2, 4, 6))
    p.add_argument("--a", type=float, required=True)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_demod_regions)

    p = sub.add_parser("bsec-table", help="analytic vs empirical channel parameters",
                       epilog="CSV columns: snr_db, mu, d, r (closed form), "
                              "empirical_mu, empirical_d, empirical_r, n_bits")
    p.add_argument("--order", type=int, required=True, choices=(2, 4, 6))
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--snr-db", required=True, help="sweep LO:HI:STEP in dB")
    p.add_argument("--n-bits", type=int, default=100000)
    _add_common(p)
    p.set_defaults(func=cmd_bsec_table)

    p = sub.add_parser("simulate-ber", help="link Monte Carlo flip/erasure rates",
                       epilog="CSV columns: snr_db, order, a, n_bits, ber, erasure_rate")
    p.add_argument("--order", type=int, required=True, choices=(2, 4, 6))
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--snr-db", required=True, help="sweep LO:HI:STEP in dB")
    p.add_argument("--n-bits", type=int, default=100000)
    _add_common(p)
    p.set_defaults(func=cmd_simulate_ber)

    p = sub.add_parser("adaptive-plan", help="per-bit thresholds and chosen orders",
                       epilog="CSV columns: bit (0-based), alpha, tau2, tau4, tau6, "
                              "order (selected bits per symbol)")
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--profile", required=True, help="profile file: index,alpha,a lines")
    p.add_argument("--betas", default="1,0.6,0.5", help="B2,B4,B6 adjusting factors")
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_adaptive_plan)

    p = sub.add_parser("train", help="train encoder/decoder/classifier over sampled BSECs",
                       epilog="CSV columns: epoch, loss, mse, ce, accuracy")
    _add_dataset_args(p)
    _add_profile_args(p)
    p.add_argument("--latent-bits", type=int, default=64,
                   help="encoder output width; a --profile file overrides it")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--warmup-epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--loss-weight", type=float, default=0.2,
                   help="weight of the reconstruction loss term")
    p.add_argument("--model-dir", default=None, help="directory for saved models")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="end-to-end evaluation over a physical link",
                       epilog="CSV columns: channel (fixed/uniform), snr_db, accuracy, "
                              "mse, spectral_efficiency, flip_rate, erasure_rate, "
                              "bit_bias (mean sampled encoder bit)")
    _add_dataset_args(p)
    _add_profile_args(p)
    p.add_argument("--model-dir", required=True)
    p.add_argument("--snr-db", default=None, help="sweep LO:HI:STEP in dB")
    p.add_argument("--uniform", default=None, help="G1:G2 channel magnitude range")
    p.add_argument("--adaptive", action="store_true", help="per-bit order selection")
    p.add_argument("--fixed-order", type=int, default=2, choices=(2, 4, 6))
    p.add_argument("--betas", default="1,0.6,0.5")
    p.add_argument("--images-per-block", type=int, default=10,
                   help="images sharing one channel draw")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("selfcheck", help="run quick internal consistency checks")
    _add_common(p)
    p.set_defaults(func=cmd_selfcheck)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    if "--config" not in argv:
        return
    cfg_path = argv[argv.index("--config") + 1]
    overrides = load_config_file(cfg_path)
    if not argv or argv[0].startswith("-"):
        return
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    subparser = sub_actions[0].choices.get(argv[0]) if sub_actions else None
    if subparser is None:
        return
    defaults = {}
    for action in subparser._actions:
        if action.dest in overrides:
            raw = overrides[action.dest]
            if action.type is not None:
                defaults[action.dest] = action.type(raw)
            elif isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[action.dest] = raw.lower() in ("1", "true", "yes", "on")
            else:
                defaults[action.dest] = raw
            action.required = False
    subparser.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract reserves 2 for I/O
        return 0 if exc.code in (0, None) else 1
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SemlinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
