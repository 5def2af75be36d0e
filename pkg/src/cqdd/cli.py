"""Command line runner.

Every command reads a JSON config (``--config``) or a named preset
(``--preset``), writes its outputs under ``--out`` and finishes with a
``manifest.json`` listing each output file with its SHA-256 checksum.

Exit codes: 0 success, 2 config error, 3 numeric or degeneracy abort,
4 I/O error.
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from . import io
from . import pipelines as pl
from .errors import NumericAbort
from .experiment import GRIDS, PRESETS, from_dict, grid, preset

log = logging.getLogger("cqdd")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _load_doc(args) -> dict:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from exc
    elif args.preset:
        try:
            doc = preset(args.preset)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    else:
        raise ConfigError("a config is required (--config PATH or --preset NAME)")
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.threads is not None:
        doc.setdefault("trainer", {})["threads"] = args.threads
    return doc


def _config(args):
    doc = _load_doc(args)
    try:
        return from_dict(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def _model(args):
    if not args.model:
        raise ConfigError("--model PATH is required")
    return io.read_model(args.model)


def cmd_gen_data(args, out):
    cfg = _config(args)
    return pl.gen_data(cfg, out), cfg.to_dict(), {}


def cmd_diffuse(args, out):
    cfg = _config(args)
    return pl.diffuse(cfg, out), cfg.to_dict(), {}


def cmd_train(args, out):
    cfg = _config(args)
    files, summary = pl.train(cfg, out)
    record = summary["record"]
    extra = {"norm_constant": summary["norm_constant"], "final_train_loss": summary["final_train_loss"],
             "final_test_loss": summary["final_test_loss"],
             "step_wall_times": {str(k): v for k, v in record.wall_times.items()}}
    return files, cfg.to_dict(), extra


def cmd_sample(args, out):
    model = _model(args)
    if args.label is None:
        raise ConfigError("--label is required")
    if args.label not in model.mu_table:
        raise ConfigError(f"label {args.label!r} not in model classes {sorted(model.mu_table)}")
    if args.num is None or args.num < 1:
        raise ConfigError("--num must be a positive integer")
    seed = args.seed if args.seed is not None else model.metadata.get("seed")
    if seed is None:
        raise ConfigError("model has no recorded seed; pass --seed")
    files = pl.sample(model, args.label, args.num, seed, out, all_steps=args.all_steps)
    config = {"model": str(args.model), "label": args.label, "N": args.num, "seed": seed}
    return files, config, {}


def cmd_eval(args, out):
    cfg = _config(args)
    model = _model(args)
    try:
        files, summary = pl.evaluate(model, cfg, out)
    except ValueError as exc:
        if "does not match" in str(exc):
            raise ConfigError(str(exc)) from exc
        raise
    return files, cfg.to_dict(), {"norm_constant": summary["norm_constant"]}


def cmd_ablate(args, out):
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both")
    if args.config:
        spec = json.loads(Path(args.config).read_text())
    elif args.preset:
        if args.preset not in GRIDS:
            raise ConfigError(f"unknown grid {args.preset!r}; available: {sorted(GRIDS)}")
        spec = grid(args.preset)
    else:
        raise ConfigError("a grid is required (--config PATH or --preset GRID)")
    try:
        files = pl.ablate(spec, out, seed=args.seed, threads=args.threads)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc
    return files, spec, {}


def cmd_sweep_mu(args, out):
    cfg = _config(args)
    model = _model(args)
    if args.points < 1:
        raise ConfigError("--points must be >= 1")
    files = pl.sweep_mu(model, cfg, out, num_points=args.points, N=args.num)
    return files, {**cfg.to_dict(), "points": args.points}, {}


def cmd_benchmark(args, out):
    cfg = _config(args)
    files, results = pl.benchmark(cfg, out)
    extra = {"ratio": results["ratio"],
             "norm_constant": {run: results[run]["norm_constant"] for run in ("conditioned", "unconditioned")}}
    return files, cfg.to_dict(), extra


def cmd_compare_conditioning(args, out):
    cfg = _config(args)
    modes = args.modes.split(",") if args.modes else ("basis", "rx", "ry", "rz")
    files, _ = pl.compare_conditioning(cfg, out, modes)
    return files, {**cfg.to_dict(), "modes": list(modes)}, {}


COMMANDS = {
    "gen-data": cmd_gen_data,
    "diffuse": cmd_diffuse,
    "train": cmd_train,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "sweep-mu": cmd_sweep_mu,
    "benchmark": cmd_benchmark,
    "compare-conditioning": cmd_compare_conditioning,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqdd", description="Conditioned quantum denoising diffusion runner")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--preset", help=f"named preset; one of {sorted(PRESETS)} (grids for ablate: {sorted(GRIDS)})")
    common.add_argument("--seed", type=int, help="master seed, overrides the config")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--threads", type=int, help="worker threads; results do not depend on it")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("sample", "eval", "sweep-mu"):
            p.add_argument("--model", type=Path, help="trained model file")
        if name in ("sample", "sweep-mu"):
            p.add_argument("--num", type=int, help="number of states to generate")
        if name == "sample":
            p.add_argument("--label", help="class label to generate")
            p.add_argument("--all-steps", action="store_true", help="write every intermediate set S(T)..S(0)")
        if name == "sweep-mu":
            p.add_argument("--points", type=int, default=33, help="grid size over [0, 2 pi]")
        if name == "compare-conditioning":
            p.add_argument("--modes", help="comma separated subset of basis,rx,ry,rz")
    return parser


def _written_files(out: Path) -> list[Path]:
    return [p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json"]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out
    t0 = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        files, config, extra = COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericAbort, FloatingPointError) as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        _abort_manifest(out, args, exc)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # remaining ValueErrors come from validating user-supplied inputs
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    extra = {"command": args.command, "status": "complete", "wall_clock_s": time.perf_counter() - t0,
             "seed": config.get("seed") if isinstance(config, dict) else None, **extra}
    try:
        io.write_manifest(out, files, config, extra)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _abort_manifest(out: Path, args, exc) -> None:
    try:
        io.write_manifest(out, _written_files(out), {"argv": sys.argv[1:]},
                          {"command": args.command, "status": "aborted", "partial": True, "error": str(exc)})
    except OSError:
        pass


if __name__ == "__main__":
    sys.exit(main())
