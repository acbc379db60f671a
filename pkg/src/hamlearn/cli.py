"""Command-line entry point: dataset generation, training, evaluation,
and sweep drivers.

Configuration layering, lowest to highest precedence: built-in defaults,
``--config`` file (INI sections named after the subcommands), repeated
``--set section.key=value`` overrides, explicit flags.  The effective
configuration is echoed to ``<out>/config_used.ini`` and suffices to
reproduce the artifacts.  Exit codes: 0 success, 1 runtime failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments
from .dataset import (DatasetFormatError, DatasetMeta, DEFAULT_TAU,
                      derive_seed, generate_dataset, load_dataset)
from .nn.training import (CheckpointFormatError, TrainConfig, history_to_csv,
                          load_checkpoint, save_checkpoint, train)
from .qsim import FAMILIES

_ABSENT = "-"

GEN_DEFAULTS = {
    "family": "xy_chain_zfield",
    "n_qubits": 2,
    "s_points": 25,
    "tau": DEFAULT_TAU,
    "n_train": 1000,
    "n_test": 100,
    "gaussian_sigma": 0.0,
    "t2": _ABSENT,
    "t2_range": _ABSENT,
    "j0": 1.0,
    "w": 10,
    "seed": 0,
    "jobs": 1,
    "out": "dataset",
}

TRAIN_DEFAULTS = {
    "data": "",
    "out": "run",
    "hidden": 256,
    "batch_size": 256,
    "epochs": 200,
    "lr": 1e-3,
    "patience": 20,
    "val_fraction": 0.05,
    "noise_eps": 0.0,
    "grad_clip": _ABSENT,
    "resume": _ABSENT,
    "seed": 0,
}

EVAL_DEFAULTS = {
    "ckpt": "",
    "data": "",
    "out": "eval",
    "gauss_eps": 0.0,
    "t2": _ABSENT,
    "seed": 0,
    "jobs": 1,
}

SWEEP_DEFAULTS = {
    "tier": "desk",
    "out": _ABSENT,
    "seed": 0,
    "jobs": 1,
}


class UsageError(Exception):
    """Configuration problem the user must fix; exits with code 2."""


def _parse_like(key: str, text: str, default):
    try:
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {exc}") from exc


def effective_config(section: str, defaults: dict, args) -> dict:
    cfg = dict(defaults)
    extras: dict = {}
    if getattr(args, "config", None):
        parser = configparser.ConfigParser()
        read = parser.read(args.config)
        if not read:
            raise UsageError(f"config file {args.config!r} not found")
        if parser.has_section(section):
            for key, value in parser.items(section):
                if key in cfg:
                    cfg[key] = _parse_like(key, value, defaults[key])
                else:
                    extras[key] = value
    for item in getattr(args, "set", None) or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise UsageError(
                f"--set expects section.key=value, got {item!r}")
        dotted, value = item.split("=", 1)
        sect, key = dotted.split(".", 1)
        if sect != section:
            continue
        if key in cfg:
            cfg[key] = _parse_like(key, value, defaults[key])
        else:
            extras[key] = value
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    cfg["_extras"] = extras
    return cfg


def echo_config(section: str, cfg: dict, outdir: Path) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    parser = configparser.ConfigParser()
    parser[section] = {}
    for key, value in cfg.items():
        if key == "_extras":
            continue
        parser[section][key] = (format(value, ".17g")
                                if isinstance(value, float) else str(value))
    for key, value in cfg.get("_extras", {}).items():
        parser[section][key] = str(value)
    path = outdir / "config_used.ini"
    with open(path, "w") as fh:
        parser.write(fh)
    return path


def _parse_floats(text: str, key: str) -> tuple | None:
    if text == _ABSENT:
        return None
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad float list for {key}: {text!r}") from exc


def cmd_gen(args) -> int:
    cfg = effective_config("gen", GEN_DEFAULTS, args)
    if cfg["family"] not in FAMILIES:
        raise UsageError(
            f"unknown family {cfg['family']!r}; choose from {FAMILIES}")
    if cfg["n_qubits"] < 1:
        raise UsageError(f"n_qubits must be >= 1, got {cfg['n_qubits']}")
    if cfg["n_train"] < 0 or cfg["n_test"] < 0:
        raise UsageError("sample counts must be >= 0")
    t2 = _parse_floats(cfg["t2"], "t2")
    t2_range = _parse_floats(cfg["t2_range"], "t2_range")
    if t2 is not None and len(t2) == 1:
        t2 = t2 * cfg["n_qubits"]
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    echo_config("gen", cfg, out.parent if out.parent != Path()
                else Path("."))
    w = cfg["w"] if cfg["family"] == "xy_chain_td_zfield" else None
    for split, count, stream in (("train", cfg["n_train"], 201),
                                 ("test", cfg["n_test"], 202)):
        meta = DatasetMeta(
            family=cfg["family"], n_qubits=cfg["n_qubits"], tau=cfg["tau"],
            n_points=cfg["s_points"], n_samples=count,
            master_seed=derive_seed(cfg["seed"], 0, stream),
            gaussian_sigma=cfg["gaussian_sigma"] if split == "train" else 0.0,
            t2=t2, t2_range=t2_range if split == "train" else None,
            j0=cfg["j0"], w=w)
        path = Path(str(out) + f".{split}")
        generate_dataset(meta, path, jobs=cfg["jobs"])
        print(f"wrote {path} ({count} samples)")
    return 0


def cmd_train(args) -> int:
    cfg = effective_config("train", TRAIN_DEFAULTS, args)
    if not cfg["data"]:
        raise UsageError("train needs --data")
    data_path = Path(cfg["data"])
    if not data_path.exists() and Path(str(data_path) + ".train").exists():
        data_path = Path(str(data_path) + ".train")
    train_ds = load_dataset(data_path)
    outdir = Path(cfg["out"])
    echo_config("train", cfg, outdir)

    grad_clip = (None if cfg["grad_clip"] == _ABSENT
                 else float(cfg["grad_clip"]))
    tconf = TrainConfig(hidden=cfg["hidden"], batch_size=cfg["batch_size"],
                        epochs=cfg["epochs"], lr=cfg["lr"],
                        patience=cfg["patience"],
                        val_fraction=cfg["val_fraction"],
                        noise_eps=cfg["noise_eps"], grad_clip=grad_clip,
                        seed=cfg["seed"])
    resume = None
    if cfg["resume"] != _ABSENT:
        params, arch, adam, ckmeta = load_checkpoint(cfg["resume"])
        if adam is None:
            raise UsageError(
                f"checkpoint {cfg['resume']} has no optimizer state")
        if arch.hidden != tconf.hidden:
            tconf = replace(tconf, hidden=arch.hidden)
        resume = (params, adam, ckmeta["epoch"])

    result = train(train_ds, tconf, resume=resume)
    ckpt = outdir / "model.ckpt"
    save_checkpoint(ckpt, result.params, result.arch, adam=result.adam,
                    epoch=result.history[-1].epoch, seed=tconf.seed)
    (outdir / "metrics.csv").write_text(history_to_csv(result.history))
    final = result.history[-1]
    print(f"wrote {ckpt}")
    print(f"final epoch {final.epoch}: val_loss={final.val_loss:.6g} "
          f"val_f={final.val_f:.6g} (best epoch {result.best_epoch})")
    return 0


def cmd_eval(args) -> int:
    cfg = effective_config("eval", EVAL_DEFAULTS, args)
    if not cfg["ckpt"] or not cfg["data"]:
        raise UsageError("eval needs --ckpt and --data")
    params, arch, _, _ = load_checkpoint(cfg["ckpt"])
    ds = load_dataset(cfg["data"])
    outdir = Path(cfg["out"])
    echo_config("eval", cfg, outdir)

    t2 = _parse_floats(cfg["t2"], "t2")
    if t2 is not None:
        ds = experiments.dephased_variant(ds.meta, t2[0], jobs=cfg["jobs"])
    if cfg["gauss_eps"] > 0.0:
        ds = experiments.corrupt_gaussian(
            ds, cfg["gauss_eps"], derive_seed(cfg["seed"], 0, 204))
    digest = experiments.config_digest(
        {k: v for k, v in cfg.items() if k != "_extras"})
    report = experiments.evaluate(params, arch, ds, digest=digest)

    per_sample = outdir / "per_sample.csv"
    experiments.write_csv(per_sample, ["sample", "cosine_f"],
                          [[i, float(f)]
                           for i, f in enumerate(report.per_sample_f)])
    header, rows = experiments.report_csv_rows(report)
    header.append("per_sample_file")
    rows[0].append(str(per_sample))
    experiments.write_csv(outdir / "report.csv", header, rows)
    print(f"mean_f={report.mean_f:.6g} mse={report.mse:.6g} "
          f"excluded={report.n_excluded}")
    return 0


def cmd_sweep(args) -> int:
    cfg = effective_config("sweep", SWEEP_DEFAULTS, args)
    if args.sweep_name not in experiments.SWEEPS:
        print(f"unknown sweep {args.sweep_name!r}; valid sweeps: "
              f"{sorted(experiments.SWEEPS)}", file=sys.stderr)
        return 2
    if cfg["tier"] not in experiments.TIERS:
        raise UsageError(f"tier must be one of {experiments.TIERS}")
    outdir = Path(cfg["out"] if cfg["out"] != _ABSENT
                  else f"sweep_{args.sweep_name}")
    echo_config("sweep", cfg, outdir)
    overrides = {}
    for key, value in cfg["_extras"].items():
        try:
            overrides[key] = int(value)
        except ValueError:
            try:
                overrides[key] = float(value)
            except ValueError:
                if "," in value:
                    overrides[key] = _parse_floats(value, key)
                else:
                    overrides[key] = value
    fn = experiments.SWEEPS[args.sweep_name]
    rows = fn(cfg["tier"], cfg["seed"], outdir, jobs=cfg["jobs"],
              **overrides)
    print(f"wrote {len(rows)} rows under {outdir}")
    return 0


def cmd_presets(args) -> int:
    for name in experiments.preset_names():
        for tier, p in sorted(experiments.PRESETS[name].items()):
            print(f"{name:12s} {tier:6s} family={p.family} N={p.n_qubits} "
                  f"S={p.s_points} train={p.n_train} test={p.n_test}")
    print(f"sweeps: {', '.join(sorted(experiments.SWEEPS))}")
    return 0


def cmd_run(args) -> int:
    out = experiments.run_preset(args.preset, args.tier, args.seed,
                                 args.out or f"run_{args.preset}",
                                 jobs=args.jobs)
    rep = out.report
    print(f"checkpoint: {out.checkpoint_path}")
    print(f"mean_f={rep.mean_f:.6g} mse={rep.mse:.6g} "
          f"excluded={rep.n_excluded}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamlearn",
        description="Learn spin-chain Hamiltonian parameters from "
                    "single-qubit measurement records.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config value (repeatable)")

    p_gen = sub.add_parser("gen", help="generate dataset files")
    add_common(p_gen)
    p_gen.add_argument("--family", choices=FAMILIES)
    p_gen.add_argument("--n", dest="n_qubits", type=int)
    p_gen.add_argument("--s", dest="s_points", type=int)
    p_gen.add_argument("--tau", type=float)
    p_gen.add_argument("--train", dest="n_train", type=int)
    p_gen.add_argument("--test", dest="n_test", type=int)
    p_gen.add_argument("--gauss-eps", dest="gaussian_sigma", type=float)
    p_gen.add_argument("--t2", help="comma-separated per-qubit T2, or one "
                                    "value for all qubits")
    p_gen.add_argument("--t2-range", dest="t2_range",
                       help="lo,hi for a per-sample uniform T2 draw")
    p_gen.add_argument("--j0", type=float)
    p_gen.add_argument("--w", type=int, help="Fourier terms per site")
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--jobs", type=int)
    p_gen.add_argument("--out", help="output base path (writes "
                                     "<out>.train and <out>.test)")
    p_gen.set_defaults(func=cmd_gen)

    p_train = sub.add_parser("train", help="train a network on a dataset")
    add_common(p_train)
    p_train.add_argument("--data", help="dataset base path or .train file")
    p_train.add_argument("--out")
    p_train.add_argument("--hidden", type=int)
    p_train.add_argument("--batch-size", dest="batch_size", type=int)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--patience", type=int)
    p_train.add_argument("--val-fraction", dest="val_fraction", type=float)
    p_train.add_argument("--noise-eps", dest="noise_eps", type=float,
                         help="Gaussian input augmentation during training")
    p_train.add_argument("--grad-clip", dest="grad_clip",
                         help="gradient norm cap, or '-' for automatic")
    p_train.add_argument("--resume", help="checkpoint to continue from")
    p_train.add_argument("--seed", type=int)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    add_common(p_eval)
    p_eval.add_argument("--ckpt")
    p_eval.add_argument("--data")
    p_eval.add_argument("--out")
    p_eval.add_argument("--gauss-eps", dest="gauss_eps", type=float,
                        help="corrupt the test inputs with N(0, eps)")
    p_eval.add_argument("--t2", help="regenerate test records with this T2")
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--jobs", type=int)
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="run a study sweep")
    add_common(p_sweep)
    p_sweep.add_argument("sweep_name", nargs="?", default="")
    p_sweep.add_argument("--tier", choices=experiments.TIERS)
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--jobs", type=int)
    p_sweep.set_defaults(func=cmd_sweep)

    p_presets = sub.add_parser("presets", help="list experiment presets")
    p_presets.set_defaults(func=cmd_presets)

    p_run = sub.add_parser("run", help="run a preset end to end")
    p_run.add_argument("preset")
    p_run.add_argument("--tier", choices=experiments.TIERS, default="desk")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"usage error: {exc.args[0]}", file=sys.stderr)
        return 2
    except (OSError, ValueError, DatasetFormatError,
            CheckpointFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
