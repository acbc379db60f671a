"""Preset end-to-end experiments, evaluation, and sweep drivers.

Presets come in two tiers: ``paper`` carries the full-size study
configurations (hours of training; never CI-gated) and ``desk`` is
scaled to finish on a laptop in minutes while preserving each study's
mechanism.  Sweep drivers emit plot-ready CSV tables with header rows.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .dataset import (Dataset, DatasetMeta, DEFAULT_TAU, build_dataset,
                      derive_seed, generate_dataset, load_dataset)
from .nn.losses import cosine_similarity_batch
from .nn.network import NetworkArch, predict
from .nn.training import (TrainConfig, TrainResult, arch_for_data,
                          history_to_csv, save_checkpoint, train)
from .qsim import XY_CHAIN_TD_ZFIELD, XY_CHAIN_ZFIELD, XYZ_CHAIN

# Seed streams for an experiment seed.
_STREAM_TRAIN_DATA = 201
_STREAM_TEST_DATA = 202
_STREAM_TRAIN_LOOP = 203
_STREAM_EVAL_NOISE = 204

TIERS = ("desk", "paper")


@dataclass(frozen=True)
class ExperimentPreset:
    """One dataset + training configuration at a given scale tier."""

    name: str
    tier: str
    family: str
    n_qubits: int
    s_points: int
    n_train: int
    n_test: int
    tau: float = DEFAULT_TAU
    w: int | None = None
    gaussian_sigma: float = 0.0
    t2_range: tuple | None = None
    hidden: int = 256
    batch_size: int = 256
    epochs: int = 200
    lr: float = 1e-3
    patience: int = 20
    noise_eps: float = 0.0          # on-the-fly input augmentation

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(hidden=self.hidden, batch_size=self.batch_size,
                           epochs=self.epochs, lr=self.lr,
                           patience=self.patience, noise_eps=self.noise_eps,
                           seed=derive_seed(seed, 0, _STREAM_TRAIN_LOOP))

    def dataset_meta(self, seed: int, train: bool) -> DatasetMeta:
        stream = _STREAM_TRAIN_DATA if train else _STREAM_TEST_DATA
        return DatasetMeta(
            family=self.family, n_qubits=self.n_qubits, tau=self.tau,
            n_points=self.s_points,
            n_samples=self.n_train if train else self.n_test,
            master_seed=derive_seed(seed, 0, stream),
            gaussian_sigma=self.gaussian_sigma if train else 0.0,
            t2_range=self.t2_range if train else None,
            w=self.w)


def _p(name, tier, **kw) -> ExperimentPreset:
    return ExperimentPreset(name=name, tier=tier, **kw)


PRESETS: dict[str, dict[str, ExperimentPreset]] = {
    # XY chain in a static z field, the headline static study.
    "ising1_7q": {
        "paper": _p("ising1_7q", "paper", family=XY_CHAIN_ZFIELD, n_qubits=7,
                    s_points=25, n_train=100_000, n_test=5_000),
    },
    "ising1_2q": {
        "desk": _p("ising1_2q", "desk", family=XY_CHAIN_ZFIELD, n_qubits=2,
                   s_points=25, n_train=20_000, n_test=1_000, hidden=64,
                   batch_size=256, epochs=20, lr=2e-3, patience=12),
    },
    # XYZ chain with three-direction couplings.
    "ising2_6q": {
        "paper": _p("ising2_6q", "paper", family=XYZ_CHAIN, n_qubits=6,
                    s_points=75, n_train=200_000, n_test=5_000),
    },
    "ising2_3q": {
        "desk": _p("ising2_3q", "desk", family=XYZ_CHAIN, n_qubits=3,
                   s_points=75, n_train=8_000, n_test=500, hidden=64,
                   batch_size=128, epochs=80, lr=2e-3, patience=12),
    },
    # Time-dependent z fields from cosine series; the desk tier shrinks
    # to one qubit with three series terms.
    "timedep_3q": {
        "paper": _p("timedep_3q", "paper", family=XY_CHAIN_TD_ZFIELD,
                    n_qubits=3, s_points=300, w=10, n_train=100_000,
                    n_test=5_000),
        "desk": _p("timedep_3q", "desk", family=XY_CHAIN_TD_ZFIELD,
                   n_qubits=1, s_points=100, w=3, n_train=20_000,
                   n_test=1_000, hidden=64, batch_size=128, epochs=8,
                   lr=2e-3, patience=8),
    },
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str, tier: str) -> ExperimentPreset:
    if name not in PRESETS:
        raise KeyError(
            f"unknown preset {name!r}; valid names: {preset_names()}")
    if tier not in PRESETS[name]:
        raise KeyError(
            f"preset {name!r} has no {tier!r} tier; available: "
            f"{sorted(PRESETS[name])}")
    return PRESETS[name][tier]


def config_digest(*objs) -> str:
    """Short stable digest of dataclass/dict configuration objects."""
    blob = json.dumps([asdict(o) if hasattr(o, "__dataclass_fields__")
                       else o for o in objs], sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class EvalReport:
    """Per-dataset evaluation summary; mean_f excludes undefined
    similarities and counts them."""

    mean_f: float
    mse: float
    n_samples: int
    n_excluded: int
    per_sample_f: np.ndarray
    runtime_s: float = 0.0
    config_digest: str = ""


def eval_predictions(preds: np.ndarray, targets: np.ndarray,
                     runtime_s: float = 0.0,
                     digest: str = "") -> EvalReport:
    sims, valid = cosine_similarity_batch(preds, targets)
    mean_f = float(np.mean(sims[valid])) if valid.any() else float("nan")
    return EvalReport(
        mean_f=mean_f,
        mse=float(np.mean((preds - targets) ** 2)),
        n_samples=preds.shape[0],
        n_excluded=int(np.count_nonzero(~valid)),
        per_sample_f=np.where(valid, sims, np.nan),
        runtime_s=runtime_s,
        config_digest=digest)


def evaluate(params: dict, arch: NetworkArch, ds: Dataset,
             digest: str = "") -> EvalReport:
    """Evaluate a trained network on a dataset."""
    if ds.inputs.shape[1] != arch.n_steps * arch.input_dim:
        raise ValueError(
            f"dataset rows have {ds.inputs.shape[1]} values, network "
            f"expects {arch.n_steps * arch.input_dim}")
    t0 = time.perf_counter()
    preds = predict(params, arch, ds.inputs)
    return eval_predictions(preds, ds.targets,
                            runtime_s=time.perf_counter() - t0,
                            digest=digest)


def corrupt_gaussian(ds: Dataset, sigma: float, seed: int) -> Dataset:
    """Fresh copy of a dataset with N(0, sigma) added to the inputs."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return Dataset(ds.meta, ds.inputs.copy(), ds.targets.copy())
    rng = np.random.default_rng(seed)
    noisy = ds.inputs + rng.normal(0.0, sigma, ds.inputs.shape)
    return Dataset(replace(ds.meta, gaussian_sigma=sigma), noisy,
                   ds.targets.copy())


def dephased_variant(meta: DatasetMeta, t2: float, jobs: int = 1) -> Dataset:
    """Regenerate a dataset's trajectories with per-qubit dephasing.

    The parameter draws depend only on (master_seed, index), so the
    returned dataset holds the same Hamiltonians as the original meta.
    """
    new_meta = replace(meta, t2=(float(t2),) * meta.n_qubits, t2_range=None,
                       gaussian_sigma=0.0)
    return build_dataset(new_meta, jobs=jobs)


def write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                format(v, ".17g") if isinstance(v, float) else str(v)
                for v in row) + "\n")


def report_csv_rows(report: EvalReport) -> tuple[list[str], list[list]]:
    header = ["mean_f", "mse", "n_samples", "n_excluded", "runtime_s",
              "config_digest"]
    row = [report.mean_f, report.mse, report.n_samples, report.n_excluded,
           report.runtime_s, report.config_digest]
    return header, [row]


@dataclass
class RunOutput:
    preset: ExperimentPreset
    result: TrainResult
    report: EvalReport
    checkpoint_path: str
    metrics_path: str
    report_path: str


def _dataset_cached(meta: DatasetMeta, path: Path, jobs: int) -> Dataset:
    if path.exists():
        ds = load_dataset(path)
        if ds.meta == meta:
            return ds
    return generate_dataset(meta, path, jobs=jobs)


def run_preset(name: str, tier: str, seed: int, outdir,
               jobs: int = 1) -> RunOutput:
    """Generate (or reuse cached) datasets, train, evaluate, and write
    the checkpoint, per-epoch metrics, and evaluation report."""
    preset = get_preset(name, tier)
    outdir = Path(outdir)
    (outdir / "data").mkdir(parents=True, exist_ok=True)
    stem = f"{name}_{tier}_s{seed}"

    train_meta = preset.dataset_meta(seed, train=True)
    test_meta = preset.dataset_meta(seed, train=False)
    train_ds = _dataset_cached(train_meta, outdir / "data" / f"{stem}.train",
                               jobs)
    test_ds = _dataset_cached(test_meta, outdir / "data" / f"{stem}.test",
                              jobs)

    tconf = preset.train_config(seed)
    result = train(train_ds, tconf)
    digest = config_digest(preset, tconf, {"seed": seed})
    report = evaluate(result.params, result.arch, test_ds, digest=digest)

    ckpt_path = outdir / f"{stem}.ckpt"
    save_checkpoint(ckpt_path, result.params, result.arch, adam=result.adam,
                    epoch=result.history[-1].epoch, seed=tconf.seed)
    metrics_path = outdir / f"{stem}_metrics.csv"
    metrics_path.write_text(history_to_csv(result.history))
    report_path = outdir / f"{stem}_report.csv"
    header, rows = report_csv_rows(report)
    write_csv(report_path, header, rows)
    per_sample_path = outdir / f"{stem}_per_sample.csv"
    write_csv(per_sample_path, ["sample", "cosine_f"],
              [[i, float(f)] for i, f in enumerate(report.per_sample_f)])
    return RunOutput(preset=preset, result=result, report=report,
                     checkpoint_path=str(ckpt_path),
                     metrics_path=str(metrics_path),
                     report_path=str(report_path))


def _train_model(preset: ExperimentPreset, seed: int,
                 jobs: int = 1) -> tuple[TrainResult, Dataset]:
    """Train one model for a (possibly modified) preset; returns the
    result and the clean test dataset."""
    train_ds = build_dataset(preset.dataset_meta(seed, train=True),
                             jobs=jobs)
    test_ds = build_dataset(preset.dataset_meta(seed, train=False),
                            jobs=jobs)
    return train(train_ds, preset.train_config(seed)), test_ds


# -- robustness and resource sweeps ----------------------------------------

NOISE_EPS_GRID = (0.0, 0.02, 0.04, 0.06, 0.08, 0.10)
T2_GRID = (np.pi, 3 * np.pi, 5 * np.pi)
T2_REFERENCE = 1e9
INTERVAL_FACTORS = (0.01, 0.03, 0.05, 0.07, 0.09)


def _noise_base(tier: str) -> ExperimentPreset:
    if tier == "paper":
        return _p("noise_base", "paper", family=XY_CHAIN_ZFIELD, n_qubits=3,
                  s_points=25, n_train=100_000, n_test=5_000)
    return _p("noise_base", "desk", family=XY_CHAIN_ZFIELD, n_qubits=2,
              s_points=25, n_train=8_000, n_test=500, hidden=64,
              batch_size=256, epochs=20, lr=2e-3, patience=12)


def run_noise_robustness(tier: str, seed: int, outdir,
                         eps_train=(0.0, 0.1), s_values=(25, 50),
                         eps_grid=NOISE_EPS_GRID, jobs: int = 1,
                         **overrides) -> list[dict]:
    """Gaussian-noise robustness: models trained clean vs with noise
    augmentation, each evaluated on noise-corrupted test data.

    Writes ``noise_robustness.csv`` and returns its rows as dicts.
    """
    base = replace(_noise_base(tier), **overrides)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for s in s_values:
        for eps_t in eps_train:
            preset = replace(base, s_points=s, noise_eps=eps_t)
            model = f"rnn_{round(eps_t * 100):g}noise_{s}"
            result, test_ds = _train_model(preset, seed, jobs=jobs)
            for k, eps in enumerate(eps_grid):
                noisy = corrupt_gaussian(
                    test_ds, eps, derive_seed(seed, k, _STREAM_EVAL_NOISE))
                rep = evaluate(result.params, result.arch, noisy)
                rows.append({"model": model, "s_points": s,
                             "eps_train": eps_t, "eps_test": eps,
                             "mean_f": rep.mean_f, "mse": rep.mse,
                             "n_excluded": rep.n_excluded})
    write_csv(outdir / "noise_robustness.csv",
              list(rows[0]), [list(r.values()) for r in rows])
    return rows


def _decoherence_base(tier: str) -> ExperimentPreset:
    if tier == "paper":
        return _p("t2_base", "paper", family=XY_CHAIN_ZFIELD, n_qubits=3,
                  s_points=150, n_train=100_000, n_test=5_000)
    return _p("t2_base", "desk", family=XY_CHAIN_ZFIELD, n_qubits=2,
              s_points=50, n_train=10_000, n_test=500, hidden=64,
              batch_size=256, epochs=16, lr=2e-3, patience=12)


def run_decoherence_robustness(tier: str, seed: int, outdir,
                               t2_grid=T2_GRID, include_reference=True,
                               jobs: int = 1, **overrides) -> list[dict]:
    """Dephasing robustness: a model trained on dephased records
    (per-sample T2 drawn from the tested range) against a clean-trained
    model, both evaluated on dephased test data per T2 value.

    Writes ``decoherence_robustness.csv`` and returns its rows.
    """
    base = replace(_decoherence_base(tier), **overrides)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t2_lo, t2_hi = min(t2_grid), max(t2_grid)
    models = {
        f"rnn_t2noise_{base.s_points}": replace(base,
                                                t2_range=(t2_lo, t2_hi)),
        f"rnn_0noise_{base.s_points}": base,
    }
    rows = []
    for model, preset in models.items():
        result, test_ds = _train_model(preset, seed, jobs=jobs)
        points = list(t2_grid) + ([T2_REFERENCE] if include_reference else [])
        for t2 in points:
            dephased = dephased_variant(test_ds.meta, t2, jobs=jobs)
            rep = evaluate(result.params, result.arch, dephased)
            rows.append({"model": model, "t2": float(t2),
                         "mean_f": rep.mean_f, "mse": rep.mse,
                         "n_excluded": rep.n_excluded})
        clean_rep = evaluate(result.params, result.arch, test_ds)
        rows.append({"model": model, "t2": float("inf"),
                     "mean_f": clean_rep.mean_f, "mse": clean_rep.mse,
                     "n_excluded": clean_rep.n_excluded})
    write_csv(outdir / "decoherence_robustness.csv",
              list(rows[0]), [list(r.values()) for r in rows])
    return rows


def _interval_base(tier: str) -> ExperimentPreset:
    if tier == "paper":
        return _p("interval_base", "paper", family=XY_CHAIN_ZFIELD,
                  n_qubits=3, s_points=25, n_train=100_000, n_test=5_000)
    return _p("interval_base", "desk", family=XY_CHAIN_ZFIELD, n_qubits=3,
              s_points=25, n_train=6_000, n_test=400, hidden=48,
              batch_size=128, epochs=50, lr=2e-3, patience=10)


def run_interval_sweep(tier: str, seed: int, outdir,
                       factors=INTERVAL_FACTORS, jobs: int = 1,
                       **overrides) -> list[dict]:
    """Accuracy as a function of the sampling interval (one model per
    interval, at fixed S).  Writes ``interval_sweep.csv``."""
    base = replace(_interval_base(tier), **overrides)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for factor in sorted(factors):
        preset = replace(base, tau=factor * DEFAULT_TAU)
        result, test_ds = _train_model(preset, seed, jobs=jobs)
        rep = evaluate(result.params, result.arch, test_ds)
        rows.append({"tau_factor": float(factor),
                     "tau": float(preset.tau), "mean_f": rep.mean_f,
                     "mse": rep.mse, "n_excluded": rep.n_excluded})
    write_csv(outdir / "interval_sweep.csv",
              list(rows[0]), [list(r.values()) for r in rows])
    return rows


def _scaling_base(tier: str) -> ExperimentPreset:
    if tier == "paper":
        return _p("scaling_base", "paper", family=XY_CHAIN_ZFIELD,
                  n_qubits=2, s_points=25, n_train=100_000, n_test=5_000)
    return _p("scaling_base", "desk", family=XY_CHAIN_ZFIELD, n_qubits=2,
              s_points=25, n_train=6_000, n_test=500, hidden=48,
              batch_size=128, epochs=50, lr=2e-3, patience=10)


def run_scaling_sweep(tier: str, seed: int, outdir,
                      n_grid=(2, 3, 4), s_grid=(5, 15, 25),
                      accuracy_frontier: float = 0.99, jobs: int = 1,
                      **overrides) -> list[dict]:
    """Accuracy over (qubit count, sample points); one model per cell.

    Writes ``scaling_sweep.csv`` with a frontier flag marking cells at
    or above the accuracy threshold.
    """
    if tier == "desk" and max(n_grid) > 4 and "n_train" not in overrides:
        raise ValueError("desk tier caps the qubit grid at 4; override "
                         "n_train explicitly to go larger")
    base = replace(_scaling_base(tier), **overrides)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for n in n_grid:
        for s in s_grid:
            preset = replace(base, n_qubits=n, s_points=s)
            result, test_ds = _train_model(preset, seed, jobs=jobs)
            rep = evaluate(result.params, result.arch, test_ds)
            rows.append({"n_qubits": n, "s_points": s,
                         "mean_f": rep.mean_f, "mse": rep.mse,
                         "frontier": int(rep.mean_f >= accuracy_frontier)})
    write_csv(outdir / "scaling_sweep.csv",
              list(rows[0]), [list(r.values()) for r in rows])
    return rows


SWEEPS = {
    "noise": run_noise_robustness,
    "decoherence": run_decoherence_robustness,
    "interval": run_interval_sweep,
    "scaling": run_scaling_sweep,
}
