"""Labeled (record, parameter) datasets: sampling, generation, persistence.

Every sample is reproducible from ``(master_seed, index)`` alone, so
generation parallelizes across indices without changing a single byte
of the output.  Files are plain text: one metadata header line, then
one line per sample holding the flattened record followed by the target
vector, all floats printed with 17 significant digits for exact
round-trips.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from . import qsim
from .qsim import HamiltonianSpec, XY_CHAIN_TD_ZFIELD
from .record import NoiseSpec, SamplingGrid, flatten_record, record_trajectory

FORMAT_VERSION = 1
DEFAULT_TAU = 0.02 * np.pi
DEFAULT_FOURIER_TERMS = 10

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xD1B54A32D192ED03

# Independent per-sample randomness streams.  Parameters use stream 0 so
# the same Hamiltonians are drawn regardless of the noise settings.
STREAM_PARAMS = 0
STREAM_NOISE = 1
STREAM_T2 = 2


class DatasetFormatError(ValueError):
    """File does not parse as a dataset of the expected shape."""


class DatasetVersionError(DatasetFormatError):
    """File declares an unsupported format version."""


def _splitmix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int, stream: int = 0) -> int:
    """SplitMix-style 64-bit mix of (master_seed, index, stream)."""
    z = (master_seed + _GOLDEN * (index + 1) + _STREAM_SALT * stream) & _MASK64
    return _splitmix64(z)


def target_dim_for(family: str, n_qubits: int, n_points: int) -> int:
    """Length of the learning target for one sample."""
    if family == XY_CHAIN_TD_ZFIELD:
        return n_points * n_qubits + (n_qubits - 1)
    return qsim.static_param_count(family, n_qubits)


@dataclass(frozen=True)
class DatasetMeta:
    """Everything needed to regenerate a dataset bit-for-bit."""

    family: str
    n_qubits: int
    tau: float
    n_points: int
    n_samples: int
    master_seed: int
    gaussian_sigma: float = 0.0
    t2: tuple | None = None            # fixed per-qubit coherence times
    t2_range: tuple | None = None      # (lo, hi): uniform draw per sample
    j0: float = 1.0
    w: int | None = None               # Fourier terms (TD family only)
    format_version: int = FORMAT_VERSION

    @property
    def grid(self) -> SamplingGrid:
        return SamplingGrid(self.tau, self.n_points)

    @property
    def input_dim(self) -> int:
        return 3 * self.n_qubits * self.n_points

    @property
    def target_dim(self) -> int:
        return target_dim_for(self.family, self.n_qubits, self.n_points)


@dataclass
class Dataset:
    meta: DatasetMeta
    inputs: np.ndarray    # (n_samples, input_dim)
    targets: np.ndarray   # (n_samples, target_dim)

    def __len__(self) -> int:
        return self.inputs.shape[0]


def sample_parameters(family: str, n_qubits: int, rng: np.random.Generator,
                      j0: float = 1.0,
                      w: int = DEFAULT_FOURIER_TERMS) -> HamiltonianSpec:
    """Draw one parameter set: statics i.i.d. uniform on [-j0, j0],
    Fourier amplitudes/frequencies likewise, phases uniform on [0, 2pi].
    """
    n_static = qsim.static_param_count(family, n_qubits)
    fourier = None
    if family == XY_CHAIN_TD_ZFIELD:
        amp = rng.uniform(-j0, j0, (n_qubits, w))
        freq = rng.uniform(-j0, j0, (n_qubits, w))
        phase = rng.uniform(0.0, 2.0 * np.pi, (n_qubits, w))
        fourier = np.stack([amp, freq, phase], axis=2)
    static = rng.uniform(-j0, j0, n_static)
    spec = HamiltonianSpec(family=family, n_qubits=n_qubits,
                           static_params=static, fourier_params=fourier,
                           j0=j0)
    spec.validate()
    return spec


def target_vector(spec: HamiltonianSpec, grid: SamplingGrid) -> np.ndarray:
    """Learning target for one spec.

    Static families: the static parameter vector.  Time-dependent
    family: field values on the grid, time-major (all qubits at tau,
    then at 2*tau, ...), followed by the static couplings.
    """
    if spec.is_static:
        return spec.static_params.copy()
    fields = qsim.fourier_field_values(spec.fourier_params, grid.times)
    return np.concatenate([fields.reshape(-1), spec.static_params])


def make_sample(meta: DatasetMeta, index: int):
    """Generate sample ``index``; fully determined by (master_seed, index)."""
    rng = np.random.default_rng(
        derive_seed(meta.master_seed, index, STREAM_PARAMS))
    spec = sample_parameters(meta.family, meta.n_qubits, rng, j0=meta.j0,
                             w=meta.w or DEFAULT_FOURIER_TERMS)
    t2 = meta.t2
    if meta.t2_range is not None:
        rng_t2 = np.random.default_rng(
            derive_seed(meta.master_seed, index, STREAM_T2))
        drawn = rng_t2.uniform(meta.t2_range[0], meta.t2_range[1])
        t2 = (drawn,) * meta.n_qubits
    noise = NoiseSpec(gaussian_sigma=meta.gaussian_sigma, t2=t2,
                      rng_seed=derive_seed(meta.master_seed, index,
                                           STREAM_NOISE))
    rec = record_trajectory(spec, meta.grid, noise)
    return flatten_record(rec), target_vector(spec, meta.grid)


def build_dataset(meta: DatasetMeta, jobs: int = 1) -> Dataset:
    """Generate all samples; output is independent of the worker count."""
    inputs = np.empty((meta.n_samples, meta.input_dim))
    targets = np.empty((meta.n_samples, meta.target_dim))
    if jobs > 1 and meta.n_samples > 1:
        with multiprocessing.Pool(jobs) as pool:
            results = pool.map(partial(make_sample, meta),
                               range(meta.n_samples), chunksize=64)
        for i, (x, y) in enumerate(results):
            inputs[i], targets[i] = x, y
    else:
        for i in range(meta.n_samples):
            inputs[i], targets[i] = make_sample(meta, i)
    return Dataset(meta=meta, inputs=inputs, targets=targets)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _meta_to_header(meta: DatasetMeta) -> str:
    t2 = "-" if meta.t2 is None else ",".join(_fmt(x) for x in meta.t2)
    t2r = "-" if meta.t2_range is None else ",".join(
        _fmt(x) for x in meta.t2_range)
    w = "-" if meta.w is None else str(meta.w)
    fields = [
        f"format_version={meta.format_version}",
        f"family={meta.family}",
        f"n_qubits={meta.n_qubits}",
        f"tau={_fmt(meta.tau)}",
        f"n_points={meta.n_points}",
        f"n_samples={meta.n_samples}",
        f"master_seed={meta.master_seed}",
        f"gaussian_sigma={_fmt(meta.gaussian_sigma)}",
        f"t2={t2}",
        f"t2_range={t2r}",
        f"j0={_fmt(meta.j0)}",
        f"w={w}",
    ]
    return " ".join(fields)


def _meta_from_header(line: str) -> DatasetMeta:
    try:
        kv = dict(item.split("=", 1) for item in line.split())
    except ValueError as exc:
        raise DatasetFormatError(f"malformed header line: {exc}") from exc
    missing = {"format_version", "family", "n_qubits", "tau", "n_points",
               "n_samples", "master_seed", "gaussian_sigma", "t2",
               "t2_range", "j0", "w"} - kv.keys()
    if missing:
        raise DatasetFormatError(f"header missing fields {sorted(missing)}")
    version = int(kv["format_version"])
    if version != FORMAT_VERSION:
        raise DatasetVersionError(
            f"unsupported format_version {version}, expected {FORMAT_VERSION}")
    t2 = None if kv["t2"] == "-" else tuple(
        float(x) for x in kv["t2"].split(","))
    t2r = None if kv["t2_range"] == "-" else tuple(
        float(x) for x in kv["t2_range"].split(","))
    w = None if kv["w"] == "-" else int(kv["w"])
    return DatasetMeta(
        family=kv["family"], n_qubits=int(kv["n_qubits"]),
        tau=float(kv["tau"]), n_points=int(kv["n_points"]),
        n_samples=int(kv["n_samples"]), master_seed=int(kv["master_seed"]),
        gaussian_sigma=float(kv["gaussian_sigma"]), t2=t2, t2_range=t2r,
        j0=float(kv["j0"]), w=w, format_version=version)


def save_dataset(ds: Dataset, path) -> None:
    with open(path, "w") as fh:
        fh.write(_meta_to_header(ds.meta) + "\n")
        for x, y in zip(ds.inputs, ds.targets):
            row = np.concatenate([x, y])
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def load_dataset(path) -> Dataset:
    """Load and validate a dataset file; rejects corrupt or stale files."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header:
            raise DatasetFormatError(f"{path}: empty file")
        meta = _meta_from_header(header)
        n_in, n_tgt = meta.input_dim, meta.target_dim
        inputs = np.empty((meta.n_samples, n_in))
        targets = np.empty((meta.n_samples, n_tgt))
        i = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if i >= meta.n_samples:
                raise DatasetFormatError(
                    f"{path}: more rows than the declared {meta.n_samples}")
            row = np.fromstring(line, sep=" ")
            if row.size != n_in + n_tgt:
                raise DatasetFormatError(
                    f"{path}: row {i} has {row.size} values, expected "
                    f"{n_in + n_tgt}")
            inputs[i] = row[:n_in]
            targets[i] = row[n_in:]
            i += 1
        if i != meta.n_samples:
            raise DatasetFormatError(
                f"{path}: found {i} rows, header declares {meta.n_samples}")
    return Dataset(meta=meta, inputs=inputs, targets=targets)


def generate_dataset(meta: DatasetMeta, path, jobs: int = 1) -> Dataset:
    """Build and persist a dataset in one call."""
    ds = build_dataset(meta, jobs=jobs)
    save_dataset(ds, path)
    return ds


def split_dataset(ds: Dataset, fraction: float, seed: int):
    """Deterministic shuffle-then-split into (first, second) parts."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = len(ds)
    n_first = round(n * fraction)
    if n_first == 0 or n_first == n:
        raise ValueError(
            f"split of {n} samples at fraction {fraction} is degenerate")
    perm = np.random.default_rng(seed).permutation(n)
    first, second = perm[:n_first], perm[n_first:]
    return (
        Dataset(replace(ds.meta, n_samples=n_first),
                ds.inputs[first], ds.targets[first]),
        Dataset(replace(ds.meta, n_samples=n - n_first),
                ds.inputs[second], ds.targets[second]),
    )
