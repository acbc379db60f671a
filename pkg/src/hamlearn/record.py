"""Temporal records of single-qubit measurements on a uniform time grid.

A record is an S x 3N matrix: row s holds the expectations at time
s*tau (s = 1..S; the deterministic t=0 values are not stored), columns
grouped per qubit as (x, y, z) blocks with qubits ascending.  Optional
Gaussian measurement noise is added to the expectation values directly;
optional dephasing routes the evolution through density matrices with
one Kraus step per sampling interval.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import qsim

# Columns: qubit-ascending blocks of (x, y, z); rows: times tau..S*tau.
ORDERING_TAG = "qubit-blocks-xyz"

# Default sub-slicing of one sampling interval for time-dependent models.
TD_SLICES_PER_STEP = 10


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform measurement grid: S points at spacing tau (units 1/J0)."""

    tau: float
    n_points: int

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.n_points < 1:
            raise ValueError(f"n_points must be >= 1, got {self.n_points}")

    @property
    def total_time(self) -> float:
        return self.tau * self.n_points

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(1, self.n_points + 1)


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement corruption: Gaussian sigma and/or per-qubit T2 times."""

    gaussian_sigma: float = 0.0
    t2: tuple | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be >= 0")
        if self.t2 is not None:
            object.__setattr__(self, "t2",
                               tuple(float(x) for x in self.t2))
            if any(x <= 0 for x in self.t2):
                raise ValueError("all T2 must be positive")

    @property
    def is_noiseless(self) -> bool:
        return self.gaussian_sigma == 0.0 and self.t2 is None


NOISELESS = NoiseSpec()


@dataclass
class MeasurementRecord:
    values: np.ndarray          # (S, 3N) float
    grid: SamplingGrid
    ordering: str = ORDERING_TAG

    @property
    def n_qubits(self) -> int:
        return self.values.shape[1] // 3


def _pure_states_static(spec, grid) -> np.ndarray:
    """States at all grid times from one eigendecomposition."""
    w, v = np.linalg.eigh(qsim.assemble_hamiltonian(spec))
    coeffs = v.conj().T @ qsim.initial_state(spec.n_qubits)
    phases = np.exp(-1j * np.outer(grid.times, w))
    return (phases * coeffs) @ v.T                       # (S, d)


def _pure_states_stepwise(spec, grid, slices_per_step) -> np.ndarray:
    psi = qsim.initial_state(spec.n_qubits)
    states = np.empty((grid.n_points, psi.size), dtype=complex)
    if spec.is_static:
        u = qsim.propagator(qsim.assemble_hamiltonian(spec),
                            grid.tau / slices_per_step)
        for s in range(grid.n_points):
            for _ in range(slices_per_step):
                psi = u @ psi
            states[s] = psi
        return states
    # one batched propagator build for the whole trajectory
    us = qsim._td_propagators(spec, 0.0, grid.total_time,
                              grid.n_points * slices_per_step)
    k = 0
    for s in range(grid.n_points):
        for _ in range(slices_per_step):
            psi = us[k] @ psi
            k += 1
        states[s] = psi
    return states


def _dephased_bloch(spec, grid, t2, slices_per_step, dephase_slices):
    """Density-matrix path: unitary sub-step then Kraus damping."""
    n = spec.n_qubits
    sub_tau = grid.tau / dephase_slices
    mask = qsim._dephasing_factors(n, tuple(t2), sub_tau)
    uni_slices = max(1, -(-slices_per_step // dephase_slices))
    psi = qsim.initial_state(n)
    rho = np.outer(psi, psi.conj())
    static_u = None
    if spec.is_static:
        static_u = qsim.propagator(qsim.assemble_hamiltonian(spec), sub_tau)
    values = np.empty((grid.n_points, 3 * n))
    for s in range(grid.n_points):
        for k in range(dephase_slices):
            t0 = s * grid.tau + k * sub_tau
            if static_u is not None:
                rho = static_u @ rho @ static_u.conj().T
            else:
                for u in qsim._td_propagators(spec, t0, t0 + sub_tau,
                                              uni_slices):
                    rho = u @ rho @ u.conj().T
            rho = rho * mask
        values[s] = qsim.bloch_table_rho(rho).reshape(-1)
    return values


def record_trajectory(spec, grid: SamplingGrid, noise: NoiseSpec = NOISELESS,
                      slices_per_step: int | None = None,
                      dephase_slices: int = 1) -> MeasurementRecord:
    """Simulate one trajectory and collect its measurement record.

    Parameters
    ----------
    spec : HamiltonianSpec
    grid : SamplingGrid
    noise : NoiseSpec
        With ``t2`` set, evolution runs through density matrices with a
        Kraus dephasing step per sampling interval; with
        ``gaussian_sigma > 0``, i.i.d. N(0, sigma) is added to every
        entry afterwards (not clamped to [-1, 1]).
    slices_per_step : int, optional
        Piecewise-constant sub-slices per sampling interval.  Defaults
        to 1 for static families and TD_SLICES_PER_STEP otherwise.
    dephase_slices : int
        Kraus steps per sampling interval (convergence checks only; the
        production value is 1, i.e. the Kraus slice equals tau).
    """
    spec.validate()
    if slices_per_step is None:
        slices_per_step = 1 if spec.is_static else TD_SLICES_PER_STEP
    if slices_per_step < 1 or dephase_slices < 1:
        raise ValueError("slice counts must be >= 1")
    n = spec.n_qubits
    if noise.t2 is not None and len(noise.t2) != n:
        raise ValueError(
            f"noise.t2 has {len(noise.t2)} entries for {n} qubits")

    if noise.t2 is None:
        if spec.is_static and slices_per_step == 1:
            states = _pure_states_static(spec, grid)
        else:
            states = _pure_states_stepwise(spec, grid, slices_per_step)
        values = qsim.bloch_table_pure(states).reshape(grid.n_points, 3 * n)
    else:
        values = _dephased_bloch(spec, grid, noise.t2,
                                 slices_per_step, dephase_slices)

    rec = MeasurementRecord(values=values, grid=grid)
    if noise.gaussian_sigma > 0.0:
        rec = add_gaussian_noise(rec, noise.gaussian_sigma, noise.rng_seed)
    return rec


def add_gaussian_noise(rec: MeasurementRecord, sigma: float,
                       seed: int) -> MeasurementRecord:
    """Add i.i.d. N(0, sigma) to every entry; sigma = 0 returns rec."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return rec
    rng = np.random.default_rng(seed)
    return replace(rec, values=rec.values + rng.normal(0.0, sigma,
                                                       rec.values.shape))


def flatten_record(rec: MeasurementRecord) -> np.ndarray:
    """Row-major (time-major) flattening to a vector of length 3*N*S."""
    return rec.values.reshape(-1)


def unflatten_record(flat: np.ndarray, grid: SamplingGrid,
                     n_qubits: int) -> MeasurementRecord:
    """Inverse of :func:`flatten_record`."""
    flat = np.asarray(flat, dtype=float)
    expected = grid.n_points * 3 * n_qubits
    if flat.shape != (expected,):
        raise ValueError(
            f"flat record has shape {flat.shape}, expected ({expected},)")
    return MeasurementRecord(values=flat.reshape(grid.n_points, 3 * n_qubits),
                             grid=grid)
