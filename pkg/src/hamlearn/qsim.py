"""Exact dense simulation of short spin chains.

Operator assembly, state preparation, unitary and dephasing evolution,
and single-qubit expectation values for the parameterized chain models
used throughout the package.

Frozen conventions (changing any of these silently changes every record
produced downstream):

* qubit 1 is the leftmost, i.e. most significant, tensor factor;
* rotations follow ``R_a(theta) = exp(-i theta sigma_a / 2)``, so the
  prepared product state has per-qubit Bloch vector
  ``(0.5, 0.5, sqrt(2)/2)``;
* propagators are built by eigendecomposition of the Hermitian
  generator (dimensions stay at or below 2**MAX_QUBITS, where dense
  eigensolves beat any sparse scheme);
* time-dependent Hamiltonians are integrated with piecewise-constant
  propagators evaluated at slice midpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_QUBITS = 10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}
AXES = ("x", "y", "z")

# Model families.  XY chains carry nearest-neighbor XX+YY couplings with a
# z field per site; the XYZ chain adds independent XX/YY/ZZ couplings; the
# TD variant replaces the static z field with per-site cosine series.
XY_CHAIN_ZFIELD = "xy_chain_zfield"
XYZ_CHAIN = "xyz_chain"
XY_CHAIN_TD_ZFIELD = "xy_chain_td_zfield"
FAMILIES = (XY_CHAIN_ZFIELD, XYZ_CHAIN, XY_CHAIN_TD_ZFIELD)
STATIC_FAMILIES = (XY_CHAIN_ZFIELD, XYZ_CHAIN)


class CapacityError(ValueError):
    """Requested system size exceeds the dense-simulation cap."""


def _check_capacity(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(
            f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-site Pauli operators, e.g. ``XIZ``."""

    n_qubits: int
    letters: str

    def __post_init__(self):
        if len(self.letters) != self.n_qubits:
            raise ValueError(
                f"letters has length {len(self.letters)}, expected {self.n_qubits}")
        bad = set(self.letters) - set("IXYZ")
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)}")


def pauli_matrix(ps: PauliString) -> np.ndarray:
    """Dense matrix of a Pauli string; site 1 is the leftmost factor."""
    _check_capacity(ps.n_qubits)
    out = PAULI[ps.letters[0]]
    for letter in ps.letters[1:]:
        out = np.kron(out, PAULI[letter])
    return out


def site_operator(n_qubits: int, qubit: int, axis: str) -> np.ndarray:
    """sigma_axis acting on one site (1-based), identity elsewhere."""
    if not 1 <= qubit <= n_qubits:
        raise ValueError(f"qubit index {qubit} out of range 1..{n_qubits}")
    letters = "".join(axis.upper() if i == qubit else "I"
                      for i in range(1, n_qubits + 1))
    return pauli_matrix(PauliString(n_qubits, letters))


def static_param_count(family: str, n_qubits: int) -> int:
    """Length of the static parameter vector for a family."""
    if family == XY_CHAIN_ZFIELD:
        return 2 * n_qubits - 1          # N fields + N-1 couplings
    if family == XYZ_CHAIN:
        return 4 * n_qubits - 3          # N fields + 3(N-1) couplings
    if family == XY_CHAIN_TD_ZFIELD:
        return n_qubits - 1              # couplings only
    raise ValueError(f"unknown family {family!r}")


@dataclass
class HamiltonianSpec:
    """Model family, qubit count, and the parameter vector.

    ``static_params`` ordering:

    * xy_chain_zfield:  [a_z(1..N), J(1..N-1)]
    * xyz_chain:        [a_z(1..N), Jx(1), Jy(1), Jz(1), Jx(2), ...]
      (bond-major coupling triples)
    * xy_chain_td_zfield: [J(1..N-1)]; the z fields come from
      ``fourier_params`` of shape (N, W, 3) with rows (amplitude,
      frequency, phase), giving per site
      ``a_z(t) = (1/W) * sum_w F_w cos(nu_w t + phi_w)``.

    All parameters are in units of the global scale ``j0``.
    """

    family: str
    n_qubits: int
    static_params: np.ndarray
    fourier_params: np.ndarray | None = None
    j0: float = 1.0

    def __post_init__(self):
        self.static_params = np.asarray(self.static_params, dtype=float)
        if self.fourier_params is not None:
            self.fourier_params = np.asarray(self.fourier_params, dtype=float)

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        _check_capacity(self.n_qubits)
        if self.j0 <= 0:
            raise ValueError(f"j0 must be positive, got {self.j0}")
        expected = static_param_count(self.family, self.n_qubits)
        if self.static_params.shape != (expected,):
            raise ValueError(
                f"{self.family} with {self.n_qubits} qubits needs "
                f"{expected} static parameters, got shape "
                f"{self.static_params.shape}")
        if self.family == XY_CHAIN_TD_ZFIELD:
            if self.fourier_params is None:
                raise ValueError("time-dependent family needs fourier_params")
            if (self.fourier_params.ndim != 3
                    or self.fourier_params.shape[0] != self.n_qubits
                    or self.fourier_params.shape[2] != 3):
                raise ValueError(
                    "fourier_params must have shape (n_qubits, W, 3), got "
                    f"{self.fourier_params.shape}")
        elif self.fourier_params is not None:
            raise ValueError(f"{self.family} takes no fourier_params")

    @property
    def is_static(self) -> bool:
        return self.family in STATIC_FAMILIES

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


def _bond_xy(n: int, j: int) -> np.ndarray:
    """XX+YY term on bond (j, j+1), 1-based."""
    xx = pauli_matrix(PauliString(n, "".join(
        "X" if i in (j, j + 1) else "I" for i in range(1, n + 1))))
    yy = pauli_matrix(PauliString(n, "".join(
        "Y" if i in (j, j + 1) else "I" for i in range(1, n + 1))))
    return xx + yy


@lru_cache(maxsize=None)
def _term_basis(family: str, n_qubits: int) -> np.ndarray:
    """Stacked operator basis matching the parameter-vector ordering."""
    n = n_qubits
    terms = [site_operator(n, i, "z") for i in range(1, n + 1)]
    if family in (XY_CHAIN_ZFIELD, XY_CHAIN_TD_ZFIELD):
        terms += [_bond_xy(n, j) for j in range(1, n)]
    elif family == XYZ_CHAIN:
        for j in range(1, n):
            for axis in "XYZ":
                letters = "".join(axis if i in (j, j + 1) else "I"
                                  for i in range(1, n + 1))
                terms.append(pauli_matrix(PauliString(n, letters)))
    else:
        raise ValueError(f"unknown family {family!r}")
    return np.stack(terms)


def fourier_field_values(fourier_params: np.ndarray, times) -> np.ndarray:
    """Per-site cosine-series field values, shape (len(times), N)."""
    fp = np.asarray(fourier_params, dtype=float)
    t = np.atleast_1d(np.asarray(times, dtype=float))
    amp, freq, phase = fp[..., 0], fp[..., 1], fp[..., 2]
    # (T, N, W) phases -> mean over the W series
    angles = freq[None, :, :] * t[:, None, None] + phase[None, :, :]
    return np.mean(amp[None, :, :] * np.cos(angles), axis=2)


def coefficient_vector(spec: HamiltonianSpec, t: float = 0.0) -> np.ndarray:
    """Term coefficients in the ``_term_basis`` ordering at time t."""
    if spec.is_static:
        return spec.static_params
    fields = fourier_field_values(spec.fourier_params, [t])[0]
    return np.concatenate([fields, spec.static_params])


def assemble_hamiltonian(spec: HamiltonianSpec, t: float = 0.0) -> np.ndarray:
    """Dense Hamiltonian sum(a_m(t) * B_m) for the spec's term list."""
    spec.validate()
    basis = _term_basis(spec.family, spec.n_qubits)
    return np.tensordot(coefficient_vector(spec, t), basis, axes=1)


def initial_state(n_qubits: int) -> np.ndarray:
    """Product state Rz(pi/4) Ry(pi/4) |0> on every site.

    Gives each qubit the Bloch vector (0.5, 0.5, sqrt(2)/2), so all three
    measured components start away from zero.
    """
    _check_capacity(n_qubits)
    c, s = math.cos(math.pi / 8), math.sin(math.pi / 8)
    one = np.array([np.exp(-1j * math.pi / 8) * c,
                    np.exp(1j * math.pi / 8) * s])
    state = one
    for _ in range(n_qubits - 1):
        state = np.kron(state, one)
    return state


def _check_hermitian(h: np.ndarray, tol: float = 1e-9) -> None:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    dev = np.max(np.abs(h - h.conj().T))
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")


def propagator(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i h dt) via eigendecomposition of the Hermitian generator."""
    _check_hermitian(h)
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def _td_propagators(spec: HamiltonianSpec, t0: float, t1: float,
                    n_slices: int) -> np.ndarray:
    """Stacked midpoint-rule slice propagators over [t0, t1]."""
    dt = (t1 - t0) / n_slices
    mids = t0 + (np.arange(n_slices) + 0.5) * dt
    fields = fourier_field_values(spec.fourier_params, mids)      # (n, N)
    coeffs = np.concatenate(
        [fields, np.tile(spec.static_params, (n_slices, 1))], axis=1)
    basis = _term_basis(spec.family, spec.n_qubits)
    hs = np.tensordot(coeffs, basis, axes=1)                      # (n, d, d)
    w, v = np.linalg.eigh(hs)
    phases = np.exp(-1j * w * dt)
    return (v * phases[:, None, :]) @ v.conj().swapaxes(-1, -2)


def slices_for(duration: float, dt_max: float) -> int:
    """Minimum slice count keeping each slice at or below dt_max."""
    if duration <= 0:
        return 1
    return max(1, math.ceil(duration / dt_max - 1e-12))


def evolve_pure(state: np.ndarray, spec: HamiltonianSpec, t_final: float,
                n_slices: int | None = None, t_start: float = 0.0,
                dt_max: float | None = None) -> np.ndarray:
    """Evolve a pure state from t_start to t_final under the spec.

    Static families are exact for any slice count; time-dependent
    families use piecewise-constant midpoint propagators, and the given
    n_slices must keep slices below dt_max when both are supplied.
    """
    spec.validate()
    duration = t_final - t_start
    if duration < 0:
        raise ValueError("t_final must not precede t_start")
    if duration == 0:
        return state.copy()
    if n_slices is None:
        n_slices = 1 if spec.is_static else slices_for(
            duration, dt_max if dt_max is not None else duration / 10)
    if n_slices < 1:
        raise ValueError(f"n_slices must be >= 1, got {n_slices}")
    if not spec.is_static and dt_max is not None:
        needed = slices_for(duration, dt_max)
        if n_slices < needed:
            raise ValueError(
                f"time-dependent evolution over {duration:g} needs at least "
                f"{needed} slices for dt_max={dt_max:g}, got {n_slices}")
    if spec.is_static:
        u = propagator(assemble_hamiltonian(spec), duration / n_slices)
        out = state
        for _ in range(n_slices):
            out = u @ out
        return out
    out = state
    for u in _td_propagators(spec, t_start, t_final, n_slices):
        out = u @ out
    return out


def _z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    """Diagonal of sigma_z on one site as a +/-1 vector of length 2^N."""
    bit = n_qubits - qubit  # qubit 1 = most significant bit
    idx = np.arange(2 ** n_qubits)
    return 1.0 - 2.0 * ((idx >> bit) & 1)


@lru_cache(maxsize=64)  # per-sample T2 draws would grow an unbounded cache
def _dephasing_factors(n_qubits: int, t2: tuple, dtau: float) -> np.ndarray:
    """Entrywise damping mask of the composed per-qubit dephasing maps."""
    mask = np.ones((2 ** n_qubits, 2 ** n_qubits))
    for i, t2_i in enumerate(t2, start=1):
        lam = 0.5 * (1.0 + math.exp(-dtau / t2_i))
        z = _z_signs(n_qubits, i)
        mask *= lam + (1.0 - lam) * np.outer(z, z)
    return mask


def apply_dephasing(rho: np.ndarray, t2, dtau: float) -> np.ndarray:
    """One dephasing step: per qubit i the map with Kraus pair
    sqrt(lam_i) * I and sqrt(1-lam_i) * sigma_z^(i), where
    lam_i = (1 + exp(-dtau / T2_i)) / 2.

    Reduces to entrywise damping of rho; trace and Hermiticity are
    preserved exactly.
    """
    if dtau <= 0:
        raise ValueError(f"dtau must be positive, got {dtau}")
    t2 = tuple(float(x) for x in np.atleast_1d(t2))
    if any(x <= 0 for x in t2):
        raise ValueError("all T2 must be positive")
    n = int(round(math.log2(rho.shape[0])))
    if rho.shape != (2 ** n, 2 ** n) or len(t2) != n:
        raise ValueError(
            f"rho shape {rho.shape} inconsistent with {len(t2)} qubits")
    _check_hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-9:
        raise ValueError(f"rho trace {tr!r} is not 1")
    return rho * _dephasing_factors(n, t2, float(dtau))


def _reshape_pure(states: np.ndarray, n_qubits: int, qubit: int):
    left = 2 ** (qubit - 1)
    right = 2 ** (n_qubits - qubit)
    return states.reshape(states.shape[:-1] + (left, 2, right))


def bloch_table_pure(states: np.ndarray) -> np.ndarray:
    """Single-qubit (x, y, z) expectations of pure states.

    Accepts one state (d,) or a batch (K, d); returns (N, 3) or (K, N, 3).
    """
    states = np.asarray(states)
    single = states.ndim == 1
    if single:
        states = states[None, :]
    n = int(round(math.log2(states.shape[-1])))
    out = np.empty((states.shape[0], n, 3))
    for q in range(1, n + 1):
        psi = _reshape_pure(states, n, q)
        rdm = np.einsum("kaib,kajb->kij", psi, psi.conj())
        out[:, q - 1, 0] = 2.0 * rdm[:, 0, 1].real
        out[:, q - 1, 1] = -2.0 * rdm[:, 0, 1].imag
        out[:, q - 1, 2] = (rdm[:, 0, 0] - rdm[:, 1, 1]).real
    return out[0] if single else out


def bloch_table_rho(rho: np.ndarray) -> np.ndarray:
    """Single-qubit (x, y, z) expectations of a density matrix, (N, 3)."""
    n = int(round(math.log2(rho.shape[0])))
    out = np.empty((n, 3))
    for q in range(1, n + 1):
        left = 2 ** (q - 1)
        right = 2 ** (n - q)
        r = rho.reshape(left, 2, right, left, 2, right)
        rdm = np.einsum("aibajb->ij", r)
        out[q - 1, 0] = 2.0 * rdm[0, 1].real
        out[q - 1, 1] = -2.0 * rdm[0, 1].imag
        out[q - 1, 2] = (rdm[0, 0] - rdm[1, 1]).real
    return out


def expectation_single_qubit(state_or_rho: np.ndarray, qubit: int,
                             axis: str) -> float:
    """<sigma_axis^(qubit)> of a pure state (1-D) or density matrix (2-D)."""
    a = np.asarray(state_or_rho)
    n = int(round(math.log2(a.shape[0])))
    if not 1 <= qubit <= n:
        raise ValueError(f"qubit index {qubit} out of range 1..{n}")
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    table = bloch_table_pure(a) if a.ndim == 1 else bloch_table_rho(a)
    value = float(table[qubit - 1, AXES.index(axis)])
    if abs(value) > 1.0 + 1e-6:
        raise ValueError(f"unphysical expectation {value!r}")
    return value
