"""Dense operators and states on truncated Fock / qubit Hilbert spaces.

Everything is a plain complex numpy matrix wrapped in a thin immutable
container that checks the declared invariants once, at construction.
Conventions: hbar = 1 and the quadrature a e^{i phi} + a^dag e^{-i phi} is
normalized so the vacuum variance is 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractViolationError,
    DimensionMismatchError,
    InvalidDimensionError,
    NumericalConsistencyError,
    TruncationError,
)

# Tolerances from the numerical contract; exposed so callers can reuse them.
HERMITICITY_RTOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-10
UNITARITY_TOL = 1e-10
LEAKAGE_TOL = 1e-8
IMAG_RESIDUE_TOL = 1e-10

# Padding factor for preparing Gaussian probes on an enlarged space before
# projecting back to the target truncation.
PROBE_PAD_FACTOR = 2


def _as_complex_matrix(entries) -> np.ndarray:
    m = np.array(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise InvalidDimensionError("empty matrix")
    return m


@dataclass(frozen=True)
class Operator:
    """A dense complex square matrix with a declared Hermiticity flag."""

    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = _as_complex_matrix(self.matrix)
        if self.hermitian:
            scale = np.abs(m).max()
            if scale > 0 and np.abs(m - m.conj().T).max() > HERMITICITY_RTOL * scale:
                raise ContractViolationError(
                    "matrix declared hermitian is not hermitian within tolerance"
                )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, hermitian=self.hermitian)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace operator."""

    op: Operator

    def __post_init__(self):
        if not self.op.hermitian:
            raise ContractViolationError("density matrix requires a hermitian Operator")
        tr = np.trace(self.op.matrix)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ContractViolationError(f"trace {tr} differs from 1 beyond tolerance")
        evals = np.linalg.eigvalsh(self.op.matrix)
        if evals.min() < -PSD_TOL:
            raise ContractViolationError(
                f"negative eigenvalue {evals.min():.3e} beyond tolerance"
            )

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim

    @classmethod
    def from_matrix(cls, matrix) -> "DensityMatrix":
        m = _as_complex_matrix(matrix)
        return cls(Operator((m + m.conj().T) / 2, hermitian=True))


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state in the computational (Fock) basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.size < 1:
            raise InvalidDimensionError("empty state vector")
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ContractViolationError(f"norm {nrm} differs from 1 beyond tolerance")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density_matrix(self) -> DensityMatrix:
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityMatrix(Operator(rho, hermitian=True))


@dataclass(frozen=True)
class GaussianProbeSpec:
    """Real displacement/squeezing pair defining a probe D(alpha) S(r) |0>."""

    alpha: float
    r: float
    dim: int

    def __post_init__(self):
        n = self.mean_excitation
        if not math.isfinite(n) or n < 0:
            raise ContractViolationError(f"mean excitation {n} must be finite and >= 0")
        if self.dim < 2:
            raise InvalidDimensionError("truncation dimension must be >= 2")

    @property
    def mean_excitation(self) -> float:
        return self.alpha**2 + math.sinh(self.r) ** 2

    @classmethod
    def with_default_dim(cls, alpha: float, r: float) -> "GaussianProbeSpec":
        return cls(alpha, r, default_truncation_dim(alpha, r))


def default_truncation_dim(alpha: float, r: float) -> int:
    """Truncation policy targeting tail mass below 1e-9 for alpha <= 2, r <= 1.

    The squeezed-vacuum number tail decays geometrically like (tanh^2 r)^(n/2)
    until far past the mean, so the cutoff must scale with 1/(-ln tanh|r|);
    displacement along the anti-squeezed axis adds roughly alpha^2 e^{2|r|}.
    """
    n = alpha**2 + math.sinh(r) ** 2
    dim = max(16, math.ceil(8.0 * (n + 1.0)))
    if r != 0.0:
        squeeze_tail = 20.75 / (-math.log(math.tanh(abs(r))))
        dim = max(dim, math.ceil(squeeze_tail + alpha**2 * math.exp(2 * abs(r)) + 10))
    return dim


def fock_ladder(dim: int) -> tuple[Operator, Operator]:
    """Annihilation and creation operators on a dim-dimensional Fock space."""
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise InvalidDimensionError(f"ladder operators need dim >= 2, got {dim}")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    return Operator(a), Operator(a.conj().T)


def number_operator(dim: int) -> Operator:
    """n = a^dag a, diagonal (0, 1, ..., dim-1)."""
    if dim < 2:
        raise InvalidDimensionError(f"number operator needs dim >= 2, got {dim}")
    return Operator(np.diag(np.arange(dim, dtype=float)).astype(complex), hermitian=True)


def fock_state(dim: int, n: int) -> StateVector:
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"Fock index {n} outside [0, {dim})")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return StateVector(v)


def unitary_from_generator(g: Operator) -> Operator:
    """exp(g) for anti-Hermitian g, via eigendecomposition of the Hermitian i*g.

    The eigendecomposition route keeps the result unitary to roundoff, unlike
    scaling-and-squaring.
    """
    m = g.matrix
    scale = np.abs(m).max()
    if scale > 0 and np.abs(m + m.conj().T).max() > 1e-10 * max(1.0, scale):
        raise ContractViolationError("generator is not anti-Hermitian within tolerance")
    h = 1j * m  # Hermitian
    evals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    u = (vecs * np.exp(-1j * evals)) @ vecs.conj().T
    return Operator(u)


def displacement_generator(alpha: float, dim: int) -> Operator:
    a, adag = fock_ladder(dim)
    return Operator(alpha * (adag.matrix - a.matrix))


def squeezing_generator(r: float, dim: int) -> Operator:
    a, adag = fock_ladder(dim)
    return Operator(r * (adag.matrix @ adag.matrix - a.matrix @ a.matrix) / 2)


def gaussian_probe(spec: GaussianProbeSpec) -> StateVector:
    """D(alpha) S(r) |0> on a padded space, projected back to spec.dim.

    Raises TruncationError if the projection loses more than LEAKAGE_TOL of
    the norm, with a suggested larger dimension.
    """
    big = PROBE_PAD_FACTOR * spec.dim
    d_op = unitary_from_generator(displacement_generator(spec.alpha, big))
    s_op = unitary_from_generator(squeezing_generator(spec.r, big))
    vac = np.zeros(big, dtype=complex)
    vac[0] = 1.0
    psi_big = d_op.matrix @ (s_op.matrix @ vac)
    kept = psi_big[: spec.dim]
    leakage = 1.0 - float(np.linalg.norm(kept) ** 2)
    if leakage > LEAKAGE_TOL:
        suggested = default_truncation_dim(spec.alpha, spec.r)
        if suggested <= spec.dim:
            suggested = 2 * spec.dim
        raise TruncationError(
            f"projection to dim={spec.dim} loses {leakage:.3e} of the norm; "
            f"try dim >= {suggested}",
            suggested_dim=suggested,
        )
    return StateVector(kept / np.linalg.norm(kept))


def expectation(rho: DensityMatrix, m: Operator) -> float:
    """Tr[rho m]; the imaginary residue must be below IMAG_RESIDUE_TOL."""
    if rho.dim != m.dim:
        raise DimensionMismatchError(f"state dim {rho.dim} != observable dim {m.dim}")
    val = complex(np.trace(rho.matrix @ m.matrix))
    if abs(val.imag) > IMAG_RESIDUE_TOL:
        raise NumericalConsistencyError(
            f"expectation has imaginary residue {val.imag:.3e}"
        )
    return val.real


def variance(rho: DensityMatrix, m: Operator) -> float:
    """<m^2> - <m>^2, clamped to >= 0 against roundoff."""
    mm = Operator(m.matrix @ m.matrix, hermitian=m.hermitian)
    v = expectation(rho, mm) - expectation(rho, m) ** 2
    return max(v, 0.0)
