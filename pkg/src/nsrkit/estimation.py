"""Noise-to-sensibility ratio, SLD, quantum Fisher information and
calibration-cost machinery for one-parameter families rho(x).

A family is a pair of maps x -> rho(x) and x -> drho/dx with an analytic
derivative. The figure of merit of an observable m is the ratio
sqrt(Var m) / |d<m>/dx|; its square inverse (the Fisher value) is maximized
by the symmetric logarithmic derivative, and the maximum is the QFI.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    ContractViolationError,
    DegenerateObservableError,
    DimensionMismatchError,
    NoInformationError,
    NumericalConsistencyError,
    SupportTruncationWarning,
    UndefinedResidualError,
)
from .operators import (
    DensityMatrix,
    IMAG_RESIDUE_TOL,
    Operator,
    StateVector,
    expectation,
    variance,
)

# Eigenvalue-pair cut for the SLD solve, relative to the largest eigenvalue.
SLD_EIG_CUT_REL = 1e-12
# Weight of drho outside the kept support that triggers a warning, relative
# to the largest entry of drho.
SUPPORT_LEAK_RTOL = 1e-8
# Variance this small (relative to <m^2>) is treated as an exact eigenstate.
VARIANCE_ZERO_RTOL = 1e-13


@dataclass(frozen=True)
class ParamFamily:
    """Differentiable map x -> (rho(x), drho/dx) on an interval.

    generator / pure_state are set for families of the unitary form
    exp(-i x h)|psi>, enabling exact closed forms for the QFI and the
    calibration sample-size bound.
    """

    dim: int
    state_at: Callable[[float], DensityMatrix]
    derivative_at: Callable[[float], Operator]
    domain: tuple[float, float]
    generator: Operator | None = None
    pure_state: StateVector | None = None

    def contains(self, x: float) -> bool:
        return self.domain[0] <= x <= self.domain[1]

    def check_derivative(self, x: float, delta: float = 1e-5) -> float:
        """Max elementwise gap between the analytic derivative and a central
        finite difference of the states; used by the consistency tests."""
        fd = (self.state_at(x + delta).matrix - self.state_at(x - delta).matrix) / (
            2 * delta
        )
        return float(np.abs(fd - self.derivative_at(x).matrix).max())


@dataclass(frozen=True)
class SensitivityReport:
    """Statistics of one (family, x, observable) triple.

    nsr is the parameter uncertainty propagated from the observable's noise;
    fisher = slope^2 / variance is its square inverse.
    """

    mean: float
    variance: float
    slope: float
    nsr: float
    fisher: float


def _real_trace(a: np.ndarray, b: np.ndarray) -> float:
    """Tr[a b] for a pair of Hermitian matrices, discarding a checked residue."""
    val = complex(np.trace(a @ b))
    if abs(val.imag) > IMAG_RESIDUE_TOL * max(1.0, abs(val.real)):
        raise NumericalConsistencyError(f"trace has imaginary residue {val.imag:.3e}")
    return val.real


def _check_dims(fam: ParamFamily, m: Operator):
    if m.dim != fam.dim:
        raise DimensionMismatchError(f"observable dim {m.dim} != family dim {fam.dim}")


def assess_observable(fam: ParamFamily, x: float, m: Operator) -> SensitivityReport:
    """Mean, variance, slope and noise-to-sensibility ratio of m at rho(x).

    The slope is Tr[drho/dx m], signed; the nsr takes its absolute value.
    A zero slope with finite noise yields nsr = inf and fisher = 0.
    """
    if not fam.contains(x):
        raise ContractViolationError(f"x={x} outside family domain {fam.domain}")
    _check_dims(fam, m)
    rho = fam.state_at(x)
    drho = fam.derivative_at(x)
    mean = expectation(rho, m)
    var = variance(rho, m)
    slope = _real_trace(drho.matrix, m.matrix)
    msq = mean**2 + var
    if var <= VARIANCE_ZERO_RTOL * max(1.0, msq):
        if slope != 0.0 and abs(slope) > VARIANCE_ZERO_RTOL * max(1.0, abs(mean)):
            raise DegenerateObservableError(
                "zero variance with moving mean; eigenstate of m yet <m> depends "
                "on x (truncation artifact or inconsistent family)"
            )
        return SensitivityReport(mean, var, slope, math.inf, 0.0)
    if slope == 0.0:
        return SensitivityReport(mean, var, slope, math.inf, 0.0)
    return SensitivityReport(
        mean, var, slope, math.sqrt(var) / abs(slope), slope**2 / var
    )


def sld(rho: DensityMatrix, drho: Operator, eig_cut: float | None = None) -> Operator:
    """Hermitian L solving (rho L + L rho)/2 = drho on the support of rho.

    In the rho eigenbasis, L_jk = 2 <j|drho|k> / (p_j + p_k) for eigenvalue
    pairs with p_j + p_k above the cut; the rest are set to zero (the
    standard support restriction for near-singular rho). With traceless
    drho this lands in the gauge <L>_rho = 0. eig_cut is an absolute cut on
    p_j + p_k; default 1e-12 times the largest eigenvalue.
    """
    if rho.dim != drho.dim:
        raise DimensionMismatchError(f"rho dim {rho.dim} != drho dim {drho.dim}")
    if not drho.hermitian:
        raise ContractViolationError("drho must be a hermitian Operator")
    scale = np.abs(drho.matrix).max()
    if abs(np.trace(drho.matrix)) > 1e-9 * max(1.0, scale):
        raise ContractViolationError("drho must be traceless")
    evals, vecs = np.linalg.eigh(rho.matrix)
    if eig_cut is None:
        eig_cut = SLD_EIG_CUT_REL * max(evals.max(), 0.0)
    pair_sums = evals[:, None] + evals[None, :]
    kept = pair_sums > eig_cut
    d_eig = vecs.conj().T @ drho.matrix @ vecs
    if not kept.all():
        dropped_weight = np.abs(d_eig[~kept]).max() if (~kept).any() else 0.0
        if scale > 0 and dropped_weight > SUPPORT_LEAK_RTOL * scale:
            warnings.warn(
                "drho has weight outside the regularized support of rho; "
                "formally divergent directions truncated from the SLD",
                SupportTruncationWarning,
                stacklevel=2,
            )
    l_eig = np.zeros_like(d_eig)
    np.divide(2.0 * d_eig, pair_sums, out=l_eig, where=kept)
    l_mat = vecs @ l_eig @ vecs.conj().T
    return Operator((l_mat + l_mat.conj().T) / 2, hermitian=True)


def qfi(fam: ParamFamily, x: float) -> float:
    """Quantum Fisher information <L^2> at rho(x), with L from sld."""
    if not fam.contains(x):
        raise ContractViolationError(f"x={x} outside family domain {fam.domain}")
    rho = fam.state_at(x)
    l_op = sld(rho, fam.derivative_at(x))
    return expectation(rho, Operator(l_op.matrix @ l_op.matrix, hermitian=True))


def optimality_residual(rho: DensityMatrix, drho: Operator, m: Operator) -> float:
    """Frobenius norm of the stationarity defect of m.

    Vanishes exactly on the affine family a(L - b): the anticommutator of rho
    with the centered observable must equal (Var m / slope) drho.
    """
    slope = _real_trace(drho.matrix, m.matrix)
    if slope == 0.0:
        raise UndefinedResidualError(
            "observable has zero slope; stationarity residual undefined"
        )
    mean = expectation(rho, m)
    var = variance(rho, m)
    centered = m.matrix - mean * np.eye(m.dim)
    lhs = (rho.matrix @ centered + centered @ rho.matrix) / 2
    rhs = (var / slope) * drho.matrix
    return float(np.linalg.norm(lhs - rhs))


def pure_unitary_family(h: Operator, psi: StateVector) -> ParamFamily:
    """Family exp(-i x h)|psi><psi|exp(i x h) with exact analytic derivative."""
    if not h.hermitian:
        raise ContractViolationError("generator h must be a hermitian Operator")
    if h.dim != psi.dim:
        raise DimensionMismatchError(f"h dim {h.dim} != state dim {psi.dim}")
    evals, vecs = np.linalg.eigh(h.matrix)
    psi_eig = vecs.conj().T @ psi.amplitudes

    def state_at(x: float) -> DensityMatrix:
        amp = vecs @ (np.exp(-1j * evals * x) * psi_eig)
        rho = np.outer(amp, amp.conj())
        return DensityMatrix(Operator((rho + rho.conj().T) / 2, hermitian=True))

    def derivative_at(x: float) -> Operator:
        rho = state_at(x).matrix
        d = -1j * (h.matrix @ rho - rho @ h.matrix)
        return Operator((d + d.conj().T) / 2, hermitian=True)

    return ParamFamily(
        dim=h.dim,
        state_at=state_at,
        derivative_at=derivative_at,
        domain=(-math.inf, math.inf),
        generator=h,
        pure_state=psi,
    )


def pure_unitary_qfi(h: Operator, psi: StateVector) -> float:
    """Closed form 4 Var(h) on |psi> for pure unitary families."""
    return 4.0 * variance(psi.density_matrix(), h)


def _curvature_once(fam: ParamFamily, x: float, step: float) -> float:
    rho = fam.state_at(x)
    l0 = sld(rho, fam.derivative_at(x))
    lp = sld(fam.state_at(x + step), fam.derivative_at(x + step))
    lm = sld(fam.state_at(x - step), fam.derivative_at(x - step))
    dl = Operator((lp.matrix - lm.matrix) / (2 * step), hermitian=True)
    dl_sq = dl.matrix @ l0.matrix + l0.matrix @ dl.matrix
    mean_dl = expectation(rho, dl)
    mean_dl2 = expectation(rho, Operator(dl.matrix @ dl.matrix, hermitian=True))
    mean_dlsq = _real_trace(rho.matrix, dl_sq)
    mean_lsq = expectation(rho, Operator(l0.matrix @ l0.matrix, hermitian=True))
    if mean_lsq <= 0.0:
        raise NoInformationError("zero <L^2>; curvature undefined")
    return (mean_dl2 - mean_dl**2) - mean_dlsq**2 / (4.0 * mean_lsq)


def default_curvature_step(fam: ParamFamily) -> float:
    lo, hi = fam.domain
    width = hi - lo
    if math.isfinite(width) and width > 0:
        return 1e-4 * width
    return 1e-4


def calibration_curvature(
    fam: ParamFamily, x: float, step: float | None = None
) -> float:
    """Signed curvature G(x) of the Fisher value of a miscalibrated SLD.

    dL/dx comes from central finite differences of the SLD in the fixed
    matrix representation at x +- step; a half-step estimate refines the
    result by Richardson extrapolation when the two differ by more than 1%.
    G is not guaranteed nonnegative; the signed value is returned.
    """
    if step is None:
        step = default_curvature_step(fam)
    if not (fam.contains(x - step) and fam.contains(x + step)):
        raise ContractViolationError(f"x +- step leaves the family domain {fam.domain}")
    g_coarse = _curvature_once(fam, x, step)
    g_fine = _curvature_once(fam, x, step / 2)
    denom = max(abs(g_coarse), abs(g_fine))
    if denom > 0 and abs(g_coarse - g_fine) > 0.01 * denom:
        return (4.0 * g_fine - g_coarse) / 3.0
    return g_fine


def pure_unitary_sample_size_bound(h: Operator, psi: StateVector) -> float:
    """Closed-form calibration bound for exp(-i x h)|psi>:
    [<(Delta h)^4> / <Delta h^2>^2 - 1] / 4. Scale-free in h."""
    rho = psi.density_matrix()
    hc = h.matrix - expectation(rho, h) * np.eye(h.dim)
    hc2 = hc @ hc
    m2 = _real_trace(rho.matrix, hc2)
    if m2 <= 0.0:
        raise NoInformationError("psi is an eigenstate of h; no information")
    m4 = _real_trace(rho.matrix, hc2 @ hc2)
    return (m4 / m2**2 - 1.0) / 4.0


def sample_size_bound(fam: ParamFamily, x: float, step: float | None = None) -> float:
    """G(x) / QFI(x)^2; the sample size must dominate this for the calibrated
    measurement to reach the quantum sensitivity.

    Pure unitary families use the exact moment closed form, which the
    finite-difference route reproduces only to its truncation error.
    """
    if fam.generator is not None and fam.pure_state is not None:
        return pure_unitary_sample_size_bound(fam.generator, fam.pure_state)
    q = qfi(fam, x)
    if q <= 0.0:
        raise NoInformationError("zero QFI; sample-size bound undefined")
    return calibration_curvature(fam, x, step) / q**2
