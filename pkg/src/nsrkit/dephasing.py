"""Phase-shift estimation under Gaussian phase diffusion.

The channel multiplies Fock coherences by e^{-i phi (n-m)} e^{-beta^2 (n-m)^2}
(the closed form of the zero-mean Gaussian phase average with variance
2 beta^2). Probes are real displaced-squeezed states, the measured observable
is a quadrature, and the whole sensitivity analysis has closed forms that the
numeric pipeline must reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, InvalidDimensionError, NumericalConsistencyError
from .estimation import ParamFamily
from .operators import (
    DensityMatrix,
    GaussianProbeSpec,
    Operator,
    StateVector,
    fock_ladder,
    gaussian_probe,
)

TWO_PI = 2.0 * math.pi

# Default Fig.-2 style grids: log-spaced, dense near small 2 beta^2 where the
# enhancement threshold sits.
DEFAULT_TWO_BETA_SQ_GRID = np.geomspace(0.01, 1.0, 60)
DEFAULT_N_GRID = np.geomspace(0.05, 1e4, 200)


@dataclass(frozen=True)
class DiffusionParams:
    """Degree beta >= 0 of the Gaussian phase diffusion."""

    beta: float

    def __post_init__(self):
        if self.beta < 0 or not math.isfinite(self.beta):
            raise ContractViolationError(f"beta must be finite and >= 0, got {self.beta}")

    @property
    def two_beta_sq(self) -> float:
        return 2.0 * self.beta**2

    @classmethod
    def from_two_beta_sq(cls, two_beta_sq: float) -> "DiffusionParams":
        if two_beta_sq < 0:
            raise ContractViolationError("2 beta^2 must be >= 0")
        return cls(math.sqrt(two_beta_sq / 2.0))


@dataclass(frozen=True)
class PhaseFamilySpec:
    """Probe + diffusion + phase interval defining one estimation problem."""

    probe: GaussianProbeSpec | StateVector
    diffusion: DiffusionParams
    phi_domain: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.phi_domain
        if not (hi > lo):
            raise ContractViolationError("phi_domain must be a nonempty interval")
        if hi - lo > TWO_PI + 1e-12:
            raise ContractViolationError("phi_domain wider than one phase period")

    @property
    def dim(self) -> int:
        return self.probe.dim

    def probe_state(self) -> StateVector:
        if isinstance(self.probe, StateVector):
            return self.probe
        return gaussian_probe(self.probe)


def _delta_n(dim: int) -> np.ndarray:
    n = np.arange(dim)
    return n[:, None] - n[None, :]


def dephase_channel(rho: DensityMatrix, phi: float, beta: float) -> DensityMatrix:
    """Apply the phase shift phi with Gaussian phase diffusion beta.

    Diagonal populations are untouched; the (n, m) coherence picks up
    e^{-i phi (n-m)} e^{-beta^2 (n-m)^2}.
    """
    if beta < 0:
        raise ContractViolationError(f"beta must be >= 0, got {beta}")
    dn = _delta_n(rho.dim)
    kernel = np.exp(-1j * phi * dn - beta**2 * dn.astype(float) ** 2)
    return DensityMatrix(Operator(rho.matrix * kernel, hermitian=True))


def dephasing_family(spec: PhaseFamilySpec) -> ParamFamily:
    """Family phi -> dephased probe, with the exact coherence-weighted derivative."""
    psi = spec.probe_state()
    rho0 = psi.density_matrix()
    beta = spec.diffusion.beta
    dn = _delta_n(psi.dim)
    decay = np.exp(-(beta**2) * dn.astype(float) ** 2)
    base = rho0.matrix * decay

    def state_at(phi: float) -> DensityMatrix:
        return DensityMatrix(Operator(base * np.exp(-1j * phi * dn), hermitian=True))

    def derivative_at(phi: float) -> Operator:
        d = -1j * dn * (base * np.exp(-1j * phi * dn))
        return Operator((d + d.conj().T) / 2, hermitian=True)

    return ParamFamily(
        dim=psi.dim,
        state_at=state_at,
        derivative_at=derivative_at,
        domain=spec.phi_domain,
    )


def quadrature(phi_exp: float, dim: int) -> Operator:
    """Observable a e^{i phi_exp} + a^dag e^{-i phi_exp} (vacuum variance 1)."""
    if dim < 2:
        raise InvalidDimensionError(f"quadrature needs dim >= 2, got {dim}")
    a, adag = fock_ladder(dim)
    m = a.matrix * np.exp(1j * phi_exp) + adag.matrix * np.exp(-1j * phi_exp)
    return Operator(m, hermitian=True)


def optimal_calibration(phi_true: float) -> float:
    """Best quadrature angle phi_true - pi/2, wrapped into (-pi, pi]."""
    x = phi_true - math.pi / 2.0
    wrapped = math.fmod(x + math.pi, TWO_PI)
    if wrapped <= 0.0:
        wrapped += TWO_PI
    return wrapped - math.pi


def analytic_fnsr(r: float, alpha: float, beta: float) -> float:
    """Fisher value of the optimally calibrated quadrature on the probe
    D(alpha)S(r)|0> after diffusion beta:

        4 alpha^2 e^{-2 beta^2}
        -----------------------------------------------
        e^{-2r} + (1 - e^{-4 beta^2})(2 alpha^2 + sinh 2r)

    Guarded against overflow for |r| beyond ~300.
    """
    num = 4.0 * alpha**2 * math.exp(-2.0 * beta**2)
    if num == 0.0:
        return 0.0
    diffusion_noise = -math.expm1(-4.0 * beta**2)  # 1 - e^{-4 beta^2}, exact near 0
    try:
        quantum_noise = math.exp(-2.0 * r)
    except OverflowError:
        return 0.0  # r << 0: anti-squeezed measured quadrature swamps the signal
    if diffusion_noise == 0.0:
        denom = quantum_noise
    else:
        try:
            sinh2r = math.sinh(2.0 * r)
        except OverflowError:
            sinh2r = math.inf if r > 0 else -math.inf
        denom = quantum_noise + diffusion_noise * (2.0 * alpha**2 + sinh2r)
    if denom == 0.0:
        return math.inf
    if math.isinf(denom):
        return 0.0 if denom > 0 else math.inf
    if denom < 0:
        raise NumericalConsistencyError(f"negative noise denominator {denom}")
    return num / denom


def r_max(beta: float) -> float:
    """Squeezing beyond (1/4) ln coth(2 beta^2) starts hurting the sensitivity.

    beta = 0 returns +inf: without diffusion more squeezing always helps.
    """
    if beta < 0:
        raise ContractViolationError(f"beta must be >= 0, got {beta}")
    if beta == 0.0:
        return math.inf
    x = 2.0 * beta**2
    coth = math.cosh(x) / math.sinh(x)
    return 0.25 * math.log(coth)


def r_opt(n_mean: float, beta: float) -> float:
    """Squeezing that maximizes the quadrature Fisher value at fixed mean
    excitation N = alpha^2 + sinh^2 r."""
    if n_mean < 0:
        raise ContractViolationError(f"N must be >= 0, got {n_mean}")
    if beta < 0:
        raise ContractViolationError(f"beta must be >= 0, got {beta}")
    tb = 2.0 * beta**2
    script_n = (2.0 * n_mean + 1.0) * math.exp(tb)
    root = math.sqrt(1.0 + 2.0 * script_n**2 * math.sinh(2.0 * tb))
    r = 0.5 * math.log(2.0 * script_n * math.cosh(tb) / (1.0 + root))
    if math.sinh(r) ** 2 > n_mean + 1e-12 * max(1.0, n_mean):
        raise NumericalConsistencyError(
            f"r_opt={r} puts sinh^2 r above N={n_mean}; no excitation left for alpha"
        )
    return r


def c_q(n_mean: float, beta: float) -> float:
    """Standard-limit benchmark 4N / (1 + 8 beta^2 N)."""
    if n_mean < 0:
        raise ContractViolationError(f"N must be >= 0, got {n_mean}")
    return 4.0 * n_mean / (1.0 + 8.0 * beta**2 * n_mean)


def optimal_fnsr(n_mean: float, beta: float) -> float:
    """Quadrature Fisher value at the optimum squeezing for mean excitation N."""
    r = r_opt(n_mean, beta)
    alpha_sq = max(n_mean - math.sinh(r) ** 2, 0.0)
    return analytic_fnsr(r, math.sqrt(alpha_sq), beta)


def no_squeeze_ratio_bound(n_mean: float, beta: float) -> float:
    """Lower bound (1 + 8 beta^2 N) / (e^{2 beta^2} + 4 sinh(2 beta^2) N) on the
    fraction of the standard-limit information that a coherent probe retains."""
    if n_mean < 0:
        raise ContractViolationError(f"N must be >= 0, got {n_mean}")
    tb = 2.0 * beta**2
    return (1.0 + 8.0 * beta**2 * n_mean) / (math.exp(tb) + 4.0 * math.sinh(tb) * n_mean)


@dataclass(frozen=True)
class EnhancementScan:
    """Grid scan of the squeezing enhancement over the standard benchmark.

    cells: rows (two_beta_sq, N, ratio, enhanced) spanning the full grid.
    max_rows: rows (two_beta_sq, max_ratio, argmax_N), the per-column maximum
    over N of the ratio.
    """

    cells: list[tuple[float, float, float, bool]]
    max_rows: list[tuple[float, float, float]]


def enhancement_scan(two_beta_sq_grid, n_grid) -> EnhancementScan:
    """Tabulate optimal_fnsr / c_q over (2 beta^2, N); cells are independent,
    so the table is identical regardless of evaluation order."""
    tbs_values = [float(t) for t in two_beta_sq_grid]
    n_values = [float(n) for n in n_grid]
    if any(t < 0 or not math.isfinite(t) for t in tbs_values):
        raise ContractViolationError("two_beta_sq grid must be finite and >= 0")
    if any(n <= 0 or not math.isfinite(n) for n in n_values):
        raise ContractViolationError("N grid must be finite and positive")
    cells = []
    max_rows = []
    for tbs in tbs_values:
        beta = math.sqrt(tbs / 2.0)
        best = (-math.inf, math.nan)
        for n in n_values:
            ratio = optimal_fnsr(n, beta) / c_q(n, beta)
            cells.append((tbs, n, ratio, ratio >= 1.0))
            if ratio > best[0]:
                best = (ratio, n)
        max_rows.append((tbs, best[0], best[1]))
    return EnhancementScan(cells=cells, max_rows=max_rows)


def _golden_max(fun, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section maximizer of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (a + b) / 2.0


def max_enhancement_ratio(beta: float, n_grid=None) -> tuple[float, float]:
    """Max over N of optimal_fnsr/c_q at fixed beta, refined by golden-section
    search in log N around the best grid point. Returns (max_ratio, argmax_N)."""
    if n_grid is None:
        n_grid = DEFAULT_N_GRID
    n_values = np.asarray(n_grid, dtype=float)

    def ratio_log(u: float) -> float:
        n = math.exp(u)
        return optimal_fnsr(n, beta) / c_q(n, beta)

    ratios = [optimal_fnsr(float(n), beta) / c_q(float(n), beta) for n in n_values]
    k = int(np.argmax(ratios))
    lo = math.log(n_values[max(k - 1, 0)])
    hi = math.log(n_values[min(k + 1, len(n_values) - 1)])
    if lo == hi:
        return ratios[k], float(n_values[k])
    u_star = _golden_max(ratio_log, lo, hi)
    return ratio_log(u_star), math.exp(u_star)


def enhancement_threshold(
    lo: float = 0.01, hi: float = 1.0, tol: float = 1e-4
) -> float:
    """2 beta^2 at which the best squeezing enhancement crosses the standard
    benchmark (max ratio = 1), located by bisection."""

    def excess(tbs: float) -> float:
        beta = math.sqrt(tbs / 2.0)
        return max_enhancement_ratio(beta)[0] - 1.0

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo <= 0 or f_hi >= 0:
        raise NumericalConsistencyError(
            f"no sign change on [{lo}, {hi}]: excess {f_lo:.3e} .. {f_hi:.3e}"
        )
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0
