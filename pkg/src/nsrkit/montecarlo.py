"""Monte Carlo verification of mean-inversion estimation.

Outcomes are Born-rule draws from the observable's eigenbasis; the estimator
inverts the tabulated calibration curve <M>_x at the observed sample mean.
Across repeats, nu * Var(x_hat) must approach the squared noise-to-sensibility
ratio, and an adaptive loop re-centers the quadrature angle each round.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .dephasing import dephasing_family, optimal_calibration, quadrature
from .errors import (
    CalibrationRangeWarning,
    ContractViolationError,
    EstimatorDivergenceError,
    NonInvertibleCurveError,
    NumericalConsistencyError,
)
from .estimation import ParamFamily, SensitivityReport, assess_observable
from .operators import expectation

log = logging.getLogger(__name__)

PROB_NEG_TOL = 1e-12
PROB_SUM_TOL = 1e-10
MIN_WINDOW_POINTS = 5


@dataclass(frozen=True)
class MeasurementModel:
    """Eigendecomposition of an observable, exposing Born-rule probabilities."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_observable(cls, m) -> "MeasurementModel":
        if not m.hermitian:
            raise ContractViolationError("measurement model needs a hermitian Operator")
        evals, vecs = np.linalg.eigh(m.matrix)
        evals.setflags(write=False)
        vecs.setflags(write=False)
        return cls(eigenvalues=evals, eigenvectors=vecs)

    def probabilities(self, rho) -> np.ndarray:
        """p_k = <e_k|rho|e_k>, clamped at -1e-12 and renormalized to 1e-10."""
        p = np.real(np.einsum("ij,jk,ki->i", self.eigenvectors.conj().T, rho.matrix,
                              self.eigenvectors))
        if p.min() < -PROB_NEG_TOL:
            raise NumericalConsistencyError(
                f"negative Born probability {p.min():.3e} beyond tolerance"
            )
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise NumericalConsistencyError(
                f"Born probabilities sum to {total}, not 1"
            )
        return p / total


def sample_outcomes(rho, m, nu: int, seed) -> np.ndarray:
    """nu i.i.d. eigenvalue draws of m on rho; deterministic for a fixed seed."""
    if nu < 1:
        raise ContractViolationError(f"sample count must be positive, got {nu}")
    model = MeasurementModel.from_observable(m)
    probs = model.probabilities(rho)
    rng = np.random.default_rng(seed)
    return rng.choice(model.eigenvalues, size=nu, p=probs)


@dataclass(frozen=True)
class CalibrationCurve:
    """Tabulated <m>_x with the largest monotone window around the grid middle.

    window is a half-open index range (start, stop) into xs/means on which the
    means are strictly monotone.
    """

    xs: np.ndarray
    means: np.ndarray
    window: tuple[int, int]

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        means = np.asarray(self.means, dtype=float)
        if xs.ndim != 1 or xs.shape != means.shape:
            raise ContractViolationError("xs and means must be equal-length vectors")
        if not np.all(np.diff(xs) > 0):
            raise ContractViolationError("xs must be strictly increasing")
        lo, hi = self.window
        if not (0 <= lo < hi <= xs.size) or hi - lo < MIN_WINDOW_POINTS:
            raise ContractViolationError(f"window {self.window} too small")
        d = np.diff(means[lo:hi])
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ContractViolationError("means are not strictly monotone on window")
        xs.setflags(write=False)
        means.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "means", means)

    @property
    def window_xs(self) -> np.ndarray:
        return self.xs[self.window[0] : self.window[1]]

    @property
    def window_means(self) -> np.ndarray:
        return self.means[self.window[0] : self.window[1]]


def _monotone_window(means: np.ndarray, mid: int) -> tuple[int, int]:
    """Largest run of strictly monotone means whose index range covers mid."""
    d = np.diff(means)
    signs = np.sign(d)
    best = (mid, mid + 1)
    start = 0
    for k in range(1, len(d) + 1):
        if k == len(d) or signs[k] != signs[start] or signs[k] == 0:
            if signs[start] != 0:
                lo, hi = start, k + 1  # run of equal nonzero sign -> points [start, k]
                if lo <= mid <= hi - 1 and hi - lo > best[1] - best[0]:
                    best = (lo, hi)
            start = k
    return best


def build_curve(fam: ParamFamily, m, grid) -> CalibrationCurve:
    """Tabulate <m>_x on the grid and locate the monotone inversion window."""
    xs = np.asarray(grid, dtype=float)
    if xs.ndim != 1 or xs.size < MIN_WINDOW_POINTS:
        raise ContractViolationError(f"grid needs at least {MIN_WINDOW_POINTS} points")
    if not (fam.contains(xs[0]) and fam.contains(xs[-1])):
        raise ContractViolationError(f"grid leaves the family domain {fam.domain}")
    means = np.array([expectation(fam.state_at(float(x)), m) for x in xs])
    lo, hi = _monotone_window(means, xs.size // 2)
    if hi - lo < MIN_WINDOW_POINTS:
        raise NonInvertibleCurveError(
            "no strictly monotone window of >= 5 points around the grid midpoint; "
            "<m>_x is not invertible there"
        )
    return CalibrationCurve(xs=xs, means=means, window=(lo, hi))


def _invert(curve: CalibrationCurve, observed_mean: float) -> tuple[float, bool]:
    xs = curve.window_xs
    ys = curve.window_means
    increasing = ys[-1] > ys[0]
    y_lo, y_hi = (ys[0], ys[-1]) if increasing else (ys[-1], ys[0])
    if observed_mean < y_lo or observed_mean > y_hi:
        clamped_x = (
            xs[0]
            if (observed_mean < y_lo) == increasing
            else xs[-1]
        )
        return float(clamped_x), True
    interp = PchipInterpolator(xs, ys)
    # Exact hits on the tabulated nodes must invert to their grid point.
    exact = np.nonzero(ys == observed_mean)[0]
    if exact.size:
        return float(xs[exact[0]]), False
    root = brentq(lambda x: interp(x) - observed_mean, xs[0], xs[-1], xtol=1e-14)
    return float(root), False


def invert_mean(curve: CalibrationCurve, observed_mean: float) -> float:
    """Estimate x from an observed sample mean by monotone cubic interpolation
    of the calibration curve plus root finding.

    Means outside the window range clamp to the window edge (with a
    CalibrationRangeWarning) rather than failing, so variance statistics over
    many noisy repeats stay well defined.
    """
    estimate, clamped = _invert(curve, observed_mean)
    if clamped:
        warnings.warn(
            f"observed mean {observed_mean:.6g} outside the curve range; "
            f"estimate clamped to window edge {estimate:.6g}",
            CalibrationRangeWarning,
            stacklevel=2,
        )
    return estimate


@dataclass(frozen=True)
class TrialReport:
    """One mean-inversion repeat plus the shared across-repeat statistics.

    empirical_variance is the sample variance of the estimates across all
    repeats of the run (identical in every report of the run);
    predicted_variance is nsr^2 / nu from the sensitivity report.
    """

    nu: int
    estimate: float
    empirical_variance: float
    predicted_variance: float
    seed: int
    repeat: int
    clamped: bool


def mean_inversion_condition(report: SensitivityReport, nu: int) -> tuple[float, float, bool]:
    """Small-noise validity check of the inversion estimator.

    For the cosine quadrature mean the second derivative is -mean, so the
    condition is delta_M = sqrt(Var/nu) << 2 slope^2 / |mean|. Returns
    (delta_m, threshold, satisfied) with satisfied = delta_m <= threshold/10.
    """
    delta_m = math.sqrt(report.variance / nu)
    if report.mean == 0.0:
        return delta_m, math.inf, True
    threshold = 2.0 * report.slope**2 / abs(report.mean)
    return delta_m, threshold, delta_m <= threshold / 10.0


def _curve_grid(phi_exp: float, domain: tuple[float, float], points: int) -> np.ndarray:
    lo = max(phi_exp, domain[0])
    hi = min(phi_exp + math.pi, domain[1])
    if hi <= lo:
        raise EstimatorDivergenceError(
            f"monotone window ({phi_exp:.4g}, {phi_exp + math.pi:.4g}) has no "
            f"overlap with the domain {domain}"
        )
    return np.linspace(lo, hi, points)


def run_trials(
    spec,
    phi_true: float,
    nu: int,
    repeats: int,
    seed: int,
    grid_points: int = 2001,
) -> list[TrialReport]:
    """Repeat the full protocol: draw nu outcomes at rho(phi_true), average,
    invert the calibration curve; report the spread of the estimates.

    Per-repeat RNG streams derive from (seed, repeat index), so repeats are
    order-independent and the whole run is reproducible bit for bit.
    """
    if repeats < 2:
        raise ContractViolationError("need at least 2 repeats for a variance")
    fam = dephasing_family(spec)
    if not fam.contains(phi_true):
        raise ContractViolationError(f"phi_true {phi_true} outside {fam.domain}")
    phi_exp = optimal_calibration(phi_true)
    m = quadrature(phi_exp, fam.dim)
    report = assess_observable(fam, phi_true, m)
    delta_m, threshold, ok = mean_inversion_condition(report, nu)
    if not ok:
        log.warning(
            "small-noise condition marginal: delta_M=%.3g vs threshold %.3g",
            delta_m, threshold,
        )
    predicted = report.nsr**2 / nu
    curve = build_curve(fam, m, _curve_grid(phi_exp, fam.domain, grid_points))
    rho_true = fam.state_at(phi_true)
    model = MeasurementModel.from_observable(m)
    probs = model.probabilities(rho_true)
    estimates = np.empty(repeats)
    clamped_flags = []
    for k in range(repeats):
        rng = np.random.default_rng([seed, k])
        outcomes = rng.choice(model.eigenvalues, size=nu, p=probs)
        est, clamped = _invert(curve, float(outcomes.mean()))
        estimates[k] = est
        clamped_flags.append(clamped)
    empirical = float(np.var(estimates, ddof=1))
    return [
        TrialReport(
            nu=nu,
            estimate=float(estimates[k]),
            empirical_variance=empirical,
            predicted_variance=predicted,
            seed=seed,
            repeat=k,
            clamped=clamped_flags[k],
        )
        for k in range(repeats)
    ]


def adaptive_calibrate(
    spec,
    phi_true_hidden: float,
    batch: int,
    rounds: int,
    seed: int,
    grid_points: int = 1001,
) -> list[float]:
    """Adaptive loop: measure a batch at the current quadrature angle, invert
    for phi_hat, re-center the angle to phi_hat - pi/2, repeat.

    Starts at the domain midpoint minus pi/2. Raises EstimatorDivergenceError
    (carrying the round index) if the inversion window leaves the domain.
    """
    fam = dephasing_family(spec)
    domain = fam.domain
    if not fam.contains(phi_true_hidden):
        raise ContractViolationError(f"phi_true {phi_true_hidden} outside {domain}")
    phi_exp = (domain[0] + domain[1]) / 2.0 - math.pi / 2.0
    estimates: list[float] = []
    for k in range(rounds):
        try:
            grid = _curve_grid(phi_exp, domain, grid_points)
            m = quadrature(phi_exp, fam.dim)
            curve = build_curve(fam, m, grid)
        except (EstimatorDivergenceError, NonInvertibleCurveError) as exc:
            raise EstimatorDivergenceError(
                f"calibration window unusable at round {k}: {exc}", round_index=k
            ) from exc
        outcomes = sample_outcomes(fam.state_at(phi_true_hidden), m, batch, [seed, k])
        est = invert_mean(curve, float(outcomes.mean()))  # warns when clamped
        if not fam.contains(est):
            raise EstimatorDivergenceError(
                f"estimate {est:.4g} left the domain {domain} at round {k}",
                round_index=k,
            )
        estimates.append(est)
        phi_exp = est - math.pi / 2.0
    return estimates
