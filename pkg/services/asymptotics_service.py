"""
Asymptotics Service Module for the discrete turning-point analysis.

Region charts of the three regimes (oscillatory, turning point, tail),
the q-function and its turning point, the Langer transform, Airy-type
approximate solutions and the diagnostics comparing them with computed
recessive solutions: the turning-point error scaling and the
generalized-eigenvector bound r_n.

WHY: The turning-point machinery needs its own charts, quadratures and
special functions; keeping it apart leaves the spectral services free of
asymptotic bookkeeping.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from services.coefficient_service import CoefficientFamily
from services.errors import BracketError, QuadratureError, RegimeError
from services.recurrence_service import (
    REGION_DELTA_POWERS,
    RecurrenceService,
    ThreeTermSolution,
    regime_index,
)
from services.special_functions import airy_pair

TURNING_FALLBACK = 1e-3
SPLINE_NODES = 121
_UNDERFLOW = 1e-290


@dataclass(frozen=True)
class RegionChart:
    """Coupling, scale h = lambda^{1/delta}, boundaries N_0..N_4 and x_1..x_4."""

    lam: float
    h: float
    N0: int
    N1: int
    N2: int
    N3: int
    N4: int
    x1: float
    x2: float
    x3: float
    x4: float
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def ordered(self) -> bool:
        return self.N0 < self.N1 < self.N2 < self.N3 < self.N4

    @property
    def valid(self) -> bool:
        return self.ordered and all(self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda': self.lam, 'h': self.h,
            'N0': self.N0, 'N1': self.N1, 'N2': self.N2, 'N3': self.N3, 'N4': self.N4,
            'x1': self.x1, 'x2': self.x2, 'x3': self.x3, 'x4': self.x4,
            'checks': dict(self.checks),
        }


def qfun(fam: CoefficientFamily, x, h: float):
    """
    q(x, h) = x^beta (1 + c_f h/x) / (2 (x - h/2)^alpha (1 + c_a h/(x - h/2))).

    Args:
        fam: Coefficient family
        x: Scalar or array with x > h/2
        h: Scale parameter (>= 0)
    """
    x = np.asarray(x, dtype=float)
    shifted = x - h / 2.0
    value = x ** fam.beta * (1.0 + fam.c_f * h / x) / (
        2.0 * shifted ** fam.alpha * (1.0 + fam.c_a * h / shifted))
    return float(value) if value.ndim == 0 else value


def qfun_derivative(fam: CoefficientFamily, x: float, h: float) -> float:
    """d q / d x from the quotient rule."""
    s = x - h / 2.0
    top = x ** fam.beta + fam.c_f * h * x ** (fam.beta - 1.0)
    top_d = fam.beta * x ** (fam.beta - 1.0) + fam.c_f * h * (fam.beta - 1.0) * x ** (fam.beta - 2.0)
    bottom = 2.0 * (s ** fam.alpha + fam.c_a * h * s ** (fam.alpha - 1.0))
    bottom_d = 2.0 * (fam.alpha * s ** (fam.alpha - 1.0) + fam.c_a * h * (fam.alpha - 1.0) * s ** (fam.alpha - 2.0))
    return (top_d * bottom - top * bottom_d) / bottom ** 2


def boundary_abscissae(fam: CoefficientFamily) -> List[float]:
    """x_1..x_4 with x_j^delta = 5/8, 7/8, 33/8, 39/8."""
    return [value ** (1.0 / fam.delta) for value in REGION_DELTA_POWERS]


def turning_point(fam: CoefficientFamily, h: float, tol: float = 1e-12) -> float:
    """
    Turning point x_0(h): the root of q(x, h) = 1 in (x_2, x_3).

    Raises:
        BracketError: If q - 1 has no sign change on the bracket
    """
    _, x2, x3, _ = boundary_abscissae(fam)
    if x2 <= h / 2.0:
        raise BracketError(f"h={h:.4g} too large: x_2 <= h/2", {'h': h})
    lo, hi = qfun(fam, x2, h) - 1.0, qfun(fam, x3, h) - 1.0
    if lo * hi > 0:
        raise BracketError(
            f"q(x, {h:.4g}) - 1 has no sign change on ({x2:.4g}, {x3:.4g})",
            {'h': h, 'q_x2': lo + 1.0, 'q_x3': hi + 1.0},
        )
    return brentq(lambda x: qfun(fam, x, h) - 1.0, x2, x3, xtol=tol, rtol=4 * np.finfo(float).eps)


def _left_integrand(fam: CoefficientFamily, x0: float, h: float):
    def integrand(s):
        return 2.0 * s * np.arccos(np.clip(qfun(fam, x0 - s * s, h), -1.0, 1.0))
    return integrand


def _right_integrand(fam: CoefficientFamily, x0: float, h: float):
    def integrand(s):
        return 2.0 * s * np.arccosh(np.maximum(qfun(fam, x0 + s * s, h), 1.0))
    return integrand


def _checked_quad(func, lo: float, hi: float, tol: float) -> float:
    value, error = quad(func, lo, hi, epsabs=tol, epsrel=tol, limit=200)
    if not np.isfinite(value) or error > 1e3 * tol * max(1.0, abs(value)):
        raise QuadratureError(
            f"Langer quadrature on [{lo:.4g}, {hi:.4g}] unreliable: error {error:.2e}",
            {'value': value, 'error': error},
        )
    return value


def langer_xi(fam: CoefficientFamily, x: float, h: float, tol: float = 1e-11,
              x0: Optional[float] = None) -> float:
    """
    Langer transform xi(x, h) by adaptive quadrature.

    The substitution y = x_0 -+ s^2 removes the square-root endpoint
    behaviour at the turning point.

    Raises:
        QuadratureError: If the quadrature does not converge
    """
    x0 = turning_point(fam, h) if x0 is None else x0
    if x == x0:
        return 0.0
    s = math.sqrt(abs(x - x0))
    if x < x0:
        return -(1.5 * _checked_quad(_left_integrand(fam, x0, h), 0.0, s, tol)) ** (2.0 / 3.0)
    return (1.5 * _checked_quad(_right_integrand(fam, x0, h), 0.0, s, tol)) ** (2.0 / 3.0)


@dataclass
class TurningPointChart:
    """
    Langer transform and weight functions tabulated on [x_lo, x_hi].

    ``xi`` interpolates cumulative quadratures on a square-root node grid
    around the turning point x0.
    """

    fam: CoefficientFamily
    h: float
    x0: float
    x_lo: float
    x_hi: float
    slope_x0: float
    left: CubicSpline = field(repr=False)
    right: CubicSpline = field(repr=False)

    def xi(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x_lo - 1e-12) or np.any(x > self.x_hi + 1e-12):
            raise ValueError(f"x outside the chart [{self.x_lo:.4g}, {self.x_hi:.4g}]")
        s = np.sqrt(np.abs(x - self.x0))
        left = -np.cbrt(1.5 * np.maximum(self.left(s), 0.0)) ** 2
        right = np.cbrt(1.5 * np.maximum(self.right(s), 0.0)) ** 2
        return np.where(x < self.x0, left, right)

    def weight_A(self, x) -> np.ndarray:
        """|A(x, h)|, with the limit xi'(x0)^{-1/2} close to the turning point."""
        x = np.asarray(x, dtype=float)
        xi = self.xi(x)
        q = qfun(self.fam, x, self.h)
        near = np.abs(x - self.x0) < TURNING_FALLBACK * self.x0
        with np.errstate(divide='ignore', invalid='ignore'):
            generic = np.abs(xi) ** 0.25 * np.abs(1.0 - q * q) ** -0.25
        return np.where(near, self.slope_x0 ** -0.5, generic)

    def uses_fallback(self, x) -> bool:
        return bool(np.any(np.abs(np.asarray(x) - self.x0) < TURNING_FALLBACK * self.x0))

    def g(self, x) -> np.ndarray:
        """|g(x, h)| = |A(x, h)| a~(x - h/2, h)^{-1/2} with a~(x, h) = x^alpha (1 + c_a h/x)."""
        x = np.asarray(x, dtype=float)
        shifted = x - self.h / 2.0
        a_tilde = shifted ** self.fam.alpha * (1.0 + self.fam.c_a * self.h / shifted)
        return self.weight_A(x) / np.sqrt(a_tilde)


def build_turning_point_chart(fam: CoefficientFamily, h: float, x_lo: float, x_hi: float,
                              tol: float = 1e-11, nodes: int = SPLINE_NODES) -> TurningPointChart:
    """
    Tabulate the Langer transform on [x_lo, x_hi] around x0(h).

    Each side integrates piecewise over a uniform grid in s = sqrt(|x - x0|)
    and interpolates the cumulative integral with a cubic spline.
    """
    x0 = turning_point(fam, h)
    if not x_lo < x0 < x_hi:
        raise RegimeError(f"turning point {x0:.4g} outside chart [{x_lo:.4g}, {x_hi:.4g}]",
                          {'x0': x0, 'h': h})
    tables = []
    for integrand, extent in ((_left_integrand(fam, x0, h), x0 - x_lo),
                              (_right_integrand(fam, x0, h), x_hi - x0)):
        grid = np.linspace(0.0, math.sqrt(extent) * (1.0 + 1e-9), nodes)
        pieces = [_checked_quad(integrand, grid[i], grid[i + 1], tol) for i in range(nodes - 1)]
        tables.append(CubicSpline(grid, np.concatenate([[0.0], np.cumsum(pieces)])))

    slope = (2.0 * qfun_derivative(fam, x0, h)) ** (1.0 / 3.0)
    return TurningPointChart(fam=fam, h=h, x0=x0, x_lo=x_lo, x_hi=x_hi, slope_x0=slope,
                             left=tables[0], right=tables[1])


@dataclass(frozen=True)
class ApproxSolutions:
    """Airy approximations over n in [N_1, N_4]."""

    n: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    psi_r: np.ndarray
    psi_r_signed: np.ndarray
    psi_d: np.ndarray
    w_r: np.ndarray
    fallback_used: bool


@dataclass(frozen=True)
class SolutionProfile:
    """Per-index moduli of the recessive solution, its Airy approximations and r_n."""

    lam: float
    h: float
    u_abs: np.ndarray = field(repr=False)
    psi_r: np.ndarray = field(repr=False)
    w_r: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)

    def csv_rows(self):
        """Rows (n, |u_n|, |psi^r_n|, |w^r_n|, r_n); approximations are blank outside [N_1, N_4]."""
        return [[n, float(u), _cell(psi), _cell(w), float(r)]
                for n, (u, psi, w, r) in enumerate(zip(self.u_abs, self.psi_r, self.w_r, self.r))]


def _cell(value: float) -> Optional[float]:
    return None if math.isnan(value) else float(value)


def bound_ratio(fam: CoefficientFamily, u_abs: np.ndarray) -> np.ndarray:
    """r_n = n^{alpha/2 - 1/6} |u_n| / (|u_0| + |u_1|)."""
    n = np.arange(u_abs.size, dtype=float)
    return n ** (fam.alpha / 2.0 - 1.0 / 6.0) * u_abs / (u_abs[0] + u_abs[1])


def matched_scale(values: np.ndarray, approx: ApproxSolutions, chart: RegionChart) -> Optional[complex]:
    """Factor c with u_{N_3} = c (-1)^{N_3} psi^r_{N_3}; None when either side underflows."""
    k3 = chart.N3 - chart.N1
    signed = approx.psi_r_signed[k3]
    if abs(signed) < _UNDERFLOW or abs(values[chart.N3]) < _UNDERFLOW:
        return None
    return complex(values[chart.N3] / ((-1.0) ** chart.N3 * signed))


def solution_profile(fam: CoefficientFamily, lam: float, h: float, values: np.ndarray,
                     approx: Optional[ApproxSolutions] = None, scale: Optional[complex] = None) -> SolutionProfile:
    """Profile over the solution window with the matched approximations on [N_1, N_4]."""
    u_abs = np.abs(values)
    psi_r = np.full(u_abs.size, np.nan)
    w_r = np.full(u_abs.size, np.nan)
    if approx is not None and scale is not None:
        inside = approx.n < u_abs.size
        psi_r[approx.n[inside]] = abs(scale) * approx.psi_r[inside]
        w_r[approx.n[inside]] = abs(scale) * approx.w_r[inside]
    return SolutionProfile(lam=float(lam), h=h, u_abs=u_abs, psi_r=psi_r, w_r=w_r, r=bound_ratio(fam, u_abs))


@dataclass(frozen=True)
class TurningErrorRow:
    lam: float
    h: float
    x0: float
    sup_error: float
    argmax: int
    match_index: int
    match_residual: float
    points: int
    profile: Optional[SolutionProfile] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class TurningErrorReport:
    rows: List[TurningErrorRow]
    slope: Optional[float]


@dataclass(frozen=True)
class BoundRow:
    """Suprema of r_n for one coupling."""

    lam: float
    h: float
    sup_r: Dict[int, float]
    argmax: int
    argmax_scaled: float
    x0: Optional[float]
    r: np.ndarray = field(repr=False)
    u_abs: np.ndarray = field(repr=False)
    profile: Optional[SolutionProfile] = field(default=None, repr=False, compare=False)


class AsymptoticsService:
    """
    Service class for region charts and turning-point diagnostics.

    Depends on a RecurrenceService for the recessive solutions that the
    Airy approximations are compared with.
    """

    def __init__(self, config: Dict[str, Any], recurrence: RecurrenceService):
        """
        Initialize asymptotics service.

        Args:
            config: Dictionary from Config.get_solver_config()
                   - z_bound: radius of the compact set of spectral parameters
                   - quad_tol: Langer quadrature tolerance
                   - root_tol: turning point tolerance
                   - truncation_max: cap on chart windows
            recurrence: Configured RecurrenceService
        """
        self.config = config
        self.recurrence = recurrence
        self.z_bound = float(config.get('z_bound', 1.0))
        self.quad_tol = float(config.get('quad_tol', 1e-11))
        self.root_tol = float(config.get('root_tol', 1e-12))
        self.truncation_max = int(config.get('truncation_max', 40000))
        self.lambda_start = float(config.get('lambda_start', 1.0))
        self.logger = logging.getLogger(__name__)

    # Region charts

    def _chart(self, fam: CoefficientFamily, lam: float) -> RegionChart:
        h = lam ** (1.0 / fam.delta)
        x1, x2, x3, x4 = boundary_abscissae(fam)
        N1 = regime_index(fam, lam, REGION_DELTA_POWERS[0])
        N2 = regime_index(fam, lam, REGION_DELTA_POWERS[1], upper=True)
        N3 = regime_index(fam, lam, REGION_DELTA_POWERS[2])
        N4 = regime_index(fam, lam, REGION_DELTA_POWERS[3], upper=True)
        top = max(2 * N4 + 2, 64)
        if top > 4 * self.truncation_max:
            raise RegimeError(
                f"Chart window {top} for lambda={lam:.3g} exceeds the truncation cap",
                {'lambda': lam, 'window': top},
            )

        a = fam.a_values(top + 1)
        f = fam.f_values(top + 1)
        n = np.arange(1, top + 1)
        regular = (np.abs(1.0 - a[n - 1] / a[n]) <= 0.125) & (self.z_bound / a[n] <= 0.125)
        failing = np.nonzero(~regular)[0]
        N0 = int(n[failing[-1]] + 1) if failing.size else 1

        g = lam * f / a
        idx = np.arange(top + 1)
        checks = {
            'g_at_least_half_from_N1': bool(np.all(g[idx >= N1] >= 0.5)),
            'g_at_most_one_on_N0_N2': bool(np.all(g[(idx >= N0) & (idx <= N2)] <= 1.0)),
            'g_at_least_four_from_N3': bool(np.all(g[idx >= N3] >= 4.0)),
            'g_at_most_five_on_N0_N4': bool(np.all(g[(idx >= N0) & (idx <= N4)] <= 5.0)),
        }
        return RegionChart(lam=lam, h=h, N0=N0, N1=N1, N2=N2, N3=N3, N4=N4,
                           x1=x1, x2=x2, x3=x3, x4=x4, checks=checks)

    def maximal_admissible_lambda(self, fam: CoefficientFamily, iterations: int = 40) -> float:
        """
        Largest coupling (on a bisected log grid) whose chart is valid.

        Raises:
            RegimeError: If no coupling within the truncation cap is admissible
        """
        hi = self.lambda_start
        if self._chart(fam, hi).valid:
            return hi
        lo = hi
        while True:
            lo /= 10.0
            try:
                if self._chart(fam, lo).valid:
                    break
            except RegimeError:
                raise RegimeError(
                    f"No admissible coupling for {fam.name} within the truncation cap",
                    {'family': fam.name},
                )
            hi = lo
        hi = lo * 10.0
        for _ in range(iterations):
            mid = math.sqrt(lo * hi)
            if self._chart(fam, mid).valid:
                lo = mid
            else:
                hi = mid
        return lo

    def region_chart(self, fam: CoefficientFamily, lam: float) -> RegionChart:
        """
        Region chart at lambda with regularity spot-checks.

        Raises:
            RegimeError: If the regimes overlap, with the maximal admissible lambda
        """
        if not lam > 0:
            raise RegimeError(f"region chart needs lambda > 0, got {lam}", {'lambda': lam})
        chart = self._chart(fam, lam)
        if not chart.valid:
            limit = self.maximal_admissible_lambda(fam)
            raise RegimeError(
                f"lambda={lam:.4g} too large: regimes overlap (maximal admissible lambda ~ {limit:.4g})",
                {'lambda': lam, 'maximal_admissible_lambda': limit, 'chart': chart.to_dict()},
            )
        self.logger.debug(f"Region chart at lambda={lam:.4g}: N0..N4 = "
                          f"{chart.N0}, {chart.N1}, {chart.N2}, {chart.N3}, {chart.N4}")
        return chart

    # Turning point and Airy approximations

    def turning_point(self, fam: CoefficientFamily, h: float) -> float:
        return turning_point(fam, h, self.root_tol)

    def langer_xi(self, fam: CoefficientFamily, x: float, h: float) -> float:
        return langer_xi(fam, x, h, self.quad_tol)

    def turning_point_chart(self, fam: CoefficientFamily, h: float) -> TurningPointChart:
        """Tabulated Langer transform over [x_1, x_4] at scale h."""
        x1, _, _, x4 = boundary_abscissae(fam)
        return build_turning_point_chart(fam, h, x1, x4, self.quad_tol)

    def approx_solutions(self, fam: CoefficientFamily, lam: float, z: complex, chart: RegionChart,
                         tp_chart: Optional[TurningPointChart] = None) -> ApproxSolutions:
        """
        Moduli of psi^r, psi^d and w^r over n in [N_1, N_4].

        The leading-order approximations do not depend on z; z only enters
        through the recessive solutions they are compared with.
        """
        tp_chart = tp_chart or self.turning_point_chart(fam, chart.h)
        n = np.arange(chart.N1, chart.N4 + 1)
        x = np.clip(n * chart.h, tp_chart.x_lo, tp_chart.x_hi)
        xi = tp_chart.xi(x)
        g = tp_chart.g(x)
        ai, bi, _, _ = airy_pair(chart.h ** (-2.0 / 3.0) * xi)
        w = np.where(xi < 0, np.hypot(ai, bi), 2.0 * ai)
        fallback = tp_chart.uses_fallback(x)
        if fallback:
            self.logger.debug(f"Turning point fallback used for |A| at lambda={lam:.4g}")
        return ApproxSolutions(
            n=n, x=n * chart.h, xi=xi,
            psi_r=g * np.abs(ai), psi_r_signed=g * ai,
            psi_d=g * 0.5 * np.hypot(ai, bi), w_r=g * w,
            fallback_used=fallback,
        )

    def turning_point_error(self, fam: CoefficientFamily, lambda_grid: Sequence[float],
                            z: complex) -> TurningErrorReport:
        """
        Sup-error of the Airy approximation to the recessive solution per lambda.

        The approximation is matched to u at n = N_3; the error is measured
        relative to w^r over [N_1, N_4] and its log-log slope against h fitted.

        Raises:
            RegimeError: If the solution or the approximation underflows at N_3
        """
        rows = []
        for lam in lambda_grid:
            chart = self.region_chart(fam, lam)
            approx = self.approx_solutions(fam, lam, z, chart)
            u = self.recurrence.recessive(fam, lam, z, N=chart.N4 + 1).values
            sign = (-1.0) ** approx.n
            window_u = u[approx.n]
            k3 = chart.N3 - chart.N1
            scale = matched_scale(u, approx, chart)
            if scale is None:
                raise RegimeError(
                    f"Values underflow at N_3 for lambda={lam:.3g}; use larger couplings",
                    {'lambda': lam, 'N3': chart.N3},
                )
            live = np.abs(approx.w_r) > _UNDERFLOW
            error = np.abs(window_u - scale * sign * approx.psi_r_signed)[live] / (abs(scale) * approx.w_r[live])
            match = abs(window_u[k3] - scale * sign[k3] * approx.psi_r_signed[k3])
            x0 = self.turning_point(fam, chart.h)
            rows.append(TurningErrorRow(
                lam=float(lam), h=chart.h, x0=x0, sup_error=float(error.max()),
                argmax=int(approx.n[live][np.argmax(error)]), match_index=chart.N3,
                match_residual=float(match), points=int(live.sum()),
                profile=solution_profile(fam, lam, chart.h, u, approx, scale),
            ))
            self.logger.info(f"Turning-point error at h={chart.h:.4g}: {error.max():.3e}")

        slope = None
        if len(rows) >= 2:
            hs = np.log([row.h for row in rows])
            errs = np.log([row.sup_error for row in rows])
            slope = float(np.polyfit(hs, errs, 1)[0])
        return TurningErrorReport(rows=rows, slope=slope)

    # Bound diagnostic and window checks

    def bound_diagnostic(self, fam: CoefficientFamily, z: complex, lambda_grid: Sequence[float],
                         n0_list: Sequence[int]) -> List[BoundRow]:
        """
        sup_{n >= n0} r_n with r_n = n^{alpha/2 - 1/6} |u_n| / (|u_0| + |u_1|).

        Args:
            fam: Coefficient family
            z: Spectral parameter
            lambda_grid: Positive couplings
            n0_list: Lower indices of the suprema

        Returns:
            One BoundRow per coupling
        """
        rows = []
        for lam in lambda_grid:
            u = self.recurrence.recessive(fam, lam, z)
            profile = self._bound_profile(fam, lam, u.values)
            u_abs, r = profile.u_abs, profile.r
            sup_r = {}
            for n0 in n0_list:
                if n0 >= r.size:
                    raise RegimeError(f"n0={n0} beyond the solution window {r.size}", {'n0': n0})
                sup_r[int(n0)] = float(r[n0:].max())
            start = max(1, min(n0_list))
            argmax = int(start + np.argmax(r[start:]))
            h = lam ** (1.0 / fam.delta)
            try:
                x0 = self.turning_point(fam, h)
            except BracketError:
                x0 = None
            rows.append(BoundRow(lam=float(lam), h=h, sup_r=sup_r, argmax=argmax,
                                 argmax_scaled=float((argmax * h) ** fam.delta), x0=x0,
                                 r=r, u_abs=u_abs, profile=profile))
        self.logger.info(f"Bound diagnostic over {len(rows)} couplings for n0 in {list(n0_list)}")
        return rows

    def _bound_profile(self, fam: CoefficientFamily, lam: float, values: np.ndarray) -> SolutionProfile:
        """Profile of u with the Airy columns filled only where the region chart is admissible."""
        h = lam ** (1.0 / fam.delta)
        try:
            chart = self._chart(fam, lam)
            if not chart.valid or chart.N4 >= values.size:
                return solution_profile(fam, lam, h, values)
            approx = self.approx_solutions(fam, lam, 0j, chart)
        except (RegimeError, BracketError, QuadratureError) as e:
            self.logger.debug(f"No Airy columns for the profile at lambda={lam:.4g}: {e}")
            return solution_profile(fam, lam, h, values)
        return solution_profile(fam, lam, h, values, approx, matched_scale(values, approx, chart))

    def turan_window_check(self, fam: CoefficientFamily, chart: RegionChart, u) -> float:
        """max over N_0 <= n <= N_2 of a_n(|u_n|^2 + |u_{n-1}|^2) / (|u_{N0}|^2 + |u_{N0-1}|^2)."""
        values = u.values if isinstance(u, ThreeTermSolution) else np.asarray(u)
        n = np.arange(max(chart.N0, 1), chart.N2 + 1)
        a = fam.a_values(chart.N2 + 1)
        energy = np.abs(values[n]) ** 2 + np.abs(values[n - 1]) ** 2
        reference = abs(values[n[0]]) ** 2 + abs(values[n[0] - 1]) ** 2
        return float(np.max(a[n] * energy) / reference)

    def riccati_tail_check(self, fam: CoefficientFamily, chart: RegionChart, solution: ThreeTermSolution) -> float:
        """max over n >= max(N_0, N_3) of |-(u_n/u_{n-1}) lambda f_n / a_{n-1} - 1|."""
        values = solution.values
        top = values.size - 1
        n = np.arange(max(chart.N0, chart.N3, 1), top + 1)
        live = (np.abs(values[n]) > 0) & (np.abs(values[n - 1]) > 0)
        n = n[live]
        a = fam.a_values(top + 1)
        f = fam.f_values(top + 1)
        ratio = values[n] / values[n - 1]
        return float(np.max(np.abs(-ratio * solution.lam * f[n] / a[n - 1] - 1.0))) if n.size else 0.0
