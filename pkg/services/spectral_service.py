"""
Spectral Service Module for Jacobi operators and their extensions.

Eigenvalues of truncations of J(lambda), eigenvalue curves, the Weyl
m-function and Green function of J(lambda), the Nevanlinna quadruple of
J(0) and the self-adjoint extensions J_t it parametrizes.

WHY: Spectral questions about J(lambda) and J_t share the same truncation
and tail-control policy, so they are answered by one configured service.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from services.coefficient_service import CoefficientFamily
from services.errors import ConvergenceError, DegenerateCircleError, HypothesisError
from services.recurrence_service import (
    REGION_DELTA_POWERS,
    orthogonal_polynomials,
    regime_index,
    resolvent_column,
)

MOBIUS_POLE = complex(math.inf, 0.0)
# bisection width for stebz; the default eps*|J|_1 grows like N^beta
BISECTION_ABSTOL = math.sqrt(np.finfo(float).tiny)
CIRCLE_REL_TOL = 1e-6
RESOLVENT_CHECK_TOL = 1e-8


def has_settled(change: float, last_change: Optional[float], tol: float, scale: float = 1.0) -> bool:
    """
    Stopping test for truncation doubling.

    Settled when the change is below tol, or when it has stopped shrinking
    while already below sqrt(tol) (the rounding floor of the solver was reached).
    """
    if change <= tol * scale:
        return True
    return last_change is not None and last_change <= change <= math.sqrt(tol) * scale


@dataclass(frozen=True)
class ExtensionParam:
    """
    Extension parameter t on the projectively extended real line.

    ``value`` is None for the point at infinity. Internally t is the pair
    (tau0 : tau1) with t = tau1 / tau0.
    """

    value: Optional[float] = None

    @classmethod
    def infinity(cls) -> 'ExtensionParam':
        return cls(None)

    @classmethod
    def parse(cls, text: Union[str, float, 'ExtensionParam']) -> 'ExtensionParam':
        """Parse 'inf', '∞' or a real number."""
        if isinstance(text, ExtensionParam):
            return text
        if isinstance(text, (int, float)):
            return cls.infinity() if math.isinf(text) else cls(float(text))
        cleaned = str(text).strip().lower()
        if cleaned in ('inf', '+inf', '-inf', 'infinity', '∞'):
            return cls.infinity()
        value = float(cleaned)
        if math.isnan(value):
            raise ValueError("extension parameter cannot be NaN")
        return cls.infinity() if math.isinf(value) else cls(value)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    @property
    def pair(self) -> Tuple[float, float]:
        return (0.0, 1.0) if self.value is None else (1.0, self.value)

    def __str__(self) -> str:
        return 'inf' if self.value is None else repr(self.value)


@dataclass(frozen=True)
class NevanlinnaQuad:
    """A(z,0), B(z,0), C(z,0), D(z,0) with truncation metadata."""

    z: complex
    A: complex
    B: complex
    C: complex
    D: complex
    truncation: int
    tail_estimate: float

    def determinant(self) -> complex:
        return self.A * self.D - self.B * self.C


@dataclass(frozen=True)
class MSample:
    """One value of an m-function: M(z, lambda) or m(z, t)."""

    z: complex
    lam: Union[float, ExtensionParam]
    m: complex
    truncation: int = 0
    resolvent_gap: float = 0.0

    @property
    def consistent(self) -> bool:
        """Continued fraction and resolvent agree to RESOLVENT_CHECK_TOL."""
        return self.resolvent_gap <= RESOLVENT_CHECK_TOL * max(1.0, abs(self.m))


@dataclass(frozen=True)
class EigenSample:
    """Stabilized j-th eigenvalue at one coupling."""

    lam: float
    j: int
    energy: float
    truncation: int
    slope: Optional[float] = None


@dataclass(frozen=True)
class LimitCircle:
    """Circle of m(z, t) values over t in the extended reals."""

    z: complex
    center: complex
    radius: float
    t_values: Tuple[ExtensionParam, ...] = field(repr=False)
    samples: np.ndarray = field(repr=False)
    max_deviation: float = 0.0

    @property
    def consistent(self) -> bool:
        """All samples lie on the fitted circle to CIRCLE_REL_TOL."""
        return self.max_deviation <= CIRCLE_REL_TOL * self.radius

    def distance(self, m: complex) -> float:
        return abs(abs(m - self.center) - self.radius)


def _tridiagonal(fam: CoefficientFamily, lam: float, N: int) -> Tuple[np.ndarray, np.ndarray]:
    return lam * fam.f_values(N), fam.a_values(max(N - 1, 0)).copy()


def sturm_count(diagonal: Sequence[float], offdiagonal: Sequence[float], x) -> np.ndarray:
    """
    Number of eigenvalues strictly below x (LDL^T sign count).

    Args:
        diagonal: Diagonal entries d_0..d_{N-1}
        offdiagonal: Off-diagonal entries e_0..e_{N-2}
        x: Scalar or array of shifts

    Returns:
        Integer count(s) with the shape of x
    """
    d = np.asarray(diagonal, dtype=float)
    e2 = np.asarray(offdiagonal, dtype=float) ** 2
    shifts = np.asarray(x, dtype=float)
    tiny = np.finfo(float).tiny
    pivot = d[0] - shifts
    count = (pivot < 0).astype(int)
    for i in range(1, d.size):
        pivot = np.where(pivot == 0.0, -tiny, pivot)
        pivot = d[i] - shifts - e2[i - 1] / pivot
        count = count + (pivot < 0)
    return count


def truncated_eigenvalues(fam: CoefficientFamily, lam: float, N: int,
                          window: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """
    Eigenvalues of the N x N truncation of J(lambda) by Sturm bisection.

    Args:
        fam: Coefficient family
        lam: Coupling lambda
        N: Truncation size (>= 1)
        window: Optional interval (lo, hi]

    Returns:
        Sorted eigenvalues
    """
    if N < 1:
        raise ValueError(f"truncation must be >= 1, got {N}")
    d, e = _tridiagonal(fam, lam, N)
    if N == 1:
        values = d.copy()
        if window is not None:
            values = values[(values > window[0]) & (values <= window[1])]
        return values
    if window is None:
        return eigvalsh_tridiagonal(d, e, lapack_driver='stebz', tol=BISECTION_ABSTOL)
    return eigvalsh_tridiagonal(d, e, select='v', select_range=window, lapack_driver='stebz',
                                tol=BISECTION_ABSTOL)


def truncated_eigenvalue(fam: CoefficientFamily, lam: float, j: int, N: int) -> float:
    """j-th lowest eigenvalue of the N-truncation."""
    if not 0 <= j < N:
        raise ValueError(f"index j={j} outside truncation of size {N}")
    d, e = _tridiagonal(fam, lam, N)
    if N == 1:
        return float(d[0])
    return float(eigvalsh_tridiagonal(d, e, select='i', select_range=(j, j), lapack_driver='stebz',
                                      tol=BISECTION_ABSTOL)[0])


def truncated_eigenvector(fam: CoefficientFamily, lam: float, j: int, N: int) -> np.ndarray:
    """Normalized j-th eigenvector of the N-truncation (inverse iteration)."""
    d, e = _tridiagonal(fam, lam, N)
    if N == 1:
        return np.ones(1)
    _, vectors = eigh_tridiagonal(d, e, select='i', select_range=(j, j), lapack_driver='stebz',
                                  tol=BISECTION_ABSTOL)
    vector = vectors[:, 0]
    # sign fixed by the first non-negligible component
    pivot = vector[np.argmax(np.abs(vector) > 1e-12 * np.abs(vector).max())]
    return vector if pivot > 0 else -vector


def hellmann_feynman_slope(fam: CoefficientFamily, lam: float, j: int, N: int) -> float:
    """dE_j/dlambda = <psi_j, F psi_j> on the N-truncation."""
    psi = truncated_eigenvector(fam, lam, j, N)
    return float(np.dot(fam.f_values(N), psi * psi))


def continued_fraction_m(fam: CoefficientFamily, lam: float, z: complex, depth: int) -> complex:
    """Downward continued fraction s_depth = 0, s_n = 1/(lambda f_n - z - a_n^2 s_{n+1})."""
    a = fam.a_values(depth).tolist()
    f = fam.f_values(depth).tolist()
    s = 0j
    for n in range(depth - 1, -1, -1):
        s = 1.0 / (lam * f[n] - z - a[n] * a[n] * s)
    return s


def tail_exponents(alpha: float, count: int) -> List[float]:
    """Smallest ``count`` values of j(alpha - 1) + i with j >= 1, i >= 0."""
    step = alpha - 1.0
    if step <= 0:
        raise HypothesisError(f"tail expansion needs alpha > 1, got {alpha}")
    candidates = sorted({round(j * step + i, 12) for j in range(1, count + 2) for i in range(count + 1)})
    return candidates[:count]


def richardson(partials: np.ndarray, sizes: Sequence[int], exponents: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generalized Richardson extrapolation of partial sums.

    S(N) = S + sum_e c_e N^{-e} is fitted through all levels; the same fit
    one order lower gives the tail estimate.

    Args:
        partials: Array of shape (levels, ...) of partial sums
        sizes: Truncation sizes of the levels
        exponents: Decay exponents, at least levels - 1 of them

    Returns:
        (extrapolated values, |difference to the lower order|)
    """
    levels = partials.shape[0]
    flat = partials.reshape(levels, -1)
    x = np.asarray(sizes, dtype=float) / float(sizes[-1])

    def solve(rows: int) -> np.ndarray:
        basis = [np.ones(rows)] + [x[-rows:] ** (-e) for e in exponents[: rows - 1]]
        return np.linalg.solve(np.column_stack(basis), flat[-rows:])[0]

    best = solve(levels)
    lower = solve(levels - 1) if levels > 1 else flat[-1]
    shape = partials.shape[1:]
    return best.reshape(shape), np.abs(best - lower).reshape(shape)


def series_partial_sums(fam: CoefficientFamily, z, checkpoints: Sequence[int]) -> np.ndarray:
    """
    Partial sums at lambda = 0 of Q(z)Q(0), P(z)Q(0), Q(z)P(0), P(z)P(0), |P(z)|^2.

    Args:
        fam: Coefficient family
        z: Array of spectral parameters
        checkpoints: Increasing numbers of summed terms

    Returns:
        Array of shape (len(checkpoints), 5, len(z))
    """
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    top = int(checkpoints[-1])
    a = fam.a_values(top + 2).tolist()
    marks = {int(N): level for level, N in enumerate(checkpoints)}

    p, p_next = np.ones_like(zs), zs / a[0]
    q, q_next = np.zeros_like(zs), np.full_like(zs, 1.0 / a[0])
    p0, p0_next = 1.0, 0.0
    q0, q0_next = 0.0, 1.0 / a[0]

    s_qq = np.zeros_like(zs)
    s_pq = np.zeros_like(zs)
    s_qp = np.zeros_like(zs)
    s_pp = np.zeros_like(zs)
    s_norm = np.zeros(zs.shape)
    out = np.empty((len(checkpoints), 5, zs.size), dtype=complex)

    for n in range(top):
        if q0:
            s_qq += q * q0
            s_pq += p * q0
        if p0:
            s_qp += q * p0
            s_pp += p * p0
        s_norm += p.real * p.real + p.imag * p.imag
        level = marks.get(n + 1)
        if level is not None:
            out[level] = (s_qq, s_pq, s_qp, s_pp, s_norm)
        inv = 1.0 / a[n + 1]
        p, p_next = p_next, (zs * p_next - a[n] * p) * inv
        q, q_next = q_next, (zs * q_next - a[n] * q) * inv
        p0, p0_next = p0_next, -a[n] * p0 * inv
        q0, q0_next = q0_next, -a[n] * q0 * inv
    return out


def nevanlinna_values(fam: CoefficientFamily, z, base: int, levels: int) -> Dict[str, np.ndarray]:
    """
    Vectorized Nevanlinna quadruple and eigenvector norms at lambda = 0.

    The quadruple satisfies AD - BC = 1 for every z; at z = 0 it is (0, -1, 1, 0).

    Returns:
        Dict with arrays A, B, C, D, norm, tail, norm_tail and truncation
    """
    if fam.alpha <= 1:
        raise HypothesisError(f"Nevanlinna series need alpha > 1 (limit circle), got {fam.alpha}",
                              {'alpha': fam.alpha})
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    checkpoints = [base * 2 ** k for k in range(levels + 1)]
    partial = series_partial_sums(fam, zs, checkpoints)
    exponents = tail_exponents(fam.alpha, levels)
    est, tail = richardson(partial, checkpoints, exponents)
    scale = np.abs(zs)
    return {
        'A': zs * est[0],
        'B': -1.0 + zs * est[1],
        'C': 1.0 + zs * est[2],
        'D': zs * est[3],
        'norm': est[4].real,
        'tail': scale * tail[:4].max(axis=0),
        'norm_tail': tail[4],
        'truncation': checkpoints[-1],
    }


def extension_m(quad: NevanlinnaQuad, t: ExtensionParam) -> complex:
    """
    m(z, t) = -(A + C t)/(B + D t); t = inf gives -C/D.

    Returns:
        The value, or MOBIUS_POLE when z is an eigenvalue of J_t
    """
    tau0, tau1 = t.pair
    numerator = tau0 * quad.A + tau1 * quad.C
    denominator = tau0 * quad.B + tau1 * quad.D
    scale = abs(quad.A) + abs(quad.B) + abs(quad.C) + abs(quad.D)
    if abs(denominator) <= 1e-14 * scale * max(abs(tau0), abs(tau1)):
        return MOBIUS_POLE
    return -numerator / denominator


def is_pole(value: complex) -> bool:
    return math.isinf(value.real) or math.isinf(value.imag)


def extension_parameter(quad: NevanlinnaQuad) -> ExtensionParam:
    """The unique t with quad.z in the spectrum of J_t: t = -B/D (real z)."""
    B = complex(quad.B).real
    D = complex(quad.D).real
    if D == 0.0:
        return ExtensionParam.infinity()
    return ExtensionParam(-B / D)


def fit_circle(p1: complex, p2: complex, p3: complex, rel_tol: float = 1e-12) -> Tuple[complex, float]:
    """
    Circle through three points.

    Raises:
        DegenerateCircleError: If the points are collinear
    """
    b, c = p2 - p1, p3 - p1
    denom = b * c.conjugate() - b.conjugate() * c
    if abs(denom) <= rel_tol * max(abs(b), abs(c)) ** 2:
        raise DegenerateCircleError(
            "Extension samples are collinear; no limit circle",
            {'points': [str(p1), str(p2), str(p3)]},
        )
    offset = (abs(c) ** 2 * b - abs(b) ** 2 * c) / denom
    return p1 + offset, abs(offset)


def projective_grid(count: int) -> List[ExtensionParam]:
    """t = tan(theta) over count angles in [0, pi); contains t = 0 and, for even count, inf."""
    params = []
    for k in range(count):
        theta = k * math.pi / count
        if 2 * k == count:
            params.append(ExtensionParam.infinity())
        else:
            params.append(ExtensionParam(math.tan(theta)))
    return params


class SpectralService:
    """
    Service class for spectra, m-functions and extensions.

    Applies the configured truncation caps, tolerances and Richardson
    levels to the pure spectral routines.
    """

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize spectral service.

        Args:
            config: Dictionary from Config.get_solver_config()
                   - truncation_start / truncation_max: truncation caps
                   - stabilization_tol: eigenvalue stabilization tolerance
                   - weyl_tol: continued fraction tolerance
                   - nevanlinna_base / nevanlinna_levels: series truncations
                   - root_tol / scan_points: extension spectrum search
        """
        self.config = config
        self.truncation_start = int(config.get('truncation_start', 64))
        self.truncation_max = int(config.get('truncation_max', 40000))
        self.stabilization_tol = float(config.get('stabilization_tol', 1e-12))
        self.weyl_tol = float(config.get('weyl_tol', 1e-12))
        self.nevanlinna_base = int(config.get('nevanlinna_base', 1024))
        self.nevanlinna_levels = int(config.get('nevanlinna_levels', 5))
        self.root_tol = float(config.get('root_tol', 1e-12))
        self.scan_points = int(config.get('scan_points', 1000))
        self.logger = logging.getLogger(__name__)

    # Truncated spectra of J(lambda)

    def initial_truncation(self, fam: CoefficientFamily, lam: float, j: int = 0) -> int:
        """Starting size past the upper regime boundary N_4(lambda)."""
        n4 = regime_index(fam, lam, REGION_DELTA_POWERS[3], upper=True) if lam > 0 else 0
        return max(self.truncation_start, j + 2, n4)

    def stabilized_eigenvalue(self, fam: CoefficientFamily, lam: float, j: int,
                              tol: Optional[float] = None) -> Tuple[float, int]:
        """
        j-th eigenvalue of J(lambda), doubling the truncation until stable.

        Returns:
            (eigenvalue, truncation used)

        Raises:
            ConvergenceError: If no stabilization below truncation_max
        """
        tol = tol or self.stabilization_tol
        N = self.initial_truncation(fam, lam, j)
        previous = truncated_eigenvalue(fam, lam, j, N)
        last_change = None
        while 2 * N <= self.truncation_max:
            N *= 2
            current = truncated_eigenvalue(fam, lam, j, N)
            change = abs(current - previous)
            if has_settled(change, last_change, tol, max(1.0, abs(current))):
                return current, N
            previous, last_change = current, change
        raise ConvergenceError(
            f"E^({j}) at lambda={lam:.4g} did not stabilize below N={self.truncation_max}",
            {'lambda': lam, 'j': j, 'truncation_max': self.truncation_max},
        )

    def eigenvalue_curve(self, fam: CoefficientFamily, j: int, lambda_grid: Sequence[float],
                         tol: Optional[float] = None, with_slope: bool = True) -> List[EigenSample]:
        """
        Stabilized samples of E^(j)(lambda) over a grid of couplings.

        Args:
            fam: Coefficient family
            j: Eigenvalue index (>= 0)
            lambda_grid: Positive couplings
            tol: Stabilization tolerance
            with_slope: Also compute the Hellmann-Feynman slope

        Returns:
            List of EigenSample in grid order
        """
        if j < 0:
            raise ValueError(f"eigenvalue index must be >= 0, got {j}")
        samples = []
        for lam in lambda_grid:
            if not lam > 0:
                raise HypothesisError(f"eigenvalue curves need lambda > 0, got {lam}", {'lambda': lam})
            energy, N = self.stabilized_eigenvalue(fam, lam, j, tol)
            slope = hellmann_feynman_slope(fam, lam, j, N) if with_slope else None
            samples.append(EigenSample(lam=float(lam), j=j, energy=energy, truncation=N, slope=slope))
        self.logger.info(f"Eigenvalue curve E^({j}) sampled at {len(samples)} couplings")
        return samples

    # Weyl m-function and Green function of J(lambda)

    def weyl_m(self, fam: CoefficientFamily, lam: float, z: complex, tol: Optional[float] = None) -> MSample:
        """
        Weyl m-function M(z, lambda) by an adaptive continued fraction.

        Raises:
            HypothesisError: If lambda <= 0 or z is real
            ConvergenceError: If the fraction does not settle below truncation_max
        """
        z = complex(z)
        if not lam > 0:
            raise HypothesisError(f"M(z, lambda) needs lambda > 0, got {lam}", {'lambda': lam})
        if z.imag == 0:
            raise HypothesisError("M(z, lambda) needs a non-real z", {'z': str(z)})
        tol = tol or self.weyl_tol
        depth = self.initial_truncation(fam, lam)
        previous = continued_fraction_m(fam, lam, z, depth)
        while 2 * depth <= self.truncation_max:
            depth *= 2
            current = continued_fraction_m(fam, lam, z, depth)
            if abs(current - previous) <= tol * max(1.0, abs(current)):
                gap = float(abs(resolvent_column(fam, lam, z, 2 * depth)[0] - current))
                sample = MSample(z=z, lam=float(lam), m=current, truncation=depth, resolvent_gap=gap)
                if not sample.consistent:
                    self.logger.warning(
                        f"Continued fraction and resolvent disagree at lambda={lam:.4g}: {gap:.2e}"
                    )
                return sample
            previous = current
        raise ConvergenceError(
            f"M(z, lambda) at lambda={lam:.4g} did not converge below N={self.truncation_max}",
            {'lambda': lam, 'z': str(z)},
        )

    def green_function(self, fam: CoefficientFamily, lam: float, z: complex, n: int, m: int) -> complex:
        """G_nm(z, lambda) = (M P_max + Q_max) P_min."""
        M = self.weyl_m(fam, lam, z).m
        hi, lo = max(n, m), min(n, m)
        polys = orthogonal_polynomials(fam, lam, complex(z), max(hi, 1))
        return complex((M * polys.P[hi] + polys.Q[hi]) * polys.P[lo])

    # Nevanlinna quadruple and the extensions J_t

    def nevanlinna_batch(self, fam: CoefficientFamily, z, base: Optional[int] = None) -> Dict[str, np.ndarray]:
        return nevanlinna_values(fam, z, base or self.nevanlinna_base, self.nevanlinna_levels)

    def nevanlinna_quad(self, fam: CoefficientFamily, z: complex, tol: Optional[float] = None) -> NevanlinnaQuad:
        """
        Nevanlinna quadruple at z with Richardson tail removal.

        The base truncation is doubled until the tail estimate drops below tol.

        Raises:
            ConvergenceError: If the tail stays above tol (slow decay)
        """
        tol = tol or self.weyl_tol * 1e3
        base = self.nevanlinna_base
        while True:
            values = self.nevanlinna_batch(fam, [z], base)
            tail = float(values['tail'][0])
            if tail <= tol or base * 2 ** (self.nevanlinna_levels + 1) > self.truncation_max * 4:
                break
            base *= 2
        if tail > tol:
            self.logger.warning(f"Nevanlinna tail {tail:.2e} above tolerance {tol:.1e} at z={z}")
            if tail > 1e3 * tol:
                raise ConvergenceError(
                    f"Nevanlinna series decay too slowly (alpha={fam.alpha}): tail {tail:.2e}",
                    {'z': str(z), 'tail_estimate': tail, 'truncation': values['truncation']},
                )
        return NevanlinnaQuad(
            z=complex(z),
            A=complex(values['A'][0]),
            B=complex(values['B'][0]),
            C=complex(values['C'][0]),
            D=complex(values['D'][0]),
            truncation=int(values['truncation']),
            tail_estimate=tail,
        )

    def limit_circle(self, fam: CoefficientFamily, z: complex, count: int = 100,
                     quad: Optional[NevanlinnaQuad] = None) -> LimitCircle:
        """
        Fit the limit circle of m(z, t), t over a projective grid.

        Raises:
            HypothesisError: If Im z <= 0
            DegenerateCircleError: If the samples are collinear
        """
        z = complex(z)
        if z.imag <= 0:
            raise HypothesisError("limit circle needs Im z > 0", {'z': str(z)})
        quad = quad or self.nevanlinna_quad(fam, z)
        params = projective_grid(count)
        samples = np.array([extension_m(quad, t) for t in params])
        third = count // 3
        center, radius = fit_circle(samples[0], samples[third], samples[2 * third])
        deviation = float(np.max(np.abs(np.abs(samples - center) - radius)))
        circle = LimitCircle(z=z, center=complex(center), radius=float(radius), t_values=tuple(params),
                             samples=samples, max_deviation=deviation)
        if not circle.consistent:
            self.logger.warning(f"Limit circle samples deviate by {deviation:.2e} (radius {radius:.3e})")
        self.logger.info(f"Limit circle at z={z}: center={center:.6g}, radius={radius:.6g}")
        return circle

    def extension_green(self, fam: CoefficientFamily, t: ExtensionParam, z: complex, n: int, m: int,
                        quad: Optional[NevanlinnaQuad] = None) -> complex:
        """g_nm(z, t) = (m(z,t) P0_max + Q0_max) P0_min."""
        quad = quad or self.nevanlinna_quad(fam, z)
        value = extension_m(quad, t)
        if is_pole(value):
            return MOBIUS_POLE
        hi, lo = max(n, m), min(n, m)
        polys = orthogonal_polynomials(fam, 0.0, complex(z), max(hi, 1))
        return complex((value * polys.P[hi] + polys.Q[hi]) * polys.P[lo])

    def _characteristic(self, fam: CoefficientFamily, t: ExtensionParam, energies: np.ndarray) -> np.ndarray:
        tau0, tau1 = t.pair
        values = self.nevanlinna_batch(fam, energies)
        return (tau0 * values['B'] + tau1 * values['D']).real

    def _scan_roots(self, fam: CoefficientFamily, t: ExtensionParam, lo: float, hi: float,
                    points: int) -> Tuple[List[float], List[Tuple[float, float]]]:
        grid = np.linspace(lo, hi, points + 1)
        values = self._characteristic(fam, t, grid)
        exact = [float(E) for E, v in zip(grid, values) if v == 0.0]
        sign = np.sign(values)
        brackets = [(float(grid[i]), float(grid[i + 1]))
                    for i in range(points) if sign[i] * sign[i + 1] < 0]
        return exact, brackets

    def _refine(self, fam: CoefficientFamily, t: ExtensionParam,
                brackets: List[Tuple[float, float]], tol: float) -> List[float]:
        """Shrink all brackets together by sign-change subdivision, then interpolate."""
        if not brackets:
            return []
        split = 16
        lo = np.array([b[0] for b in brackets])
        hi = np.array([b[1] for b in brackets])
        f_lo = self._characteristic(fam, t, lo)
        f_hi = self._characteristic(fam, t, hi)
        fractions = np.arange(1, split) / split
        while np.max((hi - lo) / np.maximum(1.0, np.abs(lo))) > tol * 1e3:
            inner = lo[:, None] + (hi - lo)[:, None] * fractions[None, :]
            f_inner = self._characteristic(fam, t, inner.ravel()).reshape(inner.shape)
            xs = np.column_stack([lo, inner, hi])
            fs = np.column_stack([f_lo, f_inner, f_hi])
            for row in range(lo.size):
                change = np.nonzero(np.sign(fs[row, :-1]) * np.sign(fs[row, 1:]) <= 0)[0][0]
                lo[row], hi[row] = xs[row, change], xs[row, change + 1]
                f_lo[row], f_hi[row] = fs[row, change], fs[row, change + 1]
        with np.errstate(invalid='ignore', divide='ignore'):
            secant = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        roots = np.where(f_lo == 0.0, lo, np.where(f_hi == 0.0, hi, secant))
        return [float(r) for r in roots]

    def extension_spectrum(self, fam: CoefficientFamily, t: ExtensionParam,
                           window: Tuple[float, float], tol: Optional[float] = None,
                           points: Optional[int] = None) -> List[float]:
        """
        Eigenvalues of J_t in a real window: roots of B(E,0) + t D(E,0).

        The scan is repeated at double resolution and the larger root count
        is kept; a mismatch is logged as a resolution warning.

        Args:
            fam: Coefficient family
            t: Extension parameter
            window: Bounded real interval (lo, hi)
            tol: Relative root tolerance
            points: Scan intervals (defaults to scan_points)

        Returns:
            Sorted eigenvalues of J_t in the window
        """
        lo, hi = float(window[0]), float(window[1])
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"extension spectrum needs a bounded window, got {window}")
        tol = tol or self.root_tol
        points = points or self.scan_points

        exact, brackets = self._scan_roots(fam, t, lo, hi, points)
        fine_exact, fine_brackets = self._scan_roots(fam, t, lo, hi, 2 * points)
        if len(fine_exact) + len(fine_brackets) != len(exact) + len(brackets):
            self.logger.warning(
                f"Root count changed from {len(exact) + len(brackets)} to "
                f"{len(fine_exact) + len(fine_brackets)} when refining the scan of J_{t}"
            )
            if len(fine_exact) + len(fine_brackets) > len(exact) + len(brackets):
                exact, brackets = fine_exact, fine_brackets

        roots = sorted(exact + self._refine(fam, t, brackets, tol))
        self.logger.info(f"Found {len(roots)} eigenvalues of J_{t} in [{lo}, {hi}]")
        return roots

    def eigenvector_norms(self, fam: CoefficientFamily, energies: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        """Squared norms ||P0(E)||^2 with tail estimates."""
        if len(energies) == 0:
            return np.zeros(0), np.zeros(0)
        values = self.nevanlinna_batch(fam, np.asarray(energies, dtype=float))
        return values['norm'], values['norm_tail']

    def eigenvector_norm(self, fam: CoefficientFamily, E: float) -> float:
        """||P0(E)||^2 with Richardson tail extrapolation."""
        norms, _ = self.eigenvector_norms(fam, [E])
        return float(norms[0])

    def extension_parameter_at(self, fam: CoefficientFamily, E: float) -> ExtensionParam:
        """t(E) = -B(E,0)/D(E,0) for real E."""
        return extension_parameter(self.nevanlinna_quad(fam, float(E)))
