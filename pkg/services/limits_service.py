"""
Limits Service Module for coupling sequences lambda_j -> 0.

Selects sequences of couplings along which J(lambda_j) converges to a
prescribed self-adjoint extension J_t, and measures that convergence
through the Weyl m-function spiral and Green-function errors.

WHY: The sequence construction is sequential and stateful across steps
(previous coupling, previous level), so it lives in its own service on
top of the spectral primitives.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from services.coefficient_service import CoefficientFamily
from services.errors import BracketError, HypothesisError
from services.spectral_service import (
    ExtensionParam,
    LimitCircle,
    SpectralService,
    extension_m,
    extension_parameter,
    has_settled,
    is_pole,
    sturm_count,
    truncated_eigenvalues,
)


@dataclass(frozen=True)
class CouplingRoot:
    """Result of lambda_for_eigenvalue with its final bracket."""

    lam: float
    level: int
    residual: float
    bracket: Tuple[float, float]
    truncation: int


@dataclass(frozen=True)
class SequenceElement:
    """One coupling lambda_j of a selected sequence."""

    j: int
    lam: float
    level: int
    residual: float
    truncation: int
    ratio: Optional[float]
    m_error: Optional[float]
    t_recomputed: str
    certified: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SpiralPoint:
    lam: float
    m: complex
    circle_distance: float
    truncation: int
    resolvent_gap: float = 0.0
    consistent: bool = True


@dataclass(frozen=True)
class SpiralResult:
    """M(z, lambda) samples together with the limit circle at z."""

    z: complex
    points: List[SpiralPoint]
    circle: LimitCircle
    winding_monotone: bool

    @property
    def consistent(self) -> bool:
        """Circle fit and every M sample passed their cross-checks."""
        return self.circle.consistent and all(point.consistent for point in self.points)


@dataclass(frozen=True)
class GreenError:
    j: int
    lam: float
    n: int
    m: int
    G: complex
    g: complex
    error: float


class LimitsService:
    """
    Service class for coupling sequence selection and convergence data.

    Uses a SpectralService for stabilized eigenvalues, Weyl functions and
    the Nevanlinna quadruple.
    """

    def __init__(self, config: Dict[str, Any], spectral: SpectralService):
        """
        Initialize limits service.

        Args:
            config: Dictionary from Config.get_solver_config()
                   - lambda_start: coupling that opens every sequence
                   - lambda_floor: smallest coupling tried when bracketing
                   - eigenvalue_tol: residual tolerance of lambda roots
            spectral: Configured SpectralService
        """
        self.config = config
        self.spectral = spectral
        self.lambda_start = float(config.get('lambda_start', 1.0))
        self.lambda_floor = float(config.get('lambda_floor', 1e-9))
        self.eigenvalue_tol = float(config.get('eigenvalue_tol', 1e-14))
        self.logger = logging.getLogger(__name__)

    def _energy(self, fam: CoefficientFamily, lam: float, level: int) -> float:
        return self.spectral.stabilized_eigenvalue(fam, lam, level)[0]

    def lambda_for_eigenvalue(self, fam: CoefficientFamily, E: float, level: int,
                              lambda_hi: float, tol: Optional[float] = None) -> CouplingRoot:
        """
        Coupling lambda in (0, lambda_hi) with E^(level)(lambda) = E.

        E^(level) decreases monotonically as lambda decreases, so the lower
        end of the bracket is found by halving lambda_hi.

        Raises:
            BracketError: If E^(level)(lambda_hi) <= E or no lower end exists
        """
        tol = tol or max(self.eigenvalue_tol, 1e-12 * max(1.0, abs(E)))
        top = self._energy(fam, lambda_hi, level)
        if top <= E:
            raise BracketError(
                f"E^({level})({lambda_hi:.4g}) = {top:.6g} <= E = {E:.6g}; increase the level",
                {'level': level, 'lambda_hi': lambda_hi, 'E': E},
            )

        lo, hi = lambda_hi / 2.0, lambda_hi
        while self._energy(fam, lo, level) >= E:
            hi = lo
            lo /= 2.0
            if lo < self.lambda_floor:
                raise BracketError(
                    f"No coupling above {self.lambda_floor:.1e} brings E^({level}) below {E}",
                    {'level': level, 'E': E},
                )

        lam = brentq(lambda x: self._energy(fam, x, level) - E, lo, hi,
                     xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
        energy, truncation = self.spectral.stabilized_eigenvalue(fam, lam, level)
        residual = abs(energy - E)
        if residual > tol:
            self.logger.warning(f"Coupling root residual {residual:.2e} exceeds {tol:.1e} at level {level}")
        self.logger.debug(f"lambda={lam:.10g} puts E^({level}) at {E} (residual {residual:.1e})")
        return CouplingRoot(lam=float(lam), level=level, residual=residual,
                            bracket=(float(lo), float(hi)), truncation=truncation)

    def certify_eigenvalue(self, fam: CoefficientFamily, lam: float, E: float, tol: float) -> Tuple[bool, float]:
        """
        Check that E lies within tol of the stabilized truncated spectrum.

        Returns:
            (certified, distance to the nearest stabilized eigenvalue)
        """
        N = self.spectral.initial_truncation(fam, lam)
        window = (E - 1.0, E + 1.0)
        previous = truncated_eigenvalues(fam, lam, N, window)
        current = previous
        last_change = None
        while 2 * N <= self.spectral.truncation_max:
            N *= 2
            current = truncated_eigenvalues(fam, lam, N, window)
            if current.size != previous.size:
                previous, last_change = current, None
                continue
            change = float(np.max(np.abs(current - previous))) if current.size else 0.0
            if has_settled(change, last_change, self.spectral.stabilization_tol, max(1.0, abs(E))):
                break
            previous, last_change = current, change
        if current.size == 0:
            return False, math.inf
        distance = float(np.min(np.abs(current - E)))
        return distance < tol, distance

    def _starting_level(self, fam: CoefficientFamily, lam: float, E: float, floor: int) -> int:
        """Smallest l >= floor with E^(l)(lam) > E; Sturm count first, then an upward scan."""
        _, N = self.spectral.stabilized_eigenvalue(fam, lam, floor)
        diagonal = lam * fam.f_values(N)
        level = max(floor, int(sturm_count(diagonal, fam.a_values(N - 1), E + 1e-12 * max(1.0, abs(E)))))
        while level > floor and self._energy(fam, lam, level - 1) > E:
            level -= 1
        while self._energy(fam, lam, level) <= E:
            level += 1
        return level

    def _check_extension_eigenvalue(self, fam: CoefficientFamily, t: ExtensionParam, E: float) -> ExtensionParam:
        quad = self.spectral.nevanlinna_quad(fam, float(E))
        tau0, tau1 = t.pair
        residual = abs(tau0 * quad.B + tau1 * quad.D)
        scale = max(abs(quad.B), abs(quad.D), 1.0) * max(abs(tau0), abs(tau1))
        if residual > 1e-6 * scale:
            raise HypothesisError(
                f"E={E} is not an eigenvalue of J_{t} (characteristic residual {residual:.2e})",
                {'E': E, 't': str(t), 'recomputed_t': str(extension_parameter(quad))},
            )
        return extension_parameter(quad)

    def select_sequence(self, fam: CoefficientFamily, t: ExtensionParam, E: float, count: int,
                        z: complex = 1j, lambda_start: Optional[float] = None) -> List[SequenceElement]:
        """
        Couplings lambda_1 > ... > lambda_count with E in the spectrum of each J(lambda_j).

        Step j chooses the smallest level l (scanning upward from the
        previous one) with E^(l)(lambda_{j-1}/2) > E and solves
        E^(l)(lambda_j) = E on (0, lambda_{j-1}/2).

        Args:
            fam: Coefficient family in the limit-circle regime
            t: Target extension parameter
            E: Eigenvalue of J_t
            count: Number of couplings
            z: Non-real point for the m-function error column
            lambda_start: lambda_0 (defaults to the configured start)

        Returns:
            List of SequenceElement

        Raises:
            HypothesisError: If E is not an eigenvalue of J_t
        """
        if count < 1:
            raise ValueError(f"sequence length must be >= 1, got {count}")
        t_recomputed = self._check_extension_eigenvalue(fam, t, E)
        target_m = extension_m(self.spectral.nevanlinna_quad(fam, z), t)

        elements: List[SequenceElement] = []
        previous = lambda_start or self.lambda_start
        level = 0
        for j in range(1, count + 1):
            lambda_hi = previous / 2.0
            level = self._starting_level(fam, lambda_hi, E, level)
            root = self.lambda_for_eigenvalue(fam, E, level, lambda_hi)
            certified, _ = self.certify_eigenvalue(fam, root.lam, E, max(1e-8, 10 * root.residual))
            m_error = None
            if not is_pole(target_m):
                m_error = abs(self.spectral.weyl_m(fam, root.lam, z).m - target_m)
            ratio = root.lam / previous if j > 1 else None
            element = SequenceElement(
                j=j, lam=root.lam, level=level, residual=root.residual,
                truncation=root.truncation, ratio=ratio, m_error=m_error,
                t_recomputed=str(t_recomputed), certified=certified,
            )
            elements.append(element)
            self.logger.info(f"lambda_{j} = {root.lam:.6e} (level {level}, |M - m| = {m_error})")
            previous = root.lam
        return elements

    def spiral_samples(self, fam: CoefficientFamily, z: complex, lambda_grid: Sequence[float],
                       circle_samples: int = 100) -> SpiralResult:
        """
        M(z, lambda) along a decreasing grid plus distances to the limit circle.

        Raises:
            HypothesisError: If the grid is empty or not strictly positive
        """
        grid = [float(lam) for lam in lambda_grid]
        if not grid or min(grid) <= 0:
            raise HypothesisError("spiral needs a non-empty grid of positive couplings")
        circle = self.spectral.limit_circle(fam, z, circle_samples)
        points = []
        for lam in grid:
            sample = self.spectral.weyl_m(fam, lam, z)
            points.append(SpiralPoint(lam=lam, m=sample.m, circle_distance=circle.distance(sample.m),
                                      truncation=sample.truncation, resolvent_gap=sample.resolvent_gap,
                                      consistent=sample.consistent))
        angles = np.unwrap(np.angle(np.array([p.m for p in points]) - circle.center))
        steps = np.diff(angles)
        monotone = bool(np.all(steps >= 0) or np.all(steps <= 0))
        if not monotone:
            self.logger.warning("Spiral winding is not monotone on this grid; refine the grid")
        return SpiralResult(z=complex(z), points=points, circle=circle, winding_monotone=monotone)

    def green_convergence(self, fam: CoefficientFamily, lambdas: Sequence[float], t: ExtensionParam,
                          z: complex, pairs: Sequence[Tuple[int, int]]) -> List[GreenError]:
        """|G_nm(z, lambda_j) - g_nm(z, t)| for every coupling and index pair."""
        quad = self.spectral.nevanlinna_quad(fam, z)
        limits = {pair: self.spectral.extension_green(fam, t, z, pair[0], pair[1], quad=quad) for pair in pairs}
        table = []
        for j, lam in enumerate(lambdas, 1):
            for n, m in pairs:
                G = self.spectral.green_function(fam, lam, z, n, m)
                g = limits[(n, m)]
                table.append(GreenError(j=j, lam=float(lam), n=n, m=m, G=G, g=g, error=abs(G - g)))
        return table
