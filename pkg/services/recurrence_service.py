"""
Recurrence Service Module for the generalized eigenvalue equation.

Solves a_n u_{n+1} + (lambda f_n - z) u_n + a_{n-1} u_{n-1} = 0, builds
the orthogonal polynomials of first and second kind, Wronskians,
transfer matrices and Turan forms, and extracts the square-summable
(recessive) solution by a backward Riccati sweep.

WHY: Every spectral and asymptotic diagnostic is a function of recurrence
solutions, so the forward and backward sweeps are implemented once here.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded

from services.coefficient_service import CoefficientFamily
from services.errors import ConvergenceError, HypothesisError

# x_j^delta for the four regime boundaries
REGION_DELTA_POWERS = (5.0 / 8.0, 7.0 / 8.0, 33.0 / 8.0, 39.0 / 8.0)

RESIDUAL_TOL = 1e-10
RICCATI_LIMIT = 1.0 / 3.0
_LOG_FLOOR = 690.0


@dataclass(frozen=True)
class PolyPair:
    """Orthogonal polynomials P_0..P_N and Q_0..Q_N at fixed (lambda, z)."""

    lam: float
    z: Any
    P: np.ndarray
    Q: np.ndarray

    @property
    def size(self) -> int:
        return self.P.shape[0]


@dataclass(frozen=True)
class ThreeTermSolution:
    """
    Solution u_0..u_N of the three-term recurrence.

    ``kind`` is one of general, recessive or dominant. ``anchor`` is the
    index where the solution was normalized to one.
    """

    lam: float
    z: complex
    values: np.ndarray
    kind: str = 'general'
    anchor: int = 0
    seed: Optional[int] = None

    def __len__(self) -> int:
        return self.values.shape[0]


def regime_index(fam: CoefficientFamily, lam: float, x_delta: float, upper: bool = False) -> int:
    """
    Index ceil(x/h) (or floor for upper boundaries) with x = x_delta^{1/delta}.

    Args:
        fam: Coefficient family
        lam: Coupling (> 0)
        x_delta: Value of x^delta at the boundary
        upper: Use floor instead of ceil

    Returns:
        Integer index of the boundary
    """
    h = lam ** (1.0 / fam.delta)
    x = x_delta ** (1.0 / fam.delta)
    ratio = x / h
    return int(math.floor(ratio)) if upper else int(math.ceil(ratio))


def _values(u: Union[ThreeTermSolution, Sequence, np.ndarray]) -> np.ndarray:
    if isinstance(u, ThreeTermSolution):
        return u.values
    if isinstance(u, PolyPair):
        raise TypeError("pass PolyPair.P or PolyPair.Q, not the pair")
    return np.asarray(u)


def _forward(fam: CoefficientFamily, lam: float, z, u0, u1, N: int, dtype=complex) -> np.ndarray:
    """Forward sweep from (u_0, u_1); z may be an array, giving shape (N+1,) + z.shape."""
    z = np.asarray(z, dtype=dtype)
    a = fam.a_values(N + 1).astype(dtype)
    diag = lam * fam.f_values(N + 1).astype(dtype)

    out = np.empty((N + 1,) + z.shape, dtype=dtype)
    out[0] = u0
    if N >= 1:
        out[1] = u1
    for n in range(1, N):
        out[n + 1] = ((z - diag[n]) * out[n] - a[n - 1] * out[n - 1]) / a[n]
    return out


def orthogonal_polynomials(fam: CoefficientFamily, lam: float, z, N: int) -> PolyPair:
    """
    Orthogonal polynomials of first and second kind.

    P_0 = 1, P_1 = (z - lambda f_0)/a_0, Q_0 = 0, Q_1 = 1/a_0, then the
    forward recurrence. ``z`` may be a scalar or an array of points.

    Args:
        fam: Coefficient family
        lam: Coupling lambda >= 0
        z: Spectral parameter(s)
        N: Highest degree (>= 1)

    Returns:
        PolyPair with arrays of length N+1 along the first axis
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    a0 = fam.a_values(1)[0]
    f0 = fam.f_values(1)[0]
    zc = np.asarray(z, dtype=complex)
    P = _forward(fam, lam, zc, np.ones_like(zc), (zc - lam * f0) / a0, N)
    Q = _forward(fam, lam, zc, np.zeros_like(zc), np.full_like(zc, 1.0 / a0), N)
    return PolyPair(lam=lam, z=z, P=P, Q=Q)


def solve_recurrence(fam: CoefficientFamily, lam: float, z: complex, u0: complex, u1: complex, N: int) -> ThreeTermSolution:
    """
    Forward solution with arbitrary initial data.

    A rerun in extended precision is made when the residual check fails.
    """
    values = _forward(fam, lam, complex(z), complex(u0), complex(u1), N)
    solution = ThreeTermSolution(lam=lam, z=complex(z), values=values)
    if recurrence_residual(fam, lam, z, solution) > RESIDUAL_TOL:
        values = _forward(fam, lam, complex(z), u0, u1, N, dtype=np.clongdouble).astype(complex)
        solution = ThreeTermSolution(lam=lam, z=complex(z), values=values)
    return solution


def wronskian(fam: CoefficientFamily, u, v, n: int) -> complex:
    """W_n[u, v] = a_n (u_n v_{n+1} - u_{n+1} v_n)."""
    uu, vv = _values(u), _values(v)
    a_n = fam.a_values(n + 1)[n]
    return a_n * (uu[n] * vv[n + 1] - uu[n + 1] * vv[n])


def transfer_matrix(fam: CoefficientFamily, lam: float, z: complex, n: int) -> np.ndarray:
    """
    Transfer matrix T_n mapping (u_n, u_{n-1}) to (u_{n+1}, u_n).

    Raises:
        ValueError: If n < 1
    """
    if n < 1:
        raise ValueError(f"transfer matrix needs n >= 1, got {n}")
    a = fam.a_values(n + 1)
    f_n = fam.f_values(n + 1)[n]
    return np.array([
        [(z - lam * f_n) / a[n], -a[n - 1] / a[n]],
        [1.0, 0.0],
    ], dtype=complex)


def turan_matrix(fam: CoefficientFamily, lam: float, z: complex, n: int) -> np.ndarray:
    """Hermitian part of E T_n with E = [[0, 1], [-1, 0]]."""
    a = fam.a_values(n + 1)
    f_n = fam.f_values(n + 1)[n]
    z = complex(z)
    return np.array([
        [1.0, (lam * f_n - z.conjugate()) / (2 * a[n])],
        [(lam * f_n - z) / (2 * a[n]), a[n - 1] / a[n]],
    ], dtype=complex)


def turan_form(fam: CoefficientFamily, lam: float, z: complex, n: int, v) -> float:
    """Q_n(v) = <Re(E T_n) v, v>."""
    if n < 1:
        raise ValueError(f"Turan form needs n >= 1, got {n}")
    vec = np.asarray(v, dtype=complex)
    return float(np.real(np.vdot(vec, turan_matrix(fam, lam, z, n) @ vec)))


def turan_determinant(fam: CoefficientFamily, lam: float, z: complex, u, n: int) -> float:
    """a_n Q_n((u_n, u_{n-1}))."""
    values = _values(u)
    a_n = fam.a_values(n + 1)[n]
    return float(a_n * turan_form(fam, lam, z, n, (values[n], values[n - 1])))


def recurrence_residual(fam: CoefficientFamily, lam: float, z: complex, u) -> float:
    """
    Maximal relative residual of the recurrence at interior indices.

    Indices where all three terms vanish (underflowed tails) are skipped.
    """
    values = _values(u).astype(complex)
    N = values.shape[0] - 1
    if N < 2:
        return 0.0
    a = fam.a_values(N + 1)
    diag = lam * fam.f_values(N + 1)
    n = np.arange(1, N)
    t_up = a[n] * values[n + 1]
    t_mid = (diag[n] - z) * values[n]
    t_down = a[n - 1] * values[n - 1]
    scale = np.abs(t_up) + np.abs(t_mid) + np.abs(t_down)
    live = scale > 0
    if not live.any():
        return 0.0
    return float(np.max(np.abs(t_up + t_mid + t_down)[live] / scale[live]))


def resolvent_column(fam: CoefficientFamily, lam: float, z: complex, N: int) -> np.ndarray:
    """
    Column (J_N(lambda) - z)^{-1} e_0 of an N x N truncation by a banded solve.

    Args:
        fam: Coefficient family
        lam: Coupling
        z: Non-real spectral parameter (or real off the truncated spectrum)
        N: Truncation size (>= 1)

    Returns:
        Complex array of length N
    """
    a = fam.a_values(N)
    bands = np.zeros((3, N), dtype=complex)
    bands[0, 1:] = a[: N - 1]
    bands[1, :] = lam * fam.f_values(N) - z
    bands[2, : N - 1] = a[: N - 1]
    rhs = np.zeros(N, dtype=complex)
    rhs[0] = 1.0
    return solve_banded((1, 1), bands, rhs)


def riccati_ratios(fam: CoefficientFamily, lam: float, z: complex, seed: int) -> np.ndarray:
    """
    Backward Riccati sweep for rho_n = u_n/u_{n-1}, n = 1..seed.

    rho_n = -a_{n-1} / (lambda f_n - z + a_n rho_{n+1}), started from the
    Poincare estimate rho_{seed+1} = -a_seed / (lambda f_{seed+1} - z).
    """
    a = fam.a_values(seed + 2)
    diag = lam * fam.f_values(seed + 2)
    rho = np.empty(seed + 2, dtype=complex)
    rho[0] = np.nan
    rho[seed + 1] = -a[seed] / (diag[seed + 1] - z)
    for n in range(seed, 0, -1):
        rho[n] = -a[n - 1] / (diag[n] - z + a[n] * rho[n + 1])
    return rho[: seed + 1]


def tail_error_proxy(fam: CoefficientFamily, lam: float, rho: np.ndarray, start: int) -> float:
    """max over n >= start of |-rho_n lambda f_n / a_{n-1} - 1|."""
    top = rho.shape[0] - 1
    if start > top:
        return 0.0
    n = np.arange(max(start, 1), top + 1)
    a = fam.a_values(top + 1)
    f = fam.f_values(top + 1)
    return float(np.max(np.abs(-rho[n] * lam * f[n] / a[n - 1] - 1.0)))


def recessive_solution(
    fam: CoefficientFamily,
    lam: float,
    z: complex,
    N: Optional[int] = None,
    seed: Optional[int] = None,
) -> ThreeTermSolution:
    """
    Square-summable solution normalized to u_0 = 1.

    The ratios come from the backward Riccati sweep seeded at twice the
    upper tail boundary N_4(lambda); values are rebuilt forward in log
    magnitude so deep tails underflow to zero instead of overflowing.

    Args:
        fam: Coefficient family
        lam: Coupling lambda > 0
        z: Spectral parameter
        N: Length of the returned window (defaults to the seed index)
        seed: Riccati seed index (defaults to 2 N_4(lambda))

    Returns:
        ThreeTermSolution of kind recessive

    Raises:
        HypothesisError: If lambda <= 0
        ConvergenceError: If the tail ratios leave the 1/3 window
    """
    if not lam > 0:
        raise HypothesisError(f"recessive solution needs lambda > 0, got {lam}",
                              {'lambda': lam})
    z = complex(z)
    n4 = regime_index(fam, lam, REGION_DELTA_POWERS[3], upper=True)
    n3 = regime_index(fam, lam, REGION_DELTA_POWERS[2])
    if seed is None:
        seed = max(2 * n4, 16)
    if N is None:
        N = seed
    if N > seed:
        seed = N

    rho = riccati_ratios(fam, lam, z, seed)
    proxy = tail_error_proxy(fam, lam, rho, max(n3, 1))
    if not np.isfinite(proxy) or proxy > RICCATI_LIMIT:
        raise ConvergenceError(
            f"Riccati tail error {proxy:.3g} exceeds {RICCATI_LIMIT:.3g}",
            {'lambda': lam, 'z': str(z), 'seed': seed, 'tail_start': n3},
        )

    if not np.all(np.isfinite(rho[1:])):
        raise ConvergenceError("Riccati sweep hit a zero denominator",
                               {'lambda': lam, 'z': str(z)})

    log_mag = np.concatenate([[0.0], np.cumsum(np.log(np.abs(rho[1:])))])
    phase = np.concatenate([[1.0 + 0j], np.cumprod(rho[1:] / np.abs(rho[1:]))])

    anchor = 0
    peak = log_mag.max()
    if peak > _LOG_FLOOR:
        anchor = int(np.argmax(log_mag > peak - _LOG_FLOOR))
    shifted = log_mag - log_mag[anchor]
    values = np.where(shifted > -745.0, np.exp(np.maximum(shifted, -745.0)), 0.0) * phase
    values = values / phase[anchor]

    return ThreeTermSolution(
        lam=lam, z=z, values=values[: N + 1], kind='recessive', anchor=anchor, seed=seed,
    )


class RecurrenceService:
    """
    Service class for recurrence solutions with configured caps.

    Adds truncation limits and logging on top of the pure sweeps.
    """

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize recurrence service.

        Args:
            config: Dictionary from Config.get_solver_config()
                   - truncation_max: largest admissible Riccati seed index
        """
        self.config = config
        self.truncation_max = int(config.get('truncation_max', 40000))
        self.logger = logging.getLogger(__name__)

    def recessive(self, fam: CoefficientFamily, lam: float, z: complex,
                  N: Optional[int] = None) -> ThreeTermSolution:
        """
        Recessive solution with the seed index checked against the cap.

        Raises:
            ConvergenceError: If the seed index exceeds truncation_max
        """
        n4 = regime_index(fam, lam, REGION_DELTA_POWERS[3], upper=True) if lam > 0 else 0
        seed = max(2 * n4, 16, N or 0)
        if seed > self.truncation_max:
            raise ConvergenceError(
                f"Riccati seed {seed} exceeds TRUNCATION_MAX={self.truncation_max}; "
                f"lambda={lam:.3g} is too small for this run",
                {'lambda': lam, 'seed': seed, 'truncation_max': self.truncation_max},
            )
        solution = recessive_solution(fam, lam, z, N=N, seed=seed)
        self.logger.debug(f"Recessive solution at lambda={lam:.4g}, z={z}: seed={seed}, anchor={solution.anchor}")
        return solution
