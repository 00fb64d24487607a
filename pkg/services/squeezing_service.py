"""
Squeezing Service Module for higher-order squeezing dynamics.

Assembles A_{k,h}(K) = (a^dag)^k + a^k + K (a^dag a)^h on a Fock
truncation, splits it into k Jacobi blocks, evolves the vacuum with
truncated operators and with self-adjoint extensions of the K = 0 block,
renders Wigner functions and runs the vacuum convergence experiment.

WHY: The bosonic application combines every other service; keeping the
Fock-space plumbing here leaves those services free of physics units.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import eigh_tridiagonal

from services.coefficient_service import CoefficientFamily, pochhammer, squeezing_family
from services.errors import CompletenessError, ConvergenceError
from services.limits_service import LimitsService
from services.recurrence_service import orthogonal_polynomials
from services.spectral_service import ExtensionParam, SpectralService, has_settled


@dataclass(frozen=True)
class FockVector:
    """
    Complex coefficient vector.

    ``residue`` is None for the full Fock basis; otherwise entry r is the
    coefficient of Fock state residue + r k.
    """

    coeffs: np.ndarray
    k: int = 1
    residue: Optional[int] = None

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def to_fock(self, k: Optional[int] = None, residue: Optional[int] = None) -> 'FockVector':
        """Map block index r to Fock index residue + r k."""
        k = k or self.k
        residue = self.residue if residue is None else residue
        if residue is None:
            return self
        size = residue + (self.coeffs.size - 1) * k + 1
        full = np.zeros(size, dtype=complex)
        full[residue::k] = self.coeffs
        return FockVector(coeffs=full, k=1, residue=None)

    def padded(self, size: int) -> np.ndarray:
        out = np.zeros(max(size, self.coeffs.size), dtype=complex)
        out[: self.coeffs.size] = self.coeffs
        return out


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on a rectangular (x, p) grid."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray = field(repr=False)
    convention: str = 'x,p quadratures; vacuum variance 1/2; unit integral'

    def integral(self) -> float:
        return float(trapezoid(trapezoid(self.values, self.p, axis=1), self.x))

    def position_marginal(self) -> np.ndarray:
        return trapezoid(self.values, self.p, axis=1)


def assemble_full(k: int, hpow: int, K: float, N: int) -> np.ndarray:
    """
    A_{k,h}(K) on the N-dimensional Fock truncation.

    Entries <phi_{n+k}|A|phi_n> = sqrt((n+1, k)) and diagonal K n^hpow.
    """
    matrix = np.diag(K * np.arange(N, dtype=float) ** hpow)
    for n in range(N - k):
        value = math.sqrt(pochhammer(n + 1, k))
        matrix[n + k, n] = value
        matrix[n, n + k] = value
    return matrix


def block_size(k: int, residue: int, N: int) -> int:
    """Number of Fock indices residue + r k below N."""
    return max(0, -(-(N - residue) // k))


def block_operator(k: int, hpow: int, m: int, K: float, N: int) -> np.ndarray:
    """Tridiagonal truncation of the m-th block at lambda = k^{h-k/2} K."""
    fam = squeezing_family(k, hpow, m)
    lam = k ** (hpow - k / 2.0) * K
    matrix = np.diag(lam * fam.f_values(N))
    off = fam.a_values(max(N - 1, 0))
    matrix += np.diag(off, 1) + np.diag(off, -1)
    return matrix


def interleave_blocks(k: int, hpow: int, K: float, N: int) -> np.ndarray:
    """Full N x N matrix reassembled from k^{k/2} times the residue blocks."""
    scale = k ** (k / 2.0)
    full = np.zeros((N, N))
    for m in range(k):
        size = block_size(k, m, N)
        if size == 0:
            continue
        idx = m + k * np.arange(size)
        full[np.ix_(idx, idx)] = scale * block_operator(k, hpow, m, K, size)
    return full


def evolve_truncated(fam: CoefficientFamily, lam: float, T: float, N: int,
                     time_scale: Optional[float] = None,
                     initial: Optional[np.ndarray] = None) -> FockVector:
    """
    exp(-i s J_N(lambda) T) applied to e_0 (or ``initial``), s = time_scale.

    Args:
        fam: Block family
        lam: Coupling (>= 0)
        T: Time
        N: Truncation size (>= 2); parity selects the limit at lambda = 0
        time_scale: Phase prefactor (defaults to fam.time_scale)
        initial: Optional initial block vector of length <= N

    Returns:
        FockVector in the block basis
    """
    if N < 2:
        raise ValueError(f"truncated evolution needs N >= 2, got {N}")
    scale = fam.time_scale if time_scale is None else time_scale
    energies, vectors = eigh_tridiagonal(lam * fam.f_values(N), fam.a_values(N - 1))
    start = np.zeros(N, dtype=complex)
    if initial is None:
        start[0] = 1.0
    else:
        start[: len(initial)] = initial
    coeffs = vectors @ (np.exp(-1j * scale * energies * T) * (vectors.T @ start))
    return FockVector(coeffs=coeffs, k=int(fam.params.get('k', 1)), residue=fam.params.get('m'))


def wigner(state: FockVector, extent: float = 6.0, points: int = 121) -> WignerGrid:
    """
    Wigner function of a pure state on [-extent, extent]^2.

    Uses the iterative Laguerre-free recursion for the Wigner functions of
    |m><n| with alpha = (x + i p)/sqrt(2), vacuum (1/pi) exp(-x^2 - p^2).
    """
    coeffs = state.to_fock().coeffs
    live = np.nonzero(np.abs(coeffs) > 1e-14)[0]
    cutoff = int(live[-1]) + 1 if live.size else 1
    coeffs = coeffs[:cutoff]

    x = np.linspace(-extent, extent, points)
    p = np.linspace(-extent, extent, points)
    alpha = (x[:, None] + 1j * p[None, :]) / math.sqrt(2.0)

    sqrt_n = np.sqrt(np.arange(cutoff))
    row = np.empty((cutoff,) + alpha.shape, dtype=complex)
    row[0] = np.exp(-2.0 * np.abs(alpha) ** 2) / math.pi
    for n in range(1, cutoff):
        row[n] = 2.0 * alpha * row[n - 1] / sqrt_n[n]

    conj = np.conj(coeffs)
    total = coeffs[0] * np.tensordot(conj, row, axes=(0, 0))
    for m in range(1, cutoff):
        shifted = np.zeros_like(row)
        shifted[1:] = sqrt_n[1:, None, None] * row[:-1]
        row = (2.0 * np.conj(alpha) * row - shifted) / sqrt_n[m]
        total += coeffs[m] * np.tensordot(conj, row, axes=(0, 0))

    return WignerGrid(x=x, p=p, values=total.real)


@dataclass(frozen=True)
class ExtensionState:
    """Result of spectral synthesis for an extension J_t."""

    vector: FockVector
    energies: np.ndarray
    weights: np.ndarray
    defect: float


@dataclass(frozen=True)
class FidelityRow:
    j: int
    lam: float
    K: float
    truncation: int
    fidelity: float


@dataclass(frozen=True)
class VacuumExperiment:
    t_target: ExtensionParam
    energy: float
    T: float
    rows: List[FidelityRow]
    limit_state: ExtensionState
    final_state: FockVector


@dataclass(frozen=True)
class ParityRow:
    dim: int
    parity: str
    distance_t0: float
    distance_tinf: float


class SqueezingService:
    """
    Service class for the squeezing application.

    Wraps truncated and extension dynamics of the m = 0 block with the
    configured windows, tolerances and grids.
    """

    def __init__(self, config: Dict[str, Any], spectral: SpectralService, limits: LimitsService):
        """
        Initialize squeezing service.

        Args:
            config: Dictionary from Config.get_solver_config()
                   - extension_window: half-width of the eigenvalue window of J_t
                   - completeness_tol: largest admissible completeness defect
                   - wigner_extent / wigner_points: phase space grid
            spectral: Configured SpectralService
            limits: Configured LimitsService
        """
        self.config = config
        self.spectral = spectral
        self.limits = limits
        self.window = float(config.get('extension_window', 100.0))
        self.completeness_tol = float(config.get('completeness_tol', 1e-2))
        self.wigner_extent = float(config.get('wigner_extent', 6.0))
        self.wigner_points = int(config.get('wigner_points', 121))
        self.truncation_max = int(config.get('truncation_max', 40000))
        self.logger = logging.getLogger(__name__)

    def extension_evolve(self, fam: CoefficientFamily, t: ExtensionParam, T: float,
                         window: Optional[float] = None, tol: Optional[float] = None,
                         size: int = 512, initial: Optional[np.ndarray] = None) -> ExtensionState:
        """
        Phi(t, T) = sum_E exp(-i s E T) <P0(E), v> P0(E) / ||P0(E)||^2.

        Args:
            fam: Block family in the limit-circle regime
            t: Extension parameter
            T: Time
            window: Half-width of the eigenvalue window
            tol: Largest admissible completeness defect
            size: Number of block coefficients returned
            initial: Initial block vector (defaults to e_0)

        Raises:
            CompletenessError: If |1 - sum 1/||P0(E)||^2| >= tol
        """
        window = window or self.window
        tol = tol or self.completeness_tol
        energies = np.array(self.spectral.extension_spectrum(fam, t, (-window, window)))
        norms, _ = self.spectral.eigenvector_norms(fam, energies)
        weights = 1.0 / norms
        defect = abs(1.0 - float(weights.sum()))
        if defect >= tol:
            raise CompletenessError(
                f"Eigenvalue window +-{window} misses weight {defect:.2e} of e_0; enlarge the window",
                {'window': window, 'defect': defect, 'eigenvalues': int(energies.size)},
            )

        if initial is None:
            start = np.zeros(1, dtype=complex)
            start[0] = 1.0
        else:
            start = np.asarray(initial, dtype=complex)
        length = max(size, start.size)
        P = orthogonal_polynomials(fam, 0.0, energies, length - 1).P.real
        overlaps = P[: start.size].T @ start
        phases = np.exp(-1j * fam.time_scale * energies * T)
        coeffs = P @ (phases * weights * overlaps)
        self.logger.info(f"Extension J_{t}: {energies.size} eigenvalues, completeness defect {defect:.2e}")
        vector = FockVector(coeffs=coeffs, k=int(fam.params.get('k', 1)), residue=fam.params.get('m'))
        return ExtensionState(vector=vector, energies=energies, weights=weights, defect=defect)

    def stabilized_evolution(self, fam: CoefficientFamily, lam: float, T: float, start: int,
                             tol: float = 1e-10) -> FockVector:
        """Truncated evolution with N doubled until successive states agree to tol."""
        N = max(start, 2)
        previous = evolve_truncated(fam, lam, T, N)
        last_change = None
        while 2 * N <= self.truncation_max:
            N *= 2
            current = evolve_truncated(fam, lam, T, N)
            change = float(np.linalg.norm(current.coeffs - previous.padded(N)))
            if has_settled(change, last_change, tol):
                return current
            previous, last_change = current, change
        raise ConvergenceError(f"Truncated evolution at lambda={lam:.3g} did not stabilize",
                               {'lambda': lam, 'T': T})

    @staticmethod
    def fidelity(a: FockVector, b: FockVector) -> float:
        size = max(a.coeffs.size, b.coeffs.size)
        va, vb = a.padded(size), b.padded(size)
        return float(abs(np.vdot(va, vb)) / (np.linalg.norm(va) * np.linalg.norm(vb)))

    def default_energy(self, fam: CoefficientFamily, t: ExtensionParam) -> float:
        """Extension eigenvalue of smallest modulus in the configured window."""
        energies = self.spectral.extension_spectrum(fam, t, (-self.window, self.window))
        if not energies:
            raise ConvergenceError(f"No eigenvalue of J_{t} in +-{self.window}", {'t': str(t)})
        return float(min(energies, key=abs))

    def vacuum_experiment(self, k: int, hpow: int, t_target: ExtensionParam, T: float, count: int,
                          E: Optional[float] = None) -> VacuumExperiment:
        """
        Fidelities |<Phi_k(t, T), Psi_{k,h}(K_j, T)>| along a selected sequence.

        K_j = k^{k/2 - h} lambda_j inverts lambda = k^{h - k/2} K.
        """
        fam = squeezing_family(k, hpow, 0)
        energy = self.default_energy(fam, t_target) if E is None else float(E)
        limit = self.extension_evolve(fam, t_target, T)
        sequence = self.limits.select_sequence(fam, t_target, energy, count)

        rows = []
        state = limit.vector
        for element in sequence:
            state = self.stabilized_evolution(fam, element.lam, T, element.truncation)
            K = k ** (k / 2.0 - hpow) * element.lam
            rows.append(FidelityRow(j=element.j, lam=element.lam, K=K, truncation=state.coeffs.size,
                                    fidelity=self.fidelity(limit.vector, state)))
            self.logger.info(f"Vacuum fidelity at K_{element.j}={K:.4e}: {rows[-1].fidelity:.6f}")
        return VacuumExperiment(t_target=t_target, energy=energy, T=T, rows=rows,
                                limit_state=limit, final_state=state)

    def parity_limits(self, k: int, hpow: int, T: float, dims: Sequence[int]) -> List[ParityRow]:
        """Distances of lambda = 0 truncated evolutions to Phi_k(0, T) and Phi_k(inf, T)."""
        fam = squeezing_family(k, hpow, 0)
        size = max(512, 2 * max(dims))
        phi0 = self.extension_evolve(fam, ExtensionParam(0.0), T, size=size).vector
        phi_inf = self.extension_evolve(fam, ExtensionParam.infinity(), T, size=size).vector
        rows = []
        for dim in dims:
            state = evolve_truncated(fam, 0.0, T, dim)
            padded = state.padded(size)
            rows.append(ParityRow(
                dim=dim,
                parity='even' if dim % 2 == 0 else 'odd',
                distance_t0=float(np.linalg.norm(padded - phi0.padded(size))),
                distance_tinf=float(np.linalg.norm(padded - phi_inf.padded(size))),
            ))
        return rows

    def extension_direct_sum(self, k: int, hpow: int, ts: Sequence[ExtensionParam], T: float,
                             N: int, state: Optional[np.ndarray] = None) -> FockVector:
        """
        Evolve a Fock vector (default vacuum) under the direct sum of per-block extensions.

        Blocks whose initial component vanishes stay zero.
        """
        if len(ts) != k:
            raise ValueError(f"need one extension parameter per residue, got {len(ts)} for k={k}")
        initial = np.zeros(N, dtype=complex)
        if state is None:
            initial[0] = 1.0
        else:
            initial[: len(state)] = state
        out = np.zeros(N, dtype=complex)
        for m in range(k):
            part = initial[m::k]
            if not np.any(part):
                continue
            fam = squeezing_family(k, hpow, m)
            evolved = self.extension_evolve(fam, ts[m], T, size=block_size(k, m, N), initial=part)
            out[m::k] = evolved.vector.coeffs[: block_size(k, m, N)]
        return FockVector(coeffs=out)

    def wigner(self, state: FockVector, extent: Optional[float] = None,
               points: Optional[int] = None) -> WignerGrid:
        return wigner(state, extent or self.wigner_extent, points or self.wigner_points)
