"""
Coefficient Service Module for Jacobi operator families.

This service defines the coefficient sequences (a_n) and (f_n) of the
family J(lambda), constructs the higher-order squeezing families, loads
user families from definition files and validates the standing growth
hypothesis on a finite window.

WHY: Every other service consumes the same immutable family object, so
exponents, corrections and cached prefixes live in exactly one place.
"""

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional, Sequence

import numpy as np

from services.errors import FamilyDefinitionError


def pochhammer(x: int, s: int) -> int:
    """
    Rising factorial (x, s) = x (x+1) ... (x+s-1).

    Python integers are arbitrary width, so the product itself cannot
    overflow; converting a huge result to float is checked by callers.

    Args:
        x: Non-negative integer base
        s: Non-negative integer length

    Returns:
        Exact integer value; 1 for s = 0

    Raises:
        ValueError: If x or s is negative or not an integer
    """
    if isinstance(x, bool) or isinstance(s, bool) or not isinstance(x, int) or not isinstance(s, int):
        raise ValueError(f"pochhammer expects integers, got x={x!r}, s={s!r}")
    if x < 0 or s < 0:
        raise ValueError(f"pochhammer expects non-negative arguments, got x={x}, s={s}")
    return math.prod(range(x, x + s))


def pochhammer_float(x: int, s: int) -> float:
    """
    Pochhammer symbol as a float, with overflow reported.

    Raises:
        OverflowError: If the exact value exceeds the double range
    """
    value = pochhammer(x, s)
    try:
        return float(value)
    except OverflowError as e:
        raise OverflowError(
            f"pochhammer({x}, {s}) has {value.bit_length()} bits and exceeds double range"
        ) from e


@dataclass(frozen=True)
class CoefficientFamily:
    """
    Off-diagonal sequence a_n > 0 and diagonal profile f_n >= 0.

    ``a_func`` and ``f_func`` map integer index arrays to float arrays.
    Prefix arrays are memoized under a lock, so one family can be shared
    by concurrent sweeps.
    """

    name: str
    a_func: Callable[[np.ndarray], np.ndarray]
    f_func: Callable[[np.ndarray], np.ndarray]
    alpha: float
    beta: float
    c_a: float
    c_f: float
    params: Mapping[str, Any] = field(default_factory=dict)
    _cache: Dict[str, np.ndarray] = field(default_factory=dict, compare=False, repr=False)
    _lock: Any = field(default_factory=threading.Lock, compare=False, repr=False)

    @property
    def delta(self) -> float:
        return self.beta - self.alpha

    @property
    def time_scale(self) -> float:
        """Prefactor k^{k/2} of the block decomposition (1 for other families)."""
        k = self.params.get('k')
        return float(k) ** (float(k) / 2.0) if k else 1.0

    def a(self, n):
        return self.a_func(np.asarray(n, dtype=np.int64))

    def f(self, n):
        return self.f_func(np.asarray(n, dtype=np.int64))

    def a_values(self, count: int) -> np.ndarray:
        """Return a_0 ... a_{count-1} from the memoized prefix."""
        return self._prefix('a', self.a_func, count)

    def f_values(self, count: int) -> np.ndarray:
        """Return f_0 ... f_{count-1} from the memoized prefix."""
        return self._prefix('f', self.f_func, count)

    def _prefix(self, key: str, func: Callable, count: int) -> np.ndarray:
        with self._lock:
            cached = self._cache.get(key)
            if cached is None or cached.size < count:
                size = max(count, 2 * (cached.size if cached is not None else 0), 64)
                values = np.asarray(func(np.arange(size, dtype=np.int64)), dtype=float)
                values.setflags(write=False)
                self._cache[key] = values
                cached = values
        return cached[:count]

    def metadata(self) -> Dict[str, Any]:
        """Family parameters for artifact sidecars."""
        return {
            'name': self.name,
            'alpha': self.alpha,
            'beta': self.beta,
            'c_a': self.c_a,
            'c_f': self.c_f,
            'delta': self.delta,
            'params': dict(self.params),
        }


def squeezing_family(k: int, hpow: int, m: int = 0) -> CoefficientFamily:
    """
    Jacobi block of the higher-order squeezing operator on residue class m.

    a_n = k^{-k/2} sqrt((m+nk+1, k)) and f_n = k^{-hpow} (m+nk)^hpow, with
    growth exponents alpha = k/2, beta = hpow and first-order corrections
    c_a = m/2 + (k+1)/4, c_f = hpow m / k.

    Args:
        k: Squeezing order (k >= 3)
        hpow: Power of the number operator (2 hpow > k)
        m: Residue class in [0, k)

    Returns:
        The coefficient family of the m-th block

    Raises:
        FamilyDefinitionError: If the parameters violate the growth hypothesis
    """
    if k < 3:
        raise FamilyDefinitionError(f"squeezing order k must be >= 3, got {k}")
    if 2 * hpow <= k:
        raise FamilyDefinitionError(f"need 2*hpow > k, got hpow={hpow}, k={k}")
    if not 0 <= m < k:
        raise FamilyDefinitionError(f"residue m must lie in [0, {k}), got {m}")

    scale = float(k) ** (-k / 2.0)
    offsets = np.arange(1, k + 1, dtype=float)

    def a_func(n):
        base = m + np.asarray(n, dtype=float) * k
        product = np.prod(np.add.outer(base, offsets), axis=-1)
        return scale * np.sqrt(product)

    def f_func(n):
        base = m + np.asarray(n, dtype=float) * k
        return (base / k) ** hpow

    return CoefficientFamily(
        name=f"squeezing(k={k}, h={hpow}, m={m})",
        a_func=a_func,
        f_func=f_func,
        alpha=k / 2.0,
        beta=float(hpow),
        c_a=m / 2.0 + (k + 1) / 4.0,
        c_f=hpow * m / float(k),
        params={'kind': 'squeezing', 'k': k, 'hpow': hpow, 'm': m},
    )


def explicit_family(
    alpha: float,
    beta: float,
    c_a: float,
    c_f: float,
    a_prefix: Sequence[float],
    f_prefix: Sequence[float],
    name: str = 'explicit',
) -> CoefficientFamily:
    """
    Family given by tabulated prefixes and the two-term asymptotic law.

    Beyond the prefixes a_n = n^alpha (1 + c_a/n) and f_n = n^beta (1 + c_f/n).
    """
    a_head = np.asarray(a_prefix, dtype=float)
    f_head = np.asarray(f_prefix, dtype=float)
    if a_head.size == 0:
        raise FamilyDefinitionError("explicit family needs at least a_0 in a_prefix")
    if f_head.size == 0:
        f_head = np.zeros(1)

    def tabulated(head, exponent, correction):
        def func(n):
            n = np.asarray(n, dtype=np.int64)
            nf = np.maximum(n, 1).astype(float)
            law = nf ** exponent * (1.0 + correction / nf)
            return np.where(n < head.size, head[np.minimum(n, head.size - 1)], law)
        return func

    return CoefficientFamily(
        name=name,
        a_func=tabulated(a_head, alpha, c_a),
        f_func=tabulated(f_head, beta, c_f),
        alpha=float(alpha),
        beta=float(beta),
        c_a=float(c_a),
        c_f=float(c_f),
        params={'kind': 'explicit', 'a_prefix': a_head.tolist(), 'f_prefix': f_head.tolist()},
    )


def _parse_list(raw: str) -> list:
    return [float(item) for item in raw.replace(';', ',').split(',') if item.strip()]


def family_from_definition(definition: Mapping[str, str]) -> CoefficientFamily:
    """
    Build a family from a parsed definition mapping.

    Args:
        definition: Keys from a family file (kind plus kind-specific keys)

    Returns:
        Constructed CoefficientFamily

    Raises:
        FamilyDefinitionError: For unknown kinds, missing or malformed keys
    """
    kind = definition.get('kind', '').strip().lower()
    try:
        if kind == 'squeezing':
            return squeezing_family(
                int(definition['k']),
                int(definition.get('hpow', definition.get('h', ''))),
                int(definition.get('m', 0)),
            )
        if kind == 'explicit':
            return explicit_family(
                alpha=float(definition['alpha']),
                beta=float(definition['beta']),
                c_a=float(definition.get('c_a', 0.0)),
                c_f=float(definition.get('c_f', 0.0)),
                a_prefix=_parse_list(definition['a_prefix']),
                f_prefix=_parse_list(definition.get('f_prefix', '')),
                name=definition.get('name', 'explicit'),
            )
    except KeyError as e:
        raise FamilyDefinitionError(f"Family definition of kind '{kind}' misses key {e}") from e
    except ValueError as e:
        if isinstance(e, FamilyDefinitionError):
            raise
        raise FamilyDefinitionError(f"Malformed family definition: {e}") from e

    raise FamilyDefinitionError(f"Unknown family kind: '{kind}' (expected squeezing or explicit)")


def ratio_sequence(fam: CoefficientFamily, count: int) -> np.ndarray:
    """d_r = f_r / a_r for r < count."""
    return fam.f_values(count) / fam.a_values(count)


@dataclass
class HypothesisReport:
    """Pass/fail flags of the finite-window growth hypothesis checks."""

    window: int
    positivity: bool
    exponent_gate: bool
    a_asymptotics: bool
    f_asymptotics: bool
    variation: bool
    carleman_convergent: bool
    ratio_increasing: bool
    variation_constant: float
    a_residual_slope: Optional[float]
    f_residual_slope: Optional[float]
    inverse_a_partial_sum: float
    inverse_a_tail_estimate: float

    @property
    def all_passed(self) -> bool:
        return all([
            self.positivity,
            self.exponent_gate,
            self.a_asymptotics,
            self.f_asymptotics,
            self.variation,
            self.carleman_convergent,
        ])

    def to_dict(self) -> Dict[str, Any]:
        data = dict(self.__dict__)
        data['all_passed'] = self.all_passed
        return data


def _second_order_residual(values, n, exponent, correction):
    """Residual |x_n n^{-e} - 1 - c/n|, its n^2-scaled growth test and log slope."""
    residual = np.abs(values * n ** (-exponent) - 1.0 - correction / n)
    if residual.max() < 1e-13:
        return True, None

    scaled = n * n * residual
    size = n.size
    lower = scaled[: size // 3]
    upper = scaled[size // 3:]
    bounded = bool(upper.max() <= 1.5 * lower.max() + 1e-9)

    usable = residual > 1e-15
    slope = None
    if usable.sum() >= 2:
        slope = float(np.polyfit(np.log(n[usable]), np.log(residual[usable]), 1)[0])
    return bounded, slope


def check_hypothesis(fam: CoefficientFamily, window: int) -> HypothesisReport:
    """
    Finite-window checks of positivity, growth laws, variation and Carleman.

    Args:
        fam: Family under test
        window: Number of indices N (>= 10)

    Returns:
        HypothesisReport with one flag per condition
    """
    if window < 10:
        raise ValueError(f"validation window must be >= 10, got {window}")

    a = fam.a_values(window + 1)
    f = fam.f_values(window + 1)
    positivity = bool(np.all(a > 0) and np.all(f >= 0))
    exponent_gate = fam.alpha > 4.0 / 3.0 and fam.beta > fam.alpha

    # asymptotic laws on the upper three quarters of the window
    start = max(2, window // 4)
    n = np.arange(start, window + 1, dtype=float)
    a_ok, a_slope = _second_order_residual(a[start:], n, fam.alpha, fam.c_a)
    f_ok, f_slope = _second_order_residual(f[start:], n, fam.beta, fam.c_f)

    d = f / a
    total_variation = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(d)))])
    excess = total_variation - d
    half = excess.size // 2
    variation_ok = bool(excess[half:].max() <= excess[:half].max() + 1e-9 * max(1.0, abs(d).max()))

    partial_sum = float(np.sum(1.0 / a[:window]))
    if fam.alpha > 1:
        tail = float(window ** (1.0 - fam.alpha) / (fam.alpha - 1.0))
    else:
        tail = float('inf')

    return HypothesisReport(
        window=window,
        positivity=positivity,
        exponent_gate=bool(exponent_gate),
        a_asymptotics=bool(a_ok and fam.alpha > 4.0 / 3.0),
        f_asymptotics=bool(f_ok and fam.beta > fam.alpha),
        variation=variation_ok,
        carleman_convergent=bool(fam.alpha > 1 and a_ok),
        ratio_increasing=bool(np.all(np.diff(d) > 0)),
        variation_constant=float(excess.max()),
        a_residual_slope=a_slope,
        f_residual_slope=f_slope,
        inverse_a_partial_sum=partial_sum,
        inverse_a_tail_estimate=tail,
    )


class CoefficientService:
    """
    Service class for coefficient family construction and validation.

    Wraps the pure family builders with configuration defaults and logging.
    """

    def __init__(self, config: Dict[str, Any]):
        """
        Initialize coefficient service with solver settings.

        Args:
            config: Dictionary from Config.get_solver_config()
                   - hypothesis_window: default validation window length
        """
        self.config = config
        self.window = int(config.get('hypothesis_window', 400))
        self.logger = logging.getLogger(__name__)

    def build_family(self, definition: Mapping[str, str]) -> CoefficientFamily:
        """
        Construct a family from a definition mapping.

        Args:
            definition: Parsed family file contents

        Returns:
            CoefficientFamily
        """
        family = family_from_definition(definition)
        self.logger.info(
            f"Loaded family {family.name}: alpha={family.alpha}, beta={family.beta}, "
            f"c_a={family.c_a}, c_f={family.c_f}"
        )
        return family

    def validate_hypothesis(self, fam: CoefficientFamily, window: Optional[int] = None) -> HypothesisReport:
        """
        Validate the growth hypothesis of a family on a finite window.

        Args:
            fam: Family to validate
            window: Window length N (defaults to the configured window)

        Returns:
            HypothesisReport
        """
        report = check_hypothesis(fam, window or self.window)
        failed = [key for key, value in report.to_dict().items()
                  if isinstance(value, bool) and not value and key != 'ratio_increasing']
        if failed:
            self.logger.warning(f"Hypothesis checks failed for {fam.name}: {', '.join(failed)}")
        else:
            self.logger.info(f"All hypothesis checks passed for {fam.name} on window {report.window}")
        return report
