"""
Airy-type special functions on the real axis.

Ai, Bi and their derivatives from Maclaurin data at the origin carried
over a node table by local Taylor expansions (|x| < 8), and from the
asymptotic expansions beyond. Moduli of the rotated Airy function Ai_1
and of the Hankel-type helper w_1 follow from Ai and Bi.

WHY: The turning-point diagnostics need Airy values deep into both the
oscillatory and the exponential side with controlled accuracy; scipy is
kept as the test oracle.
"""

import math
from functools import lru_cache
from typing import Tuple

import numpy as np

SWITCH = 8.0
NODE_STEP = 0.5
TAYLOR_TERMS = 60
ASYMPTOTIC_TERMS = 40

AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))
BI0 = 1.0 / (3.0 ** (1.0 / 6.0) * math.gamma(2.0 / 3.0))
BIP0 = 3.0 ** (1.0 / 6.0) / math.gamma(1.0 / 3.0)

_SQRT_PI = math.sqrt(math.pi)


def _taylor_coefficients(x0: float, y: float, dy: float, terms: int = TAYLOR_TERMS) -> np.ndarray:
    """Coefficients of y(x0 + t) for y'' = x y."""
    c = np.zeros(terms)
    c[0], c[1] = y, dy
    c[2] = x0 * c[0] / 2.0
    for k in range(1, terms - 2):
        c[k + 2] = (x0 * c[k] + c[k - 1]) / ((k + 2) * (k + 1))
    return c


def _taylor_eval(coeffs: np.ndarray, t) -> Tuple[np.ndarray, np.ndarray]:
    """Value and derivative of a Taylor expansion; ``coeffs`` has shape (..., terms)."""
    terms = coeffs.shape[-1]
    value = np.zeros_like(t, dtype=float)
    deriv = np.zeros_like(t, dtype=float)
    for k in range(terms - 1, -1, -1):
        deriv = deriv * t + value
        value = value * t + coeffs[..., k]
    return value, deriv


@lru_cache(maxsize=None)
def _asymptotic_coefficients(terms: int = ASYMPTOTIC_TERMS) -> Tuple[np.ndarray, np.ndarray]:
    u = np.ones(terms)
    v = np.ones(terms)
    for k in range(1, terms):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        v[k] = -u[k] * (6 * k + 1) / (6 * k - 1)
    return u, v


def _truncated_series(coeffs: np.ndarray, inv_zeta: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Sum of signs_k coeffs_k inv_zeta^k truncated at the smallest term."""
    total = np.zeros_like(inv_zeta)
    last = np.full_like(inv_zeta, np.inf)
    active = np.ones_like(inv_zeta, dtype=bool)
    power = np.ones_like(inv_zeta)
    for k in range(coeffs.size):
        term = signs[k] * coeffs[k] * power
        size = np.abs(term)
        active &= size < last
        total = np.where(active, total + term, total)
        last = np.where(active, size, last)
        power = power * inv_zeta
    return total


def _airy_asymptotic(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Asymptotic expansions of (Ai, Bi, Ai', Bi') for |x| large."""
    u, v = _asymptotic_coefficients()
    terms = u.size
    y = np.abs(x)
    zeta = 2.0 / 3.0 * y ** 1.5
    inv = 1.0 / zeta
    quarter = y ** 0.25
    alternating = (-1.0) ** np.arange(terms)
    plain = np.ones(terms)

    ai = np.empty_like(y)
    bi = np.empty_like(y)
    aip = np.empty_like(y)
    bip = np.empty_like(y)

    pos = x > 0
    if pos.any():
        z, s, q = zeta[pos], inv[pos], quarter[pos]
        with np.errstate(over='ignore'):
            decay = np.exp(-z)
            growth = np.exp(z)
        ai[pos] = decay / (2 * _SQRT_PI * q) * _truncated_series(u, s, alternating)
        aip[pos] = -q * decay / (2 * _SQRT_PI) * _truncated_series(v, s, alternating)
        with np.errstate(over='ignore', invalid='ignore'):
            bi[pos] = growth / (_SQRT_PI * q) * _truncated_series(u, s, plain)
            bip[pos] = q * growth / _SQRT_PI * _truncated_series(v, s, plain)

    neg = ~pos
    if neg.any():
        z, s, q = zeta[neg], inv[neg], quarter[neg]
        s2 = s * s
        half = (-1.0) ** np.arange(terms // 2)
        u_even = _truncated_series(u[0::2], s2, half)
        u_odd = s * _truncated_series(u[1::2], s2, half)
        v_even = _truncated_series(v[0::2], s2, half)
        v_odd = s * _truncated_series(v[1::2], s2, half)
        c = np.cos(z - math.pi / 4)
        sn = np.sin(z - math.pi / 4)
        ai[neg] = (c * u_even + sn * u_odd) / (_SQRT_PI * q)
        bi[neg] = (-sn * u_even + c * u_odd) / (_SQRT_PI * q)
        aip[neg] = q * (sn * v_even - c * v_odd) / _SQRT_PI
        bip[neg] = q * (c * v_even + sn * v_odd) / _SQRT_PI

    return ai, bi, aip, bip


@lru_cache(maxsize=None)
def _node_table() -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Taylor coefficients of Ai and Bi at nodes -8, -7.5, ..., 8.

    Ai is carried from the origin towards -8 and from the asymptotic data at
    +8 back towards the origin; Bi is carried from the origin both ways.
    Each solution is stepped only in a direction where it does not decay.
    """
    count = int(round(SWITCH / NODE_STEP))
    nodes = NODE_STEP * np.arange(-count, count + 1)
    centre = count
    ai = np.zeros((nodes.size, 2))
    bi = np.zeros((nodes.size, 2))

    def carry(table, start, stop, step, y, dy):
        table[start] = (y, dy)
        index = start
        while index != stop:
            coeffs = _taylor_coefficients(nodes[index], *table[index])
            value, deriv = _taylor_eval(coeffs, np.array(step * NODE_STEP))
            index += step
            table[index] = (float(value), float(deriv))

    carry(ai, centre, 0, -1, AI0, AIP0)
    a_end, _, ap_end, _ = _airy_asymptotic(np.array([SWITCH]))
    carry(ai, nodes.size - 1, centre + 1, -1, float(a_end[0]), float(ap_end[0]))
    ai[centre] = (AI0, AIP0)
    carry(bi, centre, 0, -1, BI0, BIP0)
    carry(bi, centre, nodes.size - 1, 1, BI0, BIP0)

    ai_coeffs = np.array([_taylor_coefficients(x0, y, dy) for x0, (y, dy) in zip(nodes, ai)])
    bi_coeffs = np.array([_taylor_coefficients(x0, y, dy) for x0, (y, dy) in zip(nodes, bi)])
    return nodes, ai_coeffs, bi_coeffs


def _airy_taylor(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Node-table evaluation; points beyond the table expand around the end node."""
    nodes, ai_coeffs, bi_coeffs = _node_table()
    index = np.clip(np.rint((x - nodes[0]) / NODE_STEP).astype(int), 0, nodes.size - 1)
    t = x - nodes[index]
    ai, aip = _taylor_eval(ai_coeffs[index], t)
    bi, bip = _taylor_eval(bi_coeffs[index], t)
    return ai, bi, aip, bip


def airy_pair(x):
    """
    Airy functions (Ai, Bi, Ai', Bi') on the real axis.

    Args:
        x: Scalar or array of real points

    Returns:
        Tuple of four values with the shape of ``x``
    """
    arr = np.asarray(x, dtype=float)
    flat = arr.reshape(-1)
    out = [np.empty_like(flat) for _ in range(4)]

    far = np.abs(flat) >= SWITCH
    if far.any():
        for target, values in zip(out, _airy_asymptotic(flat[far])):
            target[far] = values
    near = ~far
    if near.any():
        for target, values in zip(out, _airy_taylor(flat[near])):
            target[near] = values

    if arr.ndim == 0:
        return tuple(float(values[0]) for values in out)
    return tuple(values.reshape(arr.shape) for values in out)


def airy_ai(x):
    """Ai alone."""
    return airy_pair(x)[0]


def rotated_airy_abs(x):
    """|Ai_{+-1}(x)| = (1/2) sqrt(Ai(x)^2 + Bi(x)^2)."""
    ai, bi, _, _ = airy_pair(x)
    return 0.5 * np.hypot(ai, bi)


def hankel_helper_abs(x):
    """
    |w_1(x)|: sqrt(Ai^2 + Bi^2) for x < 0 and 2 Ai(x) for x >= 0.

    Both branches equal 2 Ai(0) at the origin since Bi(0) = sqrt(3) Ai(0).
    """
    ai, bi, _, _ = airy_pair(x)
    value = np.where(np.asarray(x) < 0, np.hypot(ai, bi), 2.0 * ai)
    return float(value) if np.ndim(value) == 0 else value
