"""Tests for the Airy functions against scipy.special.airy."""

import math

import numpy as np
import pytest
from scipy import special

from services.special_functions import (
    AI0,
    BI0,
    SWITCH,
    airy_ai,
    airy_pair,
    hankel_helper_abs,
    rotated_airy_abs,
)


def _close(ours, ref, rtol, scale):
    np.testing.assert_array_less(np.abs(ours - ref), rtol * np.maximum(np.abs(ref), scale) + 1e-300)


class TestAgainstScipy:

    def test_oscillatory_side(self):
        x = np.linspace(-30.0, 0.0, 301)
        ai, bi, aip, bip = airy_pair(x)
        ref = special.airy(x)
        envelope = np.abs(x) ** 0.25 / math.sqrt(math.pi) + 1.0
        _close(ai, ref[0], 1e-9, 1.0 / envelope)
        _close(bi, ref[2], 1e-9, 1.0 / envelope)
        _close(aip, ref[1], 1e-9, envelope)
        _close(bip, ref[3], 1e-9, envelope)

    def test_exponential_side(self):
        x = np.linspace(0.0, 25.0, 251)
        ai, bi, aip, bip = airy_pair(x)
        ref = special.airy(x)
        np.testing.assert_allclose(ai, ref[0], rtol=1e-9)
        np.testing.assert_allclose(aip, ref[1], rtol=1e-9)
        np.testing.assert_allclose(bi, ref[2], rtol=1e-9)
        np.testing.assert_allclose(bip, ref[3], rtol=1e-9)

    def test_scalar_input(self):
        value = airy_ai(1.5)
        assert isinstance(value, float)
        assert value == pytest.approx(special.airy(1.5)[0], rel=1e-11)


class TestIdentities:

    def test_origin_values(self):
        ai, bi, aip, bip = airy_pair(0.0)
        assert ai == pytest.approx(0.355028053887817239, abs=1e-12)
        assert bi == pytest.approx(0.614926627446000736, abs=1e-12)
        assert bi == pytest.approx(math.sqrt(3.0) * ai, rel=1e-13)
        assert AI0 == pytest.approx(ai, abs=1e-15)
        assert BI0 == pytest.approx(bi, abs=1e-15)

    def test_wronskian(self):
        x = np.linspace(-20.0, 6.0, 50)
        ai, bi, aip, bip = airy_pair(x)
        w = ai * bip - aip * bi
        np.testing.assert_allclose(w, 1.0 / math.pi, atol=1e-10)

    @pytest.mark.parametrize('seam', [-SWITCH, SWITCH])
    def test_branch_seam(self, seam):
        inner = np.array(airy_pair(seam * (1 - 1e-13)))
        outer = np.array(airy_pair(seam))
        np.testing.assert_allclose(inner, outer, rtol=1e-10, atol=1e-10)

    def test_airy_equation(self):
        x = np.linspace(-10.0, 5.0, 31)
        step = 1e-3
        ai_minus, _, _, _ = airy_pair(x - step)
        ai_mid, _, _, _ = airy_pair(x)
        ai_plus, _, _, _ = airy_pair(x + step)
        second = (ai_plus - 2 * ai_mid + ai_minus) / step ** 2
        np.testing.assert_allclose(second, x * ai_mid, atol=1e-5)


class TestModuli:

    def test_rotated_airy_modulus(self):
        x = np.linspace(-12.0, 4.0, 40)
        ref = special.airy(x)
        expected = 0.5 * np.abs(ref[0] + 1j * ref[2])
        np.testing.assert_allclose(rotated_airy_abs(x), expected, rtol=1e-9)

    def test_rotated_airy_matches_complex_rotation(self):
        x = np.array([-3.0, -0.5, 0.7, 2.0])
        rotated = special.airy(x * np.exp(-2j * np.pi / 3))[0]
        np.testing.assert_allclose(rotated_airy_abs(x), np.abs(rotated), rtol=1e-9)

    def test_hankel_helper_branches(self):
        assert hankel_helper_abs(0.0) == pytest.approx(2.0 * AI0, rel=1e-13)
        assert hankel_helper_abs(-1e-14) == pytest.approx(2.0 * AI0, rel=1e-12)
        assert hankel_helper_abs(2.0) == pytest.approx(2.0 * special.airy(2.0)[0], rel=1e-10)
        ref = special.airy(-4.0)
        assert hankel_helper_abs(-4.0) == pytest.approx(math.hypot(ref[0], ref[2]), rel=1e-10)
