import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from relscatter.errors import PoleError
from relscatter.special import gamma, gamma_ratio, log_gamma

# arbitrary-precision reference values of log Gamma (principal branch)
FROZEN = [
    (0.5, 0.5723649429247001 + 0j),
    (-0.5, 1.2655121234846454 - 3.141592653589793j),
    (3 + 4j, -1.7566267846037842 + 4.742664438034658j),
    (-2.5 + 0.1j, -0.10314924404281921 - 9.314444268359837j),
    (-7.3 - 2j, -13.32773204758136 + 20.37340030917353j),
    (20 - 30j, 21.345074493863446 - 96.71434768953618j),
    (1e-3j, 6.907754456515375 - 1.5713735420591126j),
]


@pytest.mark.parametrize("z,expected", FROZEN)
def test_frozen_values(z, expected):
    assert abs(log_gamma(z) - expected) <= 1e-13 * max(1.0, abs(expected))


def test_integers_are_factorials():
    for n in range(1, 20):
        assert gamma(n).real == pytest.approx(math.factorial(n - 1), rel=1e-13)


def test_half_integer():
    assert gamma(0.5).real == pytest.approx(math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("z", [0, -1, -2, -10])
def test_poles(z):
    with pytest.raises(PoleError):
        log_gamma(z)
    with pytest.raises(PoleError):
        gamma_ratio([1.0], [z])


def test_vectorised_matches_scalar():
    z = np.array([0.3 + 2j, -4.2 + 0.5j, 12.0 - 1j])
    out = log_gamma(z)
    for zi, oi in zip(z, out):
        assert out.shape == (3,)
        assert oi == log_gamma(complex(zi))


def test_gamma_ratio_simple():
    # Gamma(5) Gamma(0.5) / Gamma(3) = 24 sqrt(pi) / 2
    assert gamma_ratio([5, 0.5], [3]).real == pytest.approx(12 * math.sqrt(math.pi), rel=1e-13)


def test_mpmath_random_disc():
    rng = np.random.default_rng(7)
    r = 50 * np.sqrt(rng.uniform(0, 1, 200))
    th = rng.uniform(0, 2 * np.pi, 200)
    z = r * np.exp(1j * th)
    got = np.exp(log_gamma(z))
    for zi, gi in zip(z, got):
        ref = complex(mpmath.gamma(mpmath.mpc(zi.real, zi.imag)))
        assert abs(gi - ref) <= 1e-12 * abs(ref)


@settings(max_examples=300, deadline=None)
@given(st.floats(-30, 30), st.floats(-30, 30))
def test_recurrence(x, y):
    z = complex(x, y)
    assume(abs(z) > 1e-3 and not (y == 0 and x <= 0 and x == round(x)))
    # the branch is continuous: log Gamma(z + 1) = log Gamma(z) + log z
    lhs = log_gamma(z + 1)
    rhs = log_gamma(z) + np.log(z)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@settings(max_examples=200, deadline=None)
@given(st.floats(-20, 20), st.floats(0.01, 20))
def test_conjugation_symmetry(x, y):
    z = complex(x, y)
    assert abs(log_gamma(z.conjugate()) - np.conj(log_gamma(z))) <= 1e-12 * max(1.0, abs(log_gamma(z)))
