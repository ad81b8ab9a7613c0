import math
from fractions import Fraction as F

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from warpspec.conditions import HypothesisConstants
from warpspec.errors import ParameterError
from warpspec.thresholds import (
    beta,
    decay_constants,
    eta1,
    lambda1,
    lambda1_terms,
    star8_rhs,
    threshold_bundle,
    y1,
)

# The worked example used throughout: n=2, gamma=1, a=b=0.05, A0=1, K3=b1=B0=0.1
EX = dict(gamma=1.0, a=0.05, b=0.05, A0=1.0, B0=0.1, K3=0.1, b1=0.1, n=2)


def test_y1_examples():
    assert y1(1, 0.05, 0.05, 1, 2) == pytest.approx(1.0)
    assert y1(1, 0.05, 0.05, 0.6, 2) == pytest.approx(1.0)
    # exact: min{1, 37/20}
    assert y1(F(1), F(1, 20), F(1, 20), F(1), 2) == 1


def test_y1_symmetric_reduces_to_gamma():
    assert y1(F(3, 2), F(1, 10), F(1, 10), F(5), 3) == F(3, 2)


def test_y1_preconditions():
    with pytest.raises(ParameterError):
        y1(0.05, 0.05, 0.05, 1, 2)  # gamma too small
    with pytest.raises(ParameterError):
        y1(1, 0.5, 0.5, 0.6, 2)  # gap fails


def test_lambda1_example():
    term_k3, term8 = lambda1_terms(**EX)
    # independent exact arithmetic: 0.01 / 0.95^2 and (0.41 / 14.4)^2
    assert term_k3 == pytest.approx(float(F(1, 100) / F(95, 100) ** 2), rel=1e-14)
    assert term8 == pytest.approx(float((F(41, 100) / F(144, 10)) ** 2), rel=1e-14)
    assert term_k3 == pytest.approx(0.011080, abs=5e-7)
    assert term8 == pytest.approx(0.0008107, abs=5e-8)
    assert lambda1(**EX) == term_k3


def test_lambda1_exact_rationals():
    ex = {k: (F(str(v)) if isinstance(v, float) else v) for k, v in EX.items()}
    assert lambda1(**ex) == F(4, 361)


def test_lambda1_gamma_to_infinity():
    for g in (1e3, 1e6):
        term_k3, term8 = lambda1_terms(**{**EX, "gamma": g})
        assert term_k3 < 1e-4 * (1e3 / g) ** 0.5
        assert lambda1(**{**EX, "gamma": g}) == pytest.approx(star8_rhs(0.05, 0.05, 1, 0.1, 0.1, 2))


def test_lambda1_sequence_to_zero():
    vals = []
    for m in range(21):
        s = 0.1 / 2**m
        vals.append(lambda1(**{**EX, "K3": s, "b1": s, "B0": s}))
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-10


def test_lambda1_bad_denominator():
    # gamma slightly above (a_hat+b_hat)/2 but y1 - a_hat would be 0 when b > a.
    with pytest.raises(ParameterError):
        lambda1(0.3, 0.3, 0.3, 0.6, 0.1, 0.1, 0.1, 2)


def test_beta_examples():
    assert beta(F(1), F(1, 10), F(1, 10), F(1, 10), 2) == F(1, 1024)
    assert beta(1.0, 0.1, 0.1, 0.1, 2) == 0.0009765625
    assert beta(1.0, 0.1, 0.1, 0.0, 2) == 0.0
    assert isinstance(beta(1.0, 0.1, 0.1, 0.1, 2), float)
    assert isinstance(beta(F(1), F(1, 10), F(1, 10), F(1, 10), 2), F)
    expected = 0.25 * (0.4 / (1.9 - 0.2)) ** 2
    assert beta(1.0, 0.05, 0.05, 0.2, 3) == pytest.approx(expected, rel=1e-14)
    assert beta(1.0, 0.05, 0.05, 0.2, 3) == pytest.approx(0.013841, abs=5e-7)
    with pytest.raises(ParameterError):
        beta(0.1, 0.1, 0.1, 0.1, 2)


def test_star8_examples():
    assert star8_rhs(F(1, 4), F(1, 4), F(1), F(1), F(1), 2) == F(25, 64)
    assert star8_rhs(0.25, 0.25, 1.0, 1.0, 1.0, 2) == pytest.approx(0.390625, rel=1e-15)
    assert star8_rhs(0.05, 0.05, 1.0, 0.0, 0.0, 2) == 0.0
    with pytest.raises(ParameterError):
        star8_rhs(1.0, 1.0, 1.0, 0.1, 0.1, 2)


def test_eta1_nonpositive_c0_branch():
    c = decay_constants(0.1, 0.1, 5.0, 0.4, 0.1, 2)
    assert c.c0 == pytest.approx(-2.6)
    assert eta1(1.0, 0.1, 0.1, 5.0, 0.4, 0.1, 2) == pytest.approx(80.0, rel=1e-12)


def test_eta1_positive_c0_branch():
    c = decay_constants(0.05, 0.05, 1.0, 0.1, 0.1, 2)
    assert (c.c0, c.c6, c.c7) == pytest.approx((1.2, 0.10125, 1.8))
    # quadratic root (-c6 + sqrt(c6^2 + 4 c7 c0 lam)) / (2 c0), evaluated directly
    direct = (-0.10125 + math.sqrt(0.10125**2 + 4 * 1.8 * 1.2)) / (2 * 1.2)
    assert eta1(1.0, 0.05, 0.05, 1.0, 0.1, 0.1, 2) == pytest.approx(direct, rel=1e-13)


def _c0_zero_A0(a, b, n):
    # A0 making c0 = 2 - A0 + (n+1) a + (n-1) b vanish
    return 2 + (n + 1) * a + (n - 1) * b


@pytest.mark.parametrize("lam", [1e-3, 1.0, 2.0])
def test_eta1_continuous_across_c0_zero(lam):
    a, b, B0, b1, n = 0.05, 0.05, 0.3, 0.2, 3
    A0 = _c0_zero_A0(a, b, n)
    left = eta1(lam, a, b, A0 + 1e-6, B0, b1, n)  # c0 < 0
    right = eta1(lam, a, b, A0 - 1e-6, B0, b1, n)  # c0 > 0
    at = eta1(lam, a, b, A0, B0, b1, n)
    assert right == pytest.approx(left, rel=1e-4)
    assert at == pytest.approx(left, rel=1e-4)


def test_eta1_no_jump_at_large_lambda():
    # For large lam the slope in c0 is steep (~ c7 lam / c6^2), so compare
    # how the two-sided gap shrinks: linear in delta means no jump.
    a, b, B0, b1, n, lam = 0.05, 0.05, 0.3, 0.2, 3, 50.0
    A0 = _c0_zero_A0(a, b, n)
    gaps = []
    for d in (1e-6, 1e-7, 1e-8):
        gaps.append(abs(eta1(lam, a, b, A0 + d, B0, b1, n) - eta1(lam, a, b, A0 - d, B0, b1, n)))
    assert gaps[1] / gaps[0] == pytest.approx(0.1, rel=0.05)
    assert gaps[2] / gaps[1] == pytest.approx(0.1, rel=0.05)


def test_eta1_small_lambda():
    for lam in (1e-8, 1e-12):
        assert eta1(lam, 0.05, 0.05, 1.0, 0.1, 0.1, 2) < 1e-6
        assert eta1(lam, 0.1, 0.1, 5.0, 0.4, 0.1, 2) < 1e-5


def test_eta1_preconditions():
    with pytest.raises(ParameterError):
        eta1(0.0, 0.05, 0.05, 1.0, 0.1, 0.1, 2)
    with pytest.raises(ParameterError):
        eta1(1.0, 1.0, 1.0, 1.0, 0.1, 0.1, 2)


def test_threshold_bundle():
    c = HypothesisConstants(0.05, 0.05, 1.0, 0.1, 0.1, 0.1, 2, gamma=1.0, theta=1.0)
    tb = threshold_bundle(c)
    assert tb.lambda1 == lambda1(**EX)
    assert tb.y1 == pytest.approx(1.0)
    assert tb.beta == beta(1.0, 0.05, 0.05, 0.1, 2)
    assert tb.c7 > 0
    assert tb.eta1(1.0) == eta1(1.0, 0.05, 0.05, 1.0, 0.1, 0.1, 2)
    with pytest.raises(ParameterError):
        threshold_bundle(HypothesisConstants(0.05, 0.05, 1.0, 0.1, 0.1, 0.1, 2))


# -- properties ---------------------------------------------------------------

pos = st.floats(0.01, 1.0)


@st.composite
def admissible(draw):
    n = draw(st.integers(2, 6))
    a, b = draw(pos), draw(pos)
    m = n - 1
    A0 = (m * a + m * b) / 2 + a + draw(st.floats(0.05, 5.0))
    gamma = (m * a + m * b) / 2 + draw(st.floats(0.05, 5.0))
    return dict(gamma=gamma, a=a, b=b, A0=A0, B0=draw(pos), K3=draw(pos), b1=draw(pos), n=n)


def _admissible(p):
    try:
        lambda1(**p)
    except ParameterError:
        return False
    return True


@given(p=admissible(), s=st.floats(1.01, 3.0))
def test_lambda1_monotone(p, s):
    assume(_admissible(p))
    base = lambda1(**p)
    for key in ("K3", "b1", "B0"):
        assert lambda1(**{**p, key: p[key] * s}) >= base * (1 - 1e-12)
    assert lambda1(**{**p, "A0": p["A0"] * s}) <= base * (1 + 1e-12)
    bigger = {**p, "gamma": p["gamma"] * s}
    if _admissible(bigger):
        assert lambda1(**bigger) <= base * (1 + 1e-12)


@given(p=admissible(), lam=st.floats(1e-3, 100), s=st.floats(1.001, 4))
def test_eta1_increasing_in_lambda(p, lam, s):
    args = (p["a"], p["b"], p["A0"], p["B0"], p["b1"], p["n"])
    assert eta1(lam * s, *args) > eta1(lam, *args)


@given(p=admissible(), s=st.floats(0.1, 10))
def test_beta_and_star8_quadratic(p, s):
    theta = p["A0"]
    b0 = beta(theta, p["a"], p["b"], p["b1"], p["n"])
    assert beta(theta, p["a"], p["b"], p["b1"] * s, p["n"]) == pytest.approx(s * s * b0, rel=1e-12)
    # scaling b1 and B0^2 together scales 4 b1_hat + B0_hat^2 by s
    base = star8_rhs(p["a"], p["b"], p["A0"], p["B0"], p["b1"], p["n"])
    scaled = star8_rhs(p["a"], p["b"], p["A0"], p["B0"] * math.sqrt(s), p["b1"] * s, p["n"])
    assert scaled == pytest.approx(s * s * base, rel=1e-12)


@given(p=admissible())
def test_c7_positive_when_gap_holds(p):
    c = HypothesisConstants(p["a"], p["b"], p["A0"], p["B0"], p["b1"], p["K3"], p["n"])
    dc = decay_constants(p["a"], p["b"], p["A0"], p["B0"], p["b1"], p["n"])
    assert c.gap_holds() == (dc.c7 > 0)
