"""Closed-form eigenvalue thresholds and the exponential decay rate.

All formulas use hatted constants c_hat = (n - 1) c.  ``y1``, ``lambda1``,
``beta`` and ``star8_rhs`` use field operations only and are evaluated in
exact rational arithmetic: float inputs are read as their shortest decimal
literal (0.1 means 1/10), so spot values such as beta = 1/1024 come out
exact.  Fraction inputs give a Fraction result, anything else a float.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .errors import ParameterError


def _rational(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    x = float(x)
    if not math.isfinite(x):
        raise ParameterError(f"non-finite parameter {x}")
    return Fraction(repr(x))


def _exact(fn):
    """Run ``fn`` on rationals; return a float unless every input was a Fraction."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        vals = list(args) + list(kwargs.values())
        all_exact = any(isinstance(v, Fraction) for v in vals) and all(
            isinstance(v, (Fraction, int)) for v in vals
        )
        out = fn(*map(_rational, args), **{k: _rational(v) for k, v in kwargs.items()})
        if isinstance(out, tuple):
            return out if all_exact else tuple(float(v) for v in out)
        return out if all_exact else float(out)

    return wrapper


def _gap_value(a, b, A0, n):
    # 2(A0 - a) - a_hat - b_hat; positive exactly when the gap condition holds
    m = n - 1
    return 2 * (A0 - a) - m * a - m * b


@_exact
def y1(gamma, a, b, A0, n):
    """min{(2 gamma + a_hat - b_hat)/2, 2(A0 - a) - b_hat}."""
    m = n - 1
    a_hat, b_hat = m * a, m * b
    if not 2 * gamma > a_hat + b_hat:
        raise ParameterError("y1 needs gamma > (a_hat + b_hat)/2")
    if not _gap_value(a, b, A0, n) > 0:
        raise ParameterError("y1 needs the gap condition 2(A0 - a) > a_hat + b_hat")
    return min((2 * gamma + a_hat - b_hat) / 2, 2 * (A0 - a) - b_hat)


@_exact
def lambda1_terms(gamma, a, b, A0, B0, K3, b1, n):
    """The two candidates of the maximum defining lambda1: (K3 term, (*8) term)."""
    m = n - 1
    a_hat, b_hat = m * a, m * b
    y = y1(gamma, a, b, A0, n)
    left = y - a_hat
    right = 2 * gamma - b_hat - y
    if not (left > 0 and right > 0):
        raise ParameterError("lambda1 denominators must be positive")
    term_k3 = (m * K3) ** 2 / (left * right)
    return term_k3, star8_rhs(a, b, A0, B0, b1, n)


@_exact
def lambda1(gamma, a, b, A0, B0, K3, b1, n):
    """Absence-of-eigenvalue threshold: max of the K3 term and the (*8) term."""
    return max(lambda1_terms(gamma, a, b, A0, B0, K3, b1, n))


@_exact
def beta(theta, a, b, b1, n):
    """(1/4) {b1_hat / (2(theta - a) - a_hat - b_hat)}^2 for f = r**theta."""
    m = n - 1
    denom = 2 * (theta - a) - m * a - m * b
    if not denom > 0:
        raise ParameterError("beta needs 2(theta - a) > a_hat + b_hat")
    return (m * b1 / denom) ** 2 / 4


@_exact
def star8_rhs(a, b, A0, B0, b1, n):
    """{(4 b1_hat + B0_hat^2) / (8 (2(A0 - a) - a_hat - b_hat))}^2."""
    m = n - 1
    c7 = _gap_value(a, b, A0, n)
    if not c7 > 0:
        raise ParameterError("(*8) needs the gap condition 2(A0 - a) > a_hat + b_hat")
    return ((4 * m * b1 + (m * B0) ** 2) / (8 * c7)) ** 2


@dataclass(frozen=True)
class DecayConstants:
    c0: float
    c6: float
    c7: float


def decay_constants(a, b, A0, B0, b1, n) -> DecayConstants:
    m = n - 1
    c0 = 2 - A0 + (n + 1) * a + m * b
    c6 = m * b1 + (m * B0) ** 2 / 8
    c7 = _gap_value(a, b, A0, n)
    return DecayConstants(c0, c6, c7)


def eta1(lam, a, b, A0, B0, b1, n):
    """Exponential decay rate bound.

    c0 > 0:  (-c6 + sqrt(c6^2 + 4 c7 c0 lam)) / (2 c0)
    c0 <= 0: c7 lam / c6

    The first branch carries the 1/(2 c0) normalisation of the quadratic root
    so that it tends to c7 lam / c6 as c0 -> 0+, matching the second branch.
    It is evaluated in the cancellation-free form 2 c7 lam / (c6 + sqrt(...)).
    """
    if not lam > 0:
        raise ParameterError("eta1 needs lambda > 0")
    c = decay_constants(a, b, A0, B0, b1, n)
    if not c.c7 > 0:
        raise ParameterError("eta1 needs the gap condition (c7 > 0)")
    if not c.c6 > 0:
        raise ParameterError("eta1 needs c6 > 0")
    c0, c6, c7 = float(c.c0), float(c.c6), float(c.c7)
    lam = float(lam)
    if c0 > 0:
        return 2 * c7 * lam / (c6 + math.sqrt(c6 * c6 + 4 * c7 * c0 * lam))
    return c7 * lam / c6


@dataclass(frozen=True)
class ThresholdBundle:
    lambda1: float
    y1: float
    beta: Optional[float]
    star8_rhs: float
    eta1: Callable[[float], float]
    c0: float
    c6: float
    c7: float
    term_K3: float


def threshold_bundle(constants) -> ThresholdBundle:
    """Evaluate every threshold for a :class:`HypothesisConstants` bundle."""
    c = constants
    if c.gamma is None:
        raise ParameterError("constants.gamma is required for lambda1 and y1")
    args = (c.a, c.b, c.A0, c.B0, c.b1, c.n)
    term_k3, term8 = lambda1_terms(c.gamma, c.a, c.b, c.A0, c.B0, c.K3, c.b1, c.n)
    dc = decay_constants(*args)
    return ThresholdBundle(
        lambda1=max(term_k3, term8),
        y1=y1(c.gamma, c.a, c.b, c.A0, c.n),
        beta=beta(c.theta, c.a, c.b, c.b1, c.n) if c.theta is not None else None,
        star8_rhs=term8,
        eta1=lambda lam: eta1(lam, *args),
        c0=dc.c0,
        c6=dc.c6,
        c7=dc.c7,
        term_K3=term_k3,
    )
