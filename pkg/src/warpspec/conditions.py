"""Hypothesis checks on a truncated radial window.

Every ``check_*`` evaluates one inequality on a dense grid and returns a
:class:`ConditionResult`.  Margins are reported in the natural units of each
inequality (both sides multiplied by r, sqrt(r) or r^2 so they are O(1)).
A margin is >= 0 exactly when the check passes.

Limits at infinity (``o(1/r)``, ``-> 0``) are replaced by a dyadic-window
surrogate: the maxima over successive octaves must decrease strictly, over at
least three octaves, with a fitted power-law exponent above a small floor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _numerics as nm
from .errors import ParameterError, UnsatisfiableHypotheses, WindowError
from ._numerics import fmt
from .geometry import EndGeometry, PowerLaw, WarpingProfile

EPS_FLOOR = 1e-12
# Reported margin for a strict inequality that holds with equality.
TIE = 1e-15


@dataclass(frozen=True)
class HypothesisConstants:
    """Constants of conditions (1)-(5); hatted values are derived, not stored."""

    a: float
    b: float
    A0: float
    B0: float
    b1: float
    K3: float
    n: int
    gamma: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self):
        for name in ("a", "b", "A0", "B0", "b1", "K3"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"constant {name} must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError("n must be an integer >= 2")
        if self.theta is not None and not self.theta > 0:
            raise ParameterError("theta must be positive")

    @property
    def a_hat(self):
        return (self.n - 1) * self.a

    @property
    def b_hat(self):
        return (self.n - 1) * self.b

    @property
    def b1_hat(self):
        return (self.n - 1) * self.b1

    @property
    def K3_hat(self):
        return (self.n - 1) * self.K3

    @property
    def B0_hat(self):
        return (self.n - 1) * self.B0

    def gap_holds(self):
        return check_gap(self)


@dataclass(frozen=True)
class ConditionResult:
    name: str
    window_lo: float
    window_hi: float
    passed: bool
    worst_margin: float
    argmin_r: float
    details: dict = field(default_factory=dict, compare=False)


@dataclass
class ConditionReport:
    entries: list
    fitted: Optional[HypothesisConstants] = None
    fit_failure: Optional[str] = None

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["condition", "window_lo", "window_hi", "pass", "worst_margin", "argmin_r"])
            for e in self.entries:
                w.writerow([
                    e.name, fmt(e.window_lo), fmt(e.window_hi),
                    fmt(e.passed), fmt(e.worst_margin), fmt(e.argmin_r),
                ])


def _window(end: EndGeometry, window):
    lo, hi = map(float, window)
    if not hi > lo:
        raise WindowError(f"empty window [{lo}, {hi}]")
    if lo < end.r0:
        raise WindowError(f"window starts at {lo} below r0={end.r0}")
    return lo, hi


def _result(name, lo, hi, r, margin, **details):
    j = int(np.argmin(margin))
    worst = nm.snap(float(margin[j]))
    return ConditionResult(name, lo, hi, worst >= 0, worst, float(r[j]), details)


def check_hessian_band(end, reference: WarpingProfile, a, b, window, density=nm.DEFAULT_DENSITY):
    """f'/f - a/r <= A_h <= f'/f + b/r; margins multiplied by r."""
    lo, hi = _window(end, window)
    r = nm.radial_grid(lo, hi, density)
    d = r * (end.profile.A(r) - reference.A(r))
    lower = d + a
    upper = b - d
    res = _result("hessian_band", lo, hi, r, np.minimum(lower, upper),
                  lower=nm.snap(float(lower.min())), upper=nm.snap(float(upper.min())))
    return res


def check_A_bounds(end, A0, B0, window, density=nm.DEFAULT_DENSITY):
    """A0/r <= A_h <= B0/sqrt(r); lower margin r A - A0, upper B0 - sqrt(r) A."""
    lo, hi = _window(end, window)
    r = nm.radial_grid(lo, hi, density)
    A = end.profile.A(r)
    lower = r * A - A0
    upper = B0 - np.sqrt(r) * A
    return _result("A_bounds", lo, hi, r, np.minimum(lower, upper),
                   lower=nm.snap(float(lower.min())), upper=nm.snap(float(upper.min())))


def check_gap(constants: HypothesisConstants) -> bool:
    c = constants
    return 2 * (c.A0 - c.a) > c.a_hat + c.b_hat


def check_K3(end, K3, window, density=nm.DEFAULT_DENSITY):
    """|r (n-1) A'| <= (n-1) K3."""
    lo, hi = _window(end, window)
    r = nm.radial_grid(lo, hi, density)
    m = end.n - 1
    margin = m * K3 - np.abs(r * m * end.profile.A_prime(r))
    return _result("K3", lo, hi, r, margin)


def check_ricci(end, b1, window, density=nm.DEFAULT_DENSITY):
    """(n-1) K_h >= -(n-1) b1 / r, margin (n-1)(r K + b1)."""
    lo, hi = _window(end, window)
    r = nm.radial_grid(lo, hi, density)
    m = end.n - 1
    margin = m * (r * end.profile.K(r) + b1)
    return _result("ricci", lo, hi, r, margin)


def _decay_margin(verdict, floor, min_exponent):
    """exponent - min_exponent when strictly decreasing, else minus the
    largest relative rise between consecutive octaves."""
    m = verdict.maxima
    if np.all(m <= floor):
        return 0.0
    jumps = np.diff(m)
    if np.any(jumps >= 0):
        return -max(float(jumps.max() / m.max()), TIE)
    return float(verdict.exponent - min_exponent)


def check_curvature_band_1_4(end, a, window, floor=EPS_FLOOR, min_exponent=0.05,
                             density=nm.DEFAULT_DENSITY):
    """-eps(r)/r <= K_h <= a(1-a)/r^2 with eps(r) -> 0.

    The upper band is checked pointwise (margin a(1-a) - r^2 K).  The lower
    band is an asymptotic class: e(r) = r max(0, -K) must tend to zero under
    the octave surrogate.
    """
    lo, hi = _window(end, window)
    r = nm.radial_grid(lo, hi, density)
    upper = a * (1 - a) - r**2 * end.profile.K(r)
    j = int(np.argmin(upper))
    upper_min = nm.snap(float(upper[j]))

    def envelope(x):
        return x * np.maximum(0.0, -end.profile.K(x))

    env = nm.octave_maxima(envelope, lo, hi, density)
    verdict = nm.tends_to_zero(env, floor, min_exponent)
    lower_margin = _decay_margin(verdict, floor, min_exponent)
    if verdict.passed:
        lower_margin = max(lower_margin, 0.0)
    if upper_min <= lower_margin:
        worst, where = upper_min, float(r[j])
    else:
        worst, where = lower_margin, float(env.argmax[-1])
    return ConditionResult(
        "curvature_band_1_4", lo, hi, upper_min >= 0 and verdict.passed, worst, where,
        {"upper": upper_min, "lower_exponent": float(verdict.exponent),
         "octave_maxima": verdict.maxima.tolist()},
    )


@dataclass(frozen=True)
class AgmonClause:
    name: str
    passed: bool
    exponent: float
    maxima: tuple


@dataclass(frozen=True)
class AgmonReport:
    clauses: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.clauses)

    def clause(self, name):
        return next(c for c in self.clauses if c.name == name)


def agmon_split(x, q, long_range, floor=EPS_FLOOR, min_exponent=0.05) -> AgmonReport:
    """Split q = V1 + V2 with V2 = ``long_range`` and test the decay clauses.

    Clauses: ``short_range`` (x V1 -> 0), ``long_range_vanishes`` (V2 -> 0)
    and ``long_range_derivative`` (x V2' -> 0).  Needs >= 3 octaves of data.
    """
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    v2 = np.asarray(long_range, dtype=float)
    if x.ndim != 1 or x.shape != q.shape or q.shape != v2.shape:
        raise ParameterError("x, q and long_range must be 1-d arrays of equal length")
    if np.any(np.diff(x) <= 0):
        raise ParameterError("grid must be strictly increasing")
    v1 = q - v2
    dv2 = np.gradient(v2, x, edge_order=2)
    clauses = []
    for name, vals in (
        ("short_range", x * v1),
        ("long_range_vanishes", v2),
        ("long_range_derivative", x * dv2),
    ):
        env = nm.sampled_octave_maxima(x, vals)
        v = nm.tends_to_zero(env, floor, min_exponent)
        clauses.append(AgmonClause(name, v.passed, float(v.exponent), tuple(v.maxima)))
    return AgmonReport(tuple(clauses))


def agmon_split_mode(end, mode_index, window, density=nm.DEFAULT_DENSITY, **kw) -> AgmonReport:
    """Sample mode ``mode_index``'s potential on ``window`` and split it."""
    from .separation import build_radial_operator

    lo, hi = _window(end, window)
    x = nm.radial_grid(lo, hi, density)
    op = build_radial_operator(end, mode_index, hi)
    return agmon_split(x, op.potential(x), op.long_range(x), **kw)


def fitted_values(end, window, reference, density=nm.DEFAULT_DENSITY):
    """Raw tightest constants over the window (no positivity enforcement)."""
    lo, hi = _window(end, window)
    r = nm.radial_grid(lo, hi, density)
    A = end.profile.A(r)
    d = r * (A - reference.A(r))
    K = end.profile.K(r)
    return {
        "a": float(np.max(-d)),
        "b": float(np.max(d)),
        "A0": float(np.min(r * A)),
        "B0": float(np.max(np.sqrt(r) * A)),
        "b1": float(np.max(r * np.maximum(0.0, -K))),
        "K3": float(np.max(np.abs(r * end.profile.A_prime(r)))),
    }


def fit_constants(end, window, reference: WarpingProfile, density=nm.DEFAULT_DENSITY):
    """Tightest constants over the window, floored at 1e-12 where allowed.

    Raises :class:`UnsatisfiableHypotheses` when inf r A_h <= 0 (or the upper
    bound constant is non-positive): no positive A0 can satisfy (2).
    """
    raw = fitted_values(end, window, reference, density)
    if not raw["A0"] > 0 or not raw["B0"] > 0:
        raise UnsatisfiableHypotheses(
            f"fitted A0*={raw['A0']:.6g}, B0*={raw['B0']:.6g}: hypotheses unsatisfiable",
            raw,
        )
    theta = reference.theta if isinstance(reference, PowerLaw) else None
    return HypothesisConstants(
        a=max(raw["a"], EPS_FLOOR),
        b=max(raw["b"], EPS_FLOOR),
        A0=raw["A0"],
        B0=raw["B0"],
        b1=max(raw["b1"], EPS_FLOOR),
        K3=max(raw["K3"], EPS_FLOOR),
        n=end.n,
        theta=theta,
    )


def run_checks(end, constants: HypothesisConstants, window, reference=None,
               band_a=None, density=nm.DEFAULT_DENSITY) -> ConditionReport:
    """All pointwise checks for one constants bundle plus the gap predicate."""
    lo, hi = _window(end, window)
    entries = []
    if reference is not None:
        entries.append(check_hessian_band(end, reference, constants.a, constants.b, window, density))
    entries.append(check_A_bounds(end, constants.A0, constants.B0, window, density))
    c = constants
    gap = check_gap(c)
    gap_margin = 2 * (c.A0 - c.a) - c.a_hat - c.b_hat
    if not gap:
        gap_margin = min(gap_margin, -TIE)
    entries.append(ConditionResult("gap", lo, hi, gap, float(gap_margin), float("nan")))
    entries.append(check_K3(end, constants.K3, window, density))
    entries.append(check_ricci(end, constants.b1, window, density))
    if band_a is not None:
        entries.append(check_curvature_band_1_4(end, band_a, window, density=density))
    report = ConditionReport(entries)
    if reference is not None:
        try:
            report.fitted = fit_constants(end, window, reference, density)
        except UnsatisfiableHypotheses as exc:
            report.fit_failure = str(exc)
    return report
