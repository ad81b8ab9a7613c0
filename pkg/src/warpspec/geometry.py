"""Warping profiles h(r) and the radial geometry of a warped end.

An end carries the metric ``dr^2 + h(r)^2 g_cross``.  Everything the rest of
the package needs is a function of the scalar profile:

    A(r) = h'/h          (Hessian coefficient, nabla dr = A * g_tilde)
    K(r) = -h''/h        (radial sectional curvature)
    A'(r)                with the identity K = -(A' + A^2)

Profiles are immutable; every evaluation is a pure function of ``r``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import sici

from .errors import DomainError, EvaluationError, ParameterError


class ProfileValues(NamedTuple):
    h: np.ndarray
    A: np.ndarray
    K: np.ndarray
    A_prime: np.ndarray


class WarpingProfile:
    """Base class for h(r) on ``[r_min, inf)`` (or a finite sampled range)."""

    r_min: float
    r_max: float = np.inf

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_min) or np.any(r > self.r_max) or np.any(np.isnan(r)):
            raise DomainError(
                f"radius outside profile domain [{self.r_min}, {self.r_max}]"
            )
        return r

    # Subclasses implement the unchecked versions.
    def _log_h(self, r):
        raise NotImplementedError

    def _A(self, r):
        raise NotImplementedError

    def _A_prime(self, r):
        raise NotImplementedError

    def _K(self, r):
        return -(self._A_prime(r) + self._A(r) ** 2)

    def log_h(self, r):
        return self._log_h(self._check(r))

    def h(self, r):
        return np.exp(self.log_h(r))

    def A(self, r):
        return self._A(self._check(r))

    def A_prime(self, r):
        return self._A_prime(self._check(r))

    def K(self, r):
        return self._K(self._check(r))

    def breakpoints(self, lo, hi):
        """Radii in (lo, hi) where derivatives of h may jump (none for closed forms)."""
        return np.empty(0)


@dataclass(frozen=True)
class PowerLaw(WarpingProfile):
    """h(r) = r**theta."""

    theta: float
    r_min: float = 1e-12

    def __post_init__(self):
        if not self.theta > 0:
            raise ParameterError("PowerLaw exponent must be positive")
        if not self.r_min > 0:
            raise ParameterError("r_min must be positive")

    def _log_h(self, r):
        return self.theta * np.log(r)

    def _A(self, r):
        return self.theta / r

    def _A_prime(self, r):
        return -self.theta / r**2

    def _K(self, r):
        return self.theta * (1.0 - self.theta) / r**2


@dataclass(frozen=True)
class OscillatoryExp(WarpingProfile):
    """h(r) = exp( int_1^r t**-alpha + k sin(2t)/t dt ).

    The integral is evaluated in closed form through the sine integral,
    so ``h(1) = 1`` exactly.  ``k = 0`` gives the non-oscillating reference
    ``exp((r**(1-alpha) - 1) / (1 - alpha))`` with ``A = r**-alpha``.
    """

    alpha: float
    k: float
    r_min: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError("alpha must lie in (0, 1)")
        if not self.r_min > 0:
            raise ParameterError("r_min must be positive")

    def _log_h(self, r):
        one_minus = 1.0 - self.alpha
        power_part = (r**one_minus - 1.0) / one_minus
        if self.k == 0.0:
            return power_part
        si_r, _ = sici(2.0 * r)
        si_1, _ = sici(2.0)
        return power_part + self.k * (si_r - si_1)

    def _A(self, r):
        return r ** (-self.alpha) + self.k * np.sin(2.0 * r) / r

    def _A_prime(self, r):
        a, k = self.alpha, self.k
        return (
            -a * r ** (-a - 1.0)
            + 2.0 * k * np.cos(2.0 * r) / r
            - k * np.sin(2.0 * r) / r**2
        )

    def _K(self, r):
        # Expanded -(A' + A^2), written out term by term so the curvature
        # path does not reuse _A_prime.
        a, k = self.alpha, self.k
        s, c = np.sin(2.0 * r), np.cos(2.0 * r)
        return -(
            -a * r ** (-a - 1.0)
            + 2.0 * k * c / r
            - k * s / r**2
            + r ** (-2.0 * a)
            + 2.0 * k * s * r ** (-a - 1.0)
            + k * k * s * s / r**2
        )


@dataclass(frozen=True, eq=False)
class Sampled(WarpingProfile):
    """Tabulated h(r) interpolated by a C2 cubic spline."""

    r_grid: np.ndarray
    h_grid: np.ndarray
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        h = np.asarray(self.h_grid, dtype=float)
        if r.ndim != 1 or r.shape != h.shape or r.size < 4:
            raise ParameterError("sampled profile needs >= 4 matching (r, h) pairs")
        if np.any(np.diff(r) <= 0):
            raise ParameterError("sampled radii must be strictly increasing")
        if r[0] <= 0:
            raise ParameterError("sampled radii must be positive")
        if np.any(h <= 0):
            raise ParameterError("sampled h must be positive")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "h_grid", h)
        object.__setattr__(self, "_spline", CubicSpline(r, h))

    @property
    def r_min(self):
        return float(self.r_grid[0])

    @property
    def r_max(self):
        return float(self.r_grid[-1])

    def breakpoints(self, lo, hi):
        # spline knots: h''' jumps there
        r = self.r_grid
        tol = 1e-9 * max(1.0, abs(hi))
        return r[(r > lo + tol) & (r < hi - tol)]

    def _h(self, r):
        h = self._spline(r)
        if np.any(h <= 0):
            raise EvaluationError("spline interpolant of h is not positive")
        return h

    def _log_h(self, r):
        return np.log(self._h(r))

    def _A(self, r):
        return self._spline(r, 1) / self._h(r)

    def _K(self, r):
        return -self._spline(r, 2) / self._h(r)

    def _A_prime(self, r):
        return -self._K(r) - self._A(r) ** 2


def eval_profile(profile: WarpingProfile, r) -> ProfileValues:
    """Return ``(h, A, K, A')`` at ``r`` (scalar or array)."""
    r = profile._check(r)
    h = np.exp(profile._log_h(r))
    if np.any(~(h > 0)):
        raise EvaluationError("profile evaluates to a non-positive h")
    return ProfileValues(h, profile._A(r), profile._K(r), profile._A_prime(r))


def build_f1(alpha: float, k: float) -> OscillatoryExp:
    """The critical counterexample profile with A = r**-alpha + k sin(2r)/r."""
    if not 0.5 < alpha < 1.0:
        raise ParameterError("f1 needs 1/2 < alpha < 1")
    if not abs(k) > 1.0:
        raise ParameterError("f1 needs |k| > 1")
    return OscillatoryExp(alpha=float(alpha), k=float(k), r_min=1.0)


def load_profile_csv(path) -> Sampled:
    """Read a two-column ``r,h`` CSV (header required) into a Sampled profile."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["r", "h"]:
        raise ParameterError(f"{path}: expected header 'r,h'")
    try:
        data = [(float(a), float(b)) for a, b in (row for row in rows[1:] if row)]
    except ValueError as exc:
        raise ParameterError(f"{path}: malformed row ({exc})") from None
    r, h = np.array(data).T
    return Sampled(r, h)


@dataclass(frozen=True)
class EndGeometry:
    """A warped end ``[r0, inf) x cross-section`` of dimension ``n``."""

    n: int
    r0: float
    profile: WarpingProfile
    cross_section_eigenvalues: Sequence[float] = (0.0,)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError("dimension n must be an integer >= 2")
        if not self.r0 > 0:
            raise ParameterError("r0 must be positive")
        if self.r0 < self.profile.r_min:
            raise DomainError("r0 lies below the profile's r_min")
        lam = tuple(float(v) for v in self.cross_section_eigenvalues)
        if not lam or lam[0] != 0.0:
            raise ParameterError("cross-section spectrum must start with 0")
        if any(v < 0 for v in lam) or any(b < a for a, b in zip(lam, lam[1:])):
            raise ParameterError("cross-section spectrum must be nonnegative and sorted")
        object.__setattr__(self, "cross_section_eigenvalues", lam)

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r0):
            raise DomainError(f"radius below r0={self.r0}")
        return r


class RadialGeometry(NamedTuple):
    hessian_coeff: np.ndarray
    ricci_radial: np.ndarray
    laplacian_r: np.ndarray


def hessian_and_ricci(end: EndGeometry, r) -> RadialGeometry:
    """Hessian coefficient A_h, Ric(grad r, grad r) = (n-1) K_h and Delta r."""
    r = end._check(r)
    A = end.profile.A(r)
    K = end.profile.K(r)
    return RadialGeometry(A, (end.n - 1) * K, (end.n - 1) * A)


def radial_identity_residual(end: EndGeometry, r):
    """Relative residual of -d(Delta r)/dr = |nabla dr|^2 + Ric(grad r, grad r).

    For a warped product |nabla dr|^2 = (n-1) A^2.  Both sides are built from
    separately evaluated A, A' and K.
    """
    r = end._check(r)
    m = end.n - 1
    A = end.profile.A(r)
    dA = end.profile.A_prime(r)
    K = end.profile.K(r)
    lhs = -m * dA
    rhs = m * A**2 + m * K
    scale = m * (np.abs(dA) + A**2 + np.abs(K))
    return np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0)
