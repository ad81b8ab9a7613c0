"""Separation of variables on a warped end.

On ``dr^2 + h^2 g_cross`` the Laplacian splits over cross-section eigenvalues
lambda_i into half-line operators acting on L^2(dx):

    L_i = -d^2/dx^2 + q_i(x),
    q_i = (n-1)(n-3)/4 A^2 - (n-1)/2 K + lambda_i / h^2.

The flat-measure function w relates to the geometric radial factor by
``u = w / h**((n-1)/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, IntegrationError, ParameterError
from .geometry import EndGeometry


def sphere_spectrum(n: int, l_max: int):
    """Eigenvalues l(l+n-2) of the round S^{n-1}(1) with their multiplicities."""
    if int(n) != n or n < 2:
        raise ParameterError("n must be an integer >= 2")
    if l_max < 0:
        raise ParameterError("l_max must be >= 0")
    out = []
    for l in range(l_max + 1):
        if n == 2:
            mult = 1 if l == 0 else 2
        else:
            mult = comb(l + n - 1, n - 1) - (comb(l + n - 3, n - 1) if l >= 2 else 0)
        out.append((float(l * (l + n - 2)), mult))
    return out


def round_sphere_end(n, r0, profile, l_max) -> EndGeometry:
    """End whose cross-section is the unit sphere S^{n-1}, modes l <= l_max."""
    return EndGeometry(n, r0, profile, [lam for lam, _ in sphere_spectrum(n, l_max)])


@dataclass(frozen=True, eq=False)
class RadialOperator:
    """One separated mode -d^2/dx^2 + q(x) on ``[x0, X]``."""

    mode_index: int
    lambda_i: float
    x0: float
    X: float
    q: Callable
    n: Optional[int] = None
    end: Optional[EndGeometry] = None

    def __post_init__(self):
        if not self.X > self.x0:
            raise DomainError("truncation X must exceed x0")

    @classmethod
    def from_potential(cls, q, x0, X, lambda_i=0.0, mode_index=0, n=None):
        """Operator for an arbitrary potential callable (no geometry attached)."""
        return cls(mode_index, float(lambda_i), float(x0), float(X), q, n)

    @property
    def x_max(self):
        """Largest x at which the potential may be evaluated."""
        return self.end.profile.r_max if self.end is not None else np.inf

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x0) or np.any(x > self.x_max):
            raise DomainError("potential queried outside its domain")
        return self.q(x)

    def long_range(self, x):
        """lambda_i / h^2 (zero when no geometry is attached)."""
        x = np.asarray(x, dtype=float)
        if self.end is None or self.lambda_i == 0.0:
            return np.zeros_like(x)
        return self.lambda_i * np.exp(-2.0 * self.end.profile.log_h(x))

    def geometric_solution(self, x, w):
        """u = w / h^((n-1)/2); identity when no geometry is attached."""
        if self.end is None:
            return np.asarray(w, dtype=float)
        half = 0.5 * (self.end.n - 1)
        return np.asarray(w) * np.exp(-half * self.end.profile.log_h(x))

    def geometric_density(self, x, w):
        """h^(n-1) u^2 on the radial line, i.e. the Riemannian density of u^2."""
        if self.end is None:
            return np.asarray(w, dtype=float) ** 2
        u = self.geometric_solution(x, w)
        return np.exp((self.end.n - 1) * self.end.profile.log_h(x)) * u**2


def _mode_potential(end: EndGeometry, lambda_i: float):
    prof = end.profile
    m = end.n - 1
    c_a = m * (end.n - 3) / 4.0
    c_k = m / 2.0

    def q(x):
        A = prof._A(x)
        val = -c_k * prof._K(x)
        if c_a != 0.0:
            val = val + c_a * A * A
        if lambda_i != 0.0:
            val = val + lambda_i * np.exp(-2.0 * prof._log_h(x))
        return val

    return q


def build_radial_operator(end: EndGeometry, i: int, X: float) -> RadialOperator:
    """Mode ``i`` of ``end`` truncated to ``[end.r0, X]``."""
    lam = end.cross_section_eigenvalues
    if not 0 <= i < len(lam):
        raise ParameterError(f"mode index {i} outside 0..{len(lam) - 1}")
    if not X > end.r0:
        raise DomainError("truncation X must exceed r0")
    if X > end.profile.r_max:
        raise DomainError("truncation X beyond the sampled profile")
    return RadialOperator(i, lam[i], float(end.r0), float(X),
                          _mode_potential(end, lam[i]), end.n, end)


def prune_modes(end: EndGeometry, lambda_top: float, X: float, samples=4096):
    """Distinct-eigenvalue mode indices worth scanning up to ``lambda_top``.

    Mode i is dropped once lambda_i / h(x0)^2 exceeds lambda_top + sup|q_0|
    on [x0, X]; q_i - q_0 = lambda_i / h^2 > 0 orders the potentials.
    """
    op0 = build_radial_operator(end, 0, X)
    x = np.linspace(end.r0, X, samples)
    sup_q0 = float(np.max(np.abs(op0.potential(x))))
    h0 = float(end.profile.h(end.r0))
    keep, seen = [], set()
    for i, lam in enumerate(end.cross_section_eigenvalues):
        if lam in seen:
            continue
        seen.add(lam)
        if lam / h0**2 > lambda_top + sup_q0:
            break
        keep.append(i)
    return keep


class IdentitySides(NamedTuple):
    lhs: float
    rhs: float
    residual: float


# 8th-order central weights for f'(r); a wide step keeps rounding small
_WEIGHTS = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def _stencil(v, r, step=2e-2):
    offsets = np.arange(-4, 5) * step
    return sum(w * v(r + o) for w, o in zip(_WEIGHTS, offsets) if w) / step


def _takes_arrays(fn, s, t):
    try:
        np.asarray(fn(np.array([s, t])), dtype=float)
    except (TypeError, ValueError):
        return False
    return True


def _derivative(v):
    """Complex-step derivative when v is analytic, stencil otherwise.

    The complex step has no subtractive rounding, which matters because the
    identity can cancel by many orders of magnitude.
    """
    try:
        probe = complex(np.asarray(v(1.0 + 1e-30j)))
    except (TypeError, ValueError):
        probe = None
    if probe is not None and np.isfinite(probe) and probe.imag != 0.0:
        return lambda r: np.imag(v(r + 1e-30j)) / 1e-30
    return lambda r: _stencil(v, r)


def lemma_3_1_sides(end: EndGeometry, beta, v, s, t, dv=None) -> IdentitySides:
    """Both sides of the weighted flux identity on [s, t] for a radial v.

    LHS = t^beta h(t)^(n-1) v(t)^2 - s^beta h(s)^(n-1) v(s)^2
    RHS = int_s^t r^beta h^(n-1) {(Delta r + beta/r) v^2 + 2 v v'} dr

    The common cross-section volume factor cancels.
    """
    if not end.r0 <= s < t:
        raise DomainError("need r0 <= s < t")
    if not _takes_arrays(v, s, t):
        v = np.vectorize(v, otypes=[float])  # scalar-only test function
    if dv is None:
        dv = _derivative(v)
    elif not _takes_arrays(dv, s, t):
        dv = np.vectorize(dv, otypes=[float])
    prof = end.profile
    m = end.n - 1

    def weight(r):
        return r**beta * np.exp(m * prof.log_h(r))

    def integrand(r):
        vr = v(r)
        return weight(r) * ((m * prof.A(r) + beta / r) * vr * vr + 2.0 * vr * dv(r))

    lhs = float(weight(t) * v(t) ** 2 - weight(s) * v(s) ** 2)
    knots = prof.breakpoints(s, t)
    if knots.size:
        # sampled profile: smooth between knots, so a composite rule per cell
        rhs, abserr = _composite_gauss(integrand, np.concatenate(([s], knots, [t])))
        flagged = "composite Gauss-Legendre 8/16 disagree"
    else:
        out = quad(integrand, s, t, epsabs=1e-14, epsrel=1e-11, limit=500, full_output=1)
        rhs, abserr = float(out[0]), float(out[1])
        flagged = out[3] if len(out) > 3 else None
    scale = abs(lhs) + abs(rhs) + 1.0
    if flagged and not abserr <= 1e-10 * scale:
        # heavy cancellation (h growing) makes quadpack report roundoff; accept
        # the estimate if it sits at the rounding floor of the absolute mass
        mass = quad(lambda r: abs(integrand(r)), s, t, limit=500)[0]
        if not abserr <= 1e-12 * mass:
            raise IntegrationError(f"quadrature did not converge: {flagged}", location=(s, t))
    return IdentitySides(lhs, float(rhs), abs(lhs - rhs) / scale)


def _composite_gauss(fn, edges):
    """Sum of 16-point Gauss-Legendre over each cell; error from the 8-point rule."""
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    vals = []
    for order in (8, 16):
        x, w = np.polynomial.legendre.leggauss(order)
        f = np.asarray(fn((mid + half * x).ravel()), dtype=float)
        vals.append(half[:, 0] * (f.reshape(-1, order) @ w))
    return float(np.sum(vals[1])), float(np.sum(np.abs(vals[1] - vals[0])))


def check_lemma_3_1(end: EndGeometry, beta, v, s, t, dv=None) -> float:
    """Relative residual |LHS - RHS| / (|LHS| + |RHS| + 1) of the identity."""
    return lemma_3_1_sides(end, beta, v, s, t, dv).residual


def sample_potential(op: RadialOperator, points=None, spacing=None):
    """(x, q) samples on [x0, X] for dumps and plots."""
    if points is None:
        points = int(np.ceil((op.X - op.x0) / (spacing or 0.05))) + 1
    x = np.linspace(op.x0, op.X, points)
    return x, op.potential(x)


__all__ = [
    "RadialOperator",
    "build_radial_operator",
    "check_lemma_3_1",
    "lemma_3_1_sides",
    "prune_modes",
    "round_sphere_end",
    "sample_potential",
    "sphere_spectrum",
]
