"""Prüfer shooting for the separated radial operators.

The equation -w'' + q w = lam w is integrated in modified Prüfer variables

    w = R sin(phi),   w' = kappa R cos(phi),
    phi'     = kappa cos^2(phi) + (lam - q)/kappa sin^2(phi)
    (ln R)'  = (kappa - (lam - q)/kappa) sin(phi) cos(phi)

with a constant frequency kappa = sqrt(max(lam - qbar, kappa_floor)), where
qbar is the mean of q over the second half of [x0, X].  Working with ln R
keeps exponentially growing or decaying stretches representable.

Classification of a trial lam looks at the *recessive* solution: the one
that decays fastest as x grows.  It is obtained by integrating backward from
an extended endpoint X_ext > X, where generic data are dominated by the
recessive branch; of the two start phases 0 and pi/2 the one with the smaller
tail amplitude relative to x0 is kept.  An embedded eigenvalue exists for some self-adjoint
condition at x0 exactly when this solution is square integrable.  Forward
integrations with dirichlet / neumann / robin data at x0 are available via
``integrate``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.optimize import brentq

from . import _numerics as nm
from .errors import BracketError, EstimationError, IntegrationError, ParameterError
from .separation import RadialOperator

L2_CANDIDATE = "L2_candidate"
OSCILLATORY = "oscillatory"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SolverSettings:
    """Integrator tolerances and classification thresholds.

    The thresholds are tool constants: an envelope exponent above
    ``0.5 + exponent_margin`` (square integrability in flat measure) with fit
    R^2 >= ``r2_min`` marks an L2 candidate; ``|p| <= oscillatory_band`` with
    tail mass >= ``tail_min`` marks a purely oscillatory solution.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "DOP853"
    samples_per_unit: float = 16.0
    extension: float = 1.0
    kappa_floor: float = 1e-2
    exponent_margin: float = 0.1
    oscillatory_band: float = 0.1
    tail_min: float = 0.15
    r2_min: float = 0.9
    mean_samples: int = 2048

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ParameterError("tolerances must be positive")
        if not self.extension > 0:
            raise ParameterError("extension must be positive")
        if not self.samples_per_unit > 0:
            raise ParameterError("samples_per_unit must be positive")


DEFAULT_SETTINGS = SolverSettings()


def default_truncation(x0, lambda_min):
    """x0 + max(200, 50 zero spacings pi/sqrt(lambda_min)), rounded up."""
    if not lambda_min > 0:
        raise ParameterError("lambda_min must be positive")
    return float(x0 + math.ceil(max(200.0, 50.0 * math.pi / math.sqrt(lambda_min))))


def parse_boundary(boundary):
    """Normalise a boundary spec to (kind, c).

    Accepted: 'dirichlet', 'neumann', 'recessive', ('robin', c) or 'robin:c'
    meaning w'(x0) = c w(x0).
    """
    if isinstance(boundary, tuple):
        kind, c = boundary
        return str(kind).lower(), float(c)
    text = str(boundary).strip().lower()
    if text.startswith("robin"):
        _, _, c = text.partition(":")
        if not c:
            raise ParameterError("robin boundary needs a coefficient, e.g. 'robin:0.5'")
        return "robin", float(c)
    if text in ("dirichlet", "neumann", "recessive"):
        return text, None
    raise ParameterError(f"unknown boundary condition {boundary!r}")


def _initial_phase(kind, c, kappa):
    if kind == "dirichlet":
        return np.zeros_like(kappa)
    if kind == "neumann":
        return np.full_like(kappa, np.pi / 2)
    if kind == "robin":
        # w' = c w  <=>  kappa cos(phi) = c sin(phi)
        return np.arctan2(kappa, c)
    raise ParameterError(f"no initial phase for boundary {kind!r}")


def tail_mean_potential(op: RadialOperator, samples=2048):
    x = np.linspace(op.x0 + 0.5 * (op.X - op.x0), op.X, samples)
    return float(np.mean(op.potential(x)))


def frequencies(op, lams, settings=DEFAULT_SETTINGS):
    qbar = tail_mean_potential(op, settings.mean_samples)
    lams = np.asarray(lams, dtype=float)
    return np.sqrt(np.maximum(lams - qbar, settings.kappa_floor))


def _rhs(q, lam, kappa):
    m = lam.size

    def f(x, y):
        phi = y[m:]
        d = (lam - q(x)) / kappa
        s, c = np.sin(phi), np.cos(phi)
        return np.concatenate(((kappa - d) * s * c, kappa * c * c + d * s * s))

    return f


def _solve(op, lam, kappa, phi0, start, stop, t_eval, settings, dense=False):
    m = lam.size
    y0 = np.concatenate((np.zeros(m), phi0))
    sol = solve_ivp(
        _rhs(op.q, lam, kappa),
        (start, stop),
        y0,
        method=settings.method,
        t_eval=t_eval,
        dense_output=dense,
        rtol=settings.rtol,
        atol=settings.atol,
    )
    if sol.status != 0:
        where = float(sol.t[-1]) if sol.t.size else float(start)
        raise IntegrationError(f"Prüfer integration failed: {sol.message}", location=where)
    return sol


def sample_grid(op, settings=DEFAULT_SETTINGS):
    n = int(math.ceil((op.X - op.x0) * settings.samples_per_unit)) + 1
    return np.linspace(op.x0, op.X, max(n, 16))


@dataclass(frozen=True, eq=False)
class ShootingTrajectory:
    """Prüfer solution on a grid of [x0, X].

    Convention: w = R sin(phi), w' = kappa R cos(phi).  ``log_R`` is stored
    rather than R so very large or very small amplitudes stay finite.
    """

    x: np.ndarray
    log_R: np.ndarray
    phi: np.ndarray
    lam: float
    kappa: float
    boundary: str
    op: RadialOperator = field(repr=False)
    residual: float = np.nan

    @property
    def R(self):
        return np.exp(self.log_R)

    @property
    def w(self):
        return self.R * np.sin(self.phi)

    @property
    def w_prime(self):
        return self.kappa * self.R * np.cos(self.phi)

    @property
    def u(self):
        """Geometric radial factor w / h^((n-1)/2)."""
        return self.op.geometric_solution(self.x, self.w)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["x", "w", "w_prime", "R", "phi"])
            for row in zip(self.x, self.w, self.w_prime, self.R, self.phi):
                out.writerow([nm.fmt(v) for v in row])


def _five_point(fn, x, step):
    return (-fn(x + 2 * step) + 8 * fn(x + step) - 8 * fn(x - step) + fn(x - 2 * step)) / (
        12 * step
    )


def _reinsertion_residual(sol, comp, op, lam, kappa, shift, wmax, step=1e-2, levels=6):
    """max |-w'' + (q - lam) w| / max|w| at dyadic points, w'' by finite differences."""
    m = sol.y.shape[0] // 2
    j = np.arange(1, 2**levels)
    xs = op.x0 + (op.X - op.x0) * j / 2**levels
    xs = xs[(xs - 2 * step > op.x0) & (xs + 2 * step < op.X)]

    def state(x):
        y = sol.sol(x)
        return np.exp(y[comp] - shift), y[m + comp]

    def wp(x):
        R, phi = state(x)
        return kappa * R * np.cos(phi)

    R, phi = state(xs)
    w = R * np.sin(phi)
    wpp = _five_point(wp, xs, step)
    res = -wpp + (op.q(xs) - lam) * w
    return float(np.max(np.abs(res)) / wmax)


def _tail_mask(x):
    return x >= x[-1] - 0.25 * (x[-1] - x[0])


def _log_mean_exp(v):
    top = np.max(v)
    return top + math.log(np.mean(np.exp(v - top)))


def integrate_batch(op: RadialOperator, lams, boundary="dirichlet", settings=DEFAULT_SETTINGS,
                    residual=False) -> list:
    """Trajectories for several lam in a single vectorised ODE solve."""
    kind, c = parse_boundary(boundary)
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if not np.all(np.isfinite(lams)):
        raise ParameterError("lambda must be finite")
    kappa = frequencies(op, lams, settings)
    grid = sample_grid(op, settings)
    if kind == "recessive":
        x_ext = min(op.X + settings.extension * (op.X - op.x0), op.x_max)
        if not x_ext > op.X:
            raise ParameterError("no room beyond X for the recessive start (sampled profile)")
        lam2 = np.repeat(lams, 2)
        kap2 = np.repeat(kappa, 2)
        phi0 = np.tile([0.0, np.pi / 2], lams.size)
        sol = _solve(op, lam2, kap2, phi0, x_ext, op.x0, grid[::-1], settings, dense=residual)
        m = lam2.size
        logR = sol.y[:m, ::-1]
        phi = sol.y[m:, ::-1]
        out = []
        tail = _tail_mask(grid)
        for i, lam in enumerate(lams):
            # Keep the start phase whose solution is smaller in the tail relative
            # to x0.  Choosing by growth on [X, X_ext] instead flips between the
            # two off resonance and makes the tail functional jump.
            a, b = 2 * i, 2 * i + 1
            ta, tb = (_log_mean_exp(logR[j, tail]) - logR[j, 0] for j in (a, b))
            comp = a if ta <= tb else b
            shift = logR[comp, 0]
            lr = logR[comp] - shift
            res = np.nan
            if residual:
                wmax = float(np.max(np.abs(np.exp(lr) * np.sin(phi[comp]))))
                res = _reinsertion_residual(sol, comp, op, lam, kappa[i], shift, wmax)
            out.append(ShootingTrajectory(grid, lr, phi[comp], float(lam), float(kappa[i]),
                                          kind, op, res))
        return out
    phi0 = _initial_phase(kind, c, kappa)
    sol = _solve(op, lams, kappa, phi0, op.x0, op.X, grid, settings, dense=residual)
    m = lams.size
    out = []
    for i, lam in enumerate(lams):
        res = np.nan
        if residual:
            wmax = float(np.max(np.abs(np.exp(sol.y[i]) * np.sin(sol.y[m + i]))))
            res = _reinsertion_residual(sol, i, op, lam, kappa[i], 0.0, wmax)
        label = kind if kind != "robin" else f"robin:{c!r}"
        out.append(ShootingTrajectory(grid, sol.y[i].copy(), sol.y[m + i].copy(), float(lam),
                                      float(kappa[i]), label, op, res))
    return out


def integrate(op: RadialOperator, lam, boundary="dirichlet",
              settings=DEFAULT_SETTINGS) -> ShootingTrajectory:
    """One trajectory, with the re-insertion residual filled in."""
    return integrate_batch(op, [lam], boundary, settings, residual=True)[0]


def terminal_phase(op: RadialOperator, lams, kappa, boundary="dirichlet",
                   settings=DEFAULT_SETTINGS):
    """Prüfer phase at X for each lam, all with the same frequency ``kappa``.

    With kappa held fixed the phase is nondecreasing in lam (its lam
    derivative solves a linear equation with source sin^2(phi)/kappa >= 0).
    """
    kind, c = parse_boundary(boundary)
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    kap = np.full_like(lams, float(kappa))
    sol = _solve(op, lams, kap, _initial_phase(kind, c, kap), op.x0, op.X,
                 np.array([op.X]), settings)
    return sol.y[lams.size:, -1].copy()


def dirichlet_interval_eigenvalues(op: RadialOperator, count: int,
                                   settings=DEFAULT_SETTINGS, xtol=1e-12) -> list:
    """First ``count`` Dirichlet eigenvalues on [x0, X] by phase counting.

    The k-th eigenvalue (k = 0, 1, ...) is where the terminal phase from
    phi(x0) = 0 equals (k + 1) pi.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    x = np.linspace(op.x0, op.X, 4096)
    q = op.potential(x)
    length = op.X - op.x0
    lo = float(np.min(q)) - 1.0
    hi = float(np.max(q)) + ((count + 1) * np.pi / length) ** 2 + 1.0
    kappa = math.sqrt(max(hi - float(np.mean(q)), 1.0))

    def g(lam, k):
        return terminal_phase(op, [lam], kappa, "dirichlet", settings)[0] - (k + 1) * np.pi

    out = []
    for k in range(count):
        a = out[-1] if out else lo
        out.append(float(brentq(g, a, hi, args=(k,), xtol=xtol, rtol=4 * np.finfo(float).eps)))
    return out


class EigenScanResult(NamedTuple):
    lambda_trial: float
    classification: str
    tail_mass_ratio: float
    envelope_exponent: float
    fit_r2: float
    mode_index: int = 0
    boundary_flux: float = np.nan
    refinement: Optional[tuple] = None


def _turning_point(x, q, lam):
    """Last sample where q >= lam (start of the allowed region), else x0."""
    idx = np.nonzero(q >= lam)[0]
    return x[idx[-1]] if idx.size else x[0]


def envelope(traj: ShootingTrajectory, lo=None):
    """Block maxima of R over blocks of length pi/kappa on [lo, X]."""
    lo = traj.x[0] + 0.5 * (traj.x[-1] - traj.x[0]) if lo is None else lo
    m = traj.x >= lo
    return nm.block_maxima(traj.x[m], traj.R[m], np.pi / traj.kappa)


def trajectory_metrics(traj: ShootingTrajectory, q_grid=None):
    """(envelope exponent p, fit R^2, tail mass ratio, boundary flux)."""
    x = traj.x
    x0, X = x[0], x[-1]
    mid = x0 + 0.5 * (X - x0)
    centers, maxima = envelope(traj, mid)
    if centers.size >= 3:
        fit = nm.linear_fit(np.log(centers), np.log(maxima))
        p, r2 = -fit.slope, fit.r2
    else:
        p, r2 = np.nan, np.nan
    q = traj.op.q(x) if q_grid is None else q_grid
    xa = min(_turning_point(x, q, traj.lam), mid)
    w2 = traj.w**2
    total_mask = x >= xa
    tail_mask = x >= X - 0.25 * (X - x0)
    total = trapezoid(w2[total_mask], x[total_mask])
    tail = trapezoid(w2[tail_mask], x[tail_mask])
    ratio = float(tail / total) if total > 0 else 0.0
    ratio = min(max(ratio, 0.0), 1.0)
    flux = float(traj.R[-1] ** 2)
    return float(p), float(r2), ratio, flux


def decide(p, r2, tail, settings=DEFAULT_SETTINGS):
    """Deterministic classification rule from the three metrics."""
    if np.isfinite(p) and p > 0.5 + settings.exponent_margin and r2 >= settings.r2_min:
        return L2_CANDIDATE
    if np.isfinite(p) and abs(p) <= settings.oscillatory_band and tail >= settings.tail_min:
        return OSCILLATORY
    return INCONCLUSIVE


def classify_many(op: RadialOperator, lams, settings=DEFAULT_SETTINGS,
                  boundary="recessive") -> list:
    trajs = integrate_batch(op, lams, boundary, settings)
    q_grid = op.q(trajs[0].x) if trajs else None
    out = []
    for t in trajs:
        p, r2, tail, flux = trajectory_metrics(t, q_grid)
        out.append(EigenScanResult(t.lam, decide(p, r2, tail, settings), tail, p, r2,
                                   op.mode_index, flux))
    return out


def classify(op: RadialOperator, lam, settings=DEFAULT_SETTINGS,
             boundary="recessive") -> EigenScanResult:
    return classify_many(op, [lam], settings, boundary)[0]


def scan(ops: Sequence[RadialOperator], lams, settings=DEFAULT_SETTINGS,
         boundary="recessive") -> list:
    """Classify every lam for every operator, ordered by (mode, lam)."""
    out = []
    for op in sorted(ops, key=lambda o: o.mode_index):
        out.extend(classify_many(op, lams, settings, boundary))
    return out


def tail_functional(op: RadialOperator, lams, settings=DEFAULT_SETTINGS):
    """T(lam): mean of R over the last quarter of [x0, X], with R(x0) = 1."""
    trajs = integrate_batch(op, lams, "recessive", settings)
    out = []
    for t in trajs:
        out.append(float(np.mean(t.R[_tail_mask(t.x)])))
    return np.array(out)


class Refinement(NamedTuple):
    lambda_star: float
    quality: float
    T_star: float


def refine_candidate(op: RadialOperator, lambda_lo, lambda_hi, settings=DEFAULT_SETTINGS,
                     xtol=1e-3, coarse=11) -> Refinement:
    """Golden-section minimisation of the tail functional on a bracket.

    A coarse batched grid first localises the minimum; golden section then
    runs on the two grid cells around it.  ``quality`` is the contrast
    min(T(lam* - d), T(lam* + d)) / T(lam*) with d = (hi - lo)/10.
    """
    lo, hi = float(lambda_lo), float(lambda_hi)
    if not hi > lo:
        raise ParameterError("need lambda_lo < lambda_hi")
    grid = np.linspace(lo, hi, coarse)
    T = tail_functional(op, grid, settings)
    if np.max(T) <= np.min(T) * (1.0 + 1e-6):
        raise BracketError("tail functional is flat on the bracket")
    j = int(np.argmin(T))
    if j in (0, coarse - 1):
        raise BracketError(f"no interior minimum in [{lo}, {hi}] (argmin at an end)")

    def T1(lam):
        return tail_functional(op, [lam], settings)[0]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = grid[j - 1], grid[j + 1]
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = T1(c), T1(d)
    while b - a > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = T1(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = T1(d)
    lam_star, t_star = (c, fc) if fc < fd else (d, fd)
    delta = (hi - lo) / 10.0
    side = tail_functional(op, [lam_star - delta, lam_star + delta], settings)
    return Refinement(float(lam_star), float(np.min(side) / t_star), float(t_star))


class DecayEstimate(NamedTuple):
    rate: float
    r2: float
    model: str
    measure: str


def estimate_decay(source, model="power", measure="flat", lo=None,
                   r2_min=0.8) -> DecayEstimate:
    """Fit the decay rate of a solution envelope.

    ``source`` is a :class:`ShootingTrajectory` or an ``(x, u)`` pair of
    arrays.  ``model='power'`` fits log(envelope) against log x and returns p
    in env ~ x^-p; ``model='exponential'`` fits against x and returns eta in
    env ~ exp(-eta x).  With ``measure='geometric'`` a trajectory's density
    h^(n-1) u^2 is fitted instead of the flat amplitude.
    """
    if model not in ("power", "exponential"):
        raise ParameterError(f"unknown decay model {model!r}")
    if measure not in ("flat", "geometric"):
        raise ParameterError(f"unknown measure {measure!r}")
    if isinstance(source, ShootingTrajectory):
        t = source
        start = t.x[0] + 0.5 * (t.x[-1] - t.x[0]) if lo is None else lo
        if measure == "flat":
            xs, env = envelope(t, start)
        else:
            m = t.x >= start
            dens = t.op.geometric_density(t.x[m], t.w[m])
            xs, env = nm.block_maxima(t.x[m], dens, np.pi / t.kappa)
    else:
        x, u = (np.asarray(v, dtype=float) for v in source)
        if measure == "geometric":
            raise ParameterError("geometric measure needs a trajectory")
        if lo is not None:
            keep = x >= lo
            x, u = x[keep], u[keep]
        xs, env = nm.local_maxima(x, np.abs(u))
    ok = env > 0
    xs, env = xs[ok], env[ok]
    if xs.size < 3:
        raise EstimationError("too few envelope points for a fit")
    abscissa = np.log(xs) if model == "power" else xs
    fit = nm.linear_fit(abscissa, np.log(env))
    if not fit.r2 >= r2_min:
        raise EstimationError(f"envelope fit R^2 = {fit.r2:.3f} below {r2_min}")
    return DecayEstimate(-fit.slope, fit.r2, model, measure)


def with_settings(settings: SolverSettings, **changes) -> SolverSettings:
    return replace(settings, **changes)
