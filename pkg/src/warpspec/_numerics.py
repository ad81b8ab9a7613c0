"""Grids, envelope extraction and small regression helpers."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import WindowError

# Oscillating terms in the built-in profiles have period pi (sin 2r).
OSCILLATION_PERIOD = np.pi
DEFAULT_DENSITY = 64.0
MIN_POINTS_PER_PERIOD = 20
MAX_GRID_POINTS = 2**22
ROUNDOFF = 1e-12


def grid_density(length, density=DEFAULT_DENSITY, max_points=MAX_GRID_POINTS):
    """Points per unit r: halve from ``density`` while the grid is too large,
    never dropping below MIN_POINTS_PER_PERIOD samples per period."""
    while (
        length * density > max_points
        and (density / 2.0) * OSCILLATION_PERIOD >= MIN_POINTS_PER_PERIOD
    ):
        density /= 2.0
    return density


def radial_grid(lo, hi, density=DEFAULT_DENSITY, max_points=MAX_GRID_POINTS):
    if not (np.isfinite(lo) and np.isfinite(hi)) or not hi > lo:
        raise WindowError(f"invalid window [{lo}, {hi}]")
    d = grid_density(hi - lo, density, max_points)
    n = int(np.ceil((hi - lo) * d)) + 1
    return np.linspace(lo, hi, max(n, 2))


def octave_edges(lo, hi, min_octaves=3):
    """Dyadic windows [lo 2^j, lo 2^(j+1)] covering [lo, hi]."""
    if not lo > 0 or not hi > lo:
        raise WindowError(f"invalid window [{lo}, {hi}]")
    count = int(np.floor(np.log2(hi / lo) + 1e-9))
    if count < min_octaves:
        raise WindowError(
            f"window [{lo}, {hi}] spans {np.log2(hi / lo):.2f} octaves, "
            f"need >= {min_octaves}"
        )
    return [(lo * 2.0**j, lo * 2.0 ** (j + 1)) for j in range(count)]


class Fit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def linear_fit(x, y) -> Fit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return Fit(np.nan, np.nan, np.nan)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(y**2))):
        r2 = 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return Fit(float(slope), float(intercept), r2)


class OctaveEnvelope(NamedTuple):
    starts: np.ndarray
    maxima: np.ndarray
    argmax: np.ndarray


def octave_maxima(
    fn: Callable[[np.ndarray], np.ndarray],
    lo,
    hi,
    density=DEFAULT_DENSITY,
    min_octaves=3,
) -> OctaveEnvelope:
    """max |fn| over each dyadic window, evaluated one octave at a time."""
    edges = octave_edges(lo, hi, min_octaves)
    starts, maxima, where = [], [], []
    for a, b in edges:
        r = radial_grid(a, b, density)
        v = np.abs(fn(r))
        j = int(np.argmax(v))
        starts.append(a)
        maxima.append(float(v[j]))
        where.append(float(r[j]))
    return OctaveEnvelope(np.array(starts), np.array(maxima), np.array(where))


def sampled_octave_maxima(x, values, min_octaves=3) -> OctaveEnvelope:
    """Octave maxima of |values| for data already sampled on ``x``."""
    x = np.asarray(x, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    edges = octave_edges(x[0], x[-1], min_octaves)
    starts, maxima, where = [], [], []
    for a, b in edges:
        m = (x >= a) & (x <= b)
        j = int(np.argmax(v[m]))
        starts.append(a)
        maxima.append(float(v[m][j]))
        where.append(float(x[m][j]))
    return OctaveEnvelope(np.array(starts), np.array(maxima), np.array(where))


class DecayVerdict(NamedTuple):
    passed: bool
    exponent: float
    r2: float
    maxima: np.ndarray


def tends_to_zero(env: OctaveEnvelope, floor=1e-12, min_exponent=0.05) -> DecayVerdict:
    """Falsifiable surrogate for ``lim = 0`` from octave maxima.

    Passes when every octave maximum is below ``floor`` or when the maxima
    decrease strictly from octave to octave with a fitted power-law exponent
    of at least ``min_exponent``.
    """
    m = env.maxima
    if np.all(m <= floor):
        return DecayVerdict(True, np.inf, 1.0, m)
    pos = np.maximum(m, np.finfo(float).tiny)
    fit = linear_fit(np.log(env.starts), np.log(pos))
    exponent = -fit.slope
    strictly = bool(np.all(np.diff(m) < 0))
    return DecayVerdict(strictly and exponent >= min_exponent, exponent, fit.r2, m)


def block_maxima(x, y, block_length):
    """Maxima of ``y`` over consecutive blocks of ``block_length`` in ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    idx = np.floor((x - x[0]) / block_length).astype(int)
    n_blocks = idx[-1] + 1
    # Drop a ragged last block shorter than half a block.
    if x[-1] - (x[0] + idx[-1] * block_length) < 0.5 * block_length:
        n_blocks -= 1
    centers, maxima = [], []
    for b in range(n_blocks):
        m = idx == b
        if not np.any(m):
            continue
        j = np.argmax(y[m])
        centers.append(x[m][j])
        maxima.append(y[m][j])
    return np.array(centers), np.array(maxima)


def local_maxima(x, y):
    """Interior local maxima of ``y``; falls back to all samples when none."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    inner = (y[1:-1] >= y[:-2]) & (y[1:-1] > y[2:])
    idx = np.nonzero(inner)[0] + 1
    if idx.size < 3:
        return x, y
    return x[idx], y[idx]


def snap(margin, scale=1.0):
    """Round-off sized negatives are reported as exactly zero."""
    if -ROUNDOFF * max(1.0, abs(scale)) < margin < 0:
        return 0.0
    return float(margin)


def fmt(x):
    """CSV field text; floats use 17 significant digits (exact round trip)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x) + 0.0, ".17g")
