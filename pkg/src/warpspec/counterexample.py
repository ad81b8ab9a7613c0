"""End-to-end run on the oscillating profile f1.

f1 has A = r^-alpha + k sin(2r)/r.  Its Hessian of r decays to zero while
r K stays bounded but not small, and the mode potentials pick up a
Wigner-von Neumann term (n-1) k cos(2x)/x that resonates at lam = 1.  The
pipeline checks the geometric properties, scans the modes for L2 candidates,
refines the one near 1 and compares it with the absence threshold lambda1
evaluated on constants fitted to f1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _numerics as nm
from .conditions import HypothesisConstants, fit_constants
from .errors import BracketError, ParameterError
from .geometry import EndGeometry, OscillatoryExp, WarpingProfile, build_f1
from .separation import build_radial_operator, prune_modes, round_sphere_end
from .solver import (
    DEFAULT_SETTINGS,
    L2_CANDIDATE,
    Refinement,
    classify_many,
    default_truncation,
    refine_candidate,
)
from .thresholds import lambda1

DECAY_WINDOW = (2.0**10, 2.0**20)
TAIL_WINDOW = (2.0**17, 2.0**19)


@dataclass(frozen=True)
class DecayReport:
    """Octave envelope of |nabla dr| = A(r) and its fitted power."""

    exponent: float
    r2: float
    tail_max: float
    passed: bool
    starts: np.ndarray = field(repr=False)
    maxima: np.ndarray = field(repr=False)


def property_i_check(profile: WarpingProfile, window=DECAY_WINDOW,
                     density=nm.DEFAULT_DENSITY, min_exponent=0.05) -> DecayReport:
    """Does A(r) -> 0?  Dyadic maxima must decrease with a positive power."""
    lo, hi = window
    env = nm.octave_maxima(profile.A, lo, hi, density)
    verdict = nm.tends_to_zero(env, min_exponent=min_exponent)
    return DecayReport(verdict.exponent, verdict.r2, float(env.maxima[-1]), verdict.passed,
                       env.starts, env.maxima)


def sup_r_abs_K(profile: WarpingProfile, window=TAIL_WINDOW, density=nm.DEFAULT_DENSITY):
    """sup r |K(r)| over the window, evaluated one octave at a time."""
    lo, hi = window
    env = nm.octave_maxima(lambda r: r * profile.K(r), lo, hi, density, min_octaves=1)
    return float(np.max(env.maxima))


def _mode_count(end_n, r0, profile, lambda_top, X):
    # Enough sphere modes that pruning, not l_max, decides where to stop.
    probe = round_sphere_end(end_n, r0, profile, 0)
    op0 = build_radial_operator(probe, 0, X)
    x = np.linspace(r0, X, 4096)
    sup_q0 = float(np.max(np.abs(op0.potential(x))))
    h0 = float(profile.h(r0))
    return int(math.ceil(h0 * math.sqrt(lambda_top + sup_q0))) + 1


@dataclass(frozen=True)
class CounterexampleReport:
    alpha: float
    k: float
    n: int
    X: float
    a_decay: DecayReport
    sup_rK: float
    modes: tuple
    scan: list = field(repr=False)
    candidate_lambdas: tuple
    refinement: Optional[Refinement]
    refine_error: Optional[str]
    candidate_exponent: float
    oracle_exponent: float
    constants: HypothesisConstants
    gamma_min: float
    gamma_flux: float
    lambda1_probe: float
    lambda1_flux: float
    checks: dict

    @property
    def passed(self):
        return all(self.checks.values())

    def verdict(self):
        bad = [name for name, ok in self.checks.items() if not ok]
        if not bad:
            lam = self.refinement.lambda_star if self.refinement else float("nan")
            return (f"PASS: unique L2 candidate at lambda*={lam:.6f}; "
                    f"A decays like r^-{self.a_decay.exponent:.3f}; "
                    f"sup r|K|={self.sup_rK:.4f}; lambda1={self.lambda1_probe:.6g} > 1")
        return "FAIL: " + ", ".join(bad)

    def summary_rows(self):
        c = self.constants
        rows = [
            ("alpha", self.alpha), ("k", self.k), ("n", self.n), ("X", self.X),
            ("A_decay_exponent", self.a_decay.exponent),
            ("A_decay_r2", self.a_decay.r2),
            ("A_tail_max", self.a_decay.tail_max),
            ("sup_rK", self.sup_rK),
            ("candidate_count", len(self.candidate_lambdas)),
            ("lambda_star", self.refinement.lambda_star if self.refinement else None),
            ("contrast", self.refinement.quality if self.refinement else None),
            ("candidate_exponent", self.candidate_exponent),
            ("oracle_exponent", self.oracle_exponent),
            ("a", c.a), ("b", c.b), ("A0", c.A0), ("B0", c.B0), ("b1", c.b1), ("K3", c.K3),
            ("gamma_min", self.gamma_min), ("gamma_flux", self.gamma_flux),
            ("lambda1_probe", self.lambda1_probe), ("lambda1_flux", self.lambda1_flux),
        ]
        return rows + [(f"check_{name}", ok) for name, ok in self.checks.items()]

    def write_csv(self, path):
        """Sectioned CSV: a key,value summary block then the scan table."""
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["# summary"])
            out.writerow(["key", "value"])
            for key, val in self.summary_rows():
                out.writerow([key, nm.fmt(val)])
            out.writerow(["# scan"])
            write_scan_rows(out, self.scan)


def write_scan_rows(writer, results):
    writer.writerow(["mode", "lambda", "classification", "tail_mass_ratio",
                     "envelope_exponent", "fit_r2"])
    for r in results:
        writer.writerow([nm.fmt(int(r.mode_index)), nm.fmt(r.lambda_trial), r.classification,
                         nm.fmt(r.tail_mass_ratio), nm.fmt(r.envelope_exponent),
                         nm.fmt(r.fit_r2)])


def _distinct(values, tol):
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def run_theorem_1_5(alpha=0.75, k=6.0, n=2, lambda_grid=None, window=TAIL_WINDOW,
                    decay_window=DECAY_WINDOW, X=None, settings=DEFAULT_SETTINGS,
                    exponent_tol=0.1, sup_rK_tol=0.2, target=1.0,
                    target_tol=0.05) -> CounterexampleReport:
    """Build f1, check properties (i) and (iii), scan modes, refine, compare.

    ``window`` is where the hypothesis constants and sup r|K| are fitted;
    ``decay_window`` is where the decay of A is measured.
    """
    if lambda_grid is None:
        lambda_grid = np.round(0.1 * np.arange(1, 41), 12)
    grid = np.sort(np.asarray(lambda_grid, dtype=float))
    if grid.size < 2 or grid[0] <= 0:
        raise ParameterError("lambda grid needs >= 2 positive values")
    profile = build_f1(alpha, k)
    r0 = 1.0
    X = default_truncation(r0, grid[0]) if X is None else float(X)

    prop_i = property_i_check(profile, decay_window)
    srk = sup_r_abs_K(profile, window)

    l_max = _mode_count(n, r0, profile, grid[-1], X)
    end = round_sphere_end(n, r0, profile, l_max)
    modes = tuple(prune_modes(end, grid[-1], X))
    results = []
    for i in modes:
        results.extend(classify_many(build_radial_operator(end, i, X), grid, settings))
    cands = [r for r in results if r.classification == L2_CANDIDATE]
    step = float(np.min(np.diff(grid)))
    cand_lams = tuple(_distinct([r.lambda_trial for r in cands], 0.5 * step))

    refinement, refine_error, cand_p = None, None, float("nan")
    near = [r for r in cands if abs(r.lambda_trial - target) <= step + target_tol]
    if near:
        best = min(near, key=lambda r: (r.mode_index, abs(r.lambda_trial - target)))
        cand_p = best.envelope_exponent
        op = build_radial_operator(end, best.mode_index, X)
        try:
            refinement = refine_candidate(op, best.lambda_trial - step,
                                          best.lambda_trial + step, settings)
        except BracketError as exc:
            refine_error = str(exc)

    consts = fit_constants(EndGeometry(n, r0, profile), window, OscillatoryExp(alpha, 0.0))
    gamma_min = 0.5 * (consts.a_hat + consts.b_hat)
    # Flux condition for w ~ x^-p in flat measure: t^gamma |w|^2 -> 0 iff gamma < 2p.
    gamma_flux = 2.0 * cand_p if np.isfinite(cand_p) else float("nan")
    probe = gamma_min + 1.0
    lam1_probe = float(lambda1(probe, consts.a, consts.b, consts.A0, consts.B0,
                               consts.K3, consts.b1, n))
    if np.isfinite(gamma_flux) and gamma_flux > gamma_min:
        lam1_flux = float(lambda1(gamma_flux, consts.a, consts.b, consts.A0, consts.B0,
                                  consts.K3, consts.b1, n))
    else:
        lam1_flux = float("inf")

    checks = {
        "A_decay_exponent": abs(prop_i.exponent - alpha) <= exponent_tol and prop_i.passed,
        "sup_rK_near_2k": abs(srk - 2 * abs(k)) <= sup_rK_tol * 2 * abs(k),
        "unique_candidate": len(cand_lams) == 1,
        "candidate_near_target": refinement is not None
        and abs(refinement.lambda_star - target) <= target_tol,
        "below_lambda1": target < lam1_probe and target < lam1_flux,
    }
    return CounterexampleReport(
        alpha=float(alpha), k=float(k), n=int(n), X=X, a_decay=prop_i, sup_rK=srk,
        modes=modes, scan=results, candidate_lambdas=cand_lams, refinement=refinement,
        refine_error=refine_error, candidate_exponent=cand_p,
        oracle_exponent=(n - 1) * abs(k) / 4.0, constants=consts, gamma_min=gamma_min,
        gamma_flux=gamma_flux, lambda1_probe=lam1_probe, lambda1_flux=lam1_flux,
        checks=checks,
    )


__all__ = [
    "DecayReport",
    "CounterexampleReport",
    "property_i_check",
    "run_theorem_1_5",
    "sup_r_abs_K",
    "write_scan_rows",
]
