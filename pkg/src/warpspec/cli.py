"""Command line front end.

    warpspec {check,thresholds,scan,counterexample,identity} [--config PATH]
             [--out DIR] [--set section.key=value ...] [--modes N]
             [--lambda-grid lo:hi:step]

The config file is plain text, one ``section.key = value`` per line; ``#``
starts a comment.  Lists are comma separated.  Unknown keys are errors.
Exit status: 0 success, 1 a check failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import _numerics as nm
from .conditions import HypothesisConstants, fit_constants, run_checks
from .counterexample import run_theorem_1_5, write_scan_rows
from .errors import ConfigError, WarpspecError
from .geometry import EndGeometry, OscillatoryExp, PowerLaw, build_f1, load_profile_csv
from .separation import (
    build_radial_operator,
    lemma_3_1_sides,
    prune_modes,
    sample_potential,
    sphere_spectrum,
)
from .solver import SolverSettings, classify_many, default_truncation, integrate
from .thresholds import threshold_bundle

log = logging.getLogger("warpspec")

SUBCOMMANDS = ("check", "thresholds", "scan", "counterexample", "identity")


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


_PROFILE_KEYS = {"kind": str, "theta": float, "alpha": float, "k": float, "file": str}

SCHEMA = {
    "geometry": {"n": int, "r0": float, "l_max": int, "eigenvalues": _floats},
    "profile": dict(_PROFILE_KEYS),
    "reference": dict(_PROFILE_KEYS),
    "window": {"lo": float, "hi": float},
    "constants": {
        "a": float, "b": float, "A0": float, "B0": float, "b1": float, "K3": float,
        "gamma": float, "theta": float, "fit": _bool, "band_a": float,
    },
    "thresholds": {"lambda": float, "gamma_grid": _floats},
    "scan": {
        "lambda_lo": float, "lambda_hi": float, "lambda_step": float, "modes": int,
        "X": float, "boundary": str, "dump_potential": _bool, "dump_trajectory": float,
    },
    "identity": {"beta": float, "s": float, "t": float, "v": str},
    "counterexample": {
        "alpha": float, "k": float, "n": int, "lambda_lo": float, "lambda_hi": float,
        "lambda_step": float, "X": float, "window_lo": float, "window_hi": float,
        "decay_lo": float, "decay_hi": float,
    },
    "tolerances": {
        "rtol": float, "atol": float, "samples_per_unit": float, "extension": float,
        "kappa_floor": float, "exponent_margin": float, "oscillatory_band": float,
        "tail_min": float, "r2_min": float, "identity_max": float, "density": float,
        "exponent_tol": float, "sup_rK_tol": float, "target_tol": float,
    },
}

_SOLVER_KEYS = ("rtol", "atol", "samples_per_unit", "extension", "kappa_floor",
                "exponent_margin", "oscillatory_band", "tail_min", "r2_min")


class Config:
    """Parsed ``section.key`` values with typed access and defaults."""

    def __init__(self, values=None):
        self.values = dict(values or {})

    def get(self, dotted, default=None):
        return self.values.get(dotted, default)

    def require(self, dotted):
        if dotted not in self.values:
            raise ConfigError(f"missing required key {dotted}")
        return self.values[dotted]

    def section(self, name):
        p = name + "."
        return {k[len(p):]: v for k, v in self.values.items() if k.startswith(p)}

    def set(self, dotted, raw, source="override"):
        self.values[dotted] = _convert(dotted, raw, source)


def _convert(dotted, raw, source):
    section, _, key = dotted.partition(".")
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigError(f"{source}: unknown key {dotted!r}")
    try:
        return SCHEMA[section][key](raw.strip())
    except ValueError as exc:
        raise ConfigError(f"{source}: bad value for {dotted}: {exc}") from None


def parse_config(text, source="<config>") -> Config:
    cfg = Config()
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, eq, raw = body.partition("=")
        key = key.strip()
        where = f"{source}:{lineno}"
        if not eq or "." not in key:
            raise ConfigError(f"{where}: expected 'section.key = value'")
        if key in cfg.values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        cfg.values[key] = _convert(key, raw, where)
    return cfg


def load_config(path) -> Config:
    if path is None:
        return Config()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(), str(p))


def lambda_grid(lo, hi, step):
    """Inclusive grid lo, lo + step, ..., hi (rounded to kill drift)."""
    if not (step > 0 and hi >= lo):
        raise ConfigError(f"bad lambda grid {lo}:{hi}:{step}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


def _profile(cfg, section):
    spec = cfg.section(section)
    kind = spec.get("kind")
    if kind is None:
        return None
    if kind == "power":
        return PowerLaw(spec.get("theta", 1.0))
    if kind == "oscillatory":
        return OscillatoryExp(spec.get("alpha", 0.75), spec.get("k", 0.0))
    if kind == "f1":
        return build_f1(spec.get("alpha", 0.75), spec.get("k", 6.0))
    if kind == "sampled":
        if "file" not in spec:
            raise ConfigError(f"{section}.file required for a sampled profile")
        return load_profile_csv(spec["file"])
    raise ConfigError(f"{section}.kind must be power|oscillatory|f1|sampled, got {kind!r}")


def _end(cfg, min_modes=1):
    prof = _profile(cfg, "profile")
    if prof is None:
        raise ConfigError("missing required key profile.kind")
    n = cfg.get("geometry.n", 2)
    r0 = cfg.get("geometry.r0", max(1.0, prof.r_min))
    eig = cfg.get("geometry.eigenvalues")
    if eig is None:
        l_max = max(cfg.get("geometry.l_max", 0), min_modes - 1)
        eig = [lam for lam, _ in sphere_spectrum(n, l_max)]
    return EndGeometry(n, r0, prof, eig)


def _settings(cfg):
    tol = cfg.section("tolerances")
    return SolverSettings(**{k: tol[k] for k in _SOLVER_KEYS if k in tol})


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else nm.fmt(v) for v in row])


# -- subcommands: each returns (exit status, verdict line) -------------------


def cmd_check(cfg, out):
    end = _end(cfg)
    window = (cfg.require("window.lo"), cfg.require("window.hi"))
    reference = _profile(cfg, "reference")
    density = cfg.get("tolerances.density", nm.DEFAULT_DENSITY)
    c = cfg.section("constants")
    if c.get("fit", False):
        if reference is None:
            raise ConfigError("constants.fit needs a reference profile")
        consts = fit_constants(end, window, reference, density)
    else:
        consts = _constants(cfg)
    report = run_checks(end, consts, window, reference, c.get("band_a"), density)
    report.write_csv(out / "conditions.csv")
    failed = [e.name for e in report.entries if not e.passed]
    if failed:
        return 1, "check: FAIL " + ",".join(failed)
    return 0, f"check: PASS {len(report.entries)} conditions"


def _constants(cfg):
    c = cfg.section("constants")
    names = ("a", "b", "A0", "B0", "b1", "K3")
    missing = [k for k in names if k not in c]
    if missing:
        raise ConfigError("missing constants: " + ", ".join(missing))
    return HypothesisConstants(*(c[k] for k in names), n=cfg.get("geometry.n", 2),
                               gamma=c.get("gamma"), theta=c.get("theta"))


def cmd_thresholds(cfg, out):
    base = _constants(cfg)
    lam = cfg.get("thresholds.lambda", 1.0)
    gammas = cfg.get("thresholds.gamma_grid")
    header = ["lambda1", "y1", "beta", "star8", "eta1"]
    rows = []
    for g in gammas if gammas is not None else [base.gamma]:
        if g is None:
            raise ConfigError("constants.gamma or thresholds.gamma_grid is required")
        consts = HypothesisConstants(base.a, base.b, base.A0, base.B0, base.b1, base.K3,
                                     base.n, g, base.theta)
        tb = threshold_bundle(consts)
        row = [tb.lambda1, tb.y1, tb.beta, tb.star8_rhs, tb.eta1(lam)]
        rows.append(([g] if gammas is not None else []) + row)
    if gammas is not None:
        header = ["gamma"] + header
    _write_rows(out / "thresholds.csv", header, rows)
    return 0, f"thresholds: OK {len(rows)} row(s)"


def cmd_scan(cfg, out):
    s = cfg.section("scan")
    grid = lambda_grid(s.get("lambda_lo", 0.1), s.get("lambda_hi", 4.0), s.get("lambda_step", 0.1))
    n_modes = s.get("modes")
    end = _end(cfg, min_modes=n_modes or 1)
    X = s.get("X", default_truncation(end.r0, grid[0]))
    if n_modes is not None:
        if n_modes > len(end.cross_section_eigenvalues):
            raise ConfigError(f"scan.modes={n_modes} exceeds the cross-section list")
        modes = list(range(n_modes))
    else:
        modes = prune_modes(end, grid[-1], X)
    settings = _settings(cfg)
    boundary = s.get("boundary", "recessive")
    results = []
    for i in modes:
        op = build_radial_operator(end, i, X)
        log.info("scan mode %d (lambda_i=%g), %d trial values", i, op.lambda_i, grid.size)
        results.extend(classify_many(op, grid, settings, boundary))
        if s.get("dump_potential", False):
            x, q = sample_potential(op)
            _write_rows(out / f"potential_mode{i}.csv", ["x", f"q_{i}"], zip(x, q))
        if "dump_trajectory" in s:
            traj = integrate(op, s["dump_trajectory"], boundary, settings)
            traj.write_csv(out / f"trajectory_mode{i}.csv")
    with open(out / "scan.csv", "w", newline="") as fh:
        write_scan_rows(csv.writer(fh, lineterminator="\n"), results)
    counts = {k: sum(r.classification == k for r in results)
              for k in ("L2_candidate", "oscillatory", "inconclusive")}
    return 0, "scan: " + " ".join(f"{k}={v}" for k, v in counts.items())


def cmd_identity(cfg, out):
    import sympy

    end = _end(cfg)
    idt = cfg.section("identity")
    r = sympy.Symbol("r", positive=True)
    try:
        expr = sympy.sympify(idt.get("v", "1/r"), locals={"r": r})
    except (sympy.SympifyError, TypeError) as exc:
        raise ConfigError(f"identity.v: cannot parse: {exc}") from None
    if expr.free_symbols - {r}:
        raise ConfigError("identity.v may only depend on r")
    v = sympy.lambdify(r, expr, "numpy")
    dv = sympy.lambdify(r, sympy.diff(expr, r), "numpy")
    beta = idt.get("beta", 0.0)
    s, t = idt.get("s", end.r0), idt.get("t", 2.0 * end.r0)
    sides = lemma_3_1_sides(end, beta, lambda x: float(v(x)), s, t, lambda x: float(dv(x)))
    _write_rows(out / "identity.csv", ["beta", "s", "t", "lhs", "rhs", "residual"],
                [[beta, s, t, sides.lhs, sides.rhs, sides.residual]])
    tol = cfg.get("tolerances.identity_max", 1e-8)
    ok = sides.residual <= tol
    return (0 if ok else 1), f"identity: {'PASS' if ok else 'FAIL'} residual={sides.residual:.3e}"


def cmd_counterexample(cfg, out):
    c = cfg.section("counterexample")
    tol = cfg.section("tolerances")
    grid = lambda_grid(c.get("lambda_lo", 0.1), c.get("lambda_hi", 4.0), c.get("lambda_step", 0.1))
    kw = {}
    if "window_lo" in c or "window_hi" in c:
        kw["window"] = (c.get("window_lo", 2.0**17), c.get("window_hi", 2.0**19))
    if "decay_lo" in c or "decay_hi" in c:
        kw["decay_window"] = (c.get("decay_lo", 2.0**10), c.get("decay_hi", 2.0**20))
    for key in ("exponent_tol", "sup_rK_tol", "target_tol"):
        if key in tol:
            kw[key] = tol[key]
    report = run_theorem_1_5(c.get("alpha", 0.75), c.get("k", 6.0), c.get("n", 2), grid,
                             X=c.get("X"), settings=_settings(cfg), **kw)
    report.write_csv(out / "counterexample.csv")
    return (0 if report.passed else 1), "counterexample: " + report.verdict()


COMMANDS = {
    "check": cmd_check,
    "thresholds": cmd_thresholds,
    "scan": cmd_scan,
    "counterexample": cmd_counterexample,
    "identity": cmd_identity,
}


def build_parser():
    p = argparse.ArgumentParser(prog="warpspec", description=__doc__.split("\n")[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="line-oriented section.key = value file")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config value (repeatable)")
    p.add_argument("--modes", type=int, help="scan modes 0..N-1 instead of pruning")
    p.add_argument("--lambda-grid", metavar="LO:HI:STEP", help="trial lambda grid")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(config_path, subcommand, overrides=(), out=".", modes=None, grid=None):
    """Programmatic entry: returns the exit status."""
    try:
        cfg = load_config(config_path)
        for item in overrides:
            key, eq, raw = item.partition("=")
            if not eq:
                raise ConfigError(f"--set expects section.key=value, got {item!r}")
            cfg.set(key.strip(), raw, "--set")
        if modes is not None:
            cfg.set("scan.modes", str(modes), "--modes")
        if grid is not None:
            parts = grid.split(":")
            if len(parts) != 3:
                raise ConfigError("--lambda-grid expects lo:hi:step")
            section = "counterexample" if subcommand == "counterexample" else "scan"
            for key, raw in zip(("lambda_lo", "lambda_hi", "lambda_step"), parts):
                cfg.set(f"{section}.{key}", raw, "--lambda-grid")
        if subcommand not in COMMANDS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        status, verdict = COMMANDS[subcommand](cfg, outdir)
    except (WarpspecError, ValueError, OSError) as exc:
        print(f"warpspec: error: {exc}", file=sys.stderr)
        return 2
    (outdir / "verdict.txt").write_text(verdict + "\n")
    print(verdict)
    return status


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args.config, args.subcommand, args.set, args.out, args.modes, args.lambda_grid)


if __name__ == "__main__":
    sys.exit(main())
