import csv

import numpy as np
import pytest

from conftest import ExpProfile
from warpspec.counterexample import (
    TAIL_WINDOW,
    property_i_check,
    run_theorem_1_5,
    sup_r_abs_K,
)
from warpspec.errors import ParameterError
from warpspec.geometry import PowerLaw, build_f1
from warpspec.separation import build_radial_operator, round_sphere_end
from warpspec.solver import (
    DEFAULT_SETTINGS,
    L2_CANDIDATE,
    classify,
    default_truncation,
    refine_candidate,
    with_settings,
)


@pytest.fixture(scope="module")
def report():
    return run_theorem_1_5(alpha=0.75, k=6.0, n=2)


def test_property_i_f1():
    rep = property_i_check(build_f1(0.75, 2.0))
    assert rep.passed
    assert rep.exponent == pytest.approx(0.75, abs=0.1)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_property_i_power_law(theta):
    rep = property_i_check(PowerLaw(theta))
    assert rep.passed
    assert rep.exponent == pytest.approx(1.0, abs=1e-6)


def test_property_i_exponential_fails():
    rep = property_i_check(ExpProfile(1.0))
    assert not rep.passed
    assert rep.tail_max == pytest.approx(1.0)


def test_sup_rK_is_twice_k():
    for k in (2.0, -3.0):
        assert sup_r_abs_K(build_f1(0.75, k)) == pytest.approx(2 * abs(k), rel=0.05)


def test_pipeline_checks(report):
    assert report.passed, report.checks
    assert report.verdict().startswith("PASS")
    assert report.candidate_lambdas == (1.0,)
    assert abs(report.refinement.lambda_star - 1.0) <= 0.05
    assert report.a_decay.exponent == pytest.approx(0.75, abs=0.1)
    assert 0.8 * 12 <= report.sup_rK <= 1.2 * 12
    assert report.lambda1_probe > 1.0


def test_pipeline_no_candidate_off_resonance(report):
    off = [r for r in report.scan if abs(r.lambda_trial - 1.0) > 0.05]
    assert off and all(r.classification != L2_CANDIDATE for r in off)
    assert 0 in report.modes


def test_pipeline_candidate_exponent_matches_oracle(report):
    assert report.oracle_exponent == 1.5
    assert report.candidate_exponent == pytest.approx(1.5, rel=0.15)


def test_pipeline_fitted_constants(report):
    c = report.constants
    # the cos(2r)/r part of K gives K3 and b1 near 2|k|
    assert c.K3 == pytest.approx(12.0, rel=0.05)
    assert c.b1 == pytest.approx(12.0, rel=0.05)
    assert report.gamma_min == pytest.approx(0.5 * (c.a_hat + c.b_hat))


def test_report_csv(report, tmp_path):
    path = tmp_path / "report.csv"
    report.write_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["# summary"]
    assert rows[1] == ["key", "value"]
    split = rows.index(["# scan"])
    summary = dict(rows[2:split])
    assert float(summary["lambda_star"]) == report.refinement.lambda_star
    assert summary["check_unique_candidate"] == "true"
    assert rows[split + 1] == ["mode", "lambda", "classification", "tail_mass_ratio",
                               "envelope_exponent", "fit_r2"]
    assert len(rows) - split - 2 == len(report.scan)


@pytest.mark.parametrize("k", [4.0, 6.0, 8.0])
def test_exponent_scales_with_k(k):
    n = 2
    end = round_sphere_end(n, 1.0, build_f1(0.75, k), 0)
    op = build_radial_operator(end, 0, default_truncation(1.0, 0.1))
    r = classify(op, 1.0)
    assert r.classification == L2_CANDIDATE
    assert r.envelope_exponent == pytest.approx((n - 1) * k / 4, rel=0.15)


def test_weak_oscillation_has_no_candidate():
    # (n-1)|k|/4 = 0.375 < 1/2: the resonant solution is not square integrable
    rep = run_theorem_1_5(alpha=0.75, k=1.5, n=2)
    assert rep.candidate_lambdas == ()
    assert not rep.checks["unique_candidate"]
    assert rep.verdict().startswith("FAIL")


def test_candidate_location_stable(report):
    end = round_sphere_end(2, 1.0, build_f1(0.75, 6.0), 0)
    base = report.refinement.lambda_star
    X = report.X
    doubled = refine_candidate(build_radial_operator(end, 0, 2 * X), 0.9, 1.1)
    tight = with_settings(DEFAULT_SETTINGS, rtol=DEFAULT_SETTINGS.rtol / 2)
    halved = refine_candidate(build_radial_operator(end, 0, X), 0.9, 1.1, tight)
    assert doubled.lambda_star == pytest.approx(base, abs=0.02)
    assert halved.lambda_star == pytest.approx(base, abs=0.02)


def test_pipeline_rejects_bad_grid():
    with pytest.raises(ParameterError):
        run_theorem_1_5(lambda_grid=[1.0])
    with pytest.raises(ParameterError):
        run_theorem_1_5(lambda_grid=[0.0, 1.0])


def test_tail_window_default():
    assert TAIL_WINDOW == (2.0**17, 2.0**19)
    assert np.isfinite(sup_r_abs_K(build_f1(0.6, -1.5)))
