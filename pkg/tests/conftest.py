from dataclasses import dataclass

import numpy as np
import pytest

from warpspec.geometry import OscillatoryExp, PowerLaw, Sampled, WarpingProfile, build_f1


@dataclass(frozen=True)
class ExpProfile(WarpingProfile):
    """h = exp(c r): A = c never decays."""

    c: float = 1.0
    r_min: float = 0.0

    def _log_h(self, r):
        return self.c * r

    def _A(self, r):
        return self.c + 0.0 * r

    def _A_prime(self, r):
        return 0.0 * r


@dataclass(frozen=True)
class GaussProfile(WarpingProfile):
    """h = exp(r^2): A = 2r, K = -(2 + 4 r^2)."""

    r_min: float = 0.0

    def _log_h(self, r):
        return r * r

    def _A(self, r):
        return 2.0 * r

    def _A_prime(self, r):
        return 2.0 + 0.0 * r


def sampled_power(theta=0.5, lo=0.5, hi=60.0, step=0.01):
    r = np.arange(lo, hi + step / 2, step)
    return Sampled(r, r**theta)


def central_diff(fn, r, step=1e-4):
    return (fn(r + step) - fn(r - step)) / (2 * step)


BUILTIN = {
    "power_1": lambda: PowerLaw(1.0),
    "power_0.5": lambda: PowerLaw(0.5),
    "power_2.3": lambda: PowerLaw(2.3),
    "f1_0.75_2": lambda: build_f1(0.75, 2.0),
    "f1_0.6_-1.5": lambda: build_f1(0.6, -1.5),
    "osc_ref": lambda: OscillatoryExp(0.75, 0.0),
    "sampled": sampled_power,
}


@pytest.fixture(params=sorted(BUILTIN))
def builtin_profile(request):
    return BUILTIN[request.param]()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
