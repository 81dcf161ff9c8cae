from functools import partial

import numpy as np
import pytest

from vaporg2.dynamics import CoefficientSystem, build_system
from vaporg2.validation import check_generator, random_pair_configs, run_validation


def test_fresh_build_passes():
    report = run_validation(n_configs=20, n_generator=20, n_quadrature=20)
    assert report.passed, report.lines()
    gen = report.checks[0]
    assert gen.worst < 1e-12 and gen.count == 20
    assert all("tol=" in line and "n=" in line for line in report.lines()[:-1])


def test_perturbed_coefficient_is_named():
    def perturbed(cfg):
        sys = build_system(cfg)
        m = np.array(sys.m)
        m[10, 3] += 1e-6
        return CoefficientSystem(m, sys.b)

    res = check_generator(random_pair_configs(3), perturbed)
    assert not res.passed
    assert "M[11,4]" in res.detail


def test_printed_transcription_is_rejected():
    report = run_validation(n_configs=5, n_generator=5, n_quadrature=5,
                            build=partial(build_system, coefficients="printed"))
    assert not report.passed
    assert "M[7,15]" in report.checks[0].detail or "M[8,15]" in report.checks[0].detail


@pytest.mark.parametrize("seed", [0, 1])
def test_config_generator_ranges(seed):
    cfgs = random_pair_configs(50, seed)
    assert all(0.0628 <= c.x <= 10 for c in cfgs)
    assert all(abs(c.delta1) <= 15 and 0 < abs(c.omega1) <= 50 for c in cfgs)
