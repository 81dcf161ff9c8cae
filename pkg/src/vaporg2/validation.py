"""Cross-checks of the production path against the density-matrix oracle."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import oracle
from .constants import MIN_X, STIFF_G12
from .coupling import coupling_g12, damping_gamma12, f_quadrature
from .dynamics import CoefficientSystem, PairConfig, build_system, steady_state
from .regression import g2_denominator, g2_numerator

GENERATOR_TOL = 1e-12
STEADY_TOL = 1e-10
G2_TOL = 1e-8
G2_TOL_STIFF = 1e-6
QUAD_TOL = 1e-8


@dataclass
class CheckResult:
    name: str
    count: int
    tolerance: float
    worst: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"[{status}] {self.name}: n={self.count} worst={self.worst:.3e} tol={self.tolerance:.0e}{extra}"


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks] + [f"elapsed {self.seconds:.1f} s"]


def random_pair_configs(n: int, seed: int = 2024, omega_max: float = 50.0) -> list[PairConfig]:
    """Configurations spanning x in [0.0628, 10], |Delta| <= 15, Omega_R in (0, 50]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        x = rng.uniform(MIN_X, 10.0)
        c = rng.uniform(-1.0, 1.0)
        omega = omega_max * (1.0 - rng.uniform())  # (0, omega_max]
        phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
        d1, d2 = rng.uniform(-15.0, 15.0, size=2)
        out.append(
            PairConfig(
                delta1=d1,
                delta2=d2,
                omega1=omega * np.exp(1j * phases[0]),
                omega2=omega * np.exp(1j * phases[1]),
                gamma12=damping_gamma12(x, c),
                g12=coupling_g12(x, c),
                x=x,
            )
        )
    return out


def check_generator(configs, build: Callable[[PairConfig], CoefficientSystem] = build_system) -> CheckResult:
    worst, where = 0.0, ""
    for cfg in configs:
        sys = build(cfg)
        m_ref, b_ref = oracle.expand_generator(oracle.build_liouvillian(cfg))
        dm = np.abs(sys.m - m_ref)
        db = np.abs(sys.b - b_ref)
        if dm.max() > worst:
            r, c = np.unravel_index(np.argmax(dm), dm.shape)
            worst, where = float(dm.max()), f"M[{r + 1},{c + 1}]"
        if db.max() > worst:
            worst, where = float(db.max()), f"b[{int(np.argmax(db)) + 1}]"
    ok = worst <= GENERATOR_TOL
    return CheckResult("generator expansion", len(configs), GENERATOR_TOL, worst, ok,
                       "" if ok else f"worst coefficient {where}")


def check_steady_state(configs, build=build_system) -> CheckResult:
    worst = 0.0
    for cfg in configs:
        s = steady_state(build(cfg))
        rho = oracle.dm_steady_state(oracle.build_liouvillian(cfg))
        worst = max(worst, float(np.max(np.abs(s - oracle.dm_expectations(rho)))))
    return CheckResult("steady state", len(configs), STEADY_TOL, worst, worst <= STEADY_TOL)


def g2_deviation(cfg: PairConfig, tau: np.ndarray, build=build_system) -> tuple[float, float]:
    """Scaled pointwise g2 deviation from the oracle and the tolerance that applies."""
    sys = build(cfg)
    s_ss = steady_state(sys)
    g2 = g2_numerator(sys, s_ss, tau) / g2_denominator(s_ss)
    ref = oracle.dm_g2_series(cfg, tau)["g2"]
    dev = float(np.max(np.abs(g2 - ref) / np.maximum(1.0, np.abs(ref))))
    tol = G2_TOL_STIFF if abs(cfg.g12) > STIFF_G12 else G2_TOL
    return dev, tol


def check_g2(configs, tau=None, build=build_system) -> CheckResult:
    tau = np.linspace(0.0, 5.0, 51) if tau is None else tau
    worst_ratio, worst, n_stiff = 0.0, 0.0, 0
    for cfg in configs:
        dev, tol = g2_deviation(cfg, tau, build)
        n_stiff += tol == G2_TOL_STIFF
        if dev / tol > worst_ratio:
            worst_ratio, worst = dev / tol, dev
    return CheckResult("g2 curves vs oracle", len(configs), G2_TOL, worst, worst_ratio <= 1.0,
                       f"({n_stiff} stiff configs at {G2_TOL_STIFF:.0e})")


def check_quadrature(n: int = 200, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        x = rng.uniform(1e-3, 50.0)
        c = rng.uniform(-1.0, 1.0)
        worst = max(worst, abs(f_quadrature(x, c).real - damping_gamma12(x, c)))
    return CheckResult("gamma12 vs solid-angle quadrature", n, QUAD_TOL, worst, worst <= QUAD_TOL)


def run_validation(
    n_configs: int = 100,
    n_generator: int = 20,
    n_quadrature: int = 200,
    seed: int = 2024,
    build: Callable[[PairConfig], CoefficientSystem] = build_system,
) -> ValidationReport:
    start = time.perf_counter()
    configs = random_pair_configs(max(n_configs, n_generator), seed)
    report = ValidationReport()
    report.checks.append(check_generator(configs[:n_generator], build))
    report.checks.append(check_steady_state(configs[:n_configs], build))
    report.checks.append(check_g2(configs[:n_configs], build=build))
    report.checks.append(check_quadrature(n_quadrature, seed + 1))
    report.seconds = time.perf_counter() - start
    return report
