"""Thermal-vapor model and Monte Carlo averaging over random atom pairs."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy import special

from . import constants as C
from .coupling import DipoleGeometry, collective_params
from .dynamics import COEFFICIENT_SETS, PairConfig, PropagationError, SingularSystemError
from .regression import G2Series, ZeroDenominatorError, default_tau, g2_series

log = logging.getLogger(__name__)

T_MIN, T_MAX = 320.0, 500.0
RNG_DESCRIPTION = "numpy PCG64 seeded by SeedSequence(entropy=seed, spawn_key=(pair_index,))"
MAX_FAILURE_FRACTION = 0.01
_MAX_REJECTIONS = 100_000

AVERAGING_MODES = ("per-pair-g2", "ratio-of-averages")
DIPOLE_POLICIES = ("fixed-z", "random")


class EnsembleError(RuntimeError):
    pass


def _check_temperature(temperature: float) -> float:
    temperature = float(temperature)
    if not T_MIN <= temperature <= T_MAX:
        raise ValueError(f"temperature {temperature} K outside the accepted range [{T_MIN}, {T_MAX}] K")
    return temperature


def vapor_pressure(temperature: float) -> float:
    """Rubidium vapor pressure in torr (liquid phase)."""
    temperature = _check_temperature(temperature)
    return 10.0 ** (2.881 + 4.312 - 4040.0 / temperature)


def number_density(temperature: float) -> float:
    """Atomic number density in m^-3."""
    temperature = _check_temperature(temperature)
    return C.TORR_TO_PA * vapor_pressure(temperature) / (C.BOLTZMANN * temperature)


def density_in_wavelengths(density_m3: float, wavelength_m: float = C.WAVELENGTH_M) -> float:
    return density_m3 * wavelength_m**3


def spacing_pdf(r, density):
    """Nearest-neighbour spacing density 4 pi N r^2 exp(-4 pi N r^3 / 3)."""
    r = np.asarray(r, dtype=float)
    if density <= 0:
        raise ValueError("density must be positive")
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    out = 4.0 * np.pi * density * r**2 * np.exp(-4.0 * np.pi / 3.0 * density * r**3)
    return float(out) if out.ndim == 0 else out


def mean_spacing(density: float) -> float:
    """Mean spacing (5/9) N^{-1/3}, with N in lambda^-3."""
    if density <= 0:
        raise ValueError("density must be positive")
    return 5.0 / 9.0 * density ** (-1.0 / 3.0)


def box_side(r_av: float) -> float:
    """Cube side whose uniform point pairs have mean distance ``r_av``."""
    if r_av <= 0:
        raise ValueError("r_av must be positive")
    return r_av / C.ROBBINS_CONSTANT


def doppler_sigma_from_temperature(temperature: float, wavelength_m: float = C.WAVELENGTH_M) -> float:
    """One-dimensional Doppler width k_L sqrt(k_B T / m) in units of Gamma."""
    k_l = 2.0 * math.pi / wavelength_m
    v = math.sqrt(C.BOLTZMANN * temperature / C.RB87_MASS)
    return k_l * v / C.GAMMA_RAD_S


@dataclass(frozen=True)
class VaporConditions:
    temperature: float
    wavelength_m: float = C.WAVELENGTH_M
    pressure: float = field(init=False)
    number_density: float = field(init=False)
    mean_spacing: float = field(init=False)

    def __post_init__(self):
        p = vapor_pressure(self.temperature)
        n = number_density(self.temperature)
        object.__setattr__(self, "pressure", p)
        object.__setattr__(self, "number_density", n)
        object.__setattr__(self, "mean_spacing", mean_spacing(density_in_wavelengths(n, self.wavelength_m)))


@dataclass(frozen=True)
class EnsembleSpec:
    temperature: float = 380.0
    delta_av: float = 0.0
    omega_r: float = 20.0
    n_pairs: int = 1500
    min_separation: float = C.MIN_SEPARATION
    detuning_halfwidth: float = 5.0
    doppler_sigma: float | str = "from-temperature"
    dipole_policy: str = "fixed-z"
    averaging_mode: str = "per-pair-g2"
    seed: int = 0
    tau_max: float = 5.0
    tau_points: int = 2001
    wavelength_m: float = C.WAVELENGTH_M
    coefficients: str = "derived"

    def __post_init__(self):
        _check_temperature(self.temperature)
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")
        if not self.min_separation > 0:
            raise ValueError("min_separation must be positive")
        if not self.detuning_halfwidth > 0:
            raise ValueError("detuning_halfwidth must be positive")
        if not self.omega_r >= 0:
            raise ValueError("omega_r must be real and non-negative")
        if self.dipole_policy not in DIPOLE_POLICIES:
            raise ValueError(f"dipole_policy must be one of {DIPOLE_POLICIES}")
        if self.averaging_mode not in AVERAGING_MODES:
            raise ValueError(f"averaging_mode must be one of {AVERAGING_MODES}")
        if isinstance(self.doppler_sigma, str):
            if self.doppler_sigma != "from-temperature":
                raise ValueError("doppler_sigma must be a number or 'from-temperature'")
        elif not self.doppler_sigma >= 0:
            raise ValueError("doppler_sigma must be non-negative")
        if self.coefficients not in COEFFICIENT_SETS:
            raise ValueError(f"coefficients must be one of {COEFFICIENT_SETS}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.tau_points < 2 or not self.tau_max > 0:
            raise ValueError("tau grid needs tau_max > 0 and at least 2 points")

    @property
    def sigma(self) -> float:
        if self.doppler_sigma == "from-temperature":
            return doppler_sigma_from_temperature(self.temperature, self.wavelength_m)
        return float(self.doppler_sigma)

    def tau(self) -> np.ndarray:
        return default_tau(self.tau_max, self.tau_points)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class PairSample:
    index: int
    r1: np.ndarray
    r2: np.ndarray
    delta1: float
    delta2: float
    dipole_axis: np.ndarray
    cfg: PairConfig

    @property
    def r12(self) -> np.ndarray:
        return self.r1 - self.r2


def pair_rng(seed: int, index: int) -> np.random.Generator:
    """Independent, replayable stream for pair ``index``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def _truncated_normal(rng, center, sigma, halfwidth, size):
    u = rng.uniform(size=size)
    if sigma == 0:
        return np.full(size, float(center))
    a = special.ndtr(-halfwidth / sigma)
    b = special.ndtr(halfwidth / sigma)
    z = special.ndtri(a + u * (b - a))
    return center + sigma * np.clip(z, -halfwidth / sigma, halfwidth / sigma)


def sample_pair(rng: np.random.Generator, spec: EnsembleSpec, vapor: VaporConditions, index: int = 0) -> PairSample:
    side = box_side(vapor.mean_spacing)
    if spec.min_separation >= side * math.sqrt(3.0):
        raise ValueError(
            f"min_separation {spec.min_separation} >= box diagonal {side * math.sqrt(3.0):.4g}: cannot place a pair"
        )
    lo = np.array([0.0, -side / 2, -side / 2])
    for _ in range(_MAX_REJECTIONS):
        r1 = lo + side * rng.uniform(size=3)
        r2 = lo + side * rng.uniform(size=3)
        if np.linalg.norm(r1 - r2) >= spec.min_separation:
            break
    else:
        raise ValueError("pair placement rejected too often; min_separation too close to the box size")

    delta1, delta2 = _truncated_normal(rng, spec.delta_av, spec.sigma, spec.detuning_halfwidth, 2)

    if spec.dipole_policy == "random":
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
    else:
        axis = np.array([0.0, 0.0, 1.0])

    coll = collective_params(DipoleGeometry(r1 - r2, axis))
    # k_L along x: Omega_i = Omega_R exp(-i 2 pi x_i)
    cfg = PairConfig(
        delta1=float(delta1),
        delta2=float(delta2),
        omega1=spec.omega_r * np.exp(-1j * C.TWO_PI * r1[0]),
        omega2=spec.omega_r * np.exp(-1j * C.TWO_PI * r2[0]),
        gamma12=coll.gamma12,
        g12=coll.g12,
        x=coll.x,
    )
    return PairSample(index, r1, r2, float(delta1), float(delta2), axis, cfg)


@dataclass
class PairOutcome:
    sample: PairSample
    series: G2Series | None = None
    error: str | None = None


_RECOVERABLE = (PropagationError, SingularSystemError, ZeroDenominatorError, ArithmeticError, np.linalg.LinAlgError)


def _run_pair(spec: EnsembleSpec, vapor: VaporConditions, tau: np.ndarray, index: int) -> PairOutcome:
    sample = sample_pair(pair_rng(spec.seed, index), spec, vapor, index)
    try:
        series = g2_series(sample.cfg, tau, spec.coefficients)
    except _RECOVERABLE as exc:
        return PairOutcome(sample, error=f"{type(exc).__name__}: {exc}")
    return PairOutcome(sample, series)


def _run_block(spec: EnsembleSpec, indices: list[int]) -> list[PairOutcome]:
    vapor = VaporConditions(spec.temperature, spec.wavelength_m)
    tau = spec.tau()
    return [_run_pair(spec, vapor, tau, k) for k in indices]


@dataclass
class EnsembleResult:
    tau: np.ndarray
    g2_mean: np.ndarray
    g2_stderr: np.ndarray
    numerator_mean: np.ndarray
    denominator_mean: float
    pair_g2_zero: np.ndarray  # NaN for failed pairs
    samples: list[PairSample]
    failures: dict[int, str]
    spec: EnsembleSpec
    provenance: dict[str, Any]
    pair_curves: np.ndarray | None = None  # (n_ok, len(tau)), only with keep_curves

    @property
    def n_ok(self) -> int:
        return len(self.samples) - len(self.failures)

    def g2_zero_quantiles(self, qs=(0.05, 0.25, 0.5, 0.75, 0.95)) -> dict[float, float]:
        good = self.pair_g2_zero[np.isfinite(self.pair_g2_zero)]
        return {q: float(np.quantile(good, q)) for q in qs}

    def as_series(self) -> G2Series:
        return G2Series(
            self.tau,
            self.numerator_mean,
            np.full(self.tau.shape, self.denominator_mean),
            self.g2_mean,
            metadata={"ensemble": self.spec},
        )


def _blocks(n: int, workers: int) -> list[list[int]]:
    size = max(1, math.ceil(n / (4 * workers)))
    return [list(range(lo, min(n, lo + size))) for lo in range(0, n, size)]


def ensemble_g2(spec: EnsembleSpec, workers: int = 1, keep_curves: bool = False) -> EnsembleResult:
    """Monte Carlo average of pair g2(tau) curves.

    Each pair draws only from its own (seed, index) stream and writes into a
    pre-assigned slot, so the result does not depend on ``workers``.
    """
    n = spec.n_pairs
    tau = spec.tau()
    if workers <= 1:
        outcomes = _run_block(spec, list(range(n)))
    else:
        outcomes = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_block, spec, block) for block in _blocks(n, workers)]
            for fut in futures:
                outcomes.extend(fut.result())
    outcomes.sort(key=lambda o: o.sample.index)

    failures = {o.sample.index: o.error for o in outcomes if o.error is not None}
    if len(failures) > MAX_FAILURE_FRACTION * n:
        raise EnsembleError(
            f"{len(failures)} of {n} pairs failed (limit {MAX_FAILURE_FRACTION:.0%}); first: "
            + next(iter(failures.values()))
        )
    for k, msg in failures.items():
        log.warning("pair %d skipped: %s", k, msg)

    good = [o.series for o in outcomes if o.series is not None]
    curves = np.stack([s.g2 for s in good])
    numers = np.stack([s.numerator for s in good])
    denoms = np.array([s.denominator[0] for s in good])
    m = len(good)

    num_mean = numers.mean(axis=0)
    den_mean = float(denoms.mean())
    if spec.averaging_mode == "per-pair-g2":
        g2_mean = curves.mean(axis=0)
        stderr = curves.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.zeros_like(g2_mean)
    else:
        g2_mean = num_mean / den_mean
        if m > 1:
            # delta-method standard error of a ratio estimator
            resid = numers - g2_mean[None, :] * denoms[:, None]
            stderr = resid.std(axis=0, ddof=1) / (math.sqrt(m) * den_mean)
        else:
            stderr = np.zeros_like(g2_mean)

    g2_zero = np.full(n, np.nan)
    for o in outcomes:
        if o.series is not None:
            g2_zero[o.sample.index] = o.series.g2[0]

    vapor = VaporConditions(spec.temperature, spec.wavelength_m)
    provenance = {
        "spec": spec.to_dict(),
        "rng": RNG_DESCRIPTION,
        "doppler_sigma_gamma": spec.sigma,
        "detuning_model": "Gaussian truncated to delta_av +/- detuning_halfwidth",
        "box_side_lambda": box_side(vapor.mean_spacing),
        "mean_spacing_lambda": vapor.mean_spacing,
        "number_density_m3": vapor.number_density,
        "n_failed": len(failures),
    }
    return EnsembleResult(
        tau=tau,
        g2_mean=g2_mean,
        g2_stderr=stderr,
        numerator_mean=num_mean,
        denominator_mean=den_mean,
        pair_g2_zero=g2_zero,
        samples=[o.sample for o in outcomes],
        failures=failures,
        spec=spec,
        provenance=provenance,
        pair_curves=curves if keep_curves else None,
    )
