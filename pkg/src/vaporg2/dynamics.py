"""Moment equations dS/dt = M S + b for a driven, dipole-coupled atom pair.

The state vector holds fifteen rotating-frame expectation values, in order

    S1  <s1+>          S6  <s2+ s2->         S11 <s1+ s1- s2->
    S2  <s1->          S7  <s1+ s2->         S12 <s1+ s2+ s1->
    S3  <s2+>          S8  <s2+ s1->         S13 <s2+ s1- s2->
    S4  <s2->          S9  <s1+ s2+>         S14 <s1+ s2+ s2->
    S5  <s1+ s1->      S10 <s1- s2->         S15 <s1+ s2+ s1- s2->

and is stored as a complex array of shape ``(15,)`` (index ``k - 1`` for Sk).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import MIN_X
from .expm import expm

N_STATE = 15

# (a, b) pairs with S_b = conj(S_a) for a physical state, 1-based
CONJUGATE_PAIRS = ((1, 2), (3, 4), (7, 8), (9, 10), (11, 12), (13, 14))
REAL_COMPONENTS = (5, 6, 15)

# "derived": moment equations consistent with the master equation (default).
# "printed": the alternative transcription whose S7/S8 rows couple to S15 with
# 2*gamma12; kept only to reproduce curves made with it.  It is not a valid
# Lindblad generator (the density matrix rebuilt from its steady state can
# have negative eigenvalues).
COEFFICIENT_SETS = ("derived", "printed")


class SingularSystemError(np.linalg.LinAlgError):
    """M is numerically rank deficient; the configuration is unphysical."""


class PropagationError(RuntimeError):
    """The matrix exponential could not be certified to working accuracy."""


@dataclass(frozen=True)
class PairConfig:
    """One atom pair: detunings and complex Rabi drives (units of Gamma).

    ``x`` is the optional dimensionless separation k0*r12; when given, pairs
    closer than 0.01 lambda are refused by :func:`build_system`.
    """

    delta1: float
    delta2: float
    omega1: complex
    omega2: complex
    gamma12: float = 0.0
    g12: float = 0.0
    x: float | None = None

    def __post_init__(self):
        values = (self.delta1, self.delta2, self.omega1, self.omega2, self.gamma12, self.g12)
        if not all(np.isfinite(v) for v in values):
            raise ValueError("PairConfig fields must be finite")
        if abs(self.gamma12) > 1.0 + 1e-9:
            raise ValueError(f"|gamma12| = {abs(self.gamma12)} exceeds Gamma")

    def swapped(self) -> "PairConfig":
        """The same physical pair with atom labels exchanged."""
        return PairConfig(self.delta2, self.delta1, self.omega2, self.omega1, self.gamma12, self.g12, self.x)


@dataclass(frozen=True)
class CoefficientSystem:
    m: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        b = np.array(self.b, dtype=complex)
        if m.shape != (N_STATE, N_STATE) or b.shape != (N_STATE,):
            raise ValueError("CoefficientSystem expects a 15x15 matrix and a 15-vector")
        m.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "b", b)


def build_system(cfg: PairConfig, coefficients: str = "derived") -> CoefficientSystem:
    if coefficients not in COEFFICIENT_SETS:
        raise ValueError(f"coefficients must be one of {COEFFICIENT_SETS}")
    if cfg.x is not None and cfg.x < MIN_X * (1.0 - 1e-9):
        raise ValueError(f"separation k0*r = {cfg.x:.4g} is below the 0.01 lambda floor")

    d1, d2 = cfg.delta1, cfg.delta2
    o1, o2 = complex(cfg.omega1), complex(cfg.omega2)
    o1c, o2c = o1.conjugate(), o2.conjugate()
    gam = cfg.gamma12
    gm = cfg.gamma12 - 1j * cfg.g12
    gp = cfg.gamma12 + 1j * cfg.g12
    i = 1j

    m = np.zeros((N_STATE, N_STATE), dtype=complex)
    b = np.zeros(N_STATE, dtype=complex)

    def put(row, col, value):
        m[row - 1, col - 1] += value

    b[0] = -i * o1c / 2
    put(1, 12, 2 * gm)
    put(1, 3, -gm)
    put(1, 1, -(1 + i * d1))
    put(1, 5, i * o1c)

    b[1] = i * o1 / 2
    put(2, 11, 2 * gp)
    put(2, 4, -gp)
    put(2, 2, -(1 - i * d1))
    put(2, 5, -i * o1)

    b[2] = -i * o2c / 2
    put(3, 6, i * o2c)
    put(3, 1, -gm)
    put(3, 14, 2 * gm)  # g12 here, as the oracle confirms
    put(3, 3, -(1 + i * d2))

    b[3] = i * o2 / 2
    put(4, 13, 2 * gp)
    put(4, 2, -gp)
    put(4, 4, -(1 - i * d2))
    put(4, 6, -i * o2)

    put(5, 7, -gp)
    put(5, 8, -gm)
    put(5, 1, i * o1 / 2)
    put(5, 2, -i * o1c / 2)
    put(5, 5, -2)

    put(6, 4, -i * o2c / 2)
    put(6, 7, -gm)
    put(6, 8, -gp)
    put(6, 3, i * o2 / 2)
    put(6, 6, -2)

    put(7, 5, -gp)
    put(7, 6, -gm)
    put(7, 1, i * o2 / 2)
    put(7, 11, i * o1c)
    put(7, 14, -i * o2)
    s15 = 4 * gam if coefficients == "derived" else 2 * gam
    put(7, 15, s15)
    put(7, 4, -i * o1c / 2)
    put(7, 7, -(2 + i * d1 - i * d2))

    put(8, 13, i * o2c)
    put(8, 2, -i * o2c / 2)
    put(8, 5, -gm)
    put(8, 6, -gp)
    put(8, 12, -i * o1)
    put(8, 15, s15)
    put(8, 3, i * o1 / 2)
    put(8, 8, -(2 - i * d1 + i * d2))

    put(9, 1, -i * o2c / 2)
    put(9, 14, i * o2c)
    put(9, 12, i * o1c)
    put(9, 3, -i * o1c / 2)
    put(9, 9, -2 * (1 + i * (d1 + d2) / 2))

    put(10, 10, -2 * (1 - i * (d1 + d2) / 2))
    put(10, 11, -i * o1)
    put(10, 13, -i * o2)
    put(10, 2, i * o2 / 2)
    put(10, 4, i * o1 / 2)

    put(11, 13, -gm)
    put(11, 10, -i * o1c / 2)
    put(11, 11, -(3 - i * d2))
    put(11, 15, -i * o2)
    put(11, 5, i * o2 / 2)
    put(11, 7, i * o1 / 2)

    put(12, 15, i * o2c)
    put(12, 5, -i * o2c / 2)
    put(12, 14, -gp)
    put(12, 12, -(3 + i * d2))
    put(12, 8, -i * o1c / 2)
    put(12, 9, i * o1 / 2)

    put(13, 10, -i * o2c / 2)
    put(13, 11, -gm)
    put(13, 13, -(3 - i * d1))
    put(13, 15, -i * o1)
    put(13, 6, i * o1 / 2)
    put(13, 8, i * o2 / 2)

    put(14, 7, -i * o2c / 2)
    put(14, 12, -gp)
    put(14, 14, -(3 + i * d1))
    put(14, 15, i * o1c)
    put(14, 6, -i * o1c / 2)
    put(14, 9, i * o2 / 2)

    put(15, 11, -i * o2c / 2)
    put(15, 12, i * o2 / 2)
    put(15, 13, -i * o1c / 2)
    put(15, 14, i * o1 / 2)
    put(15, 15, -4)

    return CoefficientSystem(m, b)


def steady_state(sys: CoefficientSystem) -> np.ndarray:
    """Fixed point S_ss = -M^{-1} b."""
    cond = np.linalg.cond(sys.m)
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularSystemError(f"M is numerically singular (cond = {cond:.3e})")
    s = np.linalg.solve(sys.m, -sys.b)
    return s


def physicality_violation(s: np.ndarray) -> float:
    """Largest deviation of ``s`` from the conjugation/reality constraints."""
    s = np.asarray(s)
    worst = 0.0
    for a, b in CONJUGATE_PAIRS:
        worst = max(worst, abs(s[b - 1] - np.conj(s[a - 1])))
    for k in REAL_COMPONENTS:
        worst = max(worst, abs(s[k - 1].imag))
    return float(worst)


def propagator(sys: CoefficientSystem, t: float, tol: float = 1e-8) -> np.ndarray:
    """Certified exp(M t).

    The result is compared against the square of exp(M t/2); a relative
    mismatch above ``tol`` raises :class:`PropagationError`.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return np.eye(N_STATE, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        full = expm(sys.m * t)
        half = expm(sys.m * (t / 2))
        scale = max(1.0, np.linalg.norm(full, 1))
        mismatch = np.linalg.norm(full - half @ half, 1) / scale
    if not np.isfinite(mismatch) or mismatch > tol:
        raise PropagationError(f"exp(M t) not certified at t={t}: squaring mismatch {mismatch:.3e}")
    return full


def propagate(sys: CoefficientSystem, s0: np.ndarray, t: float, s_ss: np.ndarray | None = None) -> np.ndarray:
    """S(t) = S_ss + exp(M t) (S(0) - S_ss)."""
    s0 = np.asarray(s0, dtype=complex)
    if t == 0:
        return s0.copy()
    if s_ss is None:
        s_ss = steady_state(sys)
    return s_ss + propagator(sys, t) @ (s0 - s_ss)


def spectral_abscissa(sys: CoefficientSystem) -> float:
    try:
        eig = np.linalg.eigvals(sys.m)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"eigenvalue solver failed: {exc}") from exc
    return float(np.max(eig.real))
