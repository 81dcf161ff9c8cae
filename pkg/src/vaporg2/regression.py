"""Two-time correlators from the quantum regression theorem and the pair g2(tau).

Only the four cross-atom terms of the second-order correlation are kept
(single-atom, anomalous and random-phase terms are excluded by construction):

    <s1+(0) S8(t) s2-(0)> + <s2+(0) S7(t) s1-(0)>
        + <s2+(0) S5(t) s2-(0)> + <s1+(0) S6(t) s1-(0)>

normalized by the matching steady-state product 2 (S5 S6 + |S7|^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .dynamics import (
    N_STATE,
    CoefficientSystem,
    PairConfig,
    build_system,
    propagator,
    steady_state,
)

DEFAULT_TAU_MAX = 5.0
DEFAULT_TAU_POINTS = 2001

# (i, j) -> ({component: source component}, weight component), all 1-based
_INITIAL_TABLE = {
    (1, 2): ({2: 11, 3: 14, 8: 15}, 7),
    (2, 1): ({1: 12, 4: 13, 7: 15}, 8),
    (1, 1): ({3: 12, 4: 11, 6: 15}, 5),
    (2, 2): ({1: 14, 2: 13, 5: 15}, 6),
}

# (i, j) -> component of the regression vector entering the numerator
RETAINED_TERMS = {(1, 2): 8, (2, 1): 7, (2, 2): 5, (1, 1): 6}

# |Im numerator| beyond this signals a numerical breakdown, not round-off
_IMAG_GUARD = 1e-7


class ZeroDenominatorError(ArithmeticError):
    """Steady-state emission vanishes (undriven pair): g2 is undefined."""


@dataclass(frozen=True)
class RegressionVector:
    i: int
    j: int
    v: np.ndarray
    weight: complex


@dataclass
class G2Series:
    tau: np.ndarray
    numerator: np.ndarray
    denominator: np.ndarray
    g2: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.tau)


def default_tau(tau_max: float = DEFAULT_TAU_MAX, points: int = DEFAULT_TAU_POINTS) -> np.ndarray:
    return np.linspace(0.0, tau_max, points)


def initial_conditions(s_ss: np.ndarray, i: int, j: int) -> RegressionVector:
    """Equal-time <s_i^+ S_k s_j^->_ss for k = 1..15 and the weight <s_i^+ s_j^->_ss."""
    try:
        table, weight_k = _INITIAL_TABLE[(i, j)]
    except KeyError:
        raise ValueError(f"invalid atom index pair ({i}, {j})") from None
    s_ss = np.asarray(s_ss, dtype=complex)
    v = np.zeros(N_STATE, dtype=complex)
    for comp, src in table.items():
        v[comp - 1] = s_ss[src - 1]
    return RegressionVector(i, j, v, complex(s_ss[weight_k - 1]))


def correlator_at(sys: CoefficientSystem, init: RegressionVector, t: float, s_ss=None) -> RegressionVector:
    """Evolve a regression vector: v(t) = e^{Mt} v(0) + w (e^{Mt} - 1) M^{-1} b."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return init
    if s_ss is None:
        s_ss = steady_state(sys)
    v_inf = init.weight * s_ss
    vt = v_inf + propagator(sys, t) @ (init.v - v_inf)
    return RegressionVector(init.i, init.j, vt, init.weight)


def _is_uniform(tau: np.ndarray) -> bool:
    if len(tau) < 3:
        return False
    steps = np.diff(tau)
    return bool(np.all(np.abs(steps - steps[0]) <= 1e-12 * max(1.0, abs(tau[-1]))))


def _evolve(sys: CoefficientSystem, v0: np.ndarray, v_inf: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Columns of ``v0`` evolved to every tau; returns (len(tau), 15, ncols)."""
    out = np.empty((len(tau), N_STATE, v0.shape[1]), dtype=complex)
    dev = v0 - v_inf
    if _is_uniform(tau) and tau[0] >= 0:
        first = propagator(sys, float(tau[0]))
        step = propagator(sys, float(tau[1] - tau[0]))
        dev = first @ dev
        for n in range(len(tau)):
            out[n] = dev
            dev = step @ dev
    else:
        for n, t in enumerate(tau):
            out[n] = propagator(sys, float(t)) @ dev
    return out + v_inf[None]


def _retained_sum(sys: CoefficientSystem, s_ss: np.ndarray, tau: np.ndarray) -> np.ndarray:
    pairs = list(RETAINED_TERMS)
    inits = [initial_conditions(s_ss, i, j) for i, j in pairs]
    v0 = np.column_stack([r.v for r in inits])
    v_inf = np.column_stack([r.weight * s_ss for r in inits])
    vt = _evolve(sys, v0, v_inf, tau)
    total = np.zeros(len(tau), dtype=complex)
    for col, key in enumerate(pairs):
        total += vt[:, RETAINED_TERMS[key] - 1, col]
    return total


def g2_numerator(sys: CoefficientSystem, s_ss: np.ndarray, t) -> np.ndarray | float:
    """Retained four-term G2(0, t) in units of f^2(R); real by construction."""
    scalar = np.ndim(t) == 0
    tau = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tau < 0):
        raise ValueError("t must be non-negative")
    total = _retained_sum(sys, np.asarray(s_ss, dtype=complex), tau)
    worst = float(np.max(np.abs(total.imag)))
    if worst > _IMAG_GUARD * max(1.0, float(np.max(np.abs(total.real)))):
        raise ArithmeticError(f"numerator has imaginary part {worst:.3e}")
    return float(total.real[0]) if scalar else total.real


def g2_denominator(s_ss: np.ndarray) -> float:
    """2 (S5 S6 + Re[S7 S8]); raises :class:`ZeroDenominatorError` if it vanishes."""
    s = np.asarray(s_ss, dtype=complex)
    value = 2.0 * (s[4] * s[5] + s[6] * s[7]).real
    if not value > 1e-30:
        raise ZeroDenominatorError("zero denominator: g2 undefined")
    return float(value)


def g2_series(cfg: PairConfig, tau=None, coefficients: str = "derived") -> G2Series:
    tau = default_tau() if tau is None else np.asarray(tau, dtype=float)
    if tau.ndim != 1 or len(tau) == 0:
        raise ValueError("tau grid must be a non-empty 1-d array")
    if tau[0] < 0 or np.any(np.diff(tau) <= 0):
        raise ValueError("tau grid must be ascending and non-negative")
    sys = build_system(cfg, coefficients)
    s_ss = steady_state(sys)
    denom = g2_denominator(s_ss)
    numer = g2_numerator(sys, s_ss, tau)
    return G2Series(
        tau=tau,
        numerator=numer,
        denominator=np.full(tau.shape, denom),
        g2=numer / denom,
        metadata={"pair": cfg, "coefficients": coefficients},
    )


def g1_terms(s: np.ndarray, observation_dir, r12) -> complex:
    """Phase-resolved G1 / f(R) = S5 + S6 + S7 e^{i k R.r12} + S8 e^{-i k R.r12}."""
    n = np.asarray(observation_dir, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise ValueError("observation_dir must be a unit vector")
    phase = np.exp(1j * 2.0 * np.pi * float(np.dot(n, np.asarray(r12, dtype=float))))
    s = np.asarray(s, dtype=complex)
    return complex(s[4] + s[5] + s[6] * phase + s[7] / phase)
