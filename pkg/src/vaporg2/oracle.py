"""Brute-force two-atom density-matrix reference.

Everything here is derived directly from the master equation on the 4x4
product space (see :mod:`vaporg2.constants` for the vectorization
convention).  It shares no code with :mod:`vaporg2.dynamics` or
:mod:`vaporg2.regression` and is used only to validate them.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .dynamics import PairConfig

_SP = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |e><g| on (g, e)
_SM = _SP.T.copy()
_I2 = np.eye(2, dtype=complex)
_I4 = np.eye(4, dtype=complex)

SP1 = np.kron(_SP, _I2)
SM1 = np.kron(_SM, _I2)
SP2 = np.kron(_I2, _SP)
SM2 = np.kron(_I2, _SM)


def _operator_basis() -> list[np.ndarray]:
    n1 = SP1 @ SM1
    n2 = SP2 @ SM2
    return [
        SP1,
        SM1,
        SP2,
        SM2,
        n1,
        n2,
        SP1 @ SM2,
        SP2 @ SM1,
        SP1 @ SP2,
        SM1 @ SM2,
        SP1 @ SM1 @ SM2,
        SP1 @ SP2 @ SM1,
        SP2 @ SM1 @ SM2,
        SP1 @ SP2 @ SM2,
        SP1 @ SP2 @ SM1 @ SM2,
    ]


# S1..S15 as explicit 4x4 operators
OPERATORS = _operator_basis()


def _left(a):
    return np.kron(a, _I4)


def _right(b):
    return np.kron(_I4, b.T)


def hamiltonian(cfg: PairConfig) -> np.ndarray:
    o1, o2 = complex(cfg.omega1), complex(cfg.omega2)
    h = -cfg.delta1 * (SP1 @ SM1) - cfg.delta2 * (SP2 @ SM2)
    h = h + cfg.g12 * (SP1 @ SM2 + SP2 @ SM1)
    h = h - 0.5 * (o1 * SP1 + np.conj(o1) * SM1 + o2 * SP2 + np.conj(o2) * SM2)
    return h


def build_liouvillian(cfg: PairConfig) -> np.ndarray:
    """16x16 generator acting on row-major vec(rho)."""
    h = hamiltonian(cfg)
    lv = -1j * (_left(h) - _right(h))
    gamma = np.array([[1.0, cfg.gamma12], [cfg.gamma12, 1.0]])
    raise_ops = (SP1, SP2)
    lower_ops = (SM1, SM2)
    for i in range(2):
        for j in range(2):
            a = raise_ops[i] @ lower_ops[j]
            lv = lv - gamma[i, j] * (_left(a) + _right(a) - 2.0 * _left(lower_ops[j]) @ _right(raise_ops[i]))
    return lv


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(16)


def unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v).reshape(4, 4)


def expect(op: np.ndarray, rho: np.ndarray) -> complex:
    return complex(np.trace(op @ rho))


def expand_generator(lv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project the Heisenberg-picture action of ``lv`` onto {1, S1..S15}.

    For every basis operator Q_k the adjoint image L^dag(Q_k) is written as
    b_k * 1 + sum_l M_kl Q_l, which is exactly the moment equation for <Q_k>.
    """
    basis = [_I4] + OPERATORS
    # columns: vec of each basis operator; 16 operators span all 4x4 matrices
    cols = np.column_stack([vec(q) for q in basis])
    m = np.zeros((15, 15), dtype=complex)
    b = np.zeros(15, dtype=complex)
    for k, q in enumerate(OPERATORS):
        # Tr(Q L rho) = (L^T vec(Q^T)) . vec(rho)  =>  vec(L^dag(Q)^T) = L^T vec(Q^T)
        adj = unvec(lv.T @ vec(q.T)).T
        coeff = np.linalg.solve(cols, vec(adj))
        b[k] = coeff[0]
        m[k] = coeff[1:]
    return m, b


def dm_steady_state(lv: np.ndarray, gap_tol: float = 1e-9) -> np.ndarray:
    """Null vector of the Liouvillian, normalized to unit trace."""
    _, sv, vh = np.linalg.svd(lv)
    scale = sv[0]
    if sv[-2] < gap_tol * scale:
        raise np.linalg.LinAlgError(
            f"degenerate null space: second-smallest singular value {sv[-2]:.3e}"
        )
    rho = unvec(vh[-1].conj())
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


def dm_propagate(lv: np.ndarray, rho: np.ndarray, t: float) -> np.ndarray:
    return unvec(scipy.linalg.expm(lv * t) @ vec(rho))


def dm_expectations(rho: np.ndarray) -> np.ndarray:
    """The fifteen moments S1..S15 of a density matrix."""
    return np.array([expect(q, rho) for q in OPERATORS])


def moments_to_density(s: np.ndarray) -> np.ndarray:
    """Invert :func:`dm_expectations`: the unique 4x4 matrix of unit trace with moments ``s``."""
    basis = [_I4] + OPERATORS
    a = np.array([vec(q.T) for q in basis])
    return unvec(np.linalg.solve(a, np.concatenate([[1.0], np.asarray(s, dtype=complex)])))


def dm_regression_moments(lv: np.ndarray, rho_ss: np.ndarray, i: int, j: int, t: float) -> np.ndarray:
    """<s_i^+(0) S_k(t) s_j^-(0)> for k = 1..15 via Tr[S_k e^{Lt}(s_j^- rho s_i^+)]."""
    raise_ops = {1: SP1, 2: SP2}
    lower_ops = {1: SM1, 2: SM2}
    x0 = lower_ops[j] @ rho_ss @ raise_ops[i]
    xt = dm_propagate(lv, x0, t) if t else x0
    return dm_expectations(xt)


# (i, j, k): the four retained cross-atom terms <s_i^+(0) S_k(t) s_j^-(0)>
_RETAINED = ((1, 2, 8), (2, 1, 7), (2, 2, 5), (1, 1, 6))


def dm_g2_series(cfg: PairConfig, tau) -> dict:
    """Regression-theorem g2 computed entirely on the density matrix."""
    tau = np.asarray(tau, dtype=float)
    lv = build_liouvillian(cfg)
    rho = dm_steady_state(lv)
    s = dm_expectations(rho)
    denom = 2.0 * (s[4] * s[5] + s[6] * s[7]).real
    ops = {1: (SP1, SM1), 2: (SP2, SM2)}
    numer = np.zeros(tau.shape, dtype=complex)
    for i, j, k in _RETAINED:
        x0 = vec(ops[j][1] @ rho @ ops[i][0])
        obs = vec(OPERATORS[k - 1].T)
        for n, t in enumerate(tau):
            numer[n] += obs @ (scipy.linalg.expm(lv * t) @ x0)
    return {
        "tau": tau,
        "numerator": numer.real,
        "numerator_imag": numer.imag,
        "denominator": np.full(tau.shape, denom),
        "g2": numer.real / denom,
        "rho_ss": rho,
    }
