"""Maximum-likelihood state reconstruction and process-matrix extraction.

The density matrix is parameterized as rho = T^dag T / Tr(T^dag T) with T
lower triangular (4 real diagonal + 6 complex off-diagonal entries, 16 real
parameters), which is Hermitian, unit-trace, and positive semidefinite by
construction.  The fit maximizes the Poisson likelihood of the net counts
(coincidences minus accidentals, floored at zero); the unknown overall flux
is profiled out analytically, reducing the objective to the multinomial form

    -log L(rho) = N log(sum_j mu_j) - sum_j n_j log(mu_j),   mu_j = Tr(P_j G)

with G = T^dag T, which is invariant under rescaling of T.  The optimizer is
L-BFGS-B with an analytic gradient, restarted from an identity-proportional
point plus a fixed set of random initializations; the best likelihood wins,
ties broken by the lowest restart index.

The process matrix of the buffered idler comes from the same data: the
reconstructed joint state, read relative to the prepared pair state
(|HH> + |VV>)/sqrt(2), is the Choi state of the idler channel, and expressing
it in the orthonormal basis {(I x s_m)|pair>} is exactly the chi matrix in
the (I, s1, s2, s3) operator basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .counting import AnalyzerSetting, CountRecord
from .qstate import (
    ChiMatrix,
    PAULIS,
    TwoQubitState,
    bell_ket,
    identity_chi,
    process_fidelity,
    state_fidelity,
    bell_state,
)

__all__ = [
    "MleConfig",
    "InsufficientDataError",
    "IncompleteSettingsError",
    "MetricsRecord",
    "reconstruct_state",
    "reconstruct_chi",
    "report_metrics",
]


class InsufficientDataError(ValueError):
    """All net counts are zero; nothing to fit."""


class IncompleteSettingsError(ValueError):
    """Settings are not tomographically complete (singular design matrix)."""


@dataclass(frozen=True)
class MleConfig:
    max_iterations: int = 5000
    convergence_tol: float = 1e-10
    n_restarts: int = 8
    restart_seed: int = 7041776

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")
        if not self.convergence_tol > 0:
            raise ValueError("convergence tolerance must be positive")
        if self.n_restarts < 0:
            raise ValueError("restart count must be nonnegative")


_LOWER = ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2))


def _t_to_matrix(t: np.ndarray) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[np.diag_indices(4)] = t[:4]
    for i, (r, c) in enumerate(_LOWER):
        m[r, c] = t[4 + 2 * i] + 1j * t[5 + 2 * i]
    return m


def _rho_from_t(t: np.ndarray) -> np.ndarray:
    m = _t_to_matrix(t)
    g = m.conj().T @ m
    return g / np.trace(g).real


def _nll_and_grad(
    t: np.ndarray, projectors: np.ndarray, counts: np.ndarray
) -> tuple[float, np.ndarray]:
    m = _t_to_matrix(t)
    g = m.conj().T @ m
    mu = np.einsum("kij,ji->k", projectors, g).real
    mu = np.maximum(mu, 1e-300)
    total = mu.sum()
    n = counts.sum()
    nll = n * math.log(total) - float(counts @ np.log(mu))
    # d(nll)/d(mu_k), then chain through mu_k = Tr(P_k T^dag T):
    # the Wirtinger gradient of mu_k w.r.t. conj(T) is T P_k.
    w = n / total - counts / mu
    tp = np.einsum("ij,kjl->kil", m, projectors)
    mw = np.tensordot(w, tp, axes=(0, 0))
    grad = np.empty(16)
    grad[:4] = 2.0 * np.real(np.diagonal(mw))
    for i, (r, c) in enumerate(_LOWER):
        grad[4 + 2 * i] = 2.0 * np.real(mw[r, c])
        grad[5 + 2 * i] = 2.0 * np.imag(mw[r, c])
    return nll, grad


def _joint_projectors(
    settings: Sequence[AnalyzerSetting] | Sequence[np.ndarray],
) -> np.ndarray:
    stack = []
    for s in settings:
        if isinstance(s, AnalyzerSetting):
            stack.append(s.joint_projector())
        else:
            arr = np.asarray(s, dtype=complex)
            if arr.shape != (4, 4):
                raise ValueError("joint projectors must be 4x4")
            stack.append(arr)
    return np.array(stack)


def _design_condition(projectors: np.ndarray) -> float:
    gammas = [np.kron(a, b) / 2.0 for a in PAULIS for b in PAULIS]
    m = np.array([[np.trace(p @ g).real for g in gammas] for p in projectors])
    if np.linalg.matrix_rank(m) < 16:
        return math.inf
    return float(np.linalg.cond(m))


def reconstruct_state(
    records: Sequence[CountRecord],
    settings: Sequence[AnalyzerSetting] | Sequence[np.ndarray],
    cfg: MleConfig = MleConfig(),
) -> TwoQubitState:
    """Maximum-likelihood density matrix from net coincidence counts."""
    if len(records) != len(settings):
        raise ValueError("need one setting per count record")
    if len(records) < 16:
        raise IncompleteSettingsError(
            f"need at least 16 settings, got {len(records)}"
        )
    projectors = _joint_projectors(settings)
    if _design_condition(projectors) > 1e6:
        raise IncompleteSettingsError(
            "settings are not tomographically complete (singular design matrix)"
        )
    counts = np.array([float(r.net) for r in records])
    if counts.sum() <= 0:
        raise InsufficientDataError("all net counts are zero")

    starts = [np.concatenate([np.full(4, 0.5), np.zeros(12)])]
    for k in range(cfg.n_restarts):
        ss = np.random.SeedSequence(entropy=[cfg.restart_seed, k])
        rng = np.random.Generator(np.random.Philox(ss))
        starts.append(rng.normal(scale=0.5, size=16))

    best: tuple[float, int, np.ndarray] | None = None
    for idx, t0 in enumerate(starts):
        res = minimize(
            _nll_and_grad,
            t0,
            args=(projectors, counts),
            jac=True,
            method="L-BFGS-B",
            options={
                "maxiter": cfg.max_iterations,
                "maxfun": 10 * cfg.max_iterations,
                "ftol": cfg.convergence_tol,
                "gtol": 1e-10,
            },
        )
        candidate = (float(res.fun), idx, res.x)
        if best is None or candidate[:2] < best[:2]:
            best = candidate
    assert best is not None
    return TwoQubitState(_rho_from_t(best[2]))


def _choi_basis() -> np.ndarray:
    """Columns (I x s_m)|pair>, an orthonormal basis of the two-qubit space."""
    pair = bell_ket()
    cols = [np.kron(np.eye(2), p) @ pair for p in PAULIS]
    return np.column_stack(cols)


_CHOI_BASIS = _choi_basis()
_CHOI_BASIS.flags.writeable = False


def reconstruct_chi(rho_joint: TwoQubitState) -> ChiMatrix:
    """Chi matrix of the idler process from the reconstructed joint state.

    Valid when the pre-process pair was prepared in (|HH> + |VV>)/sqrt(2);
    the joint state is then the Choi state of the idler channel and the
    basis change below is exact.  Post-selection on coincidences makes any
    polarization-independent loss invisible here, so a loss-only process
    reconstructs as the identity.
    """
    chi = _CHOI_BASIS.conj().T @ rho_joint.matrix @ _CHOI_BASIS
    chi = 0.5 * (chi + chi.conj().T)
    return ChiMatrix(chi / np.trace(chi).real)


@dataclass(frozen=True)
class MetricsRecord:
    """Figures of merit of one reconstructed state/process pair."""

    state_fidelity: float
    process_fidelity: float
    purity: float
    chi_diagonal: tuple[float, float, float, float]

    def to_json(self) -> dict:
        return {
            "F": self.state_fidelity,
            "F_chi": self.process_fidelity,
            "purity": self.purity,
            "chi_diag": list(self.chi_diagonal),
        }


def report_metrics(rho: TwoQubitState, chi: ChiMatrix) -> MetricsRecord:
    """State fidelity vs the prepared pair, process fidelity vs identity."""
    return MetricsRecord(
        state_fidelity=state_fidelity(rho, bell_state()),
        process_fidelity=process_fidelity(chi, identity_chi()),
        purity=rho.purity,
        chi_diagonal=tuple(float(x) for x in chi.diagonal),
    )
