"""Unbiased ARMA estimation from noisy rollouts with known covariances.

The plant is driven by u_t + w_t with w_t ~ N(0, Q) through the control
channel and measured as z_t = C x_t + v_t with v_t ~ N(0, R).  Plain least
squares on the measured data is biased (errors-in-variables); with Q and R
known, the sample correlation matrices can be corrected so that the normal
equations converge to the noise-free ones as the rollout count N grows:

  * the past-output Gram block sheds one R per diagonal block,
  * the input blocks are rescaled toward the effective input u + w,
  * the cross terms against the current output need no correction because
    the noises are white and independent of the past.

The corrections assume i.i.d. excitation across time (the input Gram matrix
is then block diagonal), which `plants.generate_batch` provides.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg
from .arma import ArmaCoefficients, assemble, fit_ls
from .plants import NoiseSpec, RolloutBatch


@dataclass(frozen=True)
class CorrelationSet:
    """Sample second moments of the stacked histories at one time step.

    R_zz is (mq, mq), R_zu is (mq, rq), R_uu is (rq, rq); rhs_z (m, mq) and
    rhs_u (m, rq) hold the correlations of the current output with each
    lagged block.  All are sample averages over ``count`` rollouts.
    """

    t: int
    q: int
    R_zz: np.ndarray
    R_zu: np.ndarray
    R_uu: np.ndarray
    rhs_z: np.ndarray
    rhs_u: np.ndarray
    count: int


def sample_correlations(batch: RolloutBatch, t: int, q: int) -> CorrelationSet:
    """Sample correlation matrices from measured outputs and commanded inputs."""
    if batch.n_rollouts < 100 * (batch.m + batch.r) * q:
        warnings.warn(
            f"only N={batch.n_rollouts} rollouts for correlation estimates at "
            f"order q={q}; corrections are asymptotic in N",
            stacklevel=2,
        )
    dm = assemble(batch, t, q)
    mq = batch.m * q
    Z = dm.matrix[:mq]
    U = dm.matrix[mq:]
    N = float(batch.n_rollouts)
    return CorrelationSet(
        t=t,
        q=q,
        R_zz=(Z @ Z.T) / N,
        R_zu=(Z @ U.T) / N,
        R_uu=(U @ U.T) / N,
        rhs_z=(dm.rhs @ Z.T) / N,
        rhs_u=(dm.rhs @ U.T) / N,
        count=batch.n_rollouts,
    )


def _block_diag_repeat(block: np.ndarray, q: int) -> np.ndarray:
    d = block.shape[0]
    out = np.zeros((d * q, d * q))
    for i in range(q):
        out[i * d : (i + 1) * d, i * d : (i + 1) * d] = block
    return out


def correct_correlations(c: CorrelationSet, noise: NoiseSpec) -> CorrelationSet:
    """Debias sample correlations using the known noise covariances.

    Requires the input Gram matrix to be invertible (persistent excitation);
    raises otherwise.
    """
    q = c.q
    r = c.R_uu.shape[0] // q
    IQ = _block_diag_repeat(np.atleast_2d(noise.Q), q)
    IR = _block_diag_repeat(np.atleast_2d(noise.R), q)
    try:
        uu_inv = np.linalg.inv(c.R_uu)
    except np.linalg.LinAlgError as err:
        raise ValueError(
            "input correlation matrix is singular; use richer excitation "
            "(i.i.d. gaussian inputs with positive variance)"
        ) from err
    rhs_u = np.empty_like(c.rhs_u)
    for l in range(q):
        cols = slice(l * r, (l + 1) * r)
        step_uu = c.R_uu[cols, cols]
        rhs_u[:, cols] = c.rhs_u[:, cols] @ np.linalg.inv(step_uu) @ (
            step_uu + np.atleast_2d(noise.Q)
        )
    return CorrelationSet(
        t=c.t,
        q=q,
        R_zz=c.R_zz - IR,
        R_zu=c.R_zu @ uu_inv @ (c.R_uu + IQ),
        R_uu=c.R_uu + IQ,
        rhs_z=c.rhs_z,
        rhs_u=rhs_u,
        count=c.count,
    )


def solve_corrected(
    c: CorrelationSet, tol: float = linalg.DEFAULT_RANK_TOL
) -> ArmaCoefficients:
    """Solve the (possibly corrected) normal equations for the ARMA row.

    Solves [alpha beta] M = b with the Gram matrix M assembled from the
    correlation blocks, using a truncated pseudoinverse for the rank
    deficiency that the noise-free problem has by construction.
    """
    q = c.q
    m = c.rhs_z.shape[0]
    M = np.block([[c.R_zz, c.R_zu], [c.R_zu.T, c.R_uu]])
    eigs = np.linalg.eigvalsh(M)
    if eigs[0] < -1e-8 * max(eigs[-1], 1.0):
        warnings.warn(
            f"corrected Gram matrix at t={c.t} is indefinite "
            f"(min eigenvalue {eigs[0]:.3e}); finite-sample artifact",
            stacklevel=2,
        )
    b = np.hstack([c.rhs_z, c.rhs_u])
    coef = b @ linalg.truncated_pinv(M, tol)
    rank = linalg.numerical_rank(linalg.svd(M).s, tol)
    residual = float(np.linalg.norm(b - coef @ M))
    return ArmaCoefficients(
        t=c.t,
        q=q,
        alpha=coef[:, : m * q],
        beta=coef[:, m * q :],
        residual_norm=residual,
        rank_used=rank,
    )


def fit_arma_noisy(
    batch: RolloutBatch,
    t: int,
    q: int,
    noise: NoiseSpec,
    tol: float = linalg.DEFAULT_RANK_TOL,
) -> ArmaCoefficients:
    """Noise-corrected ARMA fit at time t given known covariances.

    Consistent as N grows when the process noise enters through the control
    channel only.  With Q = R = 0 this reduces to the plain least-squares
    fit (identical predictions).
    """
    corr = correct_correlations(sample_correlations(batch, t, q), noise)
    return solve_corrected(corr, tol)


def fit_arma_uncorrected(
    batch: RolloutBatch, t: int, q: int, tol: float = linalg.DEFAULT_RANK_TOL
) -> ArmaCoefficients:
    """Plain least-squares fit on noisy data (biased; for comparison)."""
    return fit_ls(assemble(batch, t, q), tol)
