"""LTI observer/Kalman-filter identification baseline.

Fits the observer Markov parameters of an LTI plant by pooled least squares
on zero-initial-condition data, recovers the open-loop Markov parameters,
realizes (A, B, C) by the eigensystem realization algorithm, and solves for
the observer gain.  The point of the exercise is the mismatch experiment:
the recovered open-loop Markov parameters match the true plant, while the
observer Markov parameters reconstructed from the identified quadruple do
not match the fitted ones (and the implied observer is not deadbeat), so
the observer is not what explains an exact finite-history fit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .plants import FLOAT_FMT, RolloutBatch
from .realization import markov_from_arma
from .arma import ArmaCoefficients


@dataclass(frozen=True)
class ObserverMarkov:
    """Fitted blocks Ybar_k (m x (r+m)), k = 0..q-1, input columns first.

    Block k multiplies the stacked (u, z) pair at lag k+1; under the observer
    hypothesis Ybar_k = C (A+MC)^k [B, -M].
    """

    q: int
    m: int
    r: int
    blocks: np.ndarray

    def input_block(self, k: int) -> np.ndarray:
        return self.blocks[k, :, : self.r]

    def output_block(self, k: int) -> np.ndarray:
        return self.blocks[k, :, self.r :]

    def as_arma(self) -> ArmaCoefficients:
        """Reinterpret the fit as ARMA coefficients (alpha from z, beta from u)."""
        alpha = np.hstack([self.output_block(k) for k in range(self.q)])
        beta = np.hstack([self.input_block(k) for k in range(self.q)])
        return ArmaCoefficients(t=self.q, q=self.q, alpha=alpha, beta=beta)


def fit_observer_markov(
    batch: RolloutBatch, q: int, tol: float = linalg.DEFAULT_RANK_TOL
) -> ObserverMarkov:
    """Pooled least-squares fit of z_t on the stacked (u, z) history.

    Pools every time step t in [q, H] across all rollouts of an LTI batch
    (minimum-norm solution when the regressor is rank deficient).
    """
    m, r, H = batch.m, batch.r, batch.horizon
    if H < q:
        raise ValueError(f"horizon {H} shorter than order {q}")
    cols_per_t = batch.n_rollouts
    n_t = H - q + 1
    V = np.empty(((r + m) * q, n_t * cols_per_t))
    Z = np.empty((m, n_t * cols_per_t))
    for j, t in enumerate(range(q, H + 1)):
        sl = slice(j * cols_per_t, (j + 1) * cols_per_t)
        for k in range(q):
            row = k * (r + m)
            V[row : row + r, sl] = batch.inputs[:, t - 1 - k].T
            V[row + r : row + r + m, sl] = batch.outputs[:, t - 1 - k].T
        Z[:, sl] = batch.outputs[:, t].T
    coef, _ = linalg.lstsq_min_norm(V, Z, tol)
    blocks = np.stack([coef[:, k * (r + m) : (k + 1) * (r + m)] for k in range(q)])
    return ObserverMarkov(q=q, m=m, r=r, blocks=blocks)


def recover_open_loop_markov(om: ObserverMarkov, count: int) -> np.ndarray:
    """Open-loop Markov parameters Y_k = C A^k B from the fitted blocks.

    Identical to the ARMA-to-Markov recursion after splitting each block
    into its input and output parts.
    """
    return markov_from_arma(om.as_arma(), count)


def observer_gain_markov(om: ObserverMarkov, count: int) -> np.ndarray:
    """Observer-gain Markov parameters Y_k^o = C A^k M from the fitted blocks.

    Same recursion as the open-loop recovery with the z-channel (sign
    flipped: the fitted block carries -C (A+MC)^k M) in the role of the
    input channel.
    """
    alpha = np.hstack([om.output_block(k) for k in range(om.q)])
    beta = np.hstack([-om.output_block(k) for k in range(om.q)])
    coeffs = ArmaCoefficients(t=om.q, q=om.q, alpha=alpha, beta=beta)
    return markov_from_arma(coeffs, count)


@dataclass(frozen=True)
class EraRealization:
    """State-space triple realized from Markov parameters via the Hankel SVD."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    order: int
    hankel_singular_values: np.ndarray


def era(
    markov: np.ndarray, order: int, rows: int, cols: int
) -> EraRealization:
    """Eigensystem realization from a Markov sequence (Y_0 = CB first).

    Builds the (rows x cols)-block Hankel matrix H0 with blocks Y_{i+j} and
    its one-step shift H1, takes the SVD of H0 truncated at ``order``, and
    reads the realization off the balanced factors.

    Raises:
        ValueError: fewer than rows+cols Markov parameters, or ``order``
            exceeding the numerical rank of H0 (the singular values are
            listed in the message).
    """
    markov = np.asarray(markov, dtype=float)
    K, m, r = markov.shape
    if K < rows + cols:
        raise ValueError(f"need at least rows+cols={rows + cols} Markov blocks, got {K}")
    H0 = np.vstack(
        [np.hstack([markov[i + j] for j in range(cols)]) for i in range(rows)]
    )
    H1 = np.vstack(
        [np.hstack([markov[i + j + 1] for j in range(cols)]) for i in range(rows)]
    )
    U, s, V = linalg.svd(H0)
    rank = linalg.numerical_rank(s)
    if order > rank:
        raise ValueError(
            f"requested order {order} exceeds the numerical rank {rank} of the "
            f"Hankel matrix; singular values: {s.tolist()}"
        )
    sq = np.sqrt(s[:order])
    Uo = U[:, :order]
    Vo = V[:, :order]
    A = (Uo.T @ H1 @ Vo) / np.outer(sq, sq)
    # Observability factor U diag(sq), controllability factor diag(sq) V'.
    B = (sq[:, None] * Vo.T)[:, :r]
    C = (Uo * sq)[:m, :]
    return EraRealization(A=A, B=B, C=C, order=order, hankel_singular_values=s)


def recover_observer_gain(real: EraRealization, om: ObserverMarkov) -> np.ndarray:
    """Least-squares observer gain from the gain Markov parameters.

    Stacks Y_k^o = C A^k M for k = 0..q-1 and solves O M = stack with the
    observability matrix O of the realized (A, C).

    Raises:
        ValueError: O is rank deficient (order too high for the data).
    """
    q, m = om.q, om.m
    n = real.order
    O = np.vstack([real.C @ np.linalg.matrix_power(real.A, k) for k in range(q)])
    if np.linalg.matrix_rank(O, 1e-10 * max(1.0, np.linalg.norm(O, 2))) < n:
        raise ValueError(
            f"observability matrix of the realization (order {n}) is rank deficient"
        )
    Yo = observer_gain_markov(om, q)
    stacked = Yo.reshape(q * m, om.m)
    return np.linalg.solve(O.T @ O, O.T @ stacked)


@dataclass(frozen=True)
class MismatchReport:
    """Per-lag errors of the observer reconstruction vs. the open-loop recovery.

    ``err_open_loop[k]`` compares the recovered Y_k against the true plant;
    ``err_observer[k]`` compares the reconstruction C(A+MC)^k [B, -M] against
    the fitted block.  Both are 1-norm errors normalized by the 1-norm of the
    reference block.  ``deadbeat_residual`` is the norm of the reconstructed
    block at lag q, which an exact deadbeat observer would drive to zero.
    """

    err_open_loop: np.ndarray
    err_observer: np.ndarray
    deadbeat_residual: float
    max_observer_eig: float


def mismatch_report(
    real: EraRealization,
    gain: np.ndarray,
    om: ObserverMarkov,
    true_markov: np.ndarray,
) -> MismatchReport:
    """Quantify how well the identified observer system explains the fit."""
    K = true_markov.shape[0]
    recovered = recover_open_loop_markov(om, K)
    err_open = np.empty(K)
    for k in range(K):
        ref = np.abs(true_markov[k]).sum()
        err_open[k] = np.abs(recovered[k] - true_markov[k]).sum() / max(ref, 1e-300)

    Abar = real.A + gain @ real.C
    Bbar = np.hstack([real.B, -gain])
    err_obs = np.empty(om.q)
    power = np.eye(real.order)
    for k in range(om.q):
        recon = real.C @ power @ Bbar
        ref = np.abs(om.blocks[k]).sum()
        err_obs[k] = np.abs(recon - om.blocks[k]).sum() / max(ref, 1e-300)
        power = power @ Abar
    deadbeat = float(np.linalg.norm(real.C @ power @ Bbar))
    eigs = np.abs(np.linalg.eigvals(Abar))
    return MismatchReport(
        err_open_loop=err_open,
        err_observer=err_obs,
        deadbeat_residual=deadbeat,
        max_observer_eig=float(eigs.max()),
    )


def save_mismatch_report(
    report: MismatchReport, csv_path: str, summary_path: str | None = None
) -> None:
    """Write the per-lag error curves and the deadbeat summary."""
    K = max(len(report.err_open_loop), len(report.err_observer))
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["k", "err_openloop_Y", "err_observer_Ybar"])
        for k in range(K):
            open_cell = (
                FLOAT_FMT % report.err_open_loop[k]
                if k < len(report.err_open_loop)
                else ""
            )
            obs_cell = (
                FLOAT_FMT % report.err_observer[k]
                if k < len(report.err_observer)
                else ""
            )
            writer.writerow([k, open_cell, obs_cell])
    if summary_path is not None:
        summary = {
            "deadbeat_residual": report.deadbeat_residual,
            "max_observer_eig_modulus": report.max_observer_eig,
            "max_err_open_loop": float(report.err_open_loop.max()),
            "max_err_observer": float(report.err_observer.max()),
        }
        with open(summary_path, "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
