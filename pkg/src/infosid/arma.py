"""Time-varying ARMA identification from rollout batches.

The model of order q expresses the output at time t as a linear function of
the q most recent outputs and inputs,

    z_t = sum_k alpha_{t,t-k} z_{t-k} + sum_k beta_{t,t-k} u_{t-k},  k = 1..q.

Histories are ordered newest-first everywhere: the first block of every
stacked vector or coefficient row refers to lag 1.  Coefficients are fit per
time step by a minimum-norm least-squares solve across rollouts; the
``fundamental`` coefficients computed from known plant matrices serve as the
exactness oracle (the two need not be entrywise equal when the regression is
rank deficient, but they predict identically).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg
from .plants import (
    LtvSystem,
    ObservabilityError,
    RolloutBatch,
    forced_response_matrix,
    observability_matrix,
)


@dataclass(frozen=True)
class ArmaCoefficients:
    """Order-q ARMA coefficient blocks at one time step.

    alpha is m x (m q) = [alpha_{t,t-1} ... alpha_{t,t-q}], beta is
    m x (r q) = [beta_{t,t-1} ... beta_{t,t-q}]; lag-1 blocks first.
    """

    t: int
    q: int
    alpha: np.ndarray
    beta: np.ndarray
    residual_norm: float = 0.0
    rank_used: int = 0

    @property
    def m(self) -> int:
        return self.alpha.shape[0]

    @property
    def r(self) -> int:
        return self.beta.shape[1] // self.q

    def alpha_block(self, k: int) -> np.ndarray:
        """alpha_{t,t-k} for k = 1..q."""
        m = self.m
        return self.alpha[:, (k - 1) * m : k * m]

    def beta_block(self, k: int) -> np.ndarray:
        """beta_{t,t-k} for k = 1..q."""
        r = self.r
        return self.beta[:, (k - 1) * r : k * r]


@dataclass(frozen=True)
class TvArmaModel:
    """ARMA coefficients for every time step t = q..H of a horizon."""

    q: int
    m: int
    r: int
    horizon: int
    coefficients: tuple[ArmaCoefficients, ...]

    def __post_init__(self):
        expected = list(range(self.q, self.horizon + 1))
        got = [c.t for c in self.coefficients]
        if got != expected:
            raise ValueError(f"coefficient times {got} != contiguous {expected}")

    def at(self, t: int) -> ArmaCoefficients:
        return self.coefficients[t - self.q]


@dataclass(frozen=True)
class DataMatrix:
    """Stacked regression data at time t across the rollouts of a batch.

    ``matrix`` is ((m+r) q, N): row blocks z_{t-1}..z_{t-q} then
    u_{t-1}..u_{t-q}, one column per rollout.  ``rhs`` is (m, N) holding z_t.
    """

    t: int
    q: int
    matrix: np.ndarray
    rhs: np.ndarray


def _stack_history(arr: np.ndarray, t: int, q: int) -> np.ndarray:
    """(N, T, d) slice -> (d*q, N) stacked newest-first over t-1..t-q."""
    window = arr[:, t - q : t][:, ::-1]  # newest first
    n_roll = arr.shape[0]
    return window.reshape(n_roll, -1).T


def assemble(batch: RolloutBatch, t: int, q: int) -> DataMatrix:
    """Build the regression data matrix at time t for order q.

    Requires q <= t <= H; warns when the batch has no more rollouts than the
    matrix has rows (N > (m+r) q is what makes a fit well posed).
    """
    H = batch.horizon
    if not q <= t <= H:
        raise ValueError(f"need q <= t <= H, got q={q}, t={t}, H={H}")
    rows = (batch.m + batch.r) * q
    if batch.n_rollouts <= rows:
        warnings.warn(
            f"batch has N={batch.n_rollouts} rollouts; fits of order q={q} "
            f"need N > {rows} to be well posed",
            stacklevel=2,
        )
    mat = np.vstack(
        [_stack_history(batch.outputs, t, q), _stack_history(batch.inputs, t, q)]
    )
    return DataMatrix(t=t, q=q, matrix=mat, rhs=batch.outputs[:, t].T.copy())


class OrderDeterminationError(RuntimeError):
    """No rank deficiency found up to q_max; carries the observed rank table."""

    def __init__(self, message: str, ranks: dict[int, int]):
        super().__init__(message)
        self.ranks = ranks


def rank_profile(
    batch: RolloutBatch, t: int, q_max: int, tol: float = linalg.DEFAULT_RANK_TOL
) -> dict[int, int]:
    """Numerical rank of the data matrix for each order q = 1..q_max."""
    ranks = {}
    for q in range(1, q_max + 1):
        s = linalg.svd(assemble(batch, t, q).matrix).s
        ranks[q] = linalg.numerical_rank(s, tol)
    return ranks


def determine_order(
    batch: RolloutBatch, t: int, q_max: int, tol: float = linalg.DEFAULT_RANK_TOL
) -> tuple[int, int]:
    """Find the minimal ARMA order from data-matrix rank saturation.

    Increases q until the data matrix at time t goes row-rank deficient; at
    the first deficient q the rank equals n + r q, giving the state order
    n_hat, and the minimal usable order is the smallest q* with m q* >= n_hat.

    Returns:
        (q_star, n_hat).

    Raises:
        OrderDeterminationError: no deficiency up to q_max (the estimate
            would be a guess); the exception carries the rank table.
    """
    if q_max > t:
        raise ValueError(f"q_max={q_max} exceeds t={t}")
    ranks = rank_profile(batch, t, q_max, tol)
    for q in range(1, q_max + 1):
        rank = ranks[q]
        if rank < (batch.m + batch.r) * q:
            n_hat = rank - batch.r * q
            q_star = -(-n_hat // batch.m)  # ceil(n_hat / m)
            return q_star, n_hat
    raise OrderDeterminationError(
        f"data matrix is full row rank for all q <= {q_max} at t={t}; "
        f"increase q_max (ranks: {ranks})",
        ranks,
    )


def fit_ls(dm: DataMatrix, tol: float = linalg.DEFAULT_RANK_TOL) -> ArmaCoefficients:
    """Minimum-norm least-squares ARMA fit from one data matrix."""
    m = dm.rhs.shape[0]
    coef, rank = linalg.lstsq_min_norm(dm.matrix, dm.rhs, tol)
    residual = float(np.linalg.norm(dm.rhs - coef @ dm.matrix))
    rhs_scale = np.linalg.norm(dm.rhs)
    if residual > 1e-6 * max(rhs_scale, 1e-300):
        warnings.warn(
            f"ARMA fit at t={dm.t} has relative residual "
            f"{residual / max(rhs_scale, 1e-300):.3e}; data may be noisy, "
            f"nonlinear, or the order q={dm.q} too small",
            stacklevel=2,
        )
    return ArmaCoefficients(
        t=dm.t,
        q=dm.q,
        alpha=coef[:, : m * dm.q],
        beta=coef[:, m * dm.q :],
        residual_norm=residual,
        rank_used=rank,
    )


def fit_all(
    batch: RolloutBatch, q: int, tol: float = linalg.DEFAULT_RANK_TOL
) -> TvArmaModel:
    """Fit ARMA coefficients at every time step t = q..H of the batch."""
    coeffs = tuple(
        fit_ls(assemble(batch, t, q), tol) for t in range(q, batch.horizon + 1)
    )
    return TvArmaModel(
        q=q, m=batch.m, r=batch.r, horizon=batch.horizon, coefficients=coeffs
    )


def fundamental_arma(
    sys: LtvSystem, t: int, q: int, tol: float = linalg.DEFAULT_RANK_TOL
) -> ArmaCoefficients:
    """Exact ARMA coefficients computed from the plant matrices.

    alpha = C_t A_{t-1} ... A_{t-q} pinv(O) and beta is the row of input
    Markov blocks minus alpha times the forced-response matrix; requires the
    q-step observability matrix at t to have full column rank.
    """
    if not 1 <= q <= t:
        raise ValueError(f"need 1 <= q <= t, got q={q}, t={t}")
    n, m, r = sys.n, sys.m, sys.r
    O = observability_matrix(sys, t, q)
    if np.linalg.matrix_rank(O, tol * max(1.0, np.linalg.norm(O, 2))) < n:
        raise ObservabilityError(
            f"observability matrix at t={t}, q={q} is rank deficient"
        )
    G = forced_response_matrix(sys, t, q)
    # C_t A_{t-1} ... A_{t-q} and the input blocks C_t A_{t-1}...A_{t-j+1} B_{t-j}.
    markov_row = np.empty((m, r * q))
    left = sys.Ct(t)
    for j in range(1, q + 1):
        markov_row[:, (j - 1) * r : j * r] = left @ sys.Bt(t - j)
        left = left @ sys.At(t - j)
    alpha = left @ linalg.truncated_pinv(O, tol)
    beta = markov_row - alpha @ G
    return ArmaCoefficients(t=t, q=q, alpha=alpha, beta=beta, rank_used=n)


def fundamental_arma_model(
    sys: LtvSystem, q: int, tol: float = linalg.DEFAULT_RANK_TOL
) -> TvArmaModel:
    """Fundamental coefficients for every t = q..H, as a TvArmaModel."""
    coeffs = tuple(
        fundamental_arma(sys, t, q, tol) for t in range(q, sys.horizon + 1)
    )
    return TvArmaModel(q=q, m=sys.m, r=sys.r, horizon=sys.horizon, coefficients=coeffs)


def predict(
    coeffs: ArmaCoefficients, past_outputs: np.ndarray, past_inputs: np.ndarray
) -> np.ndarray:
    """One-step prediction from newest-first histories of length q.

    past_outputs is (q, m) = (z_{t-1}, ..., z_{t-q}); past_inputs is (q, r).
    """
    q = coeffs.q
    past_outputs = np.asarray(past_outputs, dtype=float).reshape(q, -1)
    past_inputs = np.asarray(past_inputs, dtype=float).reshape(q, -1)
    if past_outputs.shape != (q, coeffs.m) or past_inputs.shape != (q, coeffs.r):
        raise ValueError(
            f"history shapes {past_outputs.shape}, {past_inputs.shape} do not "
            f"match (q, m)=({q}, {coeffs.m}), (q, r)=({q}, {coeffs.r})"
        )
    return coeffs.alpha @ past_outputs.ravel() + coeffs.beta @ past_inputs.ravel()


def one_step_errors(model: TvArmaModel, batch: RolloutBatch) -> np.ndarray:
    """Per-step one-step-ahead prediction residuals on a batch.

    Returns (H+1-q, N, m) of z_t - prediction for t = q..H, using the true
    histories (teacher forcing).
    """
    errs = np.empty((batch.horizon + 1 - model.q, batch.n_rollouts, model.m))
    for t in range(model.q, batch.horizon + 1):
        c = model.at(t)
        hist = np.vstack(
            [_stack_history(batch.outputs, t, model.q),
             _stack_history(batch.inputs, t, model.q)]
        )
        pred = np.hstack([c.alpha, c.beta]) @ hist
        errs[t - model.q] = (batch.outputs[:, t].T - pred).T
    return errs


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_tv_arma(model: TvArmaModel, path: str) -> None:
    """Write a TvArmaModel as JSON (row-major coefficient blocks)."""
    data = {
        "q": model.q,
        "m": model.m,
        "r": model.r,
        "H": model.horizon,
        "coefficients": [
            {
                "t": c.t,
                "alpha": c.alpha.tolist(),
                "beta": c.beta.tolist(),
                "residual_norm": c.residual_norm,
                "rank_used": c.rank_used,
            }
            for c in model.coefficients
        ],
    }
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def load_tv_arma(path: str) -> TvArmaModel:
    """Read a TvArmaModel written by :func:`save_tv_arma`."""
    with open(path) as f:
        data = json.load(f)
    coeffs = tuple(
        ArmaCoefficients(
            t=rec["t"],
            q=data["q"],
            alpha=np.asarray(rec["alpha"], dtype=float),
            beta=np.asarray(rec["beta"], dtype=float),
            residual_norm=rec.get("residual_norm", 0.0),
            rank_used=rec.get("rank_used", 0),
        )
        for rec in data["coefficients"]
    )
    return TvArmaModel(
        q=data["q"], m=data["m"], r=data["r"], horizon=data["H"], coefficients=coeffs
    )
