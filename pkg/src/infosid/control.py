"""Finite-horizon LQR on time-varying models and the equivalence experiment.

Costs are quadratic in the *output*: stage cost (z' Qz z + u' R u) / 2 with
terminal z' Qf z / 2, lifted to whatever state the model uses through its
output map (C' Qz C stays positive semidefinite for wide C).  The same
Riccati recursion therefore serves the true plant and any realized
history-state model, which is exactly what the equivalence experiment
needs: synthesize both controllers independently and compare the closed
loops step by step.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .arma import fundamental_arma_model
from .plants import FLOAT_FMT, LtvSystem
from .realization import InfoStateModel, info_state_from_history, realize_tv


@dataclass(frozen=True)
class QuadraticCost:
    """Output-space weights: Qz (m x m, PSD), R (r x r, PD), Qf (m x m, PSD)."""

    Qz: np.ndarray
    R: np.ndarray
    Qf: np.ndarray

    def __post_init__(self):
        for name in ("Qz", "R", "Qf"):
            mat = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, mat)
            if not np.allclose(mat, mat.T, atol=1e-12):
                raise ValueError(f"{name} is not symmetric")
        if np.linalg.eigvalsh(self.R).min() <= 0:
            raise ValueError("input weight R must be positive definite")


@dataclass(frozen=True)
class LqrPolicy:
    """Time-indexed feedback gains u_t = -K_t x_t over a control window.

    ``gains[i]`` acts at step t_start + i; ``cost_to_go[i]`` is the value
    matrix at that step (one more entry than gains, ending at the terminal).
    """

    t_start: int
    gains: np.ndarray
    cost_to_go: np.ndarray

    def gain(self, t: int) -> np.ndarray:
        return self.gains[t - self.t_start]

    def predicted_cost(self, x: np.ndarray) -> float:
        """Optimal cost-to-go from state x at the start of the window."""
        return 0.5 * float(x @ self.cost_to_go[0] @ x)


def lqr_tv(
    A_seq,
    B_seq,
    C_seq,
    cost: QuadraticCost,
    t_start: int = 0,
) -> LqrPolicy:
    """Backward Riccati recursion for output-weighted finite-horizon LQR.

    Args:
        A_seq, B_seq: length-T sequences of step matrices (state at window
            step i maps through A_seq[i]).
        C_seq: length-(T+1) sequence of output maps, one per state incl. the
            terminal one.
        cost: output-space weights.
        t_start: absolute time of the first window step (bookkeeping only).

    Raises:
        np.linalg.LinAlgError: (R + B' P B) loses positive definiteness.
    """
    T = len(A_seq)
    if len(B_seq) != T or len(C_seq) != T + 1:
        raise ValueError(
            f"window mismatch: {len(A_seq)} A's, {len(B_seq)} B's, "
            f"{len(C_seq)} C's (need T, T, T+1)"
        )
    n = A_seq[0].shape[0]
    r = B_seq[0].shape[1]
    gains = np.empty((T, r, n))
    P_seq = np.empty((T + 1, n, n))
    P = C_seq[T].T @ cost.Qf @ C_seq[T]
    P_seq[T] = P
    for i in range(T - 1, -1, -1):
        A, B, C = A_seq[i], B_seq[i], C_seq[i]
        H = cost.R + B.T @ P @ B
        try:
            np.linalg.cholesky(H)  # positive-definiteness gate
        except np.linalg.LinAlgError as err:
            raise np.linalg.LinAlgError(
                f"R + B'PB not positive definite at window step {i}"
            ) from err
        K = np.linalg.solve(H, B.T @ P @ A)
        P = C.T @ cost.Qz @ C + A.T @ P @ (A - B @ K)
        P = 0.5 * (P + P.T)
        gains[i] = K
        P_seq[i] = P
    return LqrPolicy(t_start=t_start, gains=gains, cost_to_go=P_seq)


def trajectory_cost(
    outputs: np.ndarray, inputs: np.ndarray, cost: QuadraticCost
) -> float:
    """Accumulated cost sum_t (z'Qz z + u'Ru)/2 + terminal z'Qf z/2.

    ``outputs`` has one more row than ``inputs``; the last row is terminal.
    """
    total = 0.0
    for t in range(inputs.shape[0]):
        z, u = outputs[t], inputs[t]
        total += 0.5 * (z @ cost.Qz @ z + u @ cost.R @ u)
    zT = outputs[-1]
    return total + 0.5 * (zT @ cost.Qf @ zT)


@dataclass(frozen=True)
class EquivalenceReport:
    """Closed-loop comparison of full-state and history-state LQR.

    Difference norms are normalized by the peak norm of the full-state
    controller's trajectory, so near-zero steps do not blow up the ratio.
    """

    t_start: int
    u_diff_rel: np.ndarray
    z_diff_rel: np.ndarray
    cost_true: float
    cost_infostate: float

    @property
    def rel_cost_gap(self) -> float:
        return abs(self.cost_infostate - self.cost_true) / max(abs(self.cost_true), 1e-300)


def _policy_for_plant(
    sys: LtvSystem, cost: QuadraticCost, t0: int, horizon: int
) -> LqrPolicy:
    A_seq = [sys.At(t) for t in range(t0, horizon)]
    B_seq = [sys.Bt(t) for t in range(t0, horizon)]
    C_seq = [sys.Ct(t) for t in range(t0, horizon + 1)]
    return lqr_tv(A_seq, B_seq, C_seq, cost, t_start=t0)


def _policy_for_info_model(
    model: InfoStateModel, cost: QuadraticCost, t0: int, horizon: int
) -> LqrPolicy:
    A_seq = []
    B_seq = []
    for t in range(t0, horizon):
        A, B = model.transition(t)
        A_seq.append(A)
        B_seq.append(B)
    C_seq = [model.C for _ in range(t0, horizon + 1)]
    return lqr_tv(A_seq, B_seq, C_seq, cost, t_start=t0)


def run_equivalence(
    sys: LtvSystem,
    infomodel: InfoStateModel,
    cost: QuadraticCost,
    x0: np.ndarray,
    warmup_inputs: np.ndarray | None = None,
    horizon: int | None = None,
) -> EquivalenceReport:
    """Optimal control on the true plant vs. on the history-state model.

    Both systems receive the same q-1 warmup inputs (zero by default) from
    the same initial state; from t = q-1 onward each runs its own
    independently synthesized LQR in closed loop.  The report compares the
    two input/output trajectories and their accumulated costs over
    t = q-1..H, where the equivalence claim applies.
    """
    q = infomodel.q
    H = sys.horizon if horizon is None else horizon
    if infomodel.t_end < H:
        raise ValueError(
            f"history-state model covers t <= {infomodel.t_end} but the "
            f"experiment horizon is {H}"
        )
    t0 = q - 1
    if warmup_inputs is None:
        warmup_inputs = np.zeros((t0, sys.r))
    warmup_inputs = np.asarray(warmup_inputs, dtype=float).reshape(-1, sys.r)
    if warmup_inputs.shape[0] != t0:
        raise ValueError(f"need q-1={t0} warmup inputs, got {warmup_inputs.shape[0]}")

    # Shared warmup on the true plant; it fixes x_{q-1} and the history state.
    x = np.asarray(x0, dtype=float)
    warm_z = np.empty((t0 + 1, sys.m))
    for t in range(t0):
        warm_z[t] = sys.Ct(t) @ x
        x = sys.At(t) @ x + sys.Bt(t) @ warmup_inputs[t]
    warm_z[t0] = sys.Ct(t0) @ x

    policy_x = _policy_for_plant(sys, cost, t0, H)
    policy_z = _policy_for_info_model(infomodel, cost, t0, H)

    # (a) true plant under full-state feedback.
    T = H - t0
    u_true = np.empty((T, sys.r))
    z_true = np.empty((T + 1, sys.m))
    xt = x.copy()
    for i, t in enumerate(range(t0, H)):
        z_true[i] = sys.Ct(t) @ xt
        u_true[i] = -policy_x.gain(t) @ xt
        xt = sys.At(t) @ xt + sys.Bt(t) @ u_true[i]
    z_true[T] = sys.Ct(H) @ xt

    # (b) history-state model under its own feedback, initialized from the
    # warmup history only (no access to the plant state).
    zeta = info_state_from_history(
        warm_z[: t0 + 1][::-1], warmup_inputs[:t0][::-1], t=t0
    ).vector
    u_info = np.empty((T, sys.r))
    z_info = np.empty((T + 1, sys.m))
    for i, t in enumerate(range(t0, H)):
        z_info[i] = zeta[: sys.m]
        u_info[i] = -policy_z.gain(t) @ zeta
        A, B = infomodel.transition(t)
        zeta = A @ zeta + B @ u_info[i]
    z_info[T] = zeta[: sys.m]

    u_scale = max(np.linalg.norm(u_true, axis=1).max(), 1e-300)
    z_scale = max(np.linalg.norm(z_true, axis=1).max(), 1e-300)
    return EquivalenceReport(
        t_start=t0,
        u_diff_rel=np.linalg.norm(u_true - u_info, axis=1) / u_scale,
        z_diff_rel=np.linalg.norm(z_true - z_info, axis=1) / z_scale,
        cost_true=trajectory_cost(z_true, u_true, cost),
        cost_infostate=trajectory_cost(z_info, u_info, cost),
    )


def closed_loop_cost_with_order(
    sys: LtvSystem,
    q: int,
    cost: QuadraticCost,
    x0: np.ndarray,
    horizon: int | None = None,
    tol: float = 1e-8,
) -> float:
    """Total plant cost over 0..H using history-state LQR of order q.

    Inputs are zero until the history state exists at t = q-1 and optimal
    afterwards; the model is realized from the exact plant coefficients.
    The cost includes the warmup steps, which is what makes different q
    comparable.
    """
    H = sys.horizon if horizon is None else horizon
    model = realize_tv(fundamental_arma_model(sys, q, tol))
    t0 = q - 1
    policy = _policy_for_info_model(model, cost, t0, H)

    x = np.asarray(x0, dtype=float)
    inputs = np.zeros((H, sys.r))
    outputs = np.empty((H + 1, sys.m))
    zeta = None
    for t in range(H):
        outputs[t] = sys.Ct(t) @ x
        if t >= t0:
            if zeta is None:
                zeta = info_state_from_history(
                    outputs[t - q + 1 : t + 1][::-1], inputs[t - q + 1 : t][::-1], t=t
                ).vector
            inputs[t] = -policy.gain(t) @ zeta
            A, B = model.transition(t)
            zeta = A @ zeta + B @ inputs[t]
        x = sys.At(t) @ x + sys.Bt(t) @ inputs[t]
    outputs[H] = sys.Ct(H) @ x
    return trajectory_cost(outputs, inputs, cost)


def compare_q_lengths(
    sys: LtvSystem,
    cost: QuadraticCost,
    x0: np.ndarray,
    q_small: int,
    q_large: int,
    horizon: int | None = None,
) -> tuple[float, float]:
    """Total costs of history-state control with two window lengths.

    Both runs apply zero inputs during their own initialization window; the
    shorter window starts optimizing earlier and can only do better:
    J(q_small) <= J(q_large) up to numerical round-off.
    """
    if q_small > q_large:
        raise ValueError("q_small must be <= q_large")
    J_small = closed_loop_cost_with_order(sys, q_small, cost, x0, horizon)
    J_large = closed_loop_cost_with_order(sys, q_large, cost, x0, horizon)
    return J_small, J_large


def save_equivalence_report(
    report: EquivalenceReport, csv_path: str, summary_path: str | None = None
) -> None:
    """Write the per-step comparison CSV and the cost summary JSON."""
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["t", "u_diff_relnorm", "z_diff_relnorm"])
        for i, t in enumerate(range(report.t_start, report.t_start + len(report.z_diff_rel))):
            u_cell = FLOAT_FMT % report.u_diff_rel[i] if i < len(report.u_diff_rel) else ""
            writer.writerow([t, u_cell, FLOAT_FMT % report.z_diff_rel[i]])
    if summary_path is not None:
        summary = {
            "cost_true": report.cost_true,
            "cost_infostate": report.cost_infostate,
            "rel_gap": report.rel_cost_gap,
        }
        with open(summary_path, "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
