"""State-space realization directly from ARMA coefficients.

The realized state is the history vector

    (z_t; z_{t-1}; ...; z_{t-q+1}; u_{t-1}; ...; u_{t-q+1})

of dimension m q + r (q - 1) (for q = 1 the input block is empty).  The
transition matrix combines the ARMA coefficient row with shift structure:
no Hankel matrix, no SVD, and the same construction for time-varying and
time-invariant coefficients.  For LTI coefficients the smaller observer
canonical form of dimension m q is also provided.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .arma import ArmaCoefficients, TvArmaModel
from .plants import FLOAT_FMT, RolloutBatch, Rollout


def info_state_dim(q: int, m: int, r: int) -> int:
    return m * q + r * (q - 1)


@dataclass(frozen=True)
class InfoState:
    """History vector at time t: q newest outputs, q-1 newest inputs."""

    vector: np.ndarray
    t: int
    q: int


def info_state_from_history(
    outputs: np.ndarray, inputs: np.ndarray, t: int = 0
) -> InfoState:
    """Concatenate newest-first histories into a history state.

    outputs is (q, m) = (z_t, ..., z_{t-q+1}); inputs is (q-1, r) =
    (u_{t-1}, ..., u_{t-q+1}) and may be empty for q = 1.
    """
    outputs = np.asarray(outputs, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    q = outputs.shape[0]
    if inputs.size and inputs.shape[0] != q - 1:
        raise ValueError(
            f"need q-1={q - 1} past inputs to go with q={q} outputs, got "
            f"{inputs.shape[0]}"
        )
    if q > 1 and inputs.shape[0] != q - 1:
        raise ValueError(f"missing input history for q={q}")
    return InfoState(
        vector=np.concatenate([outputs.ravel(), inputs.ravel()]), t=t, q=q
    )


def info_state_at(rollout: Rollout, t: int, q: int) -> InfoState:
    """History state of a rollout at time t (needs t >= q-1)."""
    if t < q - 1:
        raise ValueError(f"history state at t={t} needs t >= q-1={q - 1}")
    z = rollout.outputs[t - q + 1 : t + 1][::-1]
    u = rollout.inputs[t - q + 1 : t][::-1]
    return info_state_from_history(z, u, t)


@dataclass(frozen=True)
class InfoStateModel:
    """Realized time-varying model on the history state.

    ``A[i]``, ``B[i]`` hold the transition into time t = t_start + 1 + i, so
    the model propagates states from t_start through t_end; the output map
    selects the first m coordinates.
    """

    q: int
    m: int
    r: int
    t_start: int
    A: np.ndarray
    B: np.ndarray

    @property
    def dim(self) -> int:
        return info_state_dim(self.q, self.m, self.r)

    @property
    def t_end(self) -> int:
        return self.t_start + self.A.shape[0]

    @property
    def C(self) -> np.ndarray:
        out = np.zeros((self.m, self.dim))
        out[:, : self.m] = np.eye(self.m)
        return out

    def transition(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """(A, B) mapping the state at time t to the state at time t+1."""
        if not self.t_start <= t < self.t_end:
            raise ValueError(
                f"no transition from t={t}; model covers {self.t_start}..{self.t_end - 1}"
            )
        return self.A[t - self.t_start], self.B[t - self.t_start]


def _transition_blocks(
    c: ArmaCoefficients, m: int, r: int
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble one (A, B) pair from a coefficient set."""
    q = c.q
    d = info_state_dim(q, m, r)
    A = np.zeros((d, d))
    B = np.zeros((d, r))
    # First block row: full alpha row, then beta blocks for lags 2..q.
    A[:m, : m * q] = c.alpha
    A[:m, m * q :] = c.beta[:, r:]
    B[:m] = c.beta[:, :r]
    # Output shift: z_{t-1}..z_{t-q+1} copy down from the previous state.
    for i in range(1, q):
        A[i * m : (i + 1) * m, (i - 1) * m : i * m] = np.eye(m)
    if q > 1:
        # u_{t-1} enters from the control; older inputs shift down.
        B[m * q : m * q + r] = np.eye(r)
        for i in range(1, q - 1):
            A[m * q + i * r : m * q + (i + 1) * r,
              m * q + (i - 1) * r : m * q + i * r] = np.eye(r)
    return A, B


def realize_tv(model: TvArmaModel) -> InfoStateModel:
    """Realize the history-state model from per-step ARMA coefficients.

    The coefficient at time t provides the transition from t-1 to t, so a
    model covering t = q..H propagates states from t = q-1 through H.
    """
    m, r, q = model.m, model.r, model.q
    d = info_state_dim(q, m, r)
    A = np.empty((len(model.coefficients), d, d))
    B = np.empty((len(model.coefficients), d, r))
    for i, c in enumerate(model.coefficients):
        A[i], B[i] = _transition_blocks(c, m, r)
    return InfoStateModel(q=q, m=m, r=r, t_start=q - 1, A=A, B=B)


@dataclass(frozen=True)
class LtiCanonicalModel:
    """Observer-canonical LTI realization of time-invariant ARMA coefficients.

    State dimension m q; A carries the alpha blocks in its first block column
    and identity blocks on the superdiagonal, B stacks the beta blocks, and
    the output is the first m coordinates.
    """

    q: int
    m: int
    r: int
    A: np.ndarray
    B: np.ndarray

    @property
    def dim(self) -> int:
        return self.m * self.q

    @property
    def C(self) -> np.ndarray:
        out = np.zeros((self.m, self.dim))
        out[:, : self.m] = np.eye(self.m)
        return out


def realize_lti_canonical(coeffs: ArmaCoefficients) -> LtiCanonicalModel:
    """Observer canonical form from one (time-invariant) coefficient set."""
    q, m = coeffs.q, coeffs.m
    r = coeffs.r
    A = np.zeros((m * q, m * q))
    B = np.zeros((m * q, r))
    for k in range(1, q + 1):
        A[(k - 1) * m : k * m, :m] = coeffs.alpha_block(k)
        B[(k - 1) * m : k * m] = coeffs.beta_block(k)
        if k < q:
            A[(k - 1) * m : k * m, k * m : (k + 1) * m] = np.eye(m)
    return LtiCanonicalModel(q=q, m=m, r=r, A=A, B=B)


def canonical_state_from_history(
    coeffs: ArmaCoefficients, outputs: np.ndarray, inputs: np.ndarray
) -> np.ndarray:
    """Canonical stacked state at time t from newest-first histories.

    outputs is (q, m) = (z_t, ..., z_{t-q+1}); inputs is (q-1, r) =
    (u_{t-1}, ..., u_{t-q+1}).  Component k accumulates the still-pending
    contributions of lags >= k.
    """
    q, m = coeffs.q, coeffs.m
    outputs = np.asarray(outputs, dtype=float).reshape(q, m)
    inputs = np.asarray(inputs, dtype=float).reshape(max(q - 1, 0), coeffs.r)
    state = np.zeros(m * q)
    state[:m] = outputs[0]
    for k in range(2, q + 1):
        acc = np.zeros(m)
        for i in range(k, q + 1):
            lag = i - k + 1  # history index: z_{t-lag}, u_{t-lag}
            acc += coeffs.alpha_block(i) @ outputs[lag]
            acc += coeffs.beta_block(i) @ inputs[lag - 1]
        state[(k - 1) * m : k * m] = acc
    return state


def average_lti_coefficients(
    model: TvArmaModel, batch: RolloutBatch, tol: float = 1e-8
) -> ArmaCoefficients:
    """Average per-step coefficients of an LTI fit, guarded by predictions.

    Entrywise averaging is only safe when the per-step solutions agree as
    predictors (rank-deficient fits differ by null-space components that do
    not cancel under averaging in general), so each step's coefficients are
    compared against the averaged ones on the batch data first.

    Raises:
        ValueError: the per-step coefficient rows disagree in prediction.
    """
    from .arma import assemble  # local import to avoid a cycle at module load

    stacked = np.stack(
        [np.hstack([c.alpha, c.beta]) for c in model.coefficients]
    )
    mean = stacked.mean(axis=0)
    scale = max(np.linalg.norm(batch.outputs), 1e-300)
    for c in model.coefficients:
        dm = assemble(batch, c.t, model.q)
        gap = np.linalg.norm((np.hstack([c.alpha, c.beta]) - mean) @ dm.matrix)
        if gap > tol * scale:
            raise ValueError(
                f"per-step ARMA solutions disagree in prediction at t={c.t} "
                f"(gap {gap:.3e}); use the time-varying realization"
            )
    m = model.m
    return ArmaCoefficients(
        t=model.q,
        q=model.q,
        alpha=mean[:, : m * model.q],
        beta=mean[:, m * model.q :],
    )


def simulate_info_state(
    model: InfoStateModel | LtiCanonicalModel,
    init: InfoState | np.ndarray,
    inputs: np.ndarray,
    t_start: int | None = None,
) -> np.ndarray:
    """Run the realized model forward and return its emitted outputs.

    For an InfoStateModel the initial state is anchored in time (either an
    InfoState carrying its own t, or ``t_start`` for a raw vector) and the
    inputs drive transitions t0 -> t0+1 -> ...; the output sequence returned
    is (z_{t0+1}, ..., z_{t0+len(inputs)}).  The LTI canonical model has no
    time anchoring.
    """
    inputs = np.asarray(inputs, dtype=float).reshape(-1, model.r)
    if isinstance(init, InfoState):
        state = init.vector.copy()
        t0 = init.t
    else:
        state = np.asarray(init, dtype=float).copy()
        if t_start is not None:
            t0 = t_start
        else:
            t0 = model.t_start if isinstance(model, InfoStateModel) else 0
    if state.shape != (model.dim,):
        raise ValueError(f"state has shape {state.shape}, expected ({model.dim},)")
    outputs = np.empty((inputs.shape[0], model.m))
    for k in range(inputs.shape[0]):
        if isinstance(model, InfoStateModel):
            A, B = model.transition(t0 + k)
        else:
            A, B = model.A, model.B
        state = A @ state + B @ inputs[k]
        outputs[k] = state[: model.m]
    return outputs


def predict_rollout(
    model: InfoStateModel, rollout: Rollout
) -> np.ndarray:
    """Free-run prediction of a rollout: init from its first q steps.

    Returns (H+1, m); rows before t = q are copied from the rollout (the
    initialization window is consumed, never predicted).
    """
    q = model.q
    H = rollout.inputs.shape[0]
    init = info_state_at(rollout, q - 1, q)
    pred = rollout.outputs.copy().astype(float)
    pred[q:] = simulate_info_state(model, init, rollout.inputs[q - 1 : H])
    return pred


def markov_from_arma(coeffs: ArmaCoefficients, count: int) -> np.ndarray:
    """Open-loop Markov parameters from time-invariant ARMA coefficients.

    Y_0 = beta_1 and Y_k = beta_{k+1} + sum_{i=1..k} alpha_i Y_{k-i}, with
    alpha, beta taken as zero beyond lag q; valid to any length.
    """
    m, r, q = coeffs.m, coeffs.r, coeffs.q
    Y = np.zeros((count, m, r))
    for k in range(count):
        acc = coeffs.beta_block(k + 1) if k + 1 <= q else np.zeros((m, r))
        for i in range(1, min(k, q) + 1):
            acc = acc + coeffs.alpha_block(i) @ Y[k - i]
        Y[k] = acc
    return Y


def markov_of_model(model: LtiCanonicalModel, count: int) -> np.ndarray:
    """Markov parameters C A^k B of a canonical model, by matrix powers."""
    Y = np.empty((count, model.m, model.r))
    AkB = model.B
    C = model.C
    for k in range(count):
        Y[k] = C @ AkB
        AkB = model.A @ AkB
    return Y


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_info_state_model(model: InfoStateModel, path: str) -> None:
    """Write an InfoStateModel as JSON; the output map is implicit."""
    data = {
        "q": model.q,
        "m": model.m,
        "r": model.r,
        "t_range": [model.t_start, model.t_end],
        "transitions": [
            {"A": model.A[i].tolist(), "B": model.B[i].tolist()}
            for i in range(model.A.shape[0])
        ],
    }
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def load_info_state_model(path: str) -> InfoStateModel:
    with open(path) as f:
        data = json.load(f)
    A = np.asarray([tr["A"] for tr in data["transitions"]], dtype=float)
    B = np.asarray([tr["B"] for tr in data["transitions"]], dtype=float)
    return InfoStateModel(
        q=data["q"], m=data["m"], r=data["r"], t_start=data["t_range"][0], A=A, B=B
    )


def save_markov_csv(markov: np.ndarray, path: str) -> None:
    """Write a Markov sequence as CSV rows ``k, Y_rowmajor...``."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["k"] + [f"Y_{i}" for i in range(markov.shape[1] * markov.shape[2])])
        for k in range(markov.shape[0]):
            writer.writerow([k] + [FLOAT_FMT % x for x in markov[k].ravel()])
