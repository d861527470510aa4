"""Benchmark plants, rollout generation, and ground-truth oracles.

A plant is a discrete-time linear (possibly time-varying) system

    x_{t+1} = A_t x_t + B_t (u_t + w_t),      z_t = C_t x_t + v_t,

defined over a finite horizon ``H`` (inputs at t = 0..H-1, outputs at
t = 0..H).  Process noise w enters through the control channel only and
measurement noise v is additive on the output; both are zero when no
``NoiseSpec`` is given.

Randomness uses the counter-based Philox generator with one substream per
rollout, keyed by ``(seed, rollout_index)``, so batches are reproducible
and independent of the order in which rollouts are produced.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import DEFAULT_RANK_TOL, truncated_pinv

FLOAT_FMT = "%.17g"


class ObservabilityError(ValueError):
    """A required observability matrix is rank deficient."""


@dataclass(frozen=True)
class NoiseSpec:
    """Covariances of the control-channel process noise and measurement noise.

    Q is r x r (process, through B), R is m x m (measurement).  Both must be
    symmetric positive semidefinite.
    """

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        for name, mat in (("Q", self.Q), ("R", self.R)):
            mat = np.atleast_2d(np.asarray(mat, dtype=float))
            object.__setattr__(self, name, mat)
            if mat.shape[0] != mat.shape[1]:
                raise ValueError(f"{name} must be square, got {mat.shape}")
            if not np.allclose(mat, mat.T, atol=1e-12):
                raise ValueError(f"{name} is not symmetric")
            if mat.size and np.linalg.eigvalsh(mat).min() < -1e-12:
                raise ValueError(f"{name} has a negative eigenvalue")


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Factor L with L @ L.T = cov, valid for singular PSD matrices."""
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class LtvSystem:
    """Time-indexed (A_t, B_t, C_t) defining a plant over a finite horizon.

    Sequences have length ``horizon`` (or 1 for an LTI plant, broadcast over
    time).  ``A`` is (T, n, n), ``B`` is (T, n, r), ``C`` is (T, m, n).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    horizon: int
    name: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        for nm, arr in (("A", A), ("B", B), ("C", C)):
            if arr.ndim != 3:
                raise ValueError(f"{nm} must be a (T, ., .) stack, got {arr.shape}")
            if arr.shape[0] not in (1, self.horizon):
                raise ValueError(
                    f"{nm} must have 1 or horizon={self.horizon} slices, got {arr.shape[0]}"
                )
            object.__setattr__(self, nm, arr)
        n = A.shape[1]
        if A.shape[2] != n or B.shape[1] != n or C.shape[2] != n:
            raise ValueError("inconsistent state dimension across A, B, C")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def r(self) -> int:
        return self.B.shape[2]

    @property
    def m(self) -> int:
        return self.C.shape[1]

    @property
    def is_lti(self) -> bool:
        return self.A.shape[0] == 1 and self.B.shape[0] == 1 and self.C.shape[0] == 1

    def At(self, t: int) -> np.ndarray:
        return self.A[0] if self.A.shape[0] == 1 else self.A[t]

    def Bt(self, t: int) -> np.ndarray:
        return self.B[0] if self.B.shape[0] == 1 else self.B[t]

    def Ct(self, t: int) -> np.ndarray:
        # The output at t = H reuses C_{H-1}: sequences carry one slice per
        # dynamics step and every built-in plant has a constant C anyway.
        return self.C[0] if self.C.shape[0] == 1 else self.C[min(t, self.C.shape[0] - 1)]


@dataclass(frozen=True)
class Rollout:
    """One experiment: inputs u_0..u_{H-1} and outputs z_0..z_H.

    Hidden states and noise realizations are retained only as test oracles;
    identification code must never read them.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    states: np.ndarray | None = None
    noise_w: np.ndarray | None = None
    noise_v: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class RolloutBatch:
    """N independent rollouts stacked along the first axis.

    inputs is (N, H, r), outputs is (N, H+1, m), states (oracle only) is
    (N, H+1, n) when retained.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    states: np.ndarray | None = None
    seed: int | None = None
    noise: NoiseSpec | None = None
    plant: str = ""
    init_law: str = "zero"
    input_law: str = "gaussian"

    @property
    def n_rollouts(self) -> int:
        return self.outputs.shape[0]

    @property
    def horizon(self) -> int:
        return self.inputs.shape[1]

    @property
    def m(self) -> int:
        return self.outputs.shape[2]

    @property
    def r(self) -> int:
        return self.inputs.shape[2]

    def rollout(self, i: int) -> Rollout:
        return Rollout(
            inputs=self.inputs[i],
            outputs=self.outputs[i],
            states=None if self.states is None else self.states[i],
        )


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def _simulate_many(
    sys: LtvSystem,
    x0: np.ndarray,
    inputs: np.ndarray,
    w: np.ndarray | None,
    v: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    """Propagate N rollouts at once.  x0 (N, n), inputs (N, T, r)."""
    n_roll, T = inputs.shape[0], inputs.shape[1]
    states = np.empty((n_roll, T + 1, sys.n))
    outputs = np.empty((n_roll, T + 1, sys.m))
    states[:, 0] = x0
    for t in range(T):
        u_eff = inputs[:, t] if w is None else inputs[:, t] + w[:, t]
        outputs[:, t] = states[:, t] @ sys.Ct(t).T
        states[:, t + 1] = states[:, t] @ sys.At(t).T + u_eff @ sys.Bt(t).T
    outputs[:, T] = states[:, T] @ sys.Ct(T).T
    if v is not None:
        outputs += v
    return states, outputs


def simulate(
    sys: LtvSystem,
    x0: np.ndarray,
    inputs: np.ndarray,
    noise: NoiseSpec | None = None,
    rng: np.random.Generator | None = None,
    keep_states: bool = True,
) -> Rollout:
    """Simulate one rollout of ``sys`` from ``x0`` under ``inputs``.

    Args:
        sys: the plant.
        x0: initial state (n,).
        inputs: (T, r) with T <= horizon.
        noise: optional covariances; requires ``rng`` when given.
        rng: generator for the noise draws.
        keep_states: retain hidden states and noise realizations (oracle use).

    Returns:
        Rollout with outputs z_0..z_T.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    inputs = np.asarray(inputs, dtype=float).reshape(-1, sys.r)
    if x0.shape != (sys.n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({sys.n},)")
    if inputs.shape[0] > sys.horizon:
        raise ValueError(
            f"{inputs.shape[0]} inputs exceed plant horizon {sys.horizon}"
        )
    T = inputs.shape[0]
    w = v = None
    if noise is not None:
        if rng is None:
            raise ValueError("noisy simulation needs an rng")
        w = (rng.standard_normal((1, T, sys.r)) @ _psd_factor(noise.Q).T)
        v = (rng.standard_normal((1, T + 1, sys.m)) @ _psd_factor(noise.R).T)
    states, outputs = _simulate_many(sys, x0[None, :], inputs[None, :, :], w, v)
    return Rollout(
        inputs=inputs,
        outputs=outputs[0],
        states=states[0] if keep_states else None,
        noise_w=None if (w is None or not keep_states) else w[0],
        noise_v=None if (v is None or not keep_states) else v[0],
    )


def _rollout_stream(seed: int, index: int) -> np.random.Generator:
    """Philox substream for one rollout; key = (seed, rollout index)."""
    return np.random.Generator(np.random.Philox(key=[seed, index]))


def generate_batch(
    sys: LtvSystem,
    n_rollouts: int,
    input_law: str = "gaussian",
    input_sigma: float = 1.0,
    init_law: str = "zero",
    init_sigma: float = 1.0,
    inputs: np.ndarray | None = None,
    x0: np.ndarray | None = None,
    noise: NoiseSpec | None = None,
    seed: int = 0,
    keep_states: bool = True,
) -> RolloutBatch:
    """Generate N independent rollouts with reproducible per-rollout streams.

    Args:
        sys: the plant.
        n_rollouts: N >= 1.
        input_law: "gaussian" (i.i.d. N(0, input_sigma^2) per channel per
            step), "zero", or "provided" (pass ``inputs`` of shape (N, H, r)
            or (H, r) broadcast).
        init_law: "zero", "gaussian" (N(0, init_sigma^2) per state), or
            "provided" (pass ``x0`` of shape (N, n) or (n,) broadcast).
        noise: optional NoiseSpec; draws come from the same substreams.
        seed: batch seed; the same seed reproduces the batch bitwise.
        keep_states: retain hidden states as a test oracle.

    Per-rollout draw order within a substream is fixed (x0, inputs, process
    noise, measurement noise) so a rollout's data depends only on
    ``(seed, index)``.
    """
    if n_rollouts < 1:
        raise ValueError("n_rollouts must be >= 1")
    H, n, m, r = sys.horizon, sys.n, sys.m, sys.r

    X0 = np.zeros((n_rollouts, n))
    U = np.zeros((n_rollouts, H, r))
    W = np.zeros((n_rollouts, H, r)) if noise is not None else None
    V = np.zeros((n_rollouts, H + 1, m)) if noise is not None else None

    if input_law == "provided":
        if inputs is None:
            raise ValueError("input_law='provided' needs inputs")
        U[:] = np.asarray(inputs, dtype=float)
    elif input_law not in ("gaussian", "zero"):
        raise ValueError(f"unknown input_law {input_law!r}")
    if init_law == "provided":
        if x0 is None:
            raise ValueError("init_law='provided' needs x0")
        X0[:] = np.asarray(x0, dtype=float)
    elif init_law not in ("gaussian", "zero"):
        raise ValueError(f"unknown init_law {init_law!r}")

    n_x0 = n if init_law == "gaussian" else 0
    n_u = H * r if input_law == "gaussian" else 0
    n_w = H * r if noise is not None else 0
    n_v = (H + 1) * m if noise is not None else 0
    total = n_x0 + n_u + n_w + n_v

    if total:
        Lq = _psd_factor(noise.Q) if noise is not None else None
        Lr = _psd_factor(noise.R) if noise is not None else None
        for i in range(n_rollouts):
            draws = _rollout_stream(seed, i).standard_normal(total)
            k = 0
            if n_x0:
                X0[i] = init_sigma * draws[:n]
                k = n
            if n_u:
                U[i] = input_sigma * draws[k : k + n_u].reshape(H, r)
                k += n_u
            if n_w:
                W[i] = draws[k : k + n_w].reshape(H, r) @ Lq.T
                k += n_w
            if n_v:
                V[i] = draws[k : k + n_v].reshape(H + 1, m) @ Lr.T

    states, outputs = _simulate_many(sys, X0, U, W, V)
    return RolloutBatch(
        inputs=U,
        outputs=outputs,
        states=states if keep_states else None,
        seed=seed,
        noise=noise,
        plant=sys.name,
        init_law=init_law,
        input_law=input_law,
    )


# ---------------------------------------------------------------------------
# Ground-truth structural quantities
# ---------------------------------------------------------------------------


def observability_matrix(sys: LtvSystem, t: int, q: int) -> np.ndarray:
    """Stacked q-step observability matrix anchored at time t.

    Returns the (m*q, n) matrix with block rows

        C_{t-1} A_{t-2} ... A_{t-q},  C_{t-2} A_{t-3} ... A_{t-q},  ...,  C_{t-q},

    i.e. the map from x_{t-q} to the stacked outputs (z_{t-1}, ..., z_{t-q}).
    """
    if q < 1 or q > t:
        raise ValueError(f"need 1 <= q <= t, got q={q}, t={t}")
    m, n = sys.m, sys.n
    blocks = np.empty((q, m, n))
    # Build bottom-up: row q is C_{t-q}, row i is C_{t-i} * (A_{t-i-1} ... A_{t-q}).
    prod = np.eye(n)
    for i in range(q, 0, -1):
        blocks[i - 1] = sys.Ct(t - i) @ prod
        prod = sys.At(t - i) @ prod if i > 1 else prod
    return blocks.reshape(q * m, n)


def forced_response_matrix(sys: LtvSystem, t: int, q: int) -> np.ndarray:
    """Input-to-stacked-output map anchored at time t.

    Returns the (m*q, r*q) block matrix G with block (i, j) equal to
    C_{t-i} A_{t-i-1} ... A_{t-j+1} B_{t-j} for j > i and zero otherwise
    (1-indexed blocks; the bottom block row is all zero), so that

        (z_{t-1}; ...; z_{t-q}) = O x_{t-q} + G (u_{t-1}; ...; u_{t-q}).
    """
    if q < 1 or q > t:
        raise ValueError(f"need 1 <= q <= t, got q={q}, t={t}")
    m, r, n = sys.m, sys.r, sys.n
    G = np.zeros((m * q, r * q))
    for i in range(1, q):
        # Accumulate C_{t-i} A_{t-i-1} ... A_{t-j+1} B_{t-j} left to right in j.
        left = sys.Ct(t - i)
        for j in range(i + 1, q + 1):
            G[(i - 1) * m : i * m, (j - 1) * r : j * r] = left @ sys.Bt(t - j)
            if j < q:
                left = left @ sys.At(t - j)
    return G


def true_markov(sys: LtvSystem, k: int) -> np.ndarray:
    """Open-loop Markov parameters (CB, CAB, ..., CA^{k-1}B) of an LTI plant."""
    if not sys.is_lti:
        raise ValueError("Markov parameters by matrix powers need an LTI plant")
    A, B, C = sys.A[0], sys.B[0], sys.C[0]
    out = np.empty((k, sys.m, sys.r))
    AjB = B
    for j in range(k):
        out[j] = C @ AjB
        AjB = A @ AjB
    return out


def state_transform(
    sys: LtvSystem, t: int, q: int, tol: float = DEFAULT_RANK_TOL
) -> np.ndarray:
    """Linear map recovering x_t from the q-step output/input history at t.

    Returns the n x (m*q + r*q) matrix T such that

        x_t = T @ (z_t; ...; z_{t-q+1}; u_t; u_{t-1}; ...; u_{t-q+1})

    for every noise-free rollout (the u_t block is identically zero; slice it
    off to act on the history state of dimension m*q + r*(q-1)).

    Built by inverting the stacked output map to recover x_{t-q+1} and then
    propagating forward through the dynamics and the input convolution.
    """
    if q < 1 or t < q - 1:
        raise ValueError(f"need t >= q-1 >= 0, got t={t}, q={q}")
    n, m, r = sys.n, sys.m, sys.r
    O = observability_matrix(sys, t + 1, q)
    rank = np.linalg.matrix_rank(O, tol * max(1.0, np.linalg.norm(O, 2)))
    if rank < n:
        raise ObservabilityError(
            f"observability matrix for steps {t - q + 1}..{t} has rank {rank} < n={n}"
        )
    G = forced_response_matrix(sys, t + 1, q)
    O_pinv = truncated_pinv(O, tol)

    # x_{t-q+1} from history, then x_t = Phi x_{t-q+1} + conv(u).
    phi = np.eye(n)
    for s in range(t - q + 1, t):
        phi = sys.At(s) @ phi
    recover = np.hstack([O_pinv, -O_pinv @ G])

    conv = np.zeros((n, r * q))
    left = np.eye(n)
    for j in range(1, q):
        conv[:, j * r : (j + 1) * r] = left @ sys.Bt(t - j)
        if j < q - 1:
            left = left @ sys.At(t - j)
    T = phi @ recover
    T[:, m * q :] += conv
    return T


def info_state_transform(
    sys: LtvSystem, t: int, q: int, tol: float = DEFAULT_RANK_TOL
) -> np.ndarray:
    """Map from the history state (z_t..z_{t-q+1}, u_{t-1}..u_{t-q+1}) to x_t.

    Same as :func:`state_transform` with the identically-zero u_t block
    removed; shape n x (m*q + r*(q-1)).
    """
    T = state_transform(sys, t, q, tol)
    m, r = sys.m, sys.r
    return np.hstack([T[:, : m * q], T[:, m * q + r :]])


def check_uniform_observability(
    sys: LtvSystem, q: int, tol: float = DEFAULT_RANK_TOL
) -> None:
    """Raise ObservabilityError unless rank(O) = n at every anchor t in [q, H]."""
    for t in range(q, sys.horizon + 1):
        O = observability_matrix(sys, t, q)
        rank = np.linalg.matrix_rank(O, tol * max(1.0, np.linalg.norm(O, 2)))
        if rank < sys.n:
            raise ObservabilityError(
                f"plant {sys.name or '<anon>'}: observability matrix anchored at "
                f"t={t} (order q={q}) has rank {rank} < n={sys.n}"
            )


# ---------------------------------------------------------------------------
# Built-in benchmark plants
# ---------------------------------------------------------------------------


def _zoh_discretize(Ac: np.ndarray, Bc: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization via the block matrix exponential."""
    n, r = Bc.shape
    blk = np.zeros((n + r, n + r))
    blk[:n, :n] = Ac
    blk[:n, n:] = Bc
    M = scipy.linalg.expm(blk * dt)
    return M[:n, :n], M[:n, n:]


def make_scalar_plant(
    a: float = 0.5, b: float = 1.0, c: float = 1.0, horizon: int = 20
) -> LtvSystem:
    """Scalar LTI plant x+ = a x + b u, z = c x."""
    return LtvSystem(
        A=np.array([[[a]]]), B=np.array([[[b]]]), C=np.array([[[c]]]),
        horizon=horizon, name="scalar",
    )


def make_double_integrator(horizon: int = 30) -> LtvSystem:
    """Discrete double integrator with position output; Markov = (0, 1, 2, ...)."""
    return LtvSystem(
        A=np.array([[[1.0, 1.0], [0.0, 1.0]]]),
        B=np.array([[[0.0], [1.0]]]),
        C=np.array([[[1.0, 0.0]]]),
        horizon=horizon,
        name="double_integrator",
    )


def make_spring_mass_3dof(horizon: int = 40, dt: float = 0.1) -> LtvSystem:
    """Three unit masses in a spring chain, LTI, n=6, m=2, r=1.

    Chain wall-m1-m2-m3 with unit stiffness and 0.01 damping per link, force
    on mass 1, positions of masses 1 and 3 observed; exact matrix-exponential
    discretization at ``dt``.
    """
    K = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    D = 0.01 * K
    Ac = np.block([[np.zeros((3, 3)), np.eye(3)], [-K, -D]])
    Bc = np.vstack([np.zeros((3, 1)), np.array([[1.0], [0.0], [0.0]])])
    A, B = _zoh_discretize(Ac, Bc, dt)
    C = np.zeros((2, 6))
    C[0, 0] = 1.0
    C[1, 2] = 1.0
    sys = LtvSystem(A=A[None], B=B[None], C=C[None], horizon=horizon,
                    name="spring_mass_3dof")
    check_uniform_observability(sys, q=3)
    return sys


def make_ltv_oscillator(horizon: int = 30, dt: float = 0.1) -> LtvSystem:
    """Two coupled oscillators with time-varying ground stiffness, n=4, m=2, r=2.

    Ground springs k_t = 1 + 0.5 sin(0.2 t) (t = step index), coupling spring
    0.5, damping 0.02, both masses actuated and both positions observed.
    Discretized step by step with frozen coefficients over each interval.
    """
    kc, d = 0.5, 0.02
    A = np.empty((horizon, 4, 4))
    B = np.empty((horizon, 4, 2))
    Bc = np.vstack([np.zeros((2, 2)), np.eye(2)])
    for t in range(horizon):
        kt = 1.0 + 0.5 * np.sin(0.2 * t)
        K = np.array([[kt + kc, -kc], [-kc, kt + kc]])
        Ac = np.block([[np.zeros((2, 2)), np.eye(2)], [-K, -d * np.eye(2)]])
        A[t], B[t] = _zoh_discretize(Ac, Bc, dt)
    C = np.hstack([np.eye(2), np.zeros((2, 2))])[None]
    sys = LtvSystem(A=A, B=B, C=C, horizon=horizon, name="ltv_oscillator")
    check_uniform_observability(sys, q=2)
    return sys


# Cart-pole physical constants: cart mass, pole point mass, pole length, gravity.
CARTPOLE_PARAMS = {"mc": 1.0, "mp": 0.1, "length": 0.5, "g": 9.81}


def _cartpole_accel(state: np.ndarray, force: float, params: dict) -> np.ndarray:
    """State derivative of the cart-pole; angle measured from hanging down."""
    mc, mp, l, g = params["mc"], params["mp"], params["length"], params["g"]
    _, th, pd, thd = state
    sin, cos = np.sin(th), np.cos(th)
    # Mass matrix [[mc+mp, mp*l*cos], [mp*l*cos, mp*l^2]] against generalized forces.
    M = np.array([[mc + mp, mp * l * cos], [mp * l * cos, mp * l * l]])
    rhs = np.array([force + mp * l * thd * thd * sin, -mp * g * l * sin])
    acc = np.linalg.solve(M, rhs)
    return np.array([pd, thd, acc[0], acc[1]])


def _cartpole_step(state: np.ndarray, force: float, dt: float, params: dict) -> np.ndarray:
    """One fixed-step RK4 integration step."""
    k1 = _cartpole_accel(state, force, params)
    k2 = _cartpole_accel(state + 0.5 * dt * k1, force, params)
    k3 = _cartpole_accel(state + 0.5 * dt * k2, force, params)
    k4 = _cartpole_accel(state + dt * k3, force, params)
    return state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def cartpole_energy(state: np.ndarray, params: dict | None = None) -> float:
    """Total mechanical energy (for the conservation oracle)."""
    p = params or CARTPOLE_PARAMS
    mc, mp, l, g = p["mc"], p["mp"], p["length"], p["g"]
    _, th, pd, thd = state
    kinetic = 0.5 * mc * pd**2 + 0.5 * mp * (
        pd**2 + 2 * l * pd * thd * np.cos(th) + (l * thd) ** 2
    )
    return kinetic - mp * g * l * np.cos(th)


def simulate_cartpole_nonlinear(
    x0: np.ndarray,
    inputs: np.ndarray,
    dt: float = 0.02,
    params: dict | None = None,
) -> Rollout:
    """Integrate the nonlinear cart-pole; outputs are (cart position, angle)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    params = params or CARTPOLE_PARAMS
    inputs = np.asarray(inputs, dtype=float).reshape(-1, 1)
    T = inputs.shape[0]
    states = np.empty((T + 1, 4))
    states[0] = np.asarray(x0, dtype=float)
    for t in range(T):
        states[t + 1] = _cartpole_step(states[t], inputs[t, 0], dt, params)
    return Rollout(inputs=inputs, outputs=states[:, :2].copy(), states=states)


def make_cartpole_linearized(
    nominal: tuple[np.ndarray, np.ndarray] | None = None,
    dt: float = 0.02,
    horizon: int = 31,
    params: dict | None = None,
    fd_step: float = 1e-6,
) -> LtvSystem:
    """Cart-pole linearized along a nominal trajectory, n=4, m=2, r=1.

    ``nominal`` is a pair (states (H+1, 4), inputs (H, 1)); the default is
    zero input from the hanging equilibrium, which yields a constant
    Jacobian sequence.  Jacobians of the one-step RK4 map come from central
    finite differences with step ``fd_step``.
    """
    params = params or CARTPOLE_PARAMS
    if nominal is None:
        xs = np.zeros((horizon + 1, 4))
        us = np.zeros((horizon, 1))
    else:
        xs, us = np.asarray(nominal[0], float), np.asarray(nominal[1], float)
        horizon = us.shape[0]
    A = np.empty((horizon, 4, 4))
    B = np.empty((horizon, 4, 1))
    for t in range(horizon):
        for j in range(4):
            dx = np.zeros(4)
            dx[j] = fd_step
            A[t, :, j] = (
                _cartpole_step(xs[t] + dx, us[t, 0], dt, params)
                - _cartpole_step(xs[t] - dx, us[t, 0], dt, params)
            ) / (2 * fd_step)
        B[t, :, 0] = (
            _cartpole_step(xs[t], us[t, 0] + fd_step, dt, params)
            - _cartpole_step(xs[t], us[t, 0] - fd_step, dt, params)
        ) / (2 * fd_step)
    C = np.hstack([np.eye(2), np.zeros((2, 2))])[None]
    sys = LtvSystem(A=A, B=B, C=C, horizon=horizon, name="cartpole_linearized")
    check_uniform_observability(sys, q=2)
    return sys


BUILTIN_PLANTS = {
    "spring_mass_3dof": make_spring_mass_3dof,
    "ltv_oscillator": make_ltv_oscillator,
    "cartpole_linearized": make_cartpole_linearized,
    "double_integrator": make_double_integrator,
    "scalar": make_scalar_plant,
}

# Identification orders matching the scale of each benchmark.
DEFAULT_Q = {
    "spring_mass_3dof": 4,
    "ltv_oscillator": 4,
    "cartpole_linearized": 4,
    "double_integrator": 2,
    "scalar": 1,
}


def make_plant(name: str, horizon: int | None = None) -> LtvSystem:
    """Construct a built-in plant by name, optionally overriding the horizon."""
    if name not in BUILTIN_PLANTS:
        raise ValueError(f"unknown plant {name!r}; known: {sorted(BUILTIN_PLANTS)}")
    if horizon is None:
        return BUILTIN_PLANTS[name]()
    return BUILTIN_PLANTS[name](horizon=horizon)


def load_plant_json(path: str) -> LtvSystem:
    """Load an external plant from a JSON file of (A, B, C) sequences.

    Expected keys: "A", "B", "C" (each a list of matrices, length H or 1),
    "horizon", optional "name".
    """
    with open(path) as f:
        data = json.load(f)
    return LtvSystem(
        A=np.asarray(data["A"], dtype=float),
        B=np.asarray(data["B"], dtype=float),
        C=np.asarray(data["C"], dtype=float),
        horizon=int(data["horizon"]),
        name=data.get("name", "external"),
    )


# ---------------------------------------------------------------------------
# Batch files
# ---------------------------------------------------------------------------


def save_batch(batch: RolloutBatch, csv_path: str, meta_path: str | None = None) -> None:
    """Write a batch as CSV plus a JSON metadata sidecar.

    CSV header is ``rollout,t,u_1..u_r,z_1..z_m`` with one row per
    (rollout, t); the input columns are empty at t = H.
    """
    m, r, H = batch.m, batch.r, batch.horizon
    header = (
        ["rollout", "t"]
        + [f"u_{j + 1}" for j in range(r)]
        + [f"z_{j + 1}" for j in range(m)]
    )
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(batch.n_rollouts):
            for t in range(H + 1):
                u_cells = (
                    [FLOAT_FMT % x for x in batch.inputs[i, t]] if t < H else [""] * r
                )
                z_cells = [FLOAT_FMT % x for x in batch.outputs[i, t]]
                writer.writerow([i, t] + u_cells + z_cells)
    meta = {
        "plant": batch.plant,
        "N": batch.n_rollouts,
        "H": H,
        "m": m,
        "r": r,
        "seed": batch.seed,
        "init_law": batch.init_law,
        "input_law": batch.input_law,
        "nonzero_init": batch.init_law != "zero",
        "noise": None
        if batch.noise is None
        else {"Q": batch.noise.Q.tolist(), "R": batch.noise.R.tolist()},
    }
    if meta_path is None:
        meta_path = csv_path.rsplit(".", 1)[0] + ".json"
    with open(meta_path, "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def load_batch(csv_path: str, meta_path: str | None = None) -> RolloutBatch:
    """Read a batch written by :func:`save_batch` (hidden states are not stored)."""
    if meta_path is None:
        meta_path = csv_path.rsplit(".", 1)[0] + ".json"
    with open(meta_path) as f:
        meta = json.load(f)
    N, H, m, r = meta["N"], meta["H"], meta["m"], meta["r"]
    inputs = np.zeros((N, H, r))
    outputs = np.zeros((N, H + 1, m))
    with open(csv_path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for row in reader:
            i, t = int(row[0]), int(row[1])
            if t < H:
                inputs[i, t] = [float(x) for x in row[2 : 2 + r]]
            outputs[i, t] = [float(x) for x in row[2 + r : 2 + r + m]]
    noise = None
    if meta.get("noise"):
        noise = NoiseSpec(
            Q=np.asarray(meta["noise"]["Q"]), R=np.asarray(meta["noise"]["R"])
        )
    return RolloutBatch(
        inputs=inputs,
        outputs=outputs,
        states=None,
        seed=meta.get("seed"),
        noise=noise,
        plant=meta.get("plant", ""),
        init_law=meta.get("init_law", "zero"),
        input_law=meta.get("input_law", "gaussian"),
    )
