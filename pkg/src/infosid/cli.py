"""Command-line harness: plants -> identification -> prediction/control/OKID.

Every command reads a JSON config, writes CSV/JSON reports into an output
directory, and is deterministic given (config, seed): rerunning produces
bit-identical files.  Exit codes: 0 success, 1 validation error, 2 a
configured acceptance threshold was violated (reports are still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys as _sys
import warnings

import numpy as np

from . import arma, control, noise, okid, plants, realization
from .plants import FLOAT_FMT


class ConfigError(ValueError):
    pass


_COMMON_KEYS = {"plant", "plant_file", "horizon", "out_dir", "seed", "tol"}
_ALLOWED_KEYS = {
    "simulate": _COMMON_KEYS
    | {"N", "input_law", "input_sigma", "init_law", "init_sigma", "noise"},
    "identify": _COMMON_KEYS
    | {
        "N",
        "input_law",
        "input_sigma",
        "init_law",
        "init_sigma",
        "noise",
        "q",
        "q_max",
        "batch_csv",
        "held_out_N",
        "held_out_threshold",
    },
    "predict": _COMMON_KEYS | {"model_file", "batch_csv", "q", "N", "init_law", "init_sigma"},
    "control": _COMMON_KEYS
    | {"q", "cost", "x0", "init_sigma", "thresholds"},
    "okid": _COMMON_KEYS | {"N", "q", "input_sigma", "markov_count", "era_order", "thresholds"},
    "noise-identify": _COMMON_KEYS
    | {"N", "q", "noise", "input_sigma", "init_law", "init_sigma", "eval_N"},
}


def _load_config(path: str, command: str, overrides: dict) -> dict:
    try:
        with open(path) as f:
            config = json.load(f)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(config) - _ALLOWED_KEYS[command]
    if unknown:
        raise ConfigError(
            f"unknown config keys for {command!r}: {sorted(unknown)}; "
            f"allowed: {sorted(_ALLOWED_KEYS[command])}"
        )
    for key, value in overrides.items():
        if value is not None:
            config[key] = value
    return config


def _build_plant(config: dict) -> plants.LtvSystem:
    if "plant_file" in config:
        return plants.load_plant_json(config["plant_file"])
    name = config.get("plant")
    if not name:
        raise ConfigError("config needs 'plant' or 'plant_file'")
    try:
        return plants.make_plant(name, horizon=config.get("horizon"))
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err


def _noise_spec(config: dict) -> plants.NoiseSpec | None:
    raw = config.get("noise")
    if not raw:
        return None
    try:
        return plants.NoiseSpec(Q=np.asarray(raw["Q"], dtype=float),
                                R=np.asarray(raw["R"], dtype=float))
    except (KeyError, ValueError) as err:
        raise ConfigError(f"invalid noise spec: {err}") from err


def _make_batch(sys: plants.LtvSystem, config: dict, seed_offset: int = 0,
                n_override: int | None = None) -> plants.RolloutBatch:
    n = n_override if n_override is not None else int(config.get("N", 0))
    if n < 1:
        raise ConfigError(f"N must be >= 1, got {n}")
    return plants.generate_batch(
        sys,
        n,
        input_law=config.get("input_law", "gaussian"),
        input_sigma=float(config.get("input_sigma", 1.0)),
        init_law=config.get("init_law", "zero"),
        init_sigma=float(config.get("init_sigma", 1.0)),
        noise=_noise_spec(config),
        seed=int(config.get("seed", 0)) + seed_offset,
    )


def _resolve_q(config: dict, batch: plants.RolloutBatch, tol: float) -> tuple[int, int | None]:
    """Return (q, n_hat); n_hat is known only when q='auto'."""
    q_raw = config.get("q", "auto")
    if q_raw != "auto":
        return int(q_raw), None
    q_max = int(config.get("q_max", min(6, batch.horizon)))
    try:
        q_star, n_hat = arma.determine_order(batch, t=q_max, q_max=q_max, tol=tol)
    except arma.OrderDeterminationError as err:
        raise ConfigError(f"order determination failed: {err}") from err
    return q_star, n_hat


def _ensure_out(config: dict) -> str:
    out = config.get("out_dir", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(config: dict) -> int:
    sys = _build_plant(config)
    batch = _make_batch(sys, config)
    out = _ensure_out(config)
    plants.save_batch(batch, os.path.join(out, "batch.csv"))
    return 0


def cmd_identify(config: dict) -> int:
    sys_plant = _build_plant(config)
    tol = float(config.get("tol", 1e-8))
    if config.get("batch_csv"):
        batch = plants.load_batch(config["batch_csv"])
    else:
        batch = _make_batch(sys_plant, config)
    noise_spec = _noise_spec(config)
    q, n_hat = _resolve_q(config, batch, tol)

    if noise_spec is not None and (np.any(noise_spec.Q) or np.any(noise_spec.R)):
        coeffs = tuple(
            noise.fit_arma_noisy(batch, t, q, noise_spec, tol)
            for t in range(q, batch.horizon + 1)
        )
        model = arma.TvArmaModel(
            q=q, m=batch.m, r=batch.r, horizon=batch.horizon, coefficients=coeffs
        )
    else:
        model = arma.fit_all(batch, q, tol)
    info_model = realization.realize_tv(model)

    out = _ensure_out(config)
    arma.save_tv_arma(model, os.path.join(out, "arma_model.json"))
    realization.save_info_state_model(info_model, os.path.join(out, "info_state_model.json"))

    # Held-out validation on a fresh seed is mandatory: in-sample residuals
    # cannot falsify overfitting of the regression null space.
    held_n = int(config.get("held_out_N", 100))
    held = _make_batch(sys_plant, config, seed_offset=CLI_HELD_OUT_SEED_OFFSET,
                       n_override=held_n)
    per_t = _prediction_errors(info_model, held)
    held_err = float(np.nanmax(per_t[q:]))

    ranks = arma.rank_profile(batch, t=min(q + 2, batch.horizon), q_max=min(q + 2, batch.horizon), tol=tol)
    report = {
        "q": q,
        "n_hat": n_hat,
        "rank_table": {str(k): v for k, v in ranks.items()},
        "per_t_residual": {
            str(c.t): c.residual_norm for c in model.coefficients
        },
        "held_out_rel_error": held_err,
        "held_out_N": held_n,
    }
    _write_json(os.path.join(out, "identify_report.json"), report)

    threshold = float(config.get("held_out_threshold", 1e-6))
    return 0 if held_err <= threshold else 2


def _prediction_errors(
    model: realization.InfoStateModel, batch: plants.RolloutBatch
) -> np.ndarray:
    """Figure-style error curve: per-step 1-norm of the mean prediction error
    across rollouts, normalized by the peak mean response magnitude."""
    q = model.q
    H = batch.horizon
    diffs = np.zeros((H + 1, batch.m))
    for i in range(batch.n_rollouts):
        ro = batch.rollout(i)
        pred = realization.predict_rollout(model, ro)
        diffs += ro.outputs - pred
    diffs /= batch.n_rollouts
    scale = np.abs(batch.outputs).sum(axis=2).mean(axis=0).max()
    err = np.abs(diffs).sum(axis=1) / max(scale, 1e-300)
    err[:q] = np.nan  # initialization window: nothing is predicted there
    return err


CLI_HELD_OUT_SEED_OFFSET = 7919


def cmd_predict(config: dict) -> int:
    model = realization.load_info_state_model(config["model_file"])
    if config.get("batch_csv"):
        batch = plants.load_batch(config["batch_csv"])
    else:
        batch = _make_batch(_build_plant(config), config)
    if model.t_end < batch.horizon:
        raise ConfigError(
            f"model covers t <= {model.t_end} but the batch horizon is {batch.horizon}"
        )
    err = _prediction_errors(model, batch)
    out = _ensure_out(config)
    with open(os.path.join(out, "prediction_error.csv"), "w", newline="") as f:
        f.write("t,err\n")
        for t in range(batch.horizon + 1):
            cell = "" if np.isnan(err[t]) else FLOAT_FMT % err[t]
            f.write(f"{t},{cell}\n")
    return 0


def cmd_control(config: dict) -> int:
    sys_plant = _build_plant(config)
    tol = float(config.get("tol", 1e-8))
    q = int(config.get("q", plants.DEFAULT_Q.get(sys_plant.name, 4)))
    cost_cfg = config.get("cost", {})
    m, r = sys_plant.m, sys_plant.r
    cost = control.QuadraticCost(
        Qz=np.asarray(cost_cfg.get("Q", np.eye(m).tolist()), dtype=float),
        R=np.asarray(cost_cfg.get("R", (0.1 * np.eye(r)).tolist()), dtype=float),
        Qf=np.asarray(cost_cfg.get("Qf", (10.0 * np.eye(m)).tolist()), dtype=float),
    )
    if "x0" in config:
        x0 = np.asarray(config["x0"], dtype=float)
    else:
        rng = np.random.Generator(np.random.Philox(key=[int(config.get("seed", 0)), 0]))
        x0 = float(config.get("init_sigma", 1.0)) * rng.standard_normal(sys_plant.n)

    model = realization.realize_tv(arma.fundamental_arma_model(sys_plant, q, tol))
    report = control.run_equivalence(sys_plant, model, cost, x0)
    out = _ensure_out(config)
    control.save_equivalence_report(
        report,
        os.path.join(out, "equivalence.csv"),
        os.path.join(out, "equivalence_summary.json"),
    )
    thresholds = config.get("thresholds", {})
    gap_limit = float(thresholds.get("rel_cost_gap", 1e-6))
    u_limit = float(thresholds.get("u_diff_rel", 1e-7))
    ok = report.rel_cost_gap <= gap_limit and report.u_diff_rel.max() <= u_limit
    return 0 if ok else 2


def cmd_okid(config: dict) -> int:
    sys_plant = _build_plant(config)
    if not sys_plant.is_lti:
        raise ConfigError("the OKID baseline supports LTI plants only")
    tol = float(config.get("tol", 1e-8))
    q = int(config.get("q", plants.DEFAULT_Q.get(sys_plant.name, 4)))
    # Zero initial conditions: the observer-Markov model assumes the history
    # fully explains the output, which fails for free responses.
    batch = plants.generate_batch(
        sys_plant,
        int(config.get("N", 300)),
        input_sigma=float(config.get("input_sigma", 1.0)),
        init_law="zero",
        seed=int(config.get("seed", 0)),
    )
    om = okid.fit_observer_markov(batch, q, tol)
    count = int(config.get("markov_count", 3 * q))
    markov = okid.recover_open_loop_markov(om, count)
    order = int(config.get("era_order", sys_plant.n))
    rows = max(2, -(-order // sys_plant.m) + 1)
    cols = count - rows
    real = okid.era(markov, order, rows, cols)
    gain = okid.recover_observer_gain(real, om)
    report = okid.mismatch_report(real, gain, om, plants.true_markov(sys_plant, count))
    out = _ensure_out(config)
    okid.save_mismatch_report(
        report,
        os.path.join(out, "okid_mismatch.csv"),
        os.path.join(out, "okid_summary.json"),
    )
    thresholds = config.get("thresholds", {})
    open_limit = float(thresholds.get("err_open_loop", 1e-6))
    return 0 if report.err_open_loop.max() <= open_limit else 2


def cmd_noise_identify(config: dict) -> int:
    sys_plant = _build_plant(config)
    tol = float(config.get("tol", 1e-8))
    noise_spec = _noise_spec(config)
    if noise_spec is None:
        raise ConfigError("noise-identify needs a 'noise' spec with Q and R")
    q = int(config.get("q", plants.DEFAULT_Q.get(sys_plant.name, 1)))
    batch = _make_batch(sys_plant, config)
    # Prediction-error yardstick: exact coefficients on a noise-free batch.
    eval_batch = plants.generate_batch(
        sys_plant,
        int(config.get("eval_N", 200)),
        input_sigma=float(config.get("input_sigma", 1.0)),
        init_law=config.get("init_law", "zero"),
        init_sigma=float(config.get("init_sigma", 1.0)),
        seed=int(config.get("seed", 0)) + CLI_HELD_OUT_SEED_OFFSET,
    )
    out = _ensure_out(config)
    rows = []
    for t in range(q, batch.horizon + 1):
        exact = arma.fundamental_arma(sys_plant, t, q, tol)
        dm = arma.assemble(eval_batch, t, q)
        ref = exact.alpha @ dm.matrix[: batch.m * q] + exact.beta @ dm.matrix[batch.m * q :]
        scale = max(np.linalg.norm(ref), 1e-300)

        corrected = noise.fit_arma_noisy(batch, t, q, noise_spec, tol)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            plain = noise.fit_arma_uncorrected(batch, t, q, tol)
        preds = {}
        for label, c in (("corrected", corrected), ("uncorrected", plain)):
            pred = c.alpha @ dm.matrix[: batch.m * q] + c.beta @ dm.matrix[batch.m * q :]
            preds[label] = float(np.linalg.norm(pred - ref) / scale)
        rows.append((t, batch.n_rollouts, preds["corrected"], preds["uncorrected"]))
    with open(os.path.join(out, "noise_report.csv"), "w", newline="") as f:
        f.write("t,N,rel_pred_error_corrected,rel_pred_error_uncorrected\n")
        for t, n, ec, eu in rows:
            f.write(f"{t},{n},{FLOAT_FMT % ec},{FLOAT_FMT % eu}\n")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "predict": cmd_predict,
    "control": cmd_control,
    "okid": cmd_okid,
    "noise-identify": cmd_noise_identify,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="infosid",
        description="Information-state system identification and control harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--q", default=None, help="ARMA order: integer or 'auto'")
        p.add_argument("--tol", type=float, default=None, help="rank tolerance override")
    args = parser.parse_args(argv)

    overrides = {"out_dir": args.out, "seed": args.seed, "tol": args.tol}
    if args.q is not None:
        overrides["q"] = args.q if args.q == "auto" else int(args.q)
    try:
        config = _load_config(args.config, args.command, overrides)
        return _COMMANDS[args.command](config)
    except (ConfigError, OSError, KeyError) as err:
        print(f"error: {err}", file=_sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
