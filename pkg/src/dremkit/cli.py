"""Command line front end: JSON scenario configs in, CSV time series and a
run manifest out.

Exit codes: 0 = ran to completion, 1 = configuration error, 2 = runtime
numerical failure. Output locations resolve as --out flag, then the config's
"out_dir", then the DREMKIT_OUT_DIR environment variable.

CSV values are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .excitation import counterexample_suite, pe_check_ct, pe_check_dt
from .ftc import ClipContractError
from .operators import LtvChannelSpec, OperatorBank
from .scenarios import (
    Constant,
    PlantSpec,
    RegressorSpec,
    ScenarioResult,
    Sinusoid,
    run_ftc_scenario,
    run_identification_scenario,
)
from .signals import TimeGrid, Trajectory

ENV_OUT_DIR = "DREMKIT_OUT_DIR"
FIGURE_IDS = ("fig1", "fig2", "ftc-pe-early", "ftc-pe-late", "ftc-nonpe")
FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; maps to exit code 1."""


def _fail(field: str, message: str) -> ConfigError:
    return ConfigError(f"config field {field!r}: {message}")


def _get(cfg: dict, field: str, required: bool = True, default=None):
    if field in cfg:
        return cfg[field]
    if required:
        raise _fail(field, "missing")
    return default


def named_signal(spec) -> Sinusoid | Constant:
    """Named time-varying entry: a bare number means a constant."""
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    kind = _get(spec, "kind")
    if kind == "constant":
        return Constant(float(_get(spec, "level")))
    if kind == "sinusoid":
        return Sinusoid(
            amplitude=float(_get(spec, "amplitude")),
            frequency=float(_get(spec, "frequency")),
            phase=float(spec.get("phase", 0.0)),
        )
    raise _fail("kind", f"unknown signal kind {kind!r}")


def _channel_entry(value, field: str):
    """Channel coefficient: constant number/matrix or a named signal."""
    if isinstance(value, dict):
        return named_signal(value)
    if isinstance(value, (int, float, list)):
        return value
    raise _fail(field, f"cannot interpret {value!r}")


def parse_bank(cfg: dict) -> OperatorBank:
    channels = []
    for i, ch in enumerate(_get(cfg, "channels")):
        try:
            channels.append(
                LtvChannelSpec(
                    n=int(ch.get("n", 0)),
                    A=_channel_entry(ch["A"], "A") if "A" in ch else None,
                    b=_channel_entry(ch["b"], "b") if "b" in ch else None,
                    c=_channel_entry(ch["c"], "c") if "c" in ch else None,
                    d=_channel_entry(ch.get("d", 0.0), "d"),
                    delay_gain=_channel_entry(ch.get("mu", 0.0), "mu"),
                    delay=float(ch.get("delay", 0.0)),
                    kind=ch.get("kind", "ct"),
                )
            )
        except (ValueError, KeyError) as exc:
            raise _fail(f"bank.channels[{i}]", str(exc)) from exc
    return OperatorBank(tuple(channels))


def parse_grid(cfg: dict) -> tuple[float, float]:
    grid = _get(cfg, "grid")
    step = float(_get(grid, "step"))
    horizon = float(_get(grid, "horizon"))
    if step <= 0:
        raise _fail("grid.step", "must be positive")
    if horizon < 0:
        raise _fail("grid.horizon", "must be nonnegative")
    return horizon, step


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return cfg


def resolve_out_dir(flag_value: str | None, cfg: dict | None) -> Path:
    if flag_value:
        return Path(flag_value)
    if cfg and cfg.get("out_dir"):
        return Path(cfg["out_dir"])
    env = os.environ.get(ENV_OUT_DIR)
    if env:
        return Path(env)
    raise ConfigError(
        f"no output directory: pass --out, set 'out_dir' in the config, or set {ENV_OUT_DIR}"
    )


def write_csv(path: Path, columns: list[str], arrays: list[np.ndarray]) -> int:
    rows = len(arrays[0])
    for arr in arrays:
        if len(arr) != rows:
            raise ValueError("column length mismatch")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for k in range(rows):
            writer.writerow([FLOAT_FMT % arr[k] for arr in arrays])
    return rows


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    """Read back an emitted CSV; values reproduce the written doubles exactly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    return header, np.array(data).reshape(-1, len(header))


class OutputWriter:
    """Collects emitted files so the manifest can list every one of them."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.entries: list[dict] = []
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from exc
        if not os.access(out_dir, os.W_OK):
            raise ConfigError(f"output directory {out_dir} is not writable")

    def csv(self, name: str, columns: list[str], arrays: list[np.ndarray]) -> None:
        rows = write_csv(self.out_dir / name, columns, arrays)
        self.entries.append({"name": name, "kind": "csv", "columns": columns, "rows": rows})

    def text(self, name: str, content: str) -> None:
        (self.out_dir / name).write_text(content)
        self.entries.append({"name": name, "kind": "text"})

    def manifest(self, config_payload) -> None:
        digest = hashlib.sha256(
            json.dumps(config_payload, sort_keys=True).encode()
        ).hexdigest()
        files = self.entries + [{"name": "manifest.json", "kind": "manifest"}]
        payload = {
            "tool_version": __version__,
            "config_sha256": digest,
            "files": files,
        }
        (self.out_dir / "manifest.json").write_text(json.dumps(payload, indent=2))


def _estimator_csvs(writer: OutputWriter, result: ScenarioResult) -> None:
    times = result.grid.times()
    for name, run in result.runs.items():
        aux_name = "phi_norm_sq" if name == "gradient" else "delta"
        hat = np.atleast_2d(run.theta_hat.values.T).T
        tilde = np.atleast_2d(run.theta_tilde.values.T).T
        m = hat.shape[1]
        columns = (
            ["t"]
            + [f"theta_hat_{i+1}" for i in range(m)]
            + [f"theta_tilde_{i+1}" for i in range(m)]
            + [aux_name]
        )
        arrays = (
            [times]
            + [hat[:, i] for i in range(m)]
            + [tilde[:, i] for i in range(m)]
            + [np.asarray(run.diagnostics.values)]
        )
        writer.csv(f"{name}.csv", columns, arrays)


def _ftc_csvs(writer: OutputWriter, result: ScenarioResult, t_range=None) -> None:
    times = result.grid.times()
    mask = np.ones(len(times), dtype=bool)
    if t_range is not None:
        mask = (times >= t_range[0]) & (times <= t_range[1])
    for name, run in result.runs.items():
        hat = run.theta_hat.values[:, 0]
        tilde = run.theta_tilde.values[:, 0]
        columns = ["t", "theta_hat_1", "theta_tilde_1", "delta"]
        arrays = [times[mask], hat[mask], tilde[mask], result.runs["gradient"].diagnostics.values[mask]]
        ftc = result.ftc_runs.get(name)
        if ftc is not None:
            columns += ["w", "w_clipped"]
            arrays += [ftc.w.values[mask], ftc.w_clipped.values[mask]]
            if ftc.w_delayed is not None:
                columns.append("w_delayed")
                arrays.append(ftc.w_delayed.values[mask])
        writer.csv(f"{name}.csv", columns, arrays)


def _summary_text(result: ScenarioResult) -> str:
    lines = ["run, convergence_time_s, final_abs_errors"]
    for name in result.runs:
        tc = result.convergence_times.get(name)
        errs = result.final_errors.get(name)
        err_txt = " ".join(FLOAT_FMT % e for e in np.atleast_1d(errs))
        lines.append(f"{name}, {'none' if tc is None else FLOAT_FMT % tc}, {err_txt}")
    return "\n".join(lines) + "\n"


def cmd_simulate(config_path: str, out_dir: str | None) -> int:
    cfg = load_config(config_path)
    out = resolve_out_dir(out_dir, cfg)
    mode = _get(cfg, "mode")
    writer = OutputWriter(out)
    if mode in ("identify", "custom"):
        required = mode == "custom"
        horizon, step = parse_grid(cfg)
        plant_cfg = _get(cfg, "plant", required=required, default=None)
        plant = None
        if plant_cfg is not None:
            plant = PlantSpec(
                a=float(_get(plant_cfg, "a")),
                b=float(_get(plant_cfg, "b")),
                y0=float(plant_cfg.get("y0", 0.0)),
                input=named_signal(_get(plant_cfg, "input")),
            )
        reg_cfg = _get(cfg, "regressor", required=required, default=None)
        regressor = RegressorSpec(pole=float(_get(reg_cfg, "pole"))) if reg_cfg else None
        bank_cfg = _get(cfg, "bank", required=required, default=None)
        bank = parse_bank(bank_cfg) if bank_cfg else None
        est = _get(cfg, "estimator", required=required, default={}) or {}
        result = run_identification_scenario(
            input_kind=cfg.get("input_kind", "rich") if plant is None else "rich",
            horizon=horizon,
            step=step,
            gamma=float(est.get("gamma", 1.0)),
            theta_hat0=np.asarray(est.get("theta_hat0", [0.0, 0.0]), float),
            plant=plant,
            regressor=regressor,
            bank=bank,
        )
        _estimator_csvs(writer, result)
        writer.text("summary.txt", _summary_text(result))
    elif mode == "ftc":
        horizon, step = parse_grid(cfg)
        ftc_cfg = _get(cfg, "ftc", required=False, default={}) or {}
        result = run_ftc_scenario(
            delta_kind=_get(cfg, "delta_kind"),
            horizon=horizon,
            step=step,
            gamma=float(ftc_cfg.get("gamma", 2.0)),
            clip_threshold=float(ftc_cfg.get("clip_threshold", 0.98)),
            delay_window=float(ftc_cfg.get("delay_window", 0.2)),
            theta_hat0=float(ftc_cfg.get("theta_hat0", 0.0)),
            use_delayed_snapshot=bool(ftc_cfg.get("use_delayed_snapshot", True)),
        )
        _ftc_csvs(writer, result)
        writer.text("summary.txt", _summary_text(result))
    elif mode == "pe-check":
        report_text = _pe_check_text(cfg)
        writer.text("pe_report.txt", report_text)
        print(report_text, end="")
    else:
        raise _fail("mode", f"unknown mode {mode!r}")
    writer.manifest(cfg)
    return 0


def _pe_signal(cfg: dict) -> Trajectory:
    sig = _get(cfg, "signal")
    kind = _get(sig, "kind")
    domain = sig.get("domain", "ct")
    if kind == "counterexample":
        horizon = int(sig.get("horizon", 100_000))
        grid = TimeGrid(0.0, 1.0, horizon)
        k = np.arange(horizon)
        return Trajectory(grid, (k + 1.0) ** -0.25, "dt")
    if kind == "zero":
        from .signals import DEFAULT_DT_STEP

        horizon = float(sig.get("horizon", 10.0))
        step = float(sig.get("step", 1e-3 if domain == "ct" else DEFAULT_DT_STEP))
        grid = TimeGrid.from_horizon(horizon, step)
        dim = int(sig.get("dim", 1))
        vals = np.zeros((grid.count, dim)) if dim > 1 else np.zeros(grid.count)
        return Trajectory(grid, vals, domain)
    if kind == "sinusoid-pair":
        # (sin t, cos t) sampled so the window is a grid multiple
        step = float(sig.get("step", 2.0 * np.pi / 6000))
        horizon = float(sig.get("horizon", 8.0 * np.pi))
        grid = TimeGrid.from_horizon(horizon, step)
        t = grid.times()
        return Trajectory(grid, np.stack([np.sin(t), np.cos(t)], axis=1), "ct")
    raise _fail("signal.kind", f"unknown signal kind {kind!r}")


def _pe_check_text(cfg: dict) -> str:
    sig_kind = _get(_get(cfg, "signal"), "kind")
    threshold = float(cfg.get("threshold", 1e-3))
    if sig_kind == "counterexample":
        horizon = int(cfg["signal"].get("horizon", 100_000))
        max_window = int(cfg.get("max_window", 100))
        report = counterexample_suite(horizon, max_window, threshold)
        lines = [
            f"counterexample suite, horizon {report.horizon}, threshold {report.threshold}",
            f"all windows below threshold: {report.all_below_threshold}",
            f"energy final {report.energy_final:.6g} vs bound {report.energy_bound:.6g}"
            f" (diverges: {report.energy_diverges})",
            f"forward direction alpha {report.forward_alpha:.6g},"
            f" energy {report.forward_energy_final:.6g} (linear: {report.forward_energy_linear})",
            "window, alpha_hat",
        ]
        for K in sorted(report.alpha_by_window):
            lines.append(f"{K}, {report.alpha_by_window[K]:.9g}")
        return "\n".join(lines) + "\n"
    phi = _pe_signal(cfg)
    window = _get(cfg, "window")
    if phi.kind == "ct":
        report = pe_check_ct(phi, float(window), threshold)
    else:
        report = pe_check_dt(phi, int(window), threshold)
    return (
        f"signal {sig_kind}, domain {phi.kind}, window {report.window},"
        f" threshold {report.threshold}\n"
        f"alpha_hat {report.alpha_hat:.9g}\n"
        f"verdict: {'PE' if report.is_pe else 'not PE'} over the tested horizon\n"
    )


def cmd_check_pe(config_path: str, out_dir: str | None = None) -> int:
    cfg = load_config(config_path)
    text = _pe_check_text(cfg)
    try:
        out = resolve_out_dir(out_dir, cfg)
    except ConfigError:
        out = None
    if out is not None:
        writer = OutputWriter(out)
        writer.text("pe_report.txt", text)
        writer.manifest(cfg)
    print(text, end="")
    return 0


def _reproduce_config(figure_id: str) -> dict:
    if figure_id == "fig1":
        return {
            "mode": "identify",
            "input_kind": "rich",
            "grid": {"t0": 0.0, "step": 1e-3, "horizon": 20.0},
        }
    if figure_id == "fig2":
        return {
            "mode": "identify",
            "input_kind": "constant",
            "grid": {"t0": 0.0, "step": 1e-3, "horizon": 20.0},
        }
    kind = {"ftc-pe-early": "pe", "ftc-pe-late": "pe", "ftc-nonpe": "nonpe"}[figure_id]
    return {
        "mode": "ftc",
        "delta_kind": kind,
        "grid": {"t0": 0.0, "step": 1e-3, "horizon": 40.0},
    }


def cmd_reproduce(figure_id: str, out_dir: str | None) -> int:
    if figure_id not in FIGURE_IDS:
        raise ConfigError(
            f"unknown figure id {figure_id!r}; valid ids: {', '.join(FIGURE_IDS)}"
        )
    cfg = _reproduce_config(figure_id)
    out = resolve_out_dir(out_dir, cfg)
    writer = OutputWriter(out)
    if cfg["mode"] == "identify":
        result = run_identification_scenario(
            input_kind=cfg["input_kind"], horizon=20.0, step=1e-3
        )
        _estimator_csvs(writer, result)
    else:
        result = run_ftc_scenario(delta_kind=cfg["delta_kind"], horizon=40.0, step=1e-3)
        t_range = {"ftc-pe-early": (0.0, 3.0), "ftc-pe-late": (9.0, 40.0)}.get(figure_id)
        _ftc_csvs(writer, result, t_range=t_range)
    writer.text("summary.txt", _summary_text(result))
    writer.manifest(cfg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dremkit",
        description="Parameter-estimation scenario runner: simulate configured "
        "scenarios, reproduce the built-in studies, or check signal excitation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a scenario described by a JSON config")
    p_sim.add_argument("--config", required=True, help="path to the JSON config")
    p_sim.add_argument("--out", default=None, help="output directory for CSV files")

    p_rep = sub.add_parser("reproduce", help="run a built-in study preset")
    p_rep.add_argument("figure_id", help=f"one of: {', '.join(FIGURE_IDS)}")
    p_rep.add_argument("--out", default=None, help="output directory for CSV files")

    p_pe = sub.add_parser("check-pe", help="excitation certificate for a signal")
    p_pe.add_argument("--config", required=True, help="path to the JSON config")
    p_pe.add_argument("--out", default=None, help="optional report directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out)
        if args.command == "reproduce":
            return cmd_reproduce(args.figure_id, args.out)
        if args.command == "check-pe":
            return cmd_check_pe(args.config, args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ClipContractError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
