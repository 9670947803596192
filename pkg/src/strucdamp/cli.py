"""Command-line entry points.

Each subcommand reads a validated config, delegates to one module's top-level
operation, writes CSV tables plus companion figures into the output directory
and finishes with a manifest.  Exit codes: 0 success, 2 invalid
configuration, 3 numerical failure (partial artifacts are kept and the
manifest records the failure).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from . import atlas as atlas_mod
from . import reports, testfn
from .config import ConfigError, RunConfig, parse_config, params_from_config, serialize_config
from .kernels import QuadratureError, kernel_values, radial_norm
from .params import SystemParams
from .rates import RateSource, fit_rate, predicted_exponents
from .solver import DataKind, RunStatus, make_data, run
from .spectral import Grid

ATLAS_HEADER = ["p", "q", "verdict", "margin_17", "margin_18", "margin_114"]
# margin_17: coupling-balance condition; margin_18: exponent-split condition;
# margin_114: blow-up threshold.  Fixed schema tokens.
_ATLAS_MARGIN_KEYS = ("coupling_balance", "exponent_split", "blowup_threshold")


def _ode_reference(t: float, xi_abs: float, delta: float) -> tuple:
    """Propagator values by direct integration of the frequency ODE."""
    s = xi_abs ** (2.0 * delta) if xi_abs > 0 else 0.0
    b2 = xi_abs * xi_abs

    def rhs(_t, y):
        return [y[1], -s * y[1] - b2 * y[0]]

    vals = []
    for y0 in ((1.0, 0.0), (0.0, 1.0)):
        if t == 0.0:
            vals.extend(y0)
            continue
        sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853",
                        rtol=1e-10, atol=1e-13)
        vals.extend(sol.y[:, -1])
    k0, dk0, k1, dk1 = vals
    return k0, k1, dk0, dk1


def _cmd_kernels(cfg: RunConfig, out: Path, manifest: reports.ManifestWriter) -> int:
    rows = []
    plot_rows = []
    for delta in cfg.data["delta_values"]:
        for t in cfg.data["t_values"]:
            for xi in cfg.data["xi_values"]:
                kv = kernel_values(t, xi, delta)
                ref = _ode_reference(t, xi, delta)
                num = (kv.k0, kv.k1, kv.dk0, kv.dk1)
                delta_osc = max(abs(a - b) / max(abs(b), 1e-10)
                                for a, b in zip(num, ref))
                rows.append((manifest.run_id, t, xi, delta, kv.branch.value,
                             kv.k0, kv.k1, kv.dk0, kv.dk1, delta_osc))
                plot_rows.append({"t": t, "delta": delta, "xi_abs": xi,
                                  "k0": kv.k0, "k1": kv.k1})
    path = reports.write_csv(out / "kernels.csv",
                             ["run_id", "t", "xi_abs", "delta", "branch",
                              "k0", "k1", "dk0", "dk1", "oracle_rel_delta"],
                             rows)
    manifest.add_file(path)
    manifest.add_file(reports.plot_kernel_table(plot_rows, out / "kernels.png"))

    sweep = cfg.data.get("sweep")
    if sweep:
        xi_values = np.linspace(sweep["center"] - sweep["halfwidth"],
                                sweep["center"] + sweep["halfwidth"],
                                sweep["count"])
        srows = []
        for xi in xi_values:
            kv = kernel_values(sweep["t"], float(xi), sweep["delta"])
            srows.append((manifest.run_id, sweep["t"], float(xi), sweep["delta"],
                          kv.branch.value, kv.k0, kv.k1, kv.dk0, kv.dk1))
        path = reports.write_csv(out / "kernel_sweep.csv",
                                 ["run_id", "t", "xi_abs", "delta", "branch",
                                  "k0", "k1", "dk0", "dk1"],
                                 srows)
        manifest.add_file(path)
    return 0


def _make_gaussian_symbol(channel: str):
    def symbol(rho):
        g = np.exp(-rho * rho / 2.0)
        zero = np.zeros_like(g)
        return (g, zero) if channel == "w0" else (zero, g)
    return symbol


def _cmd_rates(cfg: RunConfig, out: Path, manifest: reports.ManifestWriter) -> int:
    d = cfg.data
    times = np.geomspace(d["t_lo"], d["t_hi"], d["num_times"])
    rows = []
    plot_rows = []
    for n in d["n_values"]:
        for delta in d["delta_values"]:
            params = SystemParams(n=n, m=d["m"], delta1=delta, delta2=delta,
                                  p=2.0, q=2.0)
            sharp = predicted_exponents(params, delta, d["j"], d["k"], RateSource.SHARP)
            base = predicted_exponents(params, delta, d["j"], d["k"], RateSource.BASELINE)
            for channel in d["channels"]:
                vals = [radial_norm(t, delta, _make_gaussian_symbol(channel), n,
                                    (d["j"], d["k"])) for t in times]
                slope, stderr = fit_rate(times, vals, (d["t_lo"], d["t_hi"]))
                pred_sharp = float(sharp.exponent_w0 if channel == "w0"
                                   else sharp.exponent_w1)
                pred_base = float(base.exponent_w0 if channel == "w0"
                                  else base.exponent_w1)
                predicted = pred_sharp if sharp.valid else pred_base
                rows.append((manifest.run_id, n, d["m"], delta, channel,
                             d["j"], d["k"], slope, stderr, pred_base,
                             pred_sharp, sharp.valid, predicted))
                plot_rows.append({"n": n, "delta": delta, "channel": channel,
                                  "predicted": predicted, "fitted_slope": slope})
    path = reports.write_csv(out / "rates.csv",
                             ["run_id", "n", "m", "delta", "channel", "j", "k",
                              "fitted_slope", "stderr", "pred_baseline",
                              "pred_sharp", "sharp_valid", "predicted"],
                             rows)
    manifest.add_file(path)
    manifest.add_file(reports.plot_rate_table(plot_rows, out / "rates.png"))
    return 0


def _cmd_simulate(cfg: RunConfig, out: Path, manifest: reports.ManifestWriter) -> int:
    d = cfg.data
    params = params_from_config(d["params"])
    grid = Grid(params.n, d["grid"]["points_per_axis"], d["grid"]["half_width"])
    data = make_data(DataKind(d["data"]["kind"]), grid, params,
                     amplitude=d["data"]["amplitude"], width=d["data"]["width"],
                     eps_tilde=d["data"]["eps_tilde"])
    blowup = d.get("blowup") or {}
    record = run(params, grid, data, d["time"]["T"], d["time"]["h"],
                 d["time"]["record_every"],
                 threshold=blowup.get("threshold", 1e8),
                 window=blowup.get("window", 5),
                 nonlinearity_enabled=d["nonlinearity_enabled"])
    header = ["run_id", "time", *NORM_COLUMNS]
    rows = [(manifest.run_id, t, *(record.columns[c][i] for c in NORM_COLUMNS))
            for i, t in enumerate(record.times)]
    path = reports.write_csv(out / "trajectory.csv", header, rows)
    manifest.add_file(path)
    manifest.add_file(reports.plot_trajectory(record, out / "trajectory.png"))
    for w in record.warnings:
        manifest.warn(w)
    manifest.notes.update({
        "status": record.status.value,
        "blowup_time": record.blowup_time,
        "abort_reason": record.abort_reason,
        "max_imag_residue": record.max_imag_residue,
        "reported_data_norm": data.reported_norm,
    })
    if record.status is RunStatus.ABORTED:
        return 3
    return 0


def _cmd_atlas(cfg: RunConfig, out: Path, manifest: reports.ManifestWriter) -> int:
    d = cfg.data
    params = params_from_config(d["params"])
    result = atlas_mod.sweep(params, tuple(d["p_range"]), tuple(d["q_range"]),
                             d["resolution"])
    rows = [(p, q, verdict.value, *(margins[k] for k in _ATLAS_MARGIN_KEYS))
            for (p, q, verdict, margins) in result.rows]
    path = reports.write_csv(out / "region_map.csv", ATLAS_HEADER, rows)
    manifest.add_file(path)
    manifest.add_file(reports.plot_region_map(result, out / "region_map.png"))
    return 0


def _cmd_testfn(cfg: RunConfig, out: Path, manifest: reports.ManifestWriter) -> int:
    d = cfg.data
    wrote_any = False
    if d.get("decay_bounds"):
        summaries = []
        long_rows = []
        reps = []
        for spec_row in d["decay_bounds"]:
            rep = testfn.check_bracket_decay_bound(spec_row["r"], spec_row["s"],
                                                   spec_row["n"],
                                                   spec_row["radius_max"])
            reps.append(rep)
            summaries.append((manifest.run_id, rep.r, rep.s, rep.n, rep.branch,
                              rep.max_ratio, rep.last_decade_slope, rep.passed))
            for radius, ratio in zip(rep.radii, rep.ratios):
                long_rows.append((manifest.run_id, rep.r, rep.s, rep.n,
                                  rep.branch, float(radius), float(ratio)))
        path = reports.write_csv(out / "decay_bound_summary.csv",
                                 ["run_id", "r", "s", "n", "branch", "max_ratio",
                                  "last_decade_slope", "passed"], summaries)
        manifest.add_file(path)
        path = reports.write_csv(out / "decay_bound_ratios.csv",
                                 ["run_id", "r", "s", "n", "branch", "radius",
                                  "ratio"], long_rows)
        manifest.add_file(path)
        manifest.add_file(reports.plot_decay_ratios(reps, out / "decay_bounds.png"))
        wrote_any = True
    if d.get("scaling_check"):
        sc = d["scaling_check"]
        weight = testfn.BracketWeight(sc["r"], 1)
        rows = []
        for R in sc["scales"]:
            dev = testfn.check_scaling_identity(weight, R, sc["kappa"], sc["s"],
                                                1, sc["points"])
            rows.append((manifest.run_id, sc["r"], sc["s"], sc["kappa"], R, dev))
        path = reports.write_csv(out / "scaling_check.csv",
                                 ["run_id", "r", "s", "kappa", "R",
                                  "max_rel_deviation"], rows)
        manifest.add_file(path)
        wrote_any = True
    if d.get("scalings_params"):
        params = params_from_config(d["scalings_params"])
        rep = testfn.blowup_scalings(params)
        path = reports.write_csv(
            out / "scalings.csv",
            ["run_id", "n", "m", "delta1", "delta2", "p", "q", "alpha", "beta",
             "gamma1", "gamma2", "chain_ok"],
            [(manifest.run_id, params.n, params.m, params.delta1, params.delta2,
              params.p, params.q, float(rep.alpha), float(rep.beta),
              float(rep.gamma1), float(rep.gamma2), rep.chain_ok)])
        manifest.add_file(path)
        wrote_any = True
    if d.get("critical_params"):
        params = params_from_config(d["critical_params"])
        cc = testfn.critical_constants(params)
        path = reports.write_csv(
            out / "critical_constants.csv",
            ["run_id", "n", "delta0", "p", "q", "bracket_mass", "d_p", "d_q",
             "mass_threshold"],
            [(manifest.run_id, params.n, min(params.delta1, params.delta2),
              params.p, params.q, cc.bracket_mass, cc.d_p, cc.d_q,
              cc.mass_threshold)])
        manifest.add_file(path)
        wrote_any = True
    if not wrote_any:
        raise ConfigError("testfn: config selects no checks (all blocks omitted)")
    return 0


_COMMANDS = {
    "kernels": _cmd_kernels,
    "simulate": _cmd_simulate,
    "rates": _cmd_rates,
    "atlas": _cmd_atlas,
    "testfn": _cmd_testfn,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strucdamp",
        description="Numerical laboratory for weakly coupled structurally "
                    "damped wave systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("kernels", "propagator-symbol tables with ODE cross-checks"),
        ("simulate", "integrate the coupled nonlinear system"),
        ("rates", "measured decay slopes against closed-form predictions"),
        ("atlas", "classify a (p, q) region"),
        ("testfn", "test-function toolkit reports"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a YAML config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (advisory, recorded in the manifest)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cfg = parse_config(Path(args.config).read_text(encoding="utf-8"),
                           args.command)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = RunConfig(cfg.command, {**cfg.data, "seed": args.seed})
    serialized = serialize_config(cfg)
    manifest = reports.ManifestWriter(
        out_dir=out, command=args.command,
        run_id=reports.run_id_for(serialized, cfg.seed),
        config_echo=cfg.data, seed=cfg.seed, threads=args.threads,
    )
    try:
        code = _COMMANDS[args.command](cfg, out, manifest)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        manifest.warn(str(exc))
        manifest.write(status="validation_error")
        return 2
    except (QuadratureError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        manifest.warn(str(exc))
        manifest.write(status="numerical_failure")
        return 3
    manifest.write(status="ok" if code == 0 else "numerical_failure")
    return code


if __name__ == "__main__":
    sys.exit(main())
