"""Command-line front end: analyze | simulate | oracle | compare.

Exit codes: 0 success, 1 input error, 2 model error (diagnostics are still
written), 3 comparison thresholds violated.  The scenario file is the
single source of truth for parameters; no environment variables are read.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import dwell, fluid, holding, oracle, sim
from .equilibrium import equilibrium
from .errors import ModelError, ScenarioError
from .params import derive, read_scenario, scenario_params
from .report import ManifestTimer, compare_dirs, total_variation, write_csv

DEFAULT_LAMBDA_ON = 0.5
DEFAULT_QUERY_LEVELS = (0.1, 0.5, 1.0, 2.0, 5.0)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MODEL = 2
EXIT_COMPARE = 3


def default_service_rate(channels: int) -> float:
    """Half the channel count, nudged off integers (integer drain rates
    make the fluid drift matrix singular)."""
    c = channels / 2.0
    return c if c != int(c) else c + 0.25


def _buffer_grid(solution, levels=DEFAULT_QUERY_LEVELS):
    """Evaluation grid: dense near the origin plus the standard levels."""
    span = max(levels)
    if isinstance(solution, fluid.FluidSolution) and solution.negative_index.size:
        slowest = solution.eigenvalues[solution.negative_index].max()
        span = max(span, 12.0 / abs(slowest))
    xs = np.unique(np.concatenate([np.linspace(0.0, span, 101), np.asarray(levels)]))
    return xs


def _write_buffer_csv(path, solution):
    xs = _buffer_grid(solution)
    comps = solution.cdf_components(xs)
    g = 1.0 - comps.sum(axis=0)
    header = ["x", "G"] + [f"F_{i}" for i in range(comps.shape[0])]
    rows = [[x, gv] + list(col) for x, gv, col in zip(xs, g, comps.T)]
    write_csv(path, header, rows)


def _analysis_chain(values, rate_mode):
    params = scenario_params(values)
    dn = dwell.new_call_dwell(params.cell_radius, params.v_max)
    dh = dwell.handoff_dwell(params.cell_radius, params.v_max)
    solution = holding.solve_fixed_point(params, dn, dh, rate_mode=rate_mode)
    rates = derive(params)
    lam_eff = rates.lambda_cell if rate_mode == "per-cell" else params.lambda_R
    eq = equilibrium(lam_eff + solution.lambda_Rh, solution.mu_H, params.channels)
    return params, solution, eq


def cmd_analyze(args) -> int:
    values = read_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = ManifestTimer("analyze", out, scenario=args.scenario)
    rate_mode = args.mode or "per-cell"

    params, solution, eq = _analysis_chain(values, rate_mode)

    write_csv(
        out / "holding.csv",
        ["lambda_Rh", "mu_H", "gamma_c", "P_B", "iterations", "converged"],
        [[solution.lambda_Rh, solution.mu_H, solution.gamma_c, solution.p_block,
          solution.iterations, solution.converged]],
    )
    manifest.add_output(out / "holding.csv")
    write_csv(
        out / "pj.csv",
        ["j", "probability"],
        [[j, p] for j, p in enumerate(eq.probs)],
    )
    manifest.add_output(out / "pj.csv")
    manifest.note("rate_mode", rate_mode)
    manifest.note("fixed_point_iterations", solution.iterations)
    manifest.note("fixed_point_converged", solution.converged)

    if not solution.converged:
        manifest.write()
        print("analyze: fixed point did not converge; diagnostics written", file=sys.stderr)
        return EXIT_MODEL

    lam_on = args.lambda_on
    service = args.service_rate if args.service_rate is not None else default_service_rate(params.channels)
    for literal, name in ((False, "buffer_mobile_mixture.csv"), (True, "buffer_mobile_literal.csv")):
        model = fluid.FluidModel.mobile(eq, lam_on, service, literal=literal)
        sol = fluid.solve_buffer(model)
        _write_buffer_csv(out / name, sol)
        manifest.add_output(out / name)
    # buffer.csv mirrors the default (mixture) mode
    mixture = fluid.solve_buffer(fluid.FluidModel.mobile(eq, lam_on, service))
    _write_buffer_csv(out / "buffer.csv", mixture)
    manifest.add_output(out / "buffer.csv")
    manifest.note("lambda_on", lam_on)
    manifest.note("service_rate", service)

    manifest.write()
    return EXIT_OK


def cmd_simulate(args) -> int:
    values = read_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else values["seed"]
    manifest = ManifestTimer("simulate", out, scenario=args.scenario, seed=seed)

    config = sim.sim_config(values, seed=seed)
    stats = sim.run(config)

    empty = stats.occupancy_time.sum() <= 0
    if empty:
        manifest.note("warning", "no post-warmup observations; statistics are empty")
        fractions = np.zeros(config.channels_per_base + 1)
    else:
        fractions = sim.empirical_equilibrium(stats)
    write_csv(out / "sim_pj.csv", ["j", "time_fraction"],
              [[j, p] for j, p in enumerate(fractions)])
    manifest.add_output(out / "sim_pj.csv")

    if stats.holding_samples:
        mean, (edges, counts) = sim.empirical_holding(stats)
        hold_rows = [[lo, hi, n] for lo, hi, n in zip(edges[:-1], edges[1:], counts)]
    else:
        mean, hold_rows = float("nan"), []
    write_csv(out / "sim_holding.csv", ["bin_low", "bin_high", "count"], hold_rows)
    manifest.add_output(out / "sim_holding.csv")

    counters = [
        ("arrivals", stats.arrivals),
        ("blocked_new", stats.blocked_new),
        ("handoff_attempts", stats.handoff_attempts),
        ("handoff_failures", stats.handoff_failures),
        ("completions", stats.completions),
        ("coverage_exits", stats.coverage_exits),
        ("holding_time_mean", mean),
        ("holding_time_count", len(stats.holding_samples)),
        ("observed_time", stats.observed_time),
    ]
    write_csv(out / "sim_counters.csv", ["name", "value"], counters)
    manifest.add_output(out / "sim_counters.csv")

    # the area-density rate implied by the arrival stream: literal reading
    # (divided by cell area and base count twice over) and the dimensional
    # per-covered-area reading, both for reporting only
    cell_area = math.pi * (config.base_spacing / 2.0) ** 2
    n_bases = config.grid_side**2
    manifest.note("lambda_R_literal",
                  1.0 / (config.exp_pulse_mean * (cell_area * n_bases) * n_bases))
    manifest.note("lambda_R_per_area",
                  1.0 / (config.exp_pulse_mean * cell_area * n_bases))
    manifest.write()
    return EXIT_OK


def cmd_oracle(args) -> int:
    values = read_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else values["seed"]
    manifest = ManifestTimer(f"oracle:{args.mode}", out, scenario=args.scenario, seed=seed)

    rate_mode = "per-cell"
    params, solution, eq = _analysis_chain(values, rate_mode)
    lam_on = args.lambda_on
    service = args.service_rate if args.service_rate is not None else default_service_rate(params.channels)

    if args.mode == "birth-death":
        est = oracle.simulate_birth_death(
            eq.up_rate, eq.down_rate_unit, params.channels,
            events=args.samples, seed=seed,
        )
        tv = total_variation(est.estimates, eq.probs)
        manifest.note("tv_to_analytic", tv)
        print(f"oracle birth-death: TV(analytic, simulated) = {tv:.6f}")
    elif args.mode == "fixed":
        est = oracle.simulate_fluid_fixed(
            params.channels, lam_on, service,
            horizon=args.samples * args.dt, dt=args.dt, seed=seed,
            query_levels=DEFAULT_QUERY_LEVELS,
        )
    elif args.mode == "mobile":
        est = oracle.simulate_fluid_mobile(
            (eq.up_rate, eq.down_rate_unit, params.channels), lam_on, service,
            horizon=args.samples * args.dt, dt=args.dt, seed=seed,
            query_levels=DEFAULT_QUERY_LEVELS,
        )
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown oracle mode {args.mode!r}")

    rows = [[x, e, s, est.samples] for x, e, s in zip(est.levels, est.estimates, est.stderrs)]
    header = ["x", "estimate", "stderr", "samples"]
    write_csv(out / "oracle.csv", header, rows)
    manifest.add_output(out / "oracle.csv")
    # a mode-tagged copy, so downstream comparisons know what was measured
    tagged = out / f"oracle_{args.mode.replace('-', '_')}.csv"
    write_csv(tagged, header, rows)
    manifest.add_output(tagged)
    manifest.note("oracle_seed", est.seed)
    manifest.write()
    return EXIT_OK


def cmd_compare(args) -> int:
    analysis_dir = Path(args.analysis_dir)
    sim_dir = Path(args.sim_dir)
    for d in (analysis_dir, sim_dir):
        if not d.is_dir():
            raise ScenarioError(f"not a directory: {d}")
    rows, all_pass = compare_dirs(analysis_dir, sim_dir)
    out = Path(args.out) if args.out else sim_dir
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "compare.csv", ["metric", "value", "threshold", "status"], rows)
    for metric, value, threshold, status in rows:
        print(f"{metric}: {value:.6g} (threshold {threshold:.6g}) {status}")
    return EXIT_OK if all_pass else EXIT_COMPARE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellfluid",
        description="Buffer-fill analysis and simulation for mobile base stations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario key=value file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")

    p_an = sub.add_parser("analyze", help="run the analytic chain, write CSV outputs")
    add_common(p_an)
    p_an.add_argument("--mode", choices=list(holding.RATE_MODES), default=None,
                      help="new-call rate entering the occupancy chain")
    p_an.add_argument("--lambda-on", type=float, default=DEFAULT_LAMBDA_ON,
                      help="source off->on intensity (on->off is normalized to 1)")
    p_an.add_argument("--service-rate", type=float, default=None,
                      help="buffer drain rate in units of one source's peak rate")
    p_an.set_defaults(func=cmd_analyze)

    p_sim = sub.add_parser("simulate", help="run the cellular simulator")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_or = sub.add_parser("oracle", help="run a Monte Carlo reference")
    add_common(p_or)
    p_or.add_argument("--mode", choices=["fixed", "mobile", "birth-death"],
                      required=True)
    p_or.add_argument("--samples", type=int, default=1_000_000,
                      help="events (birth-death) or steps (fluid modes)")
    p_or.add_argument("--dt", type=float, default=1e-3, help="fluid step size")
    p_or.add_argument("--lambda-on", type=float, default=DEFAULT_LAMBDA_ON)
    p_or.add_argument("--service-rate", type=float, default=None)
    p_or.set_defaults(func=cmd_oracle)

    p_cmp = sub.add_parser("compare", help="compare analysis and simulation outputs")
    p_cmp.add_argument("--analysis-dir", required=True)
    p_cmp.add_argument("--sim-dir", required=True)
    p_cmp.add_argument("--out", default=None,
                       help="directory for compare.csv (default: sim dir)")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
