"""CLI interface for soft2hard."""

import argparse
import json
import sys
from datetime import datetime
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bv_analysis import weak_star_report
from .config import apply_overrides, config_hash, load_config, resolve_datum
from .exceptions import HypothesisError
from .hard_dynamics import sample_hard, surgery_solve
from .models import ExperimentConfig, RunSummary
from .output_manager import resolve_output_path, to_jsonable, write_array_csv, write_csv, write_json
from .potentials import HardenedPotential, potential_from_spec, validate_hypotheses
from .scattering import collision_analysis, hardening_sweep, soft_scatter
from .soft_dynamics import (
    SoftProblem,
    default_time_span,
    detect_contact_window,
    integrate,
    trajectory_table,
)

COMMANDS = ("validate-potential", "simulate", "surgery", "scatter", "sweep", "variation")

STATE_COLUMNS = [
    "x1", "x2", "x3", "xbar1", "xbar2", "xbar3",
    "v1", "v2", "v3", "vbar1", "vbar2", "vbar3",
]


def _positive_int(value: str) -> int:
    """Argparse helper to ensure integer arguments are positive."""
    try:
        ivalue = int(value)
    except ValueError as exc:  # pragma: no cover - handled by argparse
        raise argparse.ArgumentTypeError("Must be an integer") from exc

    if ivalue <= 0:
        raise argparse.ArgumentTypeError("Must be a positive integer")
    return ivalue


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment file")
    common.add_argument("--preset", choices=["head_on", "oblique", "grazing"], help="Named initial datum")
    common.add_argument("--eps", type=float, help="Single hardening parameter ε in (0, 1)")
    common.add_argument("--beta", type=float, help="Boundary decay exponent β > 2")
    common.add_argument("--s", type=float, help="Origin-singularity exponent s > 0")
    common.add_argument("--k-min", type=_positive_int, dest="k_min", help="Grid ε = 2^-k starts at this k")
    common.add_argument("--k-max", type=_positive_int, dest="k_max", help="Grid ε = 2^-k ends at this k")
    common.add_argument("--t0", type=float, help="Left end of the interval of study")
    common.add_argument("--t1", type=float, help="Right end of the interval of study")
    common.add_argument("--tol-rel", type=float, dest="tol_rel", help="Relative ODE tolerance")
    common.add_argument("--tol-abs", type=float, dest="tol_abs", help="Absolute ODE tolerance")
    common.add_argument("--quad-tol", type=float, dest="quad_tol", help="Absolute quadrature tolerance")
    common.add_argument("--threads", type=_positive_int, help="Worker threads for ε sweeps")
    common.add_argument(
        "--out", "-o",
        type=Path,
        help="Output directory (default: ./soft2hard_out/<command>)",
    )
    common.add_argument("--verbose", "-v", action="store_true", help="Show detailed progress information")
    common.add_argument("--json", action="store_true", dest="json_output", help="Print the run summary as JSON")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment."""
    parser = argparse.ArgumentParser(
        prog="soft2hard",
        description="Soft-potential to hard-sphere two-body dynamics lab",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common_options()
    helps = {
        "validate-potential": "Check the reference potential hypotheses and print certified constants",
        "simulate": "Integrate the soft two-body system and write the trajectory",
        "surgery": "Construct the hard-sphere solution and write the trajectory",
        "scatter": "Soft scattering map for one ε with an ODE cross-check",
        "sweep": "Hardening sweep of the collision analysis over the ε grid",
        "variation": "Bounded-variation and L1 convergence report over the ε grid",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> Tuple[str, ExperimentConfig]:
    """
    Parse command-line arguments.

    Returns:
        Command name and the resolved ExperimentConfig

    Raises:
        ConfigError: If the config file or the overrides are invalid
    """
    args = build_parser().parse_args(argv)
    config = load_config(args.config) if args.config else ExperimentConfig()
    config = apply_overrides(config, vars(args))
    config.verbose = args.verbose
    config.json_output = args.json_output
    return args.command, config


def _single_eps(config: ExperimentConfig) -> float:
    return float(config.eps) if config.eps is not None else config.eps_grid[0]


def _base_potential(config: ExperimentConfig):
    return potential_from_spec({"family": config.family, "s": config.s, "beta": config.beta})


def cmd_validate_potential(config: ExperimentConfig, digest: str) -> Tuple[List[Path], dict]:
    """Validate the reference potential; hypothesis failures raise HypothesisError."""
    base = _base_potential(config)
    report = validate_hypotheses(base, grid_size=config.grid_size)
    out_dir = config.get_output_dir("validate-potential")
    path = write_json(resolve_output_path(out_dir, "validation.json"),
                      {"potential": base.describe(), "report": report.to_dict()}, digest)
    if not report.passed:
        raise HypothesisError("; ".join(report.failures), hypothesis=report.failures[0].split(":")[0])

    print(f"Potential {base.name}: s={base.s:g}, beta={base.beta:g}  convex={report.convex}")
    for key, value in report.constants.to_dict().items():
        print(f"  {key:<7} = {value:.10g}")
    return [path], report.to_dict()


def cmd_simulate(config: ExperimentConfig, digest: str) -> Tuple[List[Path], dict]:
    """Integrate the soft system from the datum at t = 0 and sample it uniformly."""
    eps = _single_eps(config)
    pot = HardenedPotential(_base_potential(config), eps)
    z0 = resolve_datum(config)
    _, end = default_time_span(pot, z0)
    span = (0.0, max(end, config.t1))
    trajectory = integrate(SoftProblem(pot, z0, span, config.rel_tol, config.abs_tol))
    times = np.linspace(span[0], span[1], config.samples)
    table = trajectory_table(trajectory, pot, times)

    out_dir = config.get_output_dir("simulate")
    path = write_array_csv(
        resolve_output_path(out_dir, "trajectory.csv"), ["t", *STATE_COLUMNS, "H", "sep"], table, digest
    )
    window = detect_contact_window(trajectory)
    details = {
        "eps": eps,
        "t_span": list(span),
        "energy_drift": trajectory.energy_drift,
        "nfev": trajectory.nfev,
        "tau_minus": window.tau_minus,
        "tau_plus": window.tau_plus,
    }
    if config.verbose:
        print(f"  → {trajectory.times.size} integrator steps, {trajectory.nfev} evaluations")
    print(f"Energy drift: {trajectory.energy_drift:.3e}")
    if not window.none_flag:
        print(f"Contact window: [{window.tau_minus:.10g}, {window.tau_plus:.10g}]")
    return [path], details


def cmd_surgery(config: ExperimentConfig, digest: str) -> Tuple[List[Path], dict]:
    """Hard-sphere trajectory on (T₀, T₁) sampled uniformly."""
    z0 = resolve_datum(config)
    tr = surgery_solve(z0)
    times = np.linspace(config.t0, config.t1, config.samples)
    states = sample_hard(tr, times)
    sep = np.linalg.norm(states[:, 0:3] - states[:, 3:6], axis=1)
    table = np.column_stack([times, states, sep])

    out_dir = config.get_output_dir("surgery")
    path = write_array_csv(resolve_output_path(out_dir, "trajectory.csv"), ["t", *STATE_COLUMNS, "sep"], table, digest)
    details = {
        "collision_time": tr.collision_time,
        "grazing": tr.grazing,
        "normal": tr.normal,
        "velocity_jump": tr.velocity_jump,
        "pre_velocities": tr.pre_velocities,
        "post_velocities": tr.post_velocities,
        "min_separation": float(sep.min()),
    }
    if tr.collides:
        print(f"Collision at t = {tr.collision_time:.17g}, velocity jump {tr.velocity_jump:.10g}")
    elif tr.grazing:
        print("Grazing contact: velocities unchanged")
    else:
        print("No collision: free flight")
    return [path], details


def cmd_scatter(config: ExperimentConfig, digest: str) -> Tuple[List[Path], dict]:
    """Explicit soft scattering for one ε, cross-checked against the ODE."""
    eps = _single_eps(config)
    pot = HardenedPotential(_base_potential(config), eps)
    z0 = resolve_datum(config)
    analysis = collision_analysis(z0, pot, config.quad_tol)
    result = soft_scatter(z0, pot, config.quad_tol, analysis)

    trajectory = integrate(SoftProblem(pot, z0, None, config.rel_tol, config.abs_tol))
    window = detect_contact_window(trajectory)
    if window.none_flag:
        tau_ode = 0.0
        v_ode = z0.V
    else:
        tau_ode = 0.5 * window.duration
        v_ode = trajectory.velocities(np.array([window.tau_plus]))[0]
    tau_rel = abs(tau_ode - analysis.tau_star) / analysis.tau_star if analysis.tau_star > 0 else abs(tau_ode)
    velocity_err = float(np.max(np.abs(v_ode - result.post.V)))

    details = {
        "eps": eps,
        "branch": analysis.branch,
        "rho_star": analysis.rho_star,
        "tau_star": analysis.tau_star,
        "theta_star": analysis.theta_star,
        "apse": analysis.apse,
        "exit_time": result.exit_time,
        "post_state": result.post.to_array(),
        "ode_half_window": tau_ode,
        "tau_rel_diff": tau_rel,
        "exit_velocity_err": velocity_err,
    }
    out_dir = config.get_output_dir("scatter")
    path = write_json(resolve_output_path(out_dir, "scatter.json"), details, digest)
    print(f"rho* = {analysis.rho_star:.15g}  tau* = {analysis.tau_star:.15g}  ({analysis.branch})")
    print(f"ODE cross-check: tau rel. diff {tau_rel:.3e}, exit velocity err {velocity_err:.3e}")
    return [path], details


SWEEP_COLUMNS = [
    "eps", "rho_star", "tau_star", "theta_star", "apse1", "apse2", "apse3",
    "scatter_err", "apse_err", "l1_distance", "p_var", "error",
]


def cmd_sweep(config: ExperimentConfig, digest: str) -> Tuple[List[Path], dict]:
    """Hardening sweep merged with the variation and L¹ report."""
    base = _base_potential(config)
    z0 = resolve_datum(config)
    eps = config.eps_grid
    interval = (config.t0, config.t1)
    table = hardening_sweep(z0, base, eps, config.quad_tol, config.threads)
    report = weak_star_report(z0, base, eps, interval, config.rel_tol, config.abs_tol, config.threads)

    rows = []
    for i, (row, dist, var) in enumerate(zip(table.rows, report.l1_distances, report.bound.variations), 1):
        if config.verbose:
            print(f"  [{i}/{len(eps)}] eps={row.eps:.3e} {'ok' if row.ok else row.error}")
        rows.append([row.eps, row.rho_star, row.tau_star, row.theta_star, *row.apse,
                     row.scatter_err, row.apse_err, dist, var.p_var, row.error])

    out_dir = config.get_output_dir("sweep")
    summary = dict(table.summary(), **report.summary())
    csv_path = write_csv(resolve_output_path(out_dir, "sweep.csv"), SWEEP_COLUMNS, rows, digest)
    json_path = write_json(resolve_output_path(out_dir, "summary.json"), summary, digest)
    print(f"tau* ~ eps^{table.slope:.4f}  (1/beta = {table.beta_inverse:.4f}, "
          f"95% CI [{table.slope_ci[0]:.4f}, {table.slope_ci[1]:.4f}])")
    print(f"L1 slope {report.l1_slope:.4f}, sup pVar {report.bound.var_max:.6g}, "
          f"hard variation {report.bound.hard_variation:.6g}")
    return [csv_path, json_path], summary


VARIATION_COLUMNS = ["eps", "p_var", "l1_norm", "bv_norm", "refinement_level", "converged", "l1_distance"]


def cmd_variation(config: ExperimentConfig, digest: str) -> Tuple[List[Path], dict]:
    """Uniform variation bound and weak-star convergence evidence."""
    base = _base_potential(config)
    z0 = resolve_datum(config)
    report = weak_star_report(
        z0, base, config.eps_grid, (config.t0, config.t1), config.rel_tol, config.abs_tol, config.threads
    )
    rows = [
        [e, v.p_var, v.l1_norm, v.bv_norm, v.refinement_level, v.converged, d]
        for e, v, d in zip(report.eps, report.bound.variations, report.l1_distances)
    ]
    out_dir = config.get_output_dir("variation")
    summary = report.summary()
    csv_path = write_csv(resolve_output_path(out_dir, "variation.csv"), VARIATION_COLUMNS, rows, digest)
    json_path = write_json(resolve_output_path(out_dir, "summary.json"), summary, digest)
    print(f"sup pVar {report.bound.var_max:.6g} (hard {report.bound.hard_variation:.6g}), "
          f"bounded={report.bound.bounded}")
    print(f"L1 slope {report.l1_slope:.4f}, strictly decreasing={report.strictly_decreasing}")
    return [csv_path, json_path], summary


HANDLERS: Dict[str, Callable[[ExperimentConfig, str], Tuple[List[Path], dict]]] = {
    "validate-potential": cmd_validate_potential,
    "simulate": cmd_simulate,
    "surgery": cmd_surgery,
    "scatter": cmd_scatter,
    "sweep": cmd_sweep,
    "variation": cmd_variation,
}


def run_command(command: str, config: ExperimentConfig) -> RunSummary:
    """
    Run one subcommand and print its summary banner.

    Errors propagate to the caller, which maps them to exit codes.
    """
    start_time = datetime.now()
    digest = config_hash(config)
    if config.verbose:
        print(f"Command: {command}")
        print(f"Config sha256: {digest}")
        print(f"Output directory: {config.get_output_dir(command)}")

    outputs, details = HANDLERS[command](config, digest)
    summary = RunSummary(
        command=command,
        outputs=outputs,
        details=to_jsonable(details),
        start_time=start_time,
        end_time=datetime.now(),
        failed=bool(details.get("failed_rows")),
        error="annotated sweep rows failed" if details.get("failed_rows") else None,
    )

    print(f"\n{'='*60}")
    print(f"Summary: {command} wrote {len(outputs)} file(s)")
    for path in outputs:
        print(f"  {path}")
    print(f"Elapsed time: {summary.elapsed_time:.1f}s")
    print(f"{'='*60}")

    if config.json_output:
        print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    return summary


def print_error(message: str) -> None:
    print(f"Error: {message}", file=sys.stderr)
