#!/usr/bin/env python3
"""
Command-line front end: admissible, graph, simulate, curves, sn-curve, equilibria, ring
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import yaml
from pydantic import ValidationError

import config
import cycle_core
import dde_sim
import equilibria
import learning
import stability
import transition_graph
from errors import ConfigError, NetworkError
from models import RunConfig
from sweep import run_jobs

logger = logging.getLogger(__name__)

# exit status for a well-formed but non-admissible cycle
NOT_ADMISSIBLE = 1


def _print_matrix_row(label: str, values) -> None:
    print(f"  {label:<22} " + " ".join(f"{v:.4g}" for v in values))


def admissible_cmd(args) -> int:
    """Report rank, DFT profile, class and selected indices"""
    cycle = cycle_core.read_cycle(args.cycle_file)
    status = cycle_core.is_admissible(cycle)
    print(f"Cycle {args.cycle_file}: N={cycle.n_neurons}, p={cycle.period}")
    print(f"  {'rank':<22} {status.rank}")
    print(f"  {'nonzero DFT columns':<22} {status.nonzero_dft_columns}")
    _print_matrix_row("DFT profile", status.dft_profile)
    if cycle.adjacent_repeat:
        print("⚠  two cyclically adjacent columns are equal")
    if args.normalized:
        cycle_core.write_cycle(cycle, args.normalized)
        print(f"  normalized cycle written to {args.normalized}")
    if not status:
        print("✗ Cycle is not admissible")
        return NOT_ADMISSIBLE
    cls = cycle_core.classify(cycle)
    selection = cycle_core.selected_indices(cycle)
    print("✓ Cycle is admissible")
    print(f"  {'class':<22} {cls.kind.value}")
    print(f"  {'anti-symmetric':<22} {'Yes' if cls.anti_symmetric else 'No'}")
    print(f"  {'MC (rank = N)':<22} {'Yes' if cls.mc else 'No'}")
    print(f"  {'consecutive':<22} {'Yes' if cls.consecutive else 'No'}")
    print(f"  {'selected indices':<22} {{{', '.join(str(k) for k in selection.indices)}}}")
    return 0


def graph_cmd(args) -> int:
    """Enumerate the transition graph and export loops"""
    cycle = cycle_core.read_cycle(args.cycle_file)
    conn = learning.build_connectivity(cycle)
    graph = transition_graph.build_graph(conn)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    transition_graph.graph_to_json(graph, out.with_suffix(".json"))
    transition_graph.graph_to_dot(graph, out.with_suffix(".dot"))
    print(f"✓ {len(graph.loops)} loops over {1 << graph.n} states")
    print("-" * 60)
    print(f"{'Loop':<6} {'Length':<8} {'Codes':<40}")
    print("-" * 60)
    for i, loop in enumerate(graph.loops, start=1):
        print(f"{i:<6} {len(loop):<8} {' '.join(str(c) for c in loop):<40}")
    print(f"  written {out.with_suffix('.json')} and {out.with_suffix('.dot')}")
    return 0


def load_run_config(path: str, overrides: Optional[Dict] = None) -> RunConfig:
    """Read a YAML run configuration; flag overrides win over file values."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read run configuration {path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("run configuration must be a mapping")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    if "beta" in (overrides or {}) and overrides["beta"] is not None:
        data.pop("beta1", None)
    if "beta1" in (overrides or {}) and overrides["beta1"] is not None:
        data.pop("beta", None)
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid run configuration: {exc}")
    cycle_path = Path(cfg.cycle_file)
    if not cycle_path.is_absolute():
        cycle_path = Path(path).parent / cycle_path
    return cfg.model_copy(update={"cycle_file": str(cycle_path)})


def simulate_cmd(args) -> int:
    """Integrate the network and write trajectory, raster and retrieval report"""
    cfg = load_run_config(
        args.config_file,
        {
            "c0": args.c0, "beta": args.beta, "beta1": args.beta1, "lambda": args.lam,
            "tau_ms": args.tau, "t_end_ms": args.t_end, "dt_ms": args.dt,
            "seed": args.seed, "output_dir": args.out,
        },
    )
    cycle = cycle_core.read_cycle(cfg.cycle_file)
    conn = learning.build_connectivity(cycle)
    params = cfg.network_params()
    dt = cfg.resolved_dt()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(cfg.seed)
    random_start = cfg.n_trajectories > 1 or cfg.initial_scale is not None
    if random_start:
        scale = cfg.initial_scale or 0.1 * params.memory_amplitude
        phis = [dde_sim.random_initial(conn.n, scale, rng) for _ in range(cfg.n_trajectories)]
        jobs = [lambda phi=phi: dde_sim.simulate(conn, params, cfg.t_end_ms, dt, phi=phi) for phi in phis]
    else:
        pattern = cycle.column(cfg.start_index)
        jobs = [lambda: dde_sim.simulate(conn, params, cfg.t_end_ms, dt, pattern=pattern, a=cfg.a)]
    trajectories = run_jobs(jobs)
    first = trajectories[0]
    dde_sim.write_trajectory_csv(first, out / "trajectory.csv")

    extra = {"seed": cfg.seed, "params": params.to_dict(), "dt_ms": dt, "t_end_ms": cfg.t_end_ms}
    if params.tau > 0:
        seq = dde_sim.extract_sign_sequence(first, params, cfg.settle_fraction)
        dde_sim.write_raster_csv(seq, conn.n, out / "raster.csv")
        report = dde_sim.check_retrieval(seq, cycle, cfg.start_index)
        order = dde_sim.check_retrieval(
            dde_sim.extract_pattern_sequence(first), cycle, cfg.start_index, aligned=False
        )
        extra["order_matched_count"] = order.matched_count
        extra["order_full_traversals"] = order.full_traversals
        extra["order_sequence"] = [list(s) if s else None for s in order.sign_sequence]
        dde_sim.report_to_json(report, out / "retrieval.json", extra)
        print(f"✓ interval check: {report.matched_count} matched, {report.full_traversals} full traversals")
        print(f"✓ order check:    {order.matched_count} matched, {order.full_traversals} full traversals")
    else:
        (out / "retrieval.json").write_text(json.dumps(extra, indent=2), encoding="utf-8")
        print("✓ tau = 0: no interval bookkeeping")

    if len(trajectories) > 1:
        lines = ["trajectory,seed,final_code,last_sign_change_ms"]
        for i, traj in enumerate(trajectories):
            final = np.where(traj.u[-1] >= 0, 1, -1)
            lines.append(
                f"{i},{cfg.seed},{transition_graph.encode(final)},{dde_sim.last_sign_change(traj):.10g}"
            )
        (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"  outputs written to {out}")
    return 0


def _beta_grid(args) -> np.ndarray:
    if not 1.0 < args.beta_min < args.beta_max:
        raise ConfigError("beta range must satisfy 1 < beta_min < beta_max")
    return np.linspace(args.beta_min, args.beta_max, args.beta_points)


def curves_cmd(args) -> int:
    """Write the bifurcation scenario of the trivial solution"""
    cycle = cycle_core.read_cycle(args.cycle_file)
    grid = _beta_grid(args)
    scen = stability.scenario(cycle, args.tau, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stability.curves_to_csv(scen, out / "curves.csv")
    (out / "scenario.json").write_text(json.dumps(scen.to_dict(), indent=2), encoding="utf-8")
    sn_grid = grid[grid <= 5.0]
    if sn_grid.size:
        equilibria.sn_curve_to_csv(equilibria.saddle_node_curve(sn_grid), out / "saddle_node.csv")
    print(f"✓ indices {list(scen.selection.indices)}; pitchfork: {'Yes' if scen.has_pitchfork else 'No'}; "
          f"BT points: {len(scen.bt_points)}; always unstable: {'Yes' if scen.always_unstable else 'No'}")
    print(f"  outputs written to {out}")
    return 0


def sn_curve_cmd(args) -> int:
    """Write the saddle-node curve beta,c0_star"""
    curve = equilibria.saddle_node_curve(_beta_grid(args))
    equilibria.sn_curve_to_csv(curve, args.out)
    print(f"✓ {len(curve)} saddle-node points written to {args.out}")
    return 0


def equilibria_cmd(args) -> int:
    """Equilibrium count of the system driven by one stored pattern"""
    cycle = cycle_core.read_cycle(args.cycle_file)
    conn = learning.build_connectivity(cycle)
    params = learning.network_params(c0=args.c0, lam=args.lam, beta=args.beta, beta1=args.beta1)
    system = equilibria.derived_system(conn, params, cycle.column(args.pattern))
    report = equilibria.count_equilibria(system, args.eta_rule)
    report.equilibria = equilibria.locate_equilibria(system)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    equilibria.report_to_json(report, out)
    print(f"✓ count class {report.count_class.value}; "
          f"2^N stable: {'Yes' if report.stable_two_to_the_n else 'No'}")
    if report.equilibria is None:
        print(f"  enumeration skipped for N > {config.ENUMERATION_MAX_NEURONS}")
    else:
        n_stable = sum(e.stable for e in report.equilibria)
        print(f"  {len(report.equilibria)} equilibria, {n_stable} stable")
    print(f"  report written to {out}")
    return 0


def ring_cmd(args) -> int:
    """Symmetric equilibria of the excitatory ring"""
    params = learning.network_params(c0=args.c0, lam=args.lam, beta=args.beta, beta1=args.beta1)
    ring = equilibria.ring_equilibria(params)
    print(f"  {'beta':<12} {params.beta:.6g}")
    print(f"  {'u*':<12} {ring.u_star:.10g}")
    print(f"  {'equilibria':<12} 0, +u*, -u*")
    print(f"{'✓' if ring.stable else '✗'} +-u* {'stable' if ring.stable else 'unstable'} "
          f"(bound 1/(1 - tanh^2(lambda u*)) = {1.0 / (1.0 - np.tanh(params.lam * ring.u_star) ** 2):.6g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Cyclic patterns in delayed Hopfield-type networks")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    adm = subparsers.add_parser("admissible", help="Check a cycle file")
    adm.add_argument("cycle_file")
    adm.add_argument("--normalized", help="Re-emit the parsed cycle in +1/-1 form")
    adm.set_defaults(func=admissible_cmd)

    gr = subparsers.add_parser("graph", help="Enumerate the transition graph")
    gr.add_argument("cycle_file")
    gr.add_argument("--out", default="graph", help="Output prefix for .json and .dot")
    gr.set_defaults(func=graph_cmd)

    sim = subparsers.add_parser("simulate", help="Run a simulation from a YAML config")
    sim.add_argument("config_file")
    sim.add_argument("--c0", type=float)
    sim.add_argument("--beta", type=float)
    sim.add_argument("--beta1", type=float)
    sim.add_argument("--lambda", dest="lam", type=float)
    sim.add_argument("--tau", type=float)
    sim.add_argument("--t-end", dest="t_end", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", help="Output directory")
    sim.set_defaults(func=simulate_cmd)

    def beta_range(p, default_max=5.0):
        p.add_argument("--beta-min", type=float, default=1.01)
        p.add_argument("--beta-max", type=float, default=default_max)
        p.add_argument("--beta-points", type=int, default=200)

    cur = subparsers.add_parser("curves", help="Bifurcation curves of the trivial solution")
    cur.add_argument("cycle_file")
    cur.add_argument("--tau", type=float, required=True)
    beta_range(cur)
    cur.add_argument("--out", default="curves")
    cur.set_defaults(func=curves_cmd)

    sn = subparsers.add_parser("sn-curve", help="Saddle-node curve of the memory state")
    beta_range(sn)
    sn.add_argument("--out", default="saddle_node.csv")
    sn.set_defaults(func=sn_curve_cmd)

    eq = subparsers.add_parser("equilibria", help="Equilibria of the pattern-driven system")
    eq.add_argument("cycle_file")
    eq.add_argument("--c0", type=float, required=True)
    eq.add_argument("--beta", type=float)
    eq.add_argument("--beta1", type=float)
    eq.add_argument("--lambda", dest="lam", type=float, required=True)
    eq.add_argument("--pattern", type=int, default=0, help="Column of the cycle that drives the system")
    eq.add_argument("--eta-rule", dest="eta_rule", choices=equilibria.ETA_RULES, default=equilibria.ETA_RULES[0])
    eq.add_argument("--out", default="equilibria.json")
    eq.set_defaults(func=equilibria_cmd)

    ring = subparsers.add_parser("ring", help="Equilibria of the excitatory ring")
    ring.add_argument("--beta", type=float)
    ring.add_argument("--beta1", type=float)
    ring.add_argument("--lambda", dest="lam", type=float, required=True)
    ring.add_argument("--c0", type=float, default=0.0)
    ring.set_defaults(func=ring_cmd)
    return parser


def setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format=config.LOG_FORMAT,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except NetworkError as exc:
        print(f"✗ {exc.detail}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
