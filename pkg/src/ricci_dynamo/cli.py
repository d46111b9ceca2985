"""Batch front-end: scenario files in, CSV/JSON tables and plot data out.

Exit codes: 0 success; 2 scenario parse/validation error (message names the
offending field); 3 numerical failure (the failing output and sweep point
are identified); 4 I/O failure writing results.
"""

from __future__ import annotations

import argparse
import datetime
import itertools
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cosmology import classify, curvature_from_matter
from .dynamics import energy_rate, integrate, magnetic_energy
from .errors import (
    NoConvergence,
    NonConvergent,
    RicciDynamoError,
    ScenarioError,
    StepUnstable,
)
from .geometry import Connection, Metric2, einstein_flow_history, lyapunov_from_metric
from .operator import MagneticField, assemble_grid, assemble_reduced, grid_coordinates
from .scenario import Scenario, SweepRange, load_scenario, velocity_field
from .spectrum import discrepancy_report, fast_dynamo_test, numerical_spectrum, quadratic_roots
from .tables import ResultTable, emit_plotdata, write_csv, write_json

__all__ = ["main", "run_scenario"]

SOURCE_CODES = {
    "characteristic": 0,
    "closed_form": 1,
    "diffusion_free": 2,
    "cosmological": 3,
    "chicone_latushkin": 4,
    "numerical_reduced": 5,
    "numerical_grid": 6,
    "extrapolation": 7,
}

_PLOT_FOR_OUTPUT = {
    "evolve": "growth_curve",
    "spectrum": "spectrum_scatter",
    "sweep": "spectrum_scatter",
    "classify": "regime_map",
}

_NUMERICAL_FAILURES = (NoConvergence, NonConvergent, StepUnstable)


def _pool_map(fn, items, threads):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _sweep_values(value):
    if isinstance(value, SweepRange):
        return [float(v) for v in value.values()]
    return [float(value)]


# -- output runners -----------------------------------------------------------

def _run_spectrum(sc: Scenario, threads: int) -> ResultTable:
    columns = ("row_kind", "eta", "source", "source_code", "root_index",
               "re_lambda", "im_lambda", "verdict")
    rows = []
    if sc.model == "grid":
        eta = sc.scalar("eta", "grid spectrum")
        op = assemble_grid(velocity_field(sc.velocity, sc.grid_n), Metric2.identity(),
                           Connection.flat(), eta, sc.grid_n, sc.div_sign)
        result = numerical_spectrum(op, k=sc.grid_k, seed=sc.seed)
        for i, value in enumerate(result.values()):
            rows.append(("root", eta, result.source, SOURCE_CODES[result.source],
                         i, float(value.real), float(value.imag), ""))
        return ResultTable("spectrum", columns, rows)

    ricci = sc.scalar("R", "reduced spectrum")
    theta = sc.scalar("theta", "reduced spectrum")
    etas = sorted(_sweep_values(sc.parameter("eta")), reverse=True)
    if sc.is_sweep("eta") and len(etas) < 3:
        raise ScenarioError("parameters.eta.count",
                            "an eta sweep feeding the spectrum output needs count >= 3 "
                            "for the vanishing-resistivity extrapolation")
    results = _pool_map(lambda e: quadratic_roots(ricci, theta, e), etas, threads)
    for eta, result in zip(etas, results):
        for i, value in enumerate(result.values()):
            rows.append(("root", eta, result.source, SOURCE_CODES[result.source],
                         i, float(value.real), float(value.imag), ""))
    if sc.is_sweep("eta"):
        verdict = fast_dynamo_test(lambda e: quadratic_roots(ricci, theta, e), etas)
        rows.append(("fast_dynamo", 0.0, "extrapolation", SOURCE_CODES["extrapolation"],
                     0, float(verdict.limit), 0.0, "true" if verdict.is_fast else "false"))
    return ResultTable("spectrum", columns, rows)


def _run_sweep(sc: Scenario, threads: int) -> ResultTable:
    if sc.model != "reduced":
        raise ScenarioError("outputs", "the sweep output requires model = 'reduced'")
    if not any(sc.is_sweep(name) for name in ("R", "theta", "eta")):
        raise ScenarioError("parameters", "the sweep output needs at least one of "
                                          "R, theta, eta given as a sweep range")
    points = list(itertools.product(_sweep_values(sc.parameter("R")),
                                    _sweep_values(sc.parameter("theta")),
                                    _sweep_values(sc.parameter("eta"))))

    def evaluate(indexed):
        idx, (r, th, eta) = indexed
        try:
            return idx, (r, th, eta), quadratic_roots(r, th, eta)
        except RicciDynamoError as exc:
            raise type(exc)(f"sweep point {idx} (R={r}, theta={th}, eta={eta}): {exc}") from exc

    results = _pool_map(evaluate, list(enumerate(points)), threads)
    columns = ("index", "R", "theta", "eta", "root_index", "source", "source_code",
               "re_lambda", "im_lambda", "max_re")
    rows = []
    for idx, (r, th, eta), result in sorted(results, key=lambda item: item[0]):
        for i, value in enumerate(result.values()):
            rows.append((idx, r, th, eta, i, result.source, SOURCE_CODES[result.source],
                         float(value.real), float(value.imag), float(result.max_real_part)))
    return ResultTable("sweep", columns, rows)


def _run_evolve(sc: Scenario) -> ResultTable:
    if sc.model == "reduced":
        op = assemble_reduced(sc.scalar("R", "evolve"), sc.scalar("theta", "evolve"),
                              sc.scalar("eta", "evolve"))
        b0 = MagneticField.reduced(1.0, 0.0)
    else:
        op = assemble_grid(velocity_field(sc.velocity, sc.grid_n), Metric2.identity(),
                           Connection.flat(), sc.scalar("eta", "evolve"),
                           sc.grid_n, sc.div_sign)
        _, y = grid_coordinates(sc.grid_n)
        b0 = MagneticField.grid(np.sin(y), np.zeros_like(y), solenoidal=True)

    traj = integrate(op, b0, sc.t_end, sc.dt)
    flat = Metric2.identity()
    table = ResultTable("evolve", ("t", "norm", "energy", "log_energy"))
    for t, state, norm in zip(traj.times, traj.states, traj.norms):
        energy = magnetic_energy(state, flat)
        table.rows.append((float(t), float(norm), float(energy),
                           float(math.log(energy)) if energy > 0.0 else 0.0))
    if len(traj.times) >= 3:
        history = energy_rate(traj, flat)
        table.metadata["fitted_rate"] = repr(history.fitted_rate)
        table.metadata["rate_verdict"] = history.verdict
    return table


def _run_classify(sc: Scenario, threads: int) -> ResultTable:
    rho_param = sc.parameter("rho")
    rho_values = _sweep_values(rho_param)
    if min(rho_values) < 0.0:
        raise ScenarioError("parameters.rho", "classification requires rho >= 0")
    points = list(itertools.product(rho_values, _sweep_values(sc.parameter("theta"))))

    def evaluate(indexed):
        idx, (rho, theta) = indexed
        state = curvature_from_matter(rho, theta)
        return idx, rho, theta, state.ricci, classify(state)

    results = _pool_map(evaluate, list(enumerate(points)), threads)
    columns = ("index", "rho", "theta", "ricci", "real_part", "discriminant",
               "regime", "regime_code")
    rows = [
        (idx, rho, theta, ricci, float(regime.real_part), float(regime.discriminant),
         regime.label, regime.code)
        for idx, rho, theta, ricci, regime in sorted(results, key=lambda item: item[0])
    ]
    return ResultTable("classify", columns, rows)


def _run_ricci_flow(sc: Scenario) -> ResultTable:
    lam = sc.scalar("Lambda", "ricci_flow")
    n_steps = max(1, int(round(sc.t_end / sc.dt)))
    history = einstein_flow_history(lam, sc.t_end, n_steps)
    table = ResultTable("ricci_flow", ("t", "g11", "g12", "g22"))
    for metric in history:
        table.rows.append((float(metric.t), float(metric.g[0, 0]),
                           float(metric.g[0, 1]), float(metric.g[1, 1])))
    exponents = lyapunov_from_metric(history)
    table.metadata["recovered_exponents"] = ",".join(repr(e) for e in exponents)
    return table


def _run_discrepancy(sc: Scenario) -> ResultTable:
    ricci = sc.scalar("R", "discrepancy")
    theta = sc.scalar("theta", "discrepancy")
    eta = sc.scalar("eta", "discrepancy")
    if theta == 0.0:
        raise ScenarioError("parameters.theta",
                            "the discrepancy output evaluates the closed form, "
                            "which requires theta != 0")
    report = discrepancy_report(ricci, theta, eta)
    columns = ("source_a", "source_b", "root_index", "d_re", "d_im", "agrees")
    rows = []
    for pair in report.pairs:
        for i, diff in enumerate(pair.differences):
            rows.append((pair.source_a, pair.source_b, i,
                         float(diff.real), float(diff.imag),
                         "true" if pair.agrees else "false"))
    return ResultTable("discrepancy", columns, rows)


# -- orchestration ------------------------------------------------------------

def run_scenario(sc: Scenario, out_dir, threads: int = 1, fmt: str = "both") -> list[Path]:
    """Execute every requested output and write its files; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()

    written = []
    for kind in sc.outputs:
        try:
            if kind == "spectrum":
                table = _run_spectrum(sc, threads)
            elif kind == "sweep":
                table = _run_sweep(sc, threads)
            elif kind == "evolve":
                table = _run_evolve(sc)
            elif kind == "classify":
                table = _run_classify(sc, threads)
            elif kind == "ricci_flow":
                table = _run_ricci_flow(sc)
            else:
                table = _run_discrepancy(sc)
        except _NUMERICAL_FAILURES as exc:
            raise type(exc)(f"output {kind!r}: {exc}") from exc
        table.metadata = {
            "tool": "ricci-dynamo",
            "version": __version__,
            "scenario_digest": sc.digest,
            **table.metadata,
            "timestamp": stamp,
        }
        if fmt in ("csv", "both"):
            written.append(write_csv(table, out / f"{kind}.csv"))
        if fmt in ("json", "both"):
            written.append(write_json(table, out / f"{kind}.json"))
        plot_kind = _PLOT_FOR_OUTPUT.get(kind)
        if plot_kind is not None:
            written.append(emit_plotdata(table, plot_kind, out / f"{kind}.dat"))
    return written


def _resolve_threads(args) -> int:
    env = os.environ.get("RICCI_DYNAMO_THREADS")
    if env is not None:
        try:
            threads = int(env)
        except ValueError:
            raise ScenarioError("RICCI_DYNAMO_THREADS",
                                f"must be an integer, got {env!r}")
    else:
        threads = args.threads
    if threads < 1:
        raise ScenarioError("threads", f"must be at least 1, got {threads}")
    return threads


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ricci-dynamo",
        description="Induction-operator spectra, evolutions, and regime maps "
                    "driven by scenario files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario file")
    run_p.add_argument("scenario", help="path to the scenario TOML file")
    run_p.add_argument("--out", default="out", help="output directory (default: out)")
    run_p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sweep points (default: 1)")
    run_p.add_argument("--format", choices=("csv", "json", "both"), default="both")

    val_p = sub.add_parser("validate", help="check a scenario file without running it")
    val_p.add_argument("scenario", help="path to the scenario TOML file")

    sub.add_parser("version", help="print the tool version")

    args = parser.parse_args(argv)

    if args.command == "version":
        print(f"ricci-dynamo {__version__}")
        return 0

    if args.command == "validate":
        try:
            sc = load_scenario(args.scenario)
        except ScenarioError as exc:
            print(f"invalid scenario: {exc}", file=sys.stderr)
            return 2
        print(f"scenario ok: digest {sc.digest}")
        return 0

    # run
    try:
        sc = load_scenario(args.scenario)
        threads = _resolve_threads(args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    try:
        written = run_scenario(sc, args.out, threads=threads, fmt=args.format)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_FAILURES as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
