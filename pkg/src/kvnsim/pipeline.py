"""Scenario pipelines: classify -> assemble -> propagate -> verify -> write.

Three entry points mirror the CLI verbs: run_scenario (full time
evolution), check_scenario (static operator diagnostics only), and
converge_scenario (a resolution ladder with dt proportional to h and
measured convergence orders).  All artifacts land in the scenario's
output directory; figures are rendered alongside the delimited outputs
unless disabled.
"""
from __future__ import annotations

import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace as dc_replace
from pathlib import Path

import numpy as np

from . import diagnostics, plotting, runio
from .config import ConfigError, ScenarioConfig, build_initial_condition
from .diagnostics import RunArtifacts, VerificationReport, measure_order, verify_run
from .fields import check_no_outflow, classify_boundary
from .geometry import build_grid
from .operators import assemble_kvn_generator
from .propagators import (characteristics_oracle_kvn,
                          characteristics_oracle_liouville, default_oracle_dt,
                          propagate)

__all__ = ["RunOutputs", "ConvergeOutputs", "run_scenario", "check_scenario",
           "converge_scenario", "thread_count"]


def thread_count() -> int:
    """Worker threads for ladder runs, from KVNSIM_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("KVNSIM_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class RunOutputs:
    config: ScenarioConfig
    report: VerificationReport
    artifacts: RunArtifacts
    output_dir: Path

    @property
    def exit_code(self) -> int:
        return 0 if self.report.passed else 1


@dataclass
class ConvergeOutputs:
    config: ScenarioConfig
    rungs: list[RunOutputs]
    rows: list[tuple]
    orders: list[tuple[str, float | str]]
    output_dir: Path

    @property
    def exit_code(self) -> int:
        return 0 if all(r.report.passed for r in self.rungs) else 1


def _build_artifacts(cfg: ScenarioConfig, with_propagation: bool) -> RunArtifacts:
    grid = build_grid(cfg.domain, cfg.resolution)
    field = cfg.field
    classification = classify_boundary(field, grid, cfg.classify_tol)
    verdict = check_no_outflow(classification)
    if not verdict.ok:
        print(
            f"WARNING: no-outflow condition violated on "
            f"{verdict.violating_faces.size} boundary face(s); "
            f"max F.nu = {classification.max_outflow:.3e}. "
            "Results are diagnostic only.",
            file=sys.stderr,
        )
    kvn_op = assemble_kvn_generator(field, grid)
    art = RunArtifacts(
        scenario=cfg.name,
        grid=grid,
        field=field,
        classification=classification,
        verdict=verdict,
        kvn_op=kvn_op,
        probe_seed=cfg.probe_seed,
        threads=thread_count(),
    )
    if not with_propagation:
        return art

    ic_callable, psi0 = build_initial_condition(cfg.ic, grid)
    snapshot_times = cfg.snapshot_times or (0.0, cfg.t_end)
    art.propagation = propagate(kvn_op, psi0, cfg.t_end, cfg.propagator,
                                snapshot_times=snapshot_times)
    if cfg.oracle:
        t_actual = art.propagation.final_time
        dt_ode = cfg.oracle_dt or default_oracle_dt(cfg.propagator.dt)
        art.oracle_kvn = characteristics_oracle_kvn(
            field, cfg.domain, grid, ic_callable, t_actual, dt_ode)

        def rho0(x, _ic=ic_callable):
            return np.abs(_ic(x)) ** 2

        art.oracle_liouville = characteristics_oracle_liouville(
            field, cfg.domain, grid, rho0, t_actual, dt_ode)
    return art


def _write_run_outputs(cfg: ScenarioConfig, art: RunArtifacts,
                       report: VerificationReport, out_dir: Path,
                       make_plots: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    runio.write_report(out_dir / "report.txt", report)
    runio.write_classification_csv(out_dir / "classification.csv",
                                   art.grid, art.classification)
    if art.propagation is not None:
        runio.write_norm_history_csv(out_dir / "norm_history.csv",
                                     art.propagation.norm_history)
        runio.write_snapshots(out_dir / "snapshots.kvnf",
                              art.propagation.snapshot_times,
                              [s.values for s in art.propagation.snapshots],
                              art.grid.dim)
    if make_plots:
        render_run_figures(art, out_dir)


def render_run_figures(art: RunArtifacts, out_dir: Path) -> None:
    """Best-effort figure rendering next to the CSV outputs."""
    try:
        plotting.plot_classification(art.grid, art.classification,
                                     out_dir / "classification.png")
        if art.propagation is not None:
            plotting.plot_norm_history(art.propagation.norm_history,
                                       out_dir / "norm_history.png")
            plotting.plot_state(art.grid, art.propagation.final.values,
                                out_dir / "final_state.png",
                                title=f"t = {art.propagation.final_time:.4g}")
    except Exception as exc:  # pragma: no cover - plotting must not fail runs
        print(f"WARNING: figure rendering failed: {exc}", file=sys.stderr)


def run_scenario(cfg: ScenarioConfig, output_dir=None, make_plots: bool = True) -> RunOutputs:
    """Full pipeline for one scenario; writes every artifact atomically."""
    out_dir = Path(output_dir if output_dir is not None else cfg.output_dir)
    art = _build_artifacts(cfg, with_propagation=True)
    report = verify_run(art)
    _write_run_outputs(cfg, art, report, out_dir, make_plots)
    return RunOutputs(cfg, report, art, out_dir)


def check_scenario(cfg: ScenarioConfig, output_dir=None, make_plots: bool = True) -> RunOutputs:
    """Static diagnostics only: no time stepping, no oracle."""
    out_dir = Path(output_dir if output_dir is not None else cfg.output_dir)
    art = _build_artifacts(cfg, with_propagation=False)
    report = verify_run(art)
    _write_run_outputs(cfg, art, report, out_dir, make_plots)
    return RunOutputs(cfg, report, art, out_dir)


def _rung_config(cfg: ScenarioConfig, resolution: int, coupling: float,
                 out_dir: Path) -> ScenarioConfig:
    d = cfg.domain.dim
    res = (int(resolution),) * d
    lo, hi = cfg.domain.bounding_box
    h = float(np.max((hi - lo) / np.asarray(res)))
    dt = coupling * h
    if cfg.t_end > 0.0:
        dt = min(dt, cfg.t_end)
    propagator = dc_replace(cfg.propagator, dt=dt)
    return dc_replace(cfg, resolution=res, propagator=propagator, oracle=True,
                      snapshot_times=(), output_dir=str(out_dir / f"rung_{resolution}"))


def converge_scenario(cfg: ScenarioConfig, ladder, output_dir=None,
                      make_plots: bool = True) -> ConvergeOutputs:
    """Run the scenario on a resolution ladder with dt = c * h.

    The coupling c comes from the config (converge.dt_over_h) or defaults
    to 0.5 over a sampled sup-norm estimate of the field.  Convergence
    orders of the oracle L2 error and the Born-rule L1 error are measured
    as log-log slopes and written to the order table.
    """
    ladder = [int(r) for r in ladder]
    if len(ladder) < 2:
        raise ConfigError("convergence ladder needs at least 2 resolutions")
    if sorted(set(ladder)) != sorted(ladder) or sorted(ladder) != ladder:
        raise ConfigError("ladder resolutions must be strictly increasing")
    out_dir = Path(output_dir if output_dir is not None else cfg.output_dir)

    if cfg.dt_over_h is not None:
        coupling = cfg.dt_over_h
    else:
        coupling = 0.5 / max(cfg.field.sup_norm_estimate(), 1e-12)

    rung_cfgs = [_rung_config(cfg, r, coupling, out_dir) for r in ladder]
    workers = min(thread_count(), len(rung_cfgs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rungs = list(pool.map(lambda c: run_scenario(c, make_plots=False), rung_cfgs))
        if make_plots:
            for outputs in rungs:
                render_run_figures(outputs.artifacts, outputs.output_dir)
    else:
        rungs = [run_scenario(c, make_plots=make_plots) for c in rung_cfgs]

    rows = []
    for res, outputs in zip(ladder, rungs):
        rep = outputs.report
        lo, hi = cfg.domain.bounding_box
        h = float(np.max((hi - lo) / res))
        rows.append((res, h, outputs.config.propagator.dt,
                     rep.oracle_l2_error or 0.0, rep.born_l1_error or 0.0))

    orders = []
    for col, name in ((3, "oracle_l2"), (4, "born_l1")):
        pairs = [(row[1], row[col]) for row in rows]
        try:
            orders.append((name, measure_order(pairs)))
        except ValueError:
            orders.append((name, diagnostics.EXACT))

    out_dir.mkdir(parents=True, exist_ok=True)
    runio.write_convergence_errors_csv(out_dir / "convergence_errors.csv", rows)
    runio.write_order_table_csv(out_dir / "convergence_orders.csv", orders)
    if make_plots:
        try:
            plotting.plot_convergence(rows, orders, out_dir / "convergence.png")
        except Exception as exc:  # pragma: no cover
            print(f"WARNING: figure rendering failed: {exc}", file=sys.stderr)
    return ConvergeOutputs(cfg, rungs, rows, orders, out_dir)
