"""
Handlers for the ``run`` and ``diagnose`` subcommands.

Each handler validates its flags, loads the system and scenario, runs the
simulation(s) and writes its output files. Unstable outcomes are results:
the handler returns 0 whenever the simulations completed.
"""

import json
import logging
import time
from argparse import Namespace
from dataclasses import replace
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Tuple

from ..config import config
from ..diagnose.report import diagnose
from ..exceptions import SpecError
from ..netmodel.parser import load_scenario, load_system, scenario_from_dict, serialize_scenario
from ..netmodel.specs import ScenarioSpec, SystemSpec
from ..sim.scenario import MODELS, run_scenario
from ..sim.settings import SimConfig
from ..sim.trajectory import Trajectory
from ..solvers.equilibrium import InitialPoint, initialize_equilibrium
from ..utils.export import write_csv, write_json

logger = logging.getLogger(__name__)

_OVERRIDES = {"t_end": "--t-end", "qss_start": "--qss-start"}


def _sim_config(args: Namespace) -> SimConfig:
    cfg = SimConfig()
    step = getattr(args, "step", None)
    if step is not None:
        if not step > 0:
            raise SpecError("step must be positive", field="--step")
        cfg = cfg.with_step(step)
    horizon = getattr(args, "audit_horizon", None)
    if horizon is not None:
        if not horizon > 0:
            raise SpecError("audit horizon must be positive", field="--audit-horizon")
        cfg = replace(cfg, transient_t_max=horizon)
    return cfg


def _scenario(args: Namespace, sys: SystemSpec) -> ScenarioSpec:
    scenario = load_scenario(args.scenario, sys)
    t_end = getattr(args, "t_end", None)
    qss_start = getattr(args, "qss_start", None)
    if t_end is None and qss_start is None:
        return scenario

    raw = json.loads(serialize_scenario(scenario))
    if t_end is not None:
        raw["t_end"] = t_end
        # events beyond the shortened horizon never fire
        raw["events"] = [ev for ev in raw["events"] if ev["time"] <= t_end]
    if qss_start is not None:
        raw["qss_start"] = qss_start
    try:
        return scenario_from_dict(raw, sys)
    except SpecError as e:
        raise SpecError(str(e), field=_OVERRIDES.get(e.field or "", e.field)) from e


def _prepare(args: Namespace) -> Tuple[SimConfig, InitialPoint, ScenarioSpec]:
    cfg = _sim_config(args)
    sys = load_system(args.system)
    scenario = _scenario(args, sys)
    logger.info(
        "Loaded %s (%d buses) and %s (%d events, t_end=%g)",
        args.system,
        len(sys.buses),
        args.scenario,
        len(scenario.events),
        scenario.t_end,
    )
    return cfg, initialize_equilibrium(sys, cfg.one_shot_newton), scenario


def _out_dir(args: Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_summary(traj: Trajectory) -> dict:
    return {
        "termination": traj.termination.to_dict(),
        "samples": len(traj.samples),
        "events": [{"t": t, "event": desc} for t, desc in traj.events],
        "transitions": [{"t": tr.t, "description": tr.description} for tr in traj.transitions],
    }


def cmd_run(args: Namespace) -> int:
    """Run the selected model(s); writes <model>.csv, run.json and timings.json."""
    cfg, start, scenario = _prepare(args)
    models = MODELS if args.model == "both" else (args.model,)
    out = _out_dir(args)

    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, min(len(models), config.MAX_WORKERS))) as pool:
        runs = [pool.submit(run_scenario, start, scenario, cfg, name) for name in models]
        trajectories: Dict[str, Trajectory] = {
            name: run.result() for name, run in zip(models, runs)
        }
    elapsed = time.perf_counter() - started

    # file writes are serialized
    for name, traj in trajectories.items():
        write_csv(out / f"{name}.csv", traj)
        logger.info("%s: %s at t=%g", name, traj.termination.kind.value, traj.termination.t)

    write_json(
        out / "run.json",
        {
            "schema": config.SCHEMA_VERSION,
            "models": list(models),
            "t_end": scenario.t_end,
            "qss_start": scenario.qss_start,
            "step": {"h": cfg.h, "h_transient": cfg.h_transient},
            "runs": {name: _run_summary(traj) for name, traj in trajectories.items()},
        },
    )
    write_json(
        out / "timings.json",
        {"total_s": elapsed, **{f"{name}_s": t.wall_time for name, t in trajectories.items()}},
    )
    return 0


def cmd_diagnose(args: Namespace) -> int:
    """Run both models and the audit; writes diagnosis.json and timings.json."""
    cfg, start, scenario = _prepare(args)
    out = _out_dir(args)

    started = time.perf_counter()
    report = diagnose(start, scenario, cfg, frozen_audit=args.frozen_audit)
    elapsed = time.perf_counter() - started

    write_json(out / "diagnosis.json", report.to_dict())
    write_json(out / "timings.json", {"total_s": elapsed})
    print(report.verdict.value)
    return 0
