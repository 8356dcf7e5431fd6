"""
Run orchestration for the ``transport`` command.

``run(config)`` validates a configuration, executes the named pipeline into
``<output_dir>/<command>-<hash12>/``, emits the plot data, writes
``manifest.json`` and records the run in the registry.
"""

import csv
import logging
import math
import platform
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import django
import numpy as np
import rest_framework
import scipy
from core import export
from core.conf import transport_settings
from core.exceptions import RunError, TransportError
from core.models import RunRecord
from core.serializers import RunConfigSerializer
from crossing.frame import effective_sweep_moment, rabi_frequency, transition_moment
from django.db import DatabaseError
from django.utils import timezone
from dynamics.atac import atac_round_trip, atac_transfer, atac_window
from dynamics.integrator import RWA, TRACE_COLUMNS
from dynamics.landau_zener import extract_lz_fit, landau_zener_exponent
from dynamics.schedule import SCHEDULE_COLUMNS, schedule_rows
from manifold.levels import AvoidedCrossing, LevelManifold
from manifold.loader import fixture_path, flatten_errors, load_manifold
from manifold.units import TWO_PI
from planner.documents import load_plan, save_plan
from planner.plan import atac_success, crossing_frame, detour_check, plan_path, start_branch
from planner.policy import TransportPolicy
from planner.serializers import ActionOutcomeSerializer
from planner.simulate import simulate_plan
from spectroscopy.fitting import hyperbola_fit, ramsey_minimum_estimate
from spectroscopy.noise import analytic_upshift, sigma_eff
from spectroscopy.ramsey import fringe_frequency, simulate_ramsey
from spectroscopy.records import RAMSEY_COLUMNS, SCAN_COLUMNS, SPLITTING_COLUMNS, NoiseModel
from spectroscopy.resonance import peak_frequency, pi_pulse_length_ms, simulate_resonance_scan
from spectroscopy.serializers import FitResultSerializer, FrequencyEstimateSerializer

logger = logging.getLogger(__name__)

# rf amplitude of a resonance scan, as detuning modulation b_rf * |mu2 - mu1| in MHz
SCAN_MODULATION_MHZ = 5e-4
LZ_FIT_POINTS = 9
# largest Landau-Zener exponent of the default amplitude sweep
LZ_FIT_MAX_EXPONENT = 4.0
SCAN_POINTS = 201
RAMSEY_POINTS = 101
RAMSEY_PERIODS = 5.0
HYPERBOLA_POINTS = 9
# default hyperbola fields span this many Omega / |mu2 - mu1| on each side of B0
HYPERBOLA_HALF_WIDTHS = 3.0
MOMENT_POINTS = 201
# the moment curve of an lz-fit run spans at least this many Omega / |mu2 - mu1| on each side of B0
MOMENT_HALF_WIDTHS = 6.0


@dataclass(frozen=True, eq=False)
class RunResult:
    """Outcome of one run; ``exit_status`` is what the command line returns."""

    command: str
    status: str
    config_hash: str
    run_dir: Path
    summary: dict = field(default_factory=dict)
    artifacts: tuple[Path, ...] = ()
    error: str = ""
    record: RunRecord | None = None

    @property
    def exit_status(self) -> int:
        return 0 if self.status == RunRecord.Status.SUCCEEDED else 1


def validate_config(data: dict) -> dict:
    """Return the validated configuration with every default filled in."""
    serializer = RunConfigSerializer(data=data, context={"where": "run configuration"})
    if not serializer.is_valid():
        raise RunError("invalid configuration: " + "; ".join(flatten_errors(serializer.errors)))
    return serializer.validated_data


def resolve_path(name: str) -> Path:
    """Return ``name`` as a path, falling back to the shipped fixtures for bare file names."""
    path = Path(name)
    if path.exists() or path.is_absolute() or len(path.parts) > 1:
        return path
    fixture = fixture_path(name)
    return fixture if fixture.exists() else path


def run_directory(config: dict, hash_: str) -> Path:
    root = Path(config["output_dir"] or transport_settings.OUTPUT_DIR)
    return root / f"{config['command']}-{hash_[:12]}"


def versions() -> dict:
    return {
        "python": platform.python_version(),
        "django": django.get_version(),
        "djangorestframework": rest_framework.VERSION,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


class RunContext:
    """Inputs and artifact bookkeeping of the pipeline being run."""

    def __init__(self, config: dict, hash_: str, run_dir: Path) -> None:
        self.config = config
        self.hash = hash_
        self.run_dir = run_dir
        self.artifacts: list[Path] = []

    @cached_property
    def manifold(self) -> LevelManifold:
        return load_manifold(resolve_path(self.config["manifold"]), lax=self.config["lax"])

    @cached_property
    def policy(self) -> TransportPolicy:
        overrides = dict(self.config["policy"])
        if self.config["routing"]:
            overrides["routing"] = self.config["routing"]
        if self.config["adiabatic_turns"]:
            overrides["adiabatic_turns"] = self.config["adiabatic_turns"]
        return TransportPolicy.from_settings(**overrides)

    @property
    def tol(self) -> float:
        return self.config["tolerance"] or transport_settings.DEFAULT_TOLERANCE

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(**self.config["noise"])

    def crossing(self) -> AvoidedCrossing:
        try:
            return self.manifold.crossing(self.config["crossing"])
        except KeyError as exc:
            raise RunError(f"{exc.args[0]} in {self.config['manifold']}") from None

    def field(self, crossing: AvoidedCrossing) -> float:
        """Return the requested field, B0 by default."""
        b_gauss = self.config["b_gauss"]
        return crossing.crossing_field_b0 if self.config["at_b0"] or b_gauss is None else b_gauss

    def write_csv(self, name: str, columns, rows) -> Path:
        path = export.write_csv(self.run_dir / name, columns, rows, self.hash)
        self.artifacts.append(path)
        return path

    def write_json(self, name: str, document: dict) -> Path:
        path = export.write_json(self.run_dir / name, document, self.hash)
        self.artifacts.append(path)
        return path


def _atac_setup(ctx: RunContext) -> dict:
    """Resolve the drive, window and start branch of an ATAC command from the config and policy."""
    config, policy = ctx.config, ctx.policy
    crossing = ctx.crossing()
    from_level = config["from_level"] or crossing.level_lower.id
    if not crossing.involves(from_level):
        raise RunError(f"level {from_level!r} does not take part in crossing {crossing.id}")
    frame = crossing_frame(crossing)
    f_rf = config["freq"] or policy.blue_detuned_frequency(crossing.coupling_omega)
    b_from, b_to, b_x = atac_window(frame, f_rf, config["margin"] or policy.window_margin_g, config["approach"])
    return {
        "crossing": crossing,
        "frame": frame,
        "from_level": from_level,
        "branch": start_branch(crossing, from_level, config["approach"]),
        "b_rf": policy.b_rf_g if config["brf"] is None else config["brf"],
        "f_rf": f_rf,
        "ramp": config["ramp"] or policy.atac_ramp_g_per_ms,
        "rise_time_us": policy.rise_time_us if config["rise_time_us"] is None else config["rise_time_us"],
        "b_from": b_from,
        "b_to": b_to,
        "b_x": b_x,
    }


def _simulate(ctx: RunContext) -> dict:
    setup = _atac_setup(ctx)
    frame, b_rf, f_rf, ramp = setup["frame"], setup["b_rf"], setup["f_rf"], setup["ramp"]
    options = {
        "start_branch": setup["branch"],
        "rise_time_us": setup["rise_time_us"],
        "frame_mode": ctx.config["frame"],
        "tol": ctx.tol,
    }
    recovered = None
    if ctx.config["round_trip"]:
        round_trip = atac_round_trip(frame, b_rf, f_rf, setup["b_from"], setup["b_to"], ramp, **options)
        forward, recovered = round_trip.forward, round_trip.recovered
    else:
        forward = atac_transfer(frame, b_rf, f_rf, setup["b_from"], setup["b_to"], ramp, **options)
    ctx.write_csv("trace.csv", TRACE_COLUMNS, forward.trace.rows())
    report = {
        "crossing": setup["crossing"].id,
        "from_level": setup["from_level"],
        "start_branch": setup["branch"],
        "b_rf_g": b_rf,
        "f_rf_mhz": f_rf,
        "ramp_g_per_ms": ramp,
        "b_from_g": setup["b_from"],
        "b_to_g": setup["b_to"],
        "b_x_g": setup["b_x"],
        "rabi_frequency_rad_per_us": forward.rabi_frequency,
        "efficiency": forward.efficiency,
        "predicted_lz": atac_success(frame, b_rf, f_rf, setup["b_x"], ramp),
    }
    if recovered is not None:
        report["recovered"] = recovered
    ctx.write_json("report.json", report)
    return report


def _lz_fit(ctx: RunContext) -> dict:
    setup = _atac_setup(ctx)
    frame, f_rf, ramp = setup["frame"], setup["f_rf"], setup["ramp"]
    dmu = effective_sweep_moment(frame, f_rf)
    brf_max = ctx.config["brf_max"]
    if brf_max is None:
        per_unit = landau_zener_exponent(rabi_frequency(frame.at(setup["b_x"]), 1.0), ramp, dmu)
        brf_max = math.sqrt(LZ_FIT_MAX_EXPONENT / per_unit)
    points = ctx.config["points"] or LZ_FIT_POINTS
    amplitudes = np.linspace(brf_max / points, brf_max, points)
    efficiencies = [
        atac_transfer(
            frame,
            float(b_rf),
            f_rf,
            setup["b_from"],
            setup["b_to"],
            ramp,
            start_branch=setup["branch"],
            rise_time_us=setup["rise_time_us"],
            frame_mode=ctx.config["frame"],
            tol=ctx.tol,
        ).efficiency
        for b_rf in amplitudes
    ]
    fit = extract_lz_fit(amplitudes, efficiencies, ramp, dmu)
    ctx.write_csv(
        "efficiencies.csv",
        ("brf_g", "efficiency_sim", "efficiency_lz_fit"),
        zip(amplitudes, efficiencies, fit.predict(amplitudes)),
    )
    half_width = max(MOMENT_HALF_WIDTHS * frame.omega / abs(frame.delta_mu), 1.5 * abs(setup["b_x"] - frame.b0))
    fields = np.linspace(frame.b0 - half_width, frame.b0 + half_width, MOMENT_POINTS)
    moments = np.abs(transition_moment(frame.at(fields)))
    ctx.write_csv("moments.csv", ("b_gauss", "moment_mhz_per_g"), zip(fields, moments))
    report = {
        "crossing": setup["crossing"].id,
        "f_rf_mhz": f_rf,
        "moment_mhz_per_g": fit.moment,
        "stderr": fit.stderr,
        "closed_form_moment_mhz_per_g": abs(transition_moment(frame.at(setup["b_x"]))),
        "b0_gauss": frame.b0,
        "b_x_g": setup["b_x"],
        "residual_norm": fit.residual_norm,
        "n_points": fit.n_points,
        "ramp_speed_g_per_ms": fit.ramp_speed_g_per_ms,
        "dmu": fit.dmu,
    }
    ctx.write_json("lz_fit.json", report)
    return report


def _scan(ctx: RunContext) -> dict:
    config = ctx.config
    crossing = ctx.crossing()
    frame = crossing_frame(crossing)
    b_gauss = ctx.field(crossing)
    b_rf = config["brf"] if config["brf"] is not None else SCAN_MODULATION_MHZ / abs(frame.delta_mu)
    pulse_ms = config["pulse_ms"] or pi_pulse_length_ms(frame, b_gauss, b_rf)
    splitting = frame.splitting(b_gauss)
    center = config["freq"] or splitting
    grid = np.linspace(center - config["span_mhz"], center + config["span_mhz"], config["points"] or SCAN_POINTS)
    scan = simulate_resonance_scan(frame, b_gauss, pulse_ms, b_rf, grid, noise=ctx.noise)
    peak = peak_frequency(scan, config["peak_method"])
    ctx.write_csv("scan.csv", SCAN_COLUMNS, scan.rows())
    report = {
        **FrequencyEstimateSerializer(peak).data,
        "crossing": crossing.id,
        "b_gauss": b_gauss,
        "pulse_ms": pulse_ms,
        "b_rf_g": b_rf,
        "model_splitting_mhz": splitting,
    }
    ctx.write_json("peak.json", report)
    return {"crossing": crossing.id, "b_gauss": b_gauss, "peak_mhz": peak.value, "uncertainty_mhz": peak.uncertainty}


def _ramsey_record(ctx: RunContext, frame, b_gauss: float, seed: int, *, fit: bool = True):
    """Simulate one Ramsey record with the configured detuning, Rabi frequency and holds."""
    config = ctx.config
    detuning_khz = config["detuning_khz"]
    hold_max_ms = config["hold_max_ms"] or RAMSEY_PERIODS / abs(detuning_khz)
    holds = np.linspace(0.0, hold_max_ms, config["points"] or RAMSEY_POINTS)
    return simulate_ramsey(
        frame,
        b_gauss,
        frame.splitting(b_gauss) + detuning_khz / 1000.0,
        TWO_PI * config["rabi_khz"] / 1000.0,
        holds,
        ctx.noise,
        seed,
        n_samples=config["samples"],
        fit=fit,
    )


def _ramsey(ctx: RunContext) -> dict:
    crossing = ctx.crossing()
    frame = crossing_frame(crossing)
    b_gauss = ctx.field(crossing)
    record = _ramsey_record(ctx, frame, b_gauss, ctx.config["seed"], fit=False)
    estimate = fringe_frequency(record)
    record = replace(record, fitted_fringe_frequency_mhz=estimate.value, fringe_uncertainty_mhz=estimate.uncertainty)
    ctx.write_csv("ramsey.csv", RAMSEY_COLUMNS, record.rows())
    report = {
        **FrequencyEstimateSerializer(estimate).data,
        "crossing": crossing.id,
        "b_gauss": b_gauss,
        "f_rf_mhz": record.f_rf_mhz,
        "detuning_sign": record.detuning_sign,
        "splitting_mhz": record.splitting(),
        "model_splitting_mhz": frame.splitting(b_gauss),
    }
    ctx.write_json("fringe.json", report)
    return {
        "crossing": crossing.id,
        "b_gauss": b_gauss,
        "fringe_khz": 1000.0 * estimate.value,
        "splitting_mhz": record.splitting(),
    }


def read_points(path: Path) -> list[tuple[float, float, float]]:
    """Read (field, splitting, uncertainty) rows; ``#`` lines are skipped and the uncertainty is optional."""
    try:
        lines = [line for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]
    except OSError as exc:
        raise RunError(f"cannot read {path}: {exc.strerror or exc}") from exc
    reader = csv.DictReader(lines)
    if not {"b_gauss", "splitting_mhz"} <= set(reader.fieldnames or ()):
        raise RunError(f"{path} needs b_gauss and splitting_mhz columns")
    try:
        return [
            (float(row["b_gauss"]), float(row["splitting_mhz"]), float(row.get("uncertainty_mhz") or 0.0))
            for row in reader
        ]
    except ValueError as exc:
        raise RunError(f"{path}: {exc}") from exc


def _simulated_points(ctx: RunContext) -> list[tuple[float, float, float]]:
    crossing = ctx.crossing()
    frame = crossing_frame(crossing)
    fields = ctx.config["b_values"]
    if not fields:
        half_width = HYPERBOLA_HALF_WIDTHS * frame.omega / abs(frame.delta_mu)
        fields = frame.b0 + np.linspace(-half_width, half_width, ctx.config["points"] or HYPERBOLA_POINTS)
    points = []
    for index, b_gauss in enumerate(fields):
        record = _ramsey_record(ctx, frame, float(b_gauss), ctx.config["seed"] + index)
        points.append((record.b_gauss, record.splitting(), record.fringe_uncertainty_mhz))
    return points


def _fit_hyperbola(ctx: RunContext) -> dict:
    if ctx.config["points_file"]:
        points = read_points(resolve_path(ctx.config["points_file"]))
    else:
        points = _simulated_points(ctx)
    ctx.write_csv("splittings.csv", SPLITTING_COLUMNS, points)
    pairs = [(b_gauss, splitting) for b_gauss, splitting, _ in points]
    fit = hyperbola_fit(pairs)
    report = {"hyperbola": FitResultSerializer(fit).data}
    summary = {"delta_min_mhz": fit.delta_min, "b0_gauss": fit.b0, "k_mhz_per_g": fit.k, "flags": list(fit.flags)}
    noise = ctx.noise
    if not noise.is_quiet:
        averaged = ramsey_minimum_estimate(pairs, noise, method=ctx.config["averaging"])
        report["noise_averaged"] = FitResultSerializer(averaged).data
        report["sigma_eff_g"] = sigma_eff(noise)
        report["analytic_upshift_mhz"] = analytic_upshift(averaged.k, averaged.delta_min, noise)
        summary.update(
            {
                "noise_averaged_delta_min_mhz": averaged.delta_min,
                "upshift_khz": 1000.0 * averaged.upshift,
                "flags": list(averaged.flags),
            }
        )
    ctx.write_json("fit.json", report)
    return summary


def _plan_from_config(ctx: RunContext):
    plan = plan_path(
        ctx.manifold, ctx.config["from_level"], ctx.config["to_level"], ctx.policy, b_start=ctx.config["b_start"]
    )
    if ctx.config["detour"]:
        plan = detour_check(ctx.manifold, plan, ctx.policy)
    return plan


def _plan(ctx: RunContext) -> dict:
    plan = _plan_from_config(ctx)
    ctx.artifacts.append(save_plan(plan, ctx.run_dir / "plan.json", config_hash=ctx.hash))
    ctx.write_csv("schedule.csv", SCHEDULE_COLUMNS, schedule_rows(plan.schedule))
    breakdown_columns = ("crossing_id", "kind", "from_level", "to_level", "window_ms", "predicted_success")
    ctx.write_csv(
        "breakdown.csv",
        breakdown_columns,
        ([entry[name] for name in breakdown_columns] for entry in plan.breakdown),
    )
    return {
        "route": list(plan.route),
        "actions": len(plan.actions),
        "kinds": dict(sorted(Counter(action.kind for action in plan.actions).items())),
        "detoured": [action.crossing_id for action in plan.actions if action.detoured],
        "total_duration_ms": plan.total_duration_ms,
        "survival": plan.survival,
    }


def _simulate_plan(ctx: RunContext) -> dict:
    if ctx.config["plan_file"]:
        plan = load_plan(resolve_path(ctx.config["plan_file"]))
    else:
        plan = _plan_from_config(ctx)
    simulation = simulate_plan(
        ctx.manifold,
        plan,
        ctx.tol,
        frame_mode=ctx.config["frame"] or RWA,
        max_workers=ctx.config["workers"],
    )
    outcomes = ActionOutcomeSerializer(simulation.outcomes, many=True).data
    columns = ("crossing_id", "kind", "predicted", "simulated", "deviation", "flagged")
    ctx.write_csv("outcomes.csv", columns, ([row[name] for name in columns] for row in outcomes))
    report = {
        "outcomes": outcomes,
        "duration_ms": simulation.duration_ms,
        "lifetime_factor": simulation.lifetime_factor,
        "total": simulation.total,
        "flagged": simulation.flagged,
    }
    ctx.write_json("report.json", report)
    return {"actions": len(outcomes), "total": simulation.total, "flagged": simulation.flagged}


PIPELINES = {
    RunRecord.Command.SIMULATE: _simulate,
    RunRecord.Command.LZ_FIT: _lz_fit,
    RunRecord.Command.SCAN: _scan,
    RunRecord.Command.RAMSEY: _ramsey,
    RunRecord.Command.FIT_HYPERBOLA: _fit_hyperbola,
    RunRecord.Command.PLAN: _plan,
    RunRecord.Command.SIMULATE_PLAN: _simulate_plan,
}


def _record(config: dict, hash_: str, run_dir: Path, status: str, summary: dict, error: str, wall_time: float):
    try:
        return RunRecord.objects.create(
            command=config["command"],
            config_hash=hash_,
            config=config,
            seed=config["seed"],
            status=status,
            output_dir=str(run_dir),
            summary=summary,
            error=error,
            wall_time_s=wall_time,
        )
    except DatabaseError as exc:
        logger.warning("Run registry unavailable, run %s not recorded: %s", hash_[:12], exc)
        return None


def run(data: dict) -> RunResult:
    """Execute one pipeline and return its result.

    Module errors raised by the pipeline do not propagate: the run is recorded as
    failed with the module-qualified message. An invalid configuration raises
    ``RunError`` before anything is written.
    """
    config = export.plain(dict(validate_config(data)))
    command = config["command"]
    hash_ = export.config_hash({key: value for key, value in config.items() if key != "output_dir"})
    run_dir = run_directory(config, hash_)
    ctx = RunContext(config, hash_, run_dir)
    started_at = timezone.now()
    start = time.perf_counter()
    logger.info("Starting %s run %s in %s", command, hash_[:12], run_dir)

    summary, error = {}, ""
    try:
        summary = export.plain(PIPELINES[command](ctx))
        ctx.artifacts.extend(export.emit_plot_data(run_dir, manifest={"command": command, "config": config}))
        status = RunRecord.Status.SUCCEEDED
    except TransportError as exc:
        error, status = str(exc), RunRecord.Status.FAILED
        logger.error("Run %s failed: %s", hash_[:12], error)

    wall_time = time.perf_counter() - start
    manifest = {
        "command": command,
        "config": config,
        "seed": config["seed"],
        "status": status,
        "versions": versions(),
        "started_at": started_at.isoformat(),
        "finished_at": timezone.now().isoformat(),
        "wall_time_s": wall_time,
        "artifacts": sorted(path.name for path in ctx.artifacts),
        "summary": summary,
        "error": error,
    }
    try:
        export.write_json(run_dir / export.MANIFEST, manifest, hash_)
    except RunError as exc:
        if status == RunRecord.Status.SUCCEEDED:
            error, status = str(exc), RunRecord.Status.FAILED
        logger.error("Run %s has no manifest: %s", hash_[:12], exc)

    record = _record(config, hash_, run_dir, status, summary, error, wall_time)
    if status == RunRecord.Status.SUCCEEDED:
        logger.info("Finished %s run %s in %.3g s", command, hash_[:12], wall_time)
    return RunResult(
        command=command,
        status=status,
        config_hash=hash_,
        run_dir=run_dir,
        summary=summary,
        artifacts=tuple(ctx.artifacts),
        error=error,
        record=record,
    )
