"""
Django command running one transport pipeline, e.g.::

    python manage.py transport scan --crossing E --at-b0
    python manage.py transport plan --from feshbach --to nu-5
    python manage.py transport plot-data runs/plan-0123456789ab
"""

import json
from pathlib import Path
from typing import Any

from core.exceptions import TransportError
from core.export import emit_plot_data, format_value
from core.runner import run
from core.serializers import DEFAULT_MANIFOLD, RunConfigSerializer
from django.core.management.base import BaseCommand, CommandError
from dynamics.atac import ABOVE, BELOW
from dynamics.integrator import FRAME_MODES
from planner.policy import ROUTINGS
from spectroscopy.noise import AVERAGING_METHODS
from spectroscopy.records import NoiseModel
from spectroscopy.resonance import PEAK_METHODS

NOISE_OPTIONS = ("gradient_g_per_mm", "cloud_diameter_mm", "fluctuation_sigma_g", "distribution")
CONFIG_OPTIONS = set(RunConfigSerializer().fields) - {"noise", "policy"}


def _common(parser) -> None:
    parser.add_argument("--manifold", default=DEFAULT_MANIFOLD, help="Manifold file or shipped fixture name.")
    parser.add_argument("--lax", action="store_true", help="Warn about unknown manifold keys instead of failing.")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--output-dir", dest="output_dir", help="Parent directory of the run directory.")
    parser.add_argument("--tolerance", type=float, help="Local error tolerance of the integrator.")
    parser.add_argument("--frame", choices=FRAME_MODES)


def _crossing(parser) -> None:
    parser.add_argument("--crossing", required=True, help="Crossing id in the manifold.")


def _drive(parser) -> None:
    parser.add_argument("--from", dest="from_level", help="Level the molecules start on.")
    parser.add_argument("--brf", type=float, help="rf amplitude in G.")
    parser.add_argument("--freq", type=float, help="rf frequency in MHz.")
    parser.add_argument("--ramp", type=float, help="Ramp speed in G/ms.")
    parser.add_argument("--margin", type=float, help="Window margin around the rf-induced crossing in G.")
    parser.add_argument("--approach", choices=(ABOVE, BELOW))
    parser.add_argument("--rise-time-us", dest="rise_time_us", type=float)
    parser.add_argument("--policy", type=Path, help="JSON file of planner policy overrides.")


def _field(parser) -> None:
    parser.add_argument("--field", dest="b_gauss", type=float, help="Bias field in G.")
    parser.add_argument("--at-b0", dest="at_b0", action="store_true", help="Measure at the crossing field.")


def _noise(parser) -> None:
    parser.add_argument("--gradient", dest="gradient_g_per_mm", type=float)
    parser.add_argument("--cloud-diameter", dest="cloud_diameter_mm", type=float)
    parser.add_argument("--fluctuation-sigma", dest="fluctuation_sigma_g", type=float)
    parser.add_argument("--distribution", choices=NoiseModel.DISTRIBUTIONS)
    parser.add_argument("--samples", type=int, help="Monte-Carlo noise samples.")


def _ramsey(parser) -> None:
    parser.add_argument("--detuning-khz", dest="detuning_khz", type=float)
    parser.add_argument("--rabi-khz", dest="rabi_khz", type=float)
    parser.add_argument("--hold-max-ms", dest="hold_max_ms", type=float)
    parser.add_argument("--points", type=int)


def _route(parser) -> None:
    parser.add_argument("--from", dest="from_level")
    parser.add_argument("--to", dest="to_level")
    parser.add_argument("--policy", type=Path, help="JSON file of planner policy overrides.")
    parser.add_argument("--routing", choices=ROUTINGS)
    parser.add_argument("--turn", dest="adiabatic_turns", action="append", help="Crossing to follow adiabatically.")
    parser.add_argument("--b-start", dest="b_start", type=float, help="Field the molecules start at in G.")
    parser.add_argument("--no-detour", dest="detour", action="store_false")


class Command(BaseCommand):
    """Django command to run transport pipelines."""

    help = "Run a transport pipeline, write its artifacts and record the run."

    def add_arguments(self, parser) -> None:
        commands = parser.add_subparsers(dest="command", required=True, metavar="command")

        simulate = commands.add_parser("simulate", help="ATAC transfer through one crossing.")
        _crossing(simulate)
        _drive(simulate)
        simulate.add_argument("--round-trip", dest="round_trip", action="store_true")

        lz_fit = commands.add_parser("lz-fit", help="Transition moment from efficiency against rf amplitude.")
        _crossing(lz_fit)
        _drive(lz_fit)
        lz_fit.add_argument("--brf-max", dest="brf_max", type=float)
        lz_fit.add_argument("--points", type=int)

        scan = commands.add_parser("scan", help="Resonant-transfer frequency scan.")
        _crossing(scan)
        _field(scan)
        _noise(scan)
        scan.add_argument("--brf", type=float)
        scan.add_argument("--freq", type=float, help="Centre of the frequency grid in MHz.")
        scan.add_argument("--pulse-ms", dest="pulse_ms", type=float)
        scan.add_argument("--span-mhz", dest="span_mhz", type=float)
        scan.add_argument("--points", type=int)
        scan.add_argument("--peak-method", dest="peak_method", choices=PEAK_METHODS)

        ramsey = commands.add_parser("ramsey", help="Ramsey fringe at one field.")
        _crossing(ramsey)
        _field(ramsey)
        _noise(ramsey)
        _ramsey(ramsey)

        fit = commands.add_parser("fit-hyperbola", help="Minimum splitting from splittings against field.")
        fit.add_argument("--crossing")
        fit.add_argument("--points-file", dest="points_file", help="CSV of b_gauss, splitting_mhz[, uncertainty_mhz].")
        fit.add_argument("--fields", dest="b_values", type=float, nargs="+")
        fit.add_argument("--averaging", choices=AVERAGING_METHODS)
        _noise(fit)
        _ramsey(fit)

        plan = commands.add_parser("plan", help="Compile a transport plan between two levels.")
        _route(plan)

        simulate_plan = commands.add_parser("simulate-plan", help="Simulate every action of a plan.")
        _route(simulate_plan)
        simulate_plan.add_argument("--plan", dest="plan_file", help="Plan file written by the plan command.")
        simulate_plan.add_argument("--workers", type=int)

        plot = commands.add_parser("plot-data", help="Re-emit the plot data files of a run directory.")
        plot.add_argument("run_dir", type=Path)

        for subparser in commands.choices.values():
            if subparser is not plot:
                _common(subparser)

    def _config(self, options: dict) -> dict:
        config = {key: value for key, value in options.items() if key in CONFIG_OPTIONS and value is not None}
        noise = {key: options[key] for key in NOISE_OPTIONS if options.get(key) is not None}
        if noise:
            config["noise"] = noise
        if options.get("policy") is not None:
            try:
                config["policy"] = json.loads(options["policy"].read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise CommandError(f"cannot read policy {options['policy']}: {exc}") from exc
        return config

    def handle(self, *args: Any, **options: Any) -> str | None:
        """Entrypoint for command."""
        try:
            if options["command"] == "plot-data":
                paths = emit_plot_data(options["run_dir"])
                for path in paths:
                    self.stdout.write(str(path))
                self.stdout.write(self.style.SUCCESS(f"Wrote {len(paths)} plot files."))
                return None
            result = run(self._config(options))
        except TransportError as exc:
            raise CommandError(str(exc)) from exc

        for key, value in result.summary.items():
            if isinstance(value, (list, tuple)):
                value = ", ".join(format_value(item) for item in value)
            elif isinstance(value, dict):
                value = ", ".join(f"{name}={format_value(item)}" for name, item in value.items())
            self.stdout.write(f"{key}: {format_value(value)}")
        if result.exit_status:
            self.stderr.write(self.style.ERROR(f"Run {result.config_hash[:12]} failed, see {result.run_dir}"))
            raise CommandError(result.error, returncode=result.exit_status)
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(result.artifacts)} files to {result.run_dir}"))
        return None
