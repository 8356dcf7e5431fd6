"""
Artifact files: CSV tables, JSON reports and gnuplot-style data files.

Every file starts by naming the hash of the configuration that produced it.
Floats are written with ``CSV_SIGNIFICANT_DIGITS`` significant digits and a
``.`` decimal separator, so reruns of a seeded configuration are byte-identical.
"""

import csv
import hashlib
import io
import json
import logging
import math
from pathlib import Path

import numpy as np
from core.conf import transport_settings
from core.exceptions import RunError
from spectroscopy.noise import noise_averaged_splitting
from spectroscopy.ramsey import damped_cosine
from spectroscopy.records import NoiseModel, hyperbola

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
HASH_PREFIX = "# config_hash: "


def config_hash(config: dict) -> str:
    """Return the sha256 of the canonical JSON form of ``config``."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def format_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
        return f"{float(value):.{transport_settings.CSV_SIGNIFICANT_DIGITS}g}"
    if value is None:
        return ""
    return str(value)


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise RunError(f"cannot write {path}: {exc.strerror or exc}") from exc
    logger.info("Wrote %s", path)
    return path


def write_csv(path, columns, rows, hash_: str) -> Path:
    """Write a comma-separated table under a ``# config_hash:`` line; fields with commas are quoted."""
    buffer = io.StringIO()
    buffer.write(HASH_PREFIX + hash_ + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows([format_value(value) for value in row] for row in rows)
    return _write(Path(path), buffer.getvalue())


def read_csv(path) -> tuple[str, list[dict[str, str]]]:
    """Return (config hash, rows as dicts of strings) of a table written by ``write_csv``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise RunError(f"missing artifact {path.name} in {path.parent}") from exc
    first, _, body = text.partition("\n")
    if not first.startswith(HASH_PREFIX):
        raise RunError(f"{path} does not start with a config hash")
    return first[len(HASH_PREFIX) :], list(csv.DictReader(io.StringIO(body, newline="")))


def column(rows: list[dict[str, str]], name: str) -> np.ndarray:
    return np.array([float(row[name]) for row in rows])


def write_dat(path, columns, rows, hash_: str, parameters: dict | None = None) -> Path:
    """Write a whitespace-separated data file with commented header lines."""
    lines = [HASH_PREFIX + hash_]
    lines.extend(f"# {key}: {format_value(value)}" for key, value in (parameters or {}).items())
    lines.append("# " + " ".join(columns))
    lines.extend(" ".join(format_value(value) for value in row) for row in rows)
    return _write(Path(path), "\n".join(lines) + "\n")


def plain(value):
    """Return ``value`` with numpy scalars and arrays turned into Python numbers and lists."""
    if isinstance(value, dict):
        return {key: plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(item) for item in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_json(path, document: dict, hash_: str) -> Path:
    return _write(Path(path), json.dumps(plain({"config_hash": hash_, **document}), indent=2) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise RunError(f"missing artifact {path.name} in {path.parent}") from exc
    except json.JSONDecodeError as exc:
        raise RunError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _lz_fit_plot(run_dir: Path, manifest: dict) -> list[Path]:
    hash_, rows = read_csv(run_dir / "efficiencies.csv")
    fit = read_json(run_dir / "lz_fit.json")
    data = [(row["brf_g"], row["efficiency_sim"], row["efficiency_lz_fit"]) for row in rows]
    parameters = {
        "moment_mhz_per_g": fit["moment_mhz_per_g"],
        "moment_stderr": fit["stderr"],
        "ramp_g_per_ms": fit["ramp_speed_g_per_ms"],
        "sweep_moment_mhz_per_g": fit["dmu"],
    }
    columns = ("brf_g", "efficiency_sim", "efficiency_lz_fit")
    paths = [write_dat(run_dir / "efficiency_vs_brf.dat", columns, data, hash_, parameters)]

    _, rows = read_csv(run_dir / "moments.csv")
    moment_parameters = {
        "b0_gauss": fit["b0_gauss"],
        "b_x_g": fit["b_x_g"],
        "fitted_moment_mhz_per_g": fit["moment_mhz_per_g"],
        "closed_form_moment_mhz_per_g": fit["closed_form_moment_mhz_per_g"],
    }
    moments = [(row["b_gauss"], row["moment_mhz_per_g"]) for row in rows]
    columns = ("b_gauss", "moment_mhz_per_g")
    paths.append(write_dat(run_dir / "moment_vs_b.dat", columns, moments, hash_, moment_parameters))
    return paths


def _hyperbola_plot(run_dir: Path, manifest: dict) -> list[Path]:
    hash_, rows = read_csv(run_dir / "splittings.csv")
    report = read_json(run_dir / "fit.json")
    fields = column(rows, "b_gauss")
    splittings = column(rows, "splitting_mhz")
    ideal = report["hyperbola"]["parameters"]
    params = (ideal["delta_min_mhz"], ideal["b0_gauss"], ideal["k_mhz_per_g"])
    paths = [
        write_dat(
            run_dir / "splitting_vs_b.dat",
            ("b_gauss", "splitting_mhz", "hyperbola_fit_mhz"),
            zip(fields, splittings, hyperbola(fields, *params)),
            hash_,
            {"delta_min_mhz": params[0], "b0_gauss": params[1], "k_mhz_per_g": params[2]},
        )
    ]
    averaged = report.get("noise_averaged")
    if averaged is not None:
        noise = NoiseModel(**manifest["config"]["noise"])
        fitted = averaged["parameters"]
        params = (fitted["delta_min_mhz"], fitted["b0_gauss"], fitted["k_mhz_per_g"])
        curve = noise_averaged_splitting(fields, params, noise, method=manifest["config"]["averaging"], seed=0)
        paths.append(
            write_dat(
                run_dir / "splitting_vs_b_noise.dat",
                ("b_gauss", "splitting_mhz", "ideal_hyperbola_mhz", "noise_averaged_mhz"),
                zip(fields, splittings, hyperbola(fields, *params), np.atleast_1d(curve)),
                hash_,
                {"delta_min_mhz": params[0], "upshift_mhz": averaged["upshift_mhz"]},
            )
        )
    return paths


def _ramsey_plot(run_dir: Path, manifest: dict) -> list[Path]:
    hash_, rows = read_csv(run_dir / "ramsey.csv")
    fringe = read_json(run_dir / "fringe.json")
    details = fringe["details"]
    decay_time = details["decay_time_ms"]
    holds = column(rows, "hold_time_ms")
    fitted = damped_cosine(
        holds,
        details["amplitude"],
        1000.0 * fringe["value_mhz"],
        details["phase_rad"],
        0.0 if decay_time is None else 1.0 / decay_time,
        details["offset"],
    )
    parameters = {"fringe_khz": 1000.0 * fringe["value_mhz"], "splitting_mhz": fringe["splitting_mhz"]}
    columns = ("hold_time_ms", "remaining_fraction", "damped_cosine_fit")
    data = zip(holds, column(rows, "remaining_fraction"), fitted)
    return [write_dat(run_dir / "fringe_vs_hold.dat", columns, data, hash_, parameters)]


def _scan_plot(run_dir: Path, manifest: dict) -> list[Path]:
    hash_, rows = read_csv(run_dir / "scan.csv")
    peak = read_json(run_dir / "peak.json")
    data = zip(column(rows, "freq_mhz"), column(rows, "transfer"))
    parameters = {"peak_mhz": peak["value_mhz"], "b_gauss": peak["b_gauss"]}
    return [write_dat(run_dir / "transfer_vs_freq.dat", ("freq_mhz", "transfer"), data, hash_, parameters)]


def _simulate_plot(run_dir: Path, manifest: dict) -> list[Path]:
    hash_, rows = read_csv(run_dir / "trace.csv")
    columns = ("time_us", "B_gauss", "pop_upper_dressed", "pop_lower_dressed")
    data = [tuple(float(row[name]) for name in columns) for row in rows]
    report = read_json(run_dir / "report.json")
    return [write_dat(run_dir / "populations_vs_time.dat", columns, data, hash_, {"efficiency": report["efficiency"]})]


def _plan_plot(run_dir: Path, manifest: dict) -> list[Path]:
    hash_, rows = read_csv(run_dir / "schedule.csv")
    columns = ("time_ms", "B_gauss", "rf_amplitude_g")
    data = [tuple(float(row[name]) for name in columns) for row in rows]
    return [write_dat(run_dir / "field_vs_time.dat", columns, data, hash_)]


def _simulate_plan_plot(run_dir: Path, manifest: dict) -> list[Path]:
    hash_, rows = read_csv(run_dir / "outcomes.csv")
    data = [(row["crossing_id"], float(row["predicted"]), float(row["simulated"])) for row in rows]
    columns = ("crossing_id", "predicted", "simulated")
    return [write_dat(run_dir / "efficiency_per_crossing.dat", columns, data, hash_)]


PLOTTERS = {
    "simulate": _simulate_plot,
    "lz-fit": _lz_fit_plot,
    "scan": _scan_plot,
    "ramsey": _ramsey_plot,
    "fit-hyperbola": _hyperbola_plot,
    "plan": _plan_plot,
    "simulate-plan": _simulate_plan_plot,
}


def emit_plot_data(run_dir, *, manifest: dict | None = None) -> list[Path]:
    """Write the data files for the figures of a run and return their paths.

    The run is described by ``manifest`` (command and config), read from the run
    directory when not given.
    """
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise RunError(f"run directory {run_dir} does not exist")
    if manifest is None:
        manifest = read_json(run_dir / MANIFEST)
    command = manifest.get("command")
    if command not in PLOTTERS:
        raise RunError(f"run {run_dir} has no plot data for command {command!r}")
    paths = PLOTTERS[command](run_dir, manifest)
    logger.info("Emitted %d plot files for %s", len(paths), run_dir)
    return paths
