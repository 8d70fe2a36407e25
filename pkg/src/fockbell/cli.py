"""Command-line front end.

Every command that writes files also writes ``<out>.manifest.json`` holding the
resolved configuration and command parameters; ``fockbell replay`` re-runs a
manifest and rewrites the same bytes.

Exit codes: 0 success, 2 configuration error, 3 numerical or truncation error.
"""

from __future__ import annotations

import argparse
import cmath
import configparser
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import bell_verdict, fit_fringe, fit_fringe_rates, subtract_background
from .closed_form import (
    CircuitParams,
    d12_closed,
    d1_closed,
    d2_closed,
    p_coincidence_closed,
    p_false_closed,
    p_total_closed,
)
from .detection import dominant_qubit_vector, effective_projection, projection_fidelity
from .errors import ConfigurationError, DegenerateParameterWarning, FitError, OverSubtractionError, VisibilityError
from .experiment import (
    Backgrounds,
    ExperimentConfig,
    PhaseGrid,
    Source,
    default_config,
    matched_gamma,
    run_classical_control,
    run_sweep,
)
from .fock import Mode
from .montecarlo import sample_counts

SWEEP_HEADER = ("phase_deg", "p_ideal", "p_false", "p_total", "rate_hz")
COUNTS_HEADER = ("phase_deg", "duration_s", "coincidences", "singles_1", "singles_2")
CLOSED_FORM_HEADER = ("r", "alpha_mag", "delta_deg", "d1", "d2", "d12", "p_coincidence", "p_false", "p_total")
GRID_R = (0.02, 0.05, 0.1, 0.2)
GRID_ALPHA = (0.5, 1.0, 2.0, 5.0)
GRID_DELTA_DEG = (0.0, 45.0, 90.0, 135.0, 180.0)

PROB_FMT = "{:.11e}"
PHASE_FMT = "{:.6f}"


# --- configuration -----------------------------------------------------------

def config_to_dict(config: ExperimentConfig) -> dict:
    """Plain-data view of a configuration (angles in degrees)."""
    c, s, b, src = config.circuit, config.sweep, config.backgrounds, config.source
    return {
        "circuit": {"r": c.r, "alpha_mag": c.alpha_mag, "eta": c.eta},
        "sweep": {
            "phase_start_deg": math.degrees(s.start),
            "phase_end_deg": math.degrees(s.end),
            "steps": s.steps,
        },
        "backgrounds": {
            "lo_lo_rate": b.lo_lo_rate,
            "pair_pair_rate": b.pair_pair_rate,
            "signal_rate_scale": b.signal_rate_scale,
        },
        "source": {
            "kind": src.kind,
            "gamma_mag": abs(src.gamma),
            "gamma_phase_deg": math.degrees(math.atan2(src.gamma.imag, src.gamma.real)),
        },
        "run": {
            "seed": int(config.seed),
            "engine": config.engine,
            "duration_per_point": config.duration_per_point,
            "waveplate_phase_deg": math.degrees(config.waveplate_phase),
            "workers": config.workers,
            "cutoffs": ", ".join(f"{m.arm}.{m.channel}={n}" for m, n in config.cutoff_override),
        },
    }


def _parse_cutoffs(text: str) -> tuple:
    out = []
    for item in filter(None, (x.strip() for x in text.split(","))):
        if "=" not in item:
            raise ConfigurationError(f"cutoff entry {item!r} must look like ARM.CHANNEL=N")
        name, value = item.split("=", 1)
        out.append((Mode.parse(name.strip()), int(value)))
    return tuple(out)


def config_from_dict(data: dict) -> ExperimentConfig:
    c, s, b, src, run = (data[k] for k in ("circuit", "sweep", "backgrounds", "source", "run"))
    gamma = cmath.rect(float(src["gamma_mag"]), math.radians(float(src["gamma_phase_deg"])))
    return ExperimentConfig(
        circuit=CircuitParams.from_r(float(c["r"]), float(c["alpha_mag"]), eta=float(c["eta"])),
        engine=str(run["engine"]).replace("-", "_"),
        sweep=PhaseGrid.degrees(float(s["phase_start_deg"]), float(s["phase_end_deg"]), int(s["steps"])),
        backgrounds=Backgrounds(float(b["lo_lo_rate"]), float(b["pair_pair_rate"]),
                                float(b["signal_rate_scale"])),
        source=Source(str(src["kind"]), gamma),
        seed=int(run["seed"]),
        cutoff_override=_parse_cutoffs(str(run.get("cutoffs", ""))),
        duration_per_point=float(run["duration_per_point"]),
        waveplate_phase=math.radians(float(run["waveplate_phase_deg"])),
        workers=int(run["workers"]),
    )


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for section, values in config_to_dict(config).items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in values.items())
        lines.append("")
    return "\n".join(lines)


def _line_of(path: str, section: str, key: str):
    current = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and line.split("=", 1)[0].strip() == key:
            return lineno
    return None


def load_config(path: str | None) -> dict:
    """Defaults overlaid with the values from an INI-style file."""
    data = config_to_dict(default_config())
    if path is None:
        return data
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    for section in parser.sections():
        if section not in data:
            raise ConfigurationError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in data[section]:
                where = _line_of(path, section, key)
                raise ConfigurationError(f"{path}:{where}: unknown key {section}.{key}")
            default = data[section][key]
            try:
                data[section][key] = type(default)(raw) if not isinstance(default, str) else raw
            except ValueError:
                where = _line_of(path, section, key)
                raise ConfigurationError(
                    f"{path}:{where}: {section}.{key} = {raw!r} is not a valid {type(default).__name__}"
                ) from None
    return data


def _apply_overrides(data: dict, args) -> dict:
    mapping = {
        "r": ("circuit", "r"), "alpha_mag": ("circuit", "alpha_mag"), "eta": ("circuit", "eta"),
        "phase_start": ("sweep", "phase_start_deg"), "phase_end": ("sweep", "phase_end_deg"),
        "steps": ("sweep", "steps"), "seed": ("run", "seed"), "engine": ("run", "engine"),
        "duration": ("run", "duration_per_point"), "workers": ("run", "workers"),
        "cutoffs": ("run", "cutoffs"),
    }
    for attr, (section, key) in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            data[section][key] = value
    return data


# --- output helpers ----------------------------------------------------------

def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def format_sweep_csv(sweep) -> str:
    rows = [",".join(SWEEP_HEADER)]
    for i in range(len(sweep)):
        rows.append(",".join([
            PHASE_FMT.format(math.degrees(sweep.phases[i])),
            PROB_FMT.format(sweep.p_ideal[i]),
            PROB_FMT.format(sweep.p_false[i]),
            PROB_FMT.format(sweep.p_total[i]),
            PROB_FMT.format(sweep.rates[i]),
        ]))
    return "\n".join(rows) + "\n"


def format_counts_csv(records) -> str:
    rows = [",".join(COUNTS_HEADER)]
    for rec in records:
        rows.append(f"{PHASE_FMT.format(math.degrees(rec.phase))},{PHASE_FMT.format(rec.duration)},"
                    f"{rec.coincidences},{rec.singles_1},{rec.singles_2}")
    return "\n".join(rows) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _fit_summary(fit, flat_rate: float) -> list[str]:
    lines = [
        f"raw visibility: {_fmt(fit.visibility)} +- {_fmt(fit.visibility_err)}"
        f"  (phi0 {math.degrees(fit.phase_zero):.3f} deg, chi2/dof {fit.chi2_per_dof:.4g})",
        f"raw verdict: {bell_verdict(fit).value}",
    ]
    if flat_rate > 0:
        try:
            corr = subtract_background(fit, flat_rate)
        except OverSubtractionError as exc:
            lines.append(f"corrected visibility: n/a ({exc})")
        else:
            lines.append(f"corrected visibility: {_fmt(corr.visibility)} +- {_fmt(corr.visibility_err)}")
            lines.append(f"corrected verdict: {bell_verdict(corr).value}")
    return lines


# --- commands ----------------------------------------------------------------
# Each takes (config, params, out) and returns (written paths, summary lines, stdout csv or None).

def _out_path(out, default: str) -> Path:
    return Path(out if out is not None else default)


def run_sweep_command(config, params, out):
    sweep = run_sweep(config)
    path = _out_path(out, "sweep.csv")
    _write_text(path, format_sweep_csv(sweep))
    try:
        fit = fit_fringe_rates(sweep.phases, sweep.rates)
        summary = _fit_summary(fit, config.backgrounds.flat_rate)
    except FitError as exc:
        summary = [f"fit unavailable: {exc}"]
    return [str(path)], [f"wrote {path}"] + summary, None


def run_mc_command(config, params, out):
    sweep = run_sweep(config)
    records = sample_counts(sweep, config.duration_per_point, config.seed)
    path = _out_path(out, "counts.csv")
    _write_text(path, format_counts_csv(records))
    fit = fit_fringe(records)
    total = sum(r.coincidences for r in records)
    return [str(path)], [f"wrote {path}", f"total coincidences: {total}"] + \
        _fit_summary(fit, config.backgrounds.flat_rate), None


def _classical_config(config, params):
    if config.source.kind == "coherent":
        return config
    gamma = params.get("gamma_mag")
    gamma = matched_gamma(config.circuit) if gamma is None else float(gamma)
    return config.replace(source=Source("coherent", gamma))


def run_classical_command(config, params, out):
    config = _classical_config(config, params)
    sweep = run_classical_control(config)
    path = _out_path(out, "classical.csv")
    _write_text(path, format_sweep_csv(sweep))
    written = [str(path)]
    summary = [f"wrote {path}", f"coherent amplitude |gamma|: {abs(config.source.gamma):.6f}"]
    if params.get("counts"):
        records = sample_counts(sweep, config.duration_per_point, config.seed)
        counts_path = path.with_name(path.stem + ".counts.csv")
        _write_text(counts_path, format_counts_csv(records))
        written.append(str(counts_path))
        fit = fit_fringe(records)
        summary.append(f"wrote {counts_path}")
    else:
        fit = fit_fringe_rates(sweep.phases, sweep.rates)
    status = "within" if fit.visibility <= 0.5 + 1e-6 else "ABOVE"
    summary += _fit_summary(fit, 0.0)
    summary.append(f"classical 0.5 bound: {status}")
    return written, summary, None


def _closed_form_row(p: CircuitParams) -> list[float]:
    return [p.r, p.alpha_mag, math.degrees(p.delta), d1_closed(p), d2_closed(p), d12_closed(p),
            p_coincidence_closed(p), p_false_closed(p), p_total_closed(p)]


def run_closed_form_command(config, params, out):
    if params.get("grid"):
        rows = [_closed_form_row(CircuitParams.from_r(r, a, math.radians(d), eta=config.circuit.eta))
                for r in GRID_R for a in GRID_ALPHA for d in GRID_DELTA_DEG]
    else:
        rows = [_closed_form_row(config.circuit.with_delta(math.radians(params.get("delta_deg", 0.0))))]
    text = ",".join(CLOSED_FORM_HEADER) + "\n" + "".join(
        ",".join([*(f"{v!r}" for v in row[:2]), PHASE_FMT.format(row[2]), *(PROB_FMT.format(v) for v in row[3:])])
        + "\n" for row in rows)
    written = []
    if out is not None:
        _write_text(Path(out), text)
        written.append(str(out))
    summary = []
    if len(rows) == 1:
        row = rows[0]
        summary = [f"{name}: {PROB_FMT.format(v)}" for name, v in zip(CLOSED_FORM_HEADER[3:], row[3:])]
    else:
        summary = [f"{len(rows)} grid rows"]
    return written, summary, text


def run_povm_command(config, params, out):
    r = config.circuit.r
    alpha = config.circuit.alpha_mag
    cutoff = int(params.get("cutoff", 2))
    if cutoff < 2:
        raise ConfigurationError("povm cutoff must be >= 2")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateParameterWarning)
        povm = effective_projection(r, alpha, cutoff)
    vec = dominant_qubit_vector(povm)
    fid = projection_fidelity(povm, r, alpha)
    lines = ["m,n,re,im"]
    for m in range(3):
        for n in range(3):
            lines.append(f"{m},{n},{povm[m, n].real:.12e},{povm[m, n].imag:.12e}")
    lines.append(f"eigvec_0,,{vec[0].real:.12e},{vec[0].imag:.12e}")
    lines.append(f"eigvec_1,,{vec[1].real:.12e},{vec[1].imag:.12e}")
    lines.append(f"fidelity,,{fid:.12e},")
    text = "\n".join(lines) + "\n"
    written = []
    if out is not None:
        _write_text(Path(out), text)
        written.append(str(out))
    summary = [f"warning: degenerate parameters: {w.message}" for w in caught]
    summary.append("E_click on |0>,|1>,|2>:")
    summary += ["  " + "  ".join(f"{povm[m, n].real:+.6e}" for n in range(3)) for m in range(3)]
    summary.append(f"dominant eigenvector: ({vec[0].real:+.9f}, {vec[1].real:+.9f})")
    summary.append(f"fidelity to N(r alpha|0> + |1>) with |r alpha| = {abs(r) * alpha:.4g}: {fid:.12f}")
    return written, summary, text


COMMANDS = {
    "sweep": run_sweep_command,
    "mc": run_mc_command,
    "classical": run_classical_command,
    "closed-form": run_closed_form_command,
    "povm": run_povm_command,
}


def write_manifest(command, data, params, outputs) -> Path | None:
    if not outputs:
        return None
    manifest = {
        "command": command,
        "version": __version__,
        "seed": data["run"]["seed"],
        "engine": data["run"]["engine"],
        "config": data,
        "params": params,
        "outputs": outputs,
    }
    path = Path(outputs[0] + ".manifest.json")
    _write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def execute(command: str, data: dict, params: dict, out, emit_csv: bool = False, stream=None) -> list[str]:
    stream = stream or sys.stdout
    config = config_from_dict(data)
    outputs, summary, text = COMMANDS[command](config, params, out)
    manifest = write_manifest(command, data, params, outputs)
    if emit_csv and text is not None:
        stream.write(text)
    else:
        for line in summary:
            print(line, file=stream)
        if manifest is not None:
            print(f"manifest: {manifest}", file=stream)
    return outputs


def replay(manifest_path: str, out=None, stream=None) -> list[str]:
    """Re-run a manifest; ``out`` redirects the primary output file."""
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        command = manifest["command"]
        data = manifest["config"]
        params = manifest["params"]
        target = out if out is not None else manifest["outputs"][0]
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigurationError(f"bad manifest {manifest_path}: {exc}") from exc
    if command not in COMMANDS:
        raise ConfigurationError(f"manifest names unknown command {command!r}")
    return execute(command, data, params, target, stream=stream)


# --- argument parsing --------------------------------------------------------

def _shared(parser):
    parser.add_argument("--config", help="INI-style configuration file")
    parser.add_argument("--out", help="primary output file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--engine", choices=("numeric", "closed-form"))
    parser.add_argument("--alpha-mag", dest="alpha_mag", type=float)
    parser.add_argument("--r", type=float)
    parser.add_argument("--eta", type=float)
    parser.add_argument("--phase-start", dest="phase_start", type=float, help="degrees")
    parser.add_argument("--phase-end", dest="phase_end", type=float, help="degrees")
    parser.add_argument("--steps", type=int)
    parser.add_argument("--duration", type=float, help="seconds per phase point")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--cutoffs", help="per-mode cutoff overrides, e.g. 'T.lo=30,R.lo=30'")
    parser.add_argument("--csv", action="store_true", help="print machine-readable CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockbell", description="Single-photon Bell test simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("sweep", "expected rates over the LO phase sweep"),
                            ("mc", "Poisson-sampled counts and fringe fit"),
                            ("classical", "coherent-light control sweep")):
        p = sub.add_parser(name, help=help_text)
        _shared(p)
        if name == "classical":
            p.add_argument("--gamma-mag", dest="gamma_mag", type=float,
                           help="coherent amplitude (default: intensity matched to the LO at the detectors)")
            p.add_argument("--counts", action="store_true", help="also sample Poisson counts and fit them")
    p = sub.add_parser("closed-form", help="analytic click probabilities")
    _shared(p)
    p.add_argument("--delta-deg", dest="delta_deg", type=float, default=0.0)
    p.add_argument("--grid", action="store_true", help="dump the r x |alpha| x phase test matrix")
    p = sub.add_parser("povm", help="effective click POVM of one detector")
    _shared(p)
    p.add_argument("--cutoff", type=int, default=2, help="signal photon-number cutoff")
    p = sub.add_parser("config", help="show the resolved configuration")
    _shared(p)
    p.add_argument("--dump", action="store_true", help="print all resolved values")
    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    return parser


def _params(args) -> dict:
    keys = {"closed-form": ("delta_deg", "grid"), "povm": ("cutoff",), "classical": ("gamma_mag", "counts")}
    return {k: getattr(args, k) for k in keys.get(args.command, ())}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            replay(args.manifest, args.out)
            return 0
        data = _apply_overrides(load_config(args.config), args)
        if args.command == "config":
            print(dump_config(config_from_dict(data)), end="")
            return 0
        execute(args.command, data, _params(args), args.out, emit_csv=args.csv)
        return 0
    except ConfigurationError as exc:
        print(f"fockbell: configuration error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, FitError, VisibilityError, OverSubtractionError, np.linalg.LinAlgError) as exc:
        print(f"fockbell: numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
