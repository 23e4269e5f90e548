"""Command-line front end: scenario files in, CSV tables (and SVG plots) out.

Subcommands map one-to-one onto scenario commands; `reproduce <preset>` runs
one of the shipped scenario files by name. Outputs land in --out (default:
current directory) and always carry a metadata block with the tool version
and the scenario hash.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .ensemble import EnsembleConfig, ensemble_signal
from .fieldmap import field_magnitude_histogram
from .model import DriveParams
from .scans import scan_detuning
from .scenario import (PRESET_NAMES, Scenario, ScenarioError,
                       distribution_with_sigma, load_scenario_dict,
                       parse_scenario, preset_file, scenario_hash)
from .spectrum import fft_spectrum, sliding_window_frequency
from .output import write_csv, write_svg_lines
from .units import angular_to_khz


def _base_metadata(scenario: Scenario, digest):
    return {
        "tool": f"rabisim {__version__}",
        "scenario": scenario.name,
        "scenario_hash": digest,
        "seed": scenario.seed,
    }


def _ensemble_config(scenario: Scenario, omega0, delta, sigma=None):
    dist = scenario.distribution
    if sigma is not None:
        dist = distribution_with_sigma(dist, sigma)
    return EnsembleConfig(drive=DriveParams(omega0=omega0, delta=delta),
                          distribution=dist, atom_model=scenario.atom_model,
                          quadrature_nodes=scenario.quadrature_nodes,
                          support_half_width=scenario.support_half_width)


def _sigma_blocks(scenario: Scenario):
    if scenario.sigma_list is not None:
        return scenario.sigma_list
    return (scenario.distribution.std_shift(),)


def run_simulate(scenario: Scenario, digest, out_dir, svg):
    config = _ensemble_config(scenario, scenario.omega0_list[0],
                              scenario.deltas[0])
    trace = ensemble_signal(config, scenario.times)
    csv_path = Path(out_dir) / f"{scenario.basename}.csv"
    rows = [(t, v) for t, v in zip(trace.times, trace.values)]
    write_csv(csv_path, ("t_ms", "signal"), rows,
              metadata=_base_metadata(scenario, digest))
    written = [csv_path]
    if svg:
        svg_path = Path(out_dir) / f"{scenario.basename}.svg"
        write_svg_lines(svg_path, [("", trace.times, trace.values)],
                        x_label="t (ms)", y_label="signal",
                        title=scenario.name)
        written.append(svg_path)
    return written


_SINGLE_COLUMNS = ("omega0_khz", "sigma_khz", "detuning_khz", "frequency_khz",
                   "frequency_ci_khz", "homogeneous_khz", "amplitude",
                   "amplitude_ci", "gamma", "gamma_ci", "tau_ms", "r_squared",
                   "error")
_TWO_COLUMNS = ("omega0_khz", "sigma_khz", "detuning_khz", "fraction_a",
                "fraction_a_ci", "omega_bar_khz", "gamma_b",
                "indistinguishable", "fraction_ci_wide", "r_squared", "error")
_FFT_COLUMNS = ("omega0_khz", "sigma_khz", "detuning_khz", "frequency_khz",
                "peaks_khz", "error")


def run_scan(scenario: Scenario, digest, out_dir, svg, threads):
    analysis = scenario.analysis
    rows = []
    series = []
    for omega0 in scenario.omega0_list:
        for sigma in _sigma_blocks(scenario):
            config = _ensemble_config(scenario, omega0, scenario.deltas[0],
                                      sigma if scenario.sigma_list else None)
            window = analysis.window
            if window is None and analysis.kind == "two":
                periods = analysis.window_periods * 2.0 * math.pi / omega0
                window = (0.0, min(periods, float(scenario.times[-1])))
            results = scan_detuning(
                config, scenario.deltas, analysis=analysis.kind,
                times=scenario.times, window=window, decay=analysis.decay,
                fft_options=analysis.fft_options(), max_workers=threads)
            o_khz = angular_to_khz(omega0)
            s_khz = angular_to_khz(sigma)
            label = f"O0={o_khz:g}, sigma={s_khz:g} kHz"
            if analysis.kind == "single":
                for r in results:
                    homog = math.hypot(o_khz, r.detuning_khz)
                    tau = 1.0 / r.gamma if r.gamma > 0 else math.inf
                    rows.append((o_khz, s_khz, r.detuning_khz, r.frequency_khz,
                                 r.frequency_ci_khz, homog, r.amplitude,
                                 r.amplitude_ci, r.gamma, r.gamma_ci, tau,
                                 r.r_squared, r.error))
                series.append((label, [r.detuning_khz for r in results],
                               [r.frequency_khz for r in results]))
            elif analysis.kind == "two":
                for r in results:
                    rows.append((o_khz, s_khz, r.detuning_khz, r.fraction_a,
                                 r.fraction_a_ci, r.omega_bar_khz, r.gamma_b,
                                 r.indistinguishable, r.fraction_ci_wide,
                                 r.r_squared, r.error))
                series.append((label, [r.detuning_khz for r in results],
                               [r.fraction_a for r in results]))
            else:
                for r in results:
                    peaks = ";".join("%.12g" % p for p in r.peaks_khz)
                    rows.append((o_khz, s_khz, r.detuning_khz, r.frequency_khz,
                                 peaks, r.error))
                series.append((label, [r.detuning_khz for r in results],
                               [r.frequency_khz for r in results]))

    columns = {"single": _SINGLE_COLUMNS, "two": _TWO_COLUMNS,
               "fft": _FFT_COLUMNS}[analysis.kind]
    csv_path = Path(out_dir) / f"{scenario.basename}.csv"
    write_csv(csv_path, columns, rows,
              metadata=_base_metadata(scenario, digest))
    written = [csv_path]
    if svg:
        y_label = "fraction_a" if analysis.kind == "two" else "frequency (kHz)"
        svg_path = Path(out_dir) / f"{scenario.basename}.svg"
        write_svg_lines(svg_path, series, x_label="detuning (kHz)",
                        y_label=y_label, title=scenario.name)
        written.append(svg_path)
    return written


def run_spectrum(scenario: Scenario, digest, out_dir, svg):
    analysis = scenario.analysis
    omega0 = scenario.omega0_list[0]
    meta = _base_metadata(scenario, digest)
    spectra_rows = []
    peak_rows = []
    track_rows = []
    series = []
    offset = 0.0
    for i, delta in enumerate(scenario.deltas):
        config = _ensemble_config(scenario, omega0, delta)
        trace = ensemble_signal(config, scenario.times)
        spec = fft_spectrum(trace, **analysis.fft_options())
        d_khz = angular_to_khz(delta)
        for f, p in zip(spec.frequencies_khz, spec.power):
            spectra_rows.append((d_khz, f, p))
        for rank, (f, h) in enumerate(zip(spec.peak_frequencies_khz,
                                          spec.peak_heights), start=1):
            peak_rows.append((d_khz, rank, f, h))
        top = spec.power.max()
        scaled = spec.power / top if top > 0 else spec.power
        series.append((f"detuning {d_khz:g} kHz", spec.frequencies_khz,
                       scaled + offset))
        offset += 1.1
        if analysis.track is not None:
            points = sliding_window_frequency(
                trace, analysis.track["window"], analysis.track["hop"],
                t_stop=analysis.track["t_stop"])
            for pt in points:
                track_rows.append((d_khz, pt.t_center, pt.frequency_khz,
                                   pt.ci95_khz))

    base = Path(out_dir) / scenario.basename
    spectra_path = base.with_name(base.name + "_spectra.csv")
    peaks_path = base.with_name(base.name + "_peaks.csv")
    write_csv(spectra_path, ("detuning_khz", "frequency_khz", "power"),
              spectra_rows, metadata=meta)
    write_csv(peaks_path, ("detuning_khz", "rank", "peak_frequency_khz",
                           "peak_height"), peak_rows, metadata=meta)
    written = [spectra_path, peaks_path]
    if analysis.track is not None:
        track_path = base.with_name(base.name + "_track.csv")
        write_csv(track_path, ("detuning_khz", "t_center_ms", "frequency_khz",
                               "ci95_khz"), track_rows, metadata=meta)
        written.append(track_path)
    if svg:
        svg_path = base.with_suffix(".svg")
        write_svg_lines(svg_path, series, x_label="frequency (kHz)",
                        y_label="power (offset per curve)",
                        title=scenario.name)
        written.append(svg_path)
    return written


def run_field_dist(scenario: Scenario, digest, out_dir, svg):
    spec = scenario.field_dist
    meta = _base_metadata(scenario, digest)
    rows = []
    series = []
    for sign in spec.signs:
        model = replace(spec.model, current_sign=sign)
        hist = field_magnitude_histogram(model, spec.beam, spec.n_bins)
        tag = f"sign_{'+' if sign > 0 else '-'}1"
        meta[f"{tag}_mean_khz"] = hist.mean_khz
        meta[f"{tag}_std_khz"] = hist.std_khz
        meta[f"{tag}_fraction_below"] = hist.fraction_below
        meta[f"{tag}_fraction_above"] = hist.fraction_above
        meta[f"{tag}_third_moment"] = hist.third_moment
        for c, w in zip(hist.bin_centers_khz, hist.weights):
            rows.append((sign, c, w))
        series.append((f"sign {sign:+d}", hist.bin_centers_khz, hist.weights))
    csv_path = Path(out_dir) / f"{scenario.basename}.csv"
    write_csv(csv_path, ("current_sign", "bin_center_khz", "weight"), rows,
              metadata=meta)
    written = [csv_path]
    if svg:
        svg_path = Path(out_dir) / f"{scenario.basename}.svg"
        write_svg_lines(svg_path, series, x_label="field deviation (kHz)",
                        y_label="weight", title=scenario.name)
        written.append(svg_path)
    return written


def run_scenario(scenario: Scenario, digest, out_dir, *, svg=False, threads=1):
    """Dispatch a parsed scenario; returns the list of files written."""
    if scenario.command == "simulate":
        return run_simulate(scenario, digest, out_dir, svg)
    if scenario.command == "scan":
        return run_scan(scenario, digest, out_dir, svg, threads)
    if scenario.command == "spectrum":
        return run_spectrum(scenario, digest, out_dir, svg)
    return run_field_dist(scenario, digest, out_dir, svg)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="rabisim",
        description="Simulate driven transitions of inhomogeneous ensembles "
                    "and reproduce the figure-level analyses.",
        epilog="presets: " + ", ".join(PRESET_NAMES),
    )
    parser.add_argument("--version", action="version",
                        version=f"rabisim {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="scenario YAML file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--svg", action="store_true",
                       help="also write SVG plots")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for scans")

    for name in ("simulate", "scan", "spectrum", "field-dist"):
        add_common(sub.add_parser(name, help=f"run a {name} scenario"))
    rep = sub.add_parser("reproduce", help="run a shipped preset by name")
    rep.add_argument("preset", help="preset name, e.g. fig3a")
    add_common(rep, needs_config=False)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --version and usage errors; keep main returning
        return int(exc.code or 0)
    try:
        if args.subcommand == "reproduce":
            config_path = preset_file(args.preset)
        else:
            config_path = Path(args.config)
        data = load_scenario_dict(config_path)
        if args.seed is not None:
            if args.seed < 0:
                raise ScenarioError("seed: must be non-negative")
            data["seed"] = args.seed
        digest = scenario_hash(data)
        scenario = parse_scenario(data, base_dir=config_path.parent)
        if args.subcommand != "reproduce" and scenario.command != args.subcommand:
            raise ScenarioError(
                f"command: scenario declares {scenario.command!r}, "
                f"invoked as {args.subcommand!r}")
        threads = max(1, args.threads)
        written = run_scenario(scenario, digest, args.out, svg=args.svg,
                               threads=threads)
    except ScenarioError as exc:
        print(f"rabisim: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rabisim: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0
