"""Configuration-driven runs with deterministic CSV/SVG emission.

Subcommands: dephasing, zeno2, zeno4, readout, allan.  Every run writes a
manifest (resolved configuration, tool version, seed, result summary)
beside its outputs, and identical manifests produce byte-identical files
at any thread count (cap threads with ZENOLOCK_THREADS).

Exit codes: 0 success; 2 configuration error; 3 out-of-regime parameters
under --strict; 4 numerical-validity failure.
"""

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, dephasing, readout
from . import zeno_multilevel as zm
from . import zeno_two_level as z2
from .configfile import ConfigError, Section, load_config
from .parallel import parallel_map
from .svgplot import line_plot
from .tracefile import TraceRecord, write_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_OUT_OF_REGIME = 3
EXIT_NUMERICAL = 4

_DEFAULTS = {
    "dephasing": {
        "atom_count": "100",
        "center_frequency": "100.0",
        "fwhm": "10.0",
        "replicas": "10000",
        "seed": "20260808",
        "time_max": "0.1",
        "time_points": "201",
        "histogram_atom_count": "9",
        "histogram_replicas": "10000",
        "histogram_bins": "60",
    },
    "zeno2": {
        "half_difference": "2.0",
        "cycle_times": "0.001, 0.05",
        "photon_number": "12",
        "measure_ratio": "200",
        "survival_floor": "0.1",
        "final_time": "auto",
        "cavity_frequency": "100.0",
        "common_offset": "0.0",
        "trace_points": "800",
    },
    "zeno4": {
        "delta_1": "2.0",
        "delta_2": "2.0",
        "cycle_times": "0.001",
        "photon_number": "8",
        "measure_ratio": "200",
        "survival_floor": "auto",
        "final_time": "100.0",
        "transition_1": "120.0",
        "transition_2": "110.0",
        "trace_points": "400",
    },
    "readout": {
        "transition_1": "120.0",
        "transition_2": "110.0",
        "detuning": "10.0",
        "drive_amplitude": "1.0",
        "coupling": "2.0",
        "clock_phases": "0.0, 3.141592653589793",
        "time_max": "5.0",
        "time_points": "4001",
        "fit_periods": "32",
        "emission_cutoff": "2",
        "method": "full",
    },
    "allan": {
        "fwhm": "1.0",
        "carrier": "1e9",
        "atom_counts": "1, 4, 100, 10000",
        "cycle_time": "1.0",
        "averaging_times": "1, 4, 16, 100",
    },
}


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(float(value))  # plain shortest round-trip form, also for numpy scalars
    if isinstance(value, (tuple, list)):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def _write_manifest(out_dir: Path, subcommand: str, config_path, config_text: str,
                    seed, emit_plots: bool, resolved: dict, results: dict,
                    flags: dict) -> None:
    digest = hashlib.sha256(config_text.encode("utf-8")).hexdigest()
    lines = [
        "zenolock run manifest",
        f"version = {__version__}",
        f"subcommand = {subcommand}",
        f"config_file = {config_path}",
        f"config_sha256 = {digest}",
        f"seed = {seed if seed is not None else 'none'}",
        f"output_directory = {out_dir}",
        f"emit_plots = {str(bool(emit_plots)).lower()}",
        "",
        "[resolved]",
    ]
    for key in sorted(resolved):
        lines.append(f"{key} = {_format_value(resolved[key])}")
    lines.append("")
    lines.append("[results]")
    for key in sorted(results):
        lines.append(f"{key} = {_format_value(results[key])}")
    lines.append("")
    lines.append("[flags]")
    for key in sorted(flags):
        lines.append(f"{key} = {str(bool(flags[key])).lower()}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _provenance(subcommand: str, config_text: str, seed) -> dict:
    return {
        "tool": f"zenolock {__version__}",
        "subcommand": subcommand,
        "config_sha256": hashlib.sha256(config_text.encode("utf-8")).hexdigest(),
        "seed": str(seed if seed is not None else "none"),
    }


def cmd_dephasing(section: Section, out_dir: Path, args, config_text: str):
    seed = args.seed if args.seed is not None else section.get_int("seed")
    atom_count = section.get_int("atom_count")
    f0 = section.get_float("center_frequency")
    fwhm = section.get_float("fwhm")
    replicas = section.get_int("replicas")
    grid = np.linspace(0.0, section.get_float("time_max"),
                       section.get_int("time_points"))
    provenance = _provenance("dephasing", config_text, seed)

    config = dephasing.EnsembleConfig(atom_count=atom_count, center_frequency=f0,
                                      fwhm=fwhm, seed=seed, time_grid=tuple(grid),
                                      replicas=replicas)
    locked_grid = grid * math.sqrt(atom_count)
    locked_config = dephasing.EnsembleConfig(atom_count=atom_count,
                                             center_frequency=f0, fwhm=fwhm,
                                             seed=seed, time_grid=tuple(locked_grid),
                                             replicas=replicas)
    sigma = config.sigma
    mc_ind, se_ind = dephasing.monte_carlo_mean_cos(config, locked=False)
    mc_lock, se_lock = dephasing.monte_carlo_mean_cos(locked_config, locked=True)
    analytic_ind = dephasing.envelope_independent(grid, sigma, f0)
    analytic_lock = dephasing.envelope_locked(locked_grid, sigma, f0, atom_count)

    independent = TraceRecord(
        name="dephasing_independent",
        columns=("t", "analytic", "mc_mean", "mc_se"),
        rows=np.column_stack([grid, analytic_ind, mc_ind, se_ind]),
        provenance=provenance)
    locked = TraceRecord(
        name="dephasing_locked",
        columns=("t", "analytic", "mc_mean", "mc_se"),
        rows=np.column_stack([locked_grid, analytic_lock, mc_lock, se_lock]),
        provenance=provenance)
    write_csv(independent, out_dir / "dephasing_independent.csv")
    write_csv(locked, out_dir / "dephasing_locked.csv")

    hist_config = dephasing.EnsembleConfig(
        atom_count=section.get_int("histogram_atom_count"), center_frequency=f0,
        fwhm=fwhm, seed=seed, time_grid=(0.0, 1.0),
        replicas=section.get_int("histogram_replicas"))
    histograms = dephasing.bandwidth_histogram(hist_config,
                                               bins=section.get_int("histogram_bins"))
    individual = histograms.individual
    means = histograms.replica_means
    centers = 0.5 * (individual.bin_edges[:-1] + individual.bin_edges[1:])
    mean_centers = 0.5 * (means.bin_edges[:-1] + means.bin_edges[1:])
    hist_record = TraceRecord(
        name="bandwidth_histograms",
        columns=("bin_center_individual", "density_individual",
                 "bin_center_means", "density_means"),
        rows=np.column_stack([centers, individual.density, mean_centers, means.density]),
        provenance=provenance)
    write_csv(hist_record, out_dir / "bandwidth_histograms.csv")

    efold_ind = dephasing.fit_efold_time(grid, mc_ind, f0, sigma_guess=sigma)
    efold_lock = dephasing.fit_efold_time(locked_grid, mc_lock, f0,
                                          sigma_guess=sigma / math.sqrt(atom_count))
    results = {
        "efold_time_independent": efold_ind,
        "efold_time_locked": efold_lock,
        "efold_ratio": efold_lock / efold_ind,
        "efold_ratio_expected": math.sqrt(atom_count),
        "histogram_sigma_ratio": histograms.sigma_ratio,
        "histogram_sigma_ratio_expected": math.sqrt(hist_config.atom_count),
    }
    if args.plots:
        line_plot(out_dir / "dephasing_independent.svg",
                  [(grid, analytic_ind, "analytic"), (grid, mc_ind, "monte carlo")],
                  title="Mean cosine, independent atoms", xlabel="t [s]",
                  ylabel="mean cos")
        line_plot(out_dir / "dephasing_locked.svg",
                  [(locked_grid, analytic_lock, "analytic"),
                   (locked_grid, mc_lock, "monte carlo")],
                  title="Mean cosine, phase-locked ensemble", xlabel="t [s]",
                  ylabel="mean cos")
        line_plot(out_dir / "bandwidth_histograms.svg",
                  [(centers, individual.density, "individual"),
                   (mean_centers, means.density, "ensemble means")],
                  title="Frequency distributions", xlabel="f [Hz]", ylabel="density")
    return results, {}, seed


def _zeno_final_time(section: Section, cycle: float, rate: float) -> float:
    raw = section.get_str("final_time")
    if raw != "auto":
        return float(raw)
    floor_raw = section.get_str("survival_floor")
    floor = 0.1 if floor_raw == "auto" else float(floor_raw)
    if rate <= 0.0:
        return 1000.0 * cycle
    return math.log(1.0 / floor) / rate


def cmd_zeno2(section: Section, out_dir: Path, args, config_text: str):
    delta = section.get_float("half_difference")
    cycle_times = section.get_float_list("cycle_times")
    photons = section.get_int("photon_number")
    ratio = section.get_float("measure_ratio")
    trace_points = section.get_int("trace_points")
    provenance = _provenance("zeno2", config_text, args.seed)

    def run_one(cycle):
        final_time = _zeno_final_time(section, cycle, delta**2 * cycle)
        config = z2.config_for_cycle_time(
            cycle, final_time, half_difference=delta, photon_number=photons,
            measure_ratio=ratio, cavity_frequency=section.get_float("cavity_frequency"),
            common_offset=section.get_float("common_offset"))
        trace = z2.run_protocol(config, max_trace_points=trace_points)
        return cycle, config, trace

    runs = parallel_map(run_one, cycle_times)
    results = {}
    flags = {"out_of_regime": False}
    plot_series = []
    for cycle, config, trace in runs:
        tag = repr(float(cycle))
        record = TraceRecord(
            name=f"zeno2_cycle_{tag}",
            columns=("t", "p_success", "p_error_per_cycle", "analytic_p_s"),
            rows=np.column_stack([trace.times, trace.p_success,
                                  trace.p_error_per_cycle, trace.analytic_p_s]),
            provenance={**provenance, "cycle_time": tag,
                        "half_difference": repr(delta),
                        "coupling": repr(config.coupling),
                        "measure_interval": repr(config.measure_interval)})
        write_csv(record, out_dir / f"zeno2_cycle_{tag}.csv")
        flags["out_of_regime"] |= trace.out_of_regime
        if trace.max_mode_tail > 1e-8:
            raise z2.ProtocolError(
                f"mode truncation boundary populated ({trace.max_mode_tail:.3e})")
        results[f"final_p_success_{tag}"] = float(trace.p_success[-1])
        results[f"final_analytic_p_s_{tag}"] = float(trace.analytic_p_s[-1])
        plot_series.append((trace.times, trace.p_success, f"numeric {tag}"))
        plot_series.append((trace.times, trace.analytic_p_s, f"analytic {tag}"))
    if args.plots:
        line_plot(out_dir / "zeno2_survival.svg", plot_series,
                  title="Two-level survival probability", xlabel="t", ylabel="P_S")
    return results, flags, args.seed


def cmd_zeno4(section: Section, out_dir: Path, args, config_text: str):
    delta_1 = section.get_float("delta_1")
    delta_2 = section.get_float("delta_2")
    cycle_times = section.get_float_list("cycle_times")
    photons = section.get_int("photon_number")
    ratio = section.get_float("measure_ratio")
    trace_points = section.get_int("trace_points")
    provenance = _provenance("zeno4", config_text, args.seed)
    rate = 0.5 * (delta_1**2 + delta_2**2)

    def run_one(cycle):
        final_time = _zeno_final_time(section, cycle, rate * cycle)
        config = zm.four_level_config_from_deltas(
            delta_1, delta_2, cycle_time=cycle, final_time=final_time,
            photon_number=photons, measure_ratio=ratio,
            transition_1=section.get_float("transition_1"),
            transition_2=section.get_float("transition_2"))
        trace = zm.run_four_level_protocol(config, max_trace_points=trace_points)
        return cycle, config, trace

    runs = parallel_map(run_one, cycle_times)
    results = {}
    flags = {"out_of_regime": False, "mode_off_resonance": False}
    plot_series = []
    for cycle, config, trace in runs:
        tag = repr(float(cycle))
        record = TraceRecord(
            name=f"zeno4_cycle_{tag}",
            columns=("t", "p_success", "p_error_per_cycle", "analytic_p_s"),
            rows=np.column_stack([trace.times, trace.p_success,
                                  trace.p_error_per_cycle, trace.analytic_p_s]),
            provenance={**provenance, "cycle_time": tag,
                        "delta_1": repr(delta_1), "delta_2": repr(delta_2),
                        "coupling": repr(config.coupling)})
        write_csv(record, out_dir / f"zeno4_cycle_{tag}.csv")
        flags["out_of_regime"] |= trace.out_of_regime
        flags["mode_off_resonance"] |= any(
            abs(d) > 1e-9 for d in config.mode_detunings())
        if trace.max_mode_tail > 1e-8:
            raise z2.ProtocolError(
                f"mode truncation boundary populated ({trace.max_mode_tail:.3e})")
        results[f"final_p_success_{tag}"] = float(trace.p_success[-1])
        results[f"final_analytic_p_s_{tag}"] = float(trace.analytic_p_s[-1])
        residual = zm.measurement_residual_cosines(config)
        results[f"manifold2_residual_cosine_{tag}"] = residual[1]
        plot_series.append((trace.times, trace.p_success, f"numeric {tag}"))
        plot_series.append((trace.times, trace.analytic_p_s, f"analytic {tag}"))
    if args.plots:
        line_plot(out_dir / "zeno4_survival.svg", plot_series,
                  title="Four-level survival probability", xlabel="t", ylabel="P_S")
    return results, flags, args.seed


def cmd_readout(section: Section, out_dir: Path, args, config_text: str):
    config = readout.readout_config(
        detuning=section.get_float("detuning"),
        drive_amplitude=section.get_float("drive_amplitude"),
        coupling=section.get_float("coupling"),
        transition_1=section.get_float("transition_1"),
        transition_2=section.get_float("transition_2"),
        time_max=section.get_float("time_max"),
        time_points=section.get_int("time_points"))
    config = readout.ReadoutConfig(
        atom_a=config.atom_a, atom_b=config.atom_b, elapsed_time=0.0,
        detuning=config.detuning, drive_amplitude=config.drive_amplitude,
        coupling=config.coupling, emission_mode_cutoff=section.get_int("emission_cutoff"),
        readout_times=config.readout_times,
        fit_periods=section.get_float("fit_periods"))
    method = section.get_str("method")
    if method not in ("full", "perturbative"):
        raise ConfigError(f"[readout] method must be 'full' or 'perturbative', got {method!r}")
    phases = section.get_float_list("clock_phases")
    provenance = _provenance("readout", config_text, args.seed)

    def run_one(target):
        elapsed = target / config.clock_frequency
        state, probability = readout.readout_chain(config, elapsed)
        trace = readout.emit_field_trace(state, config, method=method)
        return target, elapsed, probability, trace

    runs = parallel_map(run_one, phases)
    results = {}
    flags = {"degenerate_fit": False}
    plot_series = []
    for index, (target, elapsed, probability, trace) in enumerate(runs):
        record = TraceRecord(
            name=f"readout_trace_{index}",
            columns=("t_r", "quadrature"),
            rows=np.column_stack([trace.times, trace.quadrature]),
            provenance={**provenance,
                        "clock_phase_target": repr(float(target)),
                        "elapsed_time": repr(float(elapsed)),
                        "postselect_probability": repr(float(probability)),
                        "method": method})
        write_csv(record, out_dir / f"readout_trace_{index}.csv")
        results[f"clock_phase_target_{index}"] = float(target)
        if trace.fitted_phase is None:
            flags["degenerate_fit"] = True
            results[f"extracted_phase_{index}"] = "degenerate"
        else:
            results[f"extracted_phase_{index}"] = float(trace.fitted_phase)
        results[f"postselect_probability_{index}"] = float(probability)
        plot_series.append((trace.times, trace.quadrature, f"target {target:.4g}"))
    results["emission_frequency"] = float(
        readout.emission_model(config).beat_frequency())
    if args.plots:
        line_plot(out_dir / "readout_traces.svg", plot_series,
                  title="Emitted field quadrature", xlabel="t_r",
                  ylabel="mean quadrature")
    return results, flags, args.seed


def cmd_allan(section: Section, out_dir: Path, args, config_text: str):
    fwhm = section.get_float("fwhm")
    carrier = section.get_float("carrier")
    atom_counts = [int(v) for v in section.get_float_list("atom_counts")]
    cycle_time = section.get_float("cycle_time")
    averaging_times = section.get_float_list("averaging_times")
    provenance = _provenance("allan", config_text, args.seed)

    rows = []
    for count in atom_counts:
        for averaging in averaging_times:
            raw = dephasing.allan_deviation(dephasing.AllanParams(
                fwhm=fwhm, carrier=carrier, atom_count=count,
                cycle_time=cycle_time, averaging_time=averaging))
            locked = dephasing.allan_deviation(dephasing.AllanParams(
                fwhm=fwhm / math.sqrt(count), carrier=carrier, atom_count=count,
                cycle_time=cycle_time, averaging_time=averaging))
            rows.append((float(count), float(averaging), raw, locked, raw / locked))
    record = TraceRecord(
        name="allan_deviation",
        columns=("atom_count", "averaging_time", "sigma_y", "sigma_y_locked",
                 "narrowing_ratio"),
        rows=np.array(rows), provenance=provenance)
    write_csv(record, out_dir / "allan.csv")

    header = f"{'N':>8} {'tau_avg':>12} {'sigma_y':>14} {'sigma_y_locked':>16} {'ratio':>10}"
    print(header)
    for count, averaging, raw, locked, ratio in rows:
        print(f"{int(count):>8} {averaging:>12.6g} {raw:>14.6e} {locked:>16.6e} "
              f"{ratio:>10.6g}")
    results = {"rows": len(rows)}
    return results, {}, args.seed


_HANDLERS = {
    "dephasing": cmd_dephasing,
    "zeno2": cmd_zeno2,
    "zeno4": cmd_zeno4,
    "readout": cmd_readout,
    "allan": cmd_allan,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zenolock",
        description="Quantum-Zeno phase-locking simulator for atomic clocks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("dephasing", "ensemble coherence curves and bandwidth histograms"),
        ("zeno2", "two-level pair survival curves"),
        ("zeno4", "four-level pair survival curves"),
        ("readout", "emitted-field traces and phase fits"),
        ("allan", "closed-form Allan deviation table"),
    ):
        cmd = sub.add_parser(name, help=blurb)
        cmd.add_argument("--config", required=True, help="run configuration file")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the configured random seed")
        cmd.add_argument("--plots", action="store_true", help="also write SVG plots")
        cmd.add_argument("--strict", action="store_true",
                         help="exit nonzero when parameters are out of regime")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config_path = Path(args.config)
        sections = load_config(config_path)
        config_text = config_path.read_text(encoding="utf-8")
        defaults = _DEFAULTS[args.command]
        section = Section(args.command, sections.get(args.command, {}), defaults,
                          str(config_path))
        for name in sections:
            if name not in _DEFAULTS:
                raise ConfigError(f"{config_path}: unknown section [{name}]")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        results, flags, seed = _HANDLERS[args.command](section, out_dir, args,
                                                       config_text)
    except ConfigError as error:
        print(f"zenolock: config error: {error}", file=sys.stderr)
        return EXIT_CONFIG
    except (z2.ProtocolError, readout.CutoffOverflowError,
            readout.DegenerateFitError) as error:
        print(f"zenolock: numerical validity failure: {error}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as error:
        print(f"zenolock: config error: {error}", file=sys.stderr)
        return EXIT_CONFIG
    _write_manifest(out_dir, args.command, config_path, config_text, seed,
                    args.plots, section.resolved(), results, flags)
    if args.strict and flags.get("out_of_regime"):
        return EXIT_OUT_OF_REGIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
