"""Command line front end: ``rotsel <command> --config FILE --out DIR``.

Every command writes one CSV table and one JSON metadata record into the
output directory. Numbers are printed with 12 significant digits and all
reductions run in a fixed order, so outputs are byte-identical across
runs and thread counts.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from . import __version__
from .config import Scenario, parse_scenario
from .physcore import C_CM_PER_PS, revival_time
from .planner import plan_timing, isomer_windows, scan_second_pulse
from .rotor import calibrate_strength, simulate_mixture
from .signal import mixture_signal
from .spectral import classify_peaks, compute_spectrum, parity_purity, predict_lines

COMMANDS = ("simulate", "spectrum", "plan", "scan", "calibrate")
THREADS_ENV = "ROTSEL_THREADS"


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if value == 0.0:
            return "0"
        return format(value, ".12g")
    return str(value)


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return "inf" if math.isinf(v) else float(fmt(v))
    return obj


def write_metadata(path: Path, command: str, scenario: Scenario, extra: dict) -> None:
    record = {
        "tool": "rotsel",
        "version": __version__,
        "command": command,
        "config": scenario.resolved(),
        "notes": scenario.notes,
        **extra,
    }
    path.write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return 1


def _simulate(sc: Scenario, threads: int):
    trace = simulate_mixture(
        sc.species, sc.pulses, sc.times(), sc.temperature, sc.options["tail_eps"], sc.options["parity_resolved"], threads
    )
    signal = mixture_signal(trace, sc.weights, sc.decay_tau)
    return trace, signal


def run_simulate(sc: Scenario, out: Path, threads: int) -> dict:
    trace, signal = _simulate(sc, threads)
    names = [s.name for s in sc.species]
    header = ["time_ps"] + [f"response_{n}" for n in names] + ["response_total", "intensity"]
    cols = [trace.times] + [signal.components[n] for n in names] + [signal.response, signal.intensity]
    if sc.options["parity_resolved"]:
        for n in names:
            header += [f"cos2_even_{n}", f"cos2_odd_{n}"]
            cols += [trace.even[n], trace.odd[n]]
    write_table(out / "simulate.csv", header, zip(*cols))
    return {"jmax": trace.jmax, "revival_time_ps": {s.name: revival_time(s) for s in sc.species}}


def run_spectrum(sc: Scenario, out: Path, threads: int) -> dict:
    trace, signal = _simulate(sc, threads)
    start = sc.spectrum["start"]
    periods = [revival_time(s) for s in sc.species]
    spec = compute_spectrum(signal, sc.options["window"], start, sc.options["rel_threshold"], max(periods))
    purity = None
    if len(sc.species) == 1:
        sp = sc.species[0]
        catalog = predict_lines(sp, trace.jmax[sp.name], trace.moments[sp.name], sp.weight)
        spec = classify_peaks(spec, catalog, split=sc.spectrum["split_cm1"])
        try:
            purity = parity_purity(spec)
        except ValueError:
            purity = None
    by_bin = {p.bin: p for p in spec.peaks}
    rows = []
    for k, (f, m) in enumerate(zip(spec.frequencies, spec.magnitudes)):
        pk = by_bin.get(k)
        rows.append((f, f * C_CM_PER_PS, m, pk.kind if pk else None, pk.index if pk else None, pk.parity_class if pk else None))
    write_table(
        out / "spectrum.csv", ["freq_cm1", "freq_thz", "magnitude", "assignment_kind", "assignment_index", "parity_class"], rows
    )
    peaks = [
        {"frequency_cm1": p.frequency, "magnitude": p.magnitude, "kind": p.kind, "index": p.index, "parity_class": p.parity_class}
        for p in spec.peaks
    ]
    return {"jmax": trace.jmax, "spectrum": spec.metadata, "parity_purity": purity, "peaks": peaks}


def run_plan(sc: Scenario, out: Path, threads: int) -> dict:
    cfg = sc.plan
    rows = []
    meta = {}
    if len(sc.species) == 2:
        plan = plan_timing(
            sc.species, cfg["count"], cfg["max_den"], cfg["windows"], sc.temperature if cfg["verify"] else None, cfg["strength"]
        )
        meta["ratio"] = list(plan.ratio)
        meta["revival_time_ps"] = dict(zip(plan.names, plan.periods))
        for s in plan.solutions:
            rows.append(("contrast", s.p, s.q, s.form, s.time, s.refined_time, s.full_species, s.half_species, s.verified))
        windows = plan.windows
    elif len(sc.species) == 1:
        windows = isomer_windows(revival_time(sc.species[0]), cfg["windows"])
    else:
        raise ValueError("plan needs one species (isomer windows) or two species (contrast times)")
    origin = sc.pulses[0].time if sc.pulses else 0.0
    for w in windows:
        rows.append(("isomer_window", w.k, None, f"{w.fraction:g}", origin + w.delay, None, w.aligned_parity, w.anti_aligned_parity, None))
    write_table(
        out / "plan.csv",
        ["kind", "p", "q", "form", "planned_time_ps", "refined_time_ps", "aligned", "anti_aligned", "verified"],
        rows,
    )
    return meta


def run_scan(sc: Scenario, out: Path, threads: int) -> dict:
    if len(sc.species) != 1:
        raise ValueError("scan needs exactly one species")
    if len(sc.pulses) != 1:
        raise ValueError("scan needs exactly one pre-configured first pulse")
    sp = sc.species[0]
    cfg = sc.scan
    T = revival_time(sp)
    first = sc.pulses[0]
    second = first.strength if cfg["second_strength"] is None else cfg["second_strength"]
    result = scan_second_pulse(
        sp,
        sc.temperature,
        first,
        second,
        first.time + cfg["center_fraction"] * T,
        cfg["half_width_fraction"] * T,
        cfg["step_fraction"] * T,
        cfg["probe_periods"],
        cfg["samples_per_period"],
        sc.options["window"],
        sc.options["tail_eps"],
        threads,
    )
    rows = []
    for p in result.points:
        tag = "even" if p is result.even_selective else "odd" if p is result.odd_selective else None
        rows.append(((p.delay - first.time), (p.delay - first.time) / T, p.purity, p.gain_even, p.gain_odd, p.gain_total, p.selectivity, p.mean_intensity, tag))
    write_table(
        out / "scan.csv",
        ["delay_ps", "delay_over_trev", "purity", "gain_even_cm1", "gain_odd_cm1", "gain_total_cm1", "selectivity", "mean_intensity", "selected_parity"],
        rows,
    )
    np.save(out / "scan_map.npy", result.spectra)

    def best(p):
        return {"delay_ps": p.delay - first.time, "purity": p.purity, "gain_total_cm1": p.gain_total, "selectivity": p.selectivity}

    return {
        "jmax": {sp.name: result.settings["jmax"]},
        "revival_time_ps": T,
        "scan": result.settings,
        "second_strength": second,
        "even_selective": best(result.even_selective),
        "odd_selective": best(result.odd_selective),
        "map": {"file": "scan_map.npy", "shape": list(result.spectra.shape), "resolution_cm1": float(result.frequencies[1])},
    }


def run_calibrate(sc: Scenario, out: Path, threads: int) -> dict:
    if len(sc.species) != 1:
        raise ValueError("calibrate needs exactly one species")
    sp = sc.species[0]
    cfg = sc.calibrate
    cal = calibrate_strength(
        sp, sc.temperature, cfg["target"], (cfg["p_min"], cfg["p_max"]), cfg["tail_eps"], cfg["samples_per_period"]
    )
    write_table(out / "calibrate.csv", ["strength", "peak_cos2", "min_cos2"], cal.evaluations + ((cal.strength, cal.peak, cal.minimum),))
    return {"strength": cal.strength, "peak_cos2": cal.peak, "min_cos2": cal.minimum}


RUNNERS = {
    "simulate": run_simulate,
    "spectrum": run_spectrum,
    "plan": run_plan,
    "scan": run_scan,
    "calibrate": run_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rotsel", description="Selective rotational alignment of molecular mixtures.")
    parser.add_argument("--version", action="version", version=f"rotsel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "alignment traces and FWM signal",
        "spectrum": "Fourier spectrum with line assignments and parity purity",
        "plan": "contrast times and spin-isomer windows",
        "scan": "second-pulse delay scan",
        "calibrate": "kick strength for a target peak alignment",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, type=Path, help="scenario YAML file")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--threads", type=int, default=None, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    return parser


def main(argv: List[str] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None and args.threads < 1:
            raise ValueError("--threads must be >= 1")
        threads = _threads(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            scenario = parse_scenario(args.config)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        args.out.mkdir(parents=True, exist_ok=True)
        extra = RUNNERS[args.command](scenario, args.out, threads)
        write_metadata(args.out / f"{args.command}.meta.json", args.command, scenario, extra)
    except Exception as exc:  # surfaced verbatim
        print(f"rotsel {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
