"""Command-line front end.

Exit codes: 0 success, 1 runtime or fit failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cavity import NoStableSolution, OptomechCoupling, solve_hemispherical_cavity, waist_diameter_for_length
from .config import ConfigError, canonical_config, parse_quantity, prospective_config, read_config
from .dynamics import CHANNELS, frequency_grid, transfer_spectrum
from .echo import EchoParams, average_noisy_shots, off_resonance_suppression_db, pipeline
from .electromech import ElectromechCoupling, rescale_eta
from .fitting import (FitError, fit_bath_and_phase, fit_gap, fit_optomech, load_sweep, synth_area_sweeps,
                      synth_gap_sweep, synth_ratio_sweep)
from .io import RunManifest, SchemaError, dumps_json, format_csv
from .noise import SNR_VARIANTS, noise_budget, sideband_spectrum, snr
from .units import TAU, PowerLevel, dbm_to_watts, quanta_to_kelvin

log = logging.getLogger("emo_nmr")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

SWEEP_AXES = ("d0", "drive_dbm", "T_eff", "eta_p", "kappa_i_ratio", "C_om")
SWEEP_METRICS = ("C_em", "shot", "brownian", "johnson", "phase", "total", "total_K", "snr_echo")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _load_cfg(args):
    overrides = args.set or []
    cfg = read_config(args.config, overrides) if args.config else canonical_config(overrides)
    if getattr(args, "prospective", False):
        cfg = prospective_config(cfg)
    return cfg


def _manifest(args, **extra) -> RunManifest:
    return RunManifest(command=args.command, config_path=args.config, overrides=tuple(args.set or ()),
                       output_dir=args.out, seed=args.seed,
                       extra={"prospective": bool(args.prospective), "version": __version__, **extra})


def _emit(args, name: str, text: str):
    """Write ``text`` to ``--out/name`` or, without ``--out``, to stdout."""
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")
        log.info("wrote %s", out / name)
    else:
        sys.stdout.write(text)


def _quantity(text, kind, what):
    try:
        return parse_quantity(text, kind)
    except ValueError as exc:
        raise UsageError(f"{what}: {exc}") from None


def _dbm_list(spec: str):
    """``"15"``, ``"0,6,12"`` or ``"0:21:3"`` (inclusive stop)."""
    try:
        if ":" in spec:
            lo, hi, step = (float(x) for x in spec.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return [lo + k * step for k in range(n)]
        return [float(x) for x in spec.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse drive powers {spec!r}; use '15', '0,6,12' or '0:21:3'") from None


def _tone(args):
    return {"P_T": dbm_to_watts(args.tone_dbm), "Delta_T": TAU * args.tone_offset_hz}


# ---------------------------------------------------------------- commands

def cmd_spectrum(args) -> int:
    cfg = _load_cfg(args)
    grid = frequency_grid(cfg.omega_m, cfg.gamma_m, args.points, args.halfwidth)
    if args.kind == "transfer":
        spec = transfer_spectrum(grid, cfg, channel=args.channel, quadrature=args.quadrature)
        _emit(args, "transfer.csv", spec.to_csv(_manifest(args, channel=args.channel)))
        return EXIT_OK
    drives = _dbm_list(args.drive_dbm) if args.drive_dbm else [PowerLevel(cfg.P_drive).dbm]
    tone = _tone(args) if args.tone_dbm is not None else None
    summary = []
    for dbm in drives:
        P = dbm_to_watts(dbm)
        spec = sideband_spectrum(grid, cfg, S=args.signal, tone=tone, P_D=P, shift=not args.no_shift)
        name = "spectrum.csv" if len(drives) == 1 else f"spectrum_{dbm:+.1f}dBm.csv"
        if args.out or len(drives) == 1:
            _emit(args, name, spec.to_csv(_manifest(args, drive_dbm=dbm)))
        summary.append({"drive_dbm": dbm, "file": name, "peak_Hz": spec.peak_frequency() / TAU,
                        "center_Hz": spec.center / TAU})
    if len(drives) > 1:
        _emit(args, "spectra.json", dumps_json({"spectra": summary}, _manifest(args)))
    return EXIT_OK


def cmd_budget(args) -> int:
    cfg = _load_cfg(args)
    label = "prospective" if args.prospective else "current"
    b = noise_budget(cfg, overcoupled=args.prospective or args.overcoupled, label=label)
    payload = {**b.to_dict(), "table": b.table(),
               "C_em": ElectromechCoupling.from_config(cfg).C_em_resonant, "C_om": cfg.C_om}
    _emit(args, "budget.json", dumps_json(payload, _manifest(args)))
    if args.out:
        _emit(args, "budget.txt", b.table())
    return EXIT_OK


def cmd_snr(args) -> int:
    cfg = _load_cfg(args)
    flux = args.signal_flux
    report = snr(cfg, args.variant, n_avg=args.n_avg, signal_flux=flux,
                 bandwidth=None if args.bandwidth_hz is None else TAU * args.bandwidth_hz)
    _emit(args, "snr.json", dumps_json(report.to_dict(), _manifest(args)))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _load_cfg(args)
    tone = _tone(args)
    if args.synthesize:
        powers = _dbm_list(args.powers)
        man = _manifest(args, kind=args.kind, noise=args.noise)
        if args.kind == "gap":
            sw = synth_gap_sweep(cfg, powers, noise=args.noise, seed=args.seed or 0)
            _emit(args, "gap.csv", format_csv("calibration", sw.rows(), man))
        elif args.kind == "bath":
            truth = {"T_eff": cfg.T_eff, "eta_p": cfg.eta_p, "L_delta": args.L_delta}
            sw = synth_ratio_sweep(cfg, tone, powers, truth, noise=args.noise, seed=args.seed or 0)
            _emit(args, "ratio.csv", format_csv("calibration", sw.rows(), man))
        else:
            n, t = synth_area_sweeps(cfg, tone, powers, cfg.C_om, args.L_delta, noise=args.noise, seed=args.seed or 0)
            _emit(args, "noise_area.csv", format_csv("calibration", n.rows(), man))
            _emit(args, "tone_area.csv", format_csv("calibration", t.rows(), man))
        return EXIT_OK

    if args.kind == "optomech":
        if not (args.noise_data and args.tone_data):
            raise UsageError("optomech calibration needs --noise-data and --tone-data")
        res = fit_optomech(load_sweep(args.noise_data), load_sweep(args.tone_data), cfg, tone, args.L_delta)
    else:
        if not args.data:
            raise UsageError(f"{args.kind} calibration needs --data")
        sweep = load_sweep(args.data)
        if args.kind == "gap":
            res = fit_gap(sweep, cfg.m_eff, cfg.omega_0, cfg.A_cap, cfg.R_circuit)
        else:
            res = fit_bath_and_phase(sweep, cfg, tone, convention=args.convention)
    _emit(args, "fit.json", dumps_json(res.to_dict(), _manifest(args, kind=args.kind)))
    return EXIT_OK


def cmd_cavity(args) -> int:
    cfg = _load_cfg(args)
    R = _quantity(args.R_mirror, "length", "--R-mirror") if args.R_mirror else cfg.R_mirror
    lam = _quantity(args.wavelength, "length", "--wavelength") if args.wavelength else cfg.lambda_opt
    waist = _quantity(args.waist_diameter, "length", "--waist-diameter")
    roots = solve_hemispherical_cavity(R, lam, waist)
    payload = {"R_mirror_m": R, "wavelength_m": lam, "waist_diameter_m": waist, "lengths_m": roots}
    if args.length:
        z = _quantity(args.length, "length", "--length")
        payload["length_m"] = z
        payload["waist_diameter_at_length_m"] = waist_diameter_for_length(z, R, lam)
    om = OptomechCoupling.from_config(cfg)
    bound = OptomechCoupling.radiation_pressure_bound(cfg)
    payload["g_om_measured_Hz"] = om.g_om / TAU
    payload["g_om_radiation_pressure_Hz"] = bound.g_om / TAU
    payload["N_D"] = om.N_D
    _emit(args, "cavity.json", dumps_json(payload, _manifest(args)))
    return EXIT_OK


def cmd_echo(args) -> int:
    cfg = _load_cfg(args)
    T2 = cfg.T2_star
    if T2 is None:
        raise ConfigError("T2_star: required for the echo command")
    t_echo = args.t_echo_ms * 1e-3
    params = EchoParams(T2, t_echo, args.amplitude, TAU * args.offset_hz)
    cutoff = None if args.cutoff_hz is None else TAU * args.cutoff_hz
    waves = pipeline(params, cfg.gamma_m, cfg.omega_m, dt=args.dt_us * 1e-6, decimation=args.decimation,
                     lowpass_cutoff=cutoff)
    if args.n_avg > 1 and args.noise_sigma > 0:
        waves["averaged"] = average_noisy_shots(waves["membrane"], args.noise_sigma, args.n_avg, args.seed or 0)
    man = _manifest(args)
    if args.out:
        for name, w in waves.items():
            _emit(args, f"{name}.csv", w.to_csv(man))
    summary = {
        "input_peak_time_s": waves["input"].peak_time(),
        "membrane_peak_time_s": waves["membrane"].peak_time(),
        "membrane_peak": float(np.max(waves["membrane"].magnitude)),
        "off_resonance_suppression_dB": off_resonance_suppression_db(
            cfg.gamma_m, cfg.omega_m, T2, t_echo, TAU * args.control_offset_hz,
            dt=args.dt_us * 1e-6, decimation=args.decimation, lowpass_cutoff=cutoff),
        "control_offset_Hz": args.control_offset_hz,
    }
    _emit(args, "echo.json", dumps_json(summary, man))
    return EXIT_OK


def _axis_values(args):
    if args.axis == "drive_dbm":
        lo, hi = float(args.start), float(args.stop)
    elif args.axis == "d0":
        lo, hi = (_quantity(v, "length", "sweep range") for v in (args.start, args.stop))
    elif args.axis == "T_eff":
        lo, hi = (_quantity(v, "temperature", "sweep range") for v in (args.start, args.stop))
    else:
        lo, hi = float(args.start), float(args.stop)
    if args.num < 1:
        raise UsageError("--num must be >= 1")
    if args.log:
        if lo <= 0 or hi <= 0:
            raise UsageError("logarithmic sweeps need positive endpoints")
        return np.geomspace(lo, hi, args.num)
    return np.linspace(lo, hi, args.num)


def _sweep_point(cfg, axis, value, eta_mode):
    if axis == "d0":
        eta = rescale_eta(cfg.eta_cap, cfg.d0, value, cfg.A_cap, cfg.C_t, cfg.C_p, mode=eta_mode)
        c = cfg.replace(d0=value, eta_cap=eta)
    elif axis == "drive_dbm":
        c = cfg.replace(P_drive=PowerLevel.from_dbm(value))
    elif axis == "kappa_i_ratio":
        if not 0 < value < 1:
            raise UsageError("kappa_i_ratio values must lie in (0, 1)")
        c = cfg.replace(kappa_i=value * cfg.kappa_iT, gamma_i=(1 - value) * cfg.kappa_iT)
    else:
        c = cfg.replace(**{axis: value})
    b = noise_budget(c)
    out = {"C_em": ElectromechCoupling.from_config(c).C_em_resonant, **b.quanta(),
           "total_K": quanta_to_kelvin(b.total, c.omega_LC)}
    out["snr_echo"] = snr(c, "echo").snr_single_shot if c.T2_star is not None and c.S_signal_quanta is not None else float("nan")
    return out


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    values = _axis_values(args)
    metrics = args.metrics.split(",") if args.metrics else list(SWEEP_METRICS)
    bad = [m for m in metrics if m not in SWEEP_METRICS]
    if bad:
        raise UsageError(f"unknown metric(s) {bad}; choose from {SWEEP_METRICS}")
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(lambda v: _sweep_point(cfg, args.axis, float(v), args.eta_mode), values))
    rows = [(float(v), m, res[m]) for v, res in zip(values, results) for m in metrics]
    _emit(args, "sweep.csv", format_csv("sweep", rows, _manifest(args, axis=args.axis)))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _global_options(parser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=d, help="experiment config (default: canonical)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", default=d,
                        help="override a config field, e.g. --set 'd0 = 100 nm' (repeatable)")
    parser.add_argument("--out", metavar="DIR", default=d, help="write outputs here instead of stdout")
    parser.add_argument("--seed", type=int, default=d, help="seed for synthetic data")
    parser.add_argument("--prospective", action="store_true", default=d if suppress else False,
                        help="use the improved setup: 100 nm gap, +30 dBm, overcoupled, no phase noise")
    parser.add_argument("-v", "--verbose", action="store_true", default=d if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emo-nmr", description="Electro-mechano-optical NMR transduction toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        _global_options(sp, suppress=True)
        sp.set_defaults(func=func)
        return sp

    def tone_opts(sp):
        sp.add_argument("--tone-dbm", type=float, default=-65.0, help="calibration tone power (dBm)")
        sp.add_argument("--tone-offset-hz", type=float, default=500.0, help="tone offset from the mechanical line")

    sp = add("spectrum", cmd_spectrum, "optical sideband spectrum or a complex transfer function")
    sp.add_argument("--kind", choices=("sideband", "transfer"), default="sideband")
    sp.add_argument("--drive-dbm", help="drive power(s): '15', '0,6,12' or '0:21:3'")
    sp.add_argument("--points", type=int, default=4096)
    sp.add_argument("--halfwidth", type=float, default=20.0, help="grid half-width in mechanical linewidths")
    sp.add_argument("--signal", type=float, default=0.0, help="rf signal amplitude S (sqrt(quanta/s))")
    sp.add_argument("--no-shift", action="store_true", help="ignore the drive-induced frequency shift")
    sp.add_argument("--channel", choices=CHANNELS, default="S")
    sp.add_argument("--quadrature", choices=("X", "Y"), default="X")
    sp.add_argument("--tone-dbm", type=float, default=None)
    sp.add_argument("--tone-offset-hz", type=float, default=500.0)

    sp = add("budget", cmd_budget, "noise budget in quanta and kelvin")
    sp.add_argument("--overcoupled", action="store_true", help="unit coupling efficiencies")

    sp = add("snr", cmd_snr, "signal-to-noise ratio")
    sp.add_argument("--variant", choices=SNR_VARIANTS, default="echo")
    sp.add_argument("--n-avg", type=int, default=1)
    sp.add_argument("--signal-flux", type=float, default=None, help="S^2 in quanta/s")
    sp.add_argument("--bandwidth-hz", type=float, default=None)

    sp = add("calibrate", cmd_calibrate, "fit calibration parameters to sweep data")
    sp.add_argument("kind", choices=("gap", "bath", "optomech"))
    sp.add_argument("--data", help="sweep CSV (power_dbm, value, sigma)")
    sp.add_argument("--noise-data")
    sp.add_argument("--tone-data")
    sp.add_argument("--convention", choices=("closed_form", "spectral"), default="closed_form")
    sp.add_argument("--L-delta", type=float, default=5.8e-10, help="tone-window phase-noise weight")
    sp.add_argument("--synthesize", action="store_true", help="write synthetic sweep data instead of fitting")
    sp.add_argument("--powers", default="-10:35:1", help="drive powers for --synthesize")
    sp.add_argument("--noise", type=float, default=0.0, help="relative scatter for --synthesize")
    tone_opts(sp)

    sp = add("cavity", cmd_cavity, "hemispherical cavity design")
    sp.add_argument("--R-mirror", help="mirror radius, e.g. '75 mm' (default: config)")
    sp.add_argument("--wavelength", help="e.g. '780 nm' (default: config)")
    sp.add_argument("--waist-diameter", default="180 um")
    sp.add_argument("--length", help="also report the waist for this cavity length")

    sp = add("echo", cmd_echo, "spin echo through the membrane response")
    sp.add_argument("--offset-hz", type=float, default=0.0, help="echo carrier offset from resonance")
    sp.add_argument("--control-offset-hz", type=float, default=2500.0)
    sp.add_argument("--t-echo-ms", type=float, default=3.0)
    sp.add_argument("--amplitude", type=float, default=1.0)
    sp.add_argument("--dt-us", type=float, default=0.5)
    sp.add_argument("--decimation", type=int, default=20)
    sp.add_argument("--cutoff-hz", type=float, default=None, help="low-pass cutoff (default 5 gamma_m)")
    sp.add_argument("--n-avg", type=int, default=1)
    sp.add_argument("--noise-sigma", type=float, default=0.0)

    sp = add("sweep", cmd_sweep, "parameter sweep to long-format CSV")
    sp.add_argument("axis", choices=SWEEP_AXES)
    sp.add_argument("--start", required=True, help="e.g. '1.4 um', '0', '205 K'")
    sp.add_argument("--stop", required=True)
    sp.add_argument("--num", type=int, default=8)
    sp.add_argument("--log", action="store_true")
    sp.add_argument("--metrics", help=f"comma list from {','.join(SWEEP_METRICS)}")
    sp.add_argument("--eta-mode", choices=("geometry", "scaled"), default="geometry")
    sp.add_argument("--workers", type=int, default=4)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SchemaError, UsageError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"emo-nmr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, NoStableSolution, ValueError, ArithmeticError) as exc:
        print(f"emo-nmr {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
