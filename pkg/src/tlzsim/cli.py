"""tlz-scan command line front end.

Subcommands: sweep (single propagation), scan (1D/2D parameter grids),
pt-locus (perfect-tunneling speed per curvature), pulse (waveform
synthesis/verification/export), robustness (amplitude-error intervals),
dephase (linewidth-averaged point).  Exit codes: 0 success, 1 when
--strict and per-point failures occurred, 2 on spec/config/IO errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .analytics import pt_speed, pt_speed_numeric_auto, tlz_probability
from .errors import TlzError
from .model import DriveParams, sweep_duration
from .noise import (
    DephasingModel,
    amplitude_error_probability,
    dephased_probability,
    drive_robustness_interval,
    rabi_probability,
    rabi_robustness_interval,
)
from .propagate import PropagationOptions, propagate_sweep
from .pulse import synthesize_drive, write_waveform_csv
from .scan import Axis, ScanSpec, csv_text, export_csv, export_svg, pt_locus, run_scan
from .version import __version__

CONFIG_KEYS = {
    "mode", "axis1", "axis2", "m", "nu", "kappa", "F", "T",
    "f_r_max", "f_det_max", "t_cap",
    "fwhm", "n_nodes", "span_sigmas", "alpha", "channel",
}

_FLOAT_KEYS = {
    "m", "nu", "kappa", "F", "T", "f_r_max", "f_det_max", "t_cap",
    "fwhm", "span_sigmas", "alpha",
}


class CliError(Exception):
    """Configuration or usage problem; maps to exit code 2."""


def parse_config(path: str) -> dict:
    """Read a flat key=value config file, rejecting unknown keys."""
    values: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in CONFIG_KEYS:
                    raise CliError(f"{path}:{lineno}: unknown config key {key!r}")
                if key in _FLOAT_KEYS:
                    try:
                        values[key] = float(value)
                    except ValueError as exc:
                        raise CliError(f"{path}:{lineno}: bad float for {key}: {value!r}") from exc
                elif key == "n_nodes":
                    values[key] = int(value)
                else:
                    values[key] = value
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    return values


def parse_axis(text: str) -> Axis:
    """Parse name:lo:hi:count[:scale]."""
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise CliError(f"axis must be name:lo:hi:count[:scale], got {text!r}")
    name, lo, hi, count = parts[0], parts[1], parts[2], parts[3]
    scale = parts[4] if len(parts) == 5 else "linear"
    try:
        return Axis(name=name, lo=float(lo), hi=float(hi), count=int(count), scale=scale)
    except (ValueError, TlzError) as exc:
        raise CliError(f"bad axis {text!r}: {exc}") from exc


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--out", help="output file path")
    parser.add_argument("--format", choices=("csv", "svg"), default="csv")
    parser.add_argument("--jobs", type=int, default=1, help="parallel grid workers")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="suppress the wall-time metadata line for byte-stable output",
    )
    parser.add_argument(
        "--strict",
        action="store_true",
        help="exit 1 when any grid point failed",
    )


def _add_params(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--m", type=float, help="gap parameter (Hz)")
    parser.add_argument("--nu", type=float, help="energy slope (Hz^2)")
    parser.add_argument("--kappa", type=float, help="geodesic curvature (s)")
    parser.add_argument("--F", type=float, help="dimensionless sweep speed")
    parser.add_argument("--T", type=float, help="sweep duration (s); default: hardware-limited")
    parser.add_argument("--f-r-max", type=float, help="max Rabi frequency (Hz)")
    parser.add_argument("--f-det-max", type=float, help="max detuning (Hz)")
    parser.add_argument("--t-cap", type=float, help="duration cap (s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlz-scan",
        description="Twisted Landau-Zener sweep simulator",
    )
    parser.add_argument("--version", action="version", version=f"tlz-scan v{__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="propagate a single sweep and print P")
    _add_common(p)
    _add_params(p)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--abs-tol", type=float, default=1e-12)
    p.add_argument("--bz-offset", type=float, default=0.0)
    p.add_argument("--amp-scale", type=float, default=1.0)

    p = sub.add_parser("scan", help="run a 1D/2D parameter grid")
    _add_common(p)
    _add_params(p)
    p.add_argument("--axis", action="append", default=None, metavar="NAME:LO:HI:COUNT[:SCALE]")
    p.add_argument("--mode", choices=("numeric", "analytic", "dephased", "amplitude-error"))
    p.add_argument("--fwhm", type=float, help="dephasing linewidth FWHM (Hz)")
    p.add_argument("--n-nodes", type=int, help="dephasing quadrature nodes")
    p.add_argument("--span-sigmas", type=float, help="dephasing quadrature span")
    p.add_argument("--alpha", type=float, help="amplitude-error factor")
    p.add_argument("--channel", choices=("drive", "prep", "both"))

    p = sub.add_parser("pt-locus", help="perfect-tunneling speed per curvature")
    _add_common(p)
    _add_params(p)
    p.add_argument("--kappa-range", required=True, metavar="LO:HI:COUNT")
    p.add_argument("--method", choices=("analytic", "numeric"), default="analytic")

    p = sub.add_parser("pulse", help="synthesize, verify and export drive waveforms")
    _add_common(p)
    _add_params(p)
    p.add_argument("--sample-rate", type=float, required=True, help="waveform sample rate (Hz)")
    p.add_argument("--iq", action="store_true", help="export I/Q columns instead of amplitude/phase")

    p = sub.add_parser("robustness", help="amplitude-error robustness interval")
    _add_common(p)
    _add_params(p)
    p.add_argument("--method", choices=("rabi", "tlz"), default="tlz")
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--m-kappa", type=float, help="dimensionless product m*kappa (sets kappa)")
    p.add_argument("--alpha-lo", type=float, default=0.5)
    p.add_argument("--alpha-hi", type=float, default=4.0)
    p.add_argument("--n-grid", type=int, default=36)

    p = sub.add_parser("dephase", help="linewidth-averaged probability at one point")
    _add_common(p)
    _add_params(p)
    p.add_argument("--fwhm", type=float, required=True)
    p.add_argument("--n-nodes", type=int, default=41)
    p.add_argument("--span-sigmas", type=float, default=4.0)

    return parser


def _merged(args: argparse.Namespace, key: str, config: dict, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return config.get(key, default)


def _params_from(args: argparse.Namespace, config: dict, need_f: bool = True) -> DriveParams:
    values = {}
    for key, attr in (
        ("m", "m"), ("nu", "nu"), ("kappa", "kappa"), ("F", "F"), ("T", "T"),
        ("f_r_max", "f_r_max"), ("f_det_max", "f_det_max"), ("t_cap", "t_cap"),
    ):
        merged = _merged(args, attr, config)
        if merged is not None:
            values[key] = merged
    for required in ("m", "nu", "kappa"):
        if required not in values:
            raise CliError(f"missing required parameter --{required}")
    if need_f and "F" not in values:
        raise CliError("missing required parameter --F")
    values.setdefault("F", 0.0)
    return DriveParams(**values)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_sweep(args, config) -> int:
    params = _params_from(args, config)
    if params.T is None:
        params = params.with_duration()
    opts = PropagationOptions(
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        bz_offset=args.bz_offset,
        drive_amp_scale=args.amp_scale,
    )
    result = propagate_sweep(params, opts)
    analytic = tlz_probability(params.m, params.nu, params.kappa, params.F)
    lines = [
        f"P = {result.p:.12g}",
        f"P_analytic = {analytic:.12g}",
        f"T_s = {params.T:.12g}",
        f"norm_drift = {result.norm_drift:.3e}",
        f"n_steps = {result.n_steps}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_scan(args, config) -> int:
    axis_texts = args.axis or []
    for key in ("axis1", "axis2"):
        if not getattr(args, "axis", None) and key in config:
            axis_texts.append(config[key])
    if not axis_texts:
        raise CliError("scan needs at least one --axis (or axis1= in the config)")
    axes = tuple(parse_axis(text) for text in axis_texts)
    mode = _merged(args, "mode", config, "numeric")
    dephasing = None
    if mode == "dephased":
        fwhm = _merged(args, "fwhm", config)
        if fwhm is None:
            raise CliError("dephased mode needs --fwhm")
        dephasing = DephasingModel(
            fwhm=fwhm,
            n_nodes=int(_merged(args, "n_nodes", config, 41)),
            span_sigmas=_merged(args, "span_sigmas", config, 4.0),
        )
    base = _params_from(args, config, need_f="F" not in {a.name for a in axes})
    spec = ScanSpec(
        axes=axes,
        base=base,
        mode=mode,
        dephasing=dephasing,
        alpha=_merged(args, "alpha", config, 1.0),
        channel=_merged(args, "channel", config, "drive"),
    )
    result = run_scan(spec, jobs=max(1, args.jobs))
    if args.format == "svg":
        if not args.out:
            raise CliError("--format svg needs --out")
        export_svg(result, args.out)
    else:
        _emit(csv_text(result, deterministic=args.deterministic), args.out)
    failures = [issue for issue in result.issues if issue.kind == "error"]
    for issue in failures:
        print(f"point {issue.index}: {issue.message}", file=sys.stderr)
    return 1 if (failures and args.strict) else 0


def _cmd_pt_locus(args, config) -> int:
    try:
        lo, hi, count = args.kappa_range.split(":")
        kappas = np.linspace(float(lo), float(hi), int(count))
    except ValueError as exc:
        raise CliError(f"bad --kappa-range {args.kappa_range!r}: {exc}") from exc
    m = _merged(args, "m", config)
    nu = _merged(args, "nu", config)
    if m is None or nu is None:
        raise CliError("pt-locus needs --m and --nu")
    points = pt_locus(
        m, nu, kappas,
        method=args.method,
        f_r_max=_merged(args, "f_r_max", config, 13.6e6),
        f_det_max=_merged(args, "f_det_max", config, 50.0e6),
        t_cap=_merged(args, "t_cap", config, 10.0e-6),
    )
    lines = [f"# tlz-scan v{__version__}", "kappa,f_pt,p_at_pt"]
    for pt in points:
        lines.append(
            ",".join(format(v, ".17g") for v in (pt.kappa, pt.f_pt, pt.p_at_pt))
        )
    _emit("\n".join(lines) + "\n", args.out)
    failures = [pt for pt in points if pt.error]
    for pt in failures:
        print(f"kappa={pt.kappa:g}: {pt.error}", file=sys.stderr)
    return 1 if (failures and args.strict) else 0


def _cmd_pulse(args, config) -> int:
    params = _params_from(args, config)
    if params.T is None:
        params = params.with_duration()
    prog = synthesize_drive(params, args.sample_rate)
    if args.out:
        write_waveform_csv(prog, args.out, iq=args.iq)
    lines = [f"samples = {prog.n_samples}", f"duration_s = {prog.duration:.12g}"]
    prep = prog.prep
    lines.append(
        "prep_rad = "
        f"theta_i={prep.theta_i:.9g} phi_i={prep.phi_i:.9g} "
        f"theta_f={prep.theta_f:.9g} phi_f={prep.phi_f:.9g}"
    )
    for check in prog.constraint_report:
        status = "pass" if check.passed else "FAIL"
        lines.append(
            f"constraint {check.name}: observed {check.observed_max:.6g} "
            f"limit {check.limit:.6g} -> {status}"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _cmd_robustness(args, config) -> int:
    threshold = args.threshold
    if args.method == "rabi":
        interval = rabi_robustness_interval(
            threshold, alpha_lo=args.alpha_lo, alpha_hi=args.alpha_hi
        )
        prob = rabi_probability
    else:
        m = _merged(args, "m", config)
        nu = _merged(args, "nu", config)
        if m is None or nu is None:
            raise CliError("tlz robustness needs --m and --nu")
        kappa = _merged(args, "kappa", config)
        if args.m_kappa is not None:
            if m == 0:
                raise CliError("--m-kappa needs m > 0")
            kappa = args.m_kappa / m
        if kappa is None:
            raise CliError("tlz robustness needs --kappa or --m-kappa")
        seed = DriveParams(
            m=m, nu=nu, kappa=kappa, F=pt_speed(m, nu, kappa).f_pt or -1e-3,
            f_r_max=_merged(args, "f_r_max", config, 13.6e6),
            f_det_max=_merged(args, "f_det_max", config, 50.0e6),
            t_cap=_merged(args, "t_cap", config, 10.0e-6),
        )
        # Error-free optimum speed, as in the comparison-figure procedure.
        cond = pt_speed_numeric_auto(seed)
        params = DriveParams(
            m=m, nu=nu, kappa=kappa, F=cond.f_pt,
            f_r_max=seed.f_r_max, f_det_max=seed.f_det_max, t_cap=seed.t_cap,
        ).with_duration()
        interval = drive_robustness_interval(
            params, threshold,
            alpha_lo=args.alpha_lo, alpha_hi=args.alpha_hi, n_grid=args.n_grid,
        )

        def prob(alpha: float) -> float:
            return amplitude_error_probability(params, alpha, "drive")

    lines = [f"method = {interval.method}", f"threshold = {threshold:g}"]
    if interval.empty:
        lines.append("interval = empty (error-free point below threshold)")
    else:
        lines.append(f"alpha_lo = {interval.alpha_lo:.6g}")
        lines.append(f"alpha_hi = {interval.alpha_hi:.6g}")
        lines.append(f"width = {interval.width:.6g}")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        alphas = np.linspace(args.alpha_lo, args.alpha_hi, args.n_grid)
        rows = ["alpha,P"] + [
            f"{format(a, '.17g')},{format(prob(float(a)), '.17g')}" for a in alphas
        ]
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")
    return 0


def _cmd_dephase(args, config) -> int:
    params = _params_from(args, config)
    model = DephasingModel(
        fwhm=args.fwhm, n_nodes=args.n_nodes, span_sigmas=args.span_sigmas
    )
    p = dephased_probability(params, model)
    sys.stdout.write(f"P_lw = {p:.12g}\n")
    return 0


_COMMANDS = {
    "sweep": _cmd_sweep,
    "scan": _cmd_scan,
    "pt-locus": _cmd_pt_locus,
    "pulse": _cmd_pulse,
    "robustness": _cmd_robustness,
    "dephase": _cmd_dephase,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = parse_config(args.config) if args.config else {}
        return _COMMANDS[args.command](args, config)
    except (CliError, TlzError, OSError) as exc:
        print(f"tlz-scan: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
