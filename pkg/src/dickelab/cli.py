"""Batch driver: parameter scans, table lookups, simulations, CSV output.

Every command writes one CSV whose comment block (# key = value lines)
records all resolved parameters, the tool version and the seed; feeding that
block back as a config file reproduces the identical file.  All frequencies
are in units of the atomic frequency (omega_z = 1); the CLI only accepts
dimensionless ratios.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
import numpy as np

from . import __version__
from .errors import NumericsError, ValidationError
from .exponents import (
    crossover_time,
    finite_temperature_window_study,
    fit_power_law,
    predicted_exponents,
)
from .greens import Scenario, standard_params
from .langevin import SimConfig, finite_size_scan, simulate
from .observables import (
    QuadConfig,
    correlation_time,
    mean_square_displacement,
    photon_number,
    response_time,
)

_SCENARIOS = {
    "both": Scenario.BOTH_TZERO,
    "both-thermal": Scenario.BOTH_THERMAL,
    "mb-only": Scenario.MB_ONLY,
    "nmb-only": Scenario.NMB_ONLY,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _track(registry, parser):
    registry.append(parser)
    return parser


def read_config(path: str) -> dict:
    """Flat key = value file; '#' starts a comment; keys use - or _."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line.startswith("#"):
                line = line[1:].strip()
            if not line or "=" not in line:
                continue
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            out[key] = val.strip()
    return out


def parse_comment_header(path: str) -> dict:
    """Recover the key = value block from a CSV written by this tool."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                key, _, val = body.partition("=")
                out[key.strip().replace("-", "_")] = val.strip()
    return out


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path: str, meta: dict, columns: list[str], rows) -> None:
    """Atomic CSV write with a deterministic # key = value comment block."""
    lines = [f"# dickelab {__version__}"]
    for key in sorted(meta):
        lines.append(f"# {key} = {_fmt(meta[key])}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    payload = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".dickelab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _add_model_args(sub):
    sub.add_argument("--s", type=float, help="sub-ohmic exponent in (0,1)")
    sub.add_argument("--scenario", choices=sorted(_SCENARIOS), default="both")
    sub.add_argument("--delta", type=float, default=2.0, help="cavity detuning / omega_z")
    sub.add_argument("--kappa", type=float, default=0.5, help="cavity decay / omega_z")
    sub.add_argument("--gamma", type=float, default=0.1, help="bath coupling / omega_z")
    sub.add_argument("--omega-m", type=float, default=1e4, help="bath UV cutoff / omega_z")
    sub.add_argument("--t-b", type=float, default=0.0, help="bath temperature / omega_z")
    sub.add_argument("--mu-b", type=float, default=0.0, help="bath chemical potential / omega_z")
    sub.add_argument("--self-energy", choices=["closed", "finite-cutoff"], default="closed")


def _model(args, dy_rel: float):
    scen = _SCENARIOS[args.scenario]
    if scen is Scenario.BOTH_THERMAL and args.t_b <= 0.0:
        raise ValidationError("scenario both-thermal requires --t-b > 0")
    return standard_params(
        s=args.s,
        dy_rel=dy_rel,
        gamma=args.gamma,
        delta=args.delta,
        kappa=args.kappa,
        omega_M=args.omega_m,
        T_b=args.t_b,
        mu_b=args.mu_b,
        markovian_on=scen is not Scenario.NMB_ONLY,
        nonmarkovian_on=scen is not Scenario.MB_ONLY,
        self_energy=args.self_energy,
    )


def _meta(args, command, **extra) -> dict:
    meta = {"command": command}
    skip = {"config", "func"}
    for key, val in vars(args).items():
        if key in skip or val is None:
            continue
        meta[key.replace("_", "-")] = val
    meta.update(extra)
    return meta


def _quadcfg(args) -> QuadConfig:
    return QuadConfig(rel_tol=args.rel_tol)


# ---------------------------------------------------------------------------
# commands


def _cmd_scan_photon_number(args):
    dys = np.geomspace(args.dy_min, args.dy_max, args.points)
    cfg = _quadcfg(args)
    rows = [(dy, photon_number(_model(args, dy), cfg)) for dy in dys]
    write_csv(args.output, _meta(args, "scan-photon-number"), ["dy_rel", "photon_number"], rows)
    return 0


def _cmd_greens_time(args):
    p = _model(args, args.dy)
    cfg = _quadcfg(args)
    func = {
        "correlation": correlation_time,
        "response": response_time,
        "msd": mean_square_displacement,
    }[args.which]
    ts = np.geomspace(args.t_min, args.t_max, args.points)
    rows = [(t, func(t, p, cfg)) for t in ts]
    write_csv(args.output, _meta(args, "greens-time"), ["t", args.which], rows)
    return 0


def _cmd_fit_exponent(args):
    lo, hi = _parse_window(args.window)
    dys = np.geomspace(lo, hi, args.points)
    cfg = _quadcfg(args)
    pts = [(dy, photon_number(_model(args, dy), cfg)) for dy in dys]
    fit = fit_power_law(pts, window=(lo, hi))
    measured = -fit.exponent
    pred = predicted_exponents(_SCENARIOS[args.scenario], args.s).photon_flux
    status = "pass" if isinstance(pred, float) and abs(measured - pred) <= args.tol else "fail"
    rows = [(args.s, args.scenario, lo, hi, measured, pred, fit.stderr, fit.r_squared, status)]
    write_csv(
        args.output,
        _meta(args, "fit-exponent"),
        ["s", "scenario", "window_lo", "window_hi", "measured_nu", "predicted_nu",
         "stderr", "r_squared", "status"],
        rows,
    )
    return 0 if status == "pass" else 2


def _cmd_crossover(args):
    p = _model(args, 0.0)
    cfg = _quadcfg(args)
    dys = [float(x) for x in args.dy_list.split(",")]
    rows = [(dy, crossover_time(p, dy, cfg=cfg)) for dy in dys]
    write_csv(args.output, _meta(args, "crossover"), ["dy_rel", "t_c"], rows)
    if len(rows) >= 2:
        slope = np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0]
        print(f"crossover-time exponent (slope of log t_c vs log dy): {slope:+.4f}")
    return 0


def _cmd_finite_size(args):
    n_list = [float(x) for x in args.n_list.split(",")]
    template = SimConfig(
        s=args.s, v=args.v, r=0.0, kappa_eff=args.kappa_eff, g=args.g,
        dt=args.dt, steps=args.steps, burn_in=args.burn_in,
        ensemble=args.ensemble, seed=args.seed,
        noise=args.noise, T_b=args.t_b, memory=args.memory,
    )
    fit, records = finite_size_scan(template, n_list, measure_timescale=args.timescale)
    cols = ["n_atoms", "x2", "stderr", "dt"] + (["tau_acf"] if args.timescale else [])
    rows = [tuple(rec[c] for c in cols) for rec in records]
    write_csv(args.output, _meta(args, "finite-size", alpha=fit.exponent), cols, rows)
    print(f"finite-size exponent alpha = {fit.exponent:+.4f} (stderr {fit.stderr:.4f})")
    return 0


def _cmd_table(args):
    pred = predicted_exponents(_SCENARIOS[args.scenario], args.s)
    cols = ["scenario", "s", "photon_flux", "corr_critical", "corr_away",
            "resp_critical", "resp_away", "finite_size", "crossover", "finite_size_time"]
    rows = [(pred.scenario.value, pred.s, pred.photon_flux, pred.corr_critical,
             pred.corr_away, pred.resp_critical, pred.resp_away, pred.finite_size,
             pred.crossover, pred.finite_size_time)]
    if args.measure:
        lo, hi = _parse_window(args.window)
        dys = np.geomspace(lo, hi, 7)
        cfg = _quadcfg(args)
        pts = [(dy, photon_number(_model(args, dy), cfg)) for dy in dys]
        fit = fit_power_law(pts, window=(lo, hi))
        measured = -fit.exponent
        ok = isinstance(pred.photon_flux, float) and abs(measured - pred.photon_flux) <= args.tol
        cols += ["measured_photon_flux", "status"]
        rows = [rows[0] + (measured, "pass" if ok else "fail")]
    write_csv(args.output, _meta(args, "table"), cols, rows)
    return 0


def _cmd_langevin(args):
    cfg = SimConfig(
        s=args.s, v=args.v, r=args.r, kappa_eff=args.kappa_eff, g=args.g,
        n_atoms=args.n_atoms, dt=args.dt, steps=args.steps, burn_in=args.burn_in,
        ensemble=args.ensemble, seed=args.seed, noise=args.noise, T_b=args.t_b,
        x0=args.x0, memory=args.memory,
    )
    result = simulate(cfg)
    meta = _meta(args, "langevin")
    if cfg.ensemble == 1:
        ts = (np.arange(len(result.samples)) + cfg.burn_in) * cfg.dt
        rows = zip(ts, result.samples)
        write_csv(args.output, meta, ["t", "x"], rows)
    else:
        ts = (np.arange(result.samples.shape[1]) + cfg.burn_in) * cfg.dt
        mean = result.samples.mean(axis=0)
        second = (result.samples**2).mean(axis=0)
        rows = zip(ts, mean, second)
        write_csv(args.output, meta, ["t", "x_mean", "x2_mean"], rows)
    return 0


def _cmd_window_study(args):
    windows = [_parse_window(w) for w in args.windows.split(",")]
    p = _model(args, 0.0)
    fits = finite_temperature_window_study(p, windows, cfg=_quadcfg(args))
    rows = [
        (w[0], w[1], -f.exponent, f.stderr, f.r_squared)
        for w, f in zip(windows, fits)
    ]
    write_csv(args.output, _meta(args, "window-study"),
              ["window_lo", "window_hi", "measured_nu", "stderr", "r_squared"], rows)
    return 0


def _parse_window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except Exception as exc:
        raise ValidationError(f"window must be LO:HI, got {text!r}") from exc
    if not 0.0 < lo < hi:
        raise ValidationError("window must satisfy 0 < lo < hi")
    return lo, hi


# ---------------------------------------------------------------------------


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    parser = _Parser(prog="dickelab", description=__doc__)
    parser.add_argument("--config", help="flat key = value config file (flags override)")
    sub = parser.add_subparsers(dest="command", required=True)
    all_parsers = [parser]

    def common(sp, model=True):
        sp.add_argument("--config", help="flat key = value config file (flags override)")
        sp.add_argument("--output", default="out.csv", help="CSV output path")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--rel-tol", type=float, default=1e-10)
        if model:
            _add_model_args(sp)

    sp = _track(all_parsers, sub.add_parser("scan-photon-number", help="photon number vs distance to criticality"))
    common(sp)
    sp.add_argument("--dy-min", type=float, default=1e-8)
    sp.add_argument("--dy-max", type=float, default=1e-6)
    sp.add_argument("--points", type=int, default=9)
    sp.set_defaults(func=_cmd_scan_photon_number)

    sp = _track(all_parsers, sub.add_parser("greens-time", help="time-domain correlator / response / MSD"))
    common(sp)
    sp.add_argument("--which", choices=["correlation", "response", "msd"], default="correlation")
    sp.add_argument("--dy", type=float, default=0.0, help="relative distance (y_c - y)/y_c")
    sp.add_argument("--t-min", type=float, default=1e2)
    sp.add_argument("--t-max", type=float, default=1e4)
    sp.add_argument("--points", type=int, default=25)
    sp.set_defaults(func=_cmd_greens_time)

    sp = _track(all_parsers, sub.add_parser("fit-exponent", help="measure the photon-flux exponent over a window"))
    common(sp)
    sp.add_argument("--window", default="1e-8:1e-6", help="dy window LO:HI")
    sp.add_argument("--points", type=int, default=9)
    sp.add_argument("--tol", type=float, default=0.02)
    sp.set_defaults(func=_cmd_fit_exponent)

    sp = _track(all_parsers, sub.add_parser("crossover", help="crossover time t_c per distance to criticality"))
    common(sp)
    sp.add_argument("--dy-list", default="1e-3,1e-4", help="comma-separated dy values")
    sp.set_defaults(func=_cmd_crossover)

    sp = _track(all_parsers, sub.add_parser("window-study", help="finite-T photon-flux exponent per fit window"))
    common(sp)
    sp.add_argument("--windows", default="1e-6:1e-4,1e-10:1e-8",
                    help="comma-separated LO:HI windows")
    sp.set_defaults(func=_cmd_window_study)

    sp = _track(all_parsers, sub.add_parser("table", help="predicted exponents for a scenario"))
    common(sp)
    sp.add_argument("--measure", action="store_true",
                    help="also measure the photon-flux exponent and report pass/fail")
    sp.add_argument("--window", default="1e-8:1e-6")
    sp.add_argument("--tol", type=float, default=0.02)
    sp.set_defaults(func=_cmd_table)

    sp = _track(all_parsers, sub.add_parser("finite-size", help="stationary <x^2> vs atom number at criticality"))
    common(sp, model=False)
    sp.add_argument("--s", type=float)
    sp.add_argument("--v", type=float, default=1.0)
    sp.add_argument("--kappa-eff", type=float, default=0.5)
    sp.add_argument("--g", type=float, default=1.0)
    sp.add_argument("--n-list", default="1e2,3.16e2,1e3,3.16e3,1e4,3.16e4,1e5")
    sp.add_argument("--dt", type=float, default=0.02)
    sp.add_argument("--steps", type=int, default=60000)
    sp.add_argument("--burn-in", type=int, default=None)
    sp.add_argument("--ensemble", type=int, default=32)
    sp.add_argument("--noise", choices=["white", "colored"], default="white")
    sp.add_argument("--t-b", type=float, default=0.0)
    sp.add_argument("--memory", choices=["full", "soe", "auto"], default="auto")
    sp.add_argument("--timescale", action="store_true",
                    help="also measure the autocorrelation 1/e time per N")
    sp.set_defaults(func=_cmd_finite_size)

    sp = _track(all_parsers, sub.add_parser("langevin", help="integrate the fractional Langevin equation"))
    common(sp, model=False)
    sp.add_argument("--s", type=float)
    sp.add_argument("--v", type=float, default=1.0)
    sp.add_argument("--r", type=float, default=0.0)
    sp.add_argument("--kappa-eff", type=float, default=0.5)
    sp.add_argument("--g", type=float, default=0.0)
    sp.add_argument("--n-atoms", type=float, default=math.inf)
    sp.add_argument("--dt", type=float, default=0.01)
    sp.add_argument("--steps", type=int, default=100000)
    sp.add_argument("--burn-in", type=int, default=None)
    sp.add_argument("--ensemble", type=int, default=1)
    sp.add_argument("--noise", choices=["white", "colored"], default="white")
    sp.add_argument("--t-b", type=float, default=0.0)
    sp.add_argument("--x0", type=float, default=0.0)
    sp.add_argument("--memory", choices=["full", "soe", "auto"], default="auto")
    sp.set_defaults(func=_cmd_langevin)

    if defaults:
        coerced = {k: _coerce(v) for k, v in defaults.items()}
        for px in all_parsers:
            px.set_defaults(**coerced)
    return parser


def _coerce(text: str):
    if not isinstance(text, str):
        return text
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    threads = os.environ.get("DICKELAB_THREADS")
    if threads:
        import numba

        numba.set_num_threads(int(threads))
    try:
        pre = _Parser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        defaults = read_config(known.config) if known.config else None
        parser = build_parser(defaults)
        args = parser.parse_args(argv)
        if getattr(args, "s", None) is None:
            raise ValidationError("--s is required (flag or config)")
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
