"""
Command-line interface.

Every subcommand writes plot-ready CSV/JSON artifacts into ``--output-dir``
and prints a short summary. Failures print a single JSON line to stderr of
the form ``{"error": "<Type>", "message": "...", "exit_code": N}`` and exit
with the code of that error type.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .crystal import B_AXIS, D1, D2, DEFAULT_CONSTANTS, MagneticClass, find_site
from .errors import ConfigError, DataIOError, InsufficientData, OEEMError
from .fitting import LinePositionSeries, fit_gyromagnetic, fit_hyperbola
from .modulation import ModulationParams, TraceMode, oracle_deviation, synthesize_trace
from .prominence import FieldSearchSpace, prominence_array, prominence_table, rho_max_with_field, rho_scan
from .spectral import DEFAULT_PAD_FACTOR, DEFAULT_THRESHOLD_SIGMA, detrend, find_peaks, spectrum
from .spinmodel import SpinBranch, field_components, load_g_tensors, site_coupling
from .sweep import SweepSpec, predict_linemap, simulate_sweep

_AXES = {"d1": D1, "d2": D2, "b": B_AXIS}


def parse_axis(text):
    """``d1``, ``d2``, ``b`` or three comma-separated components."""
    key = text.strip().lower()
    if key in _AXES:
        return _AXES[key].copy()
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad axis {text!r}") from None
    if v.shape != (3,) or not np.linalg.norm(v) > 0:
        raise argparse.ArgumentTypeError(f"axis needs three components, not all zero: {text!r}")
    return v / np.linalg.norm(v)


def parse_vector(text):
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad vector {text!r}") from None
    if v.shape != (3,):
        raise argparse.ArgumentTypeError(f"need three comma-separated values: {text!r}")
    return v


class Context:
    """Resolved configuration shared by the subcommands."""

    def __init__(self, args):
        cfg = io.RunConfig.load(args.config) if args.config else io.RunConfig()
        g_file = args.g_tensors or cfg.g_tensor_file
        site_file = args.sites or cfg.site_file
        for p in (g_file, site_file):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"file not found: {p}")
        try:
            self.g_pair = load_g_tensors(g_file)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad g-tensor file: {exc}") from exc
        self.sites = io.read_sites(site_file) if site_file else io.RunConfig().site_catalog()
        g_y = args.g_y if args.g_y is not None else cfg.constants.get("g_y")
        self.constants = DEFAULT_CONSTANTS if g_y is None else DEFAULT_CONSTANTS.with_g_y(float(g_y))
        self.seed = args.seed if args.seed is not None else cfg.seed
        self.output_dir = Path(args.output_dir or cfg.output_dir)
        self.trace_adapter = cfg.trace_adapter

    def out(self, name):
        return self.output_dir / name

    def select(self, labels):
        if not labels:
            return list(range(len(self.sites)))
        try:
            return [find_site(self.sites, lab) for lab in labels]
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None


def _field_from(args):
    if args.field is not None:
        return args.field
    if args.field_b is not None:
        return args.field_b * B_AXIS
    raise ConfigError("give --field-b or --field")


def _tau(args):
    if args.dtau <= 0 or args.tau_max <= 0:
        raise ConfigError("--dtau and --tau-max must be positive")
    return np.arange(int(round(args.tau_max / args.dtau)) + 1) * args.dtau


# subcommands

def cmd_sites(ctx, args):
    path = io.write_sites(ctx.out("sites.csv"), ctx.sites)
    for s in ctx.sites:
        print(f"{s.label:>4} {s.position[0]:8.3f} {s.position[1]:8.3f} {s.position[2]:8.3f} "
              f"{s.distance:6.3f}")
    return [path]


def cmd_predict(ctx, args):
    b_ext = _field_from(args)
    # hyperbola components are signed along b for --field-b, else along the field
    axis = B_AXIS if args.field is None else b_ext / np.linalg.norm(b_ext)
    branch, cls = SpinBranch(args.branch), MagneticClass(args.magnetic_class)
    rows = []
    for i in ctx.select(args.site):
        site = ctx.sites[i]
        c = site_coupling(site, ctx.g_pair, b_ext, branch, cls, ctx.constants)
        par_g, perp_g, par_e, perp_e = field_components(c, axis)
        rows.append({
            "site": site.label,
            "rho": c.rho,
            "p": c.p,
            "delta_g_hz": c.delta_g,
            "delta_e_hz": c.delta_e,
            "a_g_hz": c.a_g,
            "a_e_hz": c.a_e,
            "b_er_g_t": c.b_er_g.tolist(),
            "b_er_e_t": c.b_er_e.tolist(),
            "hyperbola": {"b_par_g_t": par_g, "b_perp_g_t": perp_g,
                          "b_par_e_t": par_e, "b_perp_e_t": perp_e},
        })
        print(f"{site.label:>4} rho={c.rho:.3f} p={c.p:.4f} dg={c.delta_g / 1e3:.2f} kHz "
              f"de={c.delta_e / 1e3:.2f} kHz A_g={c.a_g / 1e3:.1f} kHz A_e={c.a_e / 1e3:.1f} kHz")
    report = {"b_ext_t": b_ext.tolist(), "branch": branch.value, "class": cls.value,
              "g_y": ctx.constants.g_y, "sites": rows}
    return [io.write_json(ctx.out("predict.json"), report)]


def cmd_sweep(ctx, args):
    labels = tuple(ctx.sites[i].label for i in ctx.select(args.site))
    mags = np.linspace(args.b_min, args.b_max, args.n_fields)
    spec = SweepSpec(mags, tuple(args.axis), tuple(args.tilt), SpinBranch(args.branch), labels,
                     args.rho_sat)
    lm = predict_linemap(spec, ctx.g_pair, ctx.sites, ctx.constants)
    paths = [io.write_linemap(ctx.out("linemap.csv"), lm)]
    meta = {"rho_sat": args.rho_sat, "axis": list(map(float, args.axis)), "tilt_deg": args.tilt,
            "direction": spec.direction.tolist(), "branch": spec.branch.value, "sites": list(labels),
            "note": "magnitudes are free-space estimates; line positions are authoritative"}
    paths.append(io.write_json(io.sidecar_path(paths[0]), meta))
    print(f"line map: {len(labels)} sites x {mags.size} fields x 2 classes x 4 components")
    if args.simulate:
        sm = simulate_sweep(spec, ctx.g_pair, _tau(args), args.t2, args.gamma, args.mode,
                            args.pad_factor, not args.single_class, MagneticClass(args.magnetic_class),
                            args.noise, ctx.seed, args.workers, ctx.sites, ctx.constants)
        paths.append(io.write_sweepmap(ctx.out("sweepmap.csv"), sm))
        sm_meta = dict(sm.meta, native_resolution_hz=sm.native_resolution, **meta)
        paths.append(io.write_json(io.sidecar_path(paths[-1]), sm_meta))
        print(f"sweep map: {sm.b.size} fields x {sm.freq.size} bins")
    return paths


def cmd_simulate(ctx, args):
    tau = _tau(args)
    if args.spin:
        spins = np.array(args.spin, dtype=float)
        extra = {}
    else:
        b_ext = _field_from(args)
        branch, cls = SpinBranch(args.branch), MagneticClass(args.magnetic_class)
        cs = [site_coupling(ctx.sites[i], ctx.g_pair, b_ext, branch, cls, ctx.constants)
              for i in ctx.select(args.site)]
        spins = np.array([[c.delta_g, c.delta_e, c.rho] for c in cs])
        extra = {"b_ext_t": b_ext.tolist(), "b_tesla": float(np.dot(b_ext, B_AXIS)),
                 "sites": [c.site_label for c in cs], "branch": branch.value, "class": cls.value}
    params = ModulationParams(spins, args.t2, args.gamma, TraceMode(args.mode))
    trace = synthesize_trace(params, tau, args.noise, ctx.seed, args.stream)
    trace.meta.update(extra)
    path = io.write_trace(ctx.out(args.name), trace)
    print(f"trace: {tau.size} points, dtau={tau[1] - tau[0]:.3g} s, {len(spins)} spin(s)")
    return [path, io.sidecar_path(path)]


def _load_trace(ctx, path):
    if ctx.trace_adapter:
        return io.TraceAdapter.from_dict(ctx.trace_adapter).read(path)
    return io.read_trace(path)


def cmd_spectrum(ctx, args):
    trace = _load_trace(ctx, args.trace)
    resid = detrend(trace)
    spec = spectrum(resid, args.pad_factor, args.pad_to, args.window)
    peaks = find_peaks(spec, args.threshold)
    stem = args.name
    paths = [io.write_spectrum(ctx.out(f"{stem}.csv"), spec),
             io.write_peaks(ctx.out(f"{stem}_peaks.csv"), peaks)]
    meta = {"detrend": resid.meta["detrend"], "pad_factor": spec.pad_factor, "nfft": spec.nfft,
            "native_resolution_hz": spec.native_resolution, "threshold_sigma": args.threshold,
            "window": args.window, "trace": str(args.trace)}
    if "b_tesla" in trace.meta:
        meta["b_tesla"] = trace.meta["b_tesla"]
    paths += [io.write_json(io.sidecar_path(p), meta) for p in paths[:2]]
    for p in peaks:
        print(f"peak {p.frequency:.2f} Hz  magnitude {p.magnitude:.4g}  width {p.width:.2f} Hz")
    return paths


def track_peaks(peak_files, start_hz):
    """Series from peaks files (one per field) by following one line.

    Files are ordered by the field stored in their sidecars. The first pick is
    the peak nearest ``start_hz``; later picks are nearest to a linear
    extrapolation of the previous two. The frequency error is half the native
    resolution.
    """
    items = []
    for f in peak_files:
        side = io.sidecar_path(f)
        meta = io.read_json(side) if side.exists() else {}
        if "b_tesla" not in meta:
            raise DataIOError(f"{f}: sidecar lacks b_tesla")
        items.append((float(meta["b_tesla"]), io.read_peaks(f), float(meta["native_resolution_hz"])))
    items.sort(key=lambda t: t[0])
    b, freq, err = [], [], []
    for b_k, peaks, res in items:
        if not peaks:
            continue
        if len(freq) >= 2 and b[-1] != b[-2]:
            target = freq[-1] + (freq[-1] - freq[-2]) * (b_k - b[-1]) / (b[-1] - b[-2])
        else:
            target = freq[-1] if freq else start_hz
        pick = min(peaks, key=lambda p: abs(p.frequency - target))
        b.append(b_k)
        freq.append(pick.frequency)
        err.append(0.5 * res)
    if not b:
        raise InsufficientData("no peaks to track")
    return LinePositionSeries(b, freq, err, "tracked")


def cmd_fit_hyperbola(ctx, args):
    series = [io.read_series(p) for p in args.series]
    paths = []
    if args.peaks:
        s = track_peaks(args.peaks, args.track)
        series.append(s)
        paths.append(io.write_series(ctx.out("tracked_series.csv"), s))
    if not series:
        raise ConfigError("give --series and/or --peaks")
    fix = None
    if args.fix_gyro is not None:
        fix = abs(args.fix_gyro)
    elif args.fix_g_y:
        fix = ctx.constants.nuclear_gyro
    for s in series:
        fit = fit_hyperbola(s, fix, args.absolute_sigma, args.b_par_hint)
        paths.append(io.write_fit_report(ctx.out(f"fit_{s.label}.json"), fit.to_dict()))
        print(f"{s.label}: B_par={fit.b_par * 1e3:.3f}({fit.b_par_err * 1e3:.3f}) mT "
              f"B_perp={fit.b_perp * 1e3:.3f}({fit.b_perp_err * 1e3:.3f}) mT "
              f"gyro={fit.gyro / 1e6:.5f}({fit.gyro_err / 1e6:.5f}) MHz/T rms={fit.residual_rms:.3g} Hz")
    return paths


def cmd_fit_gyro(ctx, args):
    res = fit_gyromagnetic([io.read_series(p) for p in args.series], args.absolute_sigma)
    print(f"gyro = {res.gyro / 1e6:.5f} +- {res.gyro_err / 1e6:.5f} MHz/T")
    return [io.write_fit_report(ctx.out("gyro.json"), res.to_dict())]


def cmd_prominence(ctx, args):
    branch, cls = SpinBranch(args.branch), MagneticClass(args.magnetic_class)
    labels = [s.label for s in ctx.sites]
    if args.field_b is not None or args.field is not None:
        b_ext = _field_from(args)
        rho = rho_scan(b_ext, [np.linalg.norm(b_ext)], ctx.g_pair, ctx.sites, branch, cls,
                       ctx.constants)[0]
        lam = prominence_array(rho)
        for lab, l_, r in zip(labels, lam, rho):
            print(f"{lab:>4} lambda={l_:.3f} rho={r:.3f}")
        return [io.write_csv(ctx.out("prominence_at_field.csv"), io.LAMBDA_HEADER, zip(labels, lam, rho))]

    space = FieldSearchSpace(args.b_min, args.b_max, None if args.axis is None else tuple(args.axis),
                             args.step, args.n_magnitudes, not args.no_refine)
    results = prominence_table(space, ctx.g_pair, ctx.sites, branch, cls, ctx.constants)
    paths = [io.write_prominence(ctx.out("prominence.csv"), results),
             io.write_csv(ctx.out("prominence_bars.csv"), io.BARS_HEADER,
                          ((r.site_label, r.lam) for r in results))]
    for r in results:
        print(f"{r.site_label:>4} lambda_max={r.lam:.3f} |B|={np.linalg.norm(r.best_field) * 1e3:.1f} mT")
    if args.axis is not None:
        rows = []
        for i, lab in enumerate(labels):
            rmax, bbest = rho_max_with_field(i, args.axis, ctx.g_pair, (args.b_min, args.b_max),
                                             ctx.sites, branch, cls, ctx.constants)
            rows.append((lab, rmax, bbest))
        paths.append(io.write_csv(ctx.out("rho_max.csv"), io.RHO_MAX_HEADER, rows))
    return paths


def cmd_oracle(ctx, args):
    tau = np.linspace(0.0, args.tau_max, args.n_tau)
    dev = oracle_deviation(args.trials, tau, ctx.seed, constants=ctx.constants)
    worst = float(dev.max())
    ok = worst <= args.tolerance
    print(f"max deviation {worst:.3e} {'<=' if ok else '>'} {args.tolerance:g} over {args.trials} trials")
    report = {"trials": args.trials, "max_deviation": worst, "tolerance": args.tolerance,
              "passed": ok, "per_trial": dev.tolist()}
    return [io.write_json(ctx.out("oracle.json"), report)]


# parser

def _add_common_physics(p, field=True):
    if field:
        p.add_argument("--field-b", type=float, help="bias field along b (T, signed)")
        p.add_argument("--field", type=parse_vector, help="bias field vector 'bD1,bD2,bb' (T)")
    p.add_argument("--branch", choices=[b.value for b in SpinBranch], default="down",
                   help="populated Er Zeeman branch (default: down)")
    p.add_argument("--class", dest="magnetic_class", choices=["I", "II"], default="I",
                   help="magnetic class of the Er site (default: I)")


def _add_trace_args(p, t2=50e-3, tau_max=0.2, dtau=2e-6):
    p.add_argument("--t2", type=float, default=t2, help=f"coherence time T2 (s, default {t2:g})")
    p.add_argument("--gamma", type=float, default=1.0, help="stretch exponent (>= 1, default 1)")
    p.add_argument("--mode", choices=[m.value for m in TraceMode], default="amplitude",
                   help="echo amplitude or intensity (squared)")
    p.add_argument("--tau-max", type=float, default=tau_max,
                   help=f"last pulse delay (s, default {tau_max:g})")
    p.add_argument("--dtau", type=float, default=dtau, help=f"delay step (s, default {dtau:g})")
    p.add_argument("--noise", type=float, default=0.0, help="additive Gaussian noise sigma")


class _Parser(argparse.ArgumentParser):
    """Argument errors also end in a JSON error line."""

    def error(self, message):
        self.print_usage(sys.stderr)
        line = {"error": "UsageError", "message": f"{self.prog}: {message}", "exit_code": 2}
        print(json.dumps(line, sort_keys=True), file=sys.stderr)
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="oeem", description=__doc__.strip().splitlines()[0])
    ap.add_argument("--config", help="JSON run configuration file")
    ap.add_argument("--output-dir", help="directory for artifacts (default: config or '.')")
    ap.add_argument("--seed", type=int, default=None,
                    help=f"random seed (default: config or {io.DEFAULT_SEED})")
    ap.add_argument("--g-tensors", help="g-tensor JSON file (default: bundled literature values)")
    ap.add_argument("--sites", help="site catalog CSV label,d1_angstrom,d2_angstrom,b_angstrom")
    ap.add_argument("--g-y", type=float, default=None, help="nuclear g-factor of 89Y (default -0.2737)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sites", help="write the yttrium site catalog")
    p.set_defaults(func=cmd_sites)

    p = sub.add_parser("predict", help="couplings, contrasts and hyperbola parameters at one field")
    _add_common_physics(p)
    p.add_argument("--site", action="append", help="site label (repeatable; default all)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep", help="line map (and optionally simulated spectra) versus field")
    _add_common_physics(p, field=False)
    p.add_argument("--b-min", type=float, default=0.005, help="first field (T, signed)")
    p.add_argument("--b-max", type=float, default=0.3, help="last field (T, signed)")
    p.add_argument("--n-fields", type=int, default=61, help="number of field points")
    p.add_argument("--axis", type=parse_axis, default=B_AXIS.copy(), help="d1, d2, b or 'x,y,z'")
    p.add_argument("--tilt", type=float, nargs=2, default=[0.0, 0.0], metavar=("POLAR", "AZIMUTH"),
                   help="misalignment from the axis (deg)")
    p.add_argument("--site", action="append", help="site label (repeatable; default all)")
    p.add_argument("--rho-sat", type=float, default=1.0, help="contrast at full line intensity")
    p.add_argument("--simulate", action="store_true", help="also run trace -> spectrum per field")
    p.add_argument("--single-class", action="store_true",
                   help="simulate one magnetic class (--class) instead of the ensemble")
    p.add_argument("--pad-factor", type=int, default=DEFAULT_PAD_FACTOR, help="zero-padding factor")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    _add_trace_args(p, t2=10e-3, tau_max=0.02)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="synthesize an echo trace")
    _add_common_physics(p)
    p.add_argument("--site", action="append", help="site label (repeatable; default all)")
    p.add_argument("--spin", type=float, nargs=3, action="append", metavar=("DG_HZ", "DE_HZ", "RHO"),
                   help="explicit spin (repeatable); overrides the field/site model")
    p.add_argument("--stream", type=int, default=0, help="noise stream index under --seed")
    p.add_argument("--name", default="trace.csv", help="output file name")
    _add_trace_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="detrend a trace, Fourier transform and pick peaks")
    p.add_argument("trace", help="trace CSV (tau_s,value, or the config's trace adapter)")
    p.add_argument("--pad-factor", type=int, default=DEFAULT_PAD_FACTOR, help="zero-padding factor")
    p.add_argument("--pad-to", type=float, default=None, help="padded length (s); overrides factor")
    p.add_argument("--window", default=None, help="optional scipy window name, e.g. hann")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD_SIGMA,
                   help="peak threshold in robust sigmas (default 5)")
    p.add_argument("--name", default="spectrum", help="output file stem")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fit-hyperbola", help="fit line positions versus field")
    p.add_argument("--series", nargs="*", default=[], help="series CSVs b_tesla,freq_hz,freq_err_hz")
    p.add_argument("--peaks", nargs="*", default=[], help="peaks CSVs (one per field) to track")
    p.add_argument("--track", type=float, default=0.0, help="start frequency for tracking (Hz)")
    p.add_argument("--fix-gyro", type=float, default=None, help="fixed gyromagnetic ratio (Hz/T)")
    p.add_argument("--fix-g-y", action="store_true", help="fix the ratio to the configured g_Y")
    p.add_argument("--absolute-sigma", action="store_true",
                   help="take freq errors as absolute (no reduced chi-square scaling)")
    p.add_argument("--b-par-hint", type=float, default=None,
                   help="preferred sign of B_par (T) if the data cannot decide")
    p.set_defaults(func=cmd_fit_hyperbola)

    p = sub.add_parser("fit-gyro", help="combined gyromagnetic ratio from several series")
    p.add_argument("series", nargs="+", help="series CSVs")
    p.add_argument("--absolute-sigma", action="store_true")
    p.set_defaults(func=cmd_fit_gyro)

    p = sub.add_parser("prominence", help="maximum spin prominence per site")
    _add_common_physics(p)
    p.add_argument("--axis", type=parse_axis, default=None,
                   help="restrict the search to +-axis (default: all directions)")
    p.add_argument("--b-min", type=float, default=1e-3, help="smallest |B| (T)")
    p.add_argument("--b-max", type=float, default=1.0, help="largest |B| (T)")
    p.add_argument("--step", type=float, default=10.0, help="angular grid step (deg)")
    p.add_argument("--n-magnitudes", type=int, default=40, help="log-spaced magnitudes")
    p.add_argument("--no-refine", action="store_true", help="skip simplex refinement")
    p.set_defaults(func=cmd_prominence)

    p = sub.add_parser("oracle", help="compare the closed-form envelope with explicit propagation")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tau-max", type=float, default=300e-6, help="s")
    p.add_argument("--n-tau", type=int, default=601)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(func=cmd_oracle)
    return ap


def _fail(exc, code):
    line = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(line, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ctx = Context(args)
        args.func(ctx, args)
    except OEEMError as exc:
        return _fail(exc, exc.exit_code)
    except (ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        return _fail(ConfigError(msg), ConfigError.exit_code)
    return 0


if __name__ == "__main__":
    sys.exit(main())
