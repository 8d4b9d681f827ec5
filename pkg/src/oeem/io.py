"""
File formats: CSV tables, JSON sidecars and reports, run configuration.

Every writer goes through :func:`atomic_write`, so an interrupted run never
leaves a half-written artifact. Floats are written with ``repr`` so that
identical inputs produce byte-identical files and values round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .crystal import YttriumSite, default_site_catalog
from .errors import ConfigError, DataIOError
from .fitting import LinePositionSeries
from .modulation import EchoTrace, TraceMode
from .spectral import Peak, Spectrum

TRACE_HEADER = ("tau_s", "value")
SPECTRUM_HEADER = ("freq_hz", "magnitude")
PEAKS_HEADER = ("freq_hz", "magnitude", "width_hz")
SERIES_HEADER = ("b_tesla", "freq_hz", "freq_err_hz")
SITES_HEADER = ("label", "d1_angstrom", "d2_angstrom", "b_angstrom")
PROMINENCE_HEADER = ("site", "lambda_max", "b_d1", "b_d2", "b_b", "rho_best")
LINEMAP_HEADER = ("site", "class", "component", "b_tesla", "freq_hz", "rho")
SWEEPMAP_HEADER = ("b_tesla", "freq_hz", "magnitude")
BARS_HEADER = ("site", "lambda_max")
RHO_MAX_HEADER = ("site", "rho_max", "b_tesla")
LAMBDA_HEADER = ("site", "lambda", "rho")


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return atomic_write(path, buf.getvalue())


def read_csv(path, header=None) -> tuple[list[str], list[list[str]]]:
    """Rows of a CSV file; ``header`` (if given) must match the file's columns."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise DataIOError(f"{path}: empty file")
    got = [c.strip() for c in rows[0]]
    if header is not None and got != list(header):
        raise DataIOError(f"{path}: expected columns {','.join(header)}, got {','.join(got)}")
    return got, rows[1:]


def _numeric(path, header):
    cols, rows = read_csv(path, header)
    try:
        arr = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise DataIOError(f"{path}: non-numeric value ({exc})") from exc
    if arr.size == 0:
        arr = np.zeros((0, len(cols)))
    if arr.shape[1] != len(cols):
        raise DataIOError(f"{path}: ragged rows")
    return arr


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DataIOError(f"{path}: invalid JSON ({exc})") from exc


# traces

def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_trace(path, trace: EchoTrace) -> Path:
    """``tau_s,value`` CSV plus ``<name>.json`` with mode, seed and parameters."""
    meta = dict(trace.meta)
    meta.update({"mode": trace.mode.value, "noise_sigma": trace.noise_sigma, "seed": trace.rng_seed})
    write_json(sidecar_path(path), meta)
    return write_csv(path, TRACE_HEADER, zip(trace.tau, trace.values))


def read_trace(path) -> EchoTrace:
    arr = _numeric(path, TRACE_HEADER)
    side = sidecar_path(path)
    meta = read_json(side) if side.exists() else {}
    try:
        return EchoTrace(arr[:, 0], arr[:, 1], TraceMode(meta.get("mode", "amplitude")),
                         float(meta.get("noise_sigma", 0.0)), int(meta.get("seed", 0)), meta)
    except ValueError as exc:
        raise DataIOError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class TraceAdapter:
    """Column mapping for externally recorded traces.

    ``tau_column`` and ``value_column`` name the CSV columns; ``tau_scale``
    converts the time column to seconds (1e-6 for microseconds).
    """

    tau_column: str = "tau_s"
    value_column: str = "value"
    tau_scale: float = 1.0
    delimiter: str = ","
    mode: str = "amplitude"

    @classmethod
    def from_dict(cls, d: dict) -> "TraceAdapter":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown trace adapter keys: {sorted(unknown)}")
        return cls(**d)

    def read(self, path) -> EchoTrace:
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.DictReader(fh, delimiter=self.delimiter)
                rows = list(reader)
                names = reader.fieldnames or []
        except OSError as exc:
            raise DataIOError(f"cannot read {path}: {exc.strerror}") from exc
        for col in (self.tau_column, self.value_column):
            if col not in names:
                raise DataIOError(f"{path}: missing column {col!r}")
        try:
            tau = np.array([float(r[self.tau_column]) for r in rows]) * self.tau_scale
            val = np.array([float(r[self.value_column]) for r in rows])
            return EchoTrace(tau, val, TraceMode(self.mode), meta={"source": str(path)})
        except ValueError as exc:
            raise DataIOError(f"{path}: {exc}") from exc


# spectra and peaks

def write_spectrum(path, spec: Spectrum) -> Path:
    return write_csv(path, SPECTRUM_HEADER, zip(spec.freq, spec.magnitude))


def read_spectrum(path) -> Spectrum:
    """Spectrum from CSV. Padding and window come from the sidecar if present;
    otherwise the native resolution is taken to be the bin spacing."""
    arr = _numeric(path, SPECTRUM_HEADER)
    if arr.shape[0] < 2:
        raise DataIOError(f"{path}: need at least two bins")
    side = sidecar_path(path)
    meta = read_json(side) if side.exists() else {}
    df = float(arr[1, 0] - arr[0, 0])
    return Spectrum(arr[:, 0], arr[:, 1], float(meta.get("pad_factor", 1.0)),
                    float(meta.get("native_resolution_hz", df)),
                    int(meta.get("nfft", 2 * (arr.shape[0] - 1))), meta.get("window"))


def write_peaks(path, peaks) -> Path:
    return write_csv(path, PEAKS_HEADER, ((p.frequency, p.magnitude, p.width) for p in peaks))


def read_peaks(path) -> list[Peak]:
    return [Peak(*row) for row in _numeric(path, PEAKS_HEADER)]


# line-position series and fit reports

def write_series(path, series: LinePositionSeries) -> Path:
    return write_csv(path, SERIES_HEADER, zip(series.b, series.freq, series.freq_err))


def read_series(path, label=None) -> LinePositionSeries:
    arr = _numeric(path, SERIES_HEADER)
    try:
        return LinePositionSeries(arr[:, 0], arr[:, 1], arr[:, 2], label or Path(path).stem)
    except ValueError as exc:
        raise DataIOError(f"{path}: {exc}") from exc


def write_fit_report(path, report: dict) -> Path:
    return write_json(path, report)


# sites

def write_sites(path, sites) -> Path:
    return write_csv(path, SITES_HEADER, ((s.label, *s.position) for s in sites))


def read_sites(path) -> list[YttriumSite]:
    """Site catalog override; distances are recomputed from the positions."""
    _, rows = read_csv(path, SITES_HEADER)
    sites = []
    for r in rows:
        try:
            sites.append(YttriumSite.from_position(r[0], tuple(float(v) for v in r[1:4])))
        except (ValueError, IndexError) as exc:
            raise DataIOError(f"{path}: bad site row {r}: {exc}") from exc
    labels = [s.label for s in sites]
    if len(set(labels)) != len(labels):
        raise DataIOError(f"{path}: duplicate site labels")
    if not sites:
        raise DataIOError(f"{path}: no sites")
    return sites


# prominence, line maps, sweep maps

def write_prominence(path, results) -> Path:
    rows = ((r.site_label, r.lam, *r.best_field, r.rho_at_best) for r in results)
    return write_csv(path, PROMINENCE_HEADER, rows)


def read_prominence(path) -> list[dict]:
    _, rows = read_csv(path, PROMINENCE_HEADER)
    return [dict(zip(PROMINENCE_HEADER, [r[0], *map(float, r[1:])])) for r in rows]


def write_linemap(path, linemap) -> Path:
    return write_csv(path, LINEMAP_HEADER, linemap.records())


def read_linemap(path) -> list[tuple]:
    _, rows = read_csv(path, LINEMAP_HEADER)
    return [(r[0], r[1], r[2], float(r[3]), float(r[4]), float(r[5])) for r in rows]


def write_sweepmap(path, sweep) -> Path:
    return write_csv(path, SWEEPMAP_HEADER, sweep.records())


def read_sweepmap(path):
    """Returns (b, freq, magnitude[b, freq]) from the long-format CSV."""
    arr = _numeric(path, SWEEPMAP_HEADER)
    b = np.unique(arr[:, 0])
    freq = np.unique(arr[:, 1])
    if b.size * freq.size != arr.shape[0]:
        raise DataIOError(f"{path}: not a complete field x frequency grid")
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    return b, freq, arr[order, 2].reshape(b.size, freq.size)


def _read_labelled(header):
    def reader(path):
        _, rows = read_csv(path, header)
        try:
            return [dict(zip(header, [r[0], *map(float, r[1:])])) for r in rows]
        except (ValueError, IndexError) as exc:
            raise DataIOError(f"{path}: {exc}") from exc
    return reader


READERS = {
    TRACE_HEADER: read_trace,
    SPECTRUM_HEADER: read_spectrum,
    PEAKS_HEADER: read_peaks,
    SERIES_HEADER: read_series,
    SITES_HEADER: read_sites,
    PROMINENCE_HEADER: read_prominence,
    LINEMAP_HEADER: read_linemap,
    SWEEPMAP_HEADER: read_sweepmap,
    BARS_HEADER: _read_labelled(BARS_HEADER),
    RHO_MAX_HEADER: _read_labelled(RHO_MAX_HEADER),
    LAMBDA_HEADER: _read_labelled(LAMBDA_HEADER),
}


def read_table(path):
    """Parse any CSV written by this package, dispatching on its header."""
    header, _ = read_csv(path)
    try:
        reader = READERS[tuple(header)]
    except KeyError:
        raise DataIOError(f"{path}: unknown table schema {','.join(header)}") from None
    return reader(path)


# run configuration

DEFAULT_SEED = 20240101


@dataclass(frozen=True)
class RunConfig:
    """Global settings shared by every subcommand.

    Constants overrides accept ``g_y`` only; the rest are CODATA values.
    """

    g_tensor_file: str | None = None
    site_file: str | None = None
    output_dir: str = "."
    seed: int = DEFAULT_SEED
    constants: dict = field(default_factory=dict)
    trace_adapter: dict | None = None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            d = read_json(path)
        except DataIOError as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: top level must be an object")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        base = Path(path).parent
        for key in ("g_tensor_file", "site_file"):
            if d.get(key) is not None:
                p = Path(d[key])
                d[key] = str(p if p.is_absolute() else base / p)
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self):
        for key in ("g_tensor_file", "site_file"):
            p = getattr(self, key)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{key} not found: {p}")
        unknown = set(self.constants) - {"g_y"}
        if unknown:
            raise ConfigError(f"unsupported constant overrides: {sorted(unknown)}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    def site_catalog(self):
        return default_site_catalog() if self.site_file is None else read_sites(self.site_file)
