"""Parameter-grid scan driver with deterministic CSV/SVG export.

Grids over 1-2 of the axes {F, kappa, m, alpha} are evaluated in one of
four modes: ``numeric`` (exact propagation), ``analytic`` (closed-form
probability), ``dephased`` (linewidth-averaged propagation) and
``amplitude-error`` (drive/prep amplitude miscalibration).  Every grid
point is an independent evaluation, so results do not depend on worker
count or completion order; failures are recorded per point instead of
aborting the scan.  The sweep duration is recomputed per point from the
hardware limits unless the spec pins T explicitly.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .analytics import pt_speed, pt_speed_numeric_auto, tlz_probability
from .errors import BracketBoundaryError, DomainError
from .model import DriveParams, sweep_duration
from .noise import DephasingModel, amplitude_error_probability, dephased_probability
from .propagate import propagate_sweep
from .version import __version__

AXIS_NAMES = ("F", "kappa", "m", "alpha")
MODES = ("numeric", "analytic", "dephased", "amplitude-error")


@dataclass(frozen=True)
class Axis:
    """One named scan dimension."""

    name: str
    lo: float
    hi: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise DomainError(f"axis name must be one of {AXIS_NAMES}, got {self.name!r}")
        if self.count < 2:
            raise DomainError(f"axis count must be >= 2, got {self.count}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError("axis range must be finite")
        if self.hi <= self.lo:
            raise DomainError(f"axis needs hi > lo, got [{self.lo}, {self.hi}]")
        if self.scale not in ("linear", "log"):
            raise DomainError(f"axis scale must be linear or log, got {self.scale!r}")
        if self.scale == "log" and self.lo * self.hi <= 0:
            raise DomainError("log axis endpoints must share a sign and exclude 0")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class ScanSpec:
    """Grid description: axes, fixed parameters, evaluation mode."""

    axes: tuple[Axis, ...]
    base: DriveParams
    mode: str = "numeric"
    dephasing: DephasingModel | None = None
    alpha: float = 1.0
    channel: str = "drive"

    def __post_init__(self):
        if not (1 <= len(self.axes) <= 2):
            raise DomainError("a scan takes 1 or 2 axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate axis names {names}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "dephased" and self.dephasing is None:
            raise DomainError("dephased mode needs a DephasingModel")
        if "alpha" in names and self.mode != "amplitude-error":
            raise DomainError("an alpha axis requires amplitude-error mode")

    @property
    def pins_duration(self) -> bool:
        return self.base.T is not None


class PointIssue(NamedTuple):
    index: tuple[int, ...]
    kind: str  # "error" | "limit"
    message: str


@dataclass
class ScanResult:
    """Grid coordinates, probabilities, diagnostics and provenance."""

    spec: ScanSpec
    coords: tuple[np.ndarray, ...]
    p: np.ndarray
    norm_drift: np.ndarray
    n_steps: np.ndarray
    issues: list[PointIssue]
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.p.shape


def _grid_values(axis: Axis, spec: ScanSpec) -> np.ndarray:
    """Axis samples; numeric-style modes never receive an exact F = 0."""
    values = axis.values()
    if axis.name == "F" and spec.mode != "analytic":
        zero = values == 0.0
        if np.any(zero):
            step = (axis.hi - axis.lo) / (axis.count - 1)
            values = values.copy()
            values[zero] = step / 2.0
    return values


def _point_params(spec: ScanSpec, overrides: dict) -> DriveParams:
    fields = {k: v for k, v in overrides.items() if k in ("m", "kappa", "F")}
    params = replace(spec.base, **fields) if fields else spec.base
    if spec.mode != "analytic" and not spec.pins_duration:
        params = replace(params, T=sweep_duration(params))
    return params


def evaluate_point(
    spec: ScanSpec, overrides: dict
) -> tuple[float, float, float, tuple[str, str] | None]:
    """Evaluate one grid point: (p, norm_drift, n_steps, issue-or-None)."""
    try:
        if spec.mode == "analytic":
            params = _point_params(spec, overrides)
            p = tlz_probability(params.m, params.nu, params.kappa, params.F)
            issue = ("limit", "F=0 analytic limit value") if params.F == 0.0 else None
            return p, math.nan, math.nan, issue
        params = _point_params(spec, overrides)
        if spec.mode == "numeric":
            r = propagate_sweep(params)
            return r.p, r.norm_drift, float(r.n_steps), None
        if spec.mode == "dephased":
            p = dephased_probability(params, spec.dephasing)
            return p, math.nan, math.nan, None
        alpha = float(overrides.get("alpha", spec.alpha))
        p = amplitude_error_probability(params, alpha, spec.channel)
        return p, math.nan, math.nan, None
    except Exception as exc:  # recorded per point, scan continues
        return math.nan, math.nan, math.nan, ("error", f"{type(exc).__name__}: {exc}")


def _point_worker(task: tuple[ScanSpec, dict]) -> tuple[float, float, float, tuple | None]:
    spec, overrides = task
    return evaluate_point(spec, overrides)


def run_scan(spec: ScanSpec, jobs: int = 1) -> ScanResult:
    """Evaluate the spec on its full grid.

    ``jobs`` > 1 fans grid points out over processes; results are
    assembled in grid order, so the output is identical for any worker
    count.
    """
    t_start = time.perf_counter()
    coords = tuple(_grid_values(axis, spec) for axis in spec.axes)
    shape = tuple(len(c) for c in coords)
    indices = list(np.ndindex(*shape))
    tasks = []
    for idx in indices:
        overrides = {
            axis.name: float(coords[d][idx[d]]) for d, axis in enumerate(spec.axes)
        }
        tasks.append((spec, overrides))

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_point_worker, tasks, chunksize=4))
    else:
        outcomes = [evaluate_point(spec, overrides) for _, overrides in tasks]

    p = np.full(shape, math.nan)
    drift = np.full(shape, math.nan)
    steps = np.full(shape, math.nan)
    issues: list[PointIssue] = []
    for idx, (pv, dv, sv, issue) in zip(indices, outcomes):
        p[idx], drift[idx], steps[idx] = pv, dv, sv
        if issue is not None:
            issues.append(PointIssue(index=idx, kind=issue[0], message=issue[1]))

    metadata = {
        "version": __version__,
        "mode": spec.mode,
        "wall_time_s": f"{time.perf_counter() - t_start:.6f}",
    }
    return ScanResult(
        spec=spec,
        coords=coords,
        p=p,
        norm_drift=drift,
        n_steps=steps,
        issues=issues,
        metadata=metadata,
    )


class PtLocusPoint(NamedTuple):
    kappa: float
    f_pt: float
    p_at_pt: float
    error: str | None = None


def pt_locus(
    m: float,
    nu: float,
    kappas,
    method: str = "analytic",
    f_r_max: float = 13.6e6,
    f_det_max: float = 50.0e6,
    t_cap: float = 10.0e-6,
    n_grid: int = 21,
    refine_tol: float = 1e-4,
    max_widenings: int = 8,
) -> list[PtLocusPoint]:
    """Perfect-tunneling speed per curvature, analytic or located numerically.

    The numeric search brackets each curvature around the analytic
    prediction (+/-50%) and widens the bracket whenever the maximum
    lands on its edge; exhaustion after ``max_widenings`` attempts is
    reported on that point instead of raising.
    """
    if method not in ("analytic", "numeric"):
        raise DomainError(f"method must be analytic or numeric, got {method!r}")
    kappas = np.asarray(kappas, dtype=float)
    if m > 0 and np.any(kappas == 0.0):
        raise DomainError("kappa range must exclude 0 for m > 0")

    points: list[PtLocusPoint] = []
    for kappa in kappas:
        if method == "analytic" or m == 0.0:
            if m == 0.0:
                cond = pt_speed(m, nu, kappa)
                kind_p = 1.0 if method == "analytic" else cond.p_at_pt
                points.append(PtLocusPoint(float(kappa), cond.f_pt, kind_p))
            else:
                cond = pt_speed(m, nu, kappa)
                points.append(PtLocusPoint(float(kappa), cond.f_pt, cond.p_at_pt))
            continue

        params = DriveParams(
            m=m, nu=nu, kappa=float(kappa), F=pt_speed(m, nu, kappa).f_pt,
            f_r_max=f_r_max, f_det_max=f_det_max, t_cap=t_cap,
        )
        try:
            cond = pt_speed_numeric_auto(
                params,
                n_grid=n_grid,
                refine_tol=refine_tol,
                max_widenings=max_widenings,
            )
            points.append(PtLocusPoint(float(kappa), cond.f_pt, cond.p_at_pt))
        except BracketBoundaryError as exc:
            points.append(
                PtLocusPoint(float(kappa), math.nan, math.nan, f"bracket exhausted: {exc}")
            )
    return points


# ---------------------------------------------------------------------------
# CSV export / import
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return format(value, ".17g")


def _metadata_lines(result: ScanResult, deterministic: bool) -> list[str]:
    spec = result.spec
    lines = [f"# tlz-scan v{__version__}", f"# mode={spec.mode}"]
    for i, axis in enumerate(spec.axes, start=1):
        lines.append(
            f"# axis{i}={axis.name}:{_fmt(axis.lo)}:{_fmt(axis.hi)}:{axis.count}:{axis.scale}"
        )
    base = spec.base
    for key in ("m", "nu", "kappa", "F", "f_r_max", "f_det_max", "t_cap"):
        lines.append(f"# {key}={_fmt(getattr(base, key))}")
    lines.append(f"# T={'auto' if base.T is None else _fmt(base.T)}")
    if spec.mode == "dephased":
        dm = spec.dephasing
        lines.append(f"# fwhm={_fmt(dm.fwhm)}")
        lines.append(f"# n_nodes={dm.n_nodes}")
        lines.append(f"# span_sigmas={_fmt(dm.span_sigmas)}")
    if spec.mode == "amplitude-error":
        lines.append(f"# alpha={_fmt(spec.alpha)}")
        lines.append(f"# channel={spec.channel}")
    lines.append(f"# points={result.p.size}")
    if not deterministic:
        lines.append(f"# wall_time_s={result.metadata.get('wall_time_s', '')}")
    return lines


def csv_text(result: ScanResult, deterministic: bool = False) -> str:
    """The CSV payload: comment metadata plus 17-significant-digit rows.

    Output bytes depend only on the spec and results; the wall-time
    metadata line is the single non-reproducible line and is dropped
    when ``deterministic`` is set.
    """
    spec = result.spec
    with_diag = spec.mode == "numeric"
    columns = [axis.name for axis in spec.axes] + ["P"]
    if with_diag:
        columns += ["norm_drift", "n_steps"]
    lines = _metadata_lines(result, deterministic)
    lines.append(",".join(columns))
    for idx in np.ndindex(*result.shape):
        row = [_fmt(float(result.coords[d][idx[d]])) for d in range(len(idx))]
        row.append(_fmt(float(result.p[idx])))
        if with_diag:
            row.append(_fmt(float(result.norm_drift[idx])))
            row.append(_fmt(float(result.n_steps[idx])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def export_csv(result: ScanResult, path, deterministic: bool = False) -> None:
    """Write :func:`csv_text` to a file."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(csv_text(result, deterministic))
    except OSError as exc:
        raise OSError(f"cannot write scan CSV to {path}: {exc}") from exc


def read_scan_csv(path) -> dict:
    """Parse an exported scan back into coordinate arrays and matrices.

    Returns a dict with 'metadata' (comment key/values), 'columns',
    'rows' (raw float rows) and 'P' reshaped to the scan grid.
    """
    metadata: dict[str, str] = {}
    columns: list[str] | None = None
    rows: list[list[float]] = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if "=" in body:
                        key, value = body.split("=", 1)
                        metadata[key.strip()] = value.strip()
                    else:
                        metadata.setdefault("banner", body)
                    continue
                if columns is None:
                    columns = line.split(",")
                    continue
                rows.append([float(tok) for tok in line.split(",")])
    except OSError as exc:
        raise OSError(f"cannot read scan CSV from {path}: {exc}") from exc

    out = {"metadata": metadata, "columns": columns or [], "rows": rows}
    if columns and rows:
        shape = []
        for i in (1, 2):
            key = f"axis{i}"
            if key in metadata:
                shape.append(int(metadata[key].split(":")[3]))
        arr = np.array(rows)
        p_col = columns.index("P")
        out["P"] = arr[:, p_col].reshape(shape) if shape else arr[:, p_col]
        out["coords"] = [
            np.unique(arr[:, d])[np.argsort(np.unique(arr[:, d]))]
            for d in range(len(shape))
        ]
    return out


# ---------------------------------------------------------------------------
# SVG export
# ---------------------------------------------------------------------------

_VIRIDIS = [
    (0.267, 0.005, 0.329), (0.283, 0.141, 0.458), (0.254, 0.265, 0.530),
    (0.207, 0.372, 0.553), (0.164, 0.471, 0.558), (0.128, 0.567, 0.551),
    (0.135, 0.659, 0.518), (0.267, 0.749, 0.441), (0.478, 0.821, 0.318),
    (0.741, 0.873, 0.150), (0.993, 0.906, 0.144),
]


def _color(p: float) -> str:
    if math.isnan(p):
        return "#b0b0b0"
    x = min(max(p, 0.0), 1.0) * (len(_VIRIDIS) - 1)
    i = min(int(x), len(_VIRIDIS) - 2)
    f = x - i
    rgb = [
        _VIRIDIS[i][c] + f * (_VIRIDIS[i + 1][c] - _VIRIDIS[i][c]) for c in range(3)
    ]
    return "#%02x%02x%02x" % tuple(int(round(255 * v)) for v in rgb)


class _Frame:
    """Maps data coordinates into the SVG viewport."""

    def __init__(self, xlo, xhi, ylo, yhi, width=640, height=480, margin=56):
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi
        self.width, self.height, self.margin = width, height, margin

    def x(self, v: float) -> float:
        span = self.xhi - self.xlo or 1.0
        return self.margin + (v - self.xlo) / span * (self.width - 2 * self.margin)

    def y(self, v: float) -> float:
        span = self.yhi - self.ylo or 1.0
        return self.height - self.margin - (v - self.ylo) / span * (
            self.height - 2 * self.margin
        )


def _svg_header(frame: _Frame) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{frame.width}" '
        f'height="{frame.height}" viewBox="0 0 {frame.width} {frame.height}">',
    ]


def _svg_axes(frame: _Frame, xlabel: str, ylabel: str) -> list[str]:
    m, w, h = frame.margin, frame.width, frame.height
    return [
        f'<path d="M {m} {m} L {m} {h - m} L {w - m} {h - m}" '
        'fill="none" stroke="black" stroke-width="1"/>',
        f'<text x="{w / 2:.1f}" y="{h - m / 4:.1f}" text-anchor="middle" '
        f'font-size="13">{xlabel}</text>',
        f'<text x="{m / 3:.1f}" y="{h / 2:.1f}" text-anchor="middle" '
        f'font-size="13" transform="rotate(-90 {m / 3:.1f} {h / 2:.1f})">{ylabel}</text>',
        f'<text x="{m}" y="{h - m + 16}" font-size="11" text-anchor="middle">'
        f"{frame.xlo:.4g}</text>",
        f'<text x="{w - m}" y="{h - m + 16}" font-size="11" text-anchor="middle">'
        f"{frame.xhi:.4g}</text>",
        f'<text x="{m - 6}" y="{h - m}" font-size="11" text-anchor="end">'
        f"{frame.ylo:.4g}</text>",
        f'<text x="{m - 6}" y="{m + 4}" font-size="11" text-anchor="end">'
        f"{frame.yhi:.4g}</text>",
    ]


def _polyline(frame: _Frame, xs, ys, stroke: str, dash: str = "") -> str:
    pts = " ".join(
        f"{frame.x(float(x)):.2f},{frame.y(float(y)):.2f}"
        for x, y in zip(xs, ys)
        if math.isfinite(float(x)) and math.isfinite(float(y))
    )
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="1.5"{extra}/>'


def _cell_edges(values: np.ndarray) -> np.ndarray:
    mids = (values[1:] + values[:-1]) / 2.0
    first = values[0] - (mids[0] - values[0])
    last = values[-1] + (values[-1] - mids[-1])
    return np.concatenate([[first], mids, [last]])


def export_svg(result: ScanResult, path, overlay=None) -> None:
    """Render a 1D polyline or a 2D heat grid as a standalone SVG.

    1D scans draw probability against the axis, plus an optional
    ``overlay`` curve (array of probabilities on the same grid).  2D
    scans draw one rectangle per grid cell; when the axes are (F, kappa)
    in either order the analytic perfect-tunneling locus is overlaid.
    """
    if result.p.size == 0:
        raise DomainError("cannot render an empty scan")
    parts: list[str]
    if result.p.ndim == 1:
        xs = result.coords[0]
        finite = result.p[np.isfinite(result.p)]
        ylo = min(0.0, float(finite.min())) if finite.size else 0.0
        yhi = max(1.0, float(finite.max())) if finite.size else 1.0
        frame = _Frame(float(xs[0]), float(xs[-1]), ylo, yhi)
        parts = _svg_header(frame)
        parts += _svg_axes(frame, result.spec.axes[0].name, "P")
        parts.append(_polyline(frame, xs, result.p, "#1f77b4"))
        if overlay is not None:
            parts.append(_polyline(frame, xs, np.asarray(overlay), "#111111", dash="5,3"))
        parts.append("</svg>")
    else:
        xs, ys = result.coords[0], result.coords[1]
        xe, ye = _cell_edges(xs), _cell_edges(ys)
        frame = _Frame(float(xe[0]), float(xe[-1]), float(ye[0]), float(ye[-1]))
        parts = _svg_header(frame)
        for i in range(len(xs)):
            for j in range(len(ys)):
                x0, x1 = frame.x(float(xe[i])), frame.x(float(xe[i + 1]))
                y0, y1 = frame.y(float(ye[j + 1])), frame.y(float(ye[j]))
                parts.append(
                    f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" '
                    f'height="{y1 - y0:.2f}" fill="{_color(float(result.p[i, j]))}"/>'
                )
        parts += _svg_axes(frame, result.spec.axes[0].name, result.spec.axes[1].name)
        names = tuple(a.name for a in result.spec.axes)
        if set(names) == {"F", "kappa"}:
            parts.append(_pt_locus_overlay(result, frame, names))
        parts.append("</svg>")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(p for p in parts if p) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write scan SVG to {path}: {exc}") from exc


def _pt_locus_overlay(result: ScanResult, frame: _Frame, names) -> str:
    base = result.spec.base
    if base.m == 0.0:
        return ""
    k_axis = names.index("kappa")
    kappas = result.coords[k_axis]
    ks, fs = [], []
    for kappa in kappas:
        if kappa == 0.0:
            continue
        f = pt_speed(base.m, base.nu, float(kappa)).f_pt
        if frame.xlo <= (f if k_axis == 1 else kappa) and True:
            ks.append(kappa)
            fs.append(f)
    if not ks:
        return ""
    if k_axis == 0:
        xs, ys = ks, fs
    else:
        xs, ys = fs, ks
    pairs = [
        (x, y)
        for x, y in zip(xs, ys)
        if frame.xlo <= x <= frame.xhi and frame.ylo <= y <= frame.yhi
    ]
    if not pairs:
        return ""
    return _polyline(frame, [p[0] for p in pairs], [p[1] for p in pairs], "#00a000")
