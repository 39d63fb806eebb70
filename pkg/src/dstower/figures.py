"""Figure datasets built from scans, with CSV/JSON writers and a small SVG
scatter renderer (no plotting toolkit).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import mpmath
import numpy as np

from .asymptotics import linearization_curve, linearization_zero
from .errors import ContractViolation
from .oracle import closed_form_reference
from .solver import RootSet

__all__ = ["FigureSpec", "FigureDataset", "FIGURES", "build_dataset", "curve_dataset",
           "render_svg", "emit_figure"]


@dataclass(frozen=True)
class FigureSpec:
    """What a figure plots and which scan feeds it.

    ``kind`` is one of ``real_vs_order`` (positive real roots against order),
    ``cloud`` (all roots in the complex plane), ``abs_vs_order`` (modulus of
    the root nearest the exact value) or ``curve`` (a sampled function).
    """

    figure_id: str
    theory: str
    closure: str
    index: int
    kind: str
    orders: tuple[int, int]
    long_orders: tuple[int, int]
    references: tuple[tuple[str, str], ...]  # (label, oracle sector choice)
    title: str

    def order_range(self, long_run: bool = False) -> list[int]:
        lo, hi = self.long_orders if long_run else self.orders
        return list(range(lo, hi + 1))


FIGURES: dict[str, FigureSpec] = {s.figure_id: s for s in (
    FigureSpec("fig1", "hermitian_quartic", "zero", 2, "real_vs_order", (2, 30), (2, 30),
               (("G2 exact", "real"),), "Positive zeros of P_n against n"),
    FigureSpec("fig2", "hermitian_quartic", "asymptotic", 2, "real_vs_order", (2, 30), (2, 30),
               (("G2 exact", "real"),), "Positive roots under asymptotic closure"),
    FigureSpec("fig4", "pt_cubic", "zero", 1, "cloud", (3, 60), (3, 150),
               (("G1 exact", "pt"),), "All roots G_1, cubic theory"),
    FigureSpec("fig5", "pt_quartic", "zero", 1, "cloud", (4, 12), (4, 33),
               (("G1 exact", "pt"),), "All roots G_1, PT quartic theory"),
    FigureSpec("fig6", "pt_quintic", "zero", 1, "cloud", (6, 9), (6, 11),
               (("G1 upper pair", "pt_upper"), ("G1 lower pair", "pt_lower")),
               "All roots G_1, PT quintic theory"),
    FigureSpec("fig7", "hermitian_sextic", "zero", 2, "cloud", (4, 12), (4, 16),
               (("G2 real pair", "real"), ("G2 rotated +", "rotated_plus"),
                ("G2 rotated -", "rotated_minus")),
               "Parity-symmetric roots G_2, sextic theory"),
    FigureSpec("supp_fig1", "hermitian_quartic", "none", 2, "curve", (0, 0), (0, 0),
               (), "Linearized generating function y(x), y(0) = 1"),
    FigureSpec("supp_fig3", "pt_cubic", "asymptotic", 1, "abs_vs_order", (3, 60), (3, 150),
               (("|G1| exact", "pt"),), "|G_1| under asymptotic closure"),
)}


def _fmt(x, digits: int = 15) -> str:
    return mpmath.nstr(mpmath.mpf(x), digits, min_fixed=-4, max_fixed=6)


@dataclass
class FigureDataset:
    """Rows of one figure plus the exact constants it is drawn against."""

    figure_id: str
    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"figure": self.figure_id, "columns": list(self.columns),
                "rows": [list(r) for r in self.rows], "metadata": self.metadata}

    def json_text(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def _references(spec: FigureSpec) -> dict:
    out = {}
    for label, choice in spec.references:
        v = mpmath.mpc(closed_form_reference(spec.theory, choice))
        if spec.kind == "abs_vs_order":
            v = mpmath.mpc(abs(v))
        out[label] = [_fmt(v.real), _fmt(v.imag)]
    return out


def build_dataset(figure_id: str, rootsets: Mapping[int, RootSet],
                  orders: Sequence[int] | None = None, long_run: bool = False) -> FigureDataset:
    """Assemble a figure from per-order root sets.

    Raises ContractViolation listing absent orders if the scan does not cover
    the figure.
    """
    spec = _spec(figure_id)
    if spec.kind == "curve":
        return curve_dataset(figure_id)
    orders = spec.order_range(long_run) if orders is None else list(orders)
    missing = [n for n in orders if n not in rootsets]
    if missing:
        raise ContractViolation(f"{figure_id}: no root sets for orders {missing}")
    refs = _references(spec)
    rows = []
    failures = {}
    for n in orders:
        rs = rootsets[n]
        if rs.theory != spec.theory or rs.closure != spec.closure:
            raise ContractViolation(
                f"{figure_id} needs {spec.theory}/{spec.closure}, order {n} is {rs.theory}/{rs.closure}")
        if rs.failed or rs.path_failures:
            failures[n] = len(rs.failed) + rs.path_failures
        vals = [mpmath.mpc(v) for v in rs.values(spec.index)]
        if spec.kind == "real_vs_order":
            pos = sorted(mpmath.re(z) for z in vals
                         if mpmath.re(z) > 0 and abs(mpmath.im(z)) <= 1e-10 * abs(z))
            rows.extend((n, _fmt(x)) for x in pos)
        elif spec.kind == "cloud":
            pts = sorted(vals, key=lambda z: (float(z.real), float(z.imag)))
            rows.extend((n, _fmt(z.real), _fmt(z.imag)) for z in pts)
        else:
            exact = closed_form_reference(spec.theory, spec.references[0][1])
            if vals:
                z = min(vals, key=lambda v: abs(v - exact))
                rows.append((n, _fmt(abs(z)), _fmt(z.real), _fmt(z.imag)))
    columns = {"real_vs_order": ("order", "root_value"),
               "cloud": ("order", "re", "im"),
               "abs_vs_order": ("order", "abs_value", "re", "im")}[spec.kind]
    meta = {
        "title": spec.title,
        "theory": spec.theory,
        "closure": spec.closure,
        "green_index": spec.index,
        "orders": [orders[0], orders[-1]] if orders else [],
        "references": refs,
        "solver_failures": {str(k): v for k, v in failures.items()},
    }
    if spec.kind == "abs_vs_order":
        meta["selection"] = "root nearest the exact value"
    return FigureDataset(figure_id, columns, rows, meta)


def curve_dataset(figure_id: str = "supp_fig1", x_max: float = 4.0, samples: int = 161) -> FigureDataset:
    spec = _spec(figure_id)
    if spec.kind != "curve":
        raise ContractViolation(f"{figure_id} is not a curve figure")
    xs = np.linspace(0.0, x_max, samples)
    ys = linearization_curve(spec.theory, xs)
    x0 = linearization_zero(spec.theory)
    rows = [(f"{x:.6g}", f"{y:.15g}") for x, y in zip(xs, ys)]
    meta = {"title": spec.title, "theory": spec.theory, "closure": spec.closure,
            "references": {"x0": [_fmt(x0), "0"], "1/x0": [_fmt(1 / x0), "0"]}}
    return FigureDataset(figure_id, ("x", "y"), rows, meta)


def _spec(figure_id: str) -> FigureSpec:
    if figure_id not in FIGURES:
        raise ContractViolation(f"unknown figure {figure_id!r}; choose from {sorted(FIGURES)}")
    return FIGURES[figure_id]


# -- SVG ------------------------------------------------------------------------

def _nice_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def render_svg(ds: FigureDataset, width: int = 640, height: int = 480) -> str:
    """Scatter (or polyline for curves) with exact values as squares or heavy lines."""
    cols = ds.columns
    if cols == ("order", "re", "im"):
        pts = [(float(r[1]), float(r[2])) for r in ds.rows]
        xlabel, ylabel = "Re", "Im"
    elif cols == ("x", "y"):
        pts = [(float(r[0]), float(r[1])) for r in ds.rows]
        xlabel, ylabel = "x", "y(x)"
    else:
        pts = [(float(r[0]), float(r[1])) for r in ds.rows]
        xlabel, ylabel = "n", cols[1]
    refs = [(float(v[0]), float(v[1])) for v in ds.metadata.get("references", {}).values()]
    cloud = cols == ("order", "re", "im")

    xs = [p[0] for p in pts] + ([r[0] for r in refs] if cloud else [])
    ys = [p[1] for p in pts] + ([r[1] for r in refs] if cloud else [r[0] for r in refs])
    if cols == ("x", "y"):
        ys = [p[1] for p in pts]
    xlo, xhi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    ylo, yhi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    padx = 0.05 * (xhi - xlo or 1.0)
    pady = 0.05 * (yhi - ylo or 1.0)
    xlo, xhi, ylo, yhi = xlo - padx, xhi + padx, ylo - pady, yhi + pady
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + (x - xlo) / (xhi - xlo) * pw

    def sy(y):
        return mt + (yhi - y) / (yhi - ylo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">'
           f'{ds.metadata.get("title", ds.figure_id)}</text>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _nice_ticks(xlo, xhi):
        out.append(f'<line x1="{sx(t):.2f}" y1="{mt + ph}" x2="{sx(t):.2f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{mt + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(ylo, yhi):
        out.append(f'<line x1="{ml - 5}" y1="{sy(t):.2f}" x2="{ml}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="15" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {mt + ph / 2:.1f})">{ylabel}</text>')

    if cols == ("x", "y"):
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="black" stroke-width="1.5"/>')
        if ylo < 0 < yhi:
            out.append(f'<line x1="{ml}" y1="{sy(0):.2f}" x2="{ml + pw}" y2="{sy(0):.2f}" '
                       f'stroke="gray" stroke-dasharray="4 3"/>')
    else:
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="1.6" fill="black"/>')
        for rx, ry in refs:
            if cloud:
                out.append(f'<rect x="{sx(rx) - 4:.2f}" y="{sy(ry) - 4:.2f}" width="8" height="8" '
                           f'fill="none" stroke="red" stroke-width="1.5"/>')
            else:
                out.append(f'<line x1="{ml}" y1="{sy(rx):.2f}" x2="{ml + pw}" y2="{sy(rx):.2f}" '
                           f'stroke="red" stroke-width="2.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_figure(ds: FigureDataset, formats: Sequence[str], out_dir) -> list[Path]:
    """Write the dataset as ``<figure>.csv``/``.json``/``.svg``.  CSV and JSON are always written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    unknown = set(formats) - {"csv", "json", "svg"}
    if unknown:
        raise ContractViolation(f"unknown output formats {sorted(unknown)}")
    paths = []
    for fmt, text in (("csv", ds.csv_text()), ("json", ds.json_text())):
        p = out_dir / f"{ds.figure_id}.{fmt}"
        p.write_text(text)
        paths.append(p)
    if "svg" in formats:
        p = out_dir / f"{ds.figure_id}.svg"
        p.write_text(render_svg(ds))
        paths.append(p)
    return paths
