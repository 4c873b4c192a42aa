"""Deterministic CSV, JSON and SVG emission.

Floats are printed with 17 significant digits everywhere, dictionaries with
sorted keys, so the bytes depend only on the computed numbers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .harness import ExperimentReport
from .sums import fmt17

FORMATS = ("csv", "json", "svg")


class ReportError(OSError):
    pass


def _num(v: float) -> str:
    v = float(v)
    if math.isnan(v) or math.isinf(v):
        return json.dumps(str(v))
    return fmt17(v)


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with sorted keys and 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag], indent, _level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(dumps(x) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(x, indent, _level + 1) for x in obj) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalars
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_dict(rep: ExperimentReport) -> dict:
    grid = []
    for x, v, e, th in zip(rep.grid.x_points, rep.grid.values, rep.rhs_envelope, rep.theta):
        grid.append({"x": x, "disc_re": v.real, "disc_im": v.imag, "disc_abs": abs(v),
                     "disc_over_x": abs(v) / x, "envelope": e, "theta": th})
    out = {
        "config": rep.config.echo(),
        "gamma": rep.gamma.to_list(),
        "grid": grid,
        "verdicts": {k: v.to_dict() for k, v in rep.verdicts.items()},
    }
    if rep.zero_report is not None:
        out["config"]["zero_scan"] = rep.zero_report.to_dict()
    return out


def to_json(rep: ExperimentReport) -> str:
    return dumps(report_dict(rep)) + "\n"


def to_csv(rep: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "disc_re", "disc_im", "disc_abs", "envelope"])
    for x, v, e in zip(rep.grid.x_points, rep.grid.values, rep.rhs_envelope):
        w.writerow([x, fmt17(v.real), fmt17(v.imag), fmt17(abs(v)), fmt17(e)])
    for name, v in rep.verdicts.items():
        val = "" if v.value is None else (fmt17(v.value) if isinstance(v.value, float) else v.value)
        w.writerow([f"# verdict {name}", v.status, val, v.note])
    return buf.getvalue()


def svg_plot(series: dict[str, tuple[list[float], list[float]]], title: str,
             width: int = 640, height: int = 420) -> str:
    """Log-log line plot, one polyline per series; non-positive points are dropped."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    pts = {k: [(math.log10(x), math.log10(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
           for k, (xs, ys) in series.items()}
    allp = [p for v in pts.values() for p in v] or [(0.0, 0.0)]
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    y0, y1 = min(p[1] for p in allp), max(p[1] for p in allp)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    ml, mr, mt, mb = 70, 20, 40, 50
    W, H = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * W

    def sy(v):
        return mt + H - (v - y0) / (y1 - y0) * H

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{W}" height="{H}" fill="none" stroke="black"/>',
    ]
    for e in range(math.floor(x0), math.ceil(x1) + 1):
        if x0 <= e <= x1:
            out.append(f'<text x="{sx(e):.2f}" y="{mt + H + 18}" text-anchor="middle" font-size="11">1e{e}</text>')
    for e in range(math.floor(y0), math.ceil(y1) + 1):
        if y0 <= e <= y1:
            out.append(f'<text x="{ml - 6}" y="{sy(e) + 4:.2f}" text-anchor="end" font-size="11">1e{e}</text>')
    for i, (name, p) in enumerate(pts.items()):
        c = colors[i % len(colors)]
        if p:
            coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in p)
            out.append(f'<polyline fill="none" stroke="{c}" stroke-width="2" points="{coords}"/>')
        out.append(f'<text x="{ml + 10}" y="{mt + 16 + 14 * i}" font-size="12" fill="{c}">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def to_svg(rep: ExperimentReport) -> str:
    xs = [float(x) for x in rep.grid.x_points]
    return svg_plot(
        {
            "|E(x)|/x": (xs, rep.normalized()),
            "C envelope/x": (xs, [e / x for e, x in zip(rep.rhs_envelope, xs)]),
        },
        f"{rep.config.function_name}: discrepancy vs envelope",
    )


def render(rep: ExperimentReport, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(rep)
    if fmt == "json":
        return to_json(rep)
    if fmt == "svg":
        return to_svg(rep)
    raise ValueError(f"unknown format {fmt!r}")


def write_text(text: str, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise ReportError(f"cannot write report to {path}: {e.strerror or e}") from e
    return path


def emit_report(rep: ExperimentReport, fmt: str | None = None, path: str | Path | None = None) -> str:
    """Render ``rep`` and write it to ``path`` (or the configured output path, if any)."""
    fmt = fmt or rep.config.format
    text = render(rep, fmt)
    target = path or rep.config.output_path
    if target:
        write_text(text, target)
    return text
