"""Per-iteration trace export (CSV + JSON sidecar) and convergence plots (SVG)."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

TRACE_COLUMNS = ("k", "delta_J", "delta_L", "chi", "rho", "r", "w", "delta",
                 "accepted", "multipliers_updated")
LOG_FLOOR = 1e-16


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def emit_trace(result, path, extra: dict | None = None) -> Path:
    """Write ``path`` (CSV, one row per iteration) and ``path.json`` metadata."""
    if not result.iterations:
        raise ValueError("result has no iterations")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for rec in result.iterations:
                writer.writerow([_fmt(getattr(rec, col)) for col in TRACE_COLUMNS])
        meta = {
            "status": result.status.value,
            "iteration_count": result.iteration_count,
            "message": result.message,
            "config": result.config.to_dict(),
            "z_final": [float(v) for v in result.z_final],
            "lambda_final": [float(v) for v in result.lambda_final],
            "mu_final": [float(v) for v in result.mu_final],
            "w_final": float(result.w_final),
        }
        if extra:
            meta.update(extra)
        sidecar = path.with_suffix(".json")
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing trace to {path}: {exc}") from exc
    return path


def read_trace(path) -> list[dict]:
    rows = []
    with Path(path).open(newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for key, val in raw.items():
                if key == "k":
                    row[key] = int(val)
                elif val in ("true", "false"):
                    row[key] = val == "true"
                else:
                    row[key] = float(val)
            rows.append(row)
    return rows


def _rows(trace) -> list[dict]:
    if hasattr(trace, "iterations"):
        return [{c: getattr(r, c) for c in TRACE_COLUMNS} for r in trace.iterations]
    if isinstance(trace, (str, Path)):
        return read_trace(trace)
    return list(trace)


class _Panel:
    def __init__(self, x0, y0, width, height, k_max, lo_exp, hi_exp):
        self.x0, self.y0, self.w, self.h = x0, y0, width, height
        self.k_max = max(k_max, 2)
        self.lo, self.hi = lo_exp, hi_exp

    def px(self, k):
        return self.x0 + (k - 1) / (self.k_max - 1) * self.w

    def py(self, value):
        e = math.log10(max(value, LOG_FLOOR))
        e = min(max(e, self.lo), self.hi)
        return self.y0 + self.h - (e - self.lo) / (self.hi - self.lo) * self.h


def render_convergence_plot(trace, path, eps: float = 1e-5, title: str = "") -> Path:
    """Two stacked log-scale panels of |dJ| and chi against iteration.

    Dashed lines mark ``eps``; open circles mark multiplier updates.
    """
    rows = _rows(trace)
    if not rows:
        raise ValueError("trace is empty")
    ks = [int(r["k"]) for r in rows]
    series = [("|ΔJ|", [abs(float(r["delta_J"])) for r in rows]),
              ("χ", [float(r["chi"]) for r in rows])]
    updates = [bool(r["multipliers_updated"]) for r in rows]

    width, height = 640, 520
    left, right, top, gap, bottom = 80, 20, 40, 50, 50
    ph = (height - top - gap - bottom) / 2
    pw = width - left - right
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="13">'
                   f'{escape(title)}</text>')
    for i, (label, values) in enumerate(series):
        clipped = [max(v, LOG_FLOOR) for v in values] + [eps]
        lo = math.floor(math.log10(min(clipped)))
        hi = math.ceil(math.log10(max(clipped)))
        if hi == lo:
            hi = lo + 1
        y0 = top + i * (ph + gap)
        pan = _Panel(left, y0, pw, ph, max(ks), lo, hi)
        out.append(f'<rect x="{left}" y="{y0:.1f}" width="{pw}" height="{ph:.1f}" '
                   'fill="none" stroke="black"/>')
        step = max(1, (hi - lo) // 8)
        for e in range(lo, hi + 1, step):
            yy = pan.py(10.0 ** e)
            out.append(f'<line x1="{left}" y1="{yy:.1f}" x2="{left + pw}" y2="{yy:.1f}" '
                       'stroke="#ddd"/>')
            out.append(f'<text x="{left - 6}" y="{yy + 4:.1f}" text-anchor="end">1e{e}</text>')
        ye = pan.py(eps)
        out.append(f'<line class="tolerance" x1="{left}" y1="{ye:.1f}" x2="{left + pw}" '
                   f'y2="{ye:.1f}" stroke="gray" stroke-dasharray="6,4"/>')
        pts = " ".join(f"{pan.px(k):.1f},{pan.py(v):.1f}" for k, v in zip(ks, values))
        out.append(f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>')
        for k, v in zip(ks, values):
            out.append(f'<circle class="point" cx="{pan.px(k):.1f}" cy="{pan.py(v):.1f}" r="2" '
                       'fill="#1f4e9c"/>')
        if i == 0:
            for k, v, upd in zip(ks, values, updates):
                if upd:
                    out.append(f'<circle class="update" cx="{pan.px(k):.1f}" '
                               f'cy="{pan.py(v):.1f}" r="6" fill="none" stroke="#c0392b" '
                               'stroke-width="1.5"/>')
        out.append(f'<text x="18" y="{y0 + ph / 2:.1f}" transform="rotate(-90 18 '
                   f'{y0 + ph / 2:.1f})" text-anchor="middle">{label}</text>')
        kt = sorted({1, max(ks)} | set(range(5, max(ks) + 1, 5)))
        for k in kt:
            out.append(f'<text x="{pan.px(k):.1f}" y="{y0 + ph + 14:.1f}" '
                       f'text-anchor="middle">{k}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">'
               'iteration k</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path
