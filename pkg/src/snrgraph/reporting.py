"""Report assembly, seed bookkeeping and dependency-free SVG line charts."""

import math
from xml.sax.saxutils import escape

import numpy as np

SCHEMA_VERSION = "1.0"
_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


class SeedPlan:
    """Named sub-seeds spawned from one master seed.

    Child ``i`` is ``SeedSequence(master).spawn(...)[i]``; the names are
    assigned in the order given, so the mapping is recorded in the report.
    """

    def __init__(self, master, names):
        self.master = int(master)
        children = np.random.SeedSequence(self.master).spawn(len(names))
        self.seeds = dict(zip(names, children))

    def __getitem__(self, name):
        return self.seeds[name]

    def int_seed(self, name):
        return int(self.seeds[name].generate_state(1)[0])

    def to_dict(self):
        return {
            "master": self.master,
            "scheme": "numpy.random.SeedSequence(master).spawn",
            "children": {name: list(s.spawn_key) for name, s in self.seeds.items()},
        }


def make_report(command, config, summary, files, seeds, elapsed):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "seeds": seeds.to_dict(),
        "summary": summary,
        "files": sorted(files),
        "timing": {"elapsed_seconds": round(float(elapsed), 3)},
    }


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def svg_line_chart(series, title="", xlabel="", ylabel="", width=480, height=320):
    """Render ``{name: (xs, ys)}`` as a standalone SVG document string."""
    pts = [(float(x), float(y)) for xs, ys in series.values() for x, y in zip(xs, ys)]
    pts = [(x, y) for x, y in pts if math.isfinite(x) and math.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    xlo, xhi = min(p[0] for p in pts), max(p[0] for p in pts)
    ylo, yhi = min(p[1] for p in pts), max(p[1] for p in pts)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    left, right, top, bottom = 60, 130, 30, 45
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - xlo) / (xhi - xlo) * pw

    def sy(y):
        return top + (1 - (y - ylo) / (yhi - ylo)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for t in _ticks(xlo, xhi):
        out.append(f'<text x="{sx(t):.1f}" y="{top + ph + 15}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(ylo, yhi):
        out.append(f'<text x="{left - 5}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (name, (xs, ys)) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = [
            f"{sx(float(x)):.1f},{sy(float(y)):.1f}"
            for x, y in zip(xs, ys)
            if math.isfinite(float(x)) and math.isfinite(float(y))
        ]
        if coords:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(coords)}"/>')
        ly = top + 12 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 28}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 32}" y="{ly + 4}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, series, **kw):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg_line_chart(series, **kw))
