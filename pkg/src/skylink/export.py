"""SVG fronts and versioned CSV tables."""
import csv
import io

import numpy as np

from .contact import TWO_PI

CSV_VERSION = 1
WIDTH, HEIGHT, PAD = 720, 360, 24
COLOURS = ("#1f4e9c", "#c0392b")


def _fmt(v):
    return f"{v:.3f}"


def front_svg(diagram, title=None):
    """SVG text of a front diagram: ``φ ∈ [0, 2π)`` across, ``u`` up."""
    us = np.concatenate([c.u for c in diagram.curves])
    lo, hi = float(us.min()), float(us.max())
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0
    span = hi - lo
    lo, hi = lo - 0.05 * span, hi + 0.05 * span

    def X(phi):
        return PAD + (np.asarray(phi) % TWO_PI) / TWO_PI * (WIDTH - 2 * PAD)

    def Y(u):
        return HEIGHT - PAD - (np.asarray(u) - lo) / (hi - lo) * (HEIGHT - 2 * PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           '<style>.front{fill:none;stroke-width:1.5}.crossing{fill:none;stroke:#000}'
           '.cusp{fill:#000}.frame{fill:none;stroke:#999}</style>',
           f'<rect class="frame" x="{PAD}" y="{PAD}" width="{WIDTH - 2 * PAD}" height="{HEIGHT - 2 * PAD}"/>']
    if title:
        out.append(f'<title>{title}</title>')
    for c in diagram.curves:
        phi, _, u = c.closed()
        x, y = X(phi), Y(u)
        # break the polyline where φ wraps around the annulus
        cuts = np.flatnonzero(np.abs(np.diff(x)) > 0.5 * (WIDTH - 2 * PAD)) + 1
        parts = []
        for seg in np.split(np.arange(len(x)), cuts):
            if len(seg) > 1:
                parts.append("M" + " L".join(f"{_fmt(x[k])},{_fmt(y[k])}" for k in seg))
        colour = COLOURS[c.component % len(COLOURS)]
        out.append(f'<path class="front component-{c.component}" stroke="{colour}" d="{" ".join(parts)}"/>')
    for cr in diagram.crossings:
        out.append(f'<circle class="crossing" cx="{_fmt(X(cr.phi))}" cy="{_fmt(Y(cr.u))}" r="5"/>')
    for cu in diagram.cusps:
        out.append(f'<circle class="cusp" cx="{_fmt(X(cu.phi))}" cy="{_fmt(Y(cu.u))}" r="2.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_front_svg(diagram, path, title=None):
    """Write :func:`front_svg` output to ``path``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(front_svg(diagram, title))
    return path


def csv_text(rows, fields, kind, meta=None):
    """CSV with a ``# skylink <kind> v<N>`` header comment and fixed column order."""
    buf = io.StringIO()
    head = f"# skylink {kind} v{CSV_VERSION}"
    if meta:
        head += " " + " ".join(f"{k}={v}" for k, v in meta.items())
    buf.write(head + "\n")
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="raise")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k, "")) for k in fields})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, rows, fields, kind, meta=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(rows, fields, kind, meta))
    return path


SIGNATURE_FIELDS = ["rot0", "tb0", "wind0", "rot1", "tb1", "wind1", "crossings", "vertical_order"]


def signature_rows(signatures):
    return [s.as_row() for s in signatures]


def c_minus_rows(t, values, steps=None):
    steps = np.zeros(len(t)) if steps is None else steps
    return [{"t": float(a), "c_minus": float(b), "value_step": float(c)}
            for a, b, c in zip(t, values, steps)]


def read_csv(path):
    """Rows of a CSV written by :func:`write_csv` (header comment skipped)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
