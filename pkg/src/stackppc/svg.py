"""Minimal deterministic SVG charts (no timestamps, no random ids)."""
from __future__ import annotations

from html import escape

W, H = 480, 320
ML, MR, MT, MB = 56, 16, 36, 44
PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02")


def _f(v):
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    step = (hi - lo) / (n - 1) if hi > lo else 1.0
    return [lo + j * step for j in range(n)]


def _frame(title, x_label, y_label):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>',
        f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" stroke="black"/>',
        f'<text x="{(ML + W - MR) / 2}" y="{H - 8}" text-anchor="middle">{escape(x_label)}</text>',
        f'<text x="14" y="{(MT + H - MB) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {(MT + H - MB) / 2})">{escape(y_label)}</text>',
    ]
    return parts


def histogram_svg(edges, counts, observed, title="", x_label="T(y_rep)") -> str:
    """Histogram of replicated statistics with a solid line at the observed value."""
    edges = [float(e) for e in edges]
    counts = [int(c) for c in counts]
    lo = min(edges[0], observed)
    hi = max(edges[-1], observed)
    if hi == lo:
        hi = lo + 1.0
    top = max(max(counts), 1)
    sx = lambda v: ML + (v - lo) / (hi - lo) * (W - ML - MR)
    sy = lambda c: H - MB - c / top * (H - MT - MB)
    parts = _frame(title, x_label, "count")
    for a, b, c in zip(edges[:-1], edges[1:], counts):
        parts.append(f'<rect x="{_f(sx(a))}" y="{_f(sy(c))}" width="{_f(max(sx(b) - sx(a), 0.5))}" '
                     f'height="{_f(H - MB - sy(c))}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>')
    for t in _ticks(lo, hi):
        parts.append(f'<text x="{_f(sx(t))}" y="{H - MB + 14}" text-anchor="middle">{t:.3g}</text>')
    x = sx(observed)
    parts.append(f'<line x1="{_f(x)}" y1="{MT}" x2="{_f(x)}" y2="{H - MB}" stroke="black" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def interval_svg(series, x_values, x_labels, title="", x_label="", y_label="probability") -> str:
    """Point-and-interval chart.

    ``series`` is a list of ``(name, [(median, lo, hi), ...])`` aligned with
    ``x_values``.
    """
    xs = [float(v) for v in x_values]
    lo_x, hi_x = min(xs), max(xs)
    pad = 0.08 * (hi_x - lo_x if hi_x > lo_x else 1.0)
    lo_x, hi_x = lo_x - pad, hi_x + pad
    ys = [v for _, pts in series for pt in pts for v in pt]
    lo_y, hi_y = min(0.0, min(ys)), max(ys) * 1.05 if ys else 1.0
    if hi_y <= lo_y:
        hi_y = lo_y + 1.0
    sx = lambda v: ML + (v - lo_x) / (hi_x - lo_x) * (W - ML - MR - 90)
    sy = lambda v: H - MB - (v - lo_y) / (hi_y - lo_y) * (H - MT - MB)
    parts = _frame(title, x_label, y_label)
    for x, lab in zip(xs, x_labels):
        parts.append(f'<text x="{_f(sx(x))}" y="{H - MB + 14}" text-anchor="middle">{escape(str(lab))}</text>')
    for t in _ticks(lo_y, hi_y):
        parts.append(f'<text x="{ML - 4}" y="{_f(sy(t) + 4)}" text-anchor="end">{t:.2f}</text>')
    k = len(series)
    for j, (name, pts) in enumerate(series):
        color = PALETTE[j % len(PALETTE)]
        shift = (j - (k - 1) / 2) * 4.0
        path = []
        for x, (m, lo, hi) in zip(xs, pts):
            cx = sx(x) + shift
            parts.append(f'<line x1="{_f(cx)}" y1="{_f(sy(lo))}" x2="{_f(cx)}" y2="{_f(sy(hi))}" '
                         f'stroke="{color}"/>')
            parts.append(f'<circle cx="{_f(cx)}" cy="{_f(sy(m))}" r="2.5" fill="{color}"/>')
            path.append(f"{_f(cx)},{_f(sy(m))}")
        parts.append(f'<polyline points="{" ".join(path)}" fill="none" stroke="{color}" '
                     f'stroke-width="0.8"/>')
        ly = MT + 12 * j
        parts.append(f'<rect x="{W - MR - 86}" y="{ly - 7}" width="8" height="8" fill="{color}"/>')
        parts.append(f'<text x="{W - MR - 74}" y="{ly}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
