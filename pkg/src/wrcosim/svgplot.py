"""Minimal SVG line-plot writer (plain XML, no plotting dependency).

Fixed 640x480 viewport with margins, straight axes, a handful of labelled
ticks and one polyline per series; linear or log-log axes. Output is fully
deterministic for identical inputs.
"""

import math

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 40, 50
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        d0, d1 = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0 ** d for d in range(d0, d1 + 1) if lo / 1.001 <= 10.0 ** d <= hi * 1.001]
    if hi == lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / 4))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= 5:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + step * 1e-9:
        out.append(round(t / step) * step)
        t += step
    return out


def line_plot(series, title: str = "", xlabel: str = "", ylabel: str = "",
              loglog: bool = False) -> str:
    """Render series [(label, x_array, y_array), ...] to an SVG string."""
    xs = np.concatenate([np.asarray(x, dtype=float) for _, x, _ in series])
    ys = np.concatenate([np.asarray(y, dtype=float) for _, _, y in series])
    if loglog:
        mask = (xs > 0) & (ys > 0)
        xs, ys = xs[mask], ys[mask]
        if xs.size == 0:
            raise ValueError("log-log plot needs positive data")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def tx(x):
        if loglog:
            f = (math.log10(x) - math.log10(x0)) / (math.log10(x1) - math.log10(x0))
        else:
            f = (x - x0) / (x1 - x0)
        return MARGIN_L + f * (WIDTH - MARGIN_L - MARGIN_R)

    def ty(y):
        if loglog:
            f = (math.log10(y) - math.log10(y0)) / (math.log10(y1) - math.log10(y0))
        else:
            f = (y - y0) / (y1 - y0)
        return HEIGHT - MARGIN_B - f * (HEIGHT - MARGIN_T - MARGIN_B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" font-size="15">{title}</text>',
    ]
    ax_y = HEIGHT - MARGIN_B
    out.append(f'<line x1="{MARGIN_L}" y1="{ax_y}" x2="{WIDTH - MARGIN_R}" y2="{ax_y}" stroke="black"/>')
    out.append(f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{ax_y}" stroke="black"/>')
    for t in _ticks(x0, x1, loglog):
        px = tx(t)
        out.append(f'<line x1="{px:.2f}" y1="{ax_y}" x2="{px:.2f}" y2="{ax_y + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{ax_y + 18}" text-anchor="middle" font-size="11">{_fmt(t)}</text>')
    for t in _ticks(y0, y1, loglog):
        py = ty(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{py:.2f}" x2="{MARGIN_L}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{py + 4:.2f}" text-anchor="end" font-size="11">{_fmt(t)}</text>')
    out.append(f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) // 2}" y="{HEIGHT - 10}" '
               f'text-anchor="middle" font-size="13">{xlabel}</text>')
    out.append(f'<text x="18" y="{(MARGIN_T + ax_y) // 2}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 18 {(MARGIN_T + ax_y) // 2})">{ylabel}</text>')

    for idx, (label, x, y) in enumerate(series):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if loglog:
            mask = (x > 0) & (y > 0)
            x, y = x[mask], y[mask]
        color = PALETTE[idx % len(PALETTE)]
        pts = " ".join(f"{tx(float(a)):.2f},{ty(float(b)):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN_T + 16 * idx + 10
        lx = WIDTH - MARGIN_R + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}" font-size="11">{label}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def gnuplot_script(csv_name: str, columns: list[tuple[int, str]], title: str = "",
                   loglog: bool = False, xlabel: str = "", ylabel: str = "") -> str:
    """Companion gnuplot script plotting the named CSV columns against column 1."""
    lines = [
        "set datafile separator comma",
        f'set title "{title}"',
        f'set xlabel "{xlabel}"',
        f'set ylabel "{ylabel}"',
        "set key outside right",
    ]
    if loglog:
        lines.append("set logscale xy")
    plots = [f"'{csv_name}' using 1:{col} with lines title '{label}'" for col, label in columns]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
