"""Deterministic SVG summary of improvement paths and network envelopes.

Bandwidth runs along a logarithmic x axis and latency along a linear y
axis oriented so that better conditions are down and to the right. Path
points are shaded by PSI normalized per path (lighter means lower PSI);
envelopes are outlined rectangles. Output is a pure function of the
inputs, so identical inputs give identical bytes.
"""

from __future__ import annotations

import math

from .model import CpiPath, Envelope

MARGIN_LEFT = 70.0
MARGIN_RIGHT = 24.0
MARGIN_TOP = 24.0
MARGIN_BOTTOM = 56.0

# Grayscale range for per-path PSI shading: the minimum PSI on a path maps
# to the light end, the maximum to the dark end.
SHADE_LIGHT = 235
SHADE_DARK = 50


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _tick_label(value: float) -> str:
    return f"{value:.0f}" if value >= 10 else f"{value:.2f}"


def render_plot(paths: list[CpiPath], envelopes: list[Envelope],
                width: int = 900, height: int = 600) -> str:
    if not paths:
        raise ValueError("at least one path is required")

    paths = sorted(paths, key=lambda p: p.site_id)
    envelopes = sorted(envelopes, key=lambda e: (e.provider, e.city, e.year))

    bws = [s.point.bandwidth_kbps for p in paths for s in p.points]
    lats = [s.point.latency_ms for p in paths for s in p.points]
    for env in envelopes:
        bws += [env.bw_lo_kbps, env.bw_hi_kbps]
        lats += [env.lat_lo_ms, env.lat_hi_ms]

    log_lo, log_hi = math.log10(min(bws)), math.log10(max(bws))
    if log_hi - log_lo < 1e-9:
        log_lo -= 0.5
        log_hi += 0.5
    pad = 0.04 * (log_hi - log_lo)
    log_lo -= pad
    log_hi += pad

    lat_lo, lat_hi = min(lats), max(lats)
    if lat_hi - lat_lo < 1e-9:
        lat_lo -= 1.0
        lat_hi += 1.0
    lat_pad = 0.04 * (lat_hi - lat_lo)
    lat_lo -= lat_pad
    lat_hi += lat_pad

    plot_w = width - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = height - MARGIN_TOP - MARGIN_BOTTOM

    def x(bw: float) -> float:
        return MARGIN_LEFT + (math.log10(bw) - log_lo) / (log_hi - log_lo) * plot_w

    def y(lat: float) -> float:
        # High latency at the top, so improvement points down.
        return MARGIN_TOP + (lat_hi - lat) / (lat_hi - lat_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{_fmt(MARGIN_LEFT)}" y="{_fmt(MARGIN_TOP)}" width="{_fmt(plot_w)}" '
        f'height="{_fmt(plot_h)}" fill="none" stroke="#333" stroke-width="1"/>',
    ]

    for i in range(5):
        frac = i / 4
        bw_tick = 10 ** (log_lo + frac * (log_hi - log_lo))
        xt = x(bw_tick)
        out.append(f'<line x1="{_fmt(xt)}" y1="{_fmt(MARGIN_TOP)}" x2="{_fmt(xt)}" '
                   f'y2="{_fmt(MARGIN_TOP + plot_h)}" stroke="#eee" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(xt)}" y="{_fmt(MARGIN_TOP + plot_h + 16)}" font-size="10" '
                   f'text-anchor="middle" fill="#333">{_tick_label(bw_tick)}</text>')
        lat_tick = lat_lo + frac * (lat_hi - lat_lo)
        yt = y(lat_tick)
        out.append(f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(yt)}" x2="{_fmt(MARGIN_LEFT + plot_w)}" '
                   f'y2="{_fmt(yt)}" stroke="#eee" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(MARGIN_LEFT - 6)}" y="{_fmt(yt + 3)}" font-size="10" '
                   f'text-anchor="end" fill="#333">{_tick_label(lat_tick)}</text>')

    out.append(f'<text x="{_fmt(MARGIN_LEFT + plot_w / 2)}" y="{_fmt(height - 22)}" font-size="12" '
               f'text-anchor="middle" fill="#000">bandwidth (Kbps, log scale)</text>')
    out.append(f'<text x="14" y="{_fmt(MARGIN_TOP + plot_h / 2)}" font-size="12" text-anchor="middle" '
               f'fill="#000" transform="rotate(-90 14 {_fmt(MARGIN_TOP + plot_h / 2)})">latency (ms)</text>')
    out.append(f'<text x="{_fmt(MARGIN_LEFT)}" y="{_fmt(height - 6)}" font-size="10" fill="#555">'
               'point shade: PSI normalized per path (min/max), lighter = lower PSI</text>')

    for env in envelopes:
        rx, ry = x(env.bw_lo_kbps), y(env.lat_hi_ms)
        rw = x(env.bw_hi_kbps) - rx
        rh = y(env.lat_lo_ms) - ry
        out.append(f'<rect class="envelope" x="{_fmt(rx)}" y="{_fmt(ry)}" width="{_fmt(rw)}" '
                   f'height="{_fmt(rh)}" fill="none" stroke="#1f6fb2" stroke-width="1.2"/>')
        out.append(f'<text x="{_fmt(rx + 2)}" y="{_fmt(ry + 10)}" font-size="9" fill="#1f6fb2">'
                   f'{env.provider} {env.city} {env.year}</text>')

    for path in paths:
        coords = " ".join(
            f"{_fmt(x(s.point.bandwidth_kbps))},{_fmt(y(s.point.latency_ms))}" for s in path.points
        )
        out.append(f'<polyline class="cpi" points="{coords}" fill="none" stroke="#999" stroke-width="1"/>')
        means = [s.mean for s in path.points]
        lo, hi = min(means), max(means)
        span = hi - lo
        for s in path.points:
            norm = (s.mean - lo) / span if span > 0 else 0.0
            shade = int(round(SHADE_LIGHT - norm * (SHADE_LIGHT - SHADE_DARK)))
            out.append(f'<circle cx="{_fmt(x(s.point.bandwidth_kbps))}" cy="{_fmt(y(s.point.latency_ms))}" '
                       f'r="3" fill="rgb({shade},{shade},{shade})" stroke="#333" stroke-width="0.5"/>')
        first = path.points[0].point
        out.append(f'<text x="{_fmt(x(first.bandwidth_kbps) + 4)}" y="{_fmt(y(first.latency_ms) - 4)}" '
                   f'font-size="9" fill="#555">{path.site_id}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
