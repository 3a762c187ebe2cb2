"""Minimal SVG charts written as plain markup."""

from html import escape
from typing import Mapping, Sequence

import numpy as np

WIDTH, HEIGHT, PADDING = 720, 420, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
KDE_POINTS = 64


def _f(value: float) -> str:
    return f"{value:.2f}"


def _frame(title: str, y_max: float, y_label: str) -> list[str]:
    bottom, top = HEIGHT - PADDING, PADDING
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" style="background-color: white;">',
        f'<text x="{WIDTH / 2}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{escape(title)}</text>',
        f'<line x1="{PADDING}" y1="{bottom}" x2="{WIDTH - PADDING}" y2="{bottom}" stroke="black" />',
        f'<line x1="{PADDING}" y1="{bottom}" x2="{PADDING}" y2="{top}" stroke="black" />',
        f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" font-family="sans-serif" '
        f'transform="rotate(-90 15,{HEIGHT / 2})">{escape(y_label)}</text>',
    ]
    for tick in np.linspace(0, y_max, 5):
        y = bottom - (bottom - top) * tick / y_max
        parts.append(
            f'<text x="{PADDING - 6}" y="{_f(y + 4)}" text-anchor="end" font-family="sans-serif" font-size="10">{tick:.2f}</text>'
        )
    return parts


def bar_chart(
    title: str,
    categories: Sequence[str],
    series: Mapping[str, Sequence[float | None]],
    y_max: float = 1.0,
    y_label: str = "Freq",
) -> str:
    """Grouped bars; ``None`` values leave a gap."""
    parts = _frame(title, y_max, y_label)
    bottom, top = HEIGHT - PADDING, PADDING
    slot = (WIDTH - 2 * PADDING) / max(1, len(categories))
    bar = slot * 0.8 / max(1, len(series))
    for i, category in enumerate(categories):
        x0 = PADDING + i * slot + slot * 0.1
        parts.append(
            f'<text x="{_f(x0 + slot * 0.4)}" y="{bottom + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">{escape(category)}</text>'
        )
        for j, values in enumerate(series.values()):
            value = values[i]
            if value is None:
                continue
            h = (bottom - top) * min(value, y_max) / y_max
            parts.append(
                f'<rect x="{_f(x0 + j * bar)}" y="{_f(bottom - h)}" width="{_f(bar)}" height="{_f(h)}" fill="{COLORS[j % len(COLORS)]}" />'
            )
    for j, label in enumerate(series):
        y = PADDING + j * 16
        parts.append(f'<rect x="{WIDTH - 170}" y="{y}" width="10" height="10" fill="{COLORS[j % len(COLORS)]}" />')
        parts.append(
            f'<text x="{WIDTH - 155}" y="{y + 10}" font-family="sans-serif" font-size="12">{escape(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def silverman_bandwidth(values: np.ndarray) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    std = float(np.std(values, ddof=1))
    q75, q25 = np.percentile(values, [75, 25])
    spread = min(std, float(q75 - q25) / 1.34) or std
    return 0.9 * spread * n ** (-1 / 5)


def density(values: Sequence[float], grid: np.ndarray) -> np.ndarray:
    """Gaussian kernel density on ``grid``; all-equal samples give a spike."""
    values = np.asarray(values, dtype=float)
    h = silverman_bandwidth(values)
    if h == 0:
        return np.where(np.isclose(grid, values[0], atol=(grid[1] - grid[0]) / 2), 1.0, 0.0)
    z = (grid[:, None] - values[None, :]) / h
    return np.exp(-0.5 * z**2).sum(axis=1) / (len(values) * h * np.sqrt(2 * np.pi))


def violin_chart(
    title: str,
    groups: Mapping[str, Sequence[float]],
    y_range: tuple[float, float] = (0.0, 1.0),
    y_label: str = "value",
) -> str:
    low, high = y_range
    parts = _frame(title, high - low, y_label)
    bottom, top = HEIGHT - PADDING, PADDING
    slot = (WIDTH - 2 * PADDING) / max(1, len(groups))
    grid = np.linspace(low, high, KDE_POINTS)
    for i, (label, values) in enumerate(groups.items()):
        center = PADDING + (i + 0.5) * slot
        parts.append(
            f'<text x="{_f(center)}" y="{bottom + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">{escape(label)}</text>'
        )
        if not len(values):
            continue
        d = density(values, grid)
        half = d / d.max() * slot * 0.4 if d.max() > 0 else d
        ys = bottom - (bottom - top) * (grid - low) / (high - low)
        right = [f"{_f(center + w)},{_f(y)}" for w, y in zip(half, ys)]
        left = [f"{_f(center - w)},{_f(y)}" for w, y in zip(half[::-1], ys[::-1])]
        parts.append(
            f'<polygon points="{" ".join(right + left)}" fill="{COLORS[i % len(COLORS)]}" fill-opacity="0.5" stroke="black" />'
        )
        median = bottom - (bottom - top) * (float(np.median(values)) - low) / (high - low)
        parts.append(
            f'<line x1="{_f(center - slot * 0.1)}" y1="{_f(median)}" x2="{_f(center + slot * 0.1)}" y2="{_f(median)}" stroke="black" />'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
