#!/usr/bin/env python3
"""Regenerate the bundled capital-letter boundary dataset.

Traces each glyph A-Z from DejaVu Sans Bold, keeps only the outer contour
(filling any interior holes), rounds the corners by Gaussian smoothing in
arclength at 2% of the glyph height, recenters at the area centroid, rescales
to characteristic size one (half diameter), and stores a fixed number of
uniform-arclength samples per glyph.

Development-time tool only: the package itself never imports matplotlib and
reads the generated text files instead.  Output is deterministic for a given
font, so the files are versioned with the repository.
"""

import argparse
import pathlib
import string
import sys

import numpy as np
from matplotlib.font_manager import FontProperties
from matplotlib.textpath import TextPath

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from cgptid.geometry import polyline_is_simple  # noqa: E402

DENSE = 8192
STORED = 1024
FILLET_FRACTION = 0.02


def polygon_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def outer_contour(glyph, font):
    path = TextPath((0, 0), glyph, size=1.0, prop=font)
    polys = path.to_polygons()
    if not polys:
        raise RuntimeError(f"no outline for glyph {glyph!r}")
    outer = max(polys, key=lambda p: abs(polygon_area(p)))
    if np.allclose(outer[0], outer[-1]):
        outer = outer[:-1]
    if polygon_area(outer) < 0:
        outer = outer[::-1]
    return outer


def resample_by_arclength(pts, n):
    seg = np.sqrt(((np.roll(pts, -1, axis=0) - pts) ** 2).sum(1))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    targets = total * np.arange(n) / n
    closed = np.vstack([pts, pts[:1]])
    x = np.interp(targets, s, closed[:, 0])
    y = np.interp(targets, s, closed[:, 1])
    return np.stack([x, y], axis=1)


def gaussian_smooth_closed(pts, sigma):
    n = len(pts)
    seg = np.sqrt(((np.roll(pts, -1, axis=0) - pts) ** 2).sum(1))
    length = seg.sum()
    c = pts[:, 0] + 1j * pts[:, 1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    atten = np.exp(-0.5 * (2 * np.pi * k * sigma / length) ** 2)
    sm = np.fft.ifft(np.fft.fft(c) * atten)
    return np.stack([sm.real, sm.imag], axis=1)


def area_centroid(pts):
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = np.sum((x + xn) * cross) / (6 * area)
    cy = np.sum((y + yn) * cross) / (6 * area)
    return np.array([cx, cy])


def hull_diameter(pts):
    from scipy.spatial import ConvexHull

    hull = pts[ConvexHull(pts).vertices]
    diff = hull[:, None, :] - hull[None, :, :]
    return np.sqrt((diff**2).sum(-1)).max()


def build_glyph(glyph, font):
    raw = outer_contour(glyph, font)
    height = raw[:, 1].max() - raw[:, 1].min()
    pts = resample_by_arclength(raw, DENSE)
    pts = gaussian_smooth_closed(pts, FILLET_FRACTION * height)
    # smoothing perturbs the arclength spacing; restore it and settle
    for _ in range(2):
        pts = resample_by_arclength(pts, DENSE)
        pts = gaussian_smooth_closed(pts, 0.25 * FILLET_FRACTION * height)
    pts = resample_by_arclength(pts, DENSE)
    pts = pts - area_centroid(pts)
    pts = pts / (0.5 * hull_diameter(pts))
    pts = resample_by_arclength(pts, STORED)
    if not polyline_is_simple(pts):
        raise RuntimeError(f"smoothed glyph {glyph!r} self-intersects")
    return pts


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        default=str(pathlib.Path(__file__).resolve().parents[1] / "src/cgptid/data/letters"),
    )
    args = parser.parse_args()
    outdir = pathlib.Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    font = FontProperties(family="DejaVu Sans", weight="bold")
    for glyph in string.ascii_uppercase:
        pts = build_glyph(glyph, font)
        lines = [f"glyph {glyph} n {len(pts)}"]
        lines += [f"{x:.12e} {y:.12e}" for x, y in pts]
        (outdir / f"{glyph}.txt").write_text("\n".join(lines) + "\n")
        print(f"{glyph}: perimeter-normalized {len(pts)} nodes written")


if __name__ == "__main__":
    main()
