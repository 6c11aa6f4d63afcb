"""Closed 2-D boundary curves and similarity transforms.

A boundary is sampled at n uniformly spaced parameter values xi_j = 2*pi*j/n
of a counter-clockwise 2*pi-periodic parametrization.  Besides node positions
it carries unit tangents, outward unit normals, arclength quadrature weights
(periodic trapezoid rule, spectrally accurate on smooth curves) and signed
curvature, which the layer-potential discretization needs on its diagonal.
"""

from __future__ import annotations

import importlib.resources
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .errors import DegenerateGeometryError

_LETTER_DATA_PACKAGE = "cgptid.data.letters"


@dataclass(frozen=True)
class SimilarityTransform:
    """Map x -> z + s * exp(i*theta) * x on points identified with complex numbers.

    s must be positive; theta is stored reduced to [0, 2*pi).
    """

    z: complex = 0j
    s: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"scale must be positive, got {self.s}")
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))

    @property
    def w(self) -> complex:
        """Complex rotation-scaling factor s * exp(i*theta)."""
        return self.s * np.exp(1j * self.theta)

    def apply(self, points_c):
        return self.z + self.w * np.asarray(points_c)

    def compose(self, inner: "SimilarityTransform") -> "SimilarityTransform":
        """Transform equal to applying `inner` first, then this one."""
        return SimilarityTransform(
            z=self.z + self.w * inner.z, s=self.s * inner.s, theta=self.theta + inner.theta
        )

    def inverse(self) -> "SimilarityTransform":
        return SimilarityTransform(z=-self.z / self.w, s=1.0 / self.s, theta=-self.theta)


@dataclass(frozen=True)
class Boundary:
    """Sampled closed curve with per-node differential data.

    points : (n, 2) node positions
    tangents : (n, 2) unit tangents along the parametrization
    normals : (n, 2) outward unit normals
    weights : (n,) arclength quadrature weights, summing to the perimeter
    curvature : (n,) signed curvature (positive for a convex CCW curve)
    """

    points: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    curvature: np.ndarray
    n_nodes: int

    def __post_init__(self):
        for name in ("points", "tangents", "normals", "weights", "curvature"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def points_c(self) -> np.ndarray:
        """Node positions as complex numbers x1 + i*x2."""
        return self.points[:, 0] + 1j * self.points[:, 1]

    @property
    def normals_c(self) -> np.ndarray:
        return self.normals[:, 0] + 1j * self.normals[:, 1]

    @property
    def perimeter(self) -> float:
        return float(self.weights.sum())

    @property
    def area(self) -> float:
        # area = (1/2) * closed integral of <x, nu> ds
        return float(0.5 * np.sum((self.points * self.normals).sum(axis=1) * self.weights))

    @property
    def centroid(self) -> np.ndarray:
        """Area centroid, from the divergence-theorem moment integrals."""
        mx = np.sum(self.points[:, 0] ** 2 * self.normals[:, 0] * self.weights)
        my = np.sum(self.points[:, 1] ** 2 * self.normals[:, 1] * self.weights)
        return np.array([mx, my]) / (2.0 * self.area)

    @property
    def diameter(self) -> float:
        hull = ConvexHull(self.points)
        pts = self.points[hull.vertices]
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    def contains_point(self, point) -> bool:
        """Crossing-number test on the node polyline."""
        x, y = float(point[0]), float(point[1])
        px = self.points[:, 0]
        py = self.points[:, 1]
        qx = np.roll(px, -1)
        qy = np.roll(py, -1)
        crosses = (py > y) != (qy > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = px + (y - py) * (qx - px) / (qy - py)
        return bool(np.count_nonzero(crosses & (xi > x)) % 2)


def _boundary_from_parametric(pos, vel, acc) -> Boundary:
    """Assemble a Boundary from positions and first/second parameter derivatives."""
    n = pos.shape[0]
    speed = np.sqrt((vel**2).sum(axis=1))
    if np.any(speed <= 0):
        raise DegenerateGeometryError("parametrization has a stationary point")
    tangents = vel / speed[:, None]
    # outward normal of a CCW curve: rotate the tangent by -90 degrees
    normals = np.stack([tangents[:, 1], -tangents[:, 0]], axis=1)
    weights = speed * (2 * np.pi / n)
    curvature = (vel[:, 0] * acc[:, 1] - vel[:, 1] * acc[:, 0]) / speed**3
    return Boundary(
        points=pos, tangents=tangents, normals=normals, weights=weights, curvature=curvature, n_nodes=n
    )


def boundary_from_nodes(points) -> Boundary:
    """Build a Boundary from closed-curve samples by spectral differentiation.

    The samples are treated as values of a smooth 2*pi-periodic parametrization
    at uniform parameters; n must be even.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if n % 2 != 0:
        raise ValueError("spectral differentiation requires an even node count")
    c = points[:, 0] + 1j * points[:, 1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    k1 = k.copy()
    k1[n // 2] = 0.0  # drop the Nyquist mode in odd-order derivatives
    chat = np.fft.fft(c)
    cp = np.fft.ifft(1j * k1 * chat)
    cpp = np.fft.ifft(-(k**2) * chat)
    vel = np.stack([cp.real, cp.imag], axis=1)
    acc = np.stack([cpp.real, cpp.imag], axis=1)
    return _boundary_from_parametric(points, vel, acc)


def _radial_boundary(radius, dradius, ddradius, n) -> Boundary:
    """Boundary r(xi) * (cos xi, sin xi) from the radial profile and derivatives."""
    xi = 2 * np.pi * np.arange(n) / n
    r, dr, ddr = radius(xi), dradius(xi), ddradius(xi)
    cos, sin = np.cos(xi), np.sin(xi)
    pos = np.stack([r * cos, r * sin], axis=1)
    vel = np.stack([dr * cos - r * sin, dr * sin + r * cos], axis=1)
    acc = np.stack(
        [ddr * cos - 2 * dr * sin - r * cos, ddr * sin + 2 * dr * cos - r * sin], axis=1
    )
    return _boundary_from_parametric(pos, vel, acc)


def make_ellipse(semi_axis_a: float, semi_axis_b: float, n: int) -> Boundary:
    """Ellipse (a*cos xi, b*sin xi) with analytic normals and curvature."""
    if semi_axis_a <= 0 or semi_axis_b <= 0:
        raise ValueError("semi-axes must be positive")
    if n < 16 or n % 2 != 0:
        raise ValueError("node count must be even and at least 16")
    xi = 2 * np.pi * np.arange(n) / n
    a, b = float(semi_axis_a), float(semi_axis_b)
    pos = np.stack([a * np.cos(xi), b * np.sin(xi)], axis=1)
    vel = np.stack([-a * np.sin(xi), b * np.cos(xi)], axis=1)
    acc = -pos
    return _boundary_from_parametric(pos, vel, acc)


def make_flower(p: int, eta: float, n: int) -> Boundary:
    """Petaled perturbation of the unit circle, radius 1 + eta*cos(p*xi)."""
    if p < 2:
        raise ValueError("petal count must be at least 2")
    if not 0 < eta < 1:
        raise ValueError("petal amplitude must lie in (0, 1)")
    if n < 16 * p or n % 2 != 0:
        raise ValueError(f"node count must be even and at least {16 * p}")
    return _radial_boundary(
        lambda xi: 1 + eta * np.cos(p * xi),
        lambda xi: -eta * p * np.sin(p * xi),
        lambda xi: -eta * p * p * np.cos(p * xi),
        n,
    )


def _damaged_petal_poly(p: int, eta: float, t: float) -> np.ndarray:
    """Degree-6 polynomial (coefficients in u = xi/(2*pi/p), ascending) for the
    damaged sector.

    Matches value and first two derivatives of 1 + eta*cos(p*xi) at both sector
    ends, and takes the reduced-amplitude value 1 - (1-t)*eta at the sector
    midpoint, so the local oscillation amplitude drops by the damage fraction t
    while the curve stays C^2 and closed.
    """
    a = 2 * np.pi / p
    rows, rhs = [], []
    powers = np.arange(7)
    for u in (0.0, 1.0):
        rows.append(u**powers)
        rhs.append(1 + eta)
        d1 = np.zeros(7)
        d1[1:] = powers[1:] * u ** (powers[1:] - 1)
        rows.append(d1)
        rhs.append(0.0)
        d2 = np.zeros(7)
        d2[2:] = powers[2:] * (powers[2:] - 1) * u ** (powers[2:] - 2)
        rows.append(d2)
        rhs.append(-eta * p * p * a * a)
    rows.append(0.5**powers)
    rhs.append(1 - (1 - t) * eta)
    return np.linalg.solve(np.array(rows), np.array(rhs))


def make_damaged_flower(p: int, eta: float, t: float, n: int) -> Boundary:
    """Flower with the sector [0, 2*pi/p) replaced by a C^2 damaged profile."""
    if p < 2:
        raise ValueError("petal count must be at least 2")
    if not 0 < eta < 1:
        raise ValueError("petal amplitude must lie in (0, 1)")
    if not 0 < t < 1:
        raise ValueError("damage fraction must lie in (0, 1)")
    if n < 16 * p or n % 2 != 0:
        raise ValueError(f"node count must be even and at least {16 * p}")
    a = 2 * np.pi / p
    coeffs = _damaged_petal_poly(p, eta, t)
    dcoeffs = np.polyder(coeffs[::-1])[::-1]
    ddcoeffs = np.polyder(dcoeffs[::-1])[::-1]

    def _piecewise(xi, order):
        xi = np.mod(xi, 2 * np.pi)
        sector = xi < a
        u = xi / a
        if order == 0:
            out = 1 + eta * np.cos(p * xi)
            out[sector] = np.polyval(coeffs[::-1], u[sector])
        elif order == 1:
            out = -eta * p * np.sin(p * xi)
            out[sector] = np.polyval(dcoeffs[::-1], u[sector]) / a
        else:
            out = -eta * p * p * np.cos(p * xi)
            out[sector] = np.polyval(ddcoeffs[::-1], u[sector]) / a**2
        return out

    return _radial_boundary(
        lambda xi: _piecewise(xi, 0), lambda xi: _piecewise(xi, 1), lambda xi: _piecewise(xi, 2), n
    )


def damaged_flower_profile(p: int, eta: float, t: float, xi) -> np.ndarray:
    """Radial profile of the damaged flower at parameter values xi."""
    xi = np.mod(np.atleast_1d(np.asarray(xi, dtype=float)), 2 * np.pi)
    a = 2 * np.pi / p
    out = 1 + eta * np.cos(p * xi)
    sector = xi < a
    coeffs = _damaged_petal_poly(p, eta, t)
    out[sector] = np.polyval(coeffs[::-1], xi[sector] / a)
    return out


def _resample_closed_curve(points_c: np.ndarray, n: int) -> np.ndarray:
    """Trigonometric resampling of uniform samples of a closed curve."""
    m = len(points_c)
    spec = np.fft.fft(points_c) / m
    half = min(m, n) // 2
    out = np.zeros(n, dtype=complex)
    out[:half] = spec[:half]
    out[-half:] = spec[-half:]
    return np.fft.ifft(out * n)


def _segments_intersect(p1, p2, q1, q2):
    """Vectorized proper-intersection test between segment arrays."""

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (
            b[..., 1] - a[..., 1]
        ) * (c[..., 0] - a[..., 0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def polyline_is_simple(points: np.ndarray) -> bool:
    """True when the closed node polyline has no proper self-intersection."""
    n = len(points)
    starts = points
    ends = np.roll(points, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    adjacent = (i == 0) & (j == n - 1)
    i, j = i[~adjacent], j[~adjacent]
    hits = _segments_intersect(starts[i], ends[i], starts[j], ends[j])
    return not bool(hits.any())


def apply_transform(boundary: Boundary, transform: SimilarityTransform) -> Boundary:
    """Similarity image of a boundary; weights scale by s, curvature by 1/s."""
    w = transform.w
    pts = transform.z + w * boundary.points_c
    rot = np.exp(1j * transform.theta)
    tan = rot * (boundary.tangents[:, 0] + 1j * boundary.tangents[:, 1])
    nor = rot * boundary.normals_c
    return Boundary(
        points=np.stack([pts.real, pts.imag], axis=1),
        tangents=np.stack([tan.real, tan.imag], axis=1),
        normals=np.stack([nor.real, nor.imag], axis=1),
        weights=boundary.weights * transform.s,
        curvature=boundary.curvature / transform.s,
        n_nodes=boundary.n_nodes,
    )


def characteristic_size(boundary: Boundary) -> float:
    """Half the boundary diameter, the length scale used for truncation bounds."""
    return 0.5 * boundary.diameter


def available_letters() -> list[str]:
    files = importlib.resources.files(_LETTER_DATA_PACKAGE)
    return sorted(f.name[0] for f in files.iterdir() if f.name.endswith(".txt"))


def _load_letter_nodes(glyph: str) -> np.ndarray:
    resource = importlib.resources.files(_LETTER_DATA_PACKAGE) / f"{glyph}.txt"
    try:
        text = resource.read_text()
    except FileNotFoundError:
        raise ValueError(f"unsupported glyph {glyph!r}") from None
    lines = text.strip().splitlines()
    head = lines[0].split()
    if head[0] != "glyph" or head[1] != glyph or head[2] != "n":
        raise ValueError(f"malformed glyph file for {glyph!r}")
    count = int(head[3])
    data = np.array([[float(v) for v in line.split()] for line in lines[1 : count + 1]])
    if data.shape != (count, 2):
        raise ValueError(f"glyph file for {glyph!r} has {data.shape[0]} rows, expected {count}")
    return data


def make_letter(glyph: str, n: int) -> Boundary:
    """Load a capital-letter boundary from the bundled glyph dataset.

    Each dataset file stores a hole-filled, corner-smoothed outline sampled
    uniformly by arclength; it is resampled trigonometrically to n nodes and
    differentiated spectrally.
    """
    if not (isinstance(glyph, str) and len(glyph) == 1 and "A" <= glyph <= "Z"):
        raise ValueError(f"glyph must be a single character A-Z, got {glyph!r}")
    if n < 64 or n % 2 != 0:
        raise ValueError("node count must be even and at least 64")
    nodes = _load_letter_nodes(glyph)
    c = _resample_closed_curve(nodes[:, 0] + 1j * nodes[:, 1], n)
    return boundary_from_nodes(np.stack([c.real, c.imag], axis=1))


def perturb_letter(boundary: Boundary, magnitude: float, smoothing: float, seed: int) -> Boundary:
    """Seeded smooth spatial perturbation followed by arclength smoothing.

    The nodes are displaced by a low-frequency plane-wave field of the plane
    (a spatially smooth near-diffeomorphism, so thin strokes deform coherently
    instead of collapsing), bounded by magnitude * diameter; the Hausdorff
    distance to the original cannot exceed that bound.
    """
    if not 0 <= magnitude < 0.2:
        raise ValueError("perturbation magnitude must lie in [0, 0.2)")
    if magnitude == 0:
        return boundary
    n = boundary.n_nodes
    rng = np.random.default_rng(seed)
    diam = boundary.diameter
    center = boundary.points.mean(axis=0)
    rel = (boundary.points - center) / diam
    waves = 4
    field = np.zeros((n, 2))
    for _ in range(waves):
        wavevec = rng.uniform(-2 * np.pi, 2 * np.pi, 2)
        phase = rng.uniform(0, 2 * np.pi)
        direction = rng.standard_normal(2)
        direction /= np.linalg.norm(direction)
        field += np.cos(rel @ wavevec + phase)[:, None] * direction[None, :]
    # headroom below the bound covers the extra node motion from smoothing
    field *= 0.9 / np.linalg.norm(field, axis=1).max()
    c_pts = boundary.points + (magnitude * diam) * field
    c = c_pts[:, 0] + 1j * c_pts[:, 1]
    if smoothing > 0:
        # Gaussian kernel in arclength, applied mode-wise
        length = boundary.perimeter
        k = np.fft.fftfreq(n, d=1.0 / n)
        atten = np.exp(-0.5 * (2 * np.pi * k * smoothing / length) ** 2)
        c = np.fft.ifft(np.fft.fft(c) * atten)
    pts = np.stack([c.real, c.imag], axis=1)
    if not polyline_is_simple(pts):
        raise DegenerateGeometryError("perturbation produced a self-intersecting curve")
    return boundary_from_nodes(pts)


def parse_shape_spec(spec: str, n: int) -> Boundary:
    """Build a boundary from a compact textual description.

    Accepted forms: ``ellipse:a,b``, ``flower:p,eta``, ``dflower:p,eta,t``,
    ``letter:X``.
    """
    kind, _, args = spec.partition(":")
    parts = [a for a in args.split(",") if a] if args else []
    if kind == "ellipse" and len(parts) == 2:
        return make_ellipse(float(parts[0]), float(parts[1]), n)
    if kind == "flower" and len(parts) == 2:
        return make_flower(int(parts[0]), float(parts[1]), n)
    if kind == "dflower" and len(parts) == 3:
        return make_damaged_flower(int(parts[0]), float(parts[1]), float(parts[2]), n)
    if kind == "letter" and len(parts) == 1:
        return make_letter(parts[0], n)
    raise ValueError(f"unrecognized shape spec {spec!r}")
