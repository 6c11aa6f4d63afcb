"""Multistatic response simulation and least-squares tensor reconstruction.

With sources/receivers coinciding at N points on a circle of radius R around a
reference point z0, the response matrix admits the factorization
V = A M A^t + E, where M stacks the contracted tensors of the shifted
inclusion D - z0 into 2x2 blocks, A carries the angular/radial expansion
coefficients of the fundamental solution, and E is the order-K truncation
error, of size eps^(K+2) with eps = (target size)/R.  For the concentric
arrangement A = C D with C^t C = (N/2) I, which gives the reconstruction a
closed form; general reference points fall back to ordinary least squares.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import qr

from .cgpt import RealCgptBlocks
from .errors import DegenerateGeometryError, IllPosedSystemError
from .geometry import Boundary
from .potential import NpSystem, contrast_from_conductivity


@dataclass(frozen=True)
class ArrayConfig:
    """Coincident source/receiver ring: N points, radius R, center z0."""

    n_receivers: int
    radius: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.n_receivers < 3:
            raise ValueError("at least 3 receivers required")
        if self.radius <= 0:
            raise ValueError("array radius must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def angles(self) -> np.ndarray:
        n = self.n_receivers
        return 2 * np.pi * np.arange(1, n + 1) / n

    @property
    def positions(self) -> np.ndarray:
        th = self.angles
        return np.asarray(self.center)[None, :] + self.radius * np.stack(
            [np.cos(th), np.sin(th)], axis=1
        )


@dataclass(frozen=True)
class MsrMatrix:
    values: np.ndarray
    config: ArrayConfig
    noise_sigma: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        n = self.config.n_receivers
        if values.shape != (n, n):
            raise ValueError("matrix shape must match the receiver count")
        object.__setattr__(self, "values", values)
        values.setflags(write=False)


@dataclass(frozen=True)
class CoefficientMatrices:
    """A (N x 2K) and, for a concentric reference, its factors A = C * Dg."""

    a: np.ndarray
    c: np.ndarray
    dg: np.ndarray | None

    @property
    def is_concentric(self) -> bool:
        return self.dg is not None


def coefficient_matrices(config: ArrayConfig, order: int, reference=None) -> CoefficientMatrices:
    """Expansion coefficients relative to a reference point (default: center)."""
    n = config.n_receivers
    if 2 * order >= n:
        raise ValueError(f"need 2K < N, got K={order}, N={n}")
    if reference is None:
        reference = config.center
    rel = config.positions - np.asarray(reference, dtype=float)[None, :]
    radii = np.sqrt((rel**2).sum(-1))
    theta = np.arctan2(rel[:, 1], rel[:, 0])
    ms = np.arange(1, order + 1)
    c = np.empty((n, 2 * order))
    c[:, 0::2] = np.cos(theta[:, None] * ms[None, :])
    c[:, 1::2] = np.sin(theta[:, None] * ms[None, :])
    radial = 1.0 / (2 * np.pi * ms[None, :] * radii[:, None] ** ms[None, :])
    a = np.empty((n, 2 * order))
    a[:, 0::2] = c[:, 0::2] * radial
    a[:, 1::2] = c[:, 1::2] * radial
    concentric = np.allclose(radii, radii[0], rtol=1e-12, atol=1e-12)
    dg = None
    if concentric:
        diag = np.repeat(1.0 / (2 * np.pi * ms * radii[0] ** ms), 2)
        dg = np.diag(diag)
    return CoefficientMatrices(a=a, c=c, dg=dg)


def simulate_msr(boundary: Boundary, kappa: float, config: ArrayConfig) -> MsrMatrix:
    """Forward-simulate the noiseless response matrix of an inclusion.

    One factorization of the boundary system serves all N source solves.
    """
    contrast = contrast_from_conductivity(kappa)
    pts = config.positions
    diff = boundary.points[None, :, :] - pts[:, None, :]  # (N, n, 2)
    r2 = (diff**2).sum(-1)
    spacing = boundary.weights.max()
    if np.sqrt(r2.min()) <= 2 * spacing:
        raise DegenerateGeometryError("array point on or too close to the boundary")
    if any(boundary.contains_point(p) for p in pts):
        raise DegenerateGeometryError("array point inside the inclusion")
    system = NpSystem(boundary, contrast)
    # rhs column s: d Gamma(y - x_s) / d nu_y
    rhs = (diff * boundary.normals[None, :, :]).sum(-1).T / (2 * np.pi * r2.T)
    phi = system.solve(rhs)
    gamma = np.log(r2.T) / (4 * np.pi) * boundary.weights[:, None]  # (n, N)
    values = gamma.T @ phi
    return MsrMatrix(values=values, config=config, noise_sigma=0.0)


def add_noise(msr: MsrMatrix, sigma0: float, seed) -> MsrMatrix:
    """Additive white noise scaled by the data spread: sigma = (max-min)*sigma0."""
    if sigma0 < 0:
        raise ValueError("noise level must be nonnegative")
    if sigma0 == 0:
        return replace(msr)
    spread = float(msr.values.max() - msr.values.min())
    sigma = spread * sigma0
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(msr.values.shape)
    return MsrMatrix(values=msr.values + sigma * w, config=msr.config, noise_sigma=sigma)


def reconstruct_cgpt(msr: MsrMatrix, order: int, reference=None, method: str = "auto") -> RealCgptBlocks:
    """Least-squares tensor estimate from a response matrix.

    Concentric references use the closed form (2/N)^2 D^-1 C^t V C D^-1; other
    references solve the full least-squares problem through a QR factorization.
    The output is symmetrized, as the noiseless model matrix is symmetric.
    """
    coeffs = coefficient_matrices(msr.config, order, reference)
    n = msr.config.n_receivers
    if method not in ("auto", "closed_form", "lstsq"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed_form" and not coeffs.is_concentric:
        raise ValueError("closed form requires a concentric reference")
    use_closed = coeffs.is_concentric and method != "lstsq"
    if use_closed:
        dinv = 1.0 / np.diag(coeffs.dg)
        m = (2.0 / n) ** 2 * (dinv[:, None] * (coeffs.c.T @ msr.values @ coeffs.c) * dinv[None, :])
    else:
        q, r = qr(coeffs.a, mode="economic")
        rdiag = np.abs(np.diag(r))
        bad = rdiag < 1e-12 * rdiag.max()
        if bad.any():
            deficient = int(np.argmax(bad)) // 2 + 1
            raise IllPosedSystemError(
                f"coefficient matrix rank-deficient at order {deficient}", order=deficient
            )
        from scipy.linalg import solve_triangular

        # M = A^+ V (A^+)^t with A^+ = R^-1 Q^t
        qtvq = q.T @ msr.values @ q
        tmp = solve_triangular(r, qtvq, lower=False)
        m = solve_triangular(r, tmp.T, lower=False).T
    return RealCgptBlocks(order=order, m=0.5 * (m + m.T))


def max_truncation_order(sigma_noise: float, n_receivers: int, eps: float) -> int:
    """Largest safe expansion order for a given noise level and size ratio."""
    if not 0 < eps < 1:
        raise ValueError("size ratio must lie in (0, 1)")
    if sigma_noise <= 0:
        raise ValueError("noise level must be positive")
    bound = min(np.log(sigma_noise / n_receivers) / np.log(eps) - 2, n_receivers / 2)
    return max(1, int(np.floor(bound)))


def resolving_order(sigma_noise: float, tau0: float, eps: float, rounding: str = "floor") -> int:
    """Highest order recoverable within tolerance tau0 at this noise level.

    The continuous bound is rounded down and clamped to >= 1.  Rounding up
    instead ("ceil") reproduces the resolving orders annotated in the
    reference noise sweeps; the bound itself holds only up to constants, so
    both conventions are exposed.
    """
    if not 0 < eps < 1:
        raise ValueError("size ratio must lie in (0, 1)")
    if not 0 < tau0 <= 1:
        raise ValueError("tolerance must lie in (0, 1]")
    if sigma_noise <= 0:
        raise ValueError("noise level must be positive")
    m0 = (np.log(sigma_noise) - np.log(tau0)) / (2 * np.log(eps))
    rounded = np.ceil(m0) if rounding == "ceil" else np.floor(m0)
    return max(1, int(rounded))


def truncation_residual(msr: MsrMatrix, exact: RealCgptBlocks, order: int, reference=None) -> float:
    """Frobenius misfit between the response matrix and its order-K model."""
    if exact.order < order:
        raise ValueError("exact tensors must reach the requested order")
    coeffs = coefficient_matrices(msr.config, order, reference)
    mk = exact.m[: 2 * order, : 2 * order]
    return float(np.linalg.norm(msr.values - coeffs.a @ mk @ coeffs.a.T, "fro"))


def block_relative_errors(estimate: RealCgptBlocks, exact: RealCgptBlocks, orders=None) -> np.ndarray:
    """Relative Frobenius error of each diagonal 2x2 block."""
    if orders is None:
        orders = range(1, min(estimate.order, exact.order) + 1)
    out = []
    for m in orders:
        ref = exact.block(m, m)
        out.append(np.linalg.norm(estimate.block(m, m) - ref, "fro") / np.linalg.norm(ref, "fro"))
    return np.array(out)


def save_msr_csv(path, msr: MsrMatrix, metadata: dict | None = None) -> None:
    """Row-major CSV with '#'-prefixed provenance header lines."""
    meta = {
        "n_receivers": msr.config.n_receivers,
        "radius": msr.config.radius,
        "center": list(msr.config.center),
        "noise_sigma": msr.noise_sigma,
    }
    if metadata:
        meta.update(metadata)
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}={json.dumps(meta[key])}\n")
    for row in msr.values:
        buf.write(",".join(f"{v:.17e}" for v in row) + "\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_msr_csv(path):
    """Inverse of save_msr_csv; returns (MsrMatrix, metadata)."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = json.loads(value)
            else:
                rows.append([float(v) for v in line.split(",")])
    config = ArrayConfig(
        n_receivers=int(meta["n_receivers"]),
        radius=float(meta["radius"]),
        center=tuple(meta["center"]),
    )
    msr = MsrMatrix(values=np.array(rows), config=config, noise_sigma=float(meta.get("noise_sigma", 0.0)))
    return msr, meta
