"""Layer potentials on a sampled boundary.

The boundary operator discretized here is the adjoint double-layer
(Neumann-Poincare) operator

    K*[phi](x) = (1/2pi) \\int <x - y, nu_x> / |x - y|^2 phi(y) ds(y),

whose kernel is smooth on a C^2 curve with the diagonal limit
curvature(x)/(4*pi).  Nystrom collocation with the periodic trapezoid rule is
therefore spectrally accurate.  The transmission problem for a conductivity
inclusion reduces to solving (lambda*I - K*) against normal-derivative data,
with lambda = (kappa+1) / (2*(kappa-1)); |lambda| > 1/2 guarantees
invertibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import ContrastError, DegenerateGeometryError, NearBoundaryError, NumericalFailureError
from .geometry import Boundary

ZERO_MEAN_TOL = 1e-10


def contrast_from_conductivity(kappa: float) -> float:
    if kappa <= 0 or kappa == 1:
        raise ValueError("conductivity must be positive and different from 1")
    return (kappa + 1) / (2 * (kappa - 1))


@dataclass(frozen=True)
class Density:
    """Real- or complex-valued density on the boundary nodes."""

    values: np.ndarray
    zero_mean: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values))
        self.values.setflags(write=False)


def np_operator_matrix(boundary: Boundary) -> np.ndarray:
    """Nystrom matrix of K* (quadrature weights folded into the columns)."""
    pts = boundary.points
    n = boundary.n_nodes
    diff = pts[:, None, :] - pts[None, :, :]
    r2 = (diff**2).sum(-1)
    off = ~np.eye(n, dtype=bool)
    if r2[off].min() <= 0:
        raise DegenerateGeometryError("coincident boundary nodes")
    num = (diff * boundary.normals[:, None, :]).sum(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = num / (2 * np.pi * r2)
    kernel[np.arange(n), np.arange(n)] = boundary.curvature / (4 * np.pi)
    return kernel * boundary.weights[None, :]


class NpSystem:
    """Factorized resolvent (lambda*I - K*) on a fixed boundary.

    Immutable after construction; concurrent solves with distinct right-hand
    sides are safe.
    """

    def __init__(self, boundary: Boundary, contrast: float):
        if abs(contrast) <= 0.5:
            raise ContrastError(f"|contrast| must exceed 1/2, got {contrast}")
        self.boundary = boundary
        self.contrast = float(contrast)
        self.kernel_matrix = np_operator_matrix(boundary)
        system = self.contrast * np.eye(boundary.n_nodes) - self.kernel_matrix
        try:
            self.factorization = lu_factor(system)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise NumericalFailureError(f"singular factorization: {exc}") from exc

    @classmethod
    def from_conductivity(cls, boundary: Boundary, kappa: float) -> "NpSystem":
        return cls(boundary, contrast_from_conductivity(kappa))

    def dump_kernel(self, path) -> None:
        """Diagnostic dump of the discretized operator to a binary matrix file."""
        np.save(path, self.kernel_matrix)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve (lambda*I - K*) phi = rhs for one or many columns."""
        rhs = np.asarray(rhs)
        if np.iscomplexobj(rhs):
            stacked = np.concatenate([rhs.real, rhs.imag], axis=-1 if rhs.ndim > 1 else 0)
            if rhs.ndim == 1:
                sol = lu_solve(self.factorization, stacked.reshape(len(rhs), 2, order="F"))
                return sol[:, 0] + 1j * sol[:, 1]
            sol = lu_solve(self.factorization, stacked)
            k = rhs.shape[1]
            return sol[:, :k] + 1j * sol[:, k:]
        return lu_solve(self.factorization, rhs)


def solve_density(system: NpSystem, rhs: Density) -> Density:
    """Solve the transmission density equation for a zero-mean right-hand side."""
    weights = system.boundary.weights
    values = rhs.values
    scale = np.abs(values).max()
    if scale > 0:
        mean = np.abs(np.sum(values * weights))
        if mean > 1e-8 * scale * weights.sum():
            raise ValueError("right-hand side does not have zero mean")
    phi = system.solve(values)
    residual = system.contrast * phi - system.kernel_matrix @ phi - values
    if scale > 0 and np.abs(residual).max() > 1e-12 * max(scale, np.abs(phi).max()) * len(phi):
        raise NumericalFailureError("density solve residual above tolerance")
    return Density(values=phi, zero_mean=True)


def single_layer_eval(boundary: Boundary, phi, x) -> float:
    """Single-layer potential of the density at an exterior point.

    Plain quadrature is accurate only away from the boundary; points within one
    node spacing are rejected.
    """
    values = phi.values if isinstance(phi, Density) else np.asarray(phi)
    x = np.asarray(x, dtype=float)
    dist = np.sqrt(((boundary.points - x[None, :]) ** 2).sum(-1))
    if dist.min() <= boundary.weights.max():
        raise NearBoundaryError("evaluation point within one node spacing of the boundary")
    kernel = np.log(dist) / (2 * np.pi)
    result = np.sum(kernel * values * boundary.weights)
    return complex(result) if np.iscomplexobj(values) else float(result)


def grad_fundamental(x, source) -> np.ndarray:
    """Gradient of the 2-D Laplace fundamental solution log|x - source|/(2*pi)."""
    d = np.asarray(x, dtype=float) - np.asarray(source, dtype=float)
    r2 = float((d**2).sum())
    if r2 == 0:
        raise ValueError("gradient undefined at the source point")
    return d / (2 * np.pi * r2)
