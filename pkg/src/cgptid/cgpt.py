"""Generalized polarization tensors and their contracted (complex) form.

The tensor of a conductivity inclusion D with contrast lambda is

    M[alpha, beta] = \\int_{dD} y^beta (lambda*I - K*)^{-1}[d(y^alpha)/dnu] ds(y)

over multi-indices alpha, beta.  Contracting against the harmonic polynomials
P_m(x) = (x1 + i*x2)^m packs each pair of orders (m, n) into four real numbers,
or equivalently two complex ones:

    N1[m, n] = \\int P_n (lambda*I - K*)^{-1}[<nu, grad P_m>] ds
    N2[m, n] = \\int P_n (lambda*I - K*)^{-1}[<nu, grad conj(P_m)>] ds

N1 is symmetric, N2 Hermitian with positive diagonal for lambda > 0, and both
obey closed-form similarity-transform laws built from a lower-triangular
binomial matrix and a diagonal rotation-scaling matrix, which is what makes
them usable for dictionary matching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Boundary, SimilarityTransform
from .potential import NpSystem

#: parameter order used by transform_jacobian and the debiasing solver
TRANSFORM_PARAMS = ("z_re", "z_im", "s", "theta")


@dataclass(frozen=True)
class HarmonicCoeffs:
    """Monomial coefficients of Re (x1+i*x2)^m and Im (x1+i*x2)^m."""

    order: int
    a: dict
    b: dict


def harmonic_coeffs(m: int) -> HarmonicCoeffs:
    if m < 1:
        raise ValueError("order must be at least 1")
    a, b = {}, {}
    for k in range(m + 1):
        coeff = math.comb(m, k) * (1j**k)
        idx = (m - k, k)
        if coeff.real:
            a[idx] = coeff.real
        if coeff.imag:
            b[idx] = coeff.imag
    return HarmonicCoeffs(order=m, a=a, b=b)


@dataclass(frozen=True)
class CgptPair:
    """Complex contracted tensors up to a given order."""

    order: int
    n1: np.ndarray
    n2: np.ndarray
    contrast: float | None = None

    def __post_init__(self):
        n1 = np.asarray(self.n1, dtype=complex)
        n2 = np.asarray(self.n2, dtype=complex)
        if n1.shape != (self.order, self.order) or n2.shape != (self.order, self.order):
            raise ValueError("matrix shapes must match the declared order")
        object.__setattr__(self, "n1", n1)
        object.__setattr__(self, "n2", n2)
        n1.setflags(write=False)
        n2.setflags(write=False)

    def truncate(self, order: int) -> "CgptPair":
        if order > self.order:
            raise ValueError(f"cannot truncate order {self.order} to {order}")
        if order == self.order:
            return self
        return CgptPair(order, self.n1[:order, :order], self.n2[:order, :order], self.contrast)

    def norm(self) -> float:
        return float(np.sqrt(np.linalg.norm(self.n1, "fro") ** 2 + np.linalg.norm(self.n2, "fro") ** 2))


@dataclass(frozen=True)
class RealCgptBlocks:
    """Real 2K x 2K block matrix with 2x2 blocks per order pair (m, n)."""

    order: int
    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (2 * self.order, 2 * self.order):
            raise ValueError("block matrix must be 2K x 2K")
        object.__setattr__(self, "m", m)
        m.setflags(write=False)

    def block(self, m_ord: int, n_ord: int) -> np.ndarray:
        i, j = 2 * (m_ord - 1), 2 * (n_ord - 1)
        return self.m[i : i + 2, j : j + 2]


def to_real_blocks(pair: CgptPair) -> RealCgptBlocks:
    """Unpack (N1, N2) into the four real families cc, cs, sc, ss."""
    k = pair.order
    mcc = 0.5 * (pair.n1.real + pair.n2.real)
    mss = 0.5 * (pair.n2.real - pair.n1.real)
    mcs = 0.5 * (pair.n1.imag + pair.n2.imag)
    msc = 0.5 * (pair.n1.imag - pair.n2.imag)
    out = np.empty((2 * k, 2 * k))
    out[0::2, 0::2] = mcc
    out[0::2, 1::2] = mcs
    out[1::2, 0::2] = msc
    out[1::2, 1::2] = mss
    return RealCgptBlocks(order=k, m=out)


def from_real_blocks(blocks: RealCgptBlocks, contrast: float | None = None) -> CgptPair:
    mcc = blocks.m[0::2, 0::2]
    mcs = blocks.m[0::2, 1::2]
    msc = blocks.m[1::2, 0::2]
    mss = blocks.m[1::2, 1::2]
    n1 = (mcc - mss) + 1j * (mcs + msc)
    n2 = (mcc + mss) + 1j * (mcs - msc)
    return CgptPair(order=blocks.order, n1=n1, n2=n2, contrast=contrast)


def _normal_derivative_monomial(boundary: Boundary, alpha) -> np.ndarray:
    a1, a2 = alpha
    x1 = boundary.points[:, 0]
    x2 = boundary.points[:, 1]
    out = np.zeros(boundary.n_nodes)
    if a1 > 0:
        out += boundary.normals[:, 0] * a1 * x1 ** (a1 - 1) * x2**a2
    if a2 > 0:
        out += boundary.normals[:, 1] * a2 * x1**a1 * x2 ** (a2 - 1)
    return out


def compute_gpt(boundary: Boundary, contrast: float, alpha, beta) -> float:
    """Single polarization-tensor entry for multi-indices alpha, beta."""
    if sum(alpha) < 1 or sum(beta) < 1:
        raise ValueError("multi-index orders must be at least 1")
    system = NpSystem(boundary, contrast)
    phi = system.solve(_normal_derivative_monomial(boundary, alpha))
    integrand = boundary.points[:, 0] ** beta[0] * boundary.points[:, 1] ** beta[1]
    return float(np.sum(integrand * phi * boundary.weights))


def compute_cgpt(boundary: Boundary, contrast: float, order: int, system: NpSystem | None = None) -> CgptPair:
    """Contracted tensors up to `order` with a single factorization.

    The second family's densities are complex conjugates of the first family's
    (the resolvent has a real kernel), so only K complex solves are needed.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if system is None:
        system = NpSystem(boundary, contrast)
    p = boundary.points_c
    nu = boundary.normals_c
    ms = np.arange(1, order + 1)
    # rhs column m: <nu, grad P_m> = m * p^(m-1) * (nu1 + i*nu2)
    rhs = ms[None, :] * p[:, None] ** (ms - 1)[None, :] * nu[:, None]
    phi = system.solve(rhs)
    pn_w = p[:, None] ** ms[None, :] * boundary.weights[:, None]
    n1 = phi.T @ pn_w
    n2 = np.conj(phi).T @ pn_w
    return CgptPair(order=order, n1=n1, n2=n2, contrast=contrast)


def assemble_cgpt_from_gpts(boundary: Boundary, contrast: float, order: int) -> CgptPair:
    """Slow cross-check path: contract individual tensor entries directly."""
    coeffs = [harmonic_coeffs(m) for m in range(1, order + 1)]
    system = NpSystem(boundary, contrast)
    gpt = {}

    def entry(alpha, beta):
        key = (alpha, beta)
        if key not in gpt:
            phi = system.solve(_normal_derivative_monomial(boundary, alpha))
            integrand = boundary.points[:, 0] ** beta[0] * boundary.points[:, 1] ** beta[1]
            gpt[key] = float(np.sum(integrand * phi * boundary.weights))
        return gpt[key]

    n1 = np.zeros((order, order), dtype=complex)
    n2 = np.zeros((order, order), dtype=complex)
    for mi, cm in enumerate(coeffs):
        for ni, cn in enumerate(coeffs):
            mcc = sum(va * vb * entry(a, b) for a, va in cm.a.items() for b, vb in cn.a.items())
            mcs = sum(va * vb * entry(a, b) for a, va in cm.a.items() for b, vb in cn.b.items())
            msc = sum(va * vb * entry(a, b) for a, va in cm.b.items() for b, vb in cn.a.items())
            mss = sum(va * vb * entry(a, b) for a, va in cm.b.items() for b, vb in cn.b.items())
            n1[mi, ni] = (mcc - mss) + 1j * (mcs + msc)
            n2[mi, ni] = (mcc + mss) + 1j * (mcs - msc)
    return CgptPair(order=order, n1=n1, n2=n2, contrast=contrast)


def translation_matrix(z: complex, order: int) -> np.ndarray:
    """Lower-triangular binomial matrix with entries binom(m, n) * z^(m-n)."""
    out = np.zeros((order, order), dtype=complex)
    for m in range(1, order + 1):
        for n in range(1, m + 1):
            out[m - 1, n - 1] = math.comb(m, n) * z ** (m - n)
    return out


def _transform_factor(transform: SimilarityTransform, order: int) -> np.ndarray:
    """Matrix C^z G^w whose congruence action realizes the transform law."""
    ms = np.arange(1, order + 1)
    return translation_matrix(transform.z, order) * transform.w**ms[None, :]


def transform_cgpt(pair: CgptPair, transform: SimilarityTransform) -> CgptPair:
    """Tensors of the transformed domain, exact under truncation.

    N1 maps by A N1 A^t and N2 by conj(A) N2 A^t with A = C^z G^w; the
    triangular structure keeps finite-order truncations consistent.
    """
    a = _transform_factor(transform, pair.order)
    return CgptPair(
        order=pair.order,
        n1=a @ pair.n1 @ a.T,
        n2=np.conj(a) @ pair.n2 @ a.T,
        contrast=pair.contrast,
    )


def transform_jacobian(pair: CgptPair, transform: SimilarityTransform):
    """Partial derivatives of the transformed tensors.

    Returns (dn1, dn2), each of shape (4, K, K), with the leading axis indexing
    TRANSFORM_PARAMS = (z_re, z_im, s, theta).
    """
    k = pair.order
    ms = np.arange(1, k + 1)
    cz = translation_matrix(transform.z, k)
    dcz = np.zeros((k, k), dtype=complex)
    for m in range(1, k + 1):
        for n in range(1, m):
            dcz[m - 1, n - 1] = math.comb(m, n) * (m - n) * transform.z ** (m - n - 1)
    wpow = transform.w**ms
    a = cz * wpow[None, :]
    da = np.empty((4, k, k), dtype=complex)
    da[0] = dcz * wpow[None, :]
    da[1] = 1j * da[0]
    da[2] = a * (ms / transform.s)[None, :]
    da[3] = a * (1j * ms)[None, :]
    dn1 = np.empty((4, k, k), dtype=complex)
    dn2 = np.empty((4, k, k), dtype=complex)
    an1 = a @ pair.n1
    an2 = pair.n2 @ a.T
    for i in range(4):
        dn1[i] = da[i] @ pair.n1 @ a.T + an1 @ da[i].T
        dn2[i] = np.conj(da[i]) @ an2 + np.conj(a) @ pair.n2 @ da[i].T
    return dn1, dn2
