"""Transform estimation, invariant shape descriptors, and dictionary matching.

Two identification routes are provided.  The first estimates the similarity
transform between the measured tensors and each dictionary candidate (scale
from the order-(1,1) Hermitian entry, translation and rotation from low-order
entries, then a Gauss-Newton refinement), back-transforms the measurement and
ranks candidates by relative Frobenius misfit.  The second compares
translation/rotation/scale-invariant descriptor matrices directly, with no
transform estimation at all; it is cheaper but noticeably less robust to
measurement noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cgpt import CgptPair, transform_cgpt, transform_jacobian, translation_matrix
from .errors import (
    ContrastError,
    DegenerateCandidateError,
    DegenerateNormalizationError,
    NoSymmetryDetectedError,
)
from .geometry import SimilarityTransform

#: relative determinant threshold below which the direct linear estimator is
#: considered degenerate and the symmetric-path estimators are used instead
COND_DET_THRESHOLD = 1e-6


@dataclass(frozen=True)
class DescriptorPair:
    """Nonnegative invariant matrices; the second has unit diagonal."""

    order: int
    i1: np.ndarray
    i2: np.ndarray

    def __post_init__(self):
        i1 = np.asarray(self.i1, dtype=float)
        i2 = np.asarray(self.i2, dtype=float)
        if i1.shape != (self.order, self.order) or i2.shape != (self.order, self.order):
            raise ValueError("descriptor shapes must match the declared order")
        object.__setattr__(self, "i1", i1)
        object.__setattr__(self, "i2", i2)
        i1.setflags(write=False)
        i2.setflags(write=False)

    def truncate(self, order: int) -> "DescriptorPair":
        if order > self.order:
            raise ValueError(f"cannot truncate order {self.order} to {order}")
        return DescriptorPair(order, self.i1[:order, :order], self.i2[:order, :order])


@dataclass(frozen=True)
class DictionaryEntry:
    name: str
    pair: CgptPair
    symmetry_order: int = 1  # 1 means no rotational symmetry
    descriptors: DescriptorPair | None = None
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Dictionary:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValueError("dictionary must contain at least one entry")
        low = [e.name for e in self.entries if e.pair.order < 2]
        if low:
            raise ValueError(f"dictionary tensors need order >= 2, got less for {low}")

    @property
    def order(self) -> int:
        return min(e.pair.order for e in self.entries)

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def save(self, path) -> None:
        payload = {
            "format": "cgpt-dictionary",
            "version": 1,
            "entries": [
                {
                    "name": e.name,
                    "symmetry_order": e.symmetry_order,
                    "order": e.pair.order,
                    "contrast": e.pair.contrast,
                    "n1_re": e.pair.n1.real.tolist(),
                    "n1_im": e.pair.n1.imag.tolist(),
                    "n2_re": e.pair.n2.real.tolist(),
                    "n2_im": e.pair.n2.imag.tolist(),
                    "i1": e.descriptors.i1.tolist() if e.descriptors else None,
                    "i2": e.descriptors.i2.tolist() if e.descriptors else None,
                    "provenance": e.provenance,
                }
                for e in self.entries
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "Dictionary":
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("format") != "cgpt-dictionary":
            raise ValueError("not a dictionary file")
        entries = []
        for raw in payload["entries"]:
            pair = CgptPair(
                order=raw["order"],
                n1=np.array(raw["n1_re"]) + 1j * np.array(raw["n1_im"]),
                n2=np.array(raw["n2_re"]) + 1j * np.array(raw["n2_im"]),
                contrast=raw.get("contrast"),
            )
            desc = None
            if raw.get("i1") is not None:
                desc = DescriptorPair(order=raw["order"], i1=np.array(raw["i1"]), i2=np.array(raw["i2"]))
            entries.append(
                DictionaryEntry(
                    name=raw["name"],
                    pair=pair,
                    symmetry_order=raw.get("symmetry_order", 1),
                    descriptors=desc,
                    provenance=raw.get("provenance", {}),
                )
            )
        return cls(entries=tuple(entries))


@dataclass(frozen=True)
class MatchReport:
    """Candidates ranked by ascending error; winner is the first."""

    ranking: tuple  # tuple of (name, error)
    transforms: dict | None = None  # name -> SimilarityTransform, first route only

    @property
    def winner(self) -> str:
        return self.ranking[0][0]

    @property
    def errors(self) -> dict:
        return dict(self.ranking)


def estimate_scale(query: CgptPair, candidate: CgptPair) -> float:
    ratio = query.n2[0, 0].real / candidate.n2[0, 0].real
    if not ratio > 0:
        raise ContrastError("order-(1,1) Hermitian entries have inconsistent signs")
    return math.sqrt(ratio)


def estimate_translation_symmetric(query: CgptPair) -> complex:
    return complex(query.n2[0, 1] / (2 * query.n2[0, 0]))


def _pair_misfit(a: CgptPair, b: CgptPair) -> float:
    return float(
        np.linalg.norm(a.n1 - b.n1, "fro") ** 2 + np.linalg.norm(a.n2 - b.n2, "fro") ** 2
    )


def _golden_section(fun, lo, hi, steps=20):
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(steps):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (a + b) / 2


def estimate_rotation_symmetric(
    query: CgptPair, candidate: CgptPair, p: int, s: float, z: complex, grid: int = 128
) -> float:
    """Rotation of a p-fold symmetric candidate, determined modulo 2*pi/p.

    Minimizes the misfit of the transformed candidate against the query on
    ceil(p/2)-truncated matrices, by a global grid scan refined with a
    golden-section search.
    """
    order = max(2, math.ceil(p / 2)) if p >= 2 else 2
    order = min(order, query.order, candidate.order)
    q = query.truncate(order)
    c = candidate.truncate(order)
    period = 2 * np.pi / p if p >= 2 else 2 * np.pi

    def objective(theta):
        t = SimilarityTransform(z=z, s=s, theta=theta)
        return _pair_misfit(transform_cgpt(c, t), q)

    thetas = period * np.arange(grid) / grid
    values = [objective(th) for th in thetas]
    best = int(np.argmin(values))
    span = period / grid
    refined = _golden_section(objective, thetas[best] - span, thetas[best] + span)
    return float(refined % period)


def estimate_transform_nonsymmetric(query: CgptPair, candidate: CgptPair):
    """Translation and rotation from the order (1,1)/(1,2) linear system.

    Requires the candidate's first entries to be well conditioned; otherwise a
    DegenerateCandidateError is raised and the caller should fall back to the
    symmetric-path estimators.
    """
    n1b, n2b = candidate.n1, candidate.n2
    n1d, n2d = query.n1, query.n2
    scale_ref = abs(n1b[0, 0]) + abs(n2b[0, 0])
    if abs(n1b[0, 0]) < 1e-9 * scale_ref or abs(n1d[0, 0]) < 1e-9 * (abs(n1d[0, 0]) + abs(n2d[0, 0])):
        raise DegenerateCandidateError("vanishing first-order entry")
    lhs = np.array([[2.0, n1b[0, 1] / n1b[0, 0]], [2.0, n2b[0, 1] / n2b[0, 0]]], dtype=complex)
    rhs = np.array([n1d[0, 1] / n1d[0, 0], n2d[0, 1] / n2d[0, 0]], dtype=complex)
    det = lhs[0, 0] * lhs[1, 1] - lhs[0, 1] * lhs[1, 0]
    row_norms = np.linalg.norm(lhs, axis=1)
    if abs(det) <= COND_DET_THRESHOLD * row_norms[0] * row_norms[1]:
        raise DegenerateCandidateError("transform system is numerically singular")
    z, w = np.linalg.solve(lhs, rhs)
    return complex(z), float(np.angle(w) % (2 * np.pi))


@dataclass(frozen=True)
class DebiasResult:
    transform: SimilarityTransform
    objective: float
    converged: bool
    n_iter: int


def debias(
    query: CgptPair,
    candidate: CgptPair,
    initial: SimilarityTransform,
    order: int,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> DebiasResult:
    """Gauss-Newton refinement of the transform parameters.

    Minimizes the squared Frobenius misfit between the transformed candidate
    and the query at the given truncation order, with analytic Jacobians and a
    halving line search; the objective never increases across accepted steps.
    """
    order = min(order, query.order, candidate.order)
    q = query.truncate(order)
    c = candidate.truncate(order)

    def residual(params):
        z = params[0] + 1j * params[1]
        t = SimilarityTransform(z=z, s=params[2], theta=params[3])
        out = transform_cgpt(c, t)
        r1 = (out.n1 - q.n1).ravel()
        r2 = (out.n2 - q.n2).ravel()
        return np.concatenate([r1.real, r1.imag, r2.real, r2.imag]), t

    params = np.array([initial.z.real, initial.z.imag, initial.s, initial.theta])
    r, _ = residual(params)
    obj = float(r @ r)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z = params[0] + 1j * params[1]
        t = SimilarityTransform(z=z, s=params[2], theta=params[3])
        dn1, dn2 = transform_jacobian(c, t)
        jac = np.empty((len(r), 4))
        for i in range(4):
            j1 = dn1[i].ravel()
            j2 = dn2[i].ravel()
            jac[:, i] = np.concatenate([j1.real, j1.imag, j2.real, j2.imag])
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        alpha = 1.0
        accepted = False
        for _ in range(20):
            trial = params + alpha * step
            if trial[2] > 0:
                r_trial, _ = residual(trial)
                obj_trial = float(r_trial @ r_trial)
                if obj_trial < obj:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
        moved = np.linalg.norm(alpha * step) / max(np.linalg.norm(params), 1e-30)
        params, r, obj = trial, r_trial, obj_trial
        if moved < tol:
            converged = True
            break
    final = SimilarityTransform(z=params[0] + 1j * params[1], s=params[2], theta=params[3])
    return DebiasResult(transform=final, objective=obj, converged=converged, n_iter=it)


def debias_order(symmetry_order: int) -> int:
    """Truncation order for the refinement stage."""
    if symmetry_order >= 2:
        return max(2, math.ceil(symmetry_order / 2))
    return 2


def estimate_transform(query: CgptPair, entry: DictionaryEntry, refine: bool = True) -> SimilarityTransform:
    """Full transform estimation pipeline against one dictionary entry."""
    candidate = entry.pair
    s = estimate_scale(query, candidate)
    p = entry.symmetry_order
    if p >= 2:
        z = estimate_translation_symmetric(query)
        theta = estimate_rotation_symmetric(query, candidate, p, s, z)
    else:
        try:
            z, theta = estimate_transform_nonsymmetric(query, candidate)
        except DegenerateCandidateError:
            # near-symmetric candidate: symmetric-path estimators with a full
            # rotation scan at order 2
            z = estimate_translation_symmetric(query)
            theta = estimate_rotation_symmetric(query, candidate, 1, s, z)
    initial = SimilarityTransform(z=z, s=s, theta=theta)
    if not refine:
        return initial
    result = debias(query, candidate, initial, debias_order(p))
    return result.transform


def algorithm1_match(query: CgptPair, dictionary: Dictionary, order: int) -> MatchReport:
    """Identification by transform estimation and tensor comparison.

    For each candidate the similarity transform is estimated and refined, the
    query is mapped back by the inverse transform, and the candidate is scored
    by the relative Frobenius misfit of both matrices truncated to `order`.
    Transform estimation always uses second-order entries, so the query must
    carry order >= 2 even when scoring at order 1.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    if query.order < 2:
        raise ValueError("transform estimation needs query tensors of order >= 2")
    scores = []
    transforms = {}
    for entry in dictionary:
        k = min(order, entry.pair.order, query.order)
        transform = estimate_transform(query, entry)
        back = transform_cgpt(query.truncate(k), transform.inverse())
        cand = entry.pair.truncate(k)
        err = math.sqrt(_pair_misfit(back, cand)) / cand.norm()
        scores.append((entry.name, err))
        transforms[entry.name] = transform
    ranking = tuple(sorted(scores, key=lambda item: item[1]))
    return MatchReport(ranking=ranking, transforms=transforms)


def shape_descriptors(pair: CgptPair) -> DescriptorPair:
    """Translation-, rotation-, and scale-invariant nonnegative matrices.

    Recenters by u = N2[1,2] / (2 N2[1,1]), normalizes by the recentered
    Hermitian diagonal, and takes entrywise moduli.
    """
    if abs(pair.n2[0, 0]) == 0:
        raise DegenerateNormalizationError("vanishing order-(1,1) Hermitian entry")
    u = pair.n2[0, 1] / (2 * pair.n2[0, 0])
    cu = translation_matrix(-u, pair.order)
    j1 = cu @ pair.n1 @ cu.T
    j2 = np.conj(cu) @ pair.n2 @ cu.T
    # the recentered matrices inherit symmetry/Hermitian structure exactly;
    # restore it against rounding so the descriptors satisfy it exactly too
    j1 = 0.5 * (j1 + j1.T)
    j2 = 0.5 * (j2 + j2.conj().T)
    diag = j2.diagonal().real
    if np.any(np.abs(diag) < 1e-300):
        raise DegenerateNormalizationError("vanishing recentered diagonal entry")
    norm = np.sqrt(np.outer(diag, diag).astype(complex))
    i1 = np.abs(j1 / norm)
    i2 = np.abs(j2 / norm)
    # identically 1 by construction; avoid ulp-level drift from sqrt rounding
    np.fill_diagonal(i2, 1.0)
    return DescriptorPair(order=pair.order, i1=i1, i2=i2)


def algorithm2_match(query_desc: DescriptorPair, dictionary: Dictionary, order: int) -> MatchReport:
    """Identification by direct descriptor comparison (no transform estimation)."""
    if order < 1:
        raise ValueError("order must be at least 1")
    scores = []
    for entry in dictionary:
        if entry.descriptors is None:
            raise ValueError(f"dictionary entry {entry.name!r} carries no descriptors")
        k = min(order, entry.descriptors.order, query_desc.order)
        cand = entry.descriptors.truncate(k)
        q = query_desc.truncate(k)
        err = math.sqrt(
            np.linalg.norm(cand.i1 - q.i1, "fro") ** 2 + np.linalg.norm(cand.i2 - q.i2, "fro") ** 2
        )
        scores.append((entry.name, err))
    ranking = tuple(sorted(scores, key=lambda item: item[1]))
    return MatchReport(ranking=ranking, transforms=None)


def anti_diagonal_means(desc: DescriptorPair, p_max: int) -> np.ndarray:
    """Mean of |I1| over each anti-diagonal m+n = l for l = 2 .. p_max."""
    if desc.order < p_max - 1:
        raise ValueError(f"descriptors must reach order {p_max - 1}")
    out = np.zeros(p_max - 1)
    for l in range(2, p_max + 1):
        vals = [
            desc.i1[m - 1, n - 1]
            for m in range(1, desc.order + 1)
            for n in range(1, desc.order + 1)
            if m + n == l
        ]
        out[l - 2] = float(np.mean(vals))
    return out


def _theil_sen_line(values: np.ndarray) -> np.ndarray:
    """Robust straight-line fit (median of pairwise slopes, median intercept)."""
    n = len(values)
    idx = np.arange(n)
    slopes = [
        (values[j] - values[i]) / (j - i) for i in range(n) for j in range(i + 1, n)
    ]
    slope = float(np.median(slopes))
    intercept = float(np.median(values - slope * idx))
    return intercept + slope * idx


def petal_count(query_desc: DescriptorPair, p_max: int, threshold_factor: float = 2.0) -> int:
    """Rotational-symmetry order from the anti-diagonal signature of I1.

    Reconstruction noise on the anti-diagonal means grows geometrically with
    l, so raw magnitudes cannot be compared across orders.  A robust line is
    fitted to the log-means (Theil-Sen, insensitive to the symmetry spike
    itself); anti-diagonals standing more than threshold_factor above that
    baseline count as nonzero, and the most prominent one wins (smallest l on
    ties).
    """
    means = anti_diagonal_means(query_desc, p_max)
    log_means = np.log10(np.maximum(means, 1e-300))
    residual = log_means - _theil_sen_line(log_means)
    # descriptors are unit-normalized, so anything below 1e-8 is rounding noise
    above = (residual > np.log10(threshold_factor)) & (means > 1e-8)
    if not above.any():
        raise NoSymmetryDetectedError("no anti-diagonal stands above the noise baseline")
    candidates = np.flatnonzero(above)
    best = candidates[np.argmax(residual[candidates])]
    return int(best + 2)
