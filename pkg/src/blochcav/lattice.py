"""Direct/reciprocal lattice arithmetic and degenerate-wave-vector detection.

A Bloch vector k is *exceptional of order n* when exactly n reciprocal
lattice points m (counting m = 0) satisfy |k| = |k - m|, i.e. k lies on
n - 1 Bragg planes 2 k.m = |m|^2.  Plane-wave solutions at such k are
n-fold degenerate, which is what makes the perturbed medium split them
into wave clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "Lattice",
    "ReciprocalPoint",
    "ExceptionalSet",
    "make_lattice",
    "enumerate_exceptional",
    "distance_to_exceptional",
    "DEFAULT_EXCEPTIONAL_TOL",
]

TWO_PI = 2.0 * np.pi

#: Relative tolerance on the squared Bragg condition |2 k.m - |m|^2|.
#: Well above double-precision noise, far below physical k spacing.
DEFAULT_EXCEPTIONAL_TOL = 1e-9

_DEGENERATE_REL = 1e-14


def _vec3(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise ValidationError(f"{name} must be a 3-vector")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} must be finite")
    return v


@dataclass(frozen=True)
class Lattice:
    """Direct basis ell_i, reciprocal basis b_j with ell_i . b_j = 2 pi delta_ij."""

    ell1: np.ndarray
    ell2: np.ndarray
    ell3: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    cell_volume: float

    @property
    def direct_matrix(self) -> np.ndarray:
        """3x3 matrix with the direct basis vectors as rows."""
        return np.array([self.ell1, self.ell2, self.ell3])

    @property
    def reciprocal_matrix(self) -> np.ndarray:
        """3x3 matrix with the reciprocal basis vectors as rows."""
        return np.array([self.b1, self.b2, self.b3])

    def reciprocal_vector(self, coeffs) -> np.ndarray:
        """Cartesian reciprocal point m1*b1 + m2*b2 + m3*b3."""
        m = np.asarray(coeffs, dtype=np.float64)
        return m[0] * self.b1 + m[1] * self.b2 + m[2] * self.b3

    def min_direct_length(self) -> float:
        return float(min(np.linalg.norm(self.ell1),
                         np.linalg.norm(self.ell2),
                         np.linalg.norm(self.ell3)))


@dataclass(frozen=True)
class ReciprocalPoint:
    """Integer-coefficient reciprocal lattice point and its Cartesian vector."""

    coeffs: tuple[int, int, int]
    vec: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))


@dataclass(frozen=True)
class ExceptionalSet:
    """All reciprocal points m with |k| = |k - m| (within tolerance).

    points[0] is always the zero point; order == len(points).  Order 1
    means k is non-degenerate (non-exceptional).
    """

    k: np.ndarray
    order: int
    points: tuple[ReciprocalPoint, ...]
    tolerance: float

    def __post_init__(self):
        if self.order != len(self.points):
            raise ValidationError("order must equal the number of points")
        if self.points[0].coeffs != (0, 0, 0):
            raise ValidationError("points[0] must be the zero lattice point")

    @property
    def is_exceptional(self) -> bool:
        return self.order > 1

    def wave_directions(self) -> np.ndarray:
        """(n, 3) array of the cluster propagation vectors k - m_s."""
        return np.array([self.k - p.vec for p in self.points])


def make_lattice(ell1, ell2, ell3) -> Lattice:
    """Build a lattice from three direct basis vectors.

    The reciprocal basis solves ell_i . b_j = 2 pi delta_ij, i.e. the rows
    of B = 2 pi inv(L)^T where L has the ell_i as rows.

    Raises
    ------
    ValidationError
        If the basis is degenerate (|det| below 1e-14 * prod |ell_i|).
    """
    e1 = _vec3(ell1, "ell1")
    e2 = _vec3(ell2, "ell2")
    e3 = _vec3(ell3, "ell3")
    L = np.array([e1, e2, e3])
    det = float(np.linalg.det(L))
    scale = np.linalg.norm(e1) * np.linalg.norm(e2) * np.linalg.norm(e3)
    if scale == 0.0 or abs(det) < _DEGENERATE_REL * scale:
        raise ValidationError("degenerate lattice")
    B = TWO_PI * np.linalg.inv(L).T
    return Lattice(
        ell1=e1, ell2=e2, ell3=e3,
        b1=B[0], b2=B[1], b3=B[2],
        cell_volume=abs(det),
    )


def _coefficient_box(lattice: Lattice, radius: float) -> tuple[int, int, int]:
    """Per-axis integer bounds M_i so that |m| <= radius implies |m_i| <= M_i.

    From m_i = (v . ell_i) / (2 pi) for v = sum m_j b_j, so
    |m_i| <= radius * |ell_i| / (2 pi).
    """
    ells = (lattice.ell1, lattice.ell2, lattice.ell3)
    return tuple(int(np.floor(radius * np.linalg.norm(e) / TWO_PI + 1e-12)) for e in ells)


def _points_in_ball(lattice: Lattice, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer coeffs (N,3) and Cartesian vectors (N,3) of all reciprocal
    points with |m| <= radius, zero point included."""
    M1, M2, M3 = _coefficient_box(lattice, radius)
    g1 = np.arange(-M1, M1 + 1)
    g2 = np.arange(-M2, M2 + 1)
    g3 = np.arange(-M3, M3 + 1)
    coeffs = np.array(np.meshgrid(g1, g2, g3, indexing="ij")).reshape(3, -1).T
    vecs = coeffs @ lattice.reciprocal_matrix
    keep = np.einsum("ij,ij->i", vecs, vecs) <= radius * radius * (1 + 1e-12)
    return coeffs[keep], vecs[keep]


def enumerate_exceptional(lattice: Lattice, k, tol: float = DEFAULT_EXCEPTIONAL_TOL) -> ExceptionalSet:
    """Find every reciprocal point m with |2 k.m - |m|^2| <= tol * (1 + |m|^2).

    The scan is provably complete: an exact solution satisfies |m| <= 2|k|,
    and the tolerance inflates this to
    |m| <= (|k| + sqrt(|k|^2 + tol(1 - tol))) / (1 - tol).
    The zero point is always included and listed first; the remaining points
    are sorted lexicographically by integer coefficients.
    """
    kv = _vec3(k, "k")
    if not tol > 0.0:
        raise ValidationError("tol must be positive")
    knorm = float(np.linalg.norm(kv))
    radius = (knorm + np.sqrt(knorm * knorm + tol * (1.0 - tol))) / (1.0 - tol)
    coeffs, vecs = _points_in_ball(lattice, radius)

    m2 = np.einsum("ij,ij->i", vecs, vecs)
    resid = np.abs(2.0 * vecs @ kv - m2)
    hit = resid <= tol * (1.0 + m2)
    hit_coeffs = coeffs[hit]
    hit_vecs = vecs[hit]

    nonzero = np.any(hit_coeffs != 0, axis=1)
    order_idx = np.lexsort(hit_coeffs[nonzero][:, ::-1].T) if np.any(nonzero) else []
    points = [ReciprocalPoint((0, 0, 0), np.zeros(3))]
    nz_coeffs = hit_coeffs[nonzero]
    nz_vecs = hit_vecs[nonzero]
    for i in order_idx:
        points.append(ReciprocalPoint(tuple(int(c) for c in nz_coeffs[i]), nz_vecs[i]))
    return ExceptionalSet(k=kv, order=len(points), points=tuple(points), tolerance=tol)


def distance_to_exceptional(lattice: Lattice, k, search_radius: float) -> float:
    """Distance from k to the nearest Bragg plane 2 k.m = |m|^2 over
    0 < |m| <= search_radius.

    Each plane has unit normal m/|m| and offset |m|/2 from the origin, so
    the distance is |k . m/|m| - |m|/2|.  Used to warn when the smooth
    (non-degenerate) dispersion formula is applied too close to a plane.
    """
    kv = _vec3(k, "k")
    if not search_radius > 0.0:
        raise ValidationError("search_radius must be positive")
    coeffs, vecs = _points_in_ball(lattice, search_radius)
    nonzero = np.any(coeffs != 0, axis=1)
    if not np.any(nonzero):
        raise ValidationError("empty search: no reciprocal points within radius")
    vecs = vecs[nonzero]
    norms = np.linalg.norm(vecs, axis=1)
    dists = np.abs(vecs @ kv / norms - norms / 2.0)
    return float(dists.min())
