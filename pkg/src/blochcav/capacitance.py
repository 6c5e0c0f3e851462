"""Exterior Dirichlet (electrostatic) solver on the cavity surface.

Single-layer ansatz with piecewise-constant density and centroid
collocation: solve S sigma = 1, where S[i, j] integrates 1/|c_i - y| over
triangle j.  The shape coefficient q = sum_j sigma_j area_j is the total
charge at unit surface potential; the far field behaves like q/|x|.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from . import _kernels
from .errors import NumericsError, ValidationError
from .geometry import SurfaceMesh

__all__ = [
    "CapacitanceSolution",
    "RichardsonResult",
    "assemble_single_layer",
    "solve_capacitance",
    "potential_at",
    "richardson_q",
]

#: Near-field switch: exact triangle integral when the target is closer to
#: the source centroid than this multiple of the source triangle diameter.
NEAR_FIELD_FACTOR = 2.0

#: Refuse first-kind systems beyond this 1-norm condition estimate.
MAX_CONDITION = 1e12

#: Loose a-priori bound on the collocation residual of the direct solve.
SOLVER_TOLERANCE = 1e-6

# interior 3-point Gauss rule, degree 2
_GAUSS_BARY = np.array([
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
])


@dataclass(frozen=True)
class CapacitanceSolution:
    """Result of the unit-potential solve on one mesh.

    density is the per-triangle charge density sigma; residual is the max
    collocation defect |potential - 1| of the computed density.
    """

    mesh: SurfaceMesh
    density: np.ndarray
    q: float
    residual: float
    condition_estimate: float
    solver_tolerance: float = SOLVER_TOLERANCE


@dataclass(frozen=True)
class RichardsonResult:
    """Extrapolated charge assuming q_h = q + C h^p across refinements."""

    value: float
    order: float
    levels: tuple[float, ...]
    warning: bool = False


def _triangle_pack(mesh: SurfaceMesh):
    t = mesh.triangles
    v0 = np.ascontiguousarray(mesh.vertices[t[:, 0]])
    v1 = np.ascontiguousarray(mesh.vertices[t[:, 1]])
    v2 = np.ascontiguousarray(mesh.vertices[t[:, 2]])
    corners = np.stack([v0, v1, v2], axis=1)
    gauss_pts = np.ascontiguousarray(np.einsum("gb,jbx->jgx", _GAUSS_BARY, corners))
    return (
        v0, v1, v2,
        np.ascontiguousarray(mesh.centroids),
        np.ascontiguousarray(mesh.areas),
        np.ascontiguousarray(mesh.diameters),
        gauss_pts,
    )


def _entries(targets: np.ndarray, pack, out=None) -> np.ndarray:
    v0, v1, v2, centroids, areas, diameters, gauss_pts = pack
    return _kernels.potential_entries(
        np.ascontiguousarray(targets, dtype=np.float64),
        v0, v1, v2, centroids, areas, diameters, gauss_pts,
        NEAR_FIELD_FACTOR, out,
    )


def assemble_single_layer(mesh: SurfaceMesh, threads: int = 1) -> np.ndarray:
    """Dense collocation matrix S[i, j] = int_{T_j} dS_y / |c_i - y|.

    Rows are independent; with threads > 1 they are assembled in parallel
    blocks (bit-identical to the serial result).
    """
    pack = _triangle_pack(mesh)
    n = mesh.n_triangles
    S = np.empty((n, n))
    if threads <= 1 or n < 64:
        _entries(mesh.centroids, pack, out=S)
        return S
    blocks = np.array_split(np.arange(n), threads * 4)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_entries, mesh.centroids[b], pack, S[b[0]:b[-1] + 1])
            for b in blocks if len(b)
        ]
        for f in futures:
            f.result()
    return S


def potential_at(mesh: SurfaceMesh, density: np.ndarray, points) -> np.ndarray:
    """Single-layer potential sum_j sigma_j int_{T_j} dS/|x - y| at points."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return _entries(pts, _triangle_pack(mesh)) @ np.asarray(density)


def solve_capacitance(mesh: SurfaceMesh, threads: int = 1) -> CapacitanceSolution:
    """Solve S sigma = 1 by dense LU and return the charge solution.

    The system is symmetrically diagonal-scaled before factorization
    (standard mitigation of first-kind conditioning); a 1-norm condition
    estimate above MAX_CONDITION raises NumericsError.
    """
    S = assemble_single_layer(mesh, threads=threads)
    d = 1.0 / np.sqrt(np.diag(S))
    if not np.all(np.isfinite(d)):
        raise NumericsError("degenerate BEM system: nonpositive diagonal")
    scaled = S * d[:, None] * d[None, :]
    anorm = np.abs(scaled).sum(axis=0).max()
    lu, piv, info = lapack.dgetrf(scaled, overwrite_a=True)
    if info != 0:
        raise NumericsError("degenerate BEM system: singular factorization")
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond <= 0.0 or 1.0 / rcond > MAX_CONDITION:
        raise NumericsError("degenerate BEM system: condition estimate too large")
    rhs = d.copy()  # scaled all-ones right-hand side
    y, info = lapack.dgetrs(lu, piv, rhs)
    if info != 0:
        raise NumericsError("degenerate BEM system: solve failed")
    sigma = d * y
    q = float(sigma @ mesh.areas)
    if not q > 0.0:
        raise NumericsError("degenerate BEM system: nonpositive total charge")
    residual = float(np.abs(S @ sigma - 1.0).max())
    return CapacitanceSolution(
        mesh=mesh,
        density=sigma,
        q=q,
        residual=residual,
        condition_estimate=float(1.0 / rcond),
    )


def richardson_q(meshes, threads: int = 1) -> RichardsonResult:
    """Extrapolate q across >= 3 refinements of one shape.

    Uses the last three levels with q_h = q + C h^p, h from the triangle
    count.  A non-monotone difference sequence falls back to the
    finest-level q with the warning flag set.
    """
    meshes = list(meshes)
    if len(meshes) < 3:
        raise ValidationError("richardson_q needs at least 3 refinement levels")
    qs = tuple(solve_capacitance(m, threads=threads).q for m in meshes)
    q1, q2, q3 = qs[-3:]
    h = [1.0 / np.sqrt(m.n_triangles) for m in meshes[-3:]]
    d1, d2 = q1 - q2, q2 - q3
    if d2 == 0.0 and d1 == 0.0:
        # repeated identical meshes: nothing to extrapolate
        return RichardsonResult(value=q3, order=float("nan"), levels=qs, warning=False)
    if d1 * d2 <= 0.0:
        return RichardsonResult(value=q3, order=float("nan"), levels=qs, warning=True)
    r = h[1] / h[2]
    p = float(np.log(d1 / d2) / np.log(h[0] / h[1]))
    value = q3 - d2 / (r ** p - 1.0)
    return RichardsonResult(value=float(value), order=p, levels=qs, warning=False)
