"""NumPy implementations of the hot kernels.

Same contracts as the compiled module `_fast`; selected at import time by
the package `__init__` when the extension is unavailable (or forced via
BLOCHCAV_PURE_PYTHON=1).
"""

from __future__ import annotations

import numpy as np
from scipy.special import wofz

__all__ = ["potential_entries", "ewald_sums", "BACKEND_NAME"]

BACKEND_NAME = "pure"

_TARGET_CHUNK = 256
_EDGE_EPS = 1e-14


def _analytic_triangle_potential(targets: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Exact integral of 1/|t - y| over flat triangles, one per target.

    targets : (P, 3); corners : (P, 3, 3) matching triangle vertices.
    Edge-wise closed form: with d the signed height of t over the triangle
    plane, rho its in-plane projection, and per edge the in-plane outward
    normal m = l_hat x n_hat,

        I = sum_edges  P0 * log((R2 + l2)/(R1 + l1))
                     - |d| * [atan(P0 l2 / (R0^2 + |d| R2))
                              - atan(P0 l1 / (R0^2 + |d| R1))]

    where P0 = (a - rho).m, l_i are edge-parallel projections, R_i vertex
    distances and R0^2 = P0^2 + d^2.  Edges collinear with the target
    (R0 ~ 0) contribute zero in the limit and are skipped.
    """
    p0, p1, p2 = corners[:, 0], corners[:, 1], corners[:, 2]
    nvec = np.cross(p1 - p0, p2 - p0)
    nvec = nvec / np.linalg.norm(nvec, axis=1)[:, None]
    d = np.einsum("ij,ij->i", targets - p0, nvec)
    rho = targets - d[:, None] * nvec
    absd = np.abs(d)
    scale2 = np.einsum("ij,ij->i", p1 - p0, p1 - p0)

    total = np.zeros(len(targets))
    for a, b in ((p0, p1), (p1, p2), (p2, p0)):
        edge = b - a
        elen = np.linalg.norm(edge, axis=1)
        lhat = edge / elen[:, None]
        mhat = np.cross(lhat, nvec)
        P0 = np.einsum("ij,ij->i", a - rho, mhat)
        l1 = np.einsum("ij,ij->i", a - rho, lhat)
        l2 = np.einsum("ij,ij->i", b - rho, lhat)
        R1 = np.linalg.norm(targets - a, axis=1)
        R2 = np.linalg.norm(targets - b, axis=1)
        R0sq = P0 * P0 + d * d

        # log((R2+l2)/(R1+l1)) via the cancellation-free branch when the
        # edge-parallel projections are mostly negative; R0sq > 0 guarantees
        # both numerator and denominator are strictly positive
        pos = (l1 + l2) > 0.0
        safe = R0sq > _EDGE_EPS * _EDGE_EPS * scale2
        num = np.where(safe, np.where(pos, R2 + l2, R1 - l1), 1.0)
        den = np.where(safe, np.where(pos, R1 + l1, R2 - l2), 1.0)
        logterm = np.log(num / den)

        beta = np.zeros_like(P0)
        np.arctan2(P0 * l2, R0sq + absd * R2, out=beta)
        beta -= np.arctan2(P0 * l1, R0sq + absd * R1)

        total += np.where(safe, P0 * logterm - absd * beta, 0.0)
    return total


def potential_entries(targets, v0, v1, v2, centroids, areas, diameters,
                      gauss_pts, near_factor, out=None):
    """Dense matrix of single-layer potentials of unit-density triangles.

    out[i, j] = integral over triangle j of 1/|t_i - y| dS_y.

    Entries with |t_i - c_j| < near_factor * diameter_j use the exact
    flat-triangle formula; the rest use the degree-2 interior 3-point
    Gauss rule (nodes precomputed in gauss_pts, shape (M, 3, 3)).
    """
    targets = np.asarray(targets, dtype=np.float64)
    P, M = len(targets), len(areas)
    if out is None:
        out = np.empty((P, M))
    w = areas / 3.0
    near_r2 = (near_factor * diameters) ** 2

    for start in range(0, P, _TARGET_CHUNK):
        stop = min(start + _TARGET_CHUNK, P)
        t = targets[start:stop]
        acc = np.zeros((stop - start, M))
        for g in range(3):
            diff = t[:, None, :] - gauss_pts[None, :, g, :]
            acc += 1.0 / np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        out[start:stop] = acc * w[None, :]

        dc = t[:, None, :] - centroids[None, :, :]
        near_i, near_j = np.nonzero(np.einsum("ijk,ijk->ij", dc, dc) < near_r2[None, :])
        if len(near_i):
            corners = np.stack([v0[near_j], v1[near_j], v2[near_j]], axis=1)
            out[start + near_i, near_j] = _analytic_triangle_potential(t[near_i], corners)
    return out


def ewald_sums(p2, z, eta, rnorm, coskr):
    """Spectral and spatial partial sums of the screened lattice Green function.

    spectral = sum_i exp(-(p2_i - z)/(4 eta^2)) / (p2_i - z)
    spatial  = sum_i coskr_i * Re[e^{c^2 - x^2} w(-c + i x)] / (4 pi r_i)

    with x = eta r_i, c = sqrt(z)/(2 eta) and w the Faddeeva function;
    Re[e^{c^2-x^2} w(-c+ix)]/(4 pi r) is the Gaussian-screened incomplete
    heat-kernel integral of the free propagator at energy z >= 0.
    """
    p2 = np.asarray(p2, dtype=np.float64)
    rnorm = np.asarray(rnorm, dtype=np.float64)
    coskr = np.asarray(coskr, dtype=np.float64)
    inv4eta2 = 1.0 / (4.0 * eta * eta)
    spectral = float(np.sum(np.exp(-(p2 - z) * inv4eta2) / (p2 - z)))
    c = np.sqrt(z) / (2.0 * eta)
    x = eta * rnorm
    screened = np.exp(c * c - x * x) * np.real(wofz(-c + 1j * x))
    spatial = float(np.sum(coskr * screened / (4.0 * np.pi * rnorm)))
    return spectral, spatial
