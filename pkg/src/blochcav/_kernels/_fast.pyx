# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: single-layer triangle potentials and screened lattice sums.

Contracts mirror `_pure`; both backends must agree to near machine
precision (covered by the backend-equivalence tests).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, exp, fabs, log, sqrt, M_PI
from scipy.special.cython_special cimport wofz

BACKEND_NAME = "compiled"

cdef double _EDGE_EPS2 = 1e-28


cdef inline double _tri_potential(const double* t, const double* a0,
                                  const double* a1, const double* a2) noexcept nogil:
    """Exact integral of 1/|t - y| over the flat triangle (a0, a1, a2)."""
    cdef double e1x = a1[0] - a0[0], e1y = a1[1] - a0[1], e1z = a1[2] - a0[2]
    cdef double e2x = a2[0] - a0[0], e2y = a2[1] - a0[1], e2z = a2[2] - a0[2]
    cdef double nx = e1y * e2z - e1z * e2y
    cdef double ny = e1z * e2x - e1x * e2z
    cdef double nz = e1x * e2y - e1y * e2x
    cdef double nn = sqrt(nx * nx + ny * ny + nz * nz)
    cdef double scale2 = e1x * e1x + e1y * e1y + e1z * e1z
    nx /= nn; ny /= nn; nz /= nn
    cdef double d = (t[0] - a0[0]) * nx + (t[1] - a0[1]) * ny + (t[2] - a0[2]) * nz
    cdef double absd = fabs(d)
    cdef double rx = t[0] - d * nx, ry = t[1] - d * ny, rz = t[2] - d * nz

    cdef double total = 0.0
    cdef int e
    cdef const double* pa
    cdef const double* pb
    cdef double lx, ly, lz, elen, mx, my, mz
    cdef double P0, l1, l2, R1, R2, R0sq, num, den, beta
    for e in range(3):
        if e == 0:
            pa = a0; pb = a1
        elif e == 1:
            pa = a1; pb = a2
        else:
            pa = a2; pb = a0
        lx = pb[0] - pa[0]; ly = pb[1] - pa[1]; lz = pb[2] - pa[2]
        elen = sqrt(lx * lx + ly * ly + lz * lz)
        lx /= elen; ly /= elen; lz /= elen
        # m = l x n (outward in-plane edge normal for CCW triangles)
        mx = ly * nz - lz * ny
        my = lz * nx - lx * nz
        mz = lx * ny - ly * nx
        P0 = (pa[0] - rx) * mx + (pa[1] - ry) * my + (pa[2] - rz) * mz
        l1 = (pa[0] - rx) * lx + (pa[1] - ry) * ly + (pa[2] - rz) * lz
        l2 = (pb[0] - rx) * lx + (pb[1] - ry) * ly + (pb[2] - rz) * lz
        R1 = sqrt((t[0] - pa[0]) ** 2 + (t[1] - pa[1]) ** 2 + (t[2] - pa[2]) ** 2)
        R2 = sqrt((t[0] - pb[0]) ** 2 + (t[1] - pb[1]) ** 2 + (t[2] - pb[2]) ** 2)
        R0sq = P0 * P0 + d * d
        if R0sq <= _EDGE_EPS2 * scale2:
            continue
        if l1 + l2 > 0.0:
            num = R2 + l2; den = R1 + l1
        else:
            num = R1 - l1; den = R2 - l2
        beta = atan2(P0 * l2, R0sq + absd * R2) - atan2(P0 * l1, R0sq + absd * R1)
        total += P0 * log(num / den) - absd * beta
    return total


def potential_entries(double[:, ::1] targets, double[:, ::1] v0, double[:, ::1] v1,
                      double[:, ::1] v2, double[:, ::1] centroids, double[::1] areas,
                      double[::1] diameters, double[:, :, ::1] gauss_pts,
                      double near_factor, out=None):
    """Dense matrix out[i, j] = integral over triangle j of 1/|t_i - y| dS_y.

    Near entries (|t_i - c_j| < near_factor * diameter_j) are exact;
    the rest use the interior 3-point Gauss rule.
    """
    cdef Py_ssize_t P = targets.shape[0]
    cdef Py_ssize_t M = areas.shape[0]
    if out is None:
        out = np.empty((P, M))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double dx, dy, dz, dist2, acc, w
    cdef double tx, ty, tz
    with nogil:
        for i in range(P):
            tx = targets[i, 0]; ty = targets[i, 1]; tz = targets[i, 2]
            for j in range(M):
                dx = tx - centroids[j, 0]
                dy = ty - centroids[j, 1]
                dz = tz - centroids[j, 2]
                dist2 = dx * dx + dy * dy + dz * dz
                if dist2 < (near_factor * diameters[j]) ** 2:
                    o[i, j] = _tri_potential(&targets[i, 0], &v0[j, 0], &v1[j, 0], &v2[j, 0])
                else:
                    acc = 0.0
                    dx = tx - gauss_pts[j, 0, 0]; dy = ty - gauss_pts[j, 0, 1]; dz = tz - gauss_pts[j, 0, 2]
                    acc += 1.0 / sqrt(dx * dx + dy * dy + dz * dz)
                    dx = tx - gauss_pts[j, 1, 0]; dy = ty - gauss_pts[j, 1, 1]; dz = tz - gauss_pts[j, 1, 2]
                    acc += 1.0 / sqrt(dx * dx + dy * dy + dz * dz)
                    dx = tx - gauss_pts[j, 2, 0]; dy = ty - gauss_pts[j, 2, 1]; dz = tz - gauss_pts[j, 2, 2]
                    acc += 1.0 / sqrt(dx * dx + dy * dy + dz * dz)
                    o[i, j] = acc * areas[j] / 3.0
    return out


def ewald_sums(double[::1] p2, double z, double eta, double[::1] rnorm,
               double[::1] coskr):
    """Spectral and spatial partial sums; see `_pure.ewald_sums`."""
    cdef Py_ssize_t i
    cdef double inv4eta2 = 1.0 / (4.0 * eta * eta)
    cdef double spectral = 0.0, spatial = 0.0
    cdef double c = sqrt(z) / (2.0 * eta)
    cdef double x, r
    cdef double complex wval
    with nogil:
        for i in range(p2.shape[0]):
            spectral += exp(-(p2[i] - z) * inv4eta2) / (p2[i] - z)
        for i in range(rnorm.shape[0]):
            r = rnorm[i]
            x = eta * r
            wval = wofz(-c + 1j * x)
            spatial += coskr[i] * exp(c * c - x * x) * wval.real / (4.0 * M_PI * r)
    return spectral, spatial
