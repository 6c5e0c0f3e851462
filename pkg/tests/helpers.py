"""Shared test utilities: reference meshes and independent numeric oracles.

Everything here is deliberately independent of the package's own fast
paths: brute-force scans, generic quadrature, hand-built meshes.
"""

import numpy as np
from scipy.integrate import dblquad, quad

import blochcav
from blochcav import SurfaceMesh

#: backend that generated the frozen golden files
GOLDEN_BACKEND = "compiled"


def assert_matches_golden(text: str, golden: str) -> None:
    """Byte equality on the golden backend; numeric row equality otherwise.

    Golden CSVs embed solver output at 17 significant digits, so their exact
    bytes are pinned to the kernel backend that froze them; the fallback
    backend differs in the last ulp of the capacitance solve.
    """
    if blochcav.kernel_backend == GOLDEN_BACKEND:
        assert text == golden
        return
    got_lines = text.splitlines()
    want_lines = golden.splitlines()
    assert got_lines[:2] == want_lines[:2]
    assert len(got_lines) == len(want_lines)
    for got, want in zip(got_lines[2:], want_lines[2:]):
        for g, w in zip(got.split(","), want.split(",")):
            try:
                gv, wv = float(g), float(w)
            except ValueError:
                assert g == w
                continue
            assert gv == wv or abs(gv - wv) <= 1e-12 * max(1.0, abs(wv))

# hand-written 12-triangle unit cube, outward orientation
CUBE_OFF = """OFF
8 12 0
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
3 0 3 2
3 0 2 1
3 4 5 6
3 4 6 7
3 0 1 5
3 0 5 4
3 1 2 6
3 1 6 5
3 2 3 7
3 2 7 6
3 3 0 4
3 3 4 7
"""


def make_box_mesh(n: int, size: float = 1.0) -> SurfaceMesh:
    """Axis-aligned cube of the given edge length, each face split into
    n x n quads of two triangles each, outward orientation."""
    verts: dict[tuple, int] = {}
    tris = []

    def vid(p) -> int:
        key = (round(p[0], 12), round(p[1], 12), round(p[2], 12))
        if key not in verts:
            verts[key] = len(verts)
        return verts[key]

    faces = [
        ((0, 0, 0), (0, 1, 0), (1, 0, 0)),  # z = 0, normal -z
        ((0, 0, 1), (1, 0, 0), (0, 1, 0)),  # z = 1, normal +z
        ((0, 0, 0), (1, 0, 0), (0, 0, 1)),  # y = 0, normal -y
        ((0, 1, 0), (0, 0, 1), (1, 0, 0)),  # y = 1, normal +y
        ((0, 0, 0), (0, 0, 1), (0, 1, 0)),  # x = 0, normal -x
        ((1, 0, 0), (0, 1, 0), (0, 0, 1)),  # x = 1, normal +x
    ]
    for origin, du, dv in faces:
        o = np.array(origin, float) * size
        du = np.array(du, float) * size / n
        dv = np.array(dv, float) * size / n
        for i in range(n):
            for j in range(n):
                p00 = o + i * du + j * dv
                a = vid(p00)
                b = vid(p00 + du)
                c = vid(p00 + du + dv)
                d = vid(p00 + dv)
                tris.append((a, b, c))
                tris.append((a, c, d))
    vertices = np.empty((len(verts), 3))
    for key, idx in verts.items():
        vertices[idx] = key
    return SurfaceMesh.from_arrays(vertices, np.array(tris, dtype=np.int64))


def brute_force_exceptional(reciprocal_rows: np.ndarray, k: np.ndarray,
                            tol: float, m_range: int = 6) -> list[tuple[int, int, int]]:
    """Naive triple loop over integer coefficients in [-m_range, m_range]."""
    hits = []
    for m1 in range(-m_range, m_range + 1):
        for m2 in range(-m_range, m_range + 1):
            for m3 in range(-m_range, m_range + 1):
                m = m1 * reciprocal_rows[0] + m2 * reciprocal_rows[1] + m3 * reciprocal_rows[2]
                m2norm = float(m @ m)
                if abs(2.0 * float(k @ m) - m2norm) <= tol * (1.0 + m2norm):
                    hits.append((m1, m2, m3))
    return sorted(hits)


def quad_triangle_potential(target: np.ndarray, tri: np.ndarray) -> float:
    """Adaptive 2D quadrature of 1/|target - y| over a flat triangle.

    For targets in the triangle plane the barycentric integrand is singular,
    so the in-plane case integrates wedge-wise in polar coordinates around
    the projection (where the Jacobian cancels the singularity).
    """
    a, b, c = tri
    nvec = np.cross(b - a, c - a)
    area2 = np.linalg.norm(nvec)
    nvec = nvec / area2
    h = float((target - a) @ nvec)
    proj = target - h * nvec
    # barycentric coordinates of the projection
    T = np.stack([b - a, c - a], axis=1)
    uv, *_ = np.linalg.lstsq(T, proj - a, rcond=None)
    inside = uv[0] >= -1e-12 and uv[1] >= -1e-12 and uv.sum() <= 1.0 + 1e-12
    if abs(h) > 1e-12 * np.sqrt(area2) or not inside:
        def f(v, u):
            y = a + u * (b - a) + v * (c - a)
            return 1.0 / np.linalg.norm(target - y)

        val, _ = dblquad(f, 0.0, 1.0, 0.0, lambda u: 1.0 - u,
                         epsabs=1e-12, epsrel=1e-12)
        return val * area2

    # in-plane: polar integration about the projection point
    total = 0.0
    for p, q in ((a, b), (b, c), (c, a)):
        edge = q - p
        elen = np.linalg.norm(edge)
        lhat = edge / elen
        mhat = np.cross(lhat, nvec)
        dist = float((p - target) @ mhat)
        if abs(dist) < 1e-14:
            continue
        # angles of the wedge target -> p -> q measured in the plane
        e1 = (p - target) - ((p - target) @ nvec) * nvec
        e2 = (q - target) - ((q - target) @ nvec) * nvec
        u_axis = mhat
        v_axis = np.cross(nvec, mhat)
        th1 = np.arctan2(float(e1 @ v_axis), float(e1 @ u_axis))
        th2 = np.arctan2(float(e2 @ v_axis), float(e2 @ u_axis))
        if th2 < th1:
            th2 += 2.0 * np.pi

        def ray_length(th):
            return dist / np.cos(th)

        val, _ = quad(ray_length, th1, th2, epsabs=1e-12, epsrel=1e-12)
        total += val
    return total


def spheroid_capacitance_reference() -> float:
    """Prolate (2, 1, 1) spheroid capacitance by 1-D quadrature of
    2/q = int_0^inf ds / ((s + 1) sqrt(s + 4))."""
    val, _ = quad(lambda s: 1.0 / ((s + 1.0) * np.sqrt(s + 4.0)), 0.0, np.inf,
                  epsabs=1e-13, epsrel=1e-13)
    return 2.0 / val
