"""Triangulated cavity surfaces: generators, OFF file I/O, validation.

Meshes are closed, outward-oriented triangle surfaces at unit scale (the
physical cavity is this shape compressed by the size parameter a).  Flat
triangles only; first-order geometry is all the downstream solver needs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "SurfaceMesh",
    "make_sphere_mesh",
    "make_ellipsoid_mesh",
    "subdivide",
    "load_off",
    "loads_off",
    "dump_off",
    "dumps_off",
]

_GAUSS_CLOSURE_REL = 1e-8
MAX_REFINEMENT = 7


@dataclass(frozen=True)
class SurfaceMesh:
    """Closed oriented triangle mesh with cached per-triangle geometry.

    vertices : (nv, 3) float array
    triangles : (nt, 3) int array, CCW as seen from outside
    areas, centroids, normals, diameters : cached per triangle
    (diameter = longest edge).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    areas: np.ndarray
    centroids: np.ndarray
    normals: np.ndarray
    diameters: np.ndarray

    @classmethod
    def from_arrays(cls, vertices, triangles, validate: bool = True) -> "SurfaceMesh":
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        t = np.ascontiguousarray(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValidationError("vertices must be (nv, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValidationError("triangles must be (nt, 3)")
        if t.min(initial=0) < 0 or t.max(initial=-1) >= len(v):
            raise ValidationError("triangle index out of range")
        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        cross = np.cross(p1 - p0, p2 - p0)
        cnorm = np.linalg.norm(cross, axis=1)
        areas = 0.5 * cnorm
        if np.any(areas <= 0.0):
            raise ValidationError("degenerate triangle with zero area")
        normals = cross / cnorm[:, None]
        centroids = (p0 + p1 + p2) / 3.0
        diameters = np.maximum.reduce([
            np.linalg.norm(p1 - p0, axis=1),
            np.linalg.norm(p2 - p1, axis=1),
            np.linalg.norm(p0 - p2, axis=1),
        ])
        mesh = cls(v, t, areas, centroids, normals, diameters)
        if validate:
            mesh.validate()
        return mesh

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def total_area(self) -> float:
        return float(self.areas.sum())

    def enclosed_volume(self) -> float:
        """Divergence theorem: V = (1/3) sum_T centroid(T) . n(T) area(T)."""
        return float(np.einsum("ij,ij,i->", self.centroids, self.normals, self.areas) / 3.0)

    def diameter(self) -> float:
        """Bounding-box diagonal (used to place far-field probe points)."""
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def validate(self) -> None:
        """Check the closed-orientable-outward invariants.

        - every directed edge appears exactly once, and its reverse exactly
          once (closed, consistently oriented, two triangles per edge);
        - sum of area-weighted normals vanishes (Gauss closure);
        - enclosed volume is positive (outward orientation).
        """
        seen: dict[tuple[int, int], int] = {}
        for idx, (i, j, k) in enumerate(self.triangles):
            for a, b in ((i, j), (j, k), (k, i)):
                key = (int(a), int(b))
                if key in seen:
                    raise ValidationError(f"edge {key} used twice with the same orientation")
                seen[key] = idx
        for (a, b) in seen:
            if (b, a) not in seen:
                raise ValidationError(f"open surface: edge ({a}, {b}) has no mate")
        gauss = np.abs(np.einsum("i,ij->j", self.areas, self.normals)).max()
        if gauss > _GAUSS_CLOSURE_REL * self.total_area():
            raise ValidationError("surface not closed: area-weighted normals do not cancel")
        if self.enclosed_volume() <= 0.0:
            raise ValidationError("inward orientation: enclosed volume is not positive")

    def flipped(self) -> "SurfaceMesh":
        """Same surface with all triangle orientations reversed."""
        return SurfaceMesh.from_arrays(self.vertices, self.triangles[:, ::-1], validate=False)

    def scaled(self, factor: float) -> "SurfaceMesh":
        return SurfaceMesh.from_arrays(self.vertices * float(factor), self.triangles, validate=False)

    def translated(self, offset) -> "SurfaceMesh":
        off = np.asarray(offset, dtype=np.float64).reshape(3)
        return SurfaceMesh.from_arrays(self.vertices + off, self.triangles, validate=False)


# ----------------------------------------------------------------------
# Generators
# ----------------------------------------------------------------------

def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    tris = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return verts, tris


def _subdivide_arrays(verts: np.ndarray, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split each triangle into 4 via edge midpoints (shared across triangles)."""
    verts = list(map(np.asarray, verts))
    midpoint: dict[tuple[int, int], int] = {}

    def mid(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        idx = midpoint.get(key)
        if idx is None:
            idx = len(verts)
            verts.append(0.5 * (verts[a] + verts[b]))
            midpoint[key] = idx
        return idx

    out = []
    for i, j, k in tris:
        ij, jk, ki = mid(i, j), mid(j, k), mid(k, i)
        out.extend([[i, ij, ki], [ij, j, jk], [ki, jk, k], [ij, jk, ki]])
    return np.array(verts), np.array(out, dtype=np.int64)


def subdivide(mesh: SurfaceMesh) -> SurfaceMesh:
    """Flat midpoint subdivision: 4x the triangles, identical surface.

    Halves the mesh parameter h exactly, which is what Richardson
    extrapolation of an arbitrary loaded mesh needs.
    """
    v, t = _subdivide_arrays(mesh.vertices, mesh.triangles)
    return SurfaceMesh.from_arrays(v, t)


def make_sphere_mesh(radius: float, refinement: int) -> SurfaceMesh:
    """Icosphere: subdivided icosahedron projected to the sphere.

    Triangle count is 20 * 4**refinement; refinement must lie in [0, 7].
    """
    if not radius > 0.0:
        raise ValidationError("radius must be positive")
    if not (isinstance(refinement, (int, np.integer)) and 0 <= refinement <= MAX_REFINEMENT):
        raise ValidationError(f"refinement must be an integer in [0, {MAX_REFINEMENT}]")
    verts, tris = _icosahedron()
    for _ in range(refinement):
        verts, tris = _subdivide_arrays(verts, tris)
        verts /= np.linalg.norm(verts, axis=1)[:, None]
    return SurfaceMesh.from_arrays(verts * radius, tris)


def make_ellipsoid_mesh(semi_axes, refinement: int) -> SurfaceMesh:
    """Icosphere stretched per axis; normals recomputed from the geometry."""
    ax = np.asarray(semi_axes, dtype=np.float64).reshape(3)
    if np.any(ax <= 0.0):
        raise ValidationError("semi-axes must be positive")
    unit = make_sphere_mesh(1.0, refinement)
    return SurfaceMesh.from_arrays(unit.vertices * ax, unit.triangles)


# ----------------------------------------------------------------------
# OFF format
# ----------------------------------------------------------------------
# ASCII OFF: line 1 "OFF"; line 2 "<nv> <nf> <ne>" (ne ignored); nv vertex
# lines "x y z"; nf face lines "3 i j k" (0-based).  '#' comments and blank
# lines are skipped.  The writer emits 17 significant digits.

def loads_off(text: str) -> SurfaceMesh:
    """Parse OFF text into a validated mesh.

    Orientation is auto-repaired with a global flip if the enclosed volume
    comes out negative (common exporter discrepancy).
    """
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ValidationError("empty OFF input")
    if lines[0].upper() != "OFF":
        raise ValidationError("malformed OFF header: first line must be 'OFF'")
    if len(lines) < 2:
        raise ValidationError("malformed OFF: missing counts line")
    counts = lines[1].split()
    if len(counts) != 3:
        raise ValidationError("malformed OFF: counts line must be '<nv> <nf> <ne>'")
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except ValueError as exc:
        raise ValidationError(f"malformed OFF counts: {exc}") from None
    if nv < 0 or nf < 0:
        raise ValidationError("malformed OFF: negative counts")
    body = lines[2:]
    if len(body) < nv + nf:
        raise ValidationError(f"malformed OFF: expected {nv + nf} data lines, found {len(body)}")

    verts = np.empty((nv, 3))
    for i in range(nv):
        parts = body[i].split()
        if len(parts) != 3:
            raise ValidationError(f"malformed OFF vertex line {i}: {body[i]!r}")
        try:
            verts[i] = [float(p) for p in parts]
        except ValueError:
            raise ValidationError(f"malformed OFF vertex line {i}: {body[i]!r}") from None

    tris = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        parts = body[nv + i].split()
        if not parts or parts[0] != "3":
            raise ValidationError(f"non-triangle face on line {i}: {body[nv + i]!r}")
        if len(parts) != 4:
            raise ValidationError(f"malformed OFF face line {i}: {body[nv + i]!r}")
        tris[i] = [int(p) for p in parts[1:]]

    mesh = SurfaceMesh.from_arrays(verts, tris, validate=False)
    if mesh.enclosed_volume() < 0.0:
        mesh = mesh.flipped()
    mesh.validate()
    return mesh


def load_off(stream) -> SurfaceMesh:
    """Load a mesh from a path, text stream, or byte stream."""
    if hasattr(stream, "__fspath__"):
        with open(stream, "r", encoding="ascii") as fh:
            return loads_off(fh.read())
    if isinstance(stream, (str, bytes)) and b"\n" not in (
        stream.encode() if isinstance(stream, str) else stream
    ):
        with open(stream, "r", encoding="ascii") as fh:
            return loads_off(fh.read())
    if isinstance(stream, bytes):
        return loads_off(stream.decode("ascii"))
    if isinstance(stream, str):
        return loads_off(stream)
    data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("ascii")
    return loads_off(data)


def dumps_off(mesh: SurfaceMesh) -> str:
    buf = io.StringIO()
    buf.write("OFF\n")
    buf.write(f"{len(mesh.vertices)} {len(mesh.triangles)} 0\n")
    for v in mesh.vertices:
        buf.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
    for t in mesh.triangles:
        buf.write(f"3 {t[0]} {t[1]} {t[2]}\n")
    return buf.getvalue()


def dump_off(mesh: SurfaceMesh, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_off(mesh))
