"""Command-line surface: band sweeps, capacitance runs, verification, fields.

Subcommands
-----------
bands <config>        dispersion table along a k path (CSV)
capacitance <mesh>    shape coefficient q of an OFF mesh (JSON)
verify <config>       scatterer-model cross-validation report (JSON)
field <config>        leading-order Bloch field on a grid (CSV)

Config files are flat key-value text with [sections]; the grammar is
documented in the README.  All numeric output is serialized with 17
significant digits so identical configs produce byte-identical files.

Exit codes: 0 success, 1 validation failure, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import capacitance as cap
from . import dispersion as disp
from . import geometry, oracle
from .errors import BlochcavError, NumericsError, ValidationError
from .lattice import DEFAULT_EXCEPTIONAL_TOL, Lattice, enumerate_exceptional, make_lattice

__all__ = ["KPath", "RunConfig", "run_bands", "run_field", "main"]

_SCHEMA_LINE = "# schema=1"
_BANDS_HEADER = ("path_coord,kx,ky,kz,order_n,branch_s,k_squared,omega,"
                 "shift_order,amplitude_determined,near_exceptional_warning")
_FIELD_HEADER = "x,y,z,re_u,im_u,abs_u,amplitude_warning"

#: dense-solver size cap (triangles)
MAX_DENSE_TRIANGLES = 20480


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_bool(b: bool) -> str:
    return "true" if b else "false"


@dataclass(frozen=True)
class KPath:
    """Named nodes in reciprocal-basis fractional coordinates plus a
    per-segment sample count."""

    nodes: tuple[tuple[str, np.ndarray], ...]
    samples_per_segment: int

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValidationError("k path needs at least 2 nodes")
        if self.samples_per_segment < 1:
            raise ValidationError("samples_per_segment must be >= 1")

    def samples(self, lattice: Lattice) -> list[tuple[float, np.ndarray]]:
        """(path_coord, k_cartesian) pairs; path_coord is cumulative arc
        length in reciprocal space.  Segment starts are included once and
        the final node closes the path."""
        B = lattice.reciprocal_matrix
        carts = [np.asarray(frac, dtype=np.float64) @ B for _, frac in self.nodes]
        out: list[tuple[float, np.ndarray]] = []
        coord = 0.0
        for seg in range(len(carts) - 1):
            start, stop = carts[seg], carts[seg + 1]
            seg_len = float(np.linalg.norm(stop - start))
            for j in range(self.samples_per_segment):
                t = j / self.samples_per_segment
                out.append((coord + t * seg_len, start + t * (stop - start)))
            coord += seg_len
        out.append((coord, carts[-1]))
        return out


@dataclass(frozen=True)
class RunConfig:
    """Parsed run configuration; see the README for the file grammar."""

    lattice: Lattice
    cavity_shape: str
    cavity_params: dict
    a: float
    c: float
    kpath: KPath | None
    exceptional_tol: float
    verify_a_values: tuple[float, ...]
    verify_q: float | None
    base_dir: Path = field(default_factory=Path)


def _parse_vector(text: str, name: str) -> np.ndarray:
    parts = text.split()
    if len(parts) != 3:
        raise ValidationError(f"{name}: expected 3 numbers, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ValidationError(f"{name}: {exc}") from None


def _parse_nodes(text: str) -> tuple[tuple[str, np.ndarray], ...]:
    nodes = []
    for chunk in text.split(";"):
        parts = chunk.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise ValidationError(f"kpath node {chunk!r}: expected 'label x y z'")
        nodes.append((parts[0], np.array([float(p) for p in parts[1:]])))
    return tuple(nodes)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ValidationError(f"config parse error: {exc}") from None

    def get(section, key, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    for section in ("lattice",):
        if not parser.has_section(section):
            raise ValidationError(f"config missing [{section}] section")
    lattice = make_lattice(
        _parse_vector(parser.get("lattice", "ell1"), "ell1"),
        _parse_vector(parser.get("lattice", "ell2"), "ell2"),
        _parse_vector(parser.get("lattice", "ell3"), "ell3"),
    )

    cavity_shape = get("cavity", "shape", "sphere").lower()
    cavity_params: dict = {}
    if cavity_shape == "sphere":
        cavity_params["radius"] = float(get("cavity", "radius", "1.0"))
    elif cavity_shape == "ellipsoid":
        cavity_params["semi_axes"] = _parse_vector(get("cavity", "semi_axes", "1 1 1"),
                                                   "semi_axes")
    elif cavity_shape == "off":
        mesh_path = get("cavity", "path")
        if mesh_path is None:
            raise ValidationError("[cavity] shape = off requires path = <mesh.off>")
        mesh_file = (path.parent / mesh_path).resolve()
        if not mesh_file.is_file():
            raise ValidationError(f"cavity mesh not found: {mesh_file}")
        cavity_params["path"] = mesh_file
    else:
        raise ValidationError(f"unknown cavity shape {cavity_shape!r}")
    cavity_params["refinement"] = int(get("cavity", "refinement", "2"))
    cavity_params["extrapolate"] = get("cavity", "extrapolate", "false").lower() in ("1", "true", "yes")

    a = float(get("medium", "a", "0.0") if parser.has_section("medium") else 0.0)
    c = float(get("medium", "c", "1.0") if parser.has_section("medium") else 1.0)
    if a < 0.0:
        raise ValidationError("cavity scale a must be nonnegative")
    if c <= 0.0:
        raise ValidationError("wave speed c must be positive")

    kpath = None
    if parser.has_section("kpath"):
        kpath = KPath(
            nodes=_parse_nodes(parser.get("kpath", "nodes")),
            samples_per_segment=int(get("kpath", "samples_per_segment", "10")),
        )

    tol = float(get("tolerances", "exceptional_tol", str(DEFAULT_EXCEPTIONAL_TOL))
                if parser.has_section("tolerances") else DEFAULT_EXCEPTIONAL_TOL)
    if tol <= 0.0:
        raise ValidationError("exceptional_tol must be positive")

    a_values = (1e-2, 5e-3, 2.5e-3)
    verify_q = None
    if parser.has_section("verify"):
        txt = get("verify", "a_values")
        if txt:
            a_values = tuple(float(p) for p in txt.split())
        qtxt = get("verify", "q")
        if qtxt is not None:
            verify_q = float(qtxt)

    return RunConfig(
        lattice=lattice,
        cavity_shape=cavity_shape,
        cavity_params=cavity_params,
        a=a,
        c=c,
        kpath=kpath,
        exceptional_tol=tol,
        verify_a_values=a_values,
        verify_q=verify_q,
        base_dir=path.parent,
    )


def _build_cavity_mesh(config: RunConfig) -> geometry.SurfaceMesh:
    p = config.cavity_params
    if config.cavity_shape == "sphere":
        return geometry.make_sphere_mesh(p["radius"], p["refinement"])
    if config.cavity_shape == "ellipsoid":
        return geometry.make_ellipsoid_mesh(p["semi_axes"], p["refinement"])
    return geometry.load_off(str(p["path"]))


def _refinement_ladder(config: RunConfig) -> list[geometry.SurfaceMesh]:
    p = config.cavity_params
    top = p["refinement"]
    if config.cavity_shape in ("sphere", "ellipsoid") and top < 2:
        raise ValidationError("extrapolate = true needs refinement >= 2 "
                              "(three levels are extrapolated)")
    levels = range(max(0, top - 2), top + 1)
    if config.cavity_shape == "sphere":
        return [geometry.make_sphere_mesh(p["radius"], r) for r in levels]
    if config.cavity_shape == "ellipsoid":
        return [geometry.make_ellipsoid_mesh(p["semi_axes"], r) for r in levels]
    base = geometry.load_off(str(p["path"]))
    ladder = [base]
    for _ in range(2):
        ladder.append(geometry.subdivide(ladder[-1]))
    return ladder


def _cavity_q(config: RunConfig, threads: int = 1) -> tuple[float, geometry.SurfaceMesh]:
    mesh = _build_cavity_mesh(config)
    _check_mesh_size(mesh)
    if config.cavity_params.get("extrapolate"):
        ladder = _refinement_ladder(config)
        for m in ladder:
            _check_mesh_size(m)
        result = cap.richardson_q(ladder, threads=threads)
        return result.value, mesh
    return cap.solve_capacitance(mesh, threads=threads).q, mesh


def _check_mesh_size(mesh: geometry.SurfaceMesh) -> None:
    if mesh.n_triangles > MAX_DENSE_TRIANGLES:
        raise ValidationError(
            f"mesh too large for the dense solver ({mesh.n_triangles} > "
            f"{MAX_DENSE_TRIANGLES} triangles)")


# ----------------------------------------------------------------------
# bands
# ----------------------------------------------------------------------

def _band_rows_for_sample(params: disp.MediumParams, tol: float,
                          coord: float, k: np.ndarray) -> list[str]:
    exc = enumerate_exceptional(params.lattice, k, tol)
    if exc.order == 1:
        branches = [disp.dispersion_nonexceptional(params, k, check=False)]
        warn = disp.near_exceptional_warning(params, k)
    else:
        branches = disp.dispersion_clusters(params, exc)
        warn = False
    rows = []
    for br in branches:
        rows.append(",".join([
            _fmt(coord), _fmt(k[0]), _fmt(k[1]), _fmt(k[2]),
            str(exc.order), str(br.s),
            _fmt(br.k_squared), _fmt(br.omega),
            br.shift_order.value,
            _fmt_bool(br.amplitude_determined),
            _fmt_bool(warn if br.s == 1 and exc.order == 1 else False),
        ]))
    return rows


def medium_params(config: RunConfig, threads: int = 1) -> disp.MediumParams:
    """MediumParams for a config, solving the cavity q when a > 0."""
    if config.a > 0.0:
        q, mesh = _cavity_q(config, threads=threads)
        return disp.MediumParams(lattice=config.lattice, a=config.a, q=q,
                                 c=config.c, cavity_diameter=mesh.diameter())
    return disp.MediumParams(lattice=config.lattice, a=0.0, q=1.0, c=config.c)


def run_bands(config: RunConfig, threads: int = 1,
              params: disp.MediumParams | None = None) -> str:
    """Band table as CSV text; deterministic for a fixed config regardless
    of the thread count."""
    if config.kpath is None:
        raise ValidationError("config has no [kpath] section")
    if params is None:
        params = medium_params(config, threads=threads)
    samples = config.kpath.samples(config.lattice)

    def work(item):
        coord, k = item
        return _band_rows_for_sample(params, config.exceptional_tol, coord, k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            groups = list(pool.map(work, samples))
    else:
        groups = [work(s) for s in samples]

    lines = [_SCHEMA_LINE, _BANDS_HEADER]
    for g in groups:
        lines.extend(g)
    return "\n".join(lines) + "\n"


def cutoff_summary(config: RunConfig, params: disp.MediumParams,
                   orders: list[int]) -> str:
    """Human-readable cutoff report for the degeneracy orders on a path.

    Branch-1 cutoffs get numbers; the zero-sum clusters have no leading-order
    cutoff to report.
    """
    lines = []
    for n in sorted(set(orders)):
        data = disp.cutoff(params, n)
        label = "n=1" if n == 1 else f"n={n} (branch 1)"
        lines.append(f"cutoff {label}: omega_c={_fmt(data.omega_c)} "
                     f"lambda_max={_fmt(data.lambda_max)}")
    if any(n > 1 for n in orders):
        lines.append("clusters s>1: cutoff O(a), unresolved at leading order")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# field
# ----------------------------------------------------------------------

def run_field(config: RunConfig, k_index: int, branch_s: int, grid: int) -> str:
    """Leading-order Bloch field of one branch on an n^3 cell grid (CSV)."""
    if config.kpath is None:
        raise ValidationError("config has no [kpath] section")
    if grid < 1:
        raise ValidationError("grid must be >= 1")
    samples = config.kpath.samples(config.lattice)
    if not 0 <= k_index < len(samples):
        raise ValidationError(f"--k index out of range (0..{len(samples) - 1})")
    _, k = samples[k_index]
    exc = enumerate_exceptional(config.lattice, k, config.exceptional_tol)
    params = disp.MediumParams(lattice=config.lattice, a=config.a if config.a > 0 else 0.0,
                               q=1.0, c=config.c)
    branches = disp.dispersion_clusters(params, exc)
    if not 1 <= branch_s <= len(branches):
        raise ValidationError(f"--branch out of range (1..{len(branches)})")
    branch = branches[branch_s - 1]

    L = config.lattice.direct_matrix
    fracs = np.arange(grid) / grid
    pts = np.array([
        fi * L[0] + fj * L[1] + fl * L[2]
        for fi in fracs for fj in fracs for fl in fracs
    ])
    values = disp.bloch_field(branch, exc, pts)
    warn = _fmt_bool(not branch.amplitude_determined)
    lines = [_SCHEMA_LINE, _FIELD_HEADER]
    for p, u in zip(pts, values):
        lines.append(",".join([
            _fmt(p[0]), _fmt(p[1]), _fmt(p[2]),
            _fmt(u.real), _fmt(u.imag), _fmt(abs(u)), warn,
        ]))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _write_out(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _cmd_bands(args) -> int:
    config = load_config(args.config)
    if config.kpath is None:
        raise ValidationError("config has no [kpath] section")
    params = medium_params(config, threads=args.threads)
    _write_out(run_bands(config, threads=args.threads, params=params), args.output)
    if config.a > 0.0:
        orders = [enumerate_exceptional(config.lattice, k, config.exceptional_tol).order
                  for _, k in config.kpath.samples(config.lattice)]
        sys.stderr.write(cutoff_summary(config, params, orders))
    return 0


def _cmd_capacitance(args) -> int:
    mesh = geometry.load_off(args.mesh)
    _check_mesh_size(mesh)
    if args.extrapolate:
        levels = max(3, args.refinements)
        ladder = [mesh]
        for _ in range(levels - 1):
            nxt = geometry.subdivide(ladder[-1])
            _check_mesh_size(nxt)
            ladder.append(nxt)
        result = cap.richardson_q(ladder, threads=args.threads)
        finest = cap.solve_capacitance(ladder[-1], threads=args.threads)
        record = {
            "q": result.value,
            "residual": finest.residual,
            "triangles": ladder[-1].n_triangles,
            "fitted_order": result.order if np.isfinite(result.order) else None,
        }
    else:
        sol = cap.solve_capacitance(mesh, threads=args.threads)
        record = {
            "q": sol.q,
            "residual": sol.residual,
            "triangles": mesh.n_triangles,
            "fitted_order": None,
        }
    _write_out(json.dumps(record, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def _cmd_verify(args) -> int:
    config = load_config(args.config)
    if config.verify_q is not None:
        q = config.verify_q
    elif config.cavity_shape:
        q, _ = _cavity_q(config, threads=args.threads)
    else:
        q = 1.0
    report = oracle.oracle_validation_suite(config.lattice, q, config.verify_a_values)
    _write_out(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", args.output)
    return 0 if report.passed else 1


def _cmd_field(args) -> int:
    config = load_config(args.config)
    _write_out(run_field(config, args.k, args.branch, args.grid), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blochcav",
                     description="Bloch dispersion of periodic media with small cavities")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bands", help="band table along the configured k path")
    p.add_argument("config")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_bands)

    p = sub.add_parser("capacitance", help="shape coefficient q of an OFF mesh")
    p.add_argument("mesh")
    p.add_argument("--refinements", type=int, default=3,
                   help="refinement levels used with --extrapolate")
    p.add_argument("--extrapolate", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_capacitance)

    p = sub.add_parser("verify", help="scatterer-model cross-validation")
    p.add_argument("config")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("field", help="Bloch field of one branch on a cell grid")
    p.add_argument("config")
    p.add_argument("--k", type=int, required=True, help="k-sample index along the path")
    p.add_argument("--branch", type=int, required=True, help="branch index s (1-based)")
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_field)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except BlochcavError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
