"""Independent verification model: a lattice of isotropic point scatterers.

The regularized periodic Green function

    g(k, z) = lim_{x->0} [ (1/V) sum_m e^{i(k-m).x} / (|k-m|^2 - z)  -  1/(4 pi |x|) ]

is evaluated by Ewald splitting (Gaussian-damped spectral sum +
Gaussian-screened direct-lattice sum + self term).  A scatterer of strength
alpha at each
lattice site has Bloch eigenvalues at the roots of

    g(k, z) = -1 / (4 pi alpha),

and with alpha = a q (capacitance of the small cavity) those roots reproduce
the closed-form leading-order dispersion of the cavity problem as a -> 0,
which is exactly what the validation suite checks.  Near a degenerate level
z0 shared by n plane waves, g has residue n/V, and modes that vanish at the
scatterer sites stay at z0 exactly: the n - 1 zero-sum clusters are
unshifted in this model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfi

from . import _kernels
from .errors import NumericsError, ValidationError
from .lattice import Lattice, enumerate_exceptional

__all__ = [
    "LatticeSumContext",
    "make_context",
    "regularized_green",
    "oracle_dispersion_root",
    "residue_at",
    "residue_count",
    "oracle_validation_suite",
    "ValidationReport",
]

#: default target relative accuracy of g
DEFAULT_TOL = 1e-8

_RESONANCE_GUARD = 1e-10
_ROOT_RTOL = 1e-10
_MAX_GROW = 6


@dataclass(frozen=True)
class LatticeSumContext:
    """Frozen evaluation context for g(k, .): lattice, Bloch vector, Ewald
    splitting parameter and truncation radii, plus the precomputed term data.

    p2 holds |k - m|^2 for every reciprocal point within spectral_cut of k;
    rnorm/coskr hold |R| and cos(k.R) for direct-lattice points within
    spatial_cut.  Radii are sized so that both eta and 2*eta evaluations
    converge; every evaluation re-checks that invariance.
    """

    lattice: Lattice
    k: np.ndarray
    ewald_eta: float
    spectral_cut: float
    spatial_cut: float
    tol: float
    p2: np.ndarray
    rnorm: np.ndarray
    coskr: np.ndarray

    def resonances(self) -> np.ndarray:
        """Sorted squared plane-wave levels |k - m|^2 within the cutoff."""
        return np.sort(self.p2)


def _integer_points_near(basis: np.ndarray, duals: np.ndarray, center: np.ndarray,
                         radius: float) -> np.ndarray:
    """All integer combinations v = sum n_i basis[i] with |v - center| <= radius.

    duals[i] . basis[j] = 2 pi delta_ij gives the per-axis coefficient bound
    |n_i| <= (|center| + radius) |duals[i]| / (2 pi).
    """
    reach = float(np.linalg.norm(center)) + radius
    bounds = [int(np.floor(reach * np.linalg.norm(d) / (2.0 * np.pi) + 1e-9)) for d in duals]
    grids = [np.arange(-b, b + 1) for b in bounds]
    coeffs = np.array(np.meshgrid(*grids, indexing="ij")).reshape(3, -1).T
    vecs = coeffs @ basis
    d = vecs - center
    keep = np.einsum("ij,ij->i", d, d) <= radius * radius * (1.0 + 1e-12)
    return vecs[keep]


def _self_term(z: float, eta: float) -> float:
    # limit of the R = 0 screened term minus the free-space singularity:
    # kappa/(4 pi) erfi(kappa/(2 eta)) - eta/(2 pi^(3/2)) e^(kappa^2/(4 eta^2))
    kappa = math.sqrt(z)
    c = kappa / (2.0 * eta)
    return (kappa / (4.0 * math.pi) * float(erfi(c))
            - eta / (2.0 * math.pi ** 1.5) * math.exp(c * c))


def _g_value(ctx: LatticeSumContext, z: float, eta: float) -> float:
    spectral, spatial = _kernels.ewald_sums(ctx.p2, z, eta, ctx.rnorm, ctx.coskr)
    return spectral / ctx.lattice.cell_volume + spatial + _self_term(z, eta)


def _build_term_data(lattice: Lattice, k: np.ndarray, spectral_cut: float,
                     spatial_cut: float):
    mvecs = _integer_points_near(lattice.reciprocal_matrix, lattice.direct_matrix,
                                 k, spectral_cut)
    pd = k - mvecs
    p2 = np.ascontiguousarray(np.einsum("ij,ij->i", pd, pd))
    rvecs = _integer_points_near(lattice.direct_matrix, lattice.reciprocal_matrix,
                                 np.zeros(3), spatial_cut)
    nonzero = np.einsum("ij,ij->i", rvecs, rvecs) > 0.0
    rvecs = rvecs[nonzero]
    rnorm = np.ascontiguousarray(np.linalg.norm(rvecs, axis=1))
    coskr = np.ascontiguousarray(np.cos(rvecs @ k))
    return p2, rnorm, coskr


def make_context(lattice: Lattice, k, *, eta: float | None = None,
                 tol: float = DEFAULT_TOL, z_max: float | None = None) -> LatticeSumContext:
    """Build an evaluation context with adaptively validated truncation radii.

    eta defaults to sqrt(pi) / V^(1/3) (balanced spectral/spatial decay).
    Radii start from explicit tail bounds sized for z up to z_max (default:
    5% above the first plane-wave level exceeding |k|^2) and grow until the
    eta -> 2*eta invariance holds with headroom.
    """
    kv = np.asarray(k, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(kv)):
        raise ValidationError("k must be finite")
    if not tol > 0.0:
        raise ValidationError("tol must be positive")
    V = lattice.cell_volume
    if eta is None:
        eta = math.sqrt(math.pi) / V ** (1.0 / 3.0)
    if not eta > 0.0:
        raise ValidationError("eta must be positive")

    if z_max is None:
        # levels |k - m|^2 of the empty lattice near k
        probe = _integer_points_near(lattice.reciprocal_matrix, lattice.direct_matrix,
                                     kv, 3.0 * float(np.linalg.norm(kv)) +
                                     3.0 * float(np.linalg.norm(lattice.reciprocal_matrix, axis=1).max()))
        d = kv - probe
        levels = np.sort(np.einsum("ij,ij->i", d, d))
        base = levels[0]
        above = levels[levels > base * (1.0 + 1e-9) + 1e-12]
        z_max = 1.05 * float(above[0]) if len(above) else 4.0 * (base + 1.0)
    z_max = max(z_max, 1e-6)

    # tail bounds: spectral sized for 2*eta (slower Gaussian damping),
    # spatial for eta (slower erfc screening)
    big = math.log(1e3 / tol)
    spectral_cut = max(math.sqrt(z_max + 16.0 * eta * eta * big), 2.05 * math.sqrt(z_max))
    spatial_cut = math.sqrt(big + z_max / (4.0 * eta * eta)) / eta

    z_probe = 0.5 * z_max
    for _ in range(_MAX_GROW):
        p2, rnorm, coskr = _build_term_data(lattice, kv, spectral_cut, spatial_cut)
        ctx = LatticeSumContext(lattice=lattice, k=kv, ewald_eta=float(eta),
                                spectral_cut=float(spectral_cut),
                                spatial_cut=float(spatial_cut), tol=float(tol),
                                p2=p2, rnorm=rnorm, coskr=coskr)
        if np.min(np.abs(p2 - z_probe)) < 1e-6 * (1.0 + z_probe):
            z_probe *= 0.93
            continue
        g1 = _g_value(ctx, z_probe, eta)
        g2 = _g_value(ctx, z_probe, 2.0 * eta)
        if abs(g1 - g2) <= 0.3 * tol * (1.0 + abs(g1)):
            return ctx
        spectral_cut *= 1.25
        spatial_cut *= 1.25
    raise NumericsError("lattice sum not converged: truncation radii kept growing")


def regularized_green(ctx: LatticeSumContext, z: float) -> float:
    """g(k, z) for real z in the propagating regime (0 <= z < spectral_cut^2/4).

    Every call evaluates at both eta and 2*eta and raises if they disagree
    beyond ctx.tol (the canonical Ewald self-check).
    """
    z = float(z)
    if not math.isfinite(z):
        raise ValidationError("z must be finite")
    if z < 0.0:
        raise ValidationError("z must be nonnegative (propagating regime)")
    if z >= 0.25 * ctx.spectral_cut ** 2:
        raise ValidationError("z too large for this context (z >= spectral_cut^2/4)")
    if np.min(np.abs(ctx.p2 - z)) < _RESONANCE_GUARD * (1.0 + z):
        raise NumericsError("resonant z")
    g1 = _g_value(ctx, z, ctx.ewald_eta)
    g2 = _g_value(ctx, z, 2.0 * ctx.ewald_eta)
    if abs(g1 - g2) > ctx.tol * (1.0 + abs(g1)):
        raise NumericsError("lattice sum not converged")
    return g1


def oracle_dispersion_root(ctx: LatticeSumContext, alpha: float, bracket) -> float:
    """Root of g(k, z) = -1/(4 pi alpha): bisection, then secant refinement
    to relative 1e-10.

    The bracket must contain exactly one sign change of
    f(z) = g(k, z) + 1/(4 pi alpha); between consecutive plane-wave levels f
    is strictly increasing, so any straddling bracket works.
    """
    if not alpha > 0.0:
        raise ValidationError("alpha must be positive")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValidationError("bracket must satisfy lo < hi")
    offset = 1.0 / (4.0 * math.pi * alpha)

    def f(z: float) -> float:
        return regularized_green(ctx, z) + offset

    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise NumericsError("bracket invalid: no sign change")

    # bisection to a coarse interval
    for _ in range(40):
        if hi - lo <= 1e-4 * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0.0:
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid

    # secant refinement, falling back to bisection when it leaves the bracket
    za, zb, fa, fb = lo, hi, flo, fhi
    for _ in range(80):
        step_ok = fb != fa
        if step_ok:
            zc = zb - fb * (zb - za) / (fb - fa)
            step_ok = lo < zc < hi
        if not step_ok:
            zc = 0.5 * (lo + hi)
        fc = f(zc)
        if fc == 0.0 or abs(zc - zb) <= _ROOT_RTOL * max(1.0, abs(zc)):
            return zc
        if flo * fc < 0.0:
            hi = zc
        else:
            lo, flo = zc, fc
        za, fa, zb, fb = zb, fb, zc, fc
    return zb


def residue_at(ctx: LatticeSumContext, z0: float, deltas=(1e-3, 1e-4, 1e-5)) -> float:
    """Residue of g at the plane-wave level z0, i.e. lim g(z0 - d) * d.

    Fitted by linear extrapolation in d from the two smallest offsets; for
    a level shared by n plane waves the residue is n/V.
    """
    scale = max(1.0, abs(z0))
    vals = [regularized_green(ctx, z0 - d * scale) * (d * scale) for d in deltas]
    d2, d3 = deltas[-2] * scale, deltas[-1] * scale
    r2, r3 = vals[-2], vals[-1]
    return float((r3 * d2 - r2 * d3) / (d2 - d3))


def residue_count(ctx: LatticeSumContext, z0: float | None = None) -> int:
    """Number of coincident plane-wave levels at z0 (default |k|^2), read off
    as residue(g) * V rounded to the nearest integer."""
    if z0 is None:
        z0 = float(ctx.k @ ctx.k)
    rho = residue_at(ctx, z0) * ctx.lattice.cell_volume
    count = int(round(rho))
    if abs(rho - count) > 0.2:
        raise NumericsError(f"ambiguous residue count: residue*V = {rho:.6f}")
    return count


# ----------------------------------------------------------------------
# Validation suite
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the oracle-vs-closed-form comparison; see to_dict()."""

    data: dict

    @property
    def passed(self) -> bool:
        return bool(self.data["passed"])

    def to_dict(self) -> dict:
        return self.data


def _root_for(ctx: LatticeSumContext, alpha: float, n: int) -> float:
    """Root of the scatterer condition nearest above z0 = |k|^2."""
    z0 = float(ctx.k @ ctx.k)
    levels = ctx.resonances()
    above = levels[levels > z0 * (1.0 + 1e-9) + 1e-12]
    if not len(above):
        raise NumericsError("no plane-wave level above |k|^2 within the cutoff")
    z_next = float(above[0])
    expected_shift = 4.0 * math.pi * alpha * n / ctx.lattice.cell_volume
    lo = z0 + min(0.01 * expected_shift, 0.01 * (z_next - z0))
    offset = 1.0 / (4.0 * math.pi * alpha)
    while regularized_green(ctx, lo) + offset > 0.0:
        lo = z0 + 0.1 * (lo - z0)
    hi = z0 + 0.5 * (z_next - z0)
    while regularized_green(ctx, hi) + offset < 0.0:
        hi = z_next - 0.5 * (z_next - hi)
    return oracle_dispersion_root(ctx, alpha, (lo, hi))


def _case_block(lattice: Lattice, q: float, a_values, k: np.ndarray, tol: float) -> dict:
    exc = enumerate_exceptional(lattice, k)
    n = exc.order
    V = lattice.cell_volume
    z0 = float(k @ k)
    ctx = make_context(lattice, k, tol=tol)
    cases = []
    for a in a_values:
        alpha = a * q
        if alpha == 0.0:
            cases.append({"a": a, "alpha": 0.0, "z_root": z0,
                          "leading_order": z0, "rel_error": 0.0})
            continue
        z_root = _root_for(ctx, alpha, n)
        pred = z0 + 4.0 * math.pi * alpha * n / V
        cases.append({
            "a": float(a),
            "alpha": float(alpha),
            "z_root": float(z_root),
            "leading_order": float(pred),
            "rel_error": float(abs(z_root - pred) / (pred - z0)) if pred > z0 else 0.0,
        })

    alphas = np.array([c["alpha"] for c in cases])
    shifts = np.array([c["z_root"] - z0 for c in cases])
    slope = float("nan")
    order = float("nan")
    if np.all(alphas > 0.0):
        design = np.stack([alphas, alphas * alphas], axis=1)
        coef, *_ = np.linalg.lstsq(design, shifts, rcond=None)
        slope = float(coef[0])
        errors = np.abs(shifts - 4.0 * math.pi * alphas * n / V)
        if np.all(errors > 0.0):
            fit = np.polyfit(np.log(np.asarray(a_values, dtype=float)), np.log(errors), 1)
            order = float(fit[0])
        else:
            order = float("inf")
    slope_expected = 4.0 * math.pi * n / V
    block = {
        "k": [float(x) for x in k],
        "order": n,
        "cases": cases,
        "slope": slope,
        "slope_expected": slope_expected,
        "slope_rel_error": abs(slope - slope_expected) / slope_expected if math.isfinite(slope) else float("nan"),
        "convergence_order": order,
    }
    block["slope_ok"] = bool(math.isfinite(slope) and block["slope_rel_error"] <= 0.02)
    block["order_ok"] = bool(order >= 1.7) if math.isfinite(order) or order == float("inf") else False
    if n > 1:
        rho = residue_at(ctx, z0) * V
        count = int(round(rho))
        block["residue_times_volume"] = float(rho)
        block["residue_count"] = count
        block["residue_ok"] = bool(abs(rho - n) <= 0.2 and count == n)
        # modes vanishing at the scatterer are untouched by it: the n - 1
        # zero-sum clusters keep z = |k|^2 exactly (no O(a) shift)
        block["unshifted_branches"] = n - 1
        block["unshifted_shift_order"] = "a2"
    return block


def oracle_validation_suite(lattice: Lattice, q: float, a_values, *,
                            k_nonexceptional=None, k_exceptional=None,
                            tol: float = DEFAULT_TOL) -> ValidationReport:
    """Cross-check the closed-form dispersion against the scatterer model.

    Runs the non-degenerate slope test and the degenerate (order n >= 2)
    n-fold slope and residue tests for alpha = a q over the given decreasing
    a values; slope agreement within 2% and error-fit order >= 1.7 pass.
    """
    a_values = [float(a) for a in a_values]
    if len(a_values) < 3:
        raise ValidationError("need at least 3 decreasing a values")
    if any(a2 >= a1 for a1, a2 in zip(a_values, a_values[1:])):
        raise ValidationError("a values must be strictly decreasing")
    if q < 0.0:
        raise ValidationError("q must be nonnegative")
    B = lattice.reciprocal_matrix
    if k_nonexceptional is None:
        k_nonexceptional = np.array([0.13, 0.21, 0.34]) @ B
    else:
        k_nonexceptional = np.asarray(k_nonexceptional, dtype=np.float64).reshape(3)
    if k_exceptional is None:
        k_exceptional = 0.5 * B[0]
    else:
        k_exceptional = np.asarray(k_exceptional, dtype=np.float64).reshape(3)

    if q == 0.0:
        z0 = float(k_nonexceptional @ k_nonexceptional)
        data = {
            "q": 0.0,
            "a_values": a_values,
            "nonexceptional": {"cases": [{"a": a, "alpha": 0.0, "z_root": z0,
                                          "leading_order": z0, "rel_error": 0.0}
                                         for a in a_values]},
            "passed": True,
        }
        return ValidationReport(data)

    ne = _case_block(lattice, q, a_values, k_nonexceptional, tol)
    if ne["order"] != 1:
        raise ValidationError("k_nonexceptional is exceptional; pick another k")
    ex = _case_block(lattice, q, a_values, k_exceptional, tol)
    if ex["order"] < 2:
        raise ValidationError("k_exceptional is not exceptional; pick another k")

    passed = (ne["slope_ok"] and ne["order_ok"] and ex["slope_ok"]
              and ex["order_ok"] and ex["residue_ok"])
    data = {
        "q": float(q),
        "a_values": a_values,
        "cell_volume": lattice.cell_volume,
        "units": {"a": "length", "alpha": "length", "z_root": "1/length^2",
                  "leading_order": "1/length^2", "cell_volume": "length^3",
                  "k": "1/length", "slope": "1/length^3"},
        "nonexceptional": ne,
        "exceptional": ex,
        "passed": bool(passed),
    }
    return ValidationReport(data)
