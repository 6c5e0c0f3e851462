"""Leading-order Bloch dispersion, cutoffs, and cluster structure.

For a non-degenerate Bloch vector the lowest band is

    k^2 = |k|^2 + 4 pi a q / V + O(a^2),

with V the cell volume and a q the cavity capacitance.  At a wave vector
where n plane waves are degenerate, the n-fold crossing splits into one
symmetric cluster shifted by n times the single-wave amount and n - 1
clusters whose O(a) shift vanishes.  The splitting is governed by the
n x n all-ones matrix J (eigenvalue n on (1,...,1), zero elsewhere), so no
admissible amplitude vector is a single coordinate direction: clusters
never propagate in just one of the degenerate directions.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .lattice import (DEFAULT_EXCEPTIONAL_TOL, ExceptionalSet, Lattice,
                      distance_to_exceptional, enumerate_exceptional)

__all__ = [
    "MediumParams",
    "ShiftOrder",
    "ClusterBranch",
    "CutoffData",
    "InfeasibilityReport",
    "dispersion_nonexceptional",
    "dispersion_clusters",
    "cluster_J_spectrum",
    "cutoff",
    "bloch_field",
    "single_direction_infeasibility",
    "helmert_basis",
    "near_exceptional_warning",
]

#: warn when the cavity is no longer small against the cell
_SIZE_WARN_FRACTION = 0.2


class ShiftOrder(enum.Enum):
    """Leading order of the band shift relative to the empty lattice."""

    ORDER_A = "a"
    ORDER_A2 = "a2"


@dataclass(frozen=True)
class MediumParams:
    """Lattice + cavity scale a + shape coefficient q + wave speed c."""

    lattice: Lattice
    a: float
    q: float
    c: float = 1.0
    cavity_diameter: float | None = None

    def __post_init__(self):
        if self.a < 0.0:
            raise ValidationError("cavity scale a must be nonnegative")
        if not self.q > 0.0:
            raise ValidationError("shape coefficient q must be positive")
        if not self.c > 0.0:
            raise ValidationError("wave speed c must be positive")
        if self.cavity_diameter is not None:
            if self.a * self.cavity_diameter > _SIZE_WARN_FRACTION * self.lattice.min_direct_length():
                warnings.warn("cavity is not small against the lattice spacing; "
                              "leading-order dispersion is unreliable", stacklevel=2)

    @property
    def cell_volume(self) -> float:
        return self.lattice.cell_volume

    def shift_per_wave(self) -> float:
        """The single-wave band shift 4 pi a q / V."""
        return 4.0 * math.pi * self.a * self.q / self.cell_volume


@dataclass(frozen=True)
class ClusterBranch:
    """One dispersion branch at a given Bloch vector.

    tau spans the amplitudes over the degenerate wave directions k - m_j.
    For s > 1 with n > 2 only the subspace sum(tau) = 0 is determined at
    leading order; a deterministic Helmert basis is emitted and
    amplitude_determined is set False.
    """

    s: int
    k_squared: float
    omega: float
    tau: np.ndarray
    shift_order: ShiftOrder
    amplitude_determined: bool


@dataclass(frozen=True)
class CutoffData:
    """Cutoff frequency and the matching maximum wavelength."""

    omega_c: float
    lambda_max: float


@dataclass(frozen=True)
class InfeasibilityReport:
    """Defect of single-direction amplitude vectors in the cluster equation.

    defects[s-1, j] is || (2 eps_s I - beta J) e_j || with beta the coupling
    4 pi a q / (|k|^2 V); min_defect is its minimum, lower_bound the
    guaranteed beta * sqrt((n-1)/n) * (1 - 10 a) floor.
    """

    order: int
    beta: float
    defects: np.ndarray
    min_defect: float
    lower_bound: float

    @property
    def passed(self) -> bool:
        return bool(self.min_defect >= self.lower_bound > 0.0)


def helmert_basis(n: int) -> np.ndarray:
    """(n-1, n) orthonormal basis of the zero-sum subspace.

    Row r is proportional to (1, ..., 1, -r, 0, ..., 0) with r ones.
    """
    rows = np.zeros((n - 1, n))
    for r in range(1, n):
        rows[r - 1, :r] = 1.0
        rows[r - 1, r] = -r
        rows[r - 1] /= math.sqrt(r * (r + 1.0))
    return rows


def cluster_J_spectrum(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Analytic spectrum of the n x n all-ones matrix.

    Returns (eigenvalues, eigenvectors) with eigenvalues [n, 0, ..., 0],
    the first eigenvector (1,...,1)/sqrt(n) and the zero eigenspace spanned
    by the Helmert rows.  Columns of the returned eigenvector matrix match
    the eigenvalue order.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    eigenvalues = np.zeros(n)
    eigenvalues[0] = float(n)
    vectors = np.zeros((n, n))
    vectors[:, 0] = 1.0 / math.sqrt(n)
    if n > 1:
        vectors[:, 1:] = helmert_basis(n).T
    return eigenvalues, vectors


def dispersion_nonexceptional(params: MediumParams, k, *,
                              tol: float = DEFAULT_EXCEPTIONAL_TOL,
                              check: bool = True) -> ClusterBranch:
    """Lowest band at a non-degenerate Bloch vector.

    k^2 = |k|^2 + 4 pi a q / V; the wave is a single perturbed plane wave
    in direction k.
    """
    kv = np.asarray(k, dtype=np.float64).reshape(3)
    if check:
        exc = enumerate_exceptional(params.lattice, kv, tol)
        if exc.order != 1:
            raise ValidationError("use dispersion_clusters: k is exceptional "
                                  f"of order {exc.order}")
    k2 = float(kv @ kv) + params.shift_per_wave()
    return ClusterBranch(
        s=1,
        k_squared=k2,
        omega=params.c * math.sqrt(k2),
        tau=np.array([1.0]),
        shift_order=ShiftOrder.ORDER_A,
        amplitude_determined=True,
    )


def dispersion_clusters(params: MediumParams, exc: ExceptionalSet) -> list[ClusterBranch]:
    """All n branches at a degenerate (exceptional) Bloch vector.

    Branch 1 carries the full n-fold shift with the symmetric amplitude
    (1,...,1)/sqrt(n); branches 2..n stay at |k|^2 up to O(a^2) with
    zero-sum amplitudes.
    """
    n = exc.order
    if n == 1:
        return [dispersion_nonexceptional(params, exc.k, check=False)]
    k2_base = float(exc.k @ exc.k)
    shift = params.shift_per_wave()
    branches = []
    k2_1 = k2_base + n * shift
    branches.append(ClusterBranch(
        s=1,
        k_squared=k2_1,
        omega=params.c * math.sqrt(k2_1),
        tau=np.full(n, 1.0 / math.sqrt(n)),
        shift_order=ShiftOrder.ORDER_A,
        amplitude_determined=True,
    ))
    zero_sum = helmert_basis(n)
    for s in range(2, n + 1):
        branches.append(ClusterBranch(
            s=s,
            k_squared=k2_base,
            omega=params.c * math.sqrt(k2_base),
            tau=zero_sum[s - 2],
            shift_order=ShiftOrder.ORDER_A2,
            amplitude_determined=(n == 2),
        ))
    return branches


def cutoff(params: MediumParams, n: int) -> CutoffData:
    """Cutoff frequency omega_c = 2 c sqrt(pi a n q / V) and
    lambda_max = sqrt(pi V / (a q n)); their product is exactly 2 pi c."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not params.a > 0.0:
        raise ValidationError("cutoff requires a positive cavity scale")
    V = params.cell_volume
    omega_c = 2.0 * params.c * math.sqrt(math.pi * params.a * n * params.q / V)
    lambda_max = math.sqrt(math.pi * V / (params.a * params.q * n))
    return CutoffData(omega_c=omega_c, lambda_max=lambda_max)


def bloch_field(branch: ClusterBranch, exc: ExceptionalSet, points) -> np.ndarray:
    """Leading-order field u(x) = sum_j tau_j exp(-i (k - m_j) . x)."""
    if len(branch.tau) != exc.order:
        raise ValidationError("amplitude vector length does not match the cluster order")
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != 3:
        raise ValidationError("points must be 3-vectors")
    directions = exc.wave_directions()  # (n, 3)
    phases = np.exp(-1j * pts @ directions.T)  # (P, n)
    return phases @ branch.tau.astype(complex)


def single_direction_infeasibility(params: MediumParams, exc: ExceptionalSet) -> InfeasibilityReport:
    """Numerical witness that no cluster reduces to one propagation direction.

    Evaluates || (2 eps_s I - beta J) e_j || for every coordinate direction
    e_j at every branch's leading-order eps_s (2 eps_1 = beta n, eps_s = 0
    for s > 1) and checks the minimum against the analytic floor
    beta sqrt((n-1)/n) (1 - 10 a).
    """
    n = exc.order
    if n < 2:
        raise ValidationError("single-direction infeasibility applies to "
                              "exceptional k only (order >= 2)")
    k2 = float(exc.k @ exc.k)
    if k2 <= 0.0:
        raise ValidationError("k must be nonzero")
    beta = params.shift_per_wave() / k2
    two_eps = np.zeros(n)
    two_eps[0] = beta * n
    J = np.ones((n, n))
    defects = np.empty((n, n))
    for si, te in enumerate(two_eps):
        pencil = te * np.eye(n) - beta * J
        defects[si] = np.linalg.norm(pencil, axis=0)  # columns = pencil @ e_j
    lower = beta * math.sqrt((n - 1.0) / n) * (1.0 - 10.0 * params.a)
    return InfeasibilityReport(
        order=n,
        beta=beta,
        defects=defects,
        min_defect=float(defects.min()),
        lower_bound=lower,
    )


def near_exceptional_warning(params: MediumParams, k, *,
                             search_radius: float | None = None) -> bool:
    """True when the smooth dispersion formula is applied too close to a
    degeneracy plane: distance * |k| < 10 * band shift."""
    kv = np.asarray(k, dtype=np.float64).reshape(3)
    knorm = float(np.linalg.norm(kv))
    if search_radius is None:
        search_radius = 2.0 * knorm + 2.0 * float(
            np.linalg.norm(params.lattice.reciprocal_matrix, axis=1).max())
    dist = distance_to_exceptional(params.lattice, kv, search_radius)
    return dist * knorm < 10.0 * params.shift_per_wave()
