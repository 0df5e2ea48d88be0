"""Discrepancy objectives over subsets of a population.

Three objective families are provided:

* the L-infinity star discrepancy, computed exactly by enumerating the
  critical grid of anchored-box corners (dimensions 1 to 3);
* the L2 kernel discrepancy against the uniform measure on the cube,
  which needs the kernel's cube integrals (closed forms where known,
  adaptive quadrature otherwise);
* the discrete maximum mean discrepancy against a reference point set.

The two kernel objectives share a quadratic structure in the selection,
which the swap cache exploits to re-evaluate a 1-swap move with O(m)
kernel evaluations instead of O(m^2).
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import erf

from .population import PointSet, Subset, as_index_array

__all__ = [
    "BaseKernel",
    "SymmetricProductKernel",
    "RBFKernel",
    "CallableKernel",
    "KernelMoments",
    "kernel_moments",
    "register_moments",
    "MomentsUnavailableError",
    "UnsupportedDimensionError",
    "InstanceTooLargeError",
    "Objective",
    "StarObjective",
    "KernelL2Objective",
    "MMDObjective",
    "star_objective",
    "l2_kernel_objective",
    "mmd_objective",
    "star_discrepancy",
    "star_discrepancy_exact",
    "l2_kernel_discrepancy",
    "mmd_discrete",
    "evaluate",
    "SwapEvalState",
    "swap_delta_evaluate",
    "brute_force_best_subset",
]


class MomentsUnavailableError(ValueError):
    """No closed-form or quadrature moments are registered for a kernel."""


class UnsupportedDimensionError(ValueError):
    """Exact star discrepancy is only enumerated for dimensions 1 to 3."""


class InstanceTooLargeError(ValueError):
    """Brute-force enumeration would exceed the configured candidate cap."""


# ---------------------------------------------------------------------------
# Base kernels on the unit cube


class BaseKernel(ABC):
    """Symmetric positive definite kernel on ``[0, 1]^d``."""

    @abstractmethod
    def pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Kernel matrix between the rows of ``X`` (n, d) and ``Y`` (p, d)."""

    @property
    @abstractmethod
    def cache_key(self) -> tuple:
        """Hashable identity used to cache Gram matrices and moments."""

    def __call__(self, x: Sequence[float], y: Sequence[float]) -> float:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        Y = np.atleast_2d(np.asarray(y, dtype=float))
        return float(self.pairwise(X, Y)[0, 0])


class SymmetricProductKernel(BaseKernel):
    """Product kernel with per-coordinate factor ``(1 - 2|u - v|) / 4``."""

    def pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        diff = np.abs(X[:, None, :] - Y[None, :, :])
        return np.prod((1.0 - 2.0 * diff) / 4.0, axis=2)

    @property
    def cache_key(self) -> tuple:
        return ("symmetric-product",)


class RBFKernel(BaseKernel):
    """Gaussian kernel ``exp(-||x - y||^2 / (2 sigma^2))``."""

    def __init__(self, bandwidth: float):
        if bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")
        self.bandwidth = float(bandwidth)

    def pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        sq = squared_distances(X, Y)
        return np.exp(-sq / (2.0 * self.bandwidth**2))

    @property
    def cache_key(self) -> tuple:
        return ("rbf", self.bandwidth)

    def __repr__(self) -> str:
        return f"RBFKernel(bandwidth={self.bandwidth})"


class CallableKernel(BaseKernel):
    """Wrap a user-supplied symmetric closed-form kernel ``k(x, y) -> float``."""

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], float], name: str = "user"):
        self.fn = fn
        self.name = name

    def pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        out = np.empty((X.shape[0], Y.shape[0]))
        for i, x in enumerate(X):
            for j, y in enumerate(Y):
                out[i, j] = self.fn(x, y)
        return out

    @property
    def cache_key(self) -> tuple:
        return ("callable", self.name, id(self.fn))


def squared_distances(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clamped at zero."""
    sq = (
        np.sum(X * X, axis=1)[:, None]
        + np.sum(Y * Y, axis=1)[None, :]
        - 2.0 * (X @ Y.T)
    )
    return np.maximum(sq, 0.0)


# ---------------------------------------------------------------------------
# Kernel moments: cube integrals needed by the L2 discrepancy


@dataclass(frozen=True)
class KernelMoments:
    """Cube integrals of a kernel.

    ``total_integral`` is the double integral of ``k`` over the cube squared
    and ``point_integral`` maps points (n, d) to the integral of
    ``k(x_i, .)`` over the cube.
    """

    total_integral: float
    point_integral: Callable[[np.ndarray], np.ndarray]


def _symmetric_product_moments(kernel: SymmetricProductKernel, dim: int) -> KernelMoments:
    return KernelMoments(
        total_integral=(1.0 / 12.0) ** dim,
        point_integral=lambda X: np.prod(X * (1.0 - X) / 2.0, axis=1),
    )


def _rbf_moments(kernel: RBFKernel, dim: int) -> KernelMoments:
    s = kernel.bandwidth
    root2 = math.sqrt(2.0)

    def point_integral(X: np.ndarray) -> np.ndarray:
        a = erf((1.0 - X) / (s * root2)) + erf(X / (s * root2))
        return np.prod(s * math.sqrt(math.pi / 2.0) * a, axis=1)

    per_coord = 2.0 * s * s * (math.exp(-1.0 / (2.0 * s * s)) - 1.0) + s * math.sqrt(
        2.0 * math.pi
    ) * erf(1.0 / (s * root2))
    return KernelMoments(total_integral=per_coord**dim, point_integral=point_integral)


def _quadrature_moments(kernel: BaseKernel, dim: int) -> KernelMoments:
    """Adaptive-quadrature fallback; exact kernels should register closed forms."""

    def point_integral(X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        for i, x in enumerate(X):
            val, _ = integrate.nquad(
                lambda *y: kernel(x, np.array(y)), [(0.0, 1.0)] * dim
            )
            out[i] = val
        return out

    total, _ = integrate.nquad(
        lambda *xy: kernel(np.array(xy[:dim]), np.array(xy[dim:])),
        [(0.0, 1.0)] * (2 * dim),
        opts={"limit": 200},
    )
    return KernelMoments(total_integral=total, point_integral=point_integral)


_MOMENT_BUILDERS: dict[type, Callable[[BaseKernel, int], KernelMoments]] = {
    SymmetricProductKernel: _symmetric_product_moments,
    RBFKernel: _rbf_moments,
}


def register_moments(kernel_type: type, builder: Callable[[BaseKernel, int], KernelMoments]) -> None:
    """Register closed-form moments for a kernel class."""
    _MOMENT_BUILDERS[kernel_type] = builder


def kernel_moments(kernel: BaseKernel, dim: int, quadrature_fallback: bool = True) -> KernelMoments:
    """Moments for a kernel, preferring registered closed forms."""
    builder = _MOMENT_BUILDERS.get(type(kernel))
    if builder is not None:
        return builder(kernel, dim)
    if quadrature_fallback:
        return _quadrature_moments(kernel, dim)
    raise MomentsUnavailableError(
        f"no moments registered for kernel {kernel.cache_key} and quadrature disabled"
    )


# ---------------------------------------------------------------------------
# Star discrepancy by exact grid enumeration


def star_discrepancy(points) -> float:
    """Exact L-infinity star discrepancy of a point set in ``[0, 1]^d``, d <= 3.

    Enumerates every corner of the critical grid (per-coordinate point
    values, each axis augmented with 1.0) and takes the larger of the two
    one-sided local discrepancies at each corner: the open-box deficit
    ``vol - open_count/m`` and the closed-box excess ``closed_count/m - vol``.

    Accepts a float array for the fast vectorized path. An object-dtype
    array (for example of ``fractions.Fraction``) is routed through a pure
    Python path that performs the identical enumeration in exact arithmetic,
    which is the right tool when an exact rational answer is required.
    """
    arr = np.asarray(points)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"points must be a (m, d) array, got shape {arr.shape}")
    m, d = arr.shape
    if d > 3:
        raise UnsupportedDimensionError(
            f"exact star discrepancy enumerates dimensions 1 to 3, got d={d}"
        )
    if arr.dtype == object:
        return _star_discrepancy_exact_arithmetic(arr)

    arr = arr.astype(np.float64, copy=False)
    axes = [np.unique(np.append(arr[:, j], 1.0)) for j in range(d)]
    grids = np.meshgrid(*axes, indexing="ij")
    corners = np.stack([g.ravel() for g in grids], axis=1)
    # Volumes multiply coordinates left to right, matching a scalar loop.
    vol = corners[:, 0].copy()
    for j in range(1, d):
        vol *= corners[:, j]
    below = arr[None, :, :] < corners[:, None, :]
    at_or_below = arr[None, :, :] <= corners[:, None, :]
    open_count = below.all(axis=2).sum(axis=1)
    closed_count = at_or_below.all(axis=2).sum(axis=1)
    deficit = vol - open_count / m
    excess = closed_count / m - vol
    return float(max(deficit.max(), excess.max(), 0.0))


def _star_discrepancy_exact_arithmetic(arr: np.ndarray) -> float:
    pts = [tuple(row) for row in arr.tolist()]
    m = len(pts)
    d = len(pts[0])
    one = arr[0, 0] ** 0  # multiplicative unit of the element type
    axes = [sorted({p[j] for p in pts} | {one}) for j in range(d)]
    best = one - one
    for corner in itertools.product(*axes):
        vol = corner[0]
        for j in range(1, d):
            vol = vol * corner[j]
        opn = sum(1 for p in pts if all(p[j] < corner[j] for j in range(d)))
        cls = sum(1 for p in pts if all(p[j] <= corner[j] for j in range(d)))
        deficit = vol - opn / m if isinstance(vol, float) else vol - type(vol)(opn, m)
        excess = cls / m - vol if isinstance(vol, float) else type(vol)(cls, m) - vol
        best = max(best, deficit, excess)
    return best


# ---------------------------------------------------------------------------
# Objectives


class Objective(ABC):
    """A discrepancy criterion bound to one population."""

    kind: str

    def __init__(self, population: PointSet):
        self.population = population

    @property
    def n(self) -> int:
        return self.population.n

    @abstractmethod
    def value(self, subset: Subset | Sequence[int]) -> float:
        """Discrepancy of the selected points; pure in (objective, subset)."""


class StarObjective(Objective):
    kind = "star-infinity"

    def __init__(self, population: PointSet):
        if population.dim > 3:
            raise UnsupportedDimensionError(
                f"star objective supports dimensions 1 to 3, got {population.dim}"
            )
        super().__init__(population)

    def value(self, subset: Subset | Sequence[int]) -> float:
        return star_discrepancy(self.population.take(subset))


class QuadraticObjective(Objective):
    """Shared form sqrt(const - 2 mean(linear over S) + mean(kernel block over S)).

    Both the L2 kernel discrepancy and the discrete MMD reduce to this
    quadratic in the selection, differing only in the constant and linear
    coefficients.
    """

    def __init__(self, population: PointSet, kernel: BaseKernel,
                 constant: float, linear: np.ndarray):
        super().__init__(population)
        self.kernel = kernel
        self.constant = float(constant)
        self.linear = np.asarray(linear, dtype=np.float64)

    def squared_value(self, subset: Subset | Sequence[int]) -> float:
        idx = as_index_array(subset, self.n)
        pts = self.population.coords[idx]
        block = self.kernel.pairwise(pts, pts)
        sq = self.constant - 2.0 * float(self.linear[idx].mean()) + float(block.mean())
        return sq

    def value(self, subset: Subset | Sequence[int]) -> float:
        return math.sqrt(max(self.squared_value(subset), 0.0))


class KernelL2Objective(QuadraticObjective):
    kind = "l2-kernel"

    def __init__(self, population: PointSet, kernel: BaseKernel,
                 moments: KernelMoments | None = None):
        if moments is None:
            moments = kernel_moments(kernel, population.dim)
        linear = moments.point_integral(population.coords)
        super().__init__(population, kernel, moments.total_integral, linear)
        self.moments = moments


class MMDObjective(QuadraticObjective):
    kind = "mmd-vs-reference"

    def __init__(self, population: PointSet, kernel: BaseKernel,
                 reference: PointSet | None = None):
        reference = population if reference is None else reference
        if reference.dim != population.dim:
            raise ValueError(
                f"reference dimension {reference.dim} does not match "
                f"population dimension {population.dim}"
            )
        cross = kernel.pairwise(population.coords, reference.coords)
        linear = cross.mean(axis=1)
        ref_block = kernel.pairwise(reference.coords, reference.coords)
        super().__init__(population, kernel, float(ref_block.mean()), linear)
        self.reference = reference


def star_objective(population: PointSet) -> StarObjective:
    return StarObjective(population)


def l2_kernel_objective(population: PointSet, kernel: BaseKernel | None = None) -> KernelL2Objective:
    return KernelL2Objective(population, kernel or SymmetricProductKernel())


def mmd_objective(population: PointSet, kernel: BaseKernel,
                  reference: PointSet | None = None) -> MMDObjective:
    return MMDObjective(population, kernel, reference)


def star_discrepancy_exact(pop: PointSet, sel: Subset | Sequence[int]) -> float:
    """Star discrepancy of the selected points of a population."""
    return star_discrepancy(pop.take(sel))


def l2_kernel_discrepancy(obj: KernelL2Objective, sel: Subset | Sequence[int]) -> float:
    if obj.kind != "l2-kernel":
        raise ValueError(f"expected an l2-kernel objective, got {obj.kind}")
    return obj.value(sel)


def mmd_discrete(obj: MMDObjective, sel: Subset | Sequence[int]) -> float:
    if obj.kind != "mmd-vs-reference":
        raise ValueError(f"expected an mmd objective, got {obj.kind}")
    return obj.value(sel)


def evaluate(obj: Objective, sel: Subset | Sequence[int]) -> float:
    """Evaluate any objective on a subset (dispatch by objective kind)."""
    return obj.value(sel)


# ---------------------------------------------------------------------------
# O(m) swap re-evaluation for quadratic objectives


class SwapEvalState:
    """Cached kernel sums for one subset of a quadratic objective.

    Tracks the per-member row sums over the subset, the full pairwise total
    and the linear total, so a 1-swap re-evaluation costs two kernel rows
    instead of the full m x m block.
    """

    def __init__(self, objective: QuadraticObjective, subset: Subset | Sequence[int]):
        if not isinstance(objective, QuadraticObjective):
            raise ValueError("swap evaluation applies to l2-kernel and mmd objectives only")
        self.objective = objective
        self.indices = as_index_array(subset, objective.n)
        pts = objective.population.coords[self.indices]
        block = objective.kernel.pairwise(pts, pts)
        self.row_sums = block.sum(axis=1)
        self.pair_total = float(block.sum())
        self.linear_total = float(objective.linear[self.indices].sum())

    @property
    def subset(self) -> Subset:
        return Subset(tuple(int(i) for i in self.indices))

    def value(self) -> float:
        m = self.indices.size
        sq = (
            self.objective.constant
            - 2.0 * self.linear_total / m
            + self.pair_total / (m * m)
        )
        return math.sqrt(max(sq, 0.0))

    def _swap_terms(self, out_index: int, in_index: int):
        pos = np.searchsorted(self.indices, out_index)
        if pos >= self.indices.size or self.indices[pos] != out_index:
            raise ValueError(f"invalid swap: index {out_index} is not in the subset")
        ipos = np.searchsorted(self.indices, in_index)
        if ipos < self.indices.size and self.indices[ipos] == in_index:
            raise ValueError(f"invalid swap: index {in_index} is already selected")
        coords = self.objective.population.coords
        pts = coords[self.indices]
        k_in = self.objective.kernel.pairwise(coords[[in_index]], pts)[0]
        k_out = self.objective.kernel.pairwise(coords[[out_index]], pts)[0]
        k_in_out = float(
            self.objective.kernel.pairwise(coords[[in_index]], coords[[out_index]])[0, 0]
        )
        k_in_in = float(
            self.objective.kernel.pairwise(coords[[in_index]], coords[[in_index]])[0, 0]
        )
        t_in = float(k_in.sum())
        s_out = float(self.row_sums[pos])
        k_out_out = float(k_out[pos])
        new_pair = (
            self.pair_total - 2.0 * s_out + k_out_out
            + 2.0 * (t_in - k_in_out) + k_in_in
        )
        new_linear = (
            self.linear_total
            - float(self.objective.linear[out_index])
            + float(self.objective.linear[in_index])
        )
        return pos, k_in, k_out, k_in_out, k_in_in, t_in, new_pair, new_linear

    def swapped_value(self, out_index: int, in_index: int) -> float:
        """Objective value after the swap, without mutating the cache."""
        *_, new_pair, new_linear = self._swap_terms(out_index, in_index)
        m = self.indices.size
        sq = self.objective.constant - 2.0 * new_linear / m + new_pair / (m * m)
        return math.sqrt(max(sq, 0.0))

    def apply(self, out_index: int, in_index: int) -> float:
        """Apply the swap in place and return the new objective value."""
        pos, k_in, k_out, k_in_out, k_in_in, t_in, new_pair, new_linear = self._swap_terms(
            out_index, in_index
        )
        new_rows = self.row_sums - k_out + k_in
        new_rows[pos] = t_in - k_in_out + k_in_in
        new_idx = self.indices.copy()
        new_idx[pos] = in_index
        order = np.argsort(new_idx)
        self.indices = new_idx[order]
        self.row_sums = new_rows[order]
        self.pair_total = new_pair
        self.linear_total = new_linear
        return self.value()


def swap_delta_evaluate(
    state: SwapEvalState, out_index: int, in_index: int
) -> tuple[float, SwapEvalState]:
    """Value of the swapped subset plus the updated cache, in O(m) kernel work."""
    value = state.apply(out_index, in_index)
    return value, state


# ---------------------------------------------------------------------------
# Exhaustive oracle for tiny instances


def brute_force_best_subset(
    obj: Objective, m: int, candidate_cap: int = 1_000_000
) -> tuple[Subset, float]:
    """Enumerate every m-subset in lexicographic order and return the minimizer.

    Ties go to the lexicographically smallest index list. Refuses instances
    with more than ``candidate_cap`` candidates.
    """
    n = obj.n
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={n}")
    n_candidates = math.comb(n, m)
    if n_candidates > candidate_cap:
        raise InstanceTooLargeError(
            f"C({n}, {m}) = {n_candidates} exceeds the cap of {candidate_cap}"
        )
    best_idx: tuple[int, ...] | None = None
    best_val = math.inf
    for combo in itertools.combinations(range(n), m):
        val = obj.value(combo)
        if val < best_val:
            best_val = val
            best_idx = combo
    assert best_idx is not None
    return Subset(best_idx), best_val
