"""Point populations in the unit hypercube and index subsets of them.

A population is a fixed, ordered array of points; every other part of the
package refers to its points by index. Subsets are canonical sorted index
tuples, so two selections compare equal exactly when they pick the same
points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rng import as_generator

__all__ = [
    "PointSet",
    "Subset",
    "MixtureComponent",
    "DEFAULT_MIXTURE",
    "RejectionSamplingError",
    "generate_uniform",
    "generate_gaussian_mixture",
    "random_subset",
    "one_swap_neighbor",
    "sample_distinct_swaps",
    "load_subset_json",
    "save_subset_json",
]


class RejectionSamplingError(RuntimeError):
    """Mixture rejection sampling hit the attempt cap; acceptance is pathological."""


@dataclass(frozen=True, eq=False)
class PointSet:
    """An ordered set of ``n`` points in ``[0, 1]^dim``.

    The row order is part of the identity of the set: index ``i`` names the
    same point for the lifetime of the object. The coordinate array is made
    read-only on construction.
    """

    coords: np.ndarray

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2:
            raise ValueError(f"coords must be a 2-d array, got shape {coords.shape}")
        n, dim = coords.shape
        if n < 1 or dim < 1:
            raise ValueError(f"need at least one point and one dimension, got {coords.shape}")
        if not (np.all(coords >= 0.0) and np.all(coords <= 1.0)):
            raise ValueError("all coordinates must lie in the closed unit interval")
        coords = coords.copy()
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.n

    def take(self, subset: "Subset | Sequence[int]") -> np.ndarray:
        """Coordinates of the selected points, in index order."""
        return self.coords[as_index_array(subset, self.n)]

    def to_csv(self, path: str | Path, header: bool = False) -> None:
        """Write one point per row, ``dim`` comma-separated columns."""
        head = ",".join(f"x{j}" for j in range(self.dim)) if header else ""
        np.savetxt(path, self.coords, fmt="%.17g", delimiter=",",
                   header=head, comments="")

    @classmethod
    def from_csv(cls, path: str | Path, header: bool = False) -> "PointSet":
        data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
        return cls(data)


@dataclass(frozen=True)
class Subset:
    """Canonical selection of distinct population indices.

    ``indices`` is a strictly increasing tuple, so equality and hashing are
    order-insensitive with respect to how the selection was built.
    """

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.indices) < 1:
            raise ValueError("a subset must select at least one index")
        prev = -1
        for i in self.indices:
            if not isinstance(i, int) or i < 0:
                raise ValueError(f"indices must be nonnegative integers, got {i!r}")
            if i <= prev:
                raise ValueError("indices must be strictly increasing without duplicates")
            prev = i

    @classmethod
    def of(cls, indices: Iterable[int]) -> "Subset":
        """Build a canonical subset from indices in any order."""
        items = sorted(int(i) for i in indices)
        return cls(tuple(items))

    @property
    def m(self) -> int:
        return len(self.indices)

    def validate_for(self, pop_size: int) -> None:
        if self.indices[-1] >= pop_size:
            raise ValueError(
                f"index {self.indices[-1]} out of range for population of size {pop_size}"
            )

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


def as_index_array(subset: Subset | Sequence[int], pop_size: int | None = None) -> np.ndarray:
    """Coerce a subset or index sequence to a sorted, validated index array."""
    if isinstance(subset, Subset):
        idx = subset.as_array()
    else:
        idx = np.asarray(sorted(int(i) for i in subset), dtype=np.intp)
        if idx.size == 0:
            raise ValueError("a subset must select at least one index")
        if np.any(idx[1:] == idx[:-1]):
            raise ValueError("duplicate indices in subset")
        if idx[0] < 0:
            raise ValueError("indices must be nonnegative")
    if pop_size is not None and idx[-1] >= pop_size:
        raise ValueError(f"index {idx[-1]} out of range for population of size {pop_size}")
    return idx


@dataclass(frozen=True)
class MixtureComponent:
    """Isotropic Gaussian component, truncated to the unit cube by rejection."""

    mean: tuple[float, ...]
    stddev: float
    weight: float

    def __post_init__(self) -> None:
        if self.stddev < 0:
            raise ValueError("stddev must be nonnegative")
        if self.weight < 0:
            raise ValueError("weight must be nonnegative")
        if any(not 0.0 <= c <= 1.0 for c in self.mean):
            raise ValueError("component mean must lie inside the unit cube")


def default_mixture(dim: int = 2) -> tuple[MixtureComponent, MixtureComponent]:
    """Two equally weighted clusters on the cube diagonal, stddev 0.1."""
    return (
        MixtureComponent(mean=(0.3,) * dim, stddev=0.1, weight=0.5),
        MixtureComponent(mean=(0.7,) * dim, stddev=0.1, weight=0.5),
    )


DEFAULT_MIXTURE = default_mixture(2)

# One point failing this many Gaussian draws puts its acceptance probability
# below ~1e-6 with high confidence, so we abort instead of spinning.
_MAX_REJECTION_ATTEMPTS = 4_000_000


def generate_uniform(n: int, d: int, seed: int | np.random.Generator) -> PointSet:
    """``n`` i.i.d. points uniform on ``[0, 1]^d``; deterministic given the seed."""
    if n < 1 or d < 1:
        raise ValueError(f"n and d must be positive, got n={n}, d={d}")
    rng = as_generator(seed)
    return PointSet(rng.random((n, d)))


def generate_gaussian_mixture(
    n: int,
    d: int = 2,
    components: Sequence[MixtureComponent | tuple] | None = None,
    seed: int | np.random.Generator = 0,
    return_labels: bool = False,
) -> PointSet | tuple[PointSet, np.ndarray]:
    """Sample ``n`` points from a Gaussian mixture truncated to the unit cube.

    Each point first draws its component by normalized weight, then redraws
    an isotropic Gaussian around that component's mean until the draw lands
    inside ``[0, 1]^d``. Rejection (rather than clipping) keeps the result a
    proper truncated density with no boundary atoms.

    ``return_labels=True`` additionally returns the component index of each
    point, which is useful for auditing the mixture proportions.
    """
    if n < 1 or d < 1:
        raise ValueError(f"n and d must be positive, got n={n}, d={d}")
    if components is None:
        components = default_mixture(d)
    comps = [c if isinstance(c, MixtureComponent) else MixtureComponent(*c) for c in components]
    if not comps:
        raise ValueError("component list must not be empty")
    if any(len(c.mean) != d for c in comps):
        raise ValueError("component means must have dimension d")
    weights = np.array([c.weight for c in comps], dtype=float)
    total = weights.sum()
    if total <= 0:
        raise ValueError("component weights must sum to a positive value")
    weights = weights / total

    rng = as_generator(seed)
    means = np.array([c.mean for c in comps], dtype=float)
    stds = np.array([c.stddev for c in comps], dtype=float)

    labels = rng.choice(len(comps), size=n, p=weights)
    points = np.empty((n, d), dtype=np.float64)
    pending = np.arange(n)
    attempts = np.zeros(n, dtype=np.int64)
    while pending.size:
        # Oversample stragglers so pathological components fail fast.
        per_point = max(1, 4096 // pending.size)
        mu = means[labels[pending]]
        sd = stds[labels[pending], None]
        draws = mu[:, None, :] + sd[:, :, None] * rng.standard_normal((pending.size, per_point, d))
        ok = np.all((draws >= 0.0) & (draws <= 1.0), axis=2)
        first_ok = np.argmax(ok, axis=1)
        any_ok = ok[np.arange(pending.size), first_ok]
        hits = pending[any_ok]
        points[hits] = draws[any_ok, first_ok[any_ok]]
        attempts[pending] += np.where(any_ok, first_ok + 1, per_point)
        pending = pending[~any_ok]
        if pending.size and attempts[pending].max() >= _MAX_REJECTION_ATTEMPTS:
            raise RejectionSamplingError(
                "rejection acceptance probability appears to be below 1e-6; "
                "a mixture component lies essentially outside the unit cube"
            )
    pts = PointSet(points)
    if return_labels:
        return pts, labels
    return pts


def random_subset(pop_size: int, m: int, rng: int | np.random.Generator) -> Subset:
    """Uniform draw over all ``C(pop_size, m)`` index subsets, in canonical form."""
    if not 1 <= m <= pop_size:
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={pop_size}")
    gen = as_generator(rng)
    idx = gen.choice(pop_size, size=m, replace=False)
    return Subset(tuple(sorted(int(i) for i in idx)))


def _complement(indices: np.ndarray, pop_size: int) -> np.ndarray:
    mask = np.ones(pop_size, dtype=bool)
    mask[indices] = False
    return np.flatnonzero(mask)


def one_swap_neighbor(
    sel: Subset | Sequence[int], pop_size: int, rng: int | np.random.Generator
) -> Subset:
    """Swap one selected index, drawn uniformly, for one uniform non-member."""
    idx = as_index_array(sel, pop_size)
    m = idx.size
    if m >= pop_size:
        raise ValueError("cannot swap when the subset already covers the population")
    gen = as_generator(rng)
    out = idx[gen.integers(m)]
    comp = _complement(idx, pop_size)
    into = comp[gen.integers(comp.size)]
    new = idx.copy()
    new[np.searchsorted(idx, out)] = into
    return Subset(tuple(sorted(int(i) for i in new)))


def sample_distinct_swaps(
    sel: Subset | Sequence[int],
    pop_size: int,
    count: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw distinct 1-swap moves ``(out, in)`` for a subset.

    Pairs are sampled uniformly and rejection-sampled against duplicates
    until ``min(count, m * (pop_size - m))`` distinct moves are collected.
    Returns parallel arrays of outgoing and incoming population indices.
    """
    idx = as_index_array(sel, pop_size)
    m = idx.size
    if m >= pop_size:
        raise ValueError("cannot swap when the subset already covers the population")
    comp = _complement(idx, pop_size)
    target = min(count, m * comp.size)
    seen: dict[tuple[int, int], None] = {}
    while len(seen) < target:
        need = target - len(seen)
        outs = rng.integers(m, size=2 * need)
        ins = rng.integers(comp.size, size=2 * need)
        for o, i in zip(outs, ins):
            seen.setdefault((int(o), int(i)), None)
            if len(seen) >= target:
                break
    pairs = np.array(list(seen.keys()), dtype=np.intp)
    return idx[pairs[:, 0]], comp[pairs[:, 1]]


def save_subset_json(sel: Subset | Sequence[int], path: str | Path) -> None:
    """Write a subset as a JSON array of integer indices."""
    idx = as_index_array(sel)
    Path(path).write_text(json.dumps([int(i) for i in idx]) + "\n")


def load_subset_json(path: str | Path) -> Subset:
    data = json.loads(Path(path).read_text())
    return Subset.of(int(i) for i in data)
