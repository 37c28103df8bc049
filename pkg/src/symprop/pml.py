"""Profile maximum likelihood solvers at enumerable scale.

The objective P(p, phi) is permutation invariant, so both solvers work on the
sorted simplex (entries ascending), which shrinks the search space by k!. The
exact solver sweeps a sorted-simplex grid and polishes the best point; the
approximate solver runs cyclic pairwise mass-transfer ascent from the sorted
empirical distribution. The objective is highly non-convex, so neither result
carries a global-optimality claim, only the margin over the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_BUDGETS, Budgets
from .core import DiscreteDistribution
from .errors import BudgetExceededError, ValidationError
from .estimators import Estimator
from .profiles import (
    Profile,
    _partitions_desc,
    count_partitions,
    profile_of,
    profile_probability,
    profile_probability_rows,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class PmlSolution:
    """A candidate maximizer of the profile likelihood.

    distribution entries are sorted ascending. certificate, when present, is
    the margin of the attained likelihood over the best grid value.
    """

    distribution: DiscreteDistribution
    attained_likelihood: float
    method: str  # "grid_exact" or "ascent_approx"
    certificate: float | None = None
    converged: bool = True


def _sorted_grid(resolution: int, k: int, budgets: Budgets) -> np.ndarray:
    total = count_partitions(resolution, min(resolution, k))
    if total > budgets.grid_cap:
        raise BudgetExceededError(
            f"sorted-simplex grid at resolution {resolution} for k={k} has "
            f"{total} points, over the cap {budgets.grid_cap}"
        )
    rows = np.zeros((total, k), dtype=np.int64)
    for idx, parts in enumerate(_partitions_desc(resolution, k, resolution)):
        rows[idx, k - len(parts) :] = parts[::-1]
    return rows / float(resolution)


def _sorted_empirical(phi: Profile) -> np.ndarray:
    mult = sorted(phi.multiplicities())
    probs = np.zeros(phi.k)
    probs[phi.k - len(mult) :] = np.asarray(mult, dtype=float) / phi.n
    return probs


def _line_search(
    point: np.ndarray,
    i: int,
    j: int,
    phi: Profile,
    current: float,
    step_tol: float,
) -> tuple[float, np.ndarray] | None:
    """Best mass transfer from coordinate i to j, or None if nothing improves."""
    lo, hi = -float(point[j]), float(point[i])
    if hi - lo <= step_tol:
        return None

    def value_at(ts: np.ndarray) -> np.ndarray:
        moved = np.repeat(point[None, :], ts.size, axis=0)
        moved[:, i] -= ts
        moved[:, j] += ts
        np.clip(moved, 0.0, None, out=moved)
        return profile_probability_rows(moved, phi)

    coarse = np.linspace(lo, hi, 33)
    values = value_at(coarse)
    best = int(np.argmax(values))
    a = coarse[max(best - 1, 0)]
    b = coarse[min(best + 1, coarse.size - 1)]
    # golden-section refinement of the bracket around the coarse winner
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1 = float(value_at(np.array([x1]))[0])
    f2 = float(value_at(np.array([x2]))[0])
    while b - a > step_tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = float(value_at(np.array([x2]))[0])
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = float(value_at(np.array([x1]))[0])
    candidates = [coarse[best], coarse[0], coarse[-1], x1, x2]
    vals = value_at(np.asarray(candidates))
    pick = int(np.argmax(vals))
    t, val = float(candidates[pick]), float(vals[pick])
    if val > current and abs(t) > 0.0:
        moved = point.copy()
        moved[i] -= t
        moved[j] += t
        np.clip(moved, 0.0, None, out=moved)
        return t, moved
    return None


def _polish(
    start: np.ndarray,
    phi: Profile,
    step_tol: float = 1e-8,
    max_sweeps: int = 500,
) -> tuple[np.ndarray, bool]:
    """Cyclic pairwise mass-transfer ascent; returns (point, converged)."""
    point = start.copy()
    current = float(profile_probability_rows(point[None, :], phi)[0])
    for _ in range(max_sweeps):
        largest_step = 0.0
        for i in range(phi.k):
            for j in range(phi.k):
                if i == j:
                    continue
                found = _line_search(point, i, j, phi, current, step_tol)
                if found is None:
                    continue
                t, moved = found
                point = moved
                current = float(profile_probability_rows(point[None, :], phi)[0])
                largest_step = max(largest_step, abs(t))
        if largest_step < step_tol:
            return point, True
    return point, False


def _finalize(
    point: np.ndarray,
    phi: Profile,
    method: str,
    certificate_base: float | None,
    converged: bool,
) -> PmlSolution:
    # always consider the sorted empirical and uniform candidates
    candidates = [point, _sorted_empirical(phi), np.full(phi.k, 1.0 / phi.k)]
    block = np.sort(np.stack(candidates), axis=1)
    values = profile_probability_rows(block, phi)
    pick = int(np.argmax(values))
    dist = DiscreteDistribution.normalized(block[pick])
    dist = DiscreteDistribution(np.sort(dist.probs))
    attained = profile_probability(dist, phi)
    certificate = None
    if certificate_base is not None:
        certificate = attained - certificate_base
    return PmlSolution(
        distribution=dist,
        attained_likelihood=attained,
        method=method,
        certificate=certificate,
        converged=converged,
    )


def pml_exact(
    phi: Profile, resolution: int, budgets: Budgets = DEFAULT_BUDGETS
) -> PmlSolution:
    """Best sorted-simplex grid point at spacing 1/resolution, then polishing.

    The attained likelihood dominates every grid point; ties between grid
    points resolve to the earliest in the fixed enumeration order.
    """
    if resolution < 1:
        raise ValidationError("resolution must be >= 1")
    if phi.k == 1:
        dist = DiscreteDistribution(np.array([1.0]))
        return PmlSolution(dist, profile_probability(dist, phi), "grid_exact", 0.0)
    grid = _sorted_grid(resolution, phi.k, budgets)
    values = profile_probability_rows(grid, phi)
    best = int(np.argmax(values))
    best_value = float(values[best])
    polished, _ = _polish(grid[best].astype(float), phi)
    return _finalize(polished, phi, "grid_exact", best_value, True)


def pml_approx(
    phi: Profile, step_tol: float = 1e-8, max_sweeps: int = 500
) -> PmlSolution:
    """Pairwise mass-transfer ascent from the sorted empirical distribution.

    The start replaces zero entries with 1/(2nk) before renormalizing, which
    unlocks boundary coordinates without biasing the reachable set (transfers
    can drive entries back to exactly zero). Non-convergence inside the sweep
    cap returns the best iterate with converged=False rather than an error.
    """
    if phi.k == 1:
        dist = DiscreteDistribution(np.array([1.0]))
        return PmlSolution(dist, profile_probability(dist, phi), "ascent_approx")
    start = _sorted_empirical(phi)
    floor = 1.0 / (2.0 * phi.n * phi.k)
    start = np.where(start == 0.0, floor, start)
    start = start / start.sum()
    point, converged = _polish(start, phi, step_tol=step_tol, max_sweeps=max_sweeps)
    return _finalize(point, phi, "ascent_approx", None, converged)


def solve(
    phi: Profile,
    solver: str = "approx",
    resolution: int = 200,
    step_tol: float = 1e-8,
    max_sweeps: int = 500,
    budgets: Budgets = DEFAULT_BUDGETS,
) -> PmlSolution:
    if solver == "approx":
        return pml_approx(phi, step_tol=step_tol, max_sweeps=max_sweeps)
    if solver == "exact":
        return pml_exact(phi, resolution, budgets)
    raise ValidationError(f"unknown PML solver {solver!r}")


def pml_plugin_estimator(
    solver: str = "approx",
    resolution: int = 200,
    budgets: Budgets = DEFAULT_BUDGETS,
) -> Estimator:
    """Plug-in estimator: batch -> profile -> PML distribution.

    Solutions are cached per profile, so enumeration harnesses pay one solve
    per distinct profile. The output depends on the batch only through its
    profile.
    """
    cache: dict[tuple[int, ...], np.ndarray] = {}

    def solve_profile(phi: Profile) -> np.ndarray:
        hit = cache.get(phi.counts)
        if hit is None:
            hit = solve(
                phi, solver=solver, resolution=resolution, budgets=budgets
            ).distribution.probs
            cache[phi.counts] = hit
        return hit

    def from_batch(batch) -> DiscreteDistribution:
        return DiscreteDistribution(solve_profile(profile_of(batch)))

    def from_counts(rows: np.ndarray, n: int) -> np.ndarray:
        rows = np.asarray(rows)
        k = rows.shape[1]
        out = np.empty((rows.shape[0], k))
        for idx in range(rows.shape[0]):
            phi_counts = tuple(int(c) for c in np.bincount(rows[idx], minlength=n + 1))
            out[idx] = solve_profile(Profile(counts=phi_counts, n=n, k=k))
        return out

    return Estimator(
        name=f"pml-plugin[{solver}]",
        procedure=from_batch,
        config={"solver": solver, "resolution": resolution},
        counts_procedure=from_counts,
    )
