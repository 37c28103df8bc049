"""Symmetric properties F(p) = sum_i f(p_i) as first-class values.

Ships the usual built-ins (distance to uniformity, support size, power sums,
entropy) plus the adversarial family attached to a packing: for a sign vector
u the single-letter function is the distance to the nearest entry of the
perturbed distribution, which is 1-Lipschitz and vanishes exactly there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DiscreteDistribution
from .errors import EvaluationError, ValidationError
from .packing import PackingInstance, min_distance_to_sorted, perturb

#: Lipschitz constant value meaning "no finite constant".
UNBOUNDED = math.inf


@dataclass(frozen=True, eq=False)
class SymmetricProperty:
    """A single-letter function on [0,1] plus its Lipschitz metadata.

    lipschitz_const is math.inf for properties with no finite constant.
    f_vec, when present, must agree with f elementwise and is used by the
    vectorized risk harnesses.
    """

    name: str
    f: Callable[[float], float]
    lipschitz_const: float = UNBOUNDED
    f_vec: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def is_lipschitz(self) -> bool:
        return math.isfinite(self.lipschitz_const)


def evaluate(prop: SymmetricProperty, p: DiscreteDistribution) -> float:
    """F(p) = sum_i f(p_i)."""
    if prop.f_vec is not None:
        values = np.asarray(prop.f_vec(p.probs), dtype=float)
    else:
        values = np.array([prop.f(float(x)) for x in p.probs])
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"property {prop.name!r} returned a non-finite value")
    return float(values.sum())


def evaluate_rows(prop: SymmetricProperty, rows: np.ndarray) -> np.ndarray:
    """F along axis 1 of a matrix of probability vectors."""
    rows = np.asarray(rows, dtype=float)
    if prop.f_vec is not None:
        values = np.asarray(prop.f_vec(rows), dtype=float)
    else:
        values = np.vectorize(prop.f)(rows)
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"property {prop.name!r} returned a non-finite value")
    return values.sum(axis=1)


def plugin_error(
    prop: SymmetricProperty, p: DiscreteDistribution, p_hat: DiscreteDistribution
) -> float:
    """|F(p_hat) - F(p)|, the loss of a plug-in estimate."""
    if p.k != p_hat.k:
        raise ValidationError(f"support sizes differ: {p.k} vs {p_hat.k}")
    return abs(evaluate(prop, p_hat) - evaluate(prop, p))


def builtin(name: str, k: int | None = None, alpha: float | None = None) -> SymmetricProperty:
    """Look up a built-in property by name.

    distance_to_uniformity requires k; power_sum requires alpha > 0.
    """
    if name == "distance_to_uniformity":
        if k is None or k < 1:
            raise ValidationError("distance_to_uniformity needs the support size k")
        ref = 1.0 / k
        return SymmetricProperty(
            name=f"distance_to_uniformity(k={k})",
            f=lambda x: abs(x - ref),
            lipschitz_const=1.0,
            f_vec=lambda arr: np.abs(arr - ref),
        )
    if name == "support_size":
        return SymmetricProperty(
            name="support_size",
            f=lambda x: 1.0 if x > 0 else 0.0,
            lipschitz_const=UNBOUNDED,  # jump at zero
            f_vec=lambda arr: (arr > 0).astype(float),
        )
    if name == "power_sum":
        if alpha is None or alpha <= 0:
            raise ValidationError("power_sum needs alpha > 0")
        const = float(alpha) if alpha >= 1 else UNBOUNDED
        return SymmetricProperty(
            name=f"power_sum(alpha={alpha})",
            f=lambda x: x**alpha,
            lipschitz_const=const,
            f_vec=lambda arr: arr**alpha,
        )
    if name == "entropy":

        def h(x: float) -> float:
            return 0.0 if x <= 0 else -x * math.log(x)

        def h_vec(arr: np.ndarray) -> np.ndarray:
            out = np.zeros_like(arr, dtype=float)
            mask = arr > 0
            out[mask] = -arr[mask] * np.log(arr[mask])
            return out

        # |h'(x)| = |log x + 1| is unbounded near zero
        return SymmetricProperty(name="entropy", f=h, lipschitz_const=UNBOUNDED, f_vec=h_vec)
    raise ValidationError(f"unknown builtin property {name!r}")


def adversarial_property(u: tuple[int, ...], packing: PackingInstance) -> SymmetricProperty:
    """Distance to the nearest entry of the perturbed distribution for u.

    A pointwise minimum of 1-Lipschitz maps, hence 1-Lipschitz itself, and
    identically zero at the perturbed distribution. Lookup is a binary search
    over the sorted entries; the test suite backs it with a linear scan.
    """
    u = tuple(int(s) for s in u)
    if u not in packing.sign_vectors:
        raise ValidationError("u is not a member of this packing")
    centers = perturb(packing, u).probs

    def f(x: float) -> float:
        return float(min_distance_to_sorted(np.array([x]), centers)[0])

    def f_vec(arr: np.ndarray) -> np.ndarray:
        return min_distance_to_sorted(arr, centers)

    return SymmetricProperty(
        name=f"nearest-center-distance[{''.join('+' if s == 1 else '-' for s in u)}]",
        f=f,
        lipschitz_const=1.0,
        f_vec=f_vec,
    )
