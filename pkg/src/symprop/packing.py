"""Adversarial packing of near-indistinguishable distributions.

Builds the arithmetic-progression center distribution, its +/- delta paired
perturbations (Paninski construction), a greedy Gilbert-Varshamov sign-vector
packing with guaranteed pairwise Hamming distance, and the membership region
of probability vectors that track the center's interval structure. Together
these feed the generalized Fano machinery with a separation guarantee of
k * delta / 5.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import DEFAULT_BUDGETS, Budgets
from .core import DiscreteDistribution
from .errors import BudgetExceededError, RejectionSamplingError, ValidationError
from .rng import generator


def center_distribution(k: int) -> DiscreteDistribution:
    """Arithmetic progression from 1/(2k) to 3/(2k) with gap 1/(k(k-1))."""
    if k < 2 or k % 2 != 0:
        raise ValidationError("center distribution needs an even k >= 2")
    start = 1.0 / (2 * k)
    gap = 1.0 / (k * (k - 1))
    return DiscreteDistribution(start + gap * np.arange(k))


def delta_upper_limit(k: int) -> float:
    """Perturbations must stay strictly below 1/(4k(k-1))."""
    return 1.0 / (4 * k * (k - 1))


@dataclass(frozen=True, eq=False)
class PackingInstance:
    """Center, perturbation size, and the sign-vector packing, bundled."""

    k: int
    delta: float
    sign_vectors: tuple[tuple[int, ...], ...]
    min_hamming: int
    certified_lower: int

    def __post_init__(self):
        if self.k < 2 or self.k % 2 != 0:
            raise ValidationError("packing needs an even k >= 2")
        limit = delta_upper_limit(self.k)
        if not (0 < self.delta < limit):
            raise ValidationError(
                f"delta must lie in (0, {limit!r}); got {self.delta!r}"
            )
        if not self.sign_vectors:
            raise ValidationError("packing needs at least one sign vector")
        for u in self.sign_vectors:
            if len(u) != self.k_half or any(s not in (-1, 1) for s in u):
                raise ValidationError("sign vectors must be +/-1 tuples of length k/2")

    @property
    def k_half(self) -> int:
        return self.k // 2

    @property
    def m(self) -> int:
        return len(self.sign_vectors)

    @property
    def interval_halfwidth(self) -> float:
        return 1.0 / (2 * self.k * (self.k - 1))

    @property
    def center(self) -> DiscreteDistribution:
        return center_distribution(self.k)

    @property
    def meets_exp_target(self) -> bool:
        """Whether the achieved size reaches exp(k_half / 8)."""
        return self.m >= math.exp(self.k_half / 8.0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": "packing/1",
                "k": self.k,
                "delta": self.delta,
                "min_hamming": self.min_hamming,
                "certified_lower": self.certified_lower,
                "sign_vectors": [signs_to_bits(u) for u in self.sign_vectors],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PackingInstance":
        data = json.loads(text)
        return cls(
            k=int(data["k"]),
            delta=float(data["delta"]),
            sign_vectors=tuple(bits_to_signs(b) for b in data["sign_vectors"]),
            min_hamming=int(data["min_hamming"]),
            certified_lower=int(data["certified_lower"]),
        )


def signs_to_bits(u: tuple[int, ...]) -> str:
    return "".join("1" if s == 1 else "0" for s in u)


def bits_to_signs(bits: str) -> tuple[int, ...]:
    return tuple(1 if b == "1" else -1 for b in bits)


def hamming(u: tuple[int, ...], v: tuple[int, ...]) -> int:
    return sum(1 for a, b in zip(u, v) if a != b)


def hamming_ball_volume(length: int, radius: int) -> int:
    return sum(math.comb(length, r) for r in range(radius + 1))


def gv_size_certificate(k_half: int, distance: int) -> int:
    """Sphere-covering lower bound on any maximal distance-d code."""
    return -(-(2**k_half) // hamming_ball_volume(k_half, distance - 1))


def gv_packing(k_half: int, budgets: Budgets = DEFAULT_BUDGETS) -> list[tuple[int, ...]]:
    """Greedy scan of {+1,-1}^k_half keeping pairwise Hamming distance >= ceil(k_half/5).

    The scan order is fixed (integers ascending, most significant bit first,
    bit 1 encoding +1), so the output is deterministic.
    """
    if k_half < 1:
        raise ValidationError("gv_packing needs k_half >= 1")
    if 2**k_half > budgets.gv_cap:
        raise BudgetExceededError(
            f"2**{k_half} sign vectors exceed the enumeration cap {budgets.gv_cap}"
        )
    distance = max(1, math.ceil(k_half / 5))
    accepted_ints: list[int] = []
    for code in range(2**k_half):
        if all((code ^ prev).bit_count() >= distance for prev in accepted_ints):
            accepted_ints.append(code)
    out = []
    for code in accepted_ints:
        bits = format(code, f"0{k_half}b")
        out.append(bits_to_signs(bits))
    return out


def build_packing(
    k: int, delta: float, budgets: Budgets = DEFAULT_BUDGETS
) -> PackingInstance:
    """Construct the full packing for an even k and perturbation size delta."""
    if k < 2 or k % 2 != 0:
        raise ValidationError("packing needs an even k >= 2")
    k_half = k // 2
    vectors = gv_packing(k_half, budgets)
    distance = max(1, math.ceil(k_half / 5))
    return PackingInstance(
        k=k,
        delta=delta,
        sign_vectors=tuple(vectors),
        min_hamming=distance,
        certified_lower=gv_size_certificate(k_half, distance),
    )


def perturb(packing: PackingInstance, u: tuple[int, ...]) -> DiscreteDistribution:
    """Move paired coordinates (i, k/2 + i) by +u_i*delta and -u_i*delta."""
    if len(u) != packing.k_half or any(s not in (-1, 1) for s in u):
        raise ValidationError("u must be a +/-1 tuple of length k/2")
    signs = np.asarray(u, dtype=float)
    shift = np.concatenate([signs, -signs]) * packing.delta
    return DiscreteDistribution(packing.center.probs + shift)


def hypotheses(packing: PackingInstance) -> list[DiscreteDistribution]:
    """The perturbed distribution for every sign vector, in packing order."""
    return [perturb(packing, u) for u in packing.sign_vectors]


def _interval_hits(rows: np.ndarray, packing: PackingInstance) -> np.ndarray:
    """Number of center intervals hit by each row (open intervals)."""
    rows = np.asarray(rows, dtype=float)
    centers = packing.center.probs
    w = packing.interval_halfwidth
    # (m, k, k): does entry j of row m fall inside interval i?
    inside = (rows[:, None, :] > centers[None, :, None] - w) & (
        rows[:, None, :] < centers[None, :, None] + w
    )
    return inside.any(axis=2).sum(axis=1)


def covers_center_intervals(q: DiscreteDistribution, packing: PackingInstance) -> bool:
    """True when q misses at most k/10 of the center's open intervals."""
    if q.k != packing.k:
        raise ValidationError(f"support sizes differ: {q.k} vs {packing.k}")
    hits = int(_interval_hits(q.probs[None, :], packing)[0])
    misses = packing.k - hits
    return misses <= packing.k / 10.0


def sample_membership(
    packing: PackingInstance,
    trials: int,
    seed: int,
    budgets: Budgets = DEFAULT_BUDGETS,
) -> np.ndarray:
    """Rejection-sample `trials` probability vectors inside the membership region.

    Proposals perturb each center coordinate uniformly within its interval and
    renormalize; draws whose renormalization breaks membership are rejected.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    rng = generator(seed, "membership")
    centers = packing.center.probs
    w = packing.interval_halfwidth
    out = np.empty((trials, packing.k))
    have = 0
    rejected = 0
    while have < trials:
        batch = max(trials - have, 64)
        props = centers + rng.uniform(-w, w, size=(batch, packing.k))
        props = np.clip(props, 0.0, None)
        props /= props.sum(axis=1, keepdims=True)
        hits = _interval_hits(props, packing)
        good = (packing.k - hits) <= packing.k / 10.0
        n_good = int(good.sum())
        take = min(n_good, trials - have)
        out[have : have + take] = props[good][:take]
        have += take
        rejected += batch - n_good
        if rejected > budgets.rejection_cap:
            raise RejectionSamplingError(
                f"membership sampler rejected {rejected} proposals (cap "
                f"{budgets.rejection_cap})"
            )
    return out


def min_distance_to_sorted(values: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Distance from each value to its nearest center (centers sorted ascending)."""
    values = np.asarray(values, dtype=float)
    flat = values.ravel()
    idx = np.searchsorted(centers, flat)
    left = centers[np.clip(idx - 1, 0, centers.size - 1)]
    right = centers[np.clip(idx, 0, centers.size - 1)]
    best = np.minimum(np.abs(flat - left), np.abs(flat - right))
    return best.reshape(values.shape)


def separation_check(packing: PackingInstance, trials: int, seed: int) -> float:
    """Minimum of F_u(q) + F_v(q) over sampled members q and packing pairs u != v.

    The guaranteed lower bound for this quantity is k * delta / 5; callers
    assert against it.
    """
    if packing.m < 2:
        raise ValidationError("separation needs at least two sign vectors")
    qs = sample_membership(packing, trials, seed)
    losses = np.empty((packing.m, trials))
    for row, u in enumerate(packing.sign_vectors):
        centers = perturb(packing, u).probs  # increasing by construction
        losses[row] = min_distance_to_sorted(qs, centers).sum(axis=1)
    best = math.inf
    for i in range(packing.m):
        for j in range(i + 1, packing.m):
            best = min(best, float((losses[i] + losses[j]).min()))
    return best


def separation_threshold(packing: PackingInstance) -> float:
    return packing.k * packing.delta / 5.0


class DeltaChoice(NamedTuple):
    delta: float
    clamped: bool


def choose_delta(n: int, k: int, c: float) -> DeltaChoice:
    """delta = c / sqrt(n k), clamped into the packing's valid range.

    A set clamped flag signals that k is too large relative to n for the
    intended scaling to fit the construction.
    """
    if c <= 0:
        raise ValidationError("c must be > 0")
    if n < 1 or k < 2:
        raise ValidationError("choose_delta needs n >= 1 and k >= 2")
    raw = c / math.sqrt(n * k)
    ceiling = 0.99 * delta_upper_limit(k)
    if raw > ceiling:
        return DeltaChoice(ceiling, True)
    return DeltaChoice(raw, False)


def mi_upper_bound(n: int, k: int, delta: float) -> float:
    """Closed-form ceiling 2 n k^2 delta^2 on the packing's mutual information."""
    if delta < 0:
        raise ValidationError("delta must be >= 0")
    return 2.0 * n * k * k * delta * delta
