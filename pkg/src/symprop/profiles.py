"""Sample profiles (fingerprints) and exact profile probabilities.

The profile of a batch is the vector (c_0, ..., c_n) where c_i counts the
alphabet symbols appearing exactly i times. Profiles of n samples over k
symbols are in bijection with integer partitions of n into at most k parts,
which is how the full profile space is enumerated here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterator, NamedTuple

import numpy as np

from .config import DEFAULT_BUDGETS, DEFAULT_TOLERANCES, Budgets
from .core import DiscreteDistribution, SampleBatch
from .errors import BudgetExceededError, ValidationError


@dataclass(frozen=True)
class Profile:
    """Multiplicity-of-multiplicities vector of a sample."""

    counts: tuple[int, ...]
    n: int
    k: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if len(counts) != self.n + 1:
            raise ValidationError("profile counts must have length n + 1")
        if any(c < 0 for c in counts):
            raise ValidationError("profile counts must be nonnegative")
        if sum(i * c for i, c in enumerate(counts)) != self.n:
            raise ValidationError("profile multiplicities must account for all n draws")
        if sum(counts) != self.k:
            raise ValidationError("profile counts must sum to the support size k")

    def multiplicities(self) -> tuple[int, ...]:
        """Positive per-symbol counts, descending (the integer partition)."""
        out: list[int] = []
        for value in range(self.n, 0, -1):
            out.extend([value] * self.counts[value])
        return tuple(out)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "k": self.k, "counts": list(self.counts)})

    @classmethod
    def from_json(cls, text: str) -> "Profile":
        data = json.loads(text)
        return cls(counts=tuple(data["counts"]), n=int(data["n"]), k=int(data["k"]))


@dataclass(frozen=True)
class ProfileSpace:
    """Every profile realizable with n draws over k symbols."""

    n: int
    k: int
    profiles: tuple[Profile, ...]

    def __len__(self) -> int:
        return len(self.profiles)

    def __iter__(self):
        return iter(self.profiles)

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for prof in self.profiles:
                fh.write(prof.to_json() + "\n")


def profile_of(batch: SampleBatch) -> Profile:
    """Extract the profile of a batch; unseen symbols land in slot 0."""
    per_symbol = np.bincount(batch.draws, minlength=batch.k + 1)[1:]
    counts = np.bincount(per_symbol, minlength=batch.n + 1)
    return Profile(counts=tuple(int(c) for c in counts), n=batch.n, k=batch.k)


def profiles_from_count_rows(rows: np.ndarray, n: int, k: int) -> np.ndarray:
    """Map rows of per-symbol counts to rows of profile counts (vectorized)."""
    rows = np.asarray(rows)
    m = rows.shape[0]
    offsets = np.arange(m)[:, None] * (n + 1)
    flat = np.bincount((rows + offsets).ravel(), minlength=m * (n + 1))
    return flat.reshape(m, n + 1)


def _partitions_desc(n: int, max_parts: int, max_part: int) -> Iterator[list[int]]:
    # descending part lists in reverse-lexicographic order
    if n == 0:
        yield []
        return
    if max_parts == 0:
        return
    for first in range(min(n, max_part), 0, -1):
        if n - first > first * (max_parts - 1):
            continue
        for rest in _partitions_desc(n - first, max_parts - 1, first):
            yield [first] + rest


@lru_cache(maxsize=None)
def count_partitions(n: int, max_parts: int) -> int:
    """Number of integer partitions of n into at most max_parts parts."""
    if n == 0:
        return 1
    if max_parts == 0:
        return 0
    # by conjugation this equals the number of partitions into parts <= max_parts
    ways = [1] + [0] * n
    for part in range(1, min(max_parts, n) + 1):
        for total in range(part, n + 1):
            ways[total] += ways[total - part]
    return ways[n]


def profile_from_partition(parts: list[int], n: int, k: int) -> Profile:
    counts = [0] * (n + 1)
    counts[0] = k - len(parts)
    for part in parts:
        counts[part] += 1
    return Profile(counts=tuple(counts), n=n, k=k)


def enumerate_profiles(n: int, k: int, budgets: Budgets = DEFAULT_BUDGETS) -> ProfileSpace:
    """All profiles for (n, k), in reverse-lexicographic partition order."""
    if n < 1 or k < 1:
        raise ValidationError("enumerate_profiles needs n >= 1 and k >= 1")
    total = count_partitions(n, min(n, k))
    if total > budgets.partition_cap:
        raise BudgetExceededError(
            f"profile space for (n={n}, k={k}) has {total} members, "
            f"over the cap {budgets.partition_cap}"
        )
    profiles = tuple(
        profile_from_partition(parts, n, k) for parts in _partitions_desc(n, k, n)
    )
    return ProfileSpace(n=n, k=k, profiles=profiles)


class ProfileSpaceBounds(NamedTuple):
    bound_poly: float
    bound_exp: float
    log_bound_poly: float
    log_bound_exp: float


def profile_space_bounds(n: int, k: int) -> ProfileSpaceBounds:
    """The two cardinality bounds (n+1)**k and exp(3 sqrt(n)).

    Values that overflow a float come back as inf; the log fields stay exact,
    which is the representation downstream amplification factors should use.
    """
    if n < 1 or k < 1:
        raise ValidationError("bounds need n >= 1 and k >= 1")
    log_poly = k * math.log(n + 1)
    log_exp = 3.0 * math.sqrt(n)
    poly = math.exp(log_poly) if log_poly < 709 else math.inf
    expb = math.exp(log_exp) if log_exp < 709 else math.inf
    return ProfileSpaceBounds(poly, expb, log_poly, log_exp)


def _arrangement_exponents(phi: Profile) -> np.ndarray:
    """Distinct assignments of the count multiset to the k symbol slots.

    Returns an integer array of shape (A, k); each row is one per-symbol count
    vector whose multiplicity histogram equals phi. A = k! / prod_i counts_i!.
    """
    k = phi.k
    values = [v for v in range(phi.n, 0, -1) if phi.counts[v] > 0]
    rows: list[list[int]] = []
    current = [0] * k

    def assign(value_idx: int, free: tuple[int, ...]) -> None:
        if value_idx == len(values):
            rows.append(current.copy())
            return
        value = values[value_idx]
        mult = phi.counts[value]
        for chosen in combinations(free, mult):
            for j in chosen:
                current[j] = value
            remaining = tuple(j for j in free if j not in chosen)
            assign(value_idx + 1, remaining)
            for j in chosen:
                current[j] = 0

    assign(0, tuple(range(k)))
    return np.asarray(rows, dtype=np.int64)


def _multinomial_weight(phi: Profile) -> int:
    """n! / prod_i (i!)**phi_i, the shared weight of every assignment."""
    weight = math.factorial(phi.n)
    for value in range(1, phi.n + 1):
        if phi.counts[value]:
            weight //= math.factorial(value) ** phi.counts[value]
    return weight


def profile_probability(p: DiscreteDistribution, phi: Profile) -> float:
    """Exact probability that n draws from p produce the profile phi."""
    if p.k != phi.k:
        raise ValidationError(f"support sizes differ: {p.k} vs {phi.k}")
    return float(profile_probability_rows(p.probs[None, :], phi)[0])


def profile_probability_rows(points: np.ndarray, phi: Profile) -> np.ndarray:
    """Vectorized profile probability for each probability-vector row."""
    points = np.asarray(points, dtype=float)
    exps = _arrangement_exponents(phi)
    weight = float(_multinomial_weight(phi))
    values = sorted({int(v) for v in exps.ravel() if v > 0})
    # power table: pow_table[v] holds points**v, built by incremental products
    pow_table: dict[int, np.ndarray] = {0: np.ones_like(points)}
    prev = 0
    for v in values:
        step = points if v - prev == 1 else points ** (v - prev)
        pow_table[v] = pow_table[prev] * step
        prev = v
    total = np.zeros(points.shape[0])
    smallest_positive = np.inf
    for row in exps:
        term = np.ones(points.shape[0])
        for j, e in enumerate(row):
            if e:
                term = term * pow_table[int(e)][:, j]
        total += term
        positive = term[term > 0]
        if positive.size:
            smallest_positive = min(smallest_positive, float(positive.min()))
    if smallest_positive < DEFAULT_TOLERANCES.underflow_threshold:
        return weight * _rows_logsum(points, exps)
    return weight * total


def _rows_logsum(points: np.ndarray, exps: np.ndarray) -> np.ndarray:
    # log-sum-exp fallback for terms below the underflow threshold
    m = points.shape[0]
    with np.errstate(divide="ignore"):
        logs = np.where(points > 0, np.log(points), -np.inf)
    out = np.zeros(m)
    for i in range(m):
        log_terms = []
        for row in exps:
            lt = 0.0
            dead = False
            for j, e in enumerate(row):
                if e:
                    if points[i, j] == 0:
                        dead = True
                        break
                    lt += e * logs[i, j]
            if not dead:
                log_terms.append(lt)
        if not log_terms:
            out[i] = 0.0
            continue
        peak = max(log_terms)
        out[i] = math.exp(peak) * sum(math.exp(t - peak) for t in log_terms)
    return out
