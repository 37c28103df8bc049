"""Discrete distributions on a finite alphabet.

Validated probability vectors, seeded i.i.d. sampling, the three classical
f-divergences (total variation, KL, chi-square), and the sorted-l1 distance,
i.e. the l1 distance minimized over permutations of one argument.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import InfiniteDivergenceError, ValidationError
from .rng import generator


def _as_readonly(vec) -> np.ndarray:
    arr = np.array(vec, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """A probability vector on the alphabet {1, ..., k}."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _as_readonly(self.probs)
        if arr.ndim != 1 or arr.size < 1:
            raise ValidationError("probability vector must be 1-d and nonempty")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("probability vector has non-finite entries")
        if np.any(arr < 0):
            raise ValidationError("probability vector has negative entries")
        total = float(arr.sum())
        if abs(total - 1.0) > DEFAULT_TOLERANCES.simplex_atol:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", arr)

    @property
    def k(self) -> int:
        return int(self.probs.size)

    @classmethod
    def normalized(cls, vec) -> "DiscreteDistribution":
        """Rescale a nonnegative vector onto the simplex."""
        arr = np.asarray(vec, dtype=float)
        total = arr.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValidationError("cannot normalize a vector with nonpositive mass")
        return cls(arr / total)

    @classmethod
    def uniform(cls, k: int) -> "DiscreteDistribution":
        if k < 1:
            raise ValidationError("k must be >= 1")
        return cls(np.full(k, 1.0 / k))

    def sorted(self) -> "DiscreteDistribution":
        return DiscreteDistribution(np.sort(self.probs))

    def to_json(self) -> str:
        """Serialize as a JSON array of probabilities."""
        return json.dumps([float(x) for x in self.probs])

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDistribution":
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValidationError("expected a JSON array of probabilities")
        return cls(np.asarray(data, dtype=float))


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """n i.i.d. draws from a distribution on {1, ..., k}, with its seed."""

    draws: np.ndarray
    n: int
    k: int
    seed: int = 0

    def __post_init__(self):
        arr = np.array(self.draws, dtype=np.int64)
        arr.flags.writeable = False
        if arr.ndim != 1 or arr.size != self.n:
            raise ValidationError("draws must be a 1-d sequence of length n")
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if arr.size and (arr.min() < 1 or arr.max() > self.k):
            raise ValidationError("draws must lie in 1..k")
        object.__setattr__(self, "draws", arr)

    def write_csv(self, path) -> None:
        """One 1-based symbol index per line, header 'symbol'."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("symbol\n")
            for x in self.draws:
                fh.write(f"{int(x)}\n")

    @classmethod
    def read_csv(cls, path, k: int, seed: int = 0) -> "SampleBatch":
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0] != "symbol":
            raise ValidationError("expected a 'symbol' CSV header")
        draws = np.array([int(x) for x in lines[1:]], dtype=np.int64)
        return cls(draws=draws, n=draws.size, k=k, seed=seed)


def sample(p: DiscreteDistribution, n: int, seed: int) -> SampleBatch:
    """Draw n i.i.d. symbols from p; identical (p, n, seed) gives identical batches."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = generator(seed)
    draws = rng.choice(p.k, size=n, p=p.probs) + 1
    return SampleBatch(draws=draws, n=n, k=p.k, seed=seed)


def _check_same_k(p: DiscreteDistribution, q: DiscreteDistribution) -> None:
    if p.k != q.k:
        raise ValidationError(f"support sizes differ: {p.k} vs {q.k}")


def sorted_l1(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """l1 distance minimized over permutations of one argument.

    For l1 cost on the line the minimizing assignment is the monotone
    matching, so sorting both vectors and summing coordinatewise absolute
    differences attains the minimum. The exhaustive-permutation oracle in the
    test suite guards this shortcut.
    """
    _check_same_k(p, q)
    return float(np.abs(np.sort(p.probs) - np.sort(q.probs)).sum())


def sorted_l1_rows(rows: np.ndarray, p: DiscreteDistribution) -> np.ndarray:
    """Vectorized sorted-l1 distance between each row and p."""
    target = np.sort(p.probs)
    return np.abs(np.sort(np.asarray(rows, dtype=float), axis=1) - target).sum(axis=1)


def tv(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Total variation distance, sum |p_i - q_i| / 2."""
    _check_same_k(p, q)
    return float(np.abs(p.probs - q.probs).sum() / 2.0)


def kl(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """KL divergence in nats with the 0 log 0 = 0 convention."""
    _check_same_k(p, q)
    pa, qa = p.probs, q.probs
    mask = pa > 0
    if np.any(qa[mask] == 0):
        raise InfiniteDivergenceError("kl: q vanishes where p has mass")
    # log-domain accumulation: stable even for entries near 1e-300
    terms = pa[mask] * (np.log(pa[mask]) - np.log(qa[mask]))
    return float(terms.sum())


def chi2(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Chi-square divergence, sum (p_i - q_i)^2 / q_i."""
    _check_same_k(p, q)
    pa, qa = p.probs, q.probs
    if np.any((qa == 0) & (pa > 0)):
        raise InfiniteDivergenceError("chi2: q vanishes where p has mass")
    mask = qa > 0
    diff = np.abs(pa[mask] - qa[mask])
    qm = qa[mask]
    thresh = DEFAULT_TOLERANCES.divergence_underflow
    tiny = (diff > 0) & ((diff < 1e-150) | (qm < thresh))
    terms = np.zeros_like(qm)
    plain = ~tiny
    terms[plain] = diff[plain] ** 2 / qm[plain]
    if np.any(tiny):
        # squaring would underflow; go through logs (values past float range
        # saturate to inf, which is the honest representation)
        with np.errstate(over="ignore"):
            terms[tiny] = np.exp(2.0 * np.log(diff[tiny]) - np.log(qm[tiny]))
    return float(terms.sum())


def tolerances() -> Tolerances:
    """The tolerance record used by validation in this module."""
    return DEFAULT_TOLERANCES
