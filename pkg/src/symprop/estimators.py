"""Distribution estimators: pure maps from a sample batch to a distribution.

An estimator may optionally carry a counts-based implementation operating on
rows of per-symbol counts; the risk harnesses then sample multinomial counts
directly instead of materializing individual draws. Both code paths must
agree (the batch path is the reference and tests enforce the agreement).

Estimators must be deterministic given (batch, config). A randomized
estimator folds its randomness into the batch's seed stream, e.g. via
rng.generator(batch.seed, "estimator"), so replays stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .core import DiscreteDistribution, SampleBatch
from .errors import ValidationError


@dataclass(frozen=True, eq=False)
class Estimator:
    """Deterministic map SampleBatch -> DiscreteDistribution.

    counts_procedure, when set, maps an integer matrix of per-symbol counts
    (rows summing to n) to a float matrix of probability rows. is_oracle marks
    the data-ignoring baseline that returns the true distribution; the risk
    harness realizes it, since a batch alone cannot reveal the truth.
    """

    name: str
    procedure: Callable[[SampleBatch], DiscreteDistribution] | None
    config: Mapping[str, Any] = field(default_factory=dict)
    counts_procedure: Callable[[np.ndarray, int], np.ndarray] | None = None
    is_oracle: bool = False

    def __call__(self, batch: SampleBatch) -> DiscreteDistribution:
        if self.is_oracle or self.procedure is None:
            raise ValidationError(f"estimator {self.name!r} has no batch procedure")
        return self.procedure(batch)


def batch_counts(batch: SampleBatch) -> np.ndarray:
    return np.bincount(batch.draws, minlength=batch.k + 1)[1:]


def empirical_estimator() -> Estimator:
    """Relative frequencies of the observed symbols."""

    def from_batch(batch: SampleBatch) -> DiscreteDistribution:
        return DiscreteDistribution(batch_counts(batch) / batch.n)

    def from_counts(counts: np.ndarray, n: int) -> np.ndarray:
        return np.asarray(counts, dtype=float) / n

    return Estimator(
        name="empirical", procedure=from_batch, counts_procedure=from_counts
    )


def constant_estimator(q: DiscreteDistribution, name: str | None = None) -> Estimator:
    """Ignores the data and always returns q."""

    def from_batch(batch: SampleBatch) -> DiscreteDistribution:
        if batch.k != q.k:
            raise ValidationError("constant estimator: support size mismatch")
        return q

    def from_counts(counts: np.ndarray, n: int) -> np.ndarray:
        rows = np.asarray(counts).shape[0]
        return np.broadcast_to(q.probs, (rows, q.k)).copy()

    return Estimator(
        name=name or "constant",
        procedure=from_batch,
        config={"q": [float(x) for x in q.probs]},
        counts_procedure=from_counts,
    )


def oracle_estimator() -> Estimator:
    """Returns the true distribution; the zero-risk baseline for harness tests."""
    return Estimator(name="identity-oracle", procedure=None, is_oracle=True)
