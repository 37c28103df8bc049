"""Generalized Fano machinery: bound evaluation and its brute-force audit.

The bound lower-bounds the worst-case expected loss of any estimator over a
finite hypothesis family with per-hypothesis losses, a separation that only
holds on a membership subset of actions, and the mutual information between
the hypothesis index and the data. verify_lemma recomputes every ingredient
by enumeration (or Monte Carlo) and checks the bound against the actual risk.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import DEFAULT_BUDGETS, DEFAULT_TOLERANCES, Budgets
from .core import DiscreteDistribution, SampleBatch, sample
from .errors import BudgetExceededError, ValidationError
from .estimators import Estimator
from .packing import PackingInstance, covers_center_intervals, perturb
from .profiles import enumerate_profiles, profile_probability
from .properties import SymmetricProperty, adversarial_property, plugin_error
from .rng import derive_seed


@dataclass(frozen=True)
class FanoInputs:
    """Ingredients of the bound: separation, membership floor, family size, MI."""

    separation: float
    p_min: float
    m: int
    mi: float

    def __post_init__(self):
        if self.separation < 0:
            raise ValidationError("separation must be >= 0")
        if not (0 < self.p_min <= 1):
            raise ValidationError("p_min must lie in (0, 1]")
        if self.m < 2:
            raise ValidationError("the hypothesis family needs m >= 2")
        if self.mi < 0:
            raise ValidationError("mutual information must be >= 0")


def _bound_raw(separation: float, p_min: float, m: int, mi: float) -> float:
    return separation / 2.0 * (p_min - (mi + p_min * math.log(2.0)) / math.log(m))


def fano_bound(inputs: FanoInputs) -> float:
    """Raw bound value; callers clamp at zero for reporting.

    With p_min = 1 and mi = 0 this reduces to the classical Fano form
    separation/2 * (1 - log2/log m).
    """
    return _bound_raw(inputs.separation, inputs.p_min, inputs.m, inputs.mi)


@dataclass(frozen=True, eq=False)
class FiniteExperiment:
    """M hypothesis distributions with matched losses and a membership test."""

    hypotheses: tuple[DiscreteDistribution, ...]
    losses: tuple[SymmetricProperty, ...]
    n: int
    action_set_test: Callable[[DiscreteDistribution], bool]

    def __post_init__(self):
        if len(self.hypotheses) != len(self.losses):
            raise ValidationError("hypotheses and losses must have equal length")
        if not self.hypotheses:
            raise ValidationError("experiment needs at least one hypothesis")
        ks = {p.k for p in self.hypotheses}
        if len(ks) != 1:
            raise ValidationError("hypotheses must share one support size")
        if self.n < 0:
            raise ValidationError("n must be >= 0")

    @property
    def m(self) -> int:
        return len(self.hypotheses)

    @property
    def k(self) -> int:
        return self.hypotheses[0].k


def experiment_from_packing(
    packing: PackingInstance, n: int, m: int | None = None
) -> FiniteExperiment:
    """Hypotheses and losses for the first m sign vectors of a packing."""
    chosen = packing.sign_vectors if m is None else packing.sign_vectors[:m]
    if m is not None and m > packing.m:
        raise ValidationError(f"packing holds only {packing.m} sign vectors")
    return FiniteExperiment(
        hypotheses=tuple(perturb(packing, u) for u in chosen),
        losses=tuple(adversarial_property(u, packing) for u in chosen),
        n=n,
        action_set_test=lambda q: covers_center_intervals(q, packing),
    )


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def mutual_information_exact(
    exp: FiniteExperiment,
    budgets: Budgets = DEFAULT_BUDGETS,
    observable: str = "sequence",
) -> float:
    """Exact I(U; X^n) for U uniform over the hypotheses, in nats.

    The sequence computation groups the k**n sequences by their count vector
    and weights each group with its multinomial coefficient, which is exact
    and exponentially cheaper than raw sequence enumeration. observable
    "profile" instead treats the profile of the sample as the observation.
    """
    n, k, m = exp.n, exp.k, exp.m
    if n == 0 or m == 1:
        return 0.0
    if observable == "profile":
        space = enumerate_profiles(n, k, budgets)
        table = np.array(
            [[profile_probability(p, phi) for phi in space] for p in exp.hypotheses]
        )
        return _mi_from_table(table)
    if observable != "sequence":
        raise ValidationError(f"unknown observable {observable!r}")
    states = math.comb(n + k - 1, k - 1)
    if states * m > budgets.mi_state_cap:
        raise BudgetExceededError(
            f"mutual information needs {states * m} weighted states, over the cap "
            f"{budgets.mi_state_cap}"
        )
    comps = np.array(list(_compositions(n, k)), dtype=np.int64)
    weights = np.array(
        [float(_multinomial_coefficient(n, row)) for row in comps]
    )
    loglik = np.empty((comps.shape[0], m))
    for col, p in enumerate(exp.hypotheses):
        probs = p.probs
        with np.errstate(divide="ignore"):
            logp = np.where(probs > 0, np.log(np.where(probs > 0, probs, 1.0)), -np.inf)
        finite = comps @ np.where(np.isfinite(logp), logp, 0.0)
        dead = (comps[:, probs == 0] > 0).any(axis=1) if np.any(probs == 0) else False
        loglik[:, col] = np.where(dead, -np.inf, finite)
    peak = loglik.max(axis=1)
    alive = np.isfinite(peak)
    total = 0.0
    for s in np.nonzero(alive)[0]:
        row = loglik[s]
        logmix = peak[s] + math.log(np.exp(row - peak[s]).sum()) - math.log(m)
        for u in range(m):
            if np.isfinite(row[u]):
                total += weights[s] * math.exp(row[u]) * (row[u] - logmix)
    return max(total / m, 0.0)


def _multinomial_coefficient(n: int, counts: np.ndarray) -> int:
    out = math.factorial(n)
    for c in counts:
        out //= math.factorial(int(c))
    return out


def _mi_from_table(table: np.ndarray) -> float:
    """MI of a (hypotheses x outcomes) conditional probability table, uniform prior."""
    m = table.shape[0]
    mix = table.mean(axis=0)
    total = 0.0
    for u in range(m):
        mask = table[u] > 0
        total += float(
            (table[u][mask] * (np.log(table[u][mask]) - np.log(mix[mask]))).sum()
        )
    return max(total / m, 0.0)


def test_rule(a: DiscreteDistribution, exp: FiniteExperiment) -> int:
    """Index of the hypothesis whose loss the action minimizes; ties pick the lowest."""
    if not exp.action_set_test(a):
        raise ValidationError("action lies outside the membership set")
    losses = [plugin_error(exp.losses[i], exp.hypotheses[i], a) for i in range(exp.m)]
    return int(np.argmin(losses))


@dataclass(frozen=True)
class LemmaReport:
    """Everything verify_lemma measured, plus the verdict."""

    p_min: float
    mi: float
    delta: float
    lhs_risk: float
    fano_bound: float
    satisfied: bool
    applicable: bool
    method: str
    reps: int
    seed: int
    p_min_per_hypothesis: tuple[float, ...]
    lhs_per_hypothesis: tuple[float, ...]
    lhs_stderr: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "p_min": self.p_min,
                "mi": self.mi,
                "delta": self.delta,
                "lhs_risk": self.lhs_risk,
                "fano_bound": self.fano_bound,
                "satisfied": self.satisfied,
                "applicable": self.applicable,
                "method": self.method,
                "reps": self.reps,
                "seed": self.seed,
                "lhs_stderr": self.lhs_stderr,
            }
        )


def verify_lemma(
    exp: FiniteExperiment,
    estimator: Estimator,
    seed: int,
    method: str = "auto",
    reps: int = 10_000,
    budgets: Budgets = DEFAULT_BUDGETS,
) -> LemmaReport:
    """Audit the bound against an estimator's actual risk.

    Measures the membership floor p_min, the exact mutual information, the
    separation over the estimator's realized in-membership actions, and the
    worst-case expected loss, then checks risk >= bound. A measured p_min of
    zero makes the bound inapplicable; the report says so and carries the
    degenerate (nonpositive) bound value.
    """
    if estimator.is_oracle:
        raise ValidationError("lemma verification needs a data-driven estimator")
    if exp.m < 2:
        raise ValidationError("lemma verification needs at least two hypotheses")
    if exp.n < 1:
        raise ValidationError("lemma verification needs n >= 1")
    n, k, m = exp.n, exp.k, exp.m
    exact_possible = k**n <= budgets.sequence_cap
    if method == "auto":
        method = "exact" if exact_possible else "monte_carlo"
    if method == "exact" and not exact_possible:
        raise BudgetExceededError(
            f"{k}**{n} sequences exceed the cap {budgets.sequence_cap}"
        )

    if method == "exact":
        seqs = np.array(
            list(itertools.product(range(1, k + 1), repeat=n)), dtype=np.int64
        )
        cache: dict[tuple[int, ...], tuple[bool, list[float]]] = {}
        member = np.empty(len(seqs), dtype=bool)
        losses = np.empty((len(seqs), m))
        for row, seq in enumerate(seqs):
            key = tuple(int(x) for x in seq)
            hit = cache.get(key)
            if hit is None:
                action = estimator(SampleBatch(draws=seq, n=n, k=k, seed=0))
                inside = bool(exp.action_set_test(action))
                per_i = [
                    plugin_error(exp.losses[i], exp.hypotheses[i], action)
                    for i in range(m)
                ]
                hit = (inside, per_i)
                cache[key] = hit
            member[row], losses[row] = hit[0], hit[1]
        seq_probs = np.stack(
            [np.prod(p.probs[seqs - 1], axis=1) for p in exp.hypotheses]
        )
        p_min_each = tuple(float(x) for x in (seq_probs * member).sum(axis=1))
        lhs_each = tuple(float(x) for x in (seq_probs * losses.T).sum(axis=1))
        delta = _pairwise_separation(losses[member])
        lhs_stderr = 0.0
    else:
        if reps < 2:
            raise ValidationError("monte_carlo verification needs reps >= 2")
        p_min_list: list[float] = []
        lhs_list: list[float] = []
        se_list: list[float] = []
        member_losses: list[np.ndarray] = []
        for i, p in enumerate(exp.hypotheses):
            inside_count = 0
            draws_losses = np.empty(reps)
            for r in range(reps):
                batch = sample(p, n, derive_seed(seed, "hyp", i, "rep", r))
                action = estimator(batch)
                inside = bool(exp.action_set_test(action))
                inside_count += inside
                per_i = [
                    plugin_error(exp.losses[j], exp.hypotheses[j], action)
                    for j in range(m)
                ]
                draws_losses[r] = per_i[i]
                if inside:
                    member_losses.append(np.asarray(per_i))
            p_min_list.append(inside_count / reps)
            lhs_list.append(float(draws_losses.mean()))
            se_list.append(float(draws_losses.std(ddof=1) / math.sqrt(reps)))
        p_min_each = tuple(p_min_list)
        lhs_each = tuple(lhs_list)
        stacked = np.stack(member_losses) if member_losses else np.empty((0, m))
        delta = _pairwise_separation(stacked)
        lhs_stderr = se_list[int(np.argmax(lhs_list))]

    p_min = min(p_min_each)
    lhs = max(lhs_each)
    mi = mutual_information_exact(exp, budgets)
    bound = _bound_raw(delta, p_min, m, mi)
    slack = (
        DEFAULT_TOLERANCES.exact_slack
        if method == "exact"
        else 3.0 * lhs_stderr + DEFAULT_TOLERANCES.exact_slack
    )
    return LemmaReport(
        p_min=p_min,
        mi=mi,
        delta=delta,
        lhs_risk=lhs,
        fano_bound=bound,
        satisfied=bool(lhs >= bound - slack),
        applicable=p_min > 0,
        method=method,
        reps=0 if method == "exact" else reps,
        seed=seed,
        p_min_per_hypothesis=p_min_each,
        lhs_per_hypothesis=lhs_each,
        lhs_stderr=lhs_stderr,
    )


def _pairwise_separation(member_losses: np.ndarray) -> float:
    """Min over hypothesis pairs and realized member actions of the loss sum."""
    if member_losses.size == 0:
        return 0.0
    m = member_losses.shape[1]
    best = math.inf
    for i in range(m):
        for j in range(i + 1, m):
            best = min(best, float((member_losses[:, i] + member_losses[:, j]).min()))
    return best
