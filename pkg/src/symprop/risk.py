"""Risk harnesses: Monte Carlo and exact expectations of plug-in losses.

Covers single-(distribution, property) risks, the adaptive worst case over a
packing's matched family, the sorted-l1 quality gate every candidate
estimator should clear, the profile-count amplification check for the PML
plug-in, and rate sweeps across sample sizes. Every Monte Carlo result quotes
a standard error and the seed that reproduces it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_BUDGETS, Budgets
from .core import DiscreteDistribution, SampleBatch, sample, sorted_l1, sorted_l1_rows
from .errors import BudgetExceededError, EstimatorError, ValidationError
from .estimators import Estimator
from .packing import (
    DeltaChoice,
    PackingInstance,
    build_packing,
    choose_delta,
    perturb,
    signs_to_bits,
)
from .pml import solve as pml_solve
from .profiles import Profile, enumerate_profiles, profile_of
from .properties import SymmetricProperty, adversarial_property, evaluate, evaluate_rows
from .rng import derive_seed, generator


@dataclass(frozen=True)
class RiskReport:
    value: float
    stderr: float
    method: str  # "exact_enum" or "monte_carlo"
    reps: int
    seed: int
    n: int
    k: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValidationError("stderr must be >= 0")
        if self.method == "exact_enum" and self.stderr != 0.0:
            raise ValidationError("exact results carry stderr 0")


def _loss_samples(
    est: Estimator,
    prop: SymmetricProperty,
    p: DiscreteDistribution,
    n: int,
    reps: int,
    seed: int,
) -> np.ndarray:
    """Per-replicate losses |F(est(X^n)) - F(p)|."""
    if est.is_oracle:
        return np.zeros(reps)
    base = evaluate(prop, p)
    if est.counts_procedure is not None:
        counts = generator(seed, "counts").multinomial(n, p.probs, size=reps)
        rows = est.counts_procedure(counts, n)
        return np.abs(evaluate_rows(prop, rows) - base)
    losses = np.empty(reps)
    for r in range(reps):
        batch_seed = derive_seed(seed, "rep", r)
        batch = sample(p, n, batch_seed)
        try:
            action = est(batch)
        except Exception as exc:  # record the batch for replay
            raise EstimatorError(
                f"estimator {est.name!r} failed on batch seed {batch_seed}",
                batch_seed=batch_seed,
            ) from exc
        losses[r] = abs(evaluate(prop, action) - base)
    return losses


def mc_risk(
    est: Estimator,
    prop: SymmetricProperty,
    p: DiscreteDistribution,
    n: int,
    reps: int,
    seed: int,
) -> RiskReport:
    """Monte Carlo estimate of E |F(est(X^n)) - F(p)| over independent batches."""
    if reps < 2:
        raise ValidationError("mc_risk needs reps >= 2")
    if n < 1:
        raise ValidationError("mc_risk needs n >= 1")
    losses = _loss_samples(est, prop, p, n, reps, seed)
    return RiskReport(
        value=float(losses.mean()),
        stderr=float(losses.std(ddof=1) / math.sqrt(reps)),
        method="monte_carlo",
        reps=reps,
        seed=seed,
        n=n,
        k=p.k,
    )


def _enumerate_actions(
    est: Estimator, n: int, k: int, budgets: Budgets
) -> tuple[np.ndarray, list[DiscreteDistribution]]:
    if k**n > budgets.sequence_cap:
        raise BudgetExceededError(f"{k}**{n} sequences exceed the cap {budgets.sequence_cap}")
    seqs = np.array(list(itertools.product(range(1, k + 1), repeat=n)), dtype=np.int64)
    cache: dict[tuple[int, ...], DiscreteDistribution] = {}
    actions: list[DiscreteDistribution] = []
    for seq in seqs:
        key = tuple(int(x) for x in seq)
        hit = cache.get(key)
        if hit is None:
            hit = est(SampleBatch(draws=seq, n=n, k=k, seed=0))
            cache[key] = hit
        actions.append(hit)
    return seqs, actions


def exact_risk(
    est: Estimator,
    prop: SymmetricProperty,
    p: DiscreteDistribution,
    n: int,
    budgets: Budgets = DEFAULT_BUDGETS,
) -> RiskReport:
    """Exact expectation of the plug-in loss by summing over all k**n sequences."""
    if n < 1:
        raise ValidationError("exact_risk needs n >= 1")
    if est.is_oracle:
        return RiskReport(0.0, 0.0, "exact_enum", 0, 0, n, p.k)
    base = evaluate(prop, p)
    seqs, actions = _enumerate_actions(est, n, p.k, budgets)
    probs = np.prod(p.probs[seqs - 1], axis=1)
    losses = np.array([abs(evaluate(prop, a) - base) for a in actions])
    return RiskReport(
        value=float((probs * losses).sum()),
        stderr=0.0,
        method="exact_enum",
        reps=0,
        seed=0,
        n=n,
        k=p.k,
    )


@dataclass(frozen=True)
class AdaptiveRiskReport:
    """Worst case and average over the packing's matched (p_u, F_u) family."""

    value: float  # max over u
    stderr: float  # stderr of the argmax entry
    average: float
    average_stderr: float
    argmax_bits: str
    per_u: tuple[tuple[str, float, float], ...]
    method: str
    reps: int
    seed: int
    n: int
    k: int
    delta: float
    m: int


def adaptive_risk(
    est: Estimator,
    packing: PackingInstance,
    n: int,
    reps: int,
    seed: int,
) -> AdaptiveRiskReport:
    """Max (and average) over sign vectors u of the risk of est on (p_u, F_u).

    The max over the constructed finite family lower-bounds the adaptive
    worst case; nothing here claims to upper-bound the supremum over all
    1-Lipschitz properties and distributions.
    """
    rows: list[tuple[str, float, float]] = []
    for idx, u in enumerate(packing.sign_vectors):
        prop = adversarial_property(u, packing)
        rep = mc_risk(est, prop, perturb(packing, u), n, reps, derive_seed(seed, "u", idx))
        rows.append((signs_to_bits(u), rep.value, rep.stderr))
    values = np.array([r[1] for r in rows])
    errs = np.array([r[2] for r in rows])
    best = int(np.argmax(values))
    return AdaptiveRiskReport(
        value=float(values[best]),
        stderr=float(errs[best]),
        average=float(values.mean()),
        average_stderr=float(math.sqrt((errs**2).sum()) / len(rows)),
        argmax_bits=rows[best][0],
        per_u=tuple(rows),
        method="monte_carlo",
        reps=reps,
        seed=seed,
        n=n,
        k=packing.k,
        delta=packing.delta,
        m=packing.m,
    )


def _sorted_l1_samples(
    est: Estimator, p: DiscreteDistribution, n: int, reps: int, seed: int
) -> np.ndarray:
    if est.is_oracle:
        return np.zeros(reps)
    if est.counts_procedure is not None:
        counts = generator(seed, "counts").multinomial(n, p.probs, size=reps)
        rows = est.counts_procedure(counts, n)
        return sorted_l1_rows(rows, p)
    out = np.empty(reps)
    for r in range(reps):
        batch_seed = derive_seed(seed, "rep", r)
        batch = sample(p, n, batch_seed)
        out[r] = sorted_l1(p, est(batch))
    return out


@dataclass(frozen=True)
class QualityGateReport:
    """Sorted-l1 risk over the packing family and the implied constant."""

    sup_risk: float
    sup_stderr: float
    implied_a: float
    implied_a_stderr: float
    argmax_label: str
    per_distribution: tuple[tuple[str, float, float], ...]
    n: int
    k: int
    reps: int
    seed: int


def assumption1_check(
    est: Estimator,
    packing: PackingInstance,
    n: int,
    reps: int,
    seed: int,
) -> QualityGateReport:
    """Estimate sup over {center} u {p_u} of E sorted_l1(p, est(X^n)).

    Reports the implied constant, risk / sqrt(k/n); the empirical estimator
    should come in at or below 1.
    """
    if reps < 2:
        raise ValidationError("assumption1_check needs reps >= 2")
    targets: list[tuple[str, DiscreteDistribution]] = [("center", packing.center)]
    targets += [
        (signs_to_bits(u), perturb(packing, u)) for u in packing.sign_vectors
    ]
    rows: list[tuple[str, float, float]] = []
    for idx, (label, p) in enumerate(targets):
        samples = _sorted_l1_samples(est, p, n, reps, derive_seed(seed, "dist", idx))
        rows.append(
            (label, float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(reps)))
        )
    values = np.array([r[1] for r in rows])
    best = int(np.argmax(values))
    scale = math.sqrt(packing.k / n)
    return QualityGateReport(
        sup_risk=float(values[best]),
        sup_stderr=rows[best][2],
        implied_a=float(values[best] / scale),
        implied_a_stderr=rows[best][2] / scale,
        argmax_label=rows[best][0],
        per_distribution=tuple(rows),
        n=n,
        k=packing.k,
        reps=reps,
        seed=seed,
    )


def pml_tail_ceiling(n: int, k: int, eps: float) -> float:
    """Closed-form ceiling on P(sorted_l1(pml plug-in, p) >= 2 eps).

    Combines the (n+1)**k profile-count amplification with the sub-Gaussian
    empirical tail: min(1, 2 exp(k log(n+1) - (n/2) ((eps - sqrt(k/n))_+)^2)).
    """
    slack = max(eps - math.sqrt(k / n), 0.0)
    exponent = k * math.log(n + 1.0) - 0.5 * n * slack * slack
    return min(1.0, 2.0 * math.exp(min(exponent, 700.0)))


@dataclass(frozen=True)
class CompetitiveTailReport:
    """Tail comparison between the PML plug-in and the empirical estimator."""

    eps: float
    profile_count: int
    sup_pml_tail: float  # sup_u P(sorted_l1(pml, p_u) >= 2 eps)
    sup_emp_tail: float  # sup_u P(sorted_l1(emp, p_u) >= eps)
    amplified_emp_tail: float  # profile_count * sup_emp_tail
    holds: bool
    pml_ceiling: float  # pml_tail_ceiling(n, k, eps)
    pml_ceiling_holds: bool
    mcdiarmid_tail: float  # sup_u P(sorted_l1(emp, p_u) - sqrt(k/n) >= eps)
    mcdiarmid_bound: float  # 2 exp(-n eps^2 / 2)
    mcdiarmid_holds: bool
    per_u: tuple[tuple[str, float, float], ...]
    method: str
    n: int
    k: int
    seed: int


def competitive_tail_check(
    packing: PackingInstance | None,
    n: int,
    eps: float,
    reps: int,
    seed: int,
    solver: str = "exact",
    resolution: int = 200,
    budgets: Budgets = DEFAULT_BUDGETS,
    distributions: list[DiscreteDistribution] | None = None,
) -> CompetitiveTailReport:
    """Check the profile-count amplification of the PML plug-in's error tail.

    Exact mode enumerates all k**n sequences and computes, for every family
    member p, the tail probabilities P(sorted_l1(pml, p) >= 2 eps) and
    P(sorted_l1(emp, p) >= eps); the first must not exceed the profile count
    times the second (taken in sup-over-family form). Also overlays the
    sub-Gaussian reference bound 2 exp(-n eps^2 / 2) on the recentered
    empirical tail. The family defaults to the packing's perturbed
    distributions; pass `distributions` explicitly for supports the paired
    construction cannot produce (odd k).
    """
    if eps <= 0:
        raise ValidationError("eps must be > 0")
    if distributions is not None:
        family = [(f"p{i}", p) for i, p in enumerate(distributions)]
    elif packing is not None:
        family = [
            (signs_to_bits(u), perturb(packing, u)) for u in packing.sign_vectors
        ]
    else:
        raise ValidationError("provide a packing or an explicit distribution family")
    if not family or len({p.k for _, p in family}) != 1:
        raise ValidationError("family must be nonempty with one support size")
    k = family[0][1].k
    exact = k**n <= budgets.sequence_cap
    method = "exact_enum" if exact else "monte_carlo"
    profile_count = len(enumerate_profiles(n, k, budgets))
    pml_cache: dict[tuple[int, ...], np.ndarray] = {}

    def pml_dist(phi: Profile) -> np.ndarray:
        hit = pml_cache.get(phi.counts)
        if hit is None:
            hit = pml_solve(
                phi, solver=solver, resolution=resolution, budgets=budgets
            ).distribution.probs
            pml_cache[phi.counts] = hit
        return hit

    shift = math.sqrt(k / n)
    rows: list[tuple[str, float, float]] = []
    md_tails: list[float] = []
    if exact:
        seqs = np.array(
            list(itertools.product(range(1, k + 1), repeat=n)), dtype=np.int64
        )
        pml_rows = np.empty((len(seqs), k))
        emp_rows = np.empty((len(seqs), k))
        for idx, seq in enumerate(seqs):
            batch = SampleBatch(draws=seq, n=n, k=k, seed=0)
            phi = profile_of(batch)
            pml_rows[idx] = pml_dist(phi)
            emp_rows[idx] = np.bincount(seq, minlength=k + 1)[1:] / n
        for label, p_u in family:
            probs = np.prod(p_u.probs[seqs - 1], axis=1)
            pml_stat = sorted_l1_rows(pml_rows, p_u)
            emp_stat = sorted_l1_rows(emp_rows, p_u)
            pml_tail = float(probs[pml_stat >= 2 * eps].sum())
            emp_tail = float(probs[emp_stat >= eps].sum())
            md_tails.append(float(probs[emp_stat - shift >= eps].sum()))
            rows.append((label, pml_tail, emp_tail))
    else:
        if reps < 2:
            raise ValidationError("monte_carlo tail check needs reps >= 2")
        for idx, (label, p_u) in enumerate(family):
            rng = generator(derive_seed(seed, "tail", idx), "counts")
            counts = rng.multinomial(n, p_u.probs, size=reps)
            emp_rows = counts / n
            pml_rows = np.empty_like(emp_rows)
            for r in range(reps):
                phi_counts = tuple(
                    int(c) for c in np.bincount(counts[r], minlength=n + 1)
                )
                pml_rows[r] = pml_dist(Profile(counts=phi_counts, n=n, k=k))
            pml_stat = sorted_l1_rows(pml_rows, p_u)
            emp_stat = sorted_l1_rows(emp_rows, p_u)
            rows.append(
                (
                    label,
                    float((pml_stat >= 2 * eps).mean()),
                    float((emp_stat >= eps).mean()),
                )
            )
            md_tails.append(float((emp_stat - shift >= eps).mean()))
    sup_pml = max(r[1] for r in rows)
    sup_emp = max(r[2] for r in rows)
    amplified = profile_count * sup_emp
    ceiling = pml_tail_ceiling(n, k, eps)
    md_bound = 2.0 * math.exp(-n * eps * eps / 2.0)
    md_tail = max(md_tails)
    return CompetitiveTailReport(
        eps=eps,
        profile_count=profile_count,
        sup_pml_tail=sup_pml,
        sup_emp_tail=sup_emp,
        amplified_emp_tail=amplified,
        holds=bool(sup_pml <= amplified + 1e-12),
        pml_ceiling=ceiling,
        pml_ceiling_holds=bool(sup_pml <= ceiling + 1e-12),
        mcdiarmid_tail=md_tail,
        mcdiarmid_bound=md_bound,
        mcdiarmid_holds=bool(md_tail <= md_bound + 1e-12),
        per_u=tuple(rows),
        method=method,
        n=n,
        k=k,
        seed=seed,
    )


@dataclass(frozen=True)
class RateRow:
    n: int
    k: int
    delta: float
    clamped: bool
    m: int
    value: float
    stderr: float
    ratio_sqrt_kn: float
    ratio_sqrt_klogn: float


def rate_curve(
    est: Estimator,
    n_list: list[int],
    k_rule,
    reps: int,
    seed: int,
    c: float,
) -> list[RateRow]:
    """Adaptive risk across sample sizes, with both candidate rate ratios.

    k_rule maps n to an even support size; delta comes from choose_delta with
    the given constant c. The ratios let callers eyeball which scaling the
    estimator tracks; no asymptotic claim is attached.
    """
    rows: list[RateRow] = []
    for n in n_list:
        k = int(k_rule(n))
        if k < 2 or k % 2 != 0:
            raise ValidationError(f"k_rule produced an invalid support size {k}")
        dc: DeltaChoice = choose_delta(n, k, c)
        packing = build_packing(k, dc.delta)
        rep = adaptive_risk(est, packing, n, reps, derive_seed(seed, "n", n))
        ratio_kn = rep.value / math.sqrt(k / n)
        ratio_klogn = (
            rep.value / math.sqrt(k / (n * math.log(n))) if n > 1 else math.nan
        )
        rows.append(
            RateRow(
                n=n,
                k=k,
                delta=dc.delta,
                clamped=dc.clamped,
                m=packing.m,
                value=rep.value,
                stderr=rep.stderr,
                ratio_sqrt_kn=ratio_kn,
                ratio_sqrt_klogn=ratio_klogn,
            )
        )
    return rows
