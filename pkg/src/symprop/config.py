"""Numeric tolerances and resource budgets, collected in one place.

Every tolerance used by validation or by a Monte Carlo comparison lives in the
records below so that tests and the CLI share a single source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # absolute tolerance for "entries sum to 1" on probability vectors
    simplex_atol: float = 1e-12
    # attained PML likelihood must match a recomputation this closely
    likelihood_atol: float = 1e-10
    # below this, probability terms are accumulated in log domain
    underflow_threshold: float = 1e-280
    # below this, divergence terms switch to log-domain evaluation
    divergence_underflow: float = 1e-300
    # Monte Carlo assertions use this many standard errors of slack
    mc_sigma: float = 4.0
    # slack for exact-enumeration inequality checks
    exact_slack: float = 1e-10


@dataclass(frozen=True)
class Budgets:
    # enumerate_profiles refuses (n, k) whose partition count exceeds this
    partition_cap: int = 10**6
    # exact risk / lemma verification refuses k**n above this
    sequence_cap: int = 10**7
    # mutual information enumeration: hypotheses x count-vectors cap
    mi_state_cap: int = 10**7
    # PML grid search: number of sorted-simplex grid points cap
    grid_cap: int = 10**7
    # rejection sampling retry cap for membership-set draws
    rejection_cap: int = 10**6
    # gv_packing refuses 2**k_half above this
    gv_cap: int = 2**20


DEFAULT_TOLERANCES = Tolerances()
DEFAULT_BUDGETS = Budgets()
