"""Monte Carlo evaluation of seller incentives under verification.

The experiments mirror a symmetric environment: a focal seller faces
m - 1 rivals whose types are drawn from the prior and who participate
and report truthfully.  Interim expected utilities, best-response
curves over the reported quality, participation maps over the type
rectangle, empirical verification-failure frequencies, and the
winning-advantage ratio are all estimated from seeded, counter-based
replications, so every result is reproducible and independent of
evaluation order (replications may be spread over threads).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import kernels
from .core import (
    Action,
    AgentType,
    MechanismParams,
    Prior,
    Report,
    RngStream,
)
from .mechanism import AuctionOutcome, run_second_score
from .verification import (
    LCB,
    ExactOracle,
    SampleVariance,
    VerificationRule,
    normal_quantile,
    verify,
)

__all__ = [
    "BestResponseCurve",
    "KappaEstimate",
    "ParticipationCell",
    "UtilityEstimate",
    "best_response_curve",
    "empirical_failure_prob",
    "interim_utility",
    "kappa",
    "kappa_curve",
    "opt_in_condition",
    "participation_map",
    "run_with_verification",
    "winning_utility",
]


@dataclass(frozen=True)
class UtilityEstimate:
    """Monte Carlo mean, standard error and replication count."""

    mean: float
    std_error: float
    reps: int


@dataclass(frozen=True)
class BestResponseCurve:
    report_grid: tuple[float, ...]
    utilities: tuple[UtilityEstimate, ...]
    argmax_report: float


@dataclass(frozen=True)
class ParticipationCell:
    agent_type: AgentType
    argmax_report: float
    optimal_report_utility: UtilityEstimate
    participates: bool


@dataclass(frozen=True)
class KappaEstimate:
    s: float
    value: float
    std_error: float


def _rule_code(rule: VerificationRule) -> tuple[int, float]:
    """Kernel rule id and the normal quantile it needs (0 when unused)."""
    if isinstance(rule, ExactOracle):
        return kernels.RULE_ORACLE, 0.0
    if isinstance(rule, SampleVariance):
        return kernels.RULE_SAMPLE_VARIANCE, 0.0
    if isinstance(rule, LCB):
        return kernels.RULE_LCB, normal_quantile(1.0 - rule.alpha)
    raise TypeError(f"unknown verification rule {rule!r}")


def run_with_verification(
    actions: Sequence[Action],
    true_types: Sequence[AgentType],
    params: MechanismParams,
    rule: VerificationRule,
    rng: RngStream,
) -> tuple[AuctionOutcome, np.ndarray]:
    """One auction followed by the ex post quality test.

    Runs the second-score auction on the actions, draws
    ``max(1, floor(quantity))`` Gaussian samples at the winner's true
    variance (the exact oracle skips data generation), and voids the
    contract on failure.  Returns the outcome (with the voided flag set)
    and per-agent utilities: ``(payment - cost) * quantity`` for a
    passing winner, ``-cost * quantity`` for a voided one, zero for
    everyone else.
    """
    if len(actions) != len(true_types):
        raise ValueError("actions and true_types must have equal length")
    outcome = run_second_score(actions, params)
    utilities = np.zeros(len(actions), dtype=np.float64)
    if not outcome.has_winner:
        return outcome, utilities

    w = outcome.winner
    reported = actions[w].reported_inv_fisher
    true_v = true_types[w].inv_fisher
    if isinstance(rule, ExactOracle):
        passed = verify(rule, (), reported, true_v)
    else:
        n_samples = max(1, int(math.floor(outcome.quantity)))
        gen = rng.child("data").generator()
        samples = math.sqrt(true_v) * gen.standard_normal(n_samples)
        passed = verify(rule, samples, reported)

    outcome = replace(outcome, voided=not passed)
    cost = true_types[w].cost
    if passed:
        utilities[w] = (outcome.unit_payment - cost) * outcome.quantity
    else:
        utilities[w] = -cost * outcome.quantity
    return outcome, utilities


def _utilities_matrix(
    focal_type: AgentType,
    price: float,
    report_grid: np.ndarray,
    prior: Prior,
    m: int,
    params: MechanismParams,
    rule: VerificationRule,
    reps: int,
    rng: RngStream,
) -> np.ndarray:
    rule_id, z_alpha = _rule_code(rule)
    return kernels.mc_utilities(
        focal_type.cost,
        focal_type.inv_fisher,
        price,
        np.asarray(report_grid, dtype=np.float64),
        m,
        params.beta,
        params.rho,
        rule_id,
        z_alpha,
        prior.cost[0],
        prior.cost[1],
        prior.inv_fisher[0],
        prior.inv_fisher[1],
        reps,
        rng.key(),
    )


def _estimate(column: np.ndarray) -> UtilityEstimate:
    reps = column.size
    se = float(np.std(column, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return UtilityEstimate(mean=float(column.mean()), std_error=se, reps=reps)


def interim_utility(
    focal_type: AgentType,
    focal_report: Report,
    prior: Prior,
    m: int,
    params: MechanismParams,
    rule: VerificationRule,
    reps: int,
    rng: RngStream,
) -> UtilityEstimate:
    """Expected utility of one report against truthful rivals.

    Averages the focal seller's realized utility over ``reps``
    replications of rival types, delivered data and the verification
    outcome; losing replications contribute zero.
    """
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    matrix = _utilities_matrix(
        focal_type,
        focal_report.price,
        np.array([focal_report.reported_inv_fisher]),
        prior,
        m,
        params,
        rule,
        reps,
        rng,
    )
    return _estimate(matrix[:, 0])


def best_response_curve(
    focal_type: AgentType,
    report_grid: Sequence[float],
    prior: Prior,
    m: int,
    params: MechanismParams,
    rule: VerificationRule,
    reps: int,
    rng: RngStream,
) -> BestResponseCurve:
    """Interim utility across a grid of quality reports at the truthful price.

    The grid must be strictly increasing and lie within the prior's
    quality support.  All grid points share rival draws and data
    prefixes per replication (common random numbers), so adjacent
    utilities differ only through the mechanism, not through sampling
    noise.  The argmax takes the smallest report on ties.
    """
    grid = np.asarray(report_grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("report grid must be nonempty")
    if not np.all(np.diff(grid) > 0.0):
        raise ValueError("report grid must be strictly increasing")
    v_lo, v_hi = prior.inv_fisher
    if grid[0] < v_lo - 1e-12 or grid[-1] > v_hi + 1e-12:
        raise ValueError(
            f"report grid [{grid[0]}, {grid[-1]}] outside the quality support [{v_lo}, {v_hi}]"
        )
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    matrix = _utilities_matrix(
        focal_type, focal_type.cost, grid, prior, m, params, rule, reps, rng
    )
    estimates = tuple(_estimate(matrix[:, g]) for g in range(grid.size))
    means = np.array([e.mean for e in estimates])
    argmax = int(np.argmax(means))  # first maximum = smallest report
    return BestResponseCurve(
        report_grid=tuple(float(g) for g in grid),
        utilities=estimates,
        argmax_report=float(grid[argmax]),
    )


def default_report_grid(prior: Prior, step: float = 0.25) -> np.ndarray:
    """Quality-report grid spanning the prior support at the given step."""
    v_lo, v_hi = prior.inv_fisher
    count = int(math.floor((v_hi - v_lo) / step + 1e-9)) + 1
    return v_lo + step * np.arange(count)


def participation_map(
    type_grid: Sequence[AgentType],
    prior: Prior,
    m: int,
    params: MechanismParams,
    rule: VerificationRule,
    reps: int,
    rng: RngStream,
    report_step: float = 0.25,
) -> list[ParticipationCell]:
    """Best-response utility and opt-in flag for each type on a grid.

    A type participates when its interim expected utility at the optimal
    quality report is strictly positive (the outside option is zero).
    """
    v_lo, v_hi = prior.inv_fisher
    c_lo, c_hi = prior.cost
    for t in type_grid:
        if not (c_lo <= t.cost <= c_hi and v_lo <= t.inv_fisher <= v_hi):
            raise ValueError(f"type {t} outside the prior rectangle")
    grid = default_report_grid(prior, report_step)
    cells = []
    for i, t in enumerate(type_grid):
        curve = best_response_curve(
            t, grid, prior, m, params, rule, reps, rng.child("cell", i)
        )
        best = curve.utilities[curve.report_grid.index(curve.argmax_report)]
        cells.append(
            ParticipationCell(
                agent_type=t,
                argmax_report=curve.argmax_report,
                optimal_report_utility=best,
                participates=best.mean > 0.0,
            )
        )
    return cells


def empirical_failure_prob(
    true_inv_fisher: float,
    reported_inv_fisher: float,
    n: int,
    rule: VerificationRule,
    reps: int,
    rng: RngStream,
) -> float:
    """Fraction of replications failing verification on fresh Gaussian data."""
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    rule_id, z_alpha = _rule_code(rule)
    failures = kernels.mc_failure_count(
        true_inv_fisher, reported_inv_fisher, n, rule_id, z_alpha, reps, rng.key()
    )
    return failures / reps


def winning_utility(
    beta: float,
    rival_min_score: float,
    cost: float,
    reported_inv_fisher: float,
    pass_prob: float,
) -> float:
    """Analytic conditional winning utility at a fixed rival minimum score.

    ``pass_prob * sqrt(beta * s) - sqrt(beta) * cost * reported / sqrt(s)``:
    the expected payment at the runner-up rate minus the data-provision
    cost, which is incurred whether or not the test passes.
    """
    return pass_prob * math.sqrt(beta * rival_min_score) - math.sqrt(
        beta
    ) * cost * reported_inv_fisher / math.sqrt(rival_min_score)


def _kappa_terms(
    s: float,
    score_support: tuple[float, float],
    m: int,
    reps: int,
    rng: RngStream,
) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = score_support
    if not (0.0 <= lo < hi):
        raise ValueError(f"score support must satisfy 0 <= lo < hi, got {score_support}")
    if s < 0.0 or s >= hi:
        raise ValueError(
            f"conditioning score {s} is degenerate for support ({lo}, {hi})"
        )
    if m < 2:
        raise ValueError(f"need at least 2 agents, got m={m}")
    # given the winner's score s, the m-1 losing scores are i.i.d. from
    # the prior truncated to (s, infinity)
    gen = rng.generator()
    draws = gen.uniform(max(s, lo), hi, size=(reps, m - 1))
    smin = draws.min(axis=1)
    return 1.0 / np.sqrt(smin), np.sqrt(smin)


def kappa(
    s: float,
    score_support: tuple[float, float],
    m: int,
    reps: int,
    rng: RngStream,
) -> float:
    """Winning advantage ratio at score s for a uniform score prior.

    Estimates ``s * E[1/sqrt(S_min')] / E[sqrt(S_min')]`` where S_min'
    is the minimum of m - 1 scores drawn from the prior truncated above
    s.  Small values mean comfortable winning margins.
    """
    inv_root, root = _kappa_terms(s, score_support, m, reps, rng)
    return float(s * inv_root.mean() / root.mean())


def kappa_curve(
    s_values: Sequence[float],
    score_support: tuple[float, float],
    m: int,
    reps: int,
    rng: RngStream,
) -> list[KappaEstimate]:
    """kappa estimates with delta-method standard errors, one per score."""
    out = []
    for i, s in enumerate(s_values):
        inv_root, root = _kappa_terms(s, score_support, m, reps, rng.child("s", i))
        a_bar = inv_root.mean()
        b_bar = root.mean()
        value = float(s * a_bar / b_bar)
        if reps > 1:
            cov = np.cov(inv_root, root, ddof=1)
            ratio = a_bar / b_bar
            var = (s / b_bar) ** 2 * (
                cov[0, 0] - 2.0 * ratio * cov[0, 1] + ratio**2 * cov[1, 1]
            )
            se = float(math.sqrt(max(var, 0.0) / reps))
        else:
            se = 0.0
        out.append(KappaEstimate(s=float(s), value=value, std_error=se))
    return out


def opt_in_condition(kappa_value: float, alpha: float, epsilon: float) -> bool:
    """Truthful participation is individually rational when kappa is strictly
    below ``1 - alpha - epsilon`` (the boundary itself is excluded)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    return kappa_value < 1.0 - alpha - epsilon
