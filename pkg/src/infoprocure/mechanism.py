"""Second-score auction logic.

Pure functions over immutable inputs: scoring, winner selection,
second-score payment, the endogenous purchase quantity, the buyer's
loss, and first-best benchmarks.  The root-n loss (``rho = 1``) and the
generalized loss with exponent ``rho`` in (0, 1) share one code path.
Ex post verification is deliberately not handled here; see
``infoprocure.simulate.run_with_verification`` for the composed
auction-with-verification pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import Action, MechanismParams, Report, is_participating, score

__all__ = [
    "AuctionOutcome",
    "optimal_loss",
    "optimal_quantity",
    "principal_loss",
    "realized_loss",
    "relative_regret",
    "run_second_score",
    "seller_utility",
]


@dataclass(frozen=True)
class AuctionOutcome:
    """Result of one second-score auction.

    When nobody participates, ``winner`` is None and the numeric fields
    are NaN; callers must check.  ``voided`` is always False here (only
    the verification pipeline can void a contract).
    """

    winner: int | None
    winner_score: float
    second_score: float
    unit_payment: float
    quantity: float
    voided: bool = False

    @property
    def has_winner(self) -> bool:
        return self.winner is not None


NO_WINNER = AuctionOutcome(
    winner=None,
    winner_score=math.nan,
    second_score=math.nan,
    unit_payment=math.nan,
    quantity=math.nan,
)


def optimal_quantity(beta: float, inv_fisher: float, unit_price: float, rho: float = 1.0) -> float:
    """Loss-minimizing sample size at a fixed per-sample price.

    Minimizes ``beta * (V / n)**rho + p * n`` over n.  For ``rho = 1``
    this is the square-root rule ``sqrt(beta * V / p)``; in general the
    first-order condition gives ``(beta * rho * V**rho / p)**(1/(rho+1))``.
    """
    if min(beta, inv_fisher, unit_price) <= 0.0:
        raise ValueError("beta, inv_fisher and unit_price must be positive")
    if rho == 1.0:
        return math.sqrt(beta * inv_fisher / unit_price)
    if not (0.0 < rho < 1.0):
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    return (beta * rho * inv_fisher**rho / unit_price) ** (1.0 / (rho + 1.0))


def principal_loss(
    beta: float,
    true_inv_fisher: float,
    quantity: float,
    unit_payment: float,
    rho: float = 1.0,
) -> float:
    """Buyer's loss ``beta * (V_true / n)**rho + p * n``."""
    if quantity <= 0.0:
        raise ValueError(f"quantity must be positive, got {quantity}")
    return beta * (true_inv_fisher / quantity) ** rho + unit_payment * quantity


def optimal_loss(beta: float, score_value: float, rho: float = 1.0) -> float:
    """Loss from buying optimally at per-information price ``score_value``.

    For ``rho = 1`` this is ``2 * sqrt(beta * s)``.  The general closed
    form, obtained by substituting the optimal quantity into the loss,
    is ``(1 + rho) * rho**(-rho/(rho+1)) * beta**(1/(rho+1)) * s**(rho/(rho+1))``.
    Evaluated at the lowest truthful score it is the first-best
    benchmark; at the second score it is the truthful mechanism's loss.
    """
    if score_value <= 0.0:
        raise ValueError(f"score must be positive, got {score_value}")
    if rho == 1.0:
        return 2.0 * math.sqrt(beta * score_value)
    if not (0.0 < rho < 1.0):
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    e = rho / (rho + 1.0)
    return (1.0 + rho) * rho**-e * beta ** (1.0 / (rho + 1.0)) * score_value**e


def relative_regret(realized_loss: float, beta: float, first_best_score: float) -> float:
    """Relative gap of a realized loss to the first-best ``2*sqrt(beta*s)``."""
    if first_best_score <= 0.0:
        raise ValueError("first_best_score must be positive")
    fb = 2.0 * math.sqrt(beta * first_best_score)
    return (realized_loss - fb) / fb


def run_second_score(actions: Sequence[Action], params: MechanismParams) -> AuctionOutcome:
    """Run the second-score auction on a profile of actions.

    The winner is the participating agent with the lowest score
    ``price * reported_inv_fisher`` (ties go to the lowest index).  The
    unit payment is the runner-up score divided by the winner's reported
    inverse quality, so that score-wise the winner is paid the runner-up
    rate; the quantity is the optimal sample size at that payment.  With
    a single participant, the runner-up score is replaced by the
    configured fallback.  An empty opt-in set yields the no-winner
    outcome with NaN payment fields.
    """
    participants = [(i, a) for i, a in enumerate(actions) if is_participating(a)]
    if not participants:
        return NO_WINNER

    scores = [(score(r), i) for i, r in participants]
    winner_score, winner = min(scores)  # ties resolve to the lowest index
    losing = [s for s, i in scores if i != winner]
    second = min(losing) if losing else params.single_bidder_fallback_score

    reported = next(r.reported_inv_fisher for i, r in participants if i == winner)
    payment = second / reported
    if params.rho == 1.0:
        quantity = math.sqrt(params.beta) * reported / math.sqrt(second)
    else:
        quantity = (params.beta * params.rho / second) ** (1.0 / (params.rho + 1.0)) * reported
    return AuctionOutcome(
        winner=winner,
        winner_score=winner_score,
        second_score=second,
        unit_payment=payment,
        quantity=quantity,
    )


def realized_loss(outcome: AuctionOutcome, true_inv_fisher: float, params: MechanismParams) -> float:
    """Buyer's loss at an auction outcome, evaluated at the winner's true quality.

    For ``rho = 1`` this equals ``(1 + V/V_reported) * sqrt(beta * s2)``,
    reducing to ``2 * sqrt(beta * s2)`` under a truthful quality report.
    """
    if not outcome.has_winner:
        raise ValueError("no winner: loss is undefined")
    return principal_loss(
        params.beta, true_inv_fisher, outcome.quantity, outcome.unit_payment, params.rho
    )


def seller_utility(outcome: AuctionOutcome, agent_index: int, cost: float) -> float:
    """Seller's net utility ``(payment - cost) * quantity``; zero for losers."""
    if outcome.winner != agent_index:
        return 0.0
    base = (outcome.unit_payment - cost) * outcome.quantity
    return -cost * outcome.quantity if outcome.voided else base
