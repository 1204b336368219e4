"""Data-procurement auctions with statistical quality verification.

A buyer purchases samples from competing sellers of heterogeneous
quality, ranking them by price per unit of Fisher information.  The
package implements the second-score mechanisms (known quality, reported
quality with ex post verification, and the generalized-loss variant),
the verification statistics and slack bounds, and seeded Monte Carlo
analysis of seller incentives, plus a configuration-driven experiment
runner (``infoprocure --help``).
"""

from .core import (
    OPT_OUT,
    Action,
    AgentType,
    Bounds,
    MechanismParams,
    OptOut,
    Prior,
    Report,
    RngStream,
    n_lower_bound,
    sample_types,
    score,
)
from .mechanism import (
    AuctionOutcome,
    optimal_loss,
    optimal_quantity,
    principal_loss,
    realized_loss,
    relative_regret,
    run_second_score,
    seller_utility,
)
from .simulate import (
    BestResponseCurve,
    KappaEstimate,
    ParticipationCell,
    UtilityEstimate,
    best_response_curve,
    empirical_failure_prob,
    interim_utility,
    kappa,
    kappa_curve,
    opt_in_condition,
    participation_map,
    run_with_verification,
    winning_utility,
)
from .verification import (
    LCB,
    ExactOracle,
    GaussianTailEnvelope,
    SampleVariance,
    VerificationRule,
    gaussian_slack_lower,
    gaussian_slack_upper,
    lcb_statistic,
    normal_quantile,
    sample_variance,
    slack_lower,
    slack_upper,
    verify,
)

__version__ = "0.1.0"
