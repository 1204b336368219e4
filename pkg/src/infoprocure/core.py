"""Domain types for data-procurement auctions.

Sellers are described by a per-sample cost and an inverse Fisher
information (squared-error units per sample; the variance in the
Gaussian location model).  The buyer ranks participating sellers by the
score ``price * reported_inv_fisher``, the price per unit of Fisher
information.  This module holds the type space, the uniform product
prior, the score, the deterministic lower bound on procured sample
sizes, and the seeded RNG streams used everywhere else.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AgentType",
    "Bounds",
    "MechanismParams",
    "OptOut",
    "OPT_OUT",
    "Prior",
    "Report",
    "Action",
    "RngStream",
    "is_participating",
    "n_lower_bound",
    "sample_types",
    "score",
]


@dataclass(frozen=True)
class Bounds:
    """Compact type-space rectangle ``[c_lo, c_hi] x [v_lo, v_hi]``.

    Every agent type and every participating report must lie inside this
    rectangle, so all scores lie in ``[score_lo, score_hi]``.
    """

    c_lo: float
    c_hi: float
    v_lo: float
    v_hi: float

    def __post_init__(self) -> None:
        if not (0.0 < self.c_lo < self.c_hi):
            raise ValueError(f"need 0 < c_lo < c_hi, got [{self.c_lo}, {self.c_hi}]")
        if not (0.0 < self.v_lo < self.v_hi):
            raise ValueError(f"need 0 < v_lo < v_hi, got [{self.v_lo}, {self.v_hi}]")
        if not math.isfinite(self.c_hi) or not math.isfinite(self.v_hi):
            raise ValueError("bounds must be finite")

    @property
    def score_lo(self) -> float:
        return self.c_lo * self.v_lo

    @property
    def score_hi(self) -> float:
        return self.c_hi * self.v_hi

    def contains(self, cost: float, inv_fisher: float) -> bool:
        return (self.c_lo <= cost <= self.c_hi) and (self.v_lo <= inv_fisher <= self.v_hi)


@dataclass(frozen=True)
class AgentType:
    """A seller's private pair: per-sample cost and inverse Fisher information."""

    cost: float
    inv_fisher: float

    def __post_init__(self) -> None:
        if not (self.cost > 0.0 and self.inv_fisher > 0.0):
            raise ValueError(f"agent type must be strictly positive, got {self}")

    @property
    def true_score(self) -> float:
        """Cost per unit of information under truthful reporting."""
        return self.cost * self.inv_fisher

    def truthful_report(self) -> Report:
        return Report(price=self.cost, reported_inv_fisher=self.inv_fisher)


@dataclass(frozen=True)
class Report:
    """A participating action: a per-sample price bid and a reported inverse quality."""

    price: float
    reported_inv_fisher: float

    def __post_init__(self) -> None:
        if not (self.price > 0.0 and self.reported_inv_fisher > 0.0):
            raise ValueError(f"report fields must be strictly positive, got {self}")


@dataclass(frozen=True)
class OptOut:
    """The action of staying out of the auction (payoff zero)."""


OPT_OUT = OptOut()

Action = Report | OptOut


def is_participating(action: Action) -> bool:
    return isinstance(action, Report)


def score(report: Report) -> float:
    """Price per unit of Fisher information: ``price * reported_inv_fisher``."""
    return report.price * report.reported_inv_fisher


@dataclass(frozen=True)
class Prior:
    """Independent uniform product prior over types.

    ``cost`` and ``inv_fisher`` are ``(lo, hi)`` support intervals.
    Degenerate intervals (``lo == hi``) are allowed and give point
    masses; the induced score distribution is atomless only for
    non-degenerate intervals.
    """

    cost: tuple[float, float]
    inv_fisher: tuple[float, float]

    def __post_init__(self) -> None:
        for name, (lo, hi) in (("cost", self.cost), ("inv_fisher", self.inv_fisher)):
            if not (0.0 < lo <= hi) or not math.isfinite(hi):
                raise ValueError(f"prior {name} interval must satisfy 0 < lo <= hi, got ({lo}, {hi})")

    @property
    def is_degenerate(self) -> bool:
        return self.cost[0] == self.cost[1] or self.inv_fisher[0] == self.inv_fisher[1]

    def bounds(self) -> Bounds:
        """Smallest valid Bounds rectangle containing the support.

        Degenerate intervals are widened by a relative epsilon because
        Bounds requires strict inequalities.
        """
        c_lo, c_hi = self.cost
        v_lo, v_hi = self.inv_fisher
        if c_lo == c_hi:
            c_hi = c_hi * (1.0 + 1e-12)
        if v_lo == v_hi:
            v_hi = v_hi * (1.0 + 1e-12)
        return Bounds(c_lo, c_hi, v_lo, v_hi)


@dataclass(frozen=True)
class MechanismParams:
    """Mechanism configuration.

    beta: accuracy-cost tradeoff weight in the buyer's loss.
    rho: loss exponent; 1 is the root-n loss, values in (0, 1) give the
        slower generalized loss.
    single_bidder_fallback_score: stand-in second score when exactly one
        seller participates.  The natural default is the score upper
        bound of the governing Bounds; see ``from_bounds``.
    tie_break: only "lowest-index" is supported.
    """

    beta: float
    single_bidder_fallback_score: float
    rho: float = 1.0
    tie_break: str = "lowest-index"

    def __post_init__(self) -> None:
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (0.0 < self.rho <= 1.0):
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if not self.single_bidder_fallback_score > 0.0:
            raise ValueError("single_bidder_fallback_score must be positive")
        if self.tie_break != "lowest-index":
            raise ValueError(f"unsupported tie_break rule {self.tie_break!r}")

    @classmethod
    def from_bounds(cls, beta: float, bounds: Bounds, rho: float = 1.0) -> MechanismParams:
        """Params with the fallback score pinned to the score upper bound."""
        return cls(beta=beta, single_bidder_fallback_score=bounds.score_hi, rho=rho)


class RngStream:
    """Counter-based random stream addressed by (seed, path).

    Identical (seed, path) pairs yield bit-identical draws; distinct
    paths yield independent-quality streams (the 128-bit Philox key is a
    SHA-256 digest of the canonically encoded path).  Derivation is pure,
    so streams can be handed to concurrent workers without coordination.
    """

    __slots__ = ("seed", "path")

    def __init__(self, seed: int, path: tuple[str | int | float, ...] = ()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.path = tuple(path)
        for label in self.path:
            if not isinstance(label, (str, int, float)):
                raise TypeError(
                    f"path labels must be str, int or float, got {type(label).__name__}"
                )

    def child(self, *labels: str | int | float) -> RngStream:
        """Derived stream for a sub-computation (replication, agent, purpose...)."""
        return RngStream(self.seed, self.path + labels)

    def key(self) -> np.ndarray:
        """128-bit Philox key for this (seed, path), as two uint64 words."""
        h = hashlib.sha256()
        h.update(self.seed.to_bytes(8, "little"))
        for label in self.path:
            if isinstance(label, bool) or isinstance(label, int):
                b = str(int(label)).encode()
                h.update(b"i")
            elif isinstance(label, float):
                b = repr(label).encode()
                h.update(b"f")
            else:
                b = label.encode()
                h.update(b"s")
            h.update(len(b).to_bytes(4, "little"))
            h.update(b)
        digest = h.digest()
        return np.frombuffer(digest[:16], dtype=np.uint64).copy()

    def generator(self) -> np.random.Generator:
        """NumPy generator over a Philox stream keyed by this path."""
        return np.random.Generator(np.random.Philox(key=self.key()))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, path={self.path!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RngStream):
            return NotImplemented
        return self.seed == other.seed and self.path == other.path

    def __hash__(self) -> int:
        return hash((self.seed, self.path))


def sample_types(prior: Prior, m: int, rng: RngStream) -> list[AgentType]:
    """Draw ``m`` i.i.d. agent types from the prior.

    Costs are drawn first, then inverse qualities, each as one uniform
    block; the draw order is part of the determinism contract.
    """
    if m < 1:
        raise ValueError(f"cannot sample an empty population (m={m})")
    gen = rng.generator()
    costs = gen.uniform(prior.cost[0], prior.cost[1], size=m)
    qualities = gen.uniform(prior.inv_fisher[0], prior.inv_fisher[1], size=m)
    return [AgentType(float(c), float(v)) for c, v in zip(costs, qualities)]


def n_lower_bound(beta: float, bounds: Bounds) -> float:
    """Deterministic lower bound on the procured sample size.

    Any feasible report profile yields a purchase quantity of at least
    ``sqrt(beta) * v_lo / sqrt(score_hi)``: the quantity rule is
    increasing in the winner's reported quality and decreasing in the
    second score, both of which are confined to the bounds rectangle.
    """
    if not beta > 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    return math.sqrt(beta) * bounds.v_lo / math.sqrt(bounds.score_hi)
