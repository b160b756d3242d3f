"""Cost, latency, and root-cause belief models.

All operations are pure functions on immutable values. The belief is a
discrete histogram over the normalized root-cause distance d in [0, 1]:
d close to 0 means the cause sits next to the reported error, d close to 1
means it sits near the start of the program.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

logger = logging.getLogger(__name__)

_MASS_TOL = 1e-9

# Front-loaded histogram: errors are usually caused nearby, with a long tail
# of causes far back in the program. 10 equal-width bins over d in [0, 1].
DEFAULT_PRIOR_MASSES = (0.25, 0.15, 0.10, 0.08, 0.08, 0.08, 0.08, 0.06, 0.06, 0.06)


class DomainError(ValueError):
    """Inputs outside an operation's domain."""


@dataclass(frozen=True)
class Belief:
    """Discrete distribution over normalized root-cause distance.

    ``bins`` is an ordered tuple of (d_center, mass) with strictly
    increasing centers and masses summing to 1.
    """

    bins: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        total = sum(m for _, m in self.bins)
        if abs(total - 1.0) > _MASS_TOL:
            raise DomainError(f"belief masses sum to {total}, expected 1")
        centers = [d for d, _ in self.bins]
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise DomainError("bin centers must be strictly increasing")
        if any(m < 0 for _, m in self.bins):
            raise DomainError("bin masses must be non-negative")

    def cum_mass(self, x: float) -> float:
        """Total mass of root causes strictly closer than distance ``x``."""
        return sum(m for d, m in self.bins if d < x)

    @property
    def masses(self) -> tuple[float, ...]:
        return tuple(m for _, m in self.bins)

    @property
    def centers(self) -> tuple[float, ...]:
        return tuple(d for d, _ in self.bins)


@dataclass(frozen=True)
class CostModelParams:
    """Speed and overhead constants for the latency/token-cost models.

    gen_bps: generator speed, bytes per second
    gen_delay_s: fixed generator startup delay, seconds
    chk_bps: checker speed, bytes per second
    ckpt_interval: checker checkpoint interval, bytes
    ckpt_stall_s: stall incurred when materializing one checkpoint, seconds
    chk_delay_s: checker startup overhead, seconds
    q: per-attempt repair success probability once the root cause is reached
    """

    gen_bps: float
    gen_delay_s: float
    chk_bps: float
    ckpt_interval: float
    ckpt_stall_s: float
    chk_delay_s: float
    q: float = 0.5

    def __post_init__(self) -> None:
        if self.gen_bps <= 0 or self.chk_bps <= 0:
            raise DomainError("speeds must be positive")
        if self.ckpt_interval <= 0:
            raise DomainError("checkpoint interval must be positive")
        if not (0 < self.q <= 1):
            raise DomainError("q must be in (0, 1]")
        if min(self.gen_delay_s, self.ckpt_stall_s, self.chk_delay_s) < 0:
            raise DomainError("overheads must be non-negative")


@dataclass(frozen=True)
class ErrorTarget:
    """The error a repair episode is currently aimed at."""

    offset: int
    category: str


def norm_distance(c: int, e: int) -> float:
    """Normalized rollback distance (e - c) / e for a restart at offset c."""
    if not 0 <= c < e:
        raise DomainError(f"need 0 <= c < e, got c={c} e={e}")
    return (e - c) / e


def p_success(c: int, e: int, belief: Belief, q: float) -> float:
    """Probability that one repair attempt from c fixes the error at e."""
    return q * belief.cum_mass(norm_distance(c, e))


def p_fail(c: int, e: int, belief: Belief, q: float) -> float:
    return 1.0 - p_success(c, e, belief, q)


def cond_fail(belief: Belief, c_f: int, e: int, q: float) -> Belief:
    """Posterior over root-cause distance after a failed attempt from c_f.

    Causes the rollback reached (d < x(c_f, e)) are down-weighted by (1 - q);
    causes it did not reach keep their mass. x_f <= 0 (a start at or past the
    error) carries no information and returns the prior unchanged.
    """
    x_f = (e - c_f) / e if e > 0 else 0.0
    if x_f <= 0:
        return belief
    scaled = [
        (d, m * (1.0 - q) if d < x_f else m) for d, m in belief.bins
    ]
    total = sum(m for _, m in scaled)
    if total <= 0.0:
        logger.warning(
            "conditioning on failure at x=%.4f eliminated all mass; "
            "falling back to a point mass at the deepest bin",
            x_f,
        )
        last = belief.bins[-1][0]
        return Belief(tuple((d, 1.0 if d == last else 0.0) for d, _ in belief.bins))
    return Belief(tuple((d, m / total) for d, m in scaled))


def gen_latency(n: float, p: CostModelParams) -> float:
    """Time for the generator to produce n bytes."""
    if n < 0:
        raise DomainError("byte count must be non-negative")
    return n / p.gen_bps + p.gen_delay_s


def chk_latency(n: float, p: CostModelParams) -> float:
    """Time for the checker to start and process n bytes, with stalls for
    the checkpoints materialized along the way."""
    if n < 0:
        raise DomainError("byte count must be non-negative")
    return n / p.chk_bps + p.ckpt_stall_s * n / p.ckpt_interval + p.chk_delay_s


def latency(c: int, e: int, a_c: int, p: CostModelParams) -> float:
    """End-to-end latency of a repair attempt from c targeting offset e.

    The generator produces the suffix (e - c) while the checker replays from
    the nearest checkpoint a_c <= c; the slower side dominates.
    """
    if not a_c <= c < e:
        raise DomainError(f"need a_c <= c < e, got a_c={a_c} c={c} e={e}")
    return max(gen_latency(e - c, p), chk_latency(e - a_c, p))


def token_cost(c: int, e: int, a_c: int, p: CostModelParams) -> float:
    """Estimated generated bytes consumed by a repair attempt from c.

    The base cost is the suffix length; checker lag converts into extra
    generated bytes at the generator's speed.
    """
    lag = latency(c, e, a_c, p) - gen_latency(e - c, p)
    return (e - c) + p.gen_bps * lag


def is_top_level(
    new: ErrorTarget,
    cur: Optional[ErrorTarget],
    theta: float,
    use_cat: bool,
) -> bool:
    """Whether a new error represents progress to a new repair target.

    True when there is no current target, or when the new error lies more
    than ``theta`` bytes past it and (if category matching is enabled) has a
    different category.
    """
    if cur is None:
        return True
    if new.offset - cur.offset <= theta:
        return False
    return not use_cat or new.category != cur.category


def uniform_prior(n_bins: int = 10) -> Belief:
    if n_bins < 1:
        raise DomainError("need at least one bin")
    step = 1.0 / n_bins
    return Belief(
        tuple(((i + 0.5) * step, 1.0 / n_bins) for i in range(n_bins))
    )


def default_prior() -> Belief:
    """Built-in root-cause prior: front-loaded near the error, long tail."""
    n = len(DEFAULT_PRIOR_MASSES)
    step = 1.0 / n
    return Belief(
        tuple(((i + 0.5) * step, m) for i, m in enumerate(DEFAULT_PRIOR_MASSES))
    )


def prior_from_rows(rows: Sequence[dict]) -> Belief:
    """Build a belief from histogram rows [{"d_max": ..., "mass": ...}, ...].

    Rows partition [0, 1] by upper edge; each bin's center is the midpoint of
    its interval. Masses are normalized.
    """
    if not rows:
        raise DomainError("empty histogram spec")
    edges = [float(r["d_max"]) for r in rows]
    masses = [float(r["mass"]) for r in rows]
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise DomainError("d_max values must be strictly increasing")
    if edges[-1] > 1.0 + 1e-12 or edges[0] <= 0:
        raise DomainError("d_max values must lie in (0, 1]")
    total = sum(masses)
    if total <= 0:
        raise DomainError("histogram mass must be positive")
    lows = [0.0] + edges[:-1]
    return Belief(
        tuple(
            ((lo + hi) / 2.0, m / total)
            for lo, hi, m in zip(lows, edges, masses)
        )
    )


def load_prior(path: str) -> Belief:
    with open(path, encoding="utf-8") as fh:
        return prior_from_rows(json.load(fh))
