"""Misbehaviour policies and the gaming-robustness harness.

The policy catalogue covers the classic greedy knobs (smaller CW_min,
fixed contention window with backoff disabled, shortened interframe
space, oversized TXOP bursts) plus a scripted adversary that retargets
its rate window by window.  The robustness harness evaluates the
carry-forward penalty recursion and mean goodput for arbitrary
deviation sequences and exhaustively searches small instances for the
goodput-maximising strategy.
"""

import math
from dataclasses import dataclass, field
from itertools import product

from .dcf import DEFAULT_MAC_PARAMS, DomainError, MacParams, _g

LARGE_TXOP_DEFAULT_US = 6413.0


@dataclass(frozen=True)
class BehaviourPolicy:
    """A station's contention behaviour, reducible to MacParams overrides.

    kind is one of compliant, cwmin_halved, fixed_cw, aifs_sifs,
    large_txop, scripted.  cw applies to fixed_cw; txop_us to
    large_txop; y_sequence to scripted (per-window rate deviation
    targets, cycled if shorter than the run).
    """

    kind: str = "compliant"
    cw: int = 16
    txop_us: float = LARGE_TXOP_DEFAULT_US
    y_sequence: tuple = ()

    def mac_params(self, base=DEFAULT_MAC_PARAMS):
        if self.kind == "compliant":
            return base
        if self.kind == "cwmin_halved":
            # CW_min halved, CW_max untouched, so one extra backoff stage
            return MacParams(cw_min=base.cw_min // 2,
                             max_backoff_stage=base.max_backoff_stage + 1,
                             retry_limit=max(base.retry_limit,
                                             base.max_backoff_stage + 1),
                             aifs_slots=base.aifs_slots,
                             txop_limit_us=base.txop_limit_us)
        if self.kind == "fixed_cw":
            # CW_min = CW_max: binary exponential backoff disabled
            return MacParams(cw_min=self.cw, max_backoff_stage=0,
                             retry_limit=base.retry_limit,
                             aifs_slots=base.aifs_slots,
                             txop_limit_us=base.txop_limit_us)
        if self.kind == "aifs_sifs":
            return MacParams(cw_min=base.cw_min,
                             max_backoff_stage=base.max_backoff_stage,
                             retry_limit=base.retry_limit,
                             aifs_slots=0,
                             txop_limit_us=base.txop_limit_us)
        if self.kind == "large_txop":
            return MacParams(cw_min=base.cw_min,
                             max_backoff_stage=base.max_backoff_stage,
                             retry_limit=base.retry_limit,
                             aifs_slots=base.aifs_slots,
                             txop_limit_us=self.txop_us)
        if self.kind == "scripted":
            # starts compliant; the simulator swaps in per-window overrides
            return base
        raise DomainError(f"unknown behaviour policy {self.kind!r}")


POLICY_KINDS = ("compliant", "cwmin_halved", "fixed_cw", "aifs_sifs",
                "large_txop", "scripted")


@dataclass(frozen=True)
class StrategyTrace:
    """A deviation schedule y(t) = x(t)/fair - 1 with its Theorem bookkeeping.

    upper_bound (Y) must dominate every y value and delta must be an
    integer strictly above 1/alpha + Y for the zero-prefix result to
    bite; horizons T <= delta leave the result vacuous.
    """

    y: tuple
    alpha: float = 0.1
    upper_bound: float = None
    delta: int = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        bound = self.upper_bound
        if bound is None:
            bound = max(self.y) if self.y else 0.0
            object.__setattr__(self, "upper_bound", bound)
        if any(v > bound + 1e-12 for v in self.y):
            raise DomainError("y values exceed the declared upper bound")
        if self.delta is None:
            object.__setattr__(self, "delta", min_delta(self.alpha, bound))
        if self.delta < 1 or self.delta <= 1 / self.alpha + bound:
            raise DomainError("delta must be an integer > 1/alpha + Y")

    @property
    def horizon(self):
        return len(self.y)


def min_delta(alpha, upper_bound):
    """Smallest admissible integer delta > 1/alpha + Y."""
    return math.floor(1 / alpha + upper_bound) + 1


def penalty_sequence(trace):
    """Penalty path [p(0), ..., p(T)] under the un-clamped carry-forward
    recursion p(t+1) = max(0, p(t) + alpha*y(t)), p(0) = 0.

    This is the robustness-analysis form: unlike the live controller it
    never caps at 1, so sustained aggression accumulates debt.
    """
    p = [0.0]
    for v in trace.y:
        p.append(max(0.0, p[-1] + trace.alpha * v))
    return p


def mean_goodput(trace):
    """Mean goodput over [0, T] in units of the fair rate.

    Window t earns (1 + y(t)) weighted by (1 - p(t)) with p(t) taken
    from penalty_sequence, i.e. already integrating window t's own
    deviation.  Weights may go negative once the carried penalty
    exceeds 1; that is the analysis form, applied literally.
    """
    if not trace.y:
        raise DomainError("empty deviation sequence")
    p = penalty_sequence(trace)
    total = sum((1 + v) * (1 - p[t + 1]) for t, v in enumerate(trace.y))
    return total / trace.horizon


def admissible_prefix_sums(y):
    """Theorem hypothesis: every proper prefix sum of y is non-negative."""
    s = 0.0
    for v in y[:-1]:
        s += v
        if s < -1e-12:
            return False
    return True


@dataclass
class PrefixSearchResult:
    best_sequences: list
    best_goodput: float
    prefix_length: int            # T - delta; <= 0 means the claim is vacuous
    zero_prefix_holds: bool       # True when every maximiser zeroes the prefix
    vacuous: bool
    searched: int
    tail_gain: float = 0.0        # S* - 1, the end-game gain left to the cheat


def brute_force_best_prefix(horizon, delta, alpha, upper_bound, grid):
    """Exhaustive goodput maximisation over grid^T restricted to admissible
    sequences, checking the zero-prefix property of every maximiser.

    grid must contain 0 and respect the declared upper bound.  Refuses
    search spaces beyond 1e8 sequences.
    """
    grid = tuple(grid)
    if 0 not in grid and 0.0 not in grid:
        raise DomainError("grid must contain 0")
    if any(v > upper_bound + 1e-12 for v in grid):
        raise DomainError("grid values exceed the upper bound Y")
    if len(grid) ** horizon > 10 ** 8:
        raise DomainError(
            f"search space |grid|^T = {len(grid)}^{horizon} exceeds 1e8")
    if delta <= 1 / alpha + upper_bound:
        raise DomainError("delta must exceed 1/alpha + Y")

    prefix_len = horizon - delta
    best = -math.inf
    maximisers = []
    searched = 0
    for y in product(grid, repeat=horizon):
        if not admissible_prefix_sums(y):
            continue
        searched += 1
        trace = StrategyTrace(y=y, alpha=alpha, upper_bound=upper_bound,
                              delta=delta)
        s = mean_goodput(trace)
        if s > best + 1e-12:
            best = s
            maximisers = [y]
        elif abs(s - best) <= 1e-12:
            maximisers.append(y)

    vacuous = prefix_len <= 0
    holds = vacuous or all(
        all(abs(v) < 1e-12 for v in y[:prefix_len]) for y in maximisers)
    return PrefixSearchResult(best_sequences=maximisers, best_goodput=best,
                              prefix_length=prefix_len,
                              zero_prefix_holds=holds, vacuous=vacuous,
                              searched=searched, tail_gain=best - 1.0)


def scripted_station_rate(y, fair_rate, params=DEFAULT_MAC_PARAMS,
                          estimated_failure=0.0):
    """Fixed-CW override hitting attempt rate (1+y)*fair_rate.

    Inverts the fixed-window attempt curve at the station's current
    failure estimate: at f = 0 this is the closed form W = 2/x - 1,
    otherwise a bisection on W (the curve is decreasing in W).  The
    real-valued window is rounded half-to-even.  Targets at or above 1,
    or beyond what W = 1 can reach, raise DomainError (saturation).
    """
    target = (1 + y) * fair_rate
    if not 0 < target < 1:
        raise DomainError(
            f"target attempt rate {target!r} unreachable: must lie in (0, 1)")

    def fixed_cw_attempt(w):
        return _g(estimated_failure, w, 0, params.retry_limit)

    if fixed_cw_attempt(1.0) < target:
        raise DomainError(
            f"target attempt rate {target!r} exceeds maximum aggressiveness "
            f"(W=1 gives {fixed_cw_attempt(1.0)!r})")
    if estimated_failure == 0:
        w_real = 2.0 / target - 1.0
    else:
        lo, hi = 1.0, 2.0 ** 20
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if fixed_cw_attempt(mid) > target:
                lo = mid
            else:
                hi = mid
        w_real = 0.5 * (lo + hi)
    w = max(1, round(w_real))
    return MacParams(cw_min=w, max_backoff_stage=0,
                     retry_limit=params.retry_limit,
                     aifs_slots=params.aifs_slots,
                     txop_limit_us=params.txop_limit_us)
