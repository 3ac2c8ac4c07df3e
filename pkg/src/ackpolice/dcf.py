"""Closed-form 802.11 DCF contention models.

Everything here is a pure function of value types: the backoff attempt
probability curve, failure composition under ACK suppression, saturated
fixed points (homogeneous and multi-class), Bianchi-style throughput,
the virtual-MAC failure relation and its inverse, and the sample-count
rule used to size estimation windows.

Units: times are microseconds, rates are bits/s, probabilities are plain
floats in [0, 1].
"""

import math
from dataclasses import dataclass


class DomainError(ValueError):
    """An argument fell outside the mathematical domain of an operation."""


class FixedPointError(RuntimeError):
    """A fixed-point solver failed to converge; carries diagnostics."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class MacParams:
    """Contention configuration of one station class.

    cw_min is the base window W; the window at backoff stage s is
    W * 2**s, capped at stage max_backoff_stage.  retry_limit is the
    number of retransmissions allowed per frame (R), so a frame is
    transmitted at most R+1 times.  aifs_slots counts the idle slots a
    station defers after a busy period (2 = DIFS).  txop_limit_us = 0
    means a single frame per channel access.
    """

    cw_min: int = 32
    max_backoff_stage: int = 5
    retry_limit: int = 7
    aifs_slots: int = 2
    txop_limit_us: float = 0.0

    def __post_init__(self):
        if self.cw_min < 1:
            raise DomainError(f"cw_min must be >= 1, got {self.cw_min}")
        if self.max_backoff_stage < 0:
            raise DomainError("max_backoff_stage must be >= 0")
        if self.retry_limit < self.max_backoff_stage:
            raise DomainError(
                "retry_limit must be >= max_backoff_stage "
                f"(got R={self.retry_limit}, m={self.max_backoff_stage})")
        if self.aifs_slots < 0:
            raise DomainError("aifs_slots must be >= 0")
        if self.txop_limit_us < 0:
            raise DomainError("txop_limit_us must be >= 0")

    @property
    def cw_max(self):
        return self.cw_min * 2 ** self.max_backoff_stage


DEFAULT_MAC_PARAMS = MacParams()


@dataclass(frozen=True)
class PhyTiming:
    """PHY/MAC timing for one channel configuration.

    header_overhead_us is the fixed per-frame airtime that precedes the
    payload bits (PLCP preamble + header plus the MAC header/FCS at the
    data rate).  Collision slots end after an ACK timeout, so
    t_collision excludes SIFS + ACK while t_success includes them.
    """

    slot_sigma_us: float
    sifs_us: float
    difs_us: float
    phy_rate_bps: float
    payload_bytes: int
    header_overhead_us: float
    ack_us: float

    def __post_init__(self):
        if abs(self.difs_us - (self.sifs_us + 2 * self.slot_sigma_us)) > 1e-9:
            raise DomainError("difs must equal sifs + 2*slot_sigma")
        if self.phy_rate_bps <= 0 or self.payload_bytes <= 0:
            raise DomainError("phy_rate_bps and payload_bytes must be positive")
        if self.t_collision_us <= self.slot_sigma_us:
            raise DomainError("t_collision must exceed the idle slot duration")

    @property
    def payload_airtime_us(self):
        return self.payload_bytes * 8 / self.phy_rate_bps * 1e6

    @property
    def t_collision_us(self):
        # ACK-timeout accounting: the medium is held for the frame plus DIFS.
        return self.header_overhead_us + self.payload_airtime_us + self.difs_us

    @property
    def t_success_us(self):
        return self.t_collision_us + self.sifs_us + self.ack_us

    @classmethod
    def dot11b_11m(cls, payload_bytes=1000):
        """HR/DSSS at 11 Mb/s, long preamble, ACK at the 1 Mb/s basic rate."""
        preamble_us = 192.0
        mac_header_us = 28 * 8 / 11e6 * 1e6   # 24 B header + 4 B FCS at 11 Mb/s
        ack_us = preamble_us + 14 * 8 / 1e6 * 1e6
        return cls(slot_sigma_us=20.0, sifs_us=10.0, difs_us=50.0,
                   phy_rate_bps=11e6, payload_bytes=payload_bytes,
                   header_overhead_us=preamble_us + mac_header_us, ack_us=ack_us)

    @classmethod
    def dot11g_54m(cls, payload_bytes=1500):
        """ERP-OFDM at 54 Mb/s, short slots, ACK at the 24 Mb/s basic rate."""
        plcp_us = 20.0
        mac_header_us = 28 * 8 / 54e6 * 1e6
        ack_us = plcp_us + 14 * 8 / 24e6 * 1e6
        return cls(slot_sigma_us=9.0, sifs_us=10.0, difs_us=28.0,
                   phy_rate_bps=54e6, payload_bytes=payload_bytes,
                   header_overhead_us=plcp_us + mac_header_us, ack_us=ack_us)


PHY_PRESETS = {
    "dot11b-11M": PhyTiming.dot11b_11m,
    "dot11g-54M": PhyTiming.dot11g_54m,
}


@dataclass(frozen=True)
class SlotProbabilities:
    """Stationary per-slot channel state split: empty / success / collision."""

    p_empty: float
    p_success: float
    p_collision: float

    def __post_init__(self):
        total = self.p_empty + self.p_success + self.p_collision
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"slot probabilities must sum to 1, got {total!r}")
        for p in (self.p_empty, self.p_success, self.p_collision):
            if not -1e-15 <= p <= 1 + 1e-15:
                raise DomainError(f"slot probability out of [0,1]: {p!r}")


@dataclass(frozen=True)
class EstimatorConfig:
    """Precision target for the virtual-MAC failure estimator (default 95%)."""

    z_score: float = 1.96
    epsilon: float = 0.01

    def __post_init__(self):
        if self.z_score <= 0:
            raise DomainError("z_score must be positive")
        if not 0 < self.epsilon < 0.5:
            raise DomainError("epsilon must lie in (0, 0.5)")


# Guard width for the removable singularity of the attempt curve at f = 1/2
# and for the f -> 1 limit used when ACK suppression is total.
_SINGULARITY_EPS = 1e-9


def _g(f, cw_min, m, retries):
    """Attempt probability on the closed interval [0, 1].

    The textbook rational form has a (1-2f) factor in both numerator and
    denominator; near f = 1/2 we switch to the algebraically cancelled
    form (the 1-(2f)^(m+1) factor expanded as a geometric sum) to avoid
    catastrophic cancellation, and at f -> 1 we use the analytic limit.
    """
    W = cw_min
    R = retries
    if abs(1 - 2 * f) < _SINGULARITY_EPS:
        num = 2 * (1 - f ** (R + 1))
        den = (W * (1 - f) * sum((2 * f) ** k for k in range(m + 1))
               + (1 - f ** (R + 1))
               + W * 2 ** m * f ** (m + 1) * (1 - f ** (R - m)))
        return num / den
    if 1 - f < _SINGULARITY_EPS:
        return 2 * (R + 1) / (W * (2 ** (m + 1) - 1) + (R + 1)
                              + W * 2 ** m * (R - m))
    num = 2 * (1 - 2 * f) * (1 - f ** (R + 1))
    den = (W * (1 - (2 * f) ** (m + 1)) * (1 - f)
           + (1 - 2 * f) * (1 - f ** (R + 1))
           + W * 2 ** m * f ** (m + 1) * (1 - 2 * f) * (1 - f ** (R - m)))
    return num / den


def attempt_probability(f, params=DEFAULT_MAC_PARAMS):
    """Stationary transmission probability of a saturated station seeing
    per-attempt failure probability f."""
    if not 0 <= f < 1:
        raise DomainError(f"failure probability must lie in [0, 1), got {f!r}")
    return _g(f, params.cw_min, params.max_backoff_stage, params.retry_limit)


def effective_failure(f_collision, p_nack):
    """Per-attempt failure when collisions and ACK suppression combine."""
    if not 0 <= f_collision <= 1:
        raise DomainError(f"f_collision out of [0, 1]: {f_collision!r}")
    if not 0 <= p_nack <= 1:
        raise DomainError(f"p_nack out of [0, 1]: {p_nack!r}")
    return 1 - (1 - f_collision) * (1 - p_nack)


def normalized_attempt(f, p_nack, params=DEFAULT_MAC_PARAMS):
    """Attempt rate under suppression relative to the unsuppressed rate.

    Accepts p_nack = 1 (total suppression), where the numerator takes the
    analytic f -> 1 limit of the attempt curve.
    """
    if not 0 <= f < 1:
        raise DomainError(f"failure probability must lie in [0, 1), got {f!r}")
    if not 0 <= p_nack <= 1:
        raise DomainError(f"p_nack out of [0, 1]: {p_nack!r}")
    eff = effective_failure(f, p_nack)
    suppressed = _g(eff, params.cw_min, params.max_backoff_stage, params.retry_limit)
    return suppressed / attempt_probability(f, params)


def homogeneous_fixed_point(n, params=DEFAULT_MAC_PARAMS):
    """Solve x = g(f), f = 1 - (1-x)^(n-1) for n identical saturated stations.

    Bisection on f: the residual f - (1 - (1-g(f))^(n-1)) is increasing
    because g is decreasing, so the root is bracketed by [0, 1).
    Returns (x, f).
    """
    if n < 1:
        raise DomainError(f"station count must be >= 1, got {n}")
    if n == 1:
        return attempt_probability(0.0, params), 0.0
    lo, hi = 0.0, 1.0 - 1e-12
    iterations = 0
    for iterations in range(1, 201):
        mid = 0.5 * (lo + hi)
        residual = mid - (1 - (1 - attempt_probability(mid, params)) ** (n - 1))
        if residual < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    f = 0.5 * (lo + hi)
    x = attempt_probability(f, params)
    check = abs(f - (1 - (1 - x) ** (n - 1)))
    if check > 1e-10:
        raise FixedPointError(
            f"homogeneous fixed point did not converge for n={n}",
            iterations=iterations, residual=check)
    return x, f


def heterogeneous_fixed_point(classes, damping=0.5, tol=1e-10, max_iter=200):
    """Multi-class saturated fixed point.

    classes is a list of (count, MacParams, p_nack) tuples; stations in
    a class share one attempt probability.  Damped successive
    substitution on the x vector; damping 0.5 suppresses the oscillation
    multi-class systems otherwise show.  Returns a list of (x, f) pairs,
    one per class, where f is the collision-failure probability (before
    ACK suppression is composed in).
    """
    if not classes:
        raise DomainError("need at least one station class")
    for count, _, p_nack in classes:
        if count < 1:
            raise DomainError(f"class count must be >= 1, got {count}")
        if not 0 <= p_nack <= 1:
            raise DomainError(f"p_nack out of [0, 1]: {p_nack!r}")

    def failures(xs):
        fs = []
        for i in range(len(classes)):
            prod = 1.0
            for j, (count, _, _) in enumerate(classes):
                exponent = count - 1 if j == i else count
                prod *= (1 - xs[j]) ** exponent
            fs.append(1 - prod)
        return fs

    def response(fs):
        out = []
        for (count, params, p_nack), f in zip(classes, fs):
            eff = effective_failure(min(f, 1.0), p_nack)
            out.append(_g(eff, params.cw_min, params.max_backoff_stage,
                          params.retry_limit))
        return out

    xs = [0.05] * len(classes)
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        target = response(failures(xs))
        residual = max(abs(a - b) for a, b in zip(xs, target))
        if residual < tol:
            break
        xs = [damping * a + (1 - damping) * b for a, b in zip(xs, target)]
    if residual >= tol:
        raise FixedPointError(
            f"heterogeneous fixed point did not converge for {len(classes)} classes",
            iterations=max_iter, residual=residual)
    return list(zip(response(failures(xs)), failures(xs)))


def throughput(xs, timing):
    """Per-station saturation throughput for stations attempting with
    probabilities xs.  Returns (list of bits/s, SlotProbabilities)."""
    for x in xs:
        if not 0 <= x < 1:
            raise DomainError(f"attempt probability out of [0, 1): {x!r}")
    p_empty = math.prod(1 - x for x in xs)
    success = []
    for i, x in enumerate(xs):
        others = math.prod(1 - xj for j, xj in enumerate(xs) if j != i)
        success.append(x * others)
    p_success = sum(success)
    probs = SlotProbabilities(p_empty, p_success, max(0.0, 1 - p_empty - p_success))
    slot_us = expected_slot_duration(probs, timing)
    payload_bits = timing.payload_bytes * 8
    rates = [s * payload_bits / (slot_us * 1e-6) for s in success]
    return rates, probs


def virtual_failure(f1, params=DEFAULT_MAC_PARAMS):
    """Failure probability a non-transmitting shadow station observes when
    a real fair station would see f1."""
    if not 0 <= f1 < 1:
        raise DomainError(f"f1 must lie in [0, 1), got {f1!r}")
    return 1 - (1 - attempt_probability(f1, params)) * (1 - f1)


def invert_virtual_failure(f_v, params=DEFAULT_MAC_PARAMS):
    """Recover the fair-station failure probability from the virtual one.

    The map f1 -> f_v is strictly increasing with f_v(0) = g(0), so any
    observable below g(0) means fewer than zero contenders and is a
    domain error.  Bisection to 1e-12 interval width.
    """
    floor = attempt_probability(0.0, params)
    if not floor - 1e-12 <= f_v < 1:
        raise DomainError(
            f"virtual failure {f_v!r} outside [{floor!r}, 1): "
            "implies fewer than zero contenders")
    if f_v <= floor:
        return 0.0
    lo, hi = 0.0, 1.0 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if virtual_failure(mid, params) < f_v:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    f1 = 0.5 * (lo + hi)
    if abs(virtual_failure(f1, params) - f_v) > 1e-9:
        raise FixedPointError("virtual failure inversion did not converge",
                              residual=abs(virtual_failure(f1, params) - f_v))
    return f1


def fair_attempt_rate(f_v, params=DEFAULT_MAC_PARAMS):
    """Maximum attempt rate a fair saturated station could achieve given an
    observed virtual failure probability."""
    return attempt_probability(invert_virtual_failure(f_v, params), params)


def required_samples(cfg=EstimatorConfig()):
    """Bernoulli sample count for precision epsilon at the configured
    confidence, N = ceil((z / 2*epsilon)^2)."""
    value = (cfg.z_score / (2 * cfg.epsilon)) ** 2
    # round before ceil so exact targets like 9604 are not bumped by one ulp
    return math.ceil(round(value, 6))


def expected_slot_duration(probs, timing):
    """Mean channel slot duration in microseconds."""
    return (probs.p_empty * timing.slot_sigma_us
            + probs.p_success * timing.t_success_us
            + probs.p_collision * timing.t_collision_us)


def txop_burst_frames(params, timing):
    """Frames per channel access allowed by a TXOP budget.

    The budget covers first data symbol through last ACK: k frames cost
    k*(header+payload+SIFS+ACK) + (k-1)*SIFS.  Zero budget means one
    frame per access.
    """
    if params.txop_limit_us <= 0:
        return 1
    per_frame = (timing.header_overhead_us + timing.payload_airtime_us
                 + timing.sifs_us + timing.ack_us)
    k = 1
    while (k + 1) * per_frame + k * timing.sifs_us <= params.txop_limit_us:
        k += 1
    return k
