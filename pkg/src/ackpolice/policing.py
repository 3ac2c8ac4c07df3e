"""AP-side penalty state machine driving ACK suppression.

Each station carries an unbounded penalty p that integrates the relative
deviation of its measured rate from the fair rate; the ACK-drop
probability is the clamp min(p, 1).  The surplus above 1 is deliberately
kept (carry-forward) so aggression is repaid even after the station
backs down or leaves and returns.  Escalation moves from probabilistic
ACK dropping to dropping data as well, and finally to disassociation
after a configurable number of consecutive fully-suppressed windows.
"""

import enum
from dataclasses import dataclass, field, replace


class EstimationFailure(RuntimeError):
    """The fair-rate estimate was unavailable for a window; update skipped."""


class Escalation(enum.Enum):
    CONTINUE = "continue"
    DROP_DATA_TOO = "drop_data"
    DISASSOCIATE = "disassociate"


@dataclass(frozen=True)
class ControllerConfig:
    alpha: float = 0.1
    update_period_s: float = 10.0
    disassociation_threshold: int = 6

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.update_period_s <= 0:
            raise ValueError("update_period_s must be positive")
        if self.disassociation_threshold < 1:
            raise ValueError("disassociation_threshold must be >= 1")


@dataclass(frozen=True)
class PenaltyState:
    station_id: str
    penalty: float = 0.0
    windows_at_full_suppression: int = 0

    @property
    def p_nack(self):
        return min(self.penalty, 1.0)


@dataclass(frozen=True)
class RateMeasurement:
    station_id: str
    measured_rate: float
    fair_rate: float
    window_slots: int


def update_penalty(state, meas, cfg):
    """One controller step: p' = max(0, p + alpha*(measured/fair - 1)).

    Raises EstimationFailure when no usable fair rate is available, in
    which case the caller keeps the previous state (stale estimates must
    not feed the integrator).
    """
    if meas.fair_rate is None or meas.fair_rate <= 0:
        raise EstimationFailure(
            f"no fair-rate estimate for station {state.station_id}")
    penalty = max(0.0, state.penalty
                  + cfg.alpha * (meas.measured_rate / meas.fair_rate - 1.0))
    fully = min(penalty, 1.0) >= 1.0
    windows = state.windows_at_full_suppression + 1 if fully else 0
    return replace(state, penalty=penalty, windows_at_full_suppression=windows)


def should_ack(state, u):
    """ACK decision for one received frame given a uniform draw in [0, 1):
    suppressed with probability exactly p_nack."""
    return u >= state.p_nack


def escalation_check(state, cfg):
    """Escalation ladder: full suppression also drops data; sustained full
    suppression disassociates."""
    if state.p_nack >= 1.0:
        if state.windows_at_full_suppression >= cfg.disassociation_threshold:
            return Escalation.DISASSOCIATE
        return Escalation.DROP_DATA_TOO
    return Escalation.CONTINUE


@dataclass
class PolicingController:
    """Penalty bookkeeping for a set of associated stations.

    Live states are keyed by station id; on disassociation the state is
    archived and restored verbatim if the same id reassociates, so
    penalties survive departure.  The archive is unbounded: the network
    is assumed to authenticate clients, so identities cannot be churned
    to shed penalty.
    """

    config: ControllerConfig = field(default_factory=ControllerConfig)
    live: dict = field(default_factory=dict)
    archive: dict = field(default_factory=dict)

    def on_reassociate(self, station_id, initial_penalty=0.0):
        """Associate a station, restoring any archived penalty."""
        if station_id in self.archive:
            state = self.archive.pop(station_id)
        else:
            state = PenaltyState(station_id, penalty=initial_penalty)
        self.live[station_id] = state
        return state

    def on_disassociate(self, station_id):
        state = self.live.pop(station_id)
        self.archive[station_id] = state
        return state

    def state(self, station_id):
        return self.live[station_id]

    def p_nack(self, station_id):
        return self.live[station_id].p_nack

    def update(self, meas):
        """Apply one window's measurement; returns (state, escalation).

        On estimation failure the state is left untouched and the
        escalation for the unchanged state is returned.
        """
        state = self.live[meas.station_id]
        state = update_penalty(state, meas, self.config)
        self.live[meas.station_id] = state
        return state, escalation_check(state, self.config)
