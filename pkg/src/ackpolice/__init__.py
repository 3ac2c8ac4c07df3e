"""ackpolice: 802.11 DCF contention models, a slot-level simulator, and an
AP-side ACK-suppression policing controller with its robustness harness."""

from .adversary import (BehaviourPolicy, StrategyTrace, brute_force_best_prefix,
                        mean_goodput, min_delta, penalty_sequence,
                        scripted_station_rate)
from .dcf import (DEFAULT_MAC_PARAMS, DomainError, EstimatorConfig,
                  FixedPointError, MacParams, PhyTiming, SlotProbabilities,
                  attempt_probability, effective_failure, expected_slot_duration,
                  fair_attempt_rate, heterogeneous_fixed_point,
                  homogeneous_fixed_point, invert_virtual_failure,
                  normalized_attempt, required_samples, throughput,
                  txop_burst_frames, virtual_failure)
from .policing import (ControllerConfig, Escalation, EstimationFailure,
                       PenaltyState, PolicingController, RateMeasurement,
                       escalation_check, should_ack, update_penalty)
from .scenario import (ScenarioConfig, ScenarioError, StationSpec, TrafficSpec,
                       parse_scenario, serialize_scenario)
from .sim import SimTrace, Simulation, SlotOutcome, capture_winner, run_simulation

__version__ = "0.1.0"
