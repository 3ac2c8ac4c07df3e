"""Slot-granular simulator of DCF contention with AP-side ACK policing.

Channel model.  Time advances in channel slots: an idle slot lasts
sigma; a success or collision slot lasts the frame exchange including
the trailing DIFS.  Backoff counters follow the slotted abstraction of
the saturation models this simulator is validated against: a station
not involved in a transmission decrements once per channel slot, busy
or idle.  The DIFS tail embedded in every busy slot additionally counts
as two slot-times, which a station spends on its post-busy AIFS defer;
compliant stations (aifs_slots = 2) therefore lose nothing extra after
a busy slot, while an AIFS=SIFS cheat (aifs_slots = 0) converts those
two slot-times into backoff decrements and gains exactly the head start
the shorter wait buys.  Stations whose AIFS exceeds DIFS carry the
difference as real defer slots.

Randomness.  One seeded generator drives everything, with a fixed draw
order: (1) initial backoff at join, in station-id order for simultaneous
joins; (2) traffic draws (on-off idle period at each off transition,
Bernoulli inter-arrival gap at join and after each arrival); (3) per
busy slot: the capture draw when a unique highest-priority transmitter
exists among >= 2, then one ACK uniform per received frame (drawn only
when policing is enabled or the sender has a forced ACK-drop
probability), then backoff redraws for all transmitters in id order,
then the virtual MAC redraw if it attempted.  Idle slots draw nothing,
so runs may fast-forward through idle stretches without affecting the
stream; a run is a pure function of (scenario, seed).

Measurement.  Two per-window rate units are supported: 'oracle' counts
frame transmission attempts per slot (fair rate g(f1)); 'realistic'
counts frames received with a correct FCS per slot (fair rate
g(f1)*(1-f1)), which is what AP hardware can actually observe and the
default.  The fair rate comes from the embedded virtual MAC: a shadow
compliant station that never transmits, whose would-be attempts are
scored against the real channel and inverted through the analytic
virtual-failure relation.
"""

import math
import random
from dataclasses import dataclass, field

from . import dcf
from .adversary import scripted_station_rate
from .dcf import DomainError, attempt_probability, invert_virtual_failure, txop_burst_frames
from .policing import (Escalation, PolicingController, RateMeasurement,
                       should_ack)

IDLE = "idle"
SUCCESS = "success"
COLLISION = "collision"


@dataclass(frozen=True)
class SlotOutcome:
    kind: str
    duration_us: float
    station_ids: tuple = ()
    frames: int = 0
    acked_frames: int = 0


@dataclass
class SimClock:
    slot_index: int = 0
    sim_time_us: float = 0.0
    window_index: int = 0


def capture_winner(priorities, p_capture, u):
    """Index of the capturing transmitter among >= 2, or None for a plain
    collision.  Requires a unique strictly-maximal positive priority; the
    capture succeeds when the uniform draw u falls below p_capture."""
    best = max(priorities)
    if best <= 0 or priorities.count(best) != 1:
        return None
    return priorities.index(best) if u < p_capture else None


class _Station:
    __slots__ = (
        "spec", "sid", "params", "base_params", "capture_priority",
        "forced_p_nack", "cw_min", "max_stage", "retry_limit", "aifs",
        "burst_frames", "active", "backoff", "stage", "retry", "defer",
        "traffic_kind", "queue", "carrying", "on", "on_until_us",
        "off_until_us", "arrival_prob", "next_arrival_slot",
        "scripted_windows", "w_attempts", "w_fcs", "w_acked",
        "t_attempts", "t_fcs", "t_acked", "active_slots", "active_us",
        "_since_slot", "_since_us", "ever_active")

    def __init__(self, spec, timing):
        self.spec = spec
        self.sid = spec.sid
        self.base_params = spec.policy.mac_params()
        self.capture_priority = spec.capture_priority
        self.forced_p_nack = spec.forced_p_nack
        self.traffic_kind = spec.traffic.kind
        self.arrival_prob = spec.traffic.arrival_prob
        self.scripted_windows = 0
        self.active = False
        self.ever_active = False
        self.queue = 0
        self.carrying = False
        self.on = False
        self.on_until_us = 0.0
        self.off_until_us = 0.0
        self.next_arrival_slot = -1
        self.w_attempts = self.w_fcs = self.w_acked = 0
        self.t_attempts = self.t_fcs = self.t_acked = 0
        self.active_slots = 0
        self.active_us = 0.0
        self._since_slot = 0
        self._since_us = 0.0
        self.backoff = 0
        self.stage = 0
        self.retry = 0
        self.defer = 0
        self.set_params(self.base_params, timing)

    def set_params(self, params, timing):
        self.params = params
        self.cw_min = params.cw_min
        self.max_stage = params.max_backoff_stage
        self.retry_limit = params.retry_limit
        self.aifs = params.aifs_slots
        self.burst_frames = txop_burst_frames(params, timing)

    def has_frame(self):
        if self.traffic_kind == "saturated":
            return True
        if self.traffic_kind == "onoff":
            return self.on or self.carrying
        return self.queue > 0


class _VirtualMac:
    __slots__ = ("backoff", "stage", "retry", "defer", "attempts", "failures",
                 "cw_min", "max_stage", "retry_limit", "aifs")

    def __init__(self, params):
        self.cw_min = params.cw_min
        self.max_stage = params.max_backoff_stage
        self.retry_limit = params.retry_limit
        self.aifs = params.aifs_slots
        self.backoff = 0
        self.stage = 0
        self.retry = 0
        self.defer = 0
        self.attempts = 0
        self.failures = 0


@dataclass
class SimTrace:
    """Everything a run produces: per-window controller rows, per-window
    channel rows, per-station summaries, and run totals."""

    seed: int
    station_rows: list = field(default_factory=list)
    window_rows: list = field(default_factory=list)
    summary_rows: list = field(default_factory=list)
    totals: dict = field(default_factory=dict)


class Simulation:
    """One deterministic run of a scenario.

    Use run() for a whole trace, or step_slot() to drive the channel one
    slot at a time in tests.  A single instance is single-threaded; run
    many instances for sweeps.
    """

    # embedded DIFS tail of every busy slot, in slot-times
    _DIFS_SLOTS = 2

    def __init__(self, scenario, max_idle_batch=None):
        self.scenario = scenario
        self.timing = scenario.timing()
        self.rng = random.Random(scenario.seed)
        self.clock = SimClock()
        self.policing = scenario.policing_enabled
        self.mode = scenario.measurement_mode
        self.controller = PolicingController(scenario.controller)
        self.stations = sorted((_Station(s, self.timing) for s in scenario.stations),
                               key=lambda st: st.sid)
        self.vmac = _VirtualMac(dcf.DEFAULT_MAC_PARAMS)
        self._max_idle_batch = max_idle_batch or 10 ** 9
        t = self.timing
        self._sigma = t.slot_sigma_us
        self._hdr_payload = t.header_overhead_us + t.payload_airtime_us
        self._sifs = t.sifs_us
        self._ack = t.ack_us
        self._difs = t.difs_us
        self._t_c = t.t_collision_us
        self.end_us = scenario.duration_s * 1e6
        self.window_us = scenario.controller.update_period_s * 1e6
        self.window_end_us = self.window_us
        self._win_start_slot = 0
        self._win_idle = self._win_succ = self._win_coll = 0
        self.idle_slots = 0
        self.success_slots = 0
        self.collision_slots = 0
        self._g0 = attempt_probability(0.0)
        self.trace = SimTrace(seed=scenario.seed)
        # events: (time_us, order, kind, station); leaves before joins at the
        # same instant so a station can re-associate back to back
        evs = []
        for st in self.stations:
            evs.append((st.spec.join_s * 1e6, 1, st.sid, "join", st))
            if st.spec.leave_s is not None:
                evs.append((st.spec.leave_s * 1e6, 0, st.sid, "leave", st))
        self.events = sorted(evs)
        self._ev_next = 0

    # -- association ------------------------------------------------------

    def _join(self, st):
        st.active = True
        st.ever_active = True
        st._since_slot = self.clock.slot_index
        st._since_us = self.clock.sim_time_us
        st.stage = st.retry = 0
        st.defer = 0
        self.controller.on_reassociate(st.sid, initial_penalty=st.spec.initial_penalty)
        if st.traffic_kind == "onoff":
            st.on = True
            st.on_until_us = self.clock.sim_time_us + st.spec.traffic.active_s * 1e6
        elif st.traffic_kind == "bernoulli":
            st.queue = 0
            self._draw_arrival(st)
        self._redraw(st)

    def _leave(self, st):
        if not st.active:
            return
        st.active = False
        st.active_slots += self.clock.slot_index - st._since_slot
        st.active_us += self.clock.sim_time_us - st._since_us
        if st.sid in self.controller.live:
            self.controller.on_disassociate(st.sid)

    # -- randomness helpers ------------------------------------------------

    def _redraw(self, st):
        st.backoff = int(self.rng.random() * (st.cw_min << st.stage))

    def _draw_arrival(self, st):
        # geometric gap: identical in law to one Bernoulli draw per slot
        u = self.rng.random()
        gap = int(math.log(1.0 - u) / math.log(1.0 - st.arrival_prob)) + 1
        st.next_arrival_slot = self.clock.slot_index + gap

    # -- traffic and schedule boundaries ------------------------------------

    def _process_due(self):
        now = self.clock.sim_time_us
        while now >= self.window_end_us:
            self.close_window()
        while self._ev_next < len(self.events) and self.events[self._ev_next][0] <= now:
            _, _, _, kind, st = self.events[self._ev_next]
            self._ev_next += 1
            if kind == "join":
                if not st.active:
                    self._join(st)
            else:
                self._leave(st)
        for st in self.stations:
            if not st.active:
                continue
            if st.traffic_kind == "onoff":
                if st.on and now >= st.on_until_us:
                    st.on = False
                    mean_us = st.spec.traffic.idle_mean_s * 1e6
                    st.off_until_us = now - math.log(1.0 - self.rng.random()) * mean_us
                if not st.on and now >= st.off_until_us:
                    st.on = True
                    st.on_until_us = now + st.spec.traffic.active_s * 1e6
                    if not st.carrying:
                        st.stage = st.retry = 0
                        st.defer = 0
                        self._redraw(st)
            elif st.traffic_kind == "bernoulli":
                while st.next_arrival_slot <= self.clock.slot_index:
                    was_empty = st.queue == 0
                    st.queue += 1
                    self._draw_arrival(st)
                    if was_empty:
                        st.stage = st.retry = 0
                        st.defer = 0
                        self._redraw(st)

    def _next_boundary_slots(self):
        """Idle slots we may advance before any schedule boundary is due."""
        now = self.clock.sim_time_us
        horizon = min(self.window_end_us, self.end_us)
        if self._ev_next < len(self.events):
            horizon = min(horizon, self.events[self._ev_next][0])
        cap = max(1, math.ceil((horizon - now) / self._sigma))
        for st in self.stations:
            if not st.active:
                continue
            if st.traffic_kind == "onoff":
                bound = st.on_until_us if st.on else st.off_until_us
                cap = min(cap, max(1, math.ceil((bound - now) / self._sigma)))
            elif st.traffic_kind == "bernoulli":
                cap = min(cap, max(1, st.next_arrival_slot - self.clock.slot_index))
        return cap

    # -- frame bookkeeping ---------------------------------------------------

    def _complete_frame(self, st):
        st.stage = st.retry = 0
        st.carrying = False
        if st.traffic_kind == "bernoulli":
            st.queue -= 1

    def _fail_frame(self, st):
        st.retry += 1
        if st.retry > st.retry_limit:
            # retry limit exhausted: discard the frame, start fresh
            st.stage = st.retry = 0
            st.carrying = False
            if st.traffic_kind == "bernoulli":
                st.queue -= 1
        else:
            st.stage = min(st.stage + 1, st.max_stage)
            if st.traffic_kind == "onoff":
                st.carrying = True

    def _ack_decision(self, st):
        if st.forced_p_nack is not None:
            return self.rng.random() >= st.forced_p_nack
        if self.policing:
            return should_ack(self.controller.live[st.sid], self.rng.random())
        return True

    def _post_busy(self, st, transmitted):
        """End-of-busy-slot counter maintenance for one contending station."""
        if not transmitted:
            # lockstep: the busy slot itself counts one slot-time
            if st.defer > 0:
                st.defer -= 1
            elif st.backoff > 0:
                st.backoff -= 1
        st.defer = st.aifs
        ticks = self._DIFS_SLOTS
        burn = min(ticks, st.defer)
        st.defer -= burn
        ticks -= burn
        if ticks:
            st.backoff = max(0, st.backoff - ticks)

    def _post_busy_vmac(self, attempted):
        vm = self.vmac
        if not attempted:
            if vm.defer > 0:
                vm.defer -= 1
            elif vm.backoff > 0:
                vm.backoff -= 1
        vm.defer = vm.aifs
        ticks = self._DIFS_SLOTS
        burn = min(ticks, vm.defer)
        vm.defer -= burn
        ticks -= burn
        if ticks:
            vm.backoff = max(0, vm.backoff - ticks)

    def _vmac_redraw(self):
        vm = self.vmac
        vm.backoff = int(self.rng.random() * (vm.cw_min << vm.stage))

    # -- slot engines ---------------------------------------------------------

    def _success_burst(self, winner):
        """Frames of one channel access; returns (duration, frames, acked)."""
        frames = acked = 0
        dur = 0.0
        while frames < winner.burst_frames and winner.has_frame():
            if frames:
                dur += self._sifs
            frames += 1
            winner.w_attempts += 1
            winner.t_attempts += 1
            winner.w_fcs += 1
            winner.t_fcs += 1
            dur += self._hdr_payload
            if self._ack_decision(winner):
                acked += 1
                winner.w_acked += 1
                winner.t_acked += 1
                dur += self._sifs + self._ack
                self._complete_frame(winner)
            else:
                # a suppressed ACK ends the burst; the frame must be retried
                self._fail_frame(winner)
                break
        dur += self._difs
        return dur, frames, acked

    def _busy_slot(self, transmitters):
        vm_attempted = self.vmac.defer == 0 and self.vmac.backoff == 0
        winner = None
        if len(transmitters) == 1:
            winner = transmitters[0]
        elif self.scenario.p_capture > 0:
            prios = [st.capture_priority for st in transmitters]
            if max(prios) > 0 and prios.count(max(prios)) == 1:
                idx = capture_winner(prios, self.scenario.p_capture, self.rng.random())
                winner = transmitters[idx] if idx is not None else None
        if winner is not None:
            duration, frames, acked = self._success_burst(winner)
            kind = SUCCESS
            sids = (winner.sid,)
            for st in transmitters:
                if st is not winner:
                    st.w_attempts += 1
                    st.t_attempts += 1
                    self._fail_frame(st)
            self.success_slots += 1
            self._win_succ += 1
        else:
            duration, frames, acked = self._t_c, 0, 0
            kind = COLLISION
            sids = tuple(st.sid for st in transmitters)
            for st in transmitters:
                st.w_attempts += 1
                st.t_attempts += 1
                self._fail_frame(st)
            self.collision_slots += 1
            self._win_coll += 1
        for st in transmitters:
            self._redraw(st)
        for st in self.stations:
            if st.active and st.has_frame():
                self._post_busy(st, st in transmitters)
        if vm_attempted:
            self.vmac.attempts += 1
            self.vmac.failures += 1
            vm = self.vmac
            vm.retry += 1
            if vm.retry > vm.retry_limit:
                vm.stage = vm.retry = 0
            else:
                vm.stage = min(vm.stage + 1, vm.max_stage)
            self._vmac_redraw()
        self._post_busy_vmac(vm_attempted)
        self.clock.slot_index += 1
        self.clock.sim_time_us += duration
        return SlotOutcome(kind, duration, sids, frames, acked)

    def _idle_slots(self, k):
        """Advance k idle slots at once; no entity fires inside the batch."""
        for st in self.stations:
            if st.active and st.has_frame():
                burn = min(st.defer, k)
                st.defer -= burn
                rest = k - burn
                if rest:
                    st.backoff -= rest
        vm = self.vmac
        burn = min(vm.defer, k)
        vm.defer -= burn
        rest = k - burn
        if rest:
            vm.backoff -= rest
        self.clock.slot_index += k
        self.clock.sim_time_us += k * self._sigma
        self.idle_slots += k
        self._win_idle += k

    def _vmac_idle_attempt(self):
        """Idle slot in which only the virtual MAC's counter expired."""
        vm = self.vmac
        vm.attempts += 1
        vm.stage = vm.retry = 0
        self._vmac_redraw()
        for st in self.stations:
            if st.active and st.has_frame():
                if st.defer > 0:
                    st.defer -= 1
                elif st.backoff > 0:
                    st.backoff -= 1
        self.clock.slot_index += 1
        self.clock.sim_time_us += self._sigma
        self.idle_slots += 1
        self._win_idle += 1
        return SlotOutcome(IDLE, self._sigma)

    def _advance_once(self, max_batch):
        transmitters = [st for st in self.stations
                        if st.active and st.has_frame()
                        and st.defer == 0 and st.backoff == 0]
        if transmitters:
            return self._busy_slot(transmitters)
        vm = self.vmac
        if vm.defer == 0 and vm.backoff == 0:
            return self._vmac_idle_attempt()
        k_fire = vm.defer + vm.backoff
        for st in self.stations:
            if st.active and st.has_frame():
                k_fire = min(k_fire, st.defer + st.backoff)
        k = max(1, min(k_fire, self._next_boundary_slots(), max_batch))
        self._idle_slots(k)
        return SlotOutcome(IDLE, k * self._sigma) if k == 1 else None

    def step_slot(self):
        """Process schedule boundaries due now, then exactly one channel slot."""
        self._process_due()
        out = self._advance_once(1)
        return out

    # -- window close -----------------------------------------------------------

    def close_window(self):
        """Close the current measurement window: estimate the fair rate,
        update every station's penalty, emit trace rows, reset counters."""
        slots = self.clock.slot_index - self._win_start_slot
        if slots > 0:
            self._emit_window(slots)
        self.clock.window_index += 1
        self.window_end_us += self.window_us
        self._win_start_slot = self.clock.slot_index
        self._win_idle = self._win_succ = self._win_coll = 0
        self.vmac.attempts = 0
        self.vmac.failures = 0
        for st in self.stations:
            st.w_attempts = st.w_fcs = st.w_acked = 0

    def _emit_window(self, slots):
        now_s = self.clock.sim_time_us / 1e6
        vm = self.vmac
        fv_hat = vm.failures / vm.attempts if vm.attempts > 0 else None
        f1_hat = xbar_oracle = xbar_real = None
        # fv_hat == 0 means no real transmission was ever observed: fewer
        # than zero contenders per the inversion domain -> estimation failure
        if fv_hat:
            clamped = min(max(fv_hat, self._g0), 1.0 - 1e-9)
            f1_hat = invert_virtual_failure(clamped)
            xbar_oracle = attempt_probability(f1_hat)
            xbar_real = xbar_oracle * (1.0 - f1_hat)
        fair = xbar_real if self.mode == "realistic" else xbar_oracle
        self.trace.window_rows.append({
            "estimation_failed": fv_hat is None or fv_hat == 0,
            "time_s": now_s,
            "window": self.clock.window_index,
            "slots": slots,
            "idle": self._win_idle,
            "success": self._win_succ,
            "collision": self._win_coll,
            "virtual_attempts": vm.attempts,
            "virtual_failures": vm.failures,
            "fv_est": fv_hat,
            "f1_est": f1_hat,
            "fair_rate_oracle": xbar_oracle,
            "fair_rate_realistic": xbar_real,
        })
        to_drop = []
        for st in self.stations:
            if not (st.active or st.w_attempts > 0):
                continue
            measured = (st.w_fcs if self.mode == "realistic" else st.w_attempts) / slots
            escalation = Escalation.CONTINUE
            state = self.controller.live.get(st.sid) or self.controller.archive.get(st.sid)
            if st.active and self.policing and fair is not None and st.sid in self.controller.live:
                meas = RateMeasurement(st.sid, measured, fair, slots)
                state, escalation = self.controller.update(meas)
            self.trace.station_rows.append({
                "time_s": now_s,
                "station": st.sid,
                "attempts": st.w_attempts,
                "fcs_successes": st.w_fcs,
                "acked": st.w_acked,
                "measured_rate": measured,
                "fair_rate_est": fair,
                "penalty": state.penalty if state else 0.0,
                "p_nack": state.p_nack if state else 0.0,
                "escalation": escalation.value,
            })
            if escalation is Escalation.DISASSOCIATE:
                to_drop.append(st)
            if st.active and st.spec.policy.kind == "scripted" and xbar_oracle is not None:
                self._retarget_scripted(st, xbar_oracle, f1_hat)
        for st in to_drop:
            self._leave(st)

    def _retarget_scripted(self, st, xbar_oracle, f1_hat):
        seq = st.spec.policy.y_sequence
        y = seq[st.scripted_windows % len(seq)]
        st.scripted_windows += 1
        try:
            params = scripted_station_rate(y, xbar_oracle, st.base_params,
                                           estimated_failure=f1_hat)
        except DomainError:
            # unreachable target: saturate at maximum aggressiveness
            params = dcf.MacParams(cw_min=1, max_backoff_stage=0,
                                   retry_limit=st.base_params.retry_limit,
                                   aifs_slots=st.base_params.aifs_slots)
        st.set_params(params, self.timing)
        st.stage = min(st.stage, st.max_stage)

    # -- whole-run driver -----------------------------------------------------

    def run(self):
        while True:
            self._process_due()
            if self.clock.sim_time_us >= self.end_us:
                break
            self._advance_once(self._max_idle_batch)
        if self.clock.slot_index > self._win_start_slot:
            self.close_window()
        for st in self.stations:
            if st.active:
                st.active_slots += self.clock.slot_index - st._since_slot
                st.active_us += self.clock.sim_time_us - st._since_us
                st.active = False
        self._summarise()
        return self.trace

    def _summarise(self):
        bits = self.timing.payload_bytes * 8
        for st in self.stations:
            if not st.ever_active:
                continue
            secs = st.active_us / 1e6
            attempt_rate = st.t_attempts / st.active_slots if st.active_slots else 0.0
            thr = st.t_fcs * bits / secs if secs > 0 else 0.0
            goodput = st.t_acked * bits / secs if secs > 0 else 0.0
            self.trace.summary_rows.append({
                "station": st.sid,
                "policy": st.spec.policy.kind,
                "active_s": secs,
                "attempts": st.t_attempts,
                "fcs_successes": st.t_fcs,
                "acked": st.t_acked,
                "attempt_rate": attempt_rate,
                "throughput_bps": thr,
                "goodput_bps": goodput,
                "ln_throughput": math.log(thr) if thr > 0 else None,
            })
        self.trace.totals = {
            "slots": self.clock.slot_index,
            "idle": self.idle_slots,
            "success": self.success_slots,
            "collision": self.collision_slots,
            "sim_time_s": self.clock.sim_time_us / 1e6,
            "windows": self.clock.window_index,
        }


def run_simulation(scenario, seed=None, max_idle_batch=None):
    """Run a scenario to completion; seed overrides the scenario's own."""
    if seed is not None:
        from .scenario import with_overrides
        scenario = with_overrides(scenario, seed=seed)
    return Simulation(scenario, max_idle_batch=max_idle_batch).run()
