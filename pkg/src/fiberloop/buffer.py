"""Switched fiber-loop buffer model.

A 2x2 electro-optic switch with one output looped back to one input through a
fiber delay line stores a photon for N round-trips.  The switch is driven by
an RF ON/OFF pattern: ON routes cross (1->4, 2->3), OFF routes straight
(1->3, 2->4).  The ON duration equals one loop round-trip T, the OFF duration
(N-1)*T, so the photon is injected on the rising edge, recirculates through
the straight state N-1 times, and is called out by the next ON transition.

Above a port-dependent repetition rate the switch no longer holds the photon
and it leaks to the output on the first pass; the leak thresholds are
calibration constants of the two loop wirings.  A second tier of 1x2 selector
switches can swap the delay line between a unit-length fiber and an integer
fraction of it, yielding integer multiples and integer dividers of the unit
delay (plus a "ghost" recirculation for photons injected near the end of the
ON window).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import qstate
from .qstate import QubitChannel

__all__ = [
    "SPEED_OF_LIGHT",
    "LEAK_RATE_GUARD",
    "SchedulingError",
    "SwitchCapabilityError",
    "NoRetrievalError",
    "DividerConfigError",
    "TimelineContractError",
    "SwitchSpec",
    "FiberLoop",
    "RfPattern",
    "TopologyVariant",
    "BufferTopology",
    "EventKind",
    "TimelineEvent",
    "PhotonTimeline",
    "NoiseConfig",
    "buffer_time",
    "round_trip_time",
    "rf_pattern_for",
    "simulate_timeline",
    "insertion_loss_db",
    "divider_schedule",
    "loss_to_survival",
    "channel_for_timeline",
]

SPEED_OF_LIGHT = 299792458.0  # m/s

# Leak thresholds are nominal calibration constants quoted to ~1%; comparisons
# carry this guard band so a pattern built exactly at a demonstrated-good rate
# (e.g. the 1.3 km loop at its realized 78.5 kHz) does not trip the threshold.
LEAK_RATE_GUARD = 0.01

_PATTERN_TOL = 1e-3  # 0.1% commensurability tolerance for RF patterns
_DIVIDER_TOL = 1e-2  # 1% commensurability tolerance for divider paths


class SchedulingError(ValueError):
    """RF pattern incompatible with the loop round-trip time."""


class SwitchCapabilityError(ValueError):
    """Requested drive exceeds what the switch hardware supports."""


class NoRetrievalError(ValueError):
    """Timeline has no RETRIEVE event to build a channel from."""


class DividerConfigError(ValueError):
    """Divider path round-trip incommensurate with the RF pattern."""


class TimelineContractError(ValueError):
    """Event sequence violates the photon-timeline invariants."""


@dataclass(frozen=True)
class SwitchSpec:
    """2x2 switch parameters: per-pass losses and drive capabilities."""

    loss_cross_db: float = 1.2
    loss_straight_db: float = 1.0
    rise_fall_time: float = 100e-9
    max_rep_rate_hz: float = 100e3
    v_pi_calibrated: bool = False

    def __post_init__(self) -> None:
        if self.loss_cross_db < 0 or self.loss_straight_db < 0:
            raise ValueError("switch losses must be nonnegative")
        if not self.rise_fall_time > 0:
            raise ValueError("rise/fall time must be positive")
        if not self.max_rep_rate_hz > 0:
            raise ValueError("max repetition rate must be positive")


@dataclass(frozen=True)
class FiberLoop:
    """Fiber delay line: length, attenuation, group index, PMD dephasing.

    ``pmd_dephasing_per_km`` is the standard deviation (radians) of the
    random dephasing angle accumulated over one kilometre; independent
    per-km contributions add in quadrature, so the variance grows linearly
    with propagated length.
    """

    length_m: float
    attenuation_db_per_km: float = 0.2
    group_index: float = 1.468
    pmd_dephasing_per_km: float = 0.0

    def __post_init__(self) -> None:
        if not self.length_m > 0:
            raise ValueError("loop length must be positive")
        if self.attenuation_db_per_km < 0:
            raise ValueError("attenuation must be nonnegative")
        if self.group_index < 1:
            raise ValueError("group index must be >= 1")
        if self.pmd_dephasing_per_km < 0:
            raise ValueError("PMD dephasing must be nonnegative")

    @property
    def length_km(self) -> float:
        return self.length_m / 1000.0


@dataclass(frozen=True)
class RfPattern:
    """RF drive: ON for ``on_duration`` (T), OFF for an integer multiple of T."""

    on_duration: float
    off_duration: float

    def __post_init__(self) -> None:
        if not self.on_duration > 0:
            raise ValueError("ON duration must be positive")
        if self.off_duration < 0:
            raise ValueError("OFF duration must be nonnegative")
        if self.off_duration > 0:
            m = self.off_duration / self.on_duration
            if round(m) < 1 or abs(m / round(m) - 1.0) > _PATTERN_TOL:
                raise ValueError(
                    "OFF duration must be an integer multiple of the ON duration"
                )

    @property
    def repetition_rate_hz(self) -> float:
        return 1.0 / (self.on_duration + self.off_duration)

    @property
    def n_trips(self) -> int:
        """Round trips implied by the pattern: 1 + off/on."""
        if self.off_duration == 0:
            return 1
        return 1 + round(self.off_duration / self.on_duration)


class TopologyVariant(enum.Enum):
    LOOP_PORTS_2_4 = "LOOP_PORTS_2_4"
    LOOP_PORTS_2_3 = "LOOP_PORTS_2_3"
    MULTIPLIER_DIVIDER = "MULTIPLIER_DIVIDER"


# Calibration constants: highest reliable drive rate per loop wiring.  The
# 2-4 wiring leaks above ~50 kHz; rewired to ports 2-3 (with the pi-voltage
# readjusted) the switch holds up to the highest demonstrated 78 kHz.
DEFAULT_LEAK_THRESHOLD_HZ: dict[TopologyVariant, float] = {
    TopologyVariant.LOOP_PORTS_2_4: 50e3,
    TopologyVariant.LOOP_PORTS_2_3: 78e3,
    TopologyVariant.MULTIPLIER_DIVIDER: 50e3,
}


@dataclass(frozen=True)
class BufferTopology:
    """Loop wiring plus, for the divider variant, the selectable delay paths.

    ``leak_fraction`` is the fraction of the photon that escapes per straight
    pass once the drive rate exceeds the threshold.  At the default 1.0 the
    leak is binary (full early exit on the first recirculation); fractional
    values model a partial bleed for sensitivity studies, in which case the
    photon is still retrieved, just with extra loss per recirculation.
    """

    variant: TopologyVariant
    leak_threshold_hz: float | None = None
    leak_fraction: float = 1.0
    divider_paths: tuple[FiberLoop, ...] = ()
    selector_loss_db: float = 0.01
    selector_rate_hz: float = 1.0

    def __post_init__(self) -> None:
        if self.leak_threshold_hz is None:
            object.__setattr__(
                self, "leak_threshold_hz", DEFAULT_LEAK_THRESHOLD_HZ[self.variant]
            )
        if not self.leak_threshold_hz > 0:
            raise ValueError("leak threshold must be positive")
        if not 0.0 < self.leak_fraction <= 1.0:
            raise ValueError("leak fraction must lie in (0, 1]")
        object.__setattr__(self, "divider_paths", tuple(self.divider_paths))
        is_divider = self.variant is TopologyVariant.MULTIPLIER_DIVIDER
        if is_divider and not self.divider_paths:
            raise ValueError("MULTIPLIER_DIVIDER topology needs divider paths")
        if not is_divider and self.divider_paths:
            raise ValueError("divider paths only apply to MULTIPLIER_DIVIDER")
        if self.selector_loss_db < 0:
            raise ValueError("selector loss must be nonnegative")
        if not self.selector_rate_hz > 0:
            raise ValueError("selector rate must be positive")


class EventKind(enum.Enum):
    INJECT = "INJECT"
    RECIRCULATE = "RECIRCULATE"
    LEAK = "LEAK"
    RETRIEVE = "RETRIEVE"
    GHOST_EXIT = "GHOST_EXIT"


@dataclass(frozen=True)
class TimelineEvent:
    time: float
    kind: EventKind
    accumulated_loss_db: float


@dataclass(frozen=True)
class PhotonTimeline:
    """Ordered photon events with accumulated loss.

    ``round_trips`` counts loop traversals (0 for the straight pass-through
    of the divider bypass, which is also the only case where RETRIEVE may
    share the INJECT timestamp).  A timeline ends in exactly one of RETRIEVE,
    LEAK, or GHOST_EXIT.
    """

    events: tuple[TimelineEvent, ...]
    total_buffer_time: float
    round_trips: int

    def __post_init__(self) -> None:
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        if sum(1 for e in events if e.kind is EventKind.INJECT) != 1:
            raise TimelineContractError("timeline needs exactly one INJECT")
        times = [e.time for e in events]
        strictly = all(b > a for a, b in zip(times, times[1:]))
        if not strictly:
            passthrough = (
                self.round_trips == 0
                and len(events) == 2
                and events[1].kind is EventKind.RETRIEVE
                and times[0] == times[1]
            )
            if not passthrough:
                raise TimelineContractError("event times must be strictly increasing")
        n_retrieve = sum(1 for e in events if e.kind is EventKind.RETRIEVE)
        if n_retrieve > 1:
            raise TimelineContractError("at most one RETRIEVE allowed")
        terminal = {EventKind.LEAK, EventKind.GHOST_EXIT}
        has_terminal_loss = any(e.kind in terminal for e in events)
        if n_retrieve == 0 and not has_terminal_loss:
            raise TimelineContractError(
                "RETRIEVE may be absent only when the photon leaked or ghost-exited"
            )
        if n_retrieve == 1 and has_terminal_loss:
            raise TimelineContractError("RETRIEVE cannot follow a LEAK/GHOST_EXIT")
        if self.round_trips < 0:
            raise TimelineContractError("round trips must be nonnegative")
        if self.total_buffer_time < 0:
            raise TimelineContractError("buffer time must be nonnegative")

    @property
    def retrieved(self) -> bool:
        return any(e.kind is EventKind.RETRIEVE for e in self.events)

    @property
    def leaked(self) -> bool:
        return any(e.kind is EventKind.LEAK for e in self.events)

    @property
    def ghosted(self) -> bool:
        return any(e.kind is EventKind.GHOST_EXIT for e in self.events)

    @property
    def final_loss_db(self) -> float:
        return self.events[-1].accumulated_loss_db

    def to_json(self) -> dict:
        return {
            "events": [
                {
                    "time": e.time,
                    "kind": e.kind.value,
                    "accumulated_loss_db": e.accumulated_loss_db,
                }
                for e in self.events
            ],
            "total_buffer_time": self.total_buffer_time,
            "round_trips": self.round_trips,
        }


@dataclass(frozen=True)
class NoiseConfig:
    """Decoherence knobs for the buffered idler.

    ``pmd_dephasing_per_km`` overrides the loop's own value when set.  The
    per-cross probabilities are applied once per cross transition of the
    switch (injection and retrieval).  ``accidental_rate`` is consumed by the
    counting stage, not by the channel.
    """

    pmd_dephasing_per_km: float | None = None
    cross_bit_flip: float = 0.0
    cross_phase_flip: float = 0.0
    cross_amplitude_damping: float = 0.0
    accidental_rate: float = 0.0

    def __post_init__(self) -> None:
        for name in ("cross_bit_flip", "cross_phase_flip", "cross_amplitude_damping"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")
        if self.pmd_dephasing_per_km is not None and self.pmd_dephasing_per_km < 0:
            raise ValueError("PMD dephasing must be nonnegative")
        if self.accidental_rate < 0:
            raise ValueError("accidental rate must be nonnegative")


def round_trip_time(loop: FiberLoop) -> float:
    """One loop round-trip L * n_g / c; this is the RF unit delay T."""
    return loop.length_m * loop.group_index / SPEED_OF_LIGHT


def buffer_time(n_trips: int, loop: FiberLoop) -> float:
    """Total storage time N * L * n_g / c."""
    if n_trips < 1:
        raise ValueError(f"need at least one round trip, got {n_trips}")
    return n_trips * round_trip_time(loop)


def rf_pattern_for(n_trips: int, loop: FiberLoop) -> RfPattern:
    """ON for one round-trip, OFF for the remaining N-1 round-trips."""
    if n_trips < 1:
        raise ValueError(f"need at least one round trip, got {n_trips}")
    t = round_trip_time(loop)
    return RfPattern(on_duration=t, off_duration=(n_trips - 1) * t)


def insertion_loss_db(
    n_trips: int,
    loop: FiberLoop,
    switch: SwitchSpec = SwitchSpec(),
    extra_switch_losses_db: tuple[float, ...] = (),
) -> float:
    """Loss budget: 2 cross passes + (N-1) straight passes + fiber + extras."""
    if n_trips < 1:
        raise ValueError(f"need at least one round trip, got {n_trips}")
    fiber = loop.attenuation_db_per_km * n_trips * loop.length_km
    return (
        2.0 * switch.loss_cross_db
        + (n_trips - 1) * switch.loss_straight_db
        + fiber
        + sum(extra_switch_losses_db)
    )


def loss_to_survival(loss_db: float) -> float:
    """Transmission probability 10^(-loss/10)."""
    if loss_db < 0:
        raise ValueError(f"loss must be nonnegative, got {loss_db} dB")
    return 10.0 ** (-loss_db / 10.0)


def _check_drive(pattern: RfPattern, switch: SwitchSpec) -> None:
    rate = pattern.repetition_rate_hz
    if rate > switch.max_rep_rate_hz:
        raise SwitchCapabilityError(
            f"drive rate {rate:.0f} Hz exceeds switch limit {switch.max_rep_rate_hz:.0f} Hz"
        )
    if pattern.on_duration < 2.0 * switch.rise_fall_time:
        raise SwitchCapabilityError(
            "ON duration too short for the switch rise/fall time"
        )


def simulate_timeline(
    pattern: RfPattern,
    loop: FiberLoop,
    topo: BufferTopology,
    switch: SwitchSpec = SwitchSpec(),
) -> PhotonTimeline:
    """Walk one photon through the loop under the given RF pattern.

    The photon is injected at t=0 on the rising edge (cross), recirculates at
    every multiple of the round-trip time while the switch sits straight, and
    is retrieved by the next ON transition at N*T.  If the drive rate exceeds
    the topology's leak threshold the photon instead leaks out on its first
    return and no RETRIEVE is emitted.
    """
    if topo.variant is TopologyVariant.MULTIPLIER_DIVIDER:
        raise ValueError("use divider_schedule for the multiplier/divider topology")
    if topo.variant is TopologyVariant.LOOP_PORTS_2_3 and not switch.v_pi_calibrated:
        raise SwitchCapabilityError(
            "the ports 2-3 loop requires a recalibrated pi-voltage"
        )
    rt = round_trip_time(loop)
    if pattern.on_duration < rt * (1.0 - _PATTERN_TOL):
        raise SchedulingError(
            f"ON duration {pattern.on_duration:.3e} s shorter than the "
            f"round trip {rt:.3e} s"
        )
    if pattern.on_duration > rt * (1.0 + _PATTERN_TOL):
        raise SchedulingError(
            "ON duration longer than one round trip would release the photon early"
        )
    _check_drive(pattern, switch)

    n = pattern.n_trips
    fiber_db = loop.attenuation_db_per_km * loop.length_km
    events = [TimelineEvent(0.0, EventKind.INJECT, switch.loss_cross_db)]
    loss = switch.loss_cross_db

    rate = pattern.repetition_rate_hz
    over_threshold = rate > topo.leak_threshold_hz * (1.0 + LEAK_RATE_GUARD)
    if over_threshold and topo.leak_fraction >= 1.0:
        loss += fiber_db + switch.loss_straight_db
        events.append(TimelineEvent(rt, EventKind.LEAK, loss))
        return PhotonTimeline(tuple(events), total_buffer_time=rt, round_trips=1)
    bleed_db = (
        -10.0 * math.log10(1.0 - topo.leak_fraction) if over_threshold else 0.0
    )

    for k in range(1, n):
        loss += fiber_db + switch.loss_straight_db + bleed_db
        events.append(TimelineEvent(k * rt, EventKind.RECIRCULATE, loss))
    loss += fiber_db + switch.loss_cross_db
    events.append(TimelineEvent(n * rt, EventKind.RETRIEVE, loss))
    return PhotonTimeline(tuple(events), total_buffer_time=n * rt, round_trips=n)


def _walk_path(
    t_inject: float,
    rt: float,
    pattern: RfPattern,
    per_trip_db: float,
    straight_db: float,
    cross_db: float,
    exit_kind: EventKind,
    max_trips: int = 1000,
) -> PhotonTimeline:
    """Arrival-by-arrival walk of one divider path until an ON window exit."""
    frame = pattern.on_duration + pattern.off_duration
    events = [TimelineEvent(t_inject, EventKind.INJECT, cross_db)]
    loss = cross_db
    k = 0
    while True:
        k += 1
        if k > max_trips:
            raise DividerConfigError("photon never reaches an ON window")
        t = t_inject + k * rt
        phase = math.fmod(t, frame)
        if phase < pattern.on_duration:
            loss += per_trip_db + cross_db
            events.append(TimelineEvent(t, exit_kind, loss))
            return PhotonTimeline(
                tuple(events), total_buffer_time=k * rt, round_trips=k
            )
        loss += per_trip_db + straight_db
        events.append(TimelineEvent(t, EventKind.RECIRCULATE, loss))


def divider_schedule(
    topo: BufferTopology,
    pattern: RfPattern,
    switch: SwitchSpec = SwitchSpec(),
) -> list[tuple[FiberLoop, PhotonTimeline]]:
    """Timelines for every selectable divider path under one RF pattern.

    A path whose round trip equals the ON duration behaves like the plain
    loop (integer multiple of the unit delay).  A path whose round trip is an
    integer fraction of the ON duration exits on its first return, still
    inside the ON window (the divider), and additionally traps photons
    injected near the end of the ON window until the next ON transition,
    producing a ghost exit with extra straight-pass losses.
    """
    if topo.variant is not TopologyVariant.MULTIPLIER_DIVIDER:
        raise ValueError("divider_schedule needs a MULTIPLIER_DIVIDER topology")
    _check_drive(pattern, switch)
    out: list[tuple[FiberLoop, PhotonTimeline]] = []
    for path in topo.divider_paths:
        rt = round_trip_time(path)
        ratio = pattern.on_duration / rt if rt <= pattern.on_duration else rt / pattern.on_duration
        if round(ratio) < 1 or abs(ratio / round(ratio) - 1.0) > _DIVIDER_TOL:
            raise DividerConfigError(
                f"path round trip {rt:.3e} s incommensurate with the "
                f"ON duration {pattern.on_duration:.3e} s"
            )
        per_trip = (
            path.attenuation_db_per_km * path.length_km + 2.0 * topo.selector_loss_db
        )
        main = _walk_path(
            0.0,
            rt,
            pattern,
            per_trip,
            switch.loss_straight_db,
            switch.loss_cross_db,
            EventKind.RETRIEVE,
        )
        out.append((path, main))
        if rt < pattern.on_duration and round(ratio) >= 2:
            # photons entering in the last fraction of the ON window return
            # after it closed and stay trapped until the next ON transition
            ghost = _walk_path(
                pattern.on_duration - rt / 2.0,
                rt,
                pattern,
                per_trip,
                switch.loss_straight_db,
                switch.loss_cross_db,
                EventKind.GHOST_EXIT,
            )
            if ghost.round_trips != main.round_trips:
                out.append((path, ghost))
    return out


def channel_for_timeline(
    timeline: PhotonTimeline,
    loop: FiberLoop,
    noise: NoiseConfig = NoiseConfig(),
) -> QubitChannel:
    """Decoherence channel seen by the retrieved idler.

    Composes, in order: polarization-independent attenuation from the
    accumulated loss budget, PMD dephasing as a phase-damping channel whose
    variance grows linearly with the propagated fiber length, and the
    per-cross switch-actuation channels (bit flip, phase flip, amplitude
    damping) once per cross transition.
    """
    if not timeline.retrieved:
        raise NoRetrievalError("timeline has no RETRIEVE event")
    parts: list[QubitChannel] = []
    loss_db = timeline.final_loss_db
    if loss_db > 0:
        parts.append(qstate.loss_channel(loss_to_survival(loss_db)))
    pmd = (
        noise.pmd_dephasing_per_km
        if noise.pmd_dephasing_per_km is not None
        else loop.pmd_dephasing_per_km
    )
    km = timeline.round_trips * loop.length_km
    if pmd > 0 and km > 0:
        variance = pmd * pmd * km
        parts.append(qstate.phase_damping_channel(1.0 - math.exp(-variance)))
    n_cross = 2 if timeline.round_trips >= 1 else 0
    for _ in range(n_cross):
        if noise.cross_bit_flip > 0:
            parts.append(qstate.bit_flip_channel(noise.cross_bit_flip))
        if noise.cross_phase_flip > 0:
            parts.append(qstate.phase_flip_channel(noise.cross_phase_flip))
        if noise.cross_amplitude_damping > 0:
            parts.append(
                qstate.amplitude_damping_channel(noise.cross_amplitude_damping)
            )
    if not parts:
        return qstate.identity_channel()
    return qstate.compose_channels(*parts)
