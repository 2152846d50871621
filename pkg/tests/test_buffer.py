import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberloop import qstate
from fiberloop.buffer import (
    SPEED_OF_LIGHT,
    BufferTopology,
    DividerConfigError,
    EventKind,
    FiberLoop,
    NoiseConfig,
    NoRetrievalError,
    PhotonTimeline,
    RfPattern,
    SchedulingError,
    SwitchCapabilityError,
    SwitchSpec,
    TimelineContractError,
    TimelineEvent,
    TopologyVariant,
    buffer_time,
    channel_for_timeline,
    divider_schedule,
    insertion_loss_db,
    loss_to_survival,
    rf_pattern_for,
    round_trip_time,
    simulate_timeline,
)

V24 = TopologyVariant.LOOP_PORTS_2_4
V23 = TopologyVariant.LOOP_PORTS_2_3


def walk_ports(pattern: RfPattern, loop: FiberLoop, max_arrivals: int = 10_000):
    """Brute-force oracle: track the photon port by port through the
    cross/straight switch states; ON during [k*frame, k*frame + on)."""
    rt = loop.length_m * loop.group_index / SPEED_OF_LIGHT
    frame = pattern.on_duration + pattern.off_duration
    recirculations = 0
    for k in range(1, max_arrivals + 1):
        t = k * rt
        if math.fmod(t, frame) < pattern.on_duration:
            return t, k, recirculations  # cross state: 2 -> 3, photon out
        recirculations += 1  # straight state: 2 -> 4, back into the loop
    raise AssertionError("photon never exited")


class TestBufferTime:
    @pytest.mark.parametrize(
        "n,length_m,expect_us,rel",
        [
            (2, 5400.0, 52.0, 0.03),
            (3, 3000.0, 44.0, 0.03),
            (2, 1300.0, 12.7, 0.01),
        ],
    )
    def test_reference_times(self, n, length_m, expect_us, rel):
        t = buffer_time(n, FiberLoop(length_m))
        assert t == pytest.approx(expect_us * 1e-6, rel=rel)

    def test_short_length_limit(self):
        assert buffer_time(1, FiberLoop(1e-6)) < 1e-14

    def test_rejects_zero_trips(self):
        with pytest.raises(ValueError):
            buffer_time(0, FiberLoop(1000.0))

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(1, 500),
        st.floats(1.0, 1e5, allow_nan=False, allow_infinity=False),
    )
    def test_linearity_in_trips(self, n, length_m):
        loop = FiberLoop(length_m)
        assert buffer_time(2 * n, loop) == pytest.approx(
            2 * buffer_time(n, loop), rel=1e-15
        )


class TestRoundTripTime:
    @pytest.mark.parametrize(
        "length_m,expect_s",
        [(1300.0, 6.4e-6), (4000.0, 19.57e-6), (1.0, 4.9e-9)],
    )
    def test_reference_unit_delays(self, length_m, expect_s):
        assert round_trip_time(FiberLoop(length_m)) == pytest.approx(expect_s, rel=0.01)


class TestRfPattern:
    def test_three_trip_rate(self):
        p = rf_pattern_for(3, FiberLoop(3000.0))
        assert p.repetition_rate_hz == pytest.approx(22.7e3, rel=0.01)
        assert p.off_duration == pytest.approx(2 * p.on_duration, rel=1e-12)

    def test_two_trip_rate(self):
        p = rf_pattern_for(2, FiberLoop(5400.0))
        assert p.repetition_rate_hz == pytest.approx(19e3, rel=0.03)

    def test_single_pass(self):
        p = rf_pattern_for(1, FiberLoop(2.0))
        assert p.off_duration == 0.0
        assert p.n_trips == 1

    def test_rejects_incommensurate_off(self):
        with pytest.raises(ValueError):
            RfPattern(on_duration=1e-5, off_duration=1.5e-5)


class TestInsertionLoss:
    # the seven reference rows: (n, length_m, dB/km, expected dB)
    ROWS = [
        (1, 5400.0, 0.20, 3.48),
        (2, 5400.0, 0.20, 5.56),
        (2, 4000.0, 0.15, 4.60),
        (2, 3000.0, 0.20, 4.60),
        (2, 1830.0, 0.20, 4.13),
        (2, 1300.0, 0.20, 3.92),
        (3, 3000.0, 0.20, 6.20),
    ]

    @pytest.mark.parametrize("n,length_m,atten,expect_db", ROWS)
    def test_reference_rows(self, n, length_m, atten, expect_db):
        loss = insertion_loss_db(n, FiberLoop(length_m, attenuation_db_per_km=atten))
        assert loss == pytest.approx(expect_db, abs=0.01)

    def test_extra_switch_losses(self):
        loop = FiberLoop(4000.0, attenuation_db_per_km=0.15)
        loss = insertion_loss_db(2, loop, extra_switch_losses_db=(0.01,) * 4)
        assert loss == pytest.approx(4.64, abs=1e-12)


class TestLossToSurvival:
    def test_reference_values(self):
        assert loss_to_survival(0.0) == 1.0
        assert loss_to_survival(3.48) == pytest.approx(0.4487, abs=1e-4)
        assert loss_to_survival(10.0) == pytest.approx(0.1, abs=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            loss_to_survival(-1.0)


class TestSimulateTimeline:
    def test_retrieve_at_19khz(self):
        loop = FiberLoop(5400.0)
        tl = simulate_timeline(rf_pattern_for(2, loop), loop, BufferTopology(V24))
        assert tl.retrieved and not tl.leaked
        assert tl.events[-1].time == pytest.approx(52e-6, rel=0.03)
        assert tl.final_loss_db == pytest.approx(
            insertion_loss_db(2, loop), abs=1e-12
        )

    def test_leak_at_55_8khz_ports_2_4(self):
        loop = FiberLoop(1850.0)
        pattern = rf_pattern_for(2, loop)
        assert pattern.repetition_rate_hz == pytest.approx(55.8e3, rel=0.02)
        tl = simulate_timeline(pattern, loop, BufferTopology(V24))
        assert tl.leaked and not tl.retrieved
        assert tl.events[-1].kind is EventKind.LEAK
        assert tl.events[-1].time == pytest.approx(round_trip_time(loop), rel=1e-12)

    def test_retrieve_at_78khz_ports_2_3(self):
        loop = FiberLoop(1300.0)
        pattern = rf_pattern_for(2, loop)
        assert pattern.repetition_rate_hz == pytest.approx(78e3, rel=0.01)
        tl = simulate_timeline(
            pattern, loop, BufferTopology(V23), SwitchSpec(v_pi_calibrated=True)
        )
        assert tl.retrieved
        assert tl.total_buffer_time == pytest.approx(12.7e-6, rel=0.01)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_against_port_walker(self, n):
        loop = FiberLoop(3000.0)
        pattern = rf_pattern_for(n, loop)
        tl = simulate_timeline(pattern, loop, BufferTopology(V24, leak_threshold_hz=1e9))
        t_exit, trips, recirc = walk_ports(pattern, loop)
        assert tl.round_trips == trips
        assert tl.total_buffer_time == pytest.approx(t_exit, rel=1e-12)
        assert sum(1 for e in tl.events if e.kind is EventKind.RECIRCULATE) == recirc

    def test_loss_matches_closed_form(self):
        for n, length in [(1, 5400.0), (2, 4000.0), (3, 3000.0)]:
            loop = FiberLoop(length)
            tl = simulate_timeline(
                rf_pattern_for(n, loop), loop, BufferTopology(V24, leak_threshold_hz=1e9)
            )
            assert tl.final_loss_db == pytest.approx(insertion_loss_db(n, loop), abs=1e-12)

    def test_short_on_duration_rejected(self):
        loop = FiberLoop(3000.0)
        rt = round_trip_time(loop)
        with pytest.raises(SchedulingError):
            simulate_timeline(
                RfPattern(rt * 0.5, rt * 0.5), loop, BufferTopology(V24)
            )

    def test_drive_rate_beyond_switch_rejected(self):
        loop = FiberLoop(2.0)  # 9.8 ns round trip -> MHz-scale drive
        with pytest.raises(SwitchCapabilityError):
            simulate_timeline(rf_pattern_for(2, loop), loop, BufferTopology(V24))

    def test_ports_2_3_requires_v_pi(self):
        loop = FiberLoop(1300.0)
        with pytest.raises(SwitchCapabilityError):
            simulate_timeline(
                rf_pattern_for(2, loop), loop, BufferTopology(V23), SwitchSpec()
            )

    def test_retrieve_below_both_thresholds(self):
        for n, length in [(2, 5400.0), (3, 3000.0), (2, 4000.0), (2, 3000.0)]:
            loop = FiberLoop(length)
            tl = simulate_timeline(rf_pattern_for(n, loop), loop, BufferTopology(V24))
            assert tl.retrieved

    def test_fractional_leak_bleeds_instead_of_exiting(self):
        # sensitivity-study mode: over threshold, half the photon escapes per
        # straight pass; the rest is retrieved with 3.01 dB extra per pass
        loop = FiberLoop(1850.0)
        topo = BufferTopology(V24, leak_fraction=0.5)
        tl = simulate_timeline(rf_pattern_for(2, loop), loop, topo)
        assert tl.retrieved and not tl.leaked
        expected = insertion_loss_db(2, loop) - 10 * math.log10(0.5)
        assert tl.final_loss_db == pytest.approx(expected, abs=1e-12)

    def test_fractional_leak_inert_below_threshold(self):
        loop = FiberLoop(5400.0)
        topo = BufferTopology(V24, leak_fraction=0.5)
        tl = simulate_timeline(rf_pattern_for(2, loop), loop, topo)
        assert tl.final_loss_db == pytest.approx(insertion_loss_db(2, loop), abs=1e-12)


class TestTimelineInvariants:
    def test_requires_single_inject(self):
        with pytest.raises(TimelineContractError):
            PhotonTimeline(
                (TimelineEvent(1.0, EventKind.RETRIEVE, 1.0),), 1.0, 1
            )

    def test_requires_increasing_times(self):
        events = (
            TimelineEvent(0.0, EventKind.INJECT, 1.0),
            TimelineEvent(0.0, EventKind.RETRIEVE, 2.0),
        )
        with pytest.raises(TimelineContractError):
            PhotonTimeline(events, 1.0, 1)
        # the zero-delay pass-through (0 round trips) is the one exception
        PhotonTimeline(events, 0.0, 0)

    def test_no_silent_photon_loss(self):
        events = (TimelineEvent(0.0, EventKind.INJECT, 1.0),)
        with pytest.raises(TimelineContractError):
            PhotonTimeline(events, 0.0, 1)

    def test_retrieve_after_leak_rejected(self):
        events = (
            TimelineEvent(0.0, EventKind.INJECT, 1.0),
            TimelineEvent(1e-6, EventKind.LEAK, 2.0),
            TimelineEvent(2e-6, EventKind.RETRIEVE, 3.0),
        )
        with pytest.raises(TimelineContractError):
            PhotonTimeline(events, 2e-6, 2)


class TestDividerSchedule:
    def _run(self):
        unit = FiberLoop(4000.0, attenuation_db_per_km=0.15)
        short = FiberLoop(1000.0, attenuation_db_per_km=0.15)
        topo = BufferTopology(
            TopologyVariant.MULTIPLIER_DIVIDER, divider_paths=(unit, short)
        )
        return unit, short, divider_schedule(topo, rf_pattern_for(2, unit))

    def test_unit_path_doubles_delay(self):
        unit, _, out = self._run()
        tl = [t for p, t in out if p is unit][0]
        assert tl.retrieved
        assert tl.total_buffer_time == pytest.approx(39.1e-6, rel=0.01)

    def test_short_path_divides_by_eight(self):
        unit, short, out = self._run()
        t_long = [t for p, t in out if p is unit][0].total_buffer_time
        t_short = [t for p, t in out if p is short and t.retrieved][0].total_buffer_time
        assert t_short == pytest.approx(4.9e-6, rel=0.01)
        assert 7.9 <= t_long / t_short <= 8.1

    def test_ghost_recirculation(self):
        _, short, out = self._run()
        ghost = [t for p, t in out if p is short and t.ghosted][0]
        assert ghost.round_trips == 5
        assert ghost.total_buffer_time == pytest.approx(5 * 4.9e-6, rel=0.01)
        straight_passes = sum(
            1 for e in ghost.events if e.kind is EventKind.RECIRCULATE
        )
        assert straight_passes >= 4

    def test_ghost_losses_accumulate_straight_passes(self):
        _, short, out = self._run()
        ghost = [t for p, t in out if p is short and t.ghosted][0]
        # 2 cross + 4 straight + 5 km fiber + 10 selector passes
        expected = 2 * 1.2 + 4 * 1.0 + 5 * 0.15 + 10 * 0.01
        assert ghost.final_loss_db == pytest.approx(expected, abs=1e-9)

    def test_incommensurate_path_rejected(self):
        unit = FiberLoop(4000.0)
        odd = FiberLoop(1700.0)
        topo = BufferTopology(
            TopologyVariant.MULTIPLIER_DIVIDER, divider_paths=(odd,)
        )
        with pytest.raises(DividerConfigError):
            divider_schedule(topo, rf_pattern_for(2, unit))

    def test_needs_divider_topology(self):
        loop = FiberLoop(4000.0)
        with pytest.raises(ValueError):
            divider_schedule(BufferTopology(V24), rf_pattern_for(2, loop))


class TestChannelForTimeline:
    def _timeline(self, loss_db=0.0, trips=1, length_m=1000.0):
        events = (
            TimelineEvent(0.0, EventKind.INJECT, 0.0),
            TimelineEvent(trips * 5e-6, EventKind.RETRIEVE, loss_db),
        )
        return PhotonTimeline(events, trips * 5e-6, trips)

    def test_zero_noise_zero_loss_is_identity(self):
        loop = FiberLoop(1000.0)
        ch = channel_for_timeline(self._timeline(), loop)
        assert len(ch.kraus_ops) == 1
        np.testing.assert_allclose(ch.kraus_ops[0], np.eye(2), atol=1e-15)

    def test_loss_only_scalar_kraus(self):
        loop = FiberLoop(1000.0)
        ch = channel_for_timeline(self._timeline(loss_db=3.0), loop)
        assert len(ch.kraus_ops) == 1
        eta = 10 ** (-0.3)
        np.testing.assert_allclose(
            ch.kraus_ops[0], math.sqrt(eta) * np.eye(2), atol=1e-12
        )
        assert eta == pytest.approx(0.501, abs=1e-3)

    def test_pmd_phase_damping_kraus(self):
        # dephasing variance sigma^2 with lambda = 1 - exp(-sigma^2);
        # pick sigma^2 = -ln(0.9) so lambda = 0.1 exactly
        var = -math.log(0.9)
        loop = FiberLoop(1000.0, pmd_dephasing_per_km=math.sqrt(var))
        ch = channel_for_timeline(self._timeline(), loop)
        k0, k1 = ch.kraus_ops
        np.testing.assert_allclose(k0, np.diag([1.0, math.sqrt(0.9)]), atol=1e-12)
        np.testing.assert_allclose(k1, np.diag([0.0, math.sqrt(0.1)]), atol=1e-12)
        chi = qstate.channel_to_chi(ch)
        p = (1 - math.sqrt(0.9)) / 2
        np.testing.assert_allclose(chi.matrix, np.diag([1 - p, 0, 0, p]), atol=1e-12)

    def test_noise_override_beats_loop_value(self):
        loop = FiberLoop(1000.0, pmd_dephasing_per_km=10.0)
        ch = channel_for_timeline(
            self._timeline(), loop, NoiseConfig(pmd_dephasing_per_km=0.0)
        )
        np.testing.assert_allclose(ch.kraus_ops[0], np.eye(2), atol=1e-15)

    def test_cross_noise_applied_twice(self):
        loop = FiberLoop(1000.0)
        q = 0.01
        ch = channel_for_timeline(
            self._timeline(), loop, NoiseConfig(cross_phase_flip=q)
        )
        chi = qstate.channel_to_chi(ch)
        # two independent phase flips: identity weight ((1-q)^2 + q^2), rest s3
        expected_id = (1 - q) ** 2 + q**2
        assert chi.matrix[0, 0].real == pytest.approx(expected_id, abs=1e-12)
        assert chi.matrix[3, 3].real == pytest.approx(1 - expected_id, abs=1e-12)

    def test_requires_retrieve(self):
        events = (
            TimelineEvent(0.0, EventKind.INJECT, 1.0),
            TimelineEvent(5e-6, EventKind.LEAK, 2.0),
        )
        tl = PhotonTimeline(events, 5e-6, 1)
        with pytest.raises(NoRetrievalError):
            channel_for_timeline(tl, FiberLoop(1000.0))

    @settings(max_examples=30, deadline=None)
    @given(
        st.floats(0.0, 20.0),
        st.floats(0.0, 0.3),
        st.floats(0.0, 0.3),
    )
    def test_output_channel_is_valid(self, loss_db, pmd, q):
        loop = FiberLoop(1000.0, pmd_dephasing_per_km=pmd)
        ch = channel_for_timeline(
            self._timeline(loss_db=loss_db, trips=2),
            loop,
            NoiseConfig(cross_phase_flip=q, cross_bit_flip=q / 2),
        )
        total = sum(k.conj().T @ k for k in ch.kraus_ops)
        assert np.linalg.eigvalsh(total).max() <= 1.0 + 1e-12


class TestValidation:
    def test_loop_validation(self):
        with pytest.raises(ValueError):
            FiberLoop(0.0)
        with pytest.raises(ValueError):
            FiberLoop(1000.0, attenuation_db_per_km=-0.1)
        with pytest.raises(ValueError):
            FiberLoop(1000.0, group_index=0.5)

    def test_topology_validation(self):
        with pytest.raises(ValueError):
            BufferTopology(TopologyVariant.MULTIPLIER_DIVIDER)
        with pytest.raises(ValueError):
            BufferTopology(V24, divider_paths=(FiberLoop(1000.0),))
        with pytest.raises(ValueError):
            BufferTopology(V24, leak_fraction=0.0)
        assert BufferTopology(V24).leak_threshold_hz == 50e3
        assert BufferTopology(V23).leak_threshold_hz == 78e3

    def test_switch_validation(self):
        with pytest.raises(ValueError):
            SwitchSpec(loss_cross_db=-1.0)
        with pytest.raises(ValueError):
            SwitchSpec(rise_fall_time=0.0)
