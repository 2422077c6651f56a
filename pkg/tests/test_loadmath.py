"""Gap dilution, duration, achieved load, and tick quantization."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from lineload.loadmath import (
    LoadConfig,
    LoadError,
    achieved_load,
    duration,
    frame_time,
    gap_schedule,
    load_gap,
    quantize_gaps,
    rate_bits,
    run_ticks,
    ticks_per_byte,
)

from conftest import make_config


def test_full_load_needs_only_minimum_gap():
    assert load_gap(1526, 1.0) == 12.0


def test_half_load_gap():
    assert load_gap(1526, 0.5) == 1550.0


def test_gap_shrinks_as_load_grows():
    gaps = [load_gap(1526, load / 100) for load in range(1, 101)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] == 12.0


def test_duration_half_load():
    assert duration(1526, 31702, 0.5, 100) == pytest.approx(7.80122816, abs=1e-9)


def test_duration_full_load():
    assert duration(1526, 33510, 1.0, 100) == pytest.approx(4.1230704, abs=1e-9)


def test_duration_identity():
    # T * L * R == (S + 12) * 8 * F by construction
    for s in (72, 136, 524, 1526):
        for frames in (1, 9, 1000):
            for load in (0.07, 0.5, 0.998, 1.0):
                for rate in (100, 1000):
                    t = duration(s, frames, load, rate)
                    assert t * load * rate_bits(rate) == pytest.approx(
                        (s + 12) * 8 * frames, rel=1e-12)


def test_frame_time_is_exact():
    assert frame_time(1526, 100) == 123.04e-6
    assert frame_time(1526, 1000) == 12.304e-6
    assert frame_time(72, 100) == 6.72e-6


def test_achieved_load_between_frame_starts():
    # window between starts clips the last frame, so > 1.0 is expected
    assert achieved_load(1526, 624, 0.0, 0.076653, 100) == pytest.approx(
        1.0016171578, rel=1e-9)


def test_ticks_per_byte():
    assert ticks_per_byte(100) == 10
    assert ticks_per_byte(1000) == 1


def test_domain_errors():
    with pytest.raises(LoadError):
        load_gap(1526, 0)
    with pytest.raises(LoadError):
        load_gap(1526, 1.2)
    with pytest.raises(LoadError):
        load_gap(71, 0.5)
    with pytest.raises(LoadError):
        duration(1526, 0, 0.5, 100)
    with pytest.raises(LoadError):
        frame_time(1526, 200)
    with pytest.raises(LoadError):
        achieved_load(1526, 10, 1.0, 1.0, 100)
    with pytest.raises(LoadError):
        ticks_per_byte(10)
    with pytest.raises(LoadError):
        rate_bits(0)


def test_load_config_validation():
    with pytest.raises(LoadError):
        make_config(0.0, 10)
    with pytest.raises(LoadError):
        make_config(1.1, 10)
    with pytest.raises(LoadError):
        make_config(0.5, 0)
    with pytest.raises(LoadError):
        make_config(0.5, 10, rate=333)
    assert make_config(0.5, 10).size == 1526
    assert make_config(0.5, 10, payload_len=46).size == 72


def test_gap_schedule_full_load_gigabit():
    plan = gap_schedule(make_config(1.0, 50, rate=1000))
    assert plan.size == 1526
    assert plan.gap_nominal == 12.0
    assert plan.gap_ticks == (12,) * 50
    assert not plan.clamped


def test_gap_schedule_half_load():
    plan = gap_schedule(make_config(0.5, 40))
    assert plan.gap_nominal == 1550.0
    assert plan.nominal_ticks == 15500
    assert plan.gap_ticks == (15500,) * 40
    assert plan.duration == pytest.approx(duration(1526, 40, 0.5, 100))


def test_gap_schedule_fractional_nominal():
    # load 1/3 on 72-byte frames: nominal gap is not a whole tick
    plan = gap_schedule(make_config(1 / 3, 1000, payload_len=46))
    assert plan.nominal_ticks.denominator > 1
    total = sum(plan.gap_ticks)
    assert abs(total - plan.nominal_ticks * 1000) < 1
    assert set(plan.gap_ticks) <= {
        math.floor(plan.nominal_ticks), math.ceil(plan.nominal_ticks)}


def test_quantize_gaps_clamps_to_minimum():
    gaps, clamped = quantize_gaps(Fraction(5), 4, 120)
    assert gaps == [120] * 4
    assert clamped
    gaps, clamped = quantize_gaps(Fraction(120), 4, 120)
    assert not clamped


def test_quantize_gaps_rejects_zero_frames():
    with pytest.raises(LoadError):
        quantize_gaps(Fraction(12), 0, 12)


@given(
    num=st.integers(min_value=0, max_value=10**9),
    den=st.integers(min_value=1, max_value=10**6),
    frames=st.integers(min_value=1, max_value=500),
)
def test_quantize_gaps_error_carry(num, den, frames):
    nominal = Fraction(num, den)
    gaps, clamped = quantize_gaps(nominal, frames, 0)
    assert not clamped
    assert len(gaps) == frames
    # the cumulative schedule never drifts a full tick from exact
    assert sum(gaps) == (frames * nominal.numerator) // nominal.denominator
    assert set(gaps) <= {math.floor(nominal), math.ceil(nominal)}


def test_run_ticks_covers_schedule():
    for load in (1.0, 0.5, 1 / 3, 0.076653):
        for payload_len in (46, 1500):
            for rate in (100, 1000):
                config = make_config(load, 321, payload_len, rate)
                plan = gap_schedule(config)
                s_ticks = plan.size * ticks_per_byte(rate)
                last = config.frames * s_ticks + sum(plan.gap_ticks)
                assert last <= run_ticks(config)
