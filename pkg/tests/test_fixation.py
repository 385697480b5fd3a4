import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attnctl.clock import SimClock
from attnctl.fixation import (
    FixationError,
    FoveaParams,
    GazeState,
    IorMap,
    NothingToFixate,
    SaccadeCommand,
    conspicuity_map,
    decay_ior,
    execute_saccade,
    foveal_region,
    foveate,
    mark_ior,
    plan_saccade,
    round_half_away,
    select_next_fixation,
)
from attnctl.hierarchy import Stimulus


def test_exact_landing():
    cmd = plan_saccade(GazeState(0, 0), (3.0, 4.0))
    assert (cmd.dx, cmd.dy, cmd.duration) == (3, 4, 25)


def test_zero_offset_is_free():
    cmd = plan_saccade(GazeState(2, 2), (2.0, 2.0))
    assert cmd.is_null and cmd.duration == 0
    clock = SimClock()
    assert execute_saccade(GazeState(2, 2), cmd, clock) == GazeState(2, 2)
    assert clock.t == 0


def test_fractional_target_lands_on_nearest_cell():
    cmd = plan_saccade(GazeState(0, 0), (2.4, 2.6))
    assert (cmd.dx, cmd.dy) == (2, 3)
    residual = math.hypot(2.4 - 2, 2.6 - 3)
    best = min(math.hypot(2.4 - x, 2.6 - y) for x in (2, 3) for y in (2, 3))
    assert residual == pytest.approx(best) and residual <= math.sqrt(2) / 2


def test_out_of_bounds_target():
    with pytest.raises(FixationError):
        plan_saccade(GazeState(0, 0), (16.0, 0.0), bounds=(16, 16))


def test_saccade_costs_are_additive():
    clock = SimClock()
    g = execute_saccade(GazeState(0, 0), plan_saccade(GazeState(0, 0), (3, 4)), clock)
    assert g == GazeState(3, 4) and clock.t == 25
    execute_saccade(g, plan_saccade(g, (0, 0)), clock)
    assert clock.t == 50


@settings(max_examples=200, deadline=None)
@given(
    gx=st.integers(0, 15),
    gy=st.integers(0, 15),
    xs=st.floats(0, 15, allow_nan=False),
    ys=st.floats(0, 15, allow_nan=False),
)
def test_landing_minimises_distance(gx, gy, xs, ys):
    cmd = plan_saccade(GazeState(gx, gy), (xs, ys), bounds=(16, 16))
    lx, ly = gx + cmd.dx, gy + cmd.dy
    d = math.hypot(xs - lx, ys - ly)
    best = min(math.hypot(xs - x, ys - y) for x in range(16) for y in range(16))
    assert d <= best + 1e-12
    assert d <= math.sqrt(2) / 2 + 1e-12
    assert cmd.duration == (0 if cmd.is_null else 25)


def test_round_half_away():
    assert [round_half_away(v) for v in (2.5, -2.5, 2.4, 0.5)] == [3, -3, 2, 1]


def test_ior_mark_and_decay():
    ior = mark_ior(IorMap.empty(4, 4, decay=0.1), [(1, 2)])
    assert decay_ior(ior, 0).values[1, 2] == 1.0
    assert decay_ior(ior, 1).values[1, 2] == pytest.approx(0.9)
    assert decay_ior(ior, 3).values[1, 2] == pytest.approx(0.9**3)
    assert not decay_ior(IorMap.empty(4, 4), 10).values.any()
    with pytest.raises(FixationError):
        mark_ior(ior, [(4, 0)])
    with pytest.raises(FixationError):
        IorMap.empty(2, 2, decay=1.0)


def test_select_next_fixation_examples():
    c = np.zeros((4, 4))
    c[2, 3] = 1.0
    assert select_next_fixation(c) == (2, 3)
    c[0, 1] = 0.5
    assert select_next_fixation(c, mark_ior(IorMap.empty(4, 4), [(2, 3)])) == (0, 1)
    assert select_next_fixation(np.ones((3, 3))) == (0, 0)
    with pytest.raises(NothingToFixate):
        select_next_fixation(np.zeros((3, 3)))
    with pytest.raises(FixationError):
        select_next_fixation(-np.ones((2, 2)))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_zero_ior_is_pure_argmax(seed):
    c = np.random.default_rng(seed).random((5, 6))
    y, x = np.unravel_index(np.argmax(c), c.shape)
    assert select_next_fixation(c, IorMap.empty(5, 6)) == (y, x) == select_next_fixation(c)


def test_foveal_region():
    cells = foveal_region(GazeState(0, 0), 8, 8, radius=1.0)
    assert cells == {(0, 0), (0, 1), (1, 0)}


def test_foveate_keeps_foveal_target():
    v = np.zeros((1, 16, 16))
    v[0, 7:9, 7:9] = [[1.0, 0.2], [0.3, 0.9]]
    out = foveate(Stimulus(v), GazeState(8, 8))
    np.testing.assert_array_equal(out.values[0, 7:9, 7:9], v[0, 7:9, 7:9])
    assert out.shape == (1, 16, 16)


def test_foveate_averages_far_periphery():
    v = np.zeros((1, 16, 16))
    v[0, 0, 0] = 1.0
    out = foveate(Stimulus(v), GazeState(15, 15), FoveaParams(radius=3.0, blocks=(2, 4)))
    # eccentricity ~21 puts (0, 0) in the outermost band: 4x4 block mean
    assert out.values[0, 0, 0] == pytest.approx(1.0 / 16)
    assert out.values[0, 3, 3] == pytest.approx(1.0 / 16)


def test_foveate_uniform_is_unchanged_and_deterministic():
    s = Stimulus(np.full((2, 12, 12), 0.4))
    out = foveate(s, GazeState(3, 5))
    np.testing.assert_allclose(out.values, s.values)
    assert foveate(s, GazeState(3, 5)) == out
    with pytest.raises(FixationError):
        foveate(s, GazeState(12, 0))


def test_foveal_detail_does_not_leak_into_periphery():
    v = np.zeros((1, 8, 8))
    v[0, 4, 4] = 1.0
    out = foveate(Stimulus(v), GazeState(4, 4), FoveaParams(radius=1.0, blocks=(2,)))
    assert out.values[0, 4, 4] == 1.0
    assert out.values.sum() == pytest.approx(1.0)


def test_conspicuity_sums_channels():
    v = np.zeros((2, 2, 2))
    v[0, 0, 0], v[1, 0, 0] = 0.2, 0.3
    assert conspicuity_map(Stimulus(v))[0, 0] == pytest.approx(0.5)


def test_command_type():
    assert SaccadeCommand(0, 0, 0).is_null
