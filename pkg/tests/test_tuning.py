import math

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from attnctl.clock import SimClock
from attnctl.fixation import IorMap
from attnctl.hierarchy import GainField, HierarchyConfig, Stimulus, build_hierarchy, default_config, feedforward
from attnctl.tuning import (
    FocusOfAttention,
    LocalizationFailure,
    MonotoneHistory,
    NoCandidate,
    Violation,
    WtaParams,
    check_monotone,
    compute_sinr,
    disengage,
    localize,
    partial_stop_layer,
    select_cfoa,
    sinr_decomposition,
)

from helpers import item_stimulus, random_stimulus, small_hierarchy


def _run(h, stim, **kw):
    g = GainField.ones(h)
    state = feedforward(h, stim, g)
    return state, localize(h, state, g, select_cfoa(state), **kw)


# -- select_cfoa -------------------------------------------------------------


def test_select_strongest():
    a = np.zeros((2, 2, 2))
    a[0, 0, 0], a[1, 1, 1] = 0.9, 0.3
    assert select_cfoa(a, layer=3) == (3, 0, 0, 0)


def test_select_tie_goes_to_canonical_first():
    a = np.zeros((2, 2, 2))
    a[1, 0, 0] = a[0, 1, 1] = 0.9
    assert select_cfoa(a, layer=3) == (3, 0, 1, 1)


def test_select_filter_excludes_global_max():
    rng = np.random.default_rng(3)
    a = rng.random((3, 2, 2))
    best = max(
        ((a[k, y, x], (1, k, y, x)) for k in (1, 2) for y in range(2) for x in range(2)),
        key=lambda p: p[0],
    )[1]
    assert select_cfoa(a, [1, 2], layer=1) == best
    assert select_cfoa(a, lambda u: u[1] != 0, layer=1) == best


def test_select_costs_one_cycle_and_fails_on_empty():
    clock = SimClock()
    select_cfoa(np.ones((1, 1, 1)), clock=clock)
    assert clock.t == 1
    with pytest.raises(NoCandidate):
        select_cfoa(np.zeros((1, 2, 2)))
    with pytest.raises(NoCandidate):
        select_cfoa(np.ones((1, 1, 1)), exclude=[(-1, 0, 0, 0)])


# -- check_monotone ------------------------------------------------------------


def test_check_monotone_examples():
    assert check_monotone({1: [0.5, 0.6, 0.6]}) is None
    assert check_monotone({1: [0.5, 0.3]}, 0.0) == Violation(1, 1)
    assert check_monotone({1: [0.5, 0.499]}, 0.01) is None


def test_history_rejects_time_going_backwards():
    h = MonotoneHistory()
    h.add(1, 3, 0.1)
    with pytest.raises(ValueError):
        h.add(1, 3, 0.2)


def test_params_validated():
    with pytest.raises(ValueError):
        WtaParams(theta=0.0)
    with pytest.raises(ValueError):
        WtaParams(max_restarts=-1)
    with pytest.raises(ValueError):
        WtaParams(suppression="soft")


# -- localize ------------------------------------------------------------------


def test_single_target_gives_projection_cone():
    h = build_hierarchy(default_config())
    stim = item_stimulus(4, 16, [(0, 5, 9, 2, 1.0)])
    clock = SimClock()
    g = GainField.ones(h)
    state = feedforward(h, stim, g)
    res = localize(h, state, g, select_cfoa(state), clock=clock)
    assert res.restarts == 0
    assert res.foa.input_region == {(5, 9), (5, 10), (6, 9), (6, 10)}
    assert clock.t == h.L == res.cycles
    for units in res.foa.pass_zone.values():
        assert all(u[1] == 0 for u in units)
    assert g.is_ones()  # caller's gains untouched


def test_wide_item_needs_lower_theta():
    # normalisation makes a uniform 4x4 item edge-enhanced: its interior
    # responds at 0.74 of its corners, below the default theta
    h = build_hierarchy(default_config())
    stim = item_stimulus(4, 16, [(0, 4, 8, 4, 1.0)])
    g = GainField.ones(h)
    state = feedforward(h, stim, g)
    with pytest.raises(LocalizationFailure):
        localize(h, state, g, select_cfoa(state))
    res = localize(h, state, g, select_cfoa(state), WtaParams(theta=0.7))
    assert res.restarts == 0
    assert res.foa.input_region == {(y, x) for y in range(4, 8) for x in range(8, 12)}


def test_distractor_leaves_pass_zone_and_cfoa_grows():
    h = build_hierarchy(HierarchyConfig((1, 4, 4), (1, 1), (2,), (2,), beta=0.5))
    stim = item_stimulus(1, 4, [(0, 0, 0, 2, 1.0), (0, 2, 2, 2, 0.6)])
    state, res = _run(h, stim)
    assert res.cfoa == (2, 0, 0, 0)
    assert all(u[2] < 2 and u[3] < 2 for u in res.foa.pass_zone[1])
    assert res.state.rho(res.cfoa) >= state.rho(res.cfoa)
    # brute force: with the distractor gone the top unit sees no context at all
    alone = feedforward(h, item_stimulus(1, 4, [(0, 0, 0, 2, 1.0)]), GainField.ones(h))
    assert res.state.rho(res.cfoa) == pytest.approx(alone.rho(res.cfoa))


def test_context_driven_winner_triggers_restart():
    # the left block wins on a coalition of weak cells; pruning them exposes it
    h = build_hierarchy(HierarchyConfig((1, 2, 4), (1, 1), (2,), (2,), beta=0.1))
    v = np.zeros((1, 2, 4))
    v[0, :, 0:2] = [[1.0, 0.6], [0.6, 0.6]]
    v[0, 0, 2] = 0.9
    g = GainField.ones(h)
    state = feedforward(h, Stimulus(v), g)
    first = select_cfoa(state)
    assert first == (2, 0, 0, 0)
    res = localize(h, state, g, first)
    assert res.restarts == 1 and res.violations[0][0] == first
    assert res.cfoa == (2, 0, 0, 1) and first in res.inhibited
    assert res.foa.input_region == {(0, 2)}
    assert res.cycles == 1 + 1 + h.L


def test_restart_limit_raises():
    h = build_hierarchy(HierarchyConfig((1, 2, 4), (1, 1), (2,), (2,), beta=0.1))
    v = np.zeros((1, 2, 4))
    v[0, :, 0:2] = [[1.0, 0.6], [0.6, 0.6]]
    v[0, 0, 2] = 0.9
    g = GainField.ones(h)
    state = feedforward(h, Stimulus(v), g)
    with pytest.raises(LocalizationFailure) as err:
        localize(h, state, g, select_cfoa(state), WtaParams(max_restarts=0))
    assert len(err.value.violations) == 1


def test_partial_descent_stops_half_way():
    assert partial_stop_layer(5) == 3 and partial_stop_layer(4) == 2
    h = build_hierarchy(default_config())
    stim = item_stimulus(4, 16, [(1, 0, 0, 4, 0.8)])
    _, res = _run(h, stim, mode="partial")
    assert res.foa.lowest_layer == 2
    assert res.cycles == 3
    assert res.foa.input_region == {(y, x) for y in range(4) for x in range(4)}
    with pytest.raises(ValueError):
        _run(h, stim, mode="half")


def test_focus_centroid():
    foa = FocusOfAttention((2, 0, 0, 0), {2: frozenset()}, frozenset({(0, 0), (2, 2)}))
    assert foa.centroid() == (1.0, 1.0)
    assert all(math.isnan(c) for c in FocusOfAttention((2, 0, 0, 0), {}, frozenset()).centroid())


# -- SINR ------------------------------------------------------------------------


def test_sinr_examples():
    h = build_hierarchy(HierarchyConfig((1, 1, 2), (1, 1), (1,), (1,), beta=0.0))
    state = feedforward(h, Stimulus(np.array([[[1.0, 0.0]]])), GainField.ones(h))
    foa = FocusOfAttention((2, 0, 0, 0), {1: frozenset({(1, 0, 0, 0)}), 2: frozenset({(2, 0, 0, 0)})}, frozenset())
    d = sinr_decomposition(state, foa, 2, noise=1.0)
    assert (d.signal, d.interference) == (1.0, 0.0)
    assert compute_sinr(state, foa, 2, noise=0.5) == 2.0
    empty = FocusOfAttention((2, 0, 0, 1), {2: frozenset({(2, 0, 0, 1)})}, frozenset())
    assert compute_sinr(state, empty, 2) == 0.0
    with pytest.raises(ValueError):
        compute_sinr(state, foa, 0)
    with pytest.raises(ValueError):
        compute_sinr(state, foa, 2, noise=0.0)


def test_sinr_grows_on_target_plus_distractor():
    h = build_hierarchy(HierarchyConfig((1, 4, 4), (1, 1), (2,), (2,), beta=0.5))
    state, res = _run(h, item_stimulus(1, 4, [(0, 0, 0, 2, 1.0), (0, 2, 2, 2, 0.6)]))
    for lam in (1, 2):
        assert compute_sinr(res.state, res.foa, lam) > compute_sinr(state, res.foa, lam)


# -- disengage -------------------------------------------------------------------


def test_disengage_restores_and_marks_ior():
    h = build_hierarchy(default_config())
    g = GainField.ones(h)
    state = feedforward(h, item_stimulus(4, 16, [(0, 1, 1, 2, 1.0), (1, 9, 9, 2, 0.7)]), g)
    res = localize(h, state, g, select_cfoa(state))
    assert not res.gains.is_ones()
    clock = SimClock()
    ior = IorMap.empty(16, 16)
    restored, ior2 = disengage(res.gains, res.foa, snapshot=g, ior=ior, clock=clock)
    assert restored == g and clock.t == 1
    assert {tuple(c) for c in np.argwhere(ior2.values == 1.0)} == set(res.foa.input_region)
    again, ior3 = disengage(restored, res.foa, snapshot=g, ior=ior2)
    assert again == restored and ior3 == ior2


def test_disengage_without_engage_is_noop():
    h = small_hierarchy()
    g = GainField.ones(h)
    out, ior = disengage(g)
    assert out == g and ior is None


# -- properties --------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), beta=st.sampled_from([0.1, 0.5, 2.0]))
@example(seed=212, beta=0.1)  # runs out of candidates before the restart cap
def test_localize_invariants(seed, beta):
    h = small_hierarchy(beta=beta)
    stim = random_stimulus(np.random.default_rng(seed))
    g = GainField.ones(h)
    state = feedforward(h, stim, g)
    try:
        cfoa = select_cfoa(state)
    except NoCandidate:
        return
    params = WtaParams()
    clock = SimClock()
    try:
        res = localize(h, state, g, cfoa, params, clock=clock)
    except LocalizationFailure as exc:
        n = len(exc.violations)
        assert n == params.max_restarts + 1 or (1 <= n and "no candidate" in str(exc))
        assert clock.t <= (params.max_restarts + 1) * (h.L + 1)
        return
    # monotone by construction
    assert check_monotone(res.history, params.epsilon) is None
    # bounded restarts and cycles
    assert res.restarts <= params.max_restarts
    assert res.cycles == clock.t <= (res.restarts + 1) * h.L + res.restarts
    # connectivity: every pass-zone unit feeds a pass-zone unit one layer up
    zone = res.foa.pass_zone
    for lam in range(1, h.L):
        for u in zone[lam]:
            assert any(u in h.inputs_of(p) for p in zone[lam + 1])
    assert zone[h.L] == {res.cfoa}
    # determinism
    again = localize(h, state, g, cfoa, params)
    assert again.foa == res.foa and again.history.samples == res.history.samples
