"""Runtime state a CP acts on, and the implementation of every primitive.

Handlers never touch the clock themselves: each returns its value and the
number of cycles it consumed, and the interpreter decides (deadline check)
whether the step is committed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..clock import SimClock
from ..fixation import (
    FixationError,
    FoveaParams,
    GazeState,
    IorMap,
    NothingToFixate,
    T_SACC,
    conspicuity_map,
    decay_ior,
    execute_saccade,
    foveal_region,
    foveate,
    mark_ior,
    plan_saccade,
    select_next_fixation,
)
from ..hierarchy import GainField, Hierarchy, LayerState, Stimulus, apply_priming, feedforward
from ..memory import DegenerateComparison, DegeneratePercept, WorkingMemory, decision_cycles, match
from ..objective import Deviation
from ..tuning import (
    FocusOfAttention,
    LocalizationFailure,
    NoCandidate,
    WtaParams,
    compute_sinr,
    localize,
    select_cfoa,
)
from .primitives import TYPE_I

DEFAULT_PARAMS = {
    "tau": 0.1,
    "theta": 0.95,
    "epsilon": 1e-9,
    "max_restarts": 3,
    "g_low": 0.5,
    "ior_decay": 0.05,
    "k": 1.0,
    "min_priority": 0.0,
    "detect_threshold": 0.05,
    "reach": 1,
    "noise": 0.01,
}

_RANGES = {
    "tau": (0.0, 1.0, True, True),
    "theta": (0.0, 1.0, False, True),
    "epsilon": (0.0, math.inf, True, False),
    "max_restarts": (0, 1000, True, True),
    "g_low": (0.0, 1.0, True, False),
    "ior_decay": (0.0, 1.0, False, False),
    "k": (0.0, math.inf, False, False),
    "min_priority": (0.0, math.inf, True, False),
    "detect_threshold": (0.0, math.inf, True, False),
    "reach": (1, 10_000, True, True),
    "noise": (0.0, math.inf, False, False),
}


def check_param(name: str, value) -> float | int:
    if name not in _RANGES:
        raise PrimitiveError("bad-param", f"unknown parameter {name!r}")
    lo, hi, lo_closed, hi_closed = _RANGES[name]
    v = float(value)
    ok = (v >= lo if lo_closed else v > lo) and (v <= hi if hi_closed else v < hi)
    if not ok:
        raise PrimitiveError("bad-param", f"parameter {name}={value} out of range")
    if name in ("max_restarts", "reach"):
        if v != int(v):
            raise PrimitiveError("bad-param", f"parameter {name} must be an integer")
        return int(v)
    return v


class PrimitiveError(Exception):
    """A primitive could not complete; becomes a structured Failure."""

    def __init__(self, reason: str, message: str, cycles: int = 0, detail: dict | None = None):
        super().__init__(message)
        self.reason = reason
        self.cycles = cycles
        self.detail = detail or {}


class EpisodeEnd(Exception):
    """The environment has nothing more to show (runner death or step cap)."""


# ---------------------------------------------------------------------------
# Environments


class Environment:
    """What a CP perceives and acts upon."""

    channel_names: tuple[str, ...] = ()
    groups: dict[str, tuple[str, ...]] = {}
    foveated: bool = False
    positive_responses: frozenset[str] = frozenset({"same", "yes", "present", "target"})

    def scene(self) -> Stimulus:
        raise NotImplementedError

    def initial_gaze(self) -> GazeState:
        c, h, w = self.scene().shape
        return GazeState((w - 1) // 2, (h - 1) // 2)

    def onset(self, rt: "Runtime") -> None:
        """Stimulus onset (or, in dynamic worlds, the next frame)."""

    def press(self, key: str, t: int) -> None:
        pass

    def release(self, key: str, t: int) -> None:
        pass

    def channels(self, spec: str) -> list[int]:
        """Channel indices named by ``spec``: channel or group names joined with '+', or 'all'."""
        if spec == "all":
            return list(range(len(self.channel_names)))
        out: list[int] = []
        for part in spec.split("+"):
            part = part.strip()
            if part in self.groups:
                names = self.groups[part]
            else:
                names = (part,)
            for n in names:
                if n not in self.channel_names:
                    raise PrimitiveError("bad-feature", f"unknown feature {n!r}")
                i = self.channel_names.index(n)
                if i not in out:
                    out.append(i)
        return sorted(out)


class StaticScene(Environment):
    """A single stimulus shown from onset until the trial ends."""

    def __init__(self, stimulus: Stimulus, channel_names, groups=None, foveated: bool = False, gaze=None):
        if len(channel_names) != stimulus.channels:
            raise ValueError(f"{len(channel_names)} channel names for {stimulus.channels} channels")
        self._stim = stimulus
        self.channel_names = tuple(channel_names)
        self.groups = {k: tuple(v) for k, v in (groups or {}).items()}
        self.foveated = foveated
        self._gaze = gaze

    def scene(self) -> Stimulus:
        return self._stim

    def initial_gaze(self) -> GazeState:
        return self._gaze if self._gaze is not None else super().initial_gaze()


# ---------------------------------------------------------------------------
# Runtime


@dataclass
class Fixation:
    t_start: int
    t_end: int | None
    x: int
    y: int


@dataclass
class Outcome:
    value: object = None
    cycles: int = 0
    params: tuple[str, ...] = ()
    reference: object = None
    observed: object = None


class Runtime:
    """Handles to the hierarchy, gains, gaze, IOR, working memory, clock and environment."""

    def __init__(
        self,
        hierarchy: Hierarchy,
        env: Environment,
        *,
        params: dict | None = None,
        clock: SimClock | None = None,
        fovea: FoveaParams = FoveaParams(),
        t_sacc: int = T_SACC,
        wm_capacity: int = 7,
        stimulus_on: bool = False,
    ):
        self.h = hierarchy
        self.env = env
        self.clock = clock or SimClock()
        self.params = dict(DEFAULT_PARAMS)
        for k, v in (params or {}).items():
            self.params[k] = check_param(k, v)
        self.fovea = fovea
        self.t_sacc = t_sacc
        self.wm = WorkingMemory(wm_capacity)
        self.priming = GainField.ones(hierarchy)
        self.suppression = GainField.ones(hierarchy)
        c, hgt, wid = hierarchy.input_shape
        self.ior = IorMap.empty(hgt, wid, self.params["ior_decay"])
        self.ior_t = self.clock.t
        self.gaze = env.initial_gaze().check(wid, hgt)
        self.stimulus_on = stimulus_on
        self.onset_t: int | None = self.clock.t if stimulus_on else None
        self.state: LayerState | None = None
        self.ff_state: LayerState | None = None
        self.cfoa = None
        self.foa: FocusOfAttention | None = None
        self.select_filter = None
        self.inhibited: set = set()
        self.engaged = None
        self.planned_fixation = None
        self.response: str | None = None
        self.last_match = None  # (same, deviation)
        self.restarts = 0
        self.localizations: list[dict] = []
        self.fixations: list[Fixation] = []
        self.foveate_calls = 0
        self.frames = 0
        self._feature_cache: dict = {}
        self._retina: Stimulus | None = None
        self.deviations: dict[str, Deviation] = {}
        self.pressed: set[str] = set()
        if stimulus_on:
            self._new_look(self.clock.t)

    # -- helpers ----------------------------------------------------------

    @property
    def effective_gains(self) -> GainField:
        return self.priming * self.suppression

    @property
    def size(self) -> tuple[int, int]:
        _, hgt, wid = self.h.input_shape
        return wid, hgt

    def retina(self) -> Stimulus:
        """Image of the current look; foveated scenes are sampled once per fixation."""
        if self._retina is None:
            scene = self.env.scene()
            if self.env.foveated:
                self._retina = foveate(scene, self.gaze, self.fovea)
                self.foveate_calls += 1
            else:
                self._retina = scene
        return self._retina

    def _new_look(self, t: int) -> None:
        self._retina = None
        self.state = self.ff_state = None
        self.cfoa = self.foa = None
        self.suppression = GainField.ones(self.h)
        if self.fixations and self.fixations[-1].t_end is None:
            self.fixations[-1].t_end = t
        self.fixations.append(Fixation(t, None, self.gaze.x, self.gaze.y))
        if self.env.foveated:
            self.retina()

    def _ior_now(self, t: int) -> IorMap:
        self.ior = decay_ior(self.ior, t - self.ior_t)
        self.ior_t = t
        return self.ior

    def _features(self, spec: str, layer: int) -> np.ndarray:
        """Boolean per-feature mask at ``layer`` for the named input features."""
        key = (spec, layer)
        if key not in self._feature_cache:
            rel = self.h.relevance(self.env.channels(spec))
            self._feature_cache[key] = rel.masks[layer].any(axis=(1, 2))
        return self._feature_cache[key]

    def template(self, spec: str) -> np.ndarray:
        """Top-layer feature vector of the named features."""
        return self._features(spec, self.h.L).astype(float)

    def percept(self) -> np.ndarray:
        if self.cfoa is None or self.state is None:
            raise PrimitiveError("no-candidate", "no attended item to compare")
        _, _, y, x = self.cfoa
        return np.array(self.state.top[:, y, x], dtype=float)

    def location(self, name: str, t: int) -> tuple[float, float]:
        """(x, y) of a named location."""
        wid, hgt = self.size
        if name == "center":
            return ((wid - 1) / 2, (hgt - 1) / 2)
        if name == "gaze":
            return (float(self.gaze.x), float(self.gaze.y))
        if name == "left":
            return ((wid / 2 - 1) / 2, (hgt - 1) / 2)
        if name == "right":
            return (wid / 2 + (wid / 2 - 1) / 2, (hgt - 1) / 2)
        if name == "fixation":
            if self.planned_fixation is None:
                raise PrimitiveError("no-candidate", "no fixation target selected")
            y, x = self.planned_fixation
            return (float(x), float(y))
        if name == "focus":
            if self.foa is not None:
                cy, cx = self.foa.centroid()
                return (cx, cy)
            if self.cfoa is not None:
                cells = self.h.rf_cells(self.cfoa)
                return (
                    sum(c[1] for c in cells) / len(cells),
                    sum(c[0] for c in cells) / len(cells),
                )
            raise PrimitiveError("no-candidate", "nothing attended")
        raise PrimitiveError("bad-argument", f"unknown location {name!r}")

    def _filter(self, spec):
        if spec is None or spec == "all":
            return None
        wid, hgt = self.size
        if spec == "fovea":
            gx, gy, r = self.gaze.x, self.gaze.y, self.fovea.radius

            def foveal(u):
                cells = self.h.rf_cells(u)
                cy = sum(c[0] for c in cells) / len(cells)
                cx = sum(c[1] for c in cells) / len(cells)
                return math.hypot(cx - gx, cy - gy) <= r

            return foveal
        if spec in ("left", "right"):
            half = wid / 2

            def side(u):
                cells = self.h.rf_cells(u)
                cx = sum(c[1] for c in cells) / len(cells)
                return (cx < half) == (spec == "left")

            return side
        mask = self.template(spec) > 0
        return lambda u: bool(mask[u[1]])

    def _inhibit_location(self, unit) -> None:
        """Covert inhibition of every top-layer feature at ``unit``'s position."""
        lam, _, y, x = unit
        for f in range(self.h.shapes[lam][0]):
            self.inhibited.add((lam, f, y, x))

    def _need_state(self) -> LayerState:
        if self.state is None:
            raise PrimitiveError("no-state", "no feedforward responses for the current look")
        return self.state

    def set_deviation(self, key: str, dev: Deviation) -> None:
        self.deviations[key] = dev

    def objective(self) -> float:
        return float(sum(d.value for d in self.deviations.values()))

    # -- primitives -------------------------------------------------------

    def op_prime(self, t, relevance) -> Outcome:
        rel = str(relevance)
        if rel == "all":
            self.priming = GainField.ones(self.h)
        if rel in ("none", "all"):
            return Outcome(cycles=self.h.L, params=(rel,), reference=rel, observed=rel)
        relevance_masks = self.h.relevance(self.env.channels(rel), propagate=False)
        self.priming = apply_priming(self.priming, relevance_masks, self.params["g_low"])
        return Outcome(cycles=self.h.L, params=(rel,), reference=rel, observed=rel)

    def op_disengage(self, t) -> Outcome:
        if self.foa is not None and self.foa.input_region:
            self.ior = mark_ior(self._ior_now(t), self.foa.input_region)
        if self.cfoa is not None:
            self._inhibit_location(self.cfoa)
        self.suppression = GainField.ones(self.h)
        if self.ff_state is not None:
            self.state = self.ff_state
        self.cfoa = self.foa = None
        return Outcome(cycles=1)

    def op_engage(self, t, location) -> Outcome:
        loc = self.location(str(location), t)
        self.engaged = loc
        gaze = (float(self.gaze.x), float(self.gaze.y))
        self.set_deviation("engage", Deviation.spatial("engage", loc, gaze))
        return Outcome(cycles=1, params=(str(location),), reference=loc, observed=gaze)

    def op_feedforward(self, t) -> Outcome:
        if not self.stimulus_on:
            raise PrimitiveError("no-stimulus", "feedforward before stimulus onset")
        self.state = feedforward(self.h, self.retina(), self.effective_gains)
        self.state.timestamp = t + self.h.L
        self.ff_state = self.state
        self.cfoa = self.foa = None
        return Outcome(cycles=self.h.L)

    def op_select_cfoa(self, t, filt=None) -> Outcome:
        state = self._need_state()
        self.select_filter = self._filter(filt)
        try:
            self.cfoa = select_cfoa(state, self.select_filter, exclude=self.inhibited)
        except NoCandidate as exc:
            raise PrimitiveError("no-candidate", str(exc), cycles=1) from exc
        self.foa = None
        return Outcome(value=True, cycles=1, params=(() if filt is None else (str(filt),)))

    def op_localize(self, t, mode="full") -> Outcome:
        state = self._need_state()
        if self.cfoa is None:
            raise PrimitiveError("no-candidate", "localize without a selected focus")
        mode = str(mode)
        p = self.params
        wta = WtaParams(theta=p["theta"], epsilon=p["epsilon"], max_restarts=p["max_restarts"])
        eff = self.effective_gains
        local = SimClock(t)
        try:
            res = localize(
                self.h, state, eff, self.cfoa, wta, mode=mode, task_filter=self.select_filter,
                inhibited=self.inhibited, clock=local,
            )
        except LocalizationFailure as exc:
            self.restarts += len(exc.violations)
            for u, _ in exc.violations:
                self.inhibited.add(u)
            self.localizations.append({"t": t, "ok": False, "restarts": len(exc.violations)})
            raise PrimitiveError("localization", str(exc), cycles=local.t - t) from exc
        L = self.h.L
        sinr_before = compute_sinr(state, res.foa, L, p["noise"])
        sinr_after = compute_sinr(res.state, res.foa, L, p["noise"])
        self.restarts += res.restarts
        self.inhibited |= res.inhibited
        self.cfoa = res.cfoa
        self.foa = res.foa
        self.state = res.state
        sup = [s.copy() for s in self.suppression.gains]
        for lam, (g_new, g_old) in enumerate(zip(res.gains.gains, eff.gains)):
            sup[lam][(g_new == 0) & (g_old != 0)] = 0.0
        self.suppression = GainField(sup)
        self.localizations.append(
            {"t": t, "ok": True, "restarts": res.restarts, "sinr_before": sinr_before, "sinr_after": sinr_after}
        )
        return Outcome(cycles=res.cycles, params=(mode,))

    def op_match(self, t, key) -> Outcome:
        key = str(key)
        ref = self.wm.recall(key)
        if ref is None:
            return Outcome(value=False, cycles=1, params=(key,), reference=key, observed="absent")
        obs = self.percept()
        rho = self.state.rho(self.cfoa)
        try:
            dc = decision_cycles(rho, self.params["k"])
            m = match(ref, obs, self.params["tau"])
        except (DegeneratePercept, DegenerateComparison) as exc:
            raise PrimitiveError("degenerate-percept", str(exc), cycles=0) from exc
        except ValueError as exc:
            raise PrimitiveError("bad-argument", str(exc)) from exc
        dev = Deviation.feature("match", ref, obs)
        self.set_deviation("match", dev)
        self.last_match = (m.same, dev.value)
        return Outcome(
            value=m.same,
            cycles=dc,
            params=(key,),
            reference=tuple(np.round(ref, 6)),
            observed=tuple(np.round(obs, 6)),
        )

    def op_store(self, t, key, value=None) -> Outcome:
        rep = self.percept() if value is None else self.template(str(value))
        self.wm.store(str(key), rep)
        return Outcome(cycles=1, params=(str(key),) + (() if value is None else (str(value),)))

    def op_recall(self, t, key) -> Outcome:
        rep = self.wm.recall(str(key))
        return Outcome(value=rep is not None, cycles=1, params=(str(key),))

    def op_saccade(self, t, target) -> Outcome:
        name = str(target)
        xs, ys = self.location(name, t)
        wid, hgt = self.size
        try:
            cmd = plan_saccade(self.gaze, (xs, ys), (wid, hgt), self.t_sacc)
        except FixationError as exc:
            raise PrimitiveError("bad-argument", str(exc)) from exc
        before = (float(self.gaze.x), float(self.gaze.y))
        self.gaze = execute_saccade(self.gaze, cmd)
        after = (float(self.gaze.x), float(self.gaze.y))
        self.set_deviation("gaze", Deviation.spatial("gaze", (xs, ys), after))
        if not cmd.is_null:
            self._new_look(t + cmd.duration)
        return Outcome(cycles=cmd.duration, params=(name,), reference=(xs, ys), observed=before)

    def op_mark_ior(self, t, region) -> Outcome:
        region = str(region)
        wid, hgt = self.size
        if region == "fovea":
            cells = foveal_region(self.gaze, hgt, wid, self.fovea.radius)
        elif self.foa is not None:
            cells = self.foa.input_region
        elif self.cfoa is not None:
            cells = self.h.rf_cells(self.cfoa)
        else:
            cells = set()
        if region == "focus" and self.cfoa is not None:
            self._inhibit_location(self.cfoa)
        self.ior = mark_ior(self._ior_now(t), cells)
        return Outcome(cycles=0, params=(region,))

    def op_next_fixation(self, t) -> Outcome:
        if not self.stimulus_on:
            raise PrimitiveError("no-stimulus", "nothing shown yet")
        consp = conspicuity_map(self.env.scene())
        try:
            self.planned_fixation = select_next_fixation(consp, self._ior_now(t), self.params["min_priority"])
        except NothingToFixate as exc:
            self.planned_fixation = None
            raise PrimitiveError("no-candidate", str(exc), cycles=1) from exc
        y, x = self.planned_fixation
        return Outcome(value=True, cycles=1, params=(f"{y},{x}",))

    def op_emit(self, t, response) -> Outcome:
        r = str(response)
        if r == "location":
            cx, cy = self.location("focus", t)
            r = f"{cy:g},{cx:g}"
        elif r == "gaze":
            r = f"{self.gaze.y},{self.gaze.x}"
        self.response = r
        return Outcome(value=r, cycles=1, params=(r,))

    def op_press(self, t, key) -> Outcome:
        self.pressed.add(str(key))
        self.env.press(str(key), t)
        return Outcome(cycles=1, params=(str(key),))

    def op_release(self, t, key) -> Outcome:
        self.pressed.discard(str(key))
        self.env.release(str(key), t)
        return Outcome(cycles=1, params=(str(key),))

    def op_detect(self, t, cls) -> Outcome:
        state = self._need_state()
        cls = str(cls)
        top = state.top
        thr = self.params["detect_threshold"]
        if cls == "candidate":
            found = any(
                top[f, y, x] > thr and (self.h.L, f, y, x) not in self.inhibited
                for f, y, x in zip(*np.nonzero(top > thr))
            )
        else:
            mask = self.template(cls) > 0
            found = bool((top[mask] > thr).any())
        return Outcome(value=bool(found), cycles=1, params=(cls,))

    def _cells_of(self, cls: str) -> list[tuple[int, int]]:
        resp = self._need_state().responses[1]
        feats = self._features(cls, 1)
        if not feats.any():
            return []
        act = resp[feats].max(axis=0) > self.params["detect_threshold"]
        return [(int(y), int(x)) for y, x in zip(*np.nonzero(act))]

    def op_relation(self, t, a, b, rel) -> Outcome:
        rel = str(rel)
        ca, cb = self._cells_of(str(a)), self._cells_of(str(b))
        reach = self.params["reach"]
        tests = {
            "next": lambda p, q: p[0] == q[0] and 1 <= q[1] - p[1] <= reach,
            "ahead": lambda p, q: p[0] == q[0] and q[1] > p[1],
            "behind": lambda p, q: p[0] == q[0] and q[1] < p[1],
            "above": lambda p, q: p[1] == q[1] and q[0] < p[0],
            "below": lambda p, q: p[1] == q[1] and q[0] > p[0],
            "near": lambda p, q: max(abs(p[0] - q[0]), abs(p[1] - q[1])) <= reach,
        }
        if rel not in tests:
            raise PrimitiveError("bad-argument", f"unknown relation {rel!r}")
        ok = any(tests[rel](p, q) for p in ca for q in cb)
        return Outcome(value=ok, cycles=1, params=(str(a), str(b), rel))

    def op_wait(self, t, n) -> Outcome:
        return Outcome(cycles=int(n), params=(str(n),))

    def op_set_param(self, t, name, value) -> Outcome:
        name = str(name)
        old = self.params.get(name)
        self.params[name] = check_param(name, value)
        if name == "ior_decay":
            self.ior = IorMap(self._ior_now(t).values, self.params[name])
        self.set_deviation(f"param:{name}", Deviation.scalar(f"param:{name}", self.params[name], self.params[name]))
        return Outcome(cycles=0, params=(name, f"{self.params[name]:g}"), reference=self.params[name], observed=old)

    def op_onset(self, t) -> Outcome:
        self.env.onset(self)
        first = not self.stimulus_on
        self.stimulus_on = True
        self.frames += 1
        if first:
            self.onset_t = t
        self._new_look(t)
        return Outcome(cycles=0)

    # -- reporting --------------------------------------------------------

    def close(self, t: int) -> None:
        if self.fixations and self.fixations[-1].t_end is None:
            self.fixations[-1].t_end = t


__all__ = [
    "DEFAULT_PARAMS",
    "Environment",
    "EpisodeEnd",
    "Fixation",
    "Outcome",
    "PrimitiveError",
    "Runtime",
    "StaticScene",
    "TYPE_I",
    "check_param",
]
