"""Selective Tuning: top-down branch-and-bound localisation of the attended item.

The winning top unit (cFOA) is traced down the hierarchy.  At each step
the inputs of the current pass zone are split into winners (response at
least ``theta`` times the best input of the same parent) and losers.
Losers and the winners' normalisation surround get zero gain, responses
are recomputed, and the summed pass-zone response of every layer is
sampled.  A sample that drops by more than ``epsilon`` means the cFOA was
held up by context rather than by its own input: the search is reset on
the next-best candidate, with the failed one inhibited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .clock import SimClock, tick
from .fixation import IorMap, mark_ior
from .hierarchy import Cell, GainField, Hierarchy, LayerState, Unit, compute_responses


class NoCandidate(Exception):
    """No unit passes the task filter; the executive treats this as task failure."""


class LocalizationFailure(Exception):
    def __init__(self, message: str, violations: list | None = None):
        super().__init__(message)
        self.violations = violations or []


@dataclass(frozen=True)
class WtaParams:
    theta: float = 0.95
    epsilon: float = 1e-9
    max_restarts: int = 3
    suppression: str = "zero-gain"

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")
        if self.suppression != "zero-gain":
            raise ValueError(f"unsupported suppression mode {self.suppression!r}")


@dataclass(frozen=True)
class FocusOfAttention:
    top_unit: Unit
    pass_zone: dict[int, frozenset[Unit]]
    input_region: frozenset[Cell]

    @property
    def lowest_layer(self) -> int:
        return min(self.pass_zone)

    def centroid(self) -> tuple[float, float]:
        """Mean (y, x) of the input region."""
        cells = sorted(self.input_region)
        if not cells:
            return (float("nan"), float("nan"))
        return (sum(c[0] for c in cells) / len(cells), sum(c[1] for c in cells) / len(cells))


@dataclass
class MonotoneHistory:
    """Per-layer samples (t, summed pass-zone response) taken during descent."""

    samples: dict[int, list[tuple[int, float]]] = field(default_factory=dict)

    def add(self, layer: int, t: int, value: float) -> None:
        seq = self.samples.setdefault(layer, [])
        if seq and t <= seq[-1][0]:
            raise ValueError(f"layer {layer}: sample time {t} not after {seq[-1][0]}")
        seq.append((t, float(value)))

    def values(self, layer: int) -> list[float]:
        return [v for _, v in self.samples.get(layer, [])]


@dataclass(frozen=True)
class Violation:
    layer: int
    step: int


def check_monotone(history: MonotoneHistory | dict[int, list[float]], epsilon: float = 1e-9) -> Violation | None:
    """``None`` when every layer's samples satisfy rho(t+1) >= rho(t) - epsilon."""
    if isinstance(history, MonotoneHistory):
        series = {lam: history.values(lam) for lam in history.samples}
    else:
        series = {lam: list(v) for lam, v in history.items()}
    found = None
    for lam in sorted(series, reverse=True):
        vals = series[lam]
        for step in range(1, len(vals)):
            if vals[step] < vals[step - 1] - epsilon:
                if found is None or step < found.step:
                    found = Violation(lam, step)
                break
    return found


def select_cfoa(
    top_responses: LayerState | np.ndarray,
    task_filter: Iterable[int] | Callable[[Unit], bool] | None = None,
    *,
    layer: int | None = None,
    exclude: Iterable[Unit] = (),
    clock: SimClock | None = None,
) -> Unit:
    """Strongest positive top unit passing the filter; ties go to the canonical first.

    ``task_filter`` is a feature subset or a predicate over unit coordinates.
    """
    if isinstance(top_responses, LayerState):
        layer = len(top_responses.responses) - 1
        arr = top_responses.top
    else:
        arr = np.asarray(top_responses)
        layer = -1 if layer is None else layer
    if task_filter is None:
        keep = lambda u: True  # noqa: E731
    elif callable(task_filter):
        keep = task_filter
    else:
        feats = set(int(f) for f in task_filter)
        keep = lambda u: u[1] in feats  # noqa: E731
    excluded = set(exclude)
    tick(clock, 1)
    best, best_v = None, 0.0
    f, h, w = arr.shape
    for k in range(f):
        for y in range(h):
            for x in range(w):
                v = float(arr[k, y, x])
                u = (layer, k, y, x)
                if v > best_v and u not in excluded and keep(u):
                    best, best_v = u, v
    if best is None:
        raise NoCandidate("no candidate passes the task filter")
    return best


def partial_stop_layer(L: int) -> int:
    return math.ceil(L / 2)


@dataclass
class LocalizeResult:
    foa: FocusOfAttention
    history: MonotoneHistory
    gains: GainField
    state: LayerState
    cfoa: Unit
    restarts: int = 0
    violations: list[tuple[Unit, Violation]] = field(default_factory=list)
    inhibited: set[Unit] = field(default_factory=set)
    cycles: int = 0


def _pass_sum(resp, units) -> float:
    return float(sum(resp[u[0]][u[1], u[2], u[3]] for u in units))


def _descend(hierarchy, stimulus, gains, cfoa, theta, epsilon, stop, t0):
    """One descent attempt.  Returns (pass_zone, gains, resp, history, violation, t)."""
    g = gains.copy()
    resp = compute_responses(hierarchy, stimulus, g)
    L = hierarchy.L
    t = t0
    pass_zone: dict[int, frozenset[Unit]] = {L: frozenset([cfoa])}
    history = MonotoneHistory()
    history.add(L, t, _pass_sum(resp, pass_zone[L]))
    pre = resp
    for lam in range(L, stop - 1, -1):
        below = lam - 1
        parents = sorted(pass_zone[lam])
        fan = {p: hierarchy.inputs_of(p) for p in parents}
        candidates = set().union(*fan.values()) if fan else set()
        # Surround first: context around the candidate inputs (and, at the
        # top, around the cFOA itself) is silenced before the winners are
        # judged, so neighbouring items cannot split one item's units.
        context = set()
        for u in candidates:
            context.update(hierarchy.surround_of(u))
        if lam == L:
            context.update(hierarchy.surround_of(cfoa))
        here = {(u[0], u[2], u[3]) for u in candidates}
        context = {u for u in context if (u[0], u[2], u[3]) not in here}
        for u in context:
            g.gains[u[0]][u[1], u[2], u[3]] = 0.0
        resp = compute_responses(hierarchy, stimulus, g)
        winners: set[Unit] = set()
        for p in parents:
            vals = [float(resp[below][u[1], u[2], u[3]]) for u in fan[p]]
            m = max(vals, default=0.0)
            if m > 0:
                winners.update(u for u, v in zip(fan[p], vals) if v > 0 and v >= theta * m)
        if below >= 1:
            history.add(below, t, _pass_sum(pre, winners))
        for u in candidates - winners:
            g.gains[u[0]][u[1], u[2], u[3]] = 0.0
        t += 1
        resp = compute_responses(hierarchy, stimulus, g)
        pass_zone[below] = frozenset(winners)
        for layer, units in pass_zone.items():
            if layer >= 1:
                history.add(layer, t, _pass_sum(resp, units))
        pre = resp
        v = check_monotone(history, epsilon)
        if v is not None:
            return pass_zone, g, resp, history, v, t
    return pass_zone, g, resp, history, None, t


def localize(
    hierarchy: Hierarchy,
    state: LayerState,
    gains: GainField,
    cfoa: Unit,
    params: WtaParams = WtaParams(),
    *,
    mode: str = "full",
    task_filter=None,
    inhibited: Iterable[Unit] = (),
    clock: SimClock | None = None,
) -> LocalizeResult:
    """Top-down localisation of ``cfoa``; one cycle per layer step, one per reselection.

    ``state`` must hold the responses to ``gains``; ``gains`` is not mutated.
    """
    if mode not in ("full", "partial"):
        raise ValueError(f"unknown localisation mode {mode!r}")
    L = hierarchy.L
    stop = 1 if mode == "full" else partial_stop_layer(L)
    stim = state.stimulus
    blocked = set(inhibited)
    violations: list[tuple[Unit, Violation]] = []
    t = clock.t if clock is not None else 0
    t_start = t
    current = cfoa
    while True:
        pass_zone, g, resp, history, viol, t = _descend(
            hierarchy, stim, gains, current, params.theta, params.epsilon, stop, t
        )
        if viol is None:
            break
        violations.append((current, viol))
        blocked.add(current)
        if len(violations) > params.max_restarts:
            tick(clock, t - t_start)
            raise LocalizationFailure(
                f"monotonicity violated on {len(violations)} attempts", violations
            )
        t += 1
        try:
            current = select_cfoa(state, task_filter, exclude=blocked)
        except NoCandidate as exc:
            tick(clock, t - t_start)
            raise LocalizationFailure("no candidate left after restart", violations) from exc

    lowest = min(pass_zone)
    if lowest == 0:
        region = frozenset((u[2], u[3]) for u in pass_zone[0])
        del pass_zone[0]
    else:
        cells = set()
        for u in pass_zone[lowest]:
            cells |= hierarchy.rf_cells(u)
        lit = {c for c in cells if resp[0][:, c[0], c[1]].max() > 0}
        region = frozenset(lit or cells)
    foa = FocusOfAttention(current, dict(pass_zone), region)
    tick(clock, t - t_start)
    return LocalizeResult(
        foa=foa,
        history=history,
        gains=g,
        state=LayerState(resp, t, stim),
        cfoa=current,
        restarts=len(violations),
        violations=violations,
        inhibited=blocked,
        cycles=t - t_start,
    )


@dataclass(frozen=True)
class SinrDecomposition:
    signal: float
    interference: float
    noise: float

    @property
    def ratio(self) -> float:
        return self.signal / (self.interference + self.noise)


def sinr_decomposition(state: LayerState, foa: FocusOfAttention, layer: int, noise: float = 0.01) -> SinrDecomposition:
    if noise <= 0:
        raise ValueError("noise must be positive")
    if not 1 <= layer < len(state.responses):
        raise ValueError(f"layer {layer} out of range")
    total = float(state.responses[layer].sum())
    s = _pass_sum(state.responses, foa.pass_zone.get(layer, ()))
    return SinrDecomposition(s, max(total - s, 0.0), noise)


def compute_sinr(state: LayerState, foa: FocusOfAttention, layer: int, noise: float = 0.01) -> float:
    """S / (I + N) at ``layer`` with S the pass-zone response and I everything else."""
    return sinr_decomposition(state, foa, layer, noise).ratio


def disengage(
    gains: GainField,
    foa: FocusOfAttention | None = None,
    *,
    snapshot: GainField | None = None,
    ior: IorMap | None = None,
    clock: SimClock | None = None,
) -> tuple[GainField, IorMap | None]:
    """Lift localisation suppression (restore ``snapshot``) and mark the attended region for IOR."""
    tick(clock, 1)
    restored = snapshot.copy() if snapshot is not None else gains
    if ior is not None and foa is not None and foa.input_region:
        ior = mark_ior(ior, foa.input_region)
    return restored, ior
