"""Overt attention: gaze, saccades, inhibition of return and foveation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .clock import SimClock, tick
from .hierarchy import Cell, Stimulus
from .objective import Deviation, argmin_setting

T_SACC = 25  # cycles; 250 ms at 10 ms per cycle


class FixationError(ValueError):
    pass


class NothingToFixate(Exception):
    pass


@dataclass(frozen=True)
class GazeState:
    x: int
    y: int

    def check(self, width: int, height: int) -> "GazeState":
        if not (0 <= self.x < width and 0 <= self.y < height):
            raise FixationError(f"gaze ({self.x}, {self.y}) outside {width}x{height}")
        return self


@dataclass(frozen=True)
class SaccadeCommand:
    dx: int
    dy: int
    duration: int

    @property
    def is_null(self) -> bool:
        return self.dx == 0 and self.dy == 0


def round_half_away(v: float) -> int:
    return int(math.floor(abs(v) + 0.5)) * (1 if v >= 0 else -1)


def plan_saccade(
    gaze: GazeState,
    target: tuple[float, float],
    bounds: tuple[int, int] | None = None,
    t_sacc: int = T_SACC,
) -> SaccadeCommand:
    """Offset that lands gaze on the grid cell nearest ``target`` = (x_s, y_s).

    Among the four grid cells around the target the landing cell minimises the
    L2 gaze deviation; ties resolve to the half-away-from-zero rounding.
    ``bounds`` is (width, height).
    """
    xs, ys = float(target[0]), float(target[1])
    if bounds is not None:
        w, h = bounds
        if not (0 <= xs <= w - 1 and 0 <= ys <= h - 1):
            raise FixationError(f"saccade target ({xs}, {ys}) outside {w}x{h}")
    preferred = (round_half_away(xs), round_half_away(ys))
    options = {preferred: [Deviation.spatial(0, (xs, ys), preferred)]}
    for cx in (math.floor(xs), math.ceil(xs)):
        for cy in (math.floor(ys), math.ceil(ys)):
            options.setdefault((int(cx), int(cy)), [Deviation.spatial(0, (xs, ys), (cx, cy))])
    best = argmin_setting(options, prefer=preferred)
    dx, dy = best[0] - gaze.x, best[1] - gaze.y
    duration = 0 if dx == 0 and dy == 0 else t_sacc
    return SaccadeCommand(dx, dy, duration)


def execute_saccade(gaze: GazeState, cmd: SaccadeCommand, clock: SimClock | None = None) -> GazeState:
    tick(clock, cmd.duration)
    return GazeState(gaze.x + cmd.dx, gaze.y + cmd.dy)


# ---------------------------------------------------------------------------
# Inhibition of return


@dataclass(frozen=True, eq=False)
class IorMap:
    values: np.ndarray  # (H, W) in [0, 1]
    decay: float = 0.05

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.min(initial=0.0) < 0 or v.max(initial=0.0) > 1:
            raise FixationError("IOR values must be a 2-D map in [0, 1]")
        if not 0.0 < self.decay < 1.0:
            raise FixationError(f"IOR decay must lie in (0, 1), got {self.decay}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def empty(cls, height: int, width: int, decay: float = 0.05) -> "IorMap":
        return cls(np.zeros((height, width)), decay)

    def __eq__(self, other):
        return isinstance(other, IorMap) and self.decay == other.decay and np.array_equal(self.values, other.values)


def mark_ior(ior: IorMap, region: Iterable[Cell]) -> IorMap:
    v = ior.values.copy()
    h, w = v.shape
    for y, x in region:
        if not (0 <= y < h and 0 <= x < w):
            raise FixationError(f"IOR cell ({y}, {x}) out of bounds")
        v[y, x] = 1.0
    return IorMap(v, ior.decay)


def decay_ior(ior: IorMap, cycles: int) -> IorMap:
    if cycles <= 0:
        return ior
    return IorMap(ior.values * (1.0 - ior.decay) ** cycles, ior.decay)


def select_next_fixation(conspicuity: np.ndarray, ior: IorMap | None = None, min_priority: float = 0.0) -> Cell:
    """Argmax (row-major first) of conspicuity * (1 - ior), as (y, x)."""
    c = np.asarray(conspicuity, dtype=float)
    if c.min(initial=0.0) < 0:
        raise FixationError("conspicuity must be non-negative")
    prio = c if ior is None else c * (1.0 - ior.values)
    idx = int(np.argmax(prio))
    y, x = divmod(idx, prio.shape[1])
    if prio[y, x] <= min_priority:
        raise NothingToFixate("nothing to fixate")
    return (y, x)


def conspicuity_map(image: Stimulus) -> np.ndarray:
    """Channel-summed intensity; contrast against the zero background."""
    return image.values.sum(axis=0)


def foveal_region(gaze: GazeState, height: int, width: int, radius: float = 3.0) -> set[Cell]:
    return {
        (y, x)
        for y in range(height)
        for x in range(width)
        if math.hypot(x - gaze.x, y - gaze.y) <= radius
    }


# ---------------------------------------------------------------------------
# Foveation


@dataclass(frozen=True)
class FoveaParams:
    radius: float = 3.0
    blocks: tuple[int, ...] = (2, 4)  # block size per eccentricity band beyond the fovea


def foveate(stimulus: Stimulus, gaze: GazeState, params: FoveaParams = FoveaParams()) -> Stimulus:
    """Acuity falloff: full values within ``radius``; aligned block means further out.

    Band k (k = 1, 2, ...) covers eccentricities in (k*r, (k+1)*r] and uses
    ``blocks[k-1]``; the last block size applies to everything beyond. A
    block mean pools only the block's peripheral cells, so foveal detail does
    not bleed into its surround.
    """
    c, h, w = stimulus.shape
    gaze.check(w, h)
    v = stimulus.values
    r = params.radius
    ys, xs = np.mgrid[0:h, 0:w]
    ecc = np.hypot(xs - gaze.x, ys - gaze.y)
    outside = ecc > r
    out = v.copy()
    means = {}
    for b in params.blocks:
        m = np.zeros_like(v)
        for y0 in range(0, h, b):
            for x0 in range(0, w, b):
                keep = outside[y0 : y0 + b, x0 : x0 + b]
                if keep.any():
                    block = v[:, y0 : y0 + b, x0 : x0 + b]
                    m[:, y0 : y0 + b, x0 : x0 + b] = block[:, keep].mean(axis=1)[:, None, None]
        means[b] = m
    for y in range(h):
        for x in range(w):
            e = float(ecc[y, x])
            if e <= r:
                continue
            band = min(int(math.ceil(e / r)) - 1, len(params.blocks))
            out[:, y, x] = means[params.blocks[band - 1]][:, y, x]
    return Stimulus(np.clip(out, 0.0, 1.0))
