"""Synthetic stimuli and a small layered feedforward hierarchy with gains.

Layer 0 is the stimulus itself (one unit per channel and cell).  Layer 1 is
a pointwise feature stage over the stimulus channels; every later layer
pools a ``rf x rf`` window of the layer below with the configured stride.
Every unit, input channels included, carries a multiplicative gain in
[0, 1].  A unit's response is

    rho(u) = a(u) / (1 + beta * pool(u)),   a(u) = g(u) * max(0, sum w * rho_in)

where ``pool(u)`` is the summed gated activity ``a`` of all units (all
features) in the 3x3 spatial neighbourhood of ``u`` at the same layer,
``u`` included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .clock import SimClock, tick

Unit = tuple[int, int, int, int]  # (layer, feature, y, x)
Cell = tuple[int, int]  # (y, x)


class HierarchyError(ValueError):
    pass


class StimulusError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Stimulus


@dataclass(frozen=True, eq=False)
class Stimulus:
    """Multi-channel intensity grid, values in [0, 1], shape (C, H, W)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 3:
            raise StimulusError(f"stimulus must be (channels, height, width), got shape {v.shape}")
        if min(v.shape) < 1:
            raise StimulusError(f"stimulus dimensions must be >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise StimulusError("stimulus values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    @classmethod
    def blank(cls, channels: int, height: int, width: int) -> "Stimulus":
        return cls(np.zeros((channels, height, width)))

    def __eq__(self, other):
        return isinstance(other, Stimulus) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def to_dict(self) -> dict:
        # row-major over (channel, y, x)
        return {
            "width": self.width,
            "height": self.height,
            "channels": self.channels,
            "values": [float(v) for v in self.values.ravel()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Stimulus":
        try:
            w, h, c = int(d["width"]), int(d["height"]), int(d["channels"])
            vals = d["values"]
        except (KeyError, TypeError, ValueError) as exc:
            raise StimulusError(f"malformed stimulus record: {exc}") from exc
        if len(vals) != w * h * c:
            raise StimulusError(f"expected {w * h * c} values, got {len(vals)}")
        return cls(np.asarray(vals, dtype=float).reshape(c, h, w))


def load_stimulus(path: str | Path) -> Stimulus:
    return Stimulus.from_dict(json.loads(Path(path).read_text()))


def dump_stimulus(stim: Stimulus) -> str:
    return json.dumps(stim.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# Configuration and construction


@dataclass(frozen=True, eq=False)
class HierarchyConfig:
    input_shape: tuple[int, int, int]  # (channels, height, width)
    features: tuple[int, ...]  # per layer 1..L
    rf_sizes: tuple[int, ...]  # per connection into layers 2..L
    strides: tuple[int, ...]
    weights: tuple[np.ndarray, ...] | None = None  # per layer 1..L; None -> identity-feature pooling
    beta: float = 0.1
    pool_radius: int = 1
    cycle_ms: float = 10.0

    @property
    def layer_count(self) -> int:
        return len(self.features)


def default_config(channels: int = 4, size: int = 16, beta: float = 0.1) -> HierarchyConfig:
    """Five layers over a ``size`` x ``size`` input; top layer is size/4 square."""
    return HierarchyConfig(
        input_shape=(channels, size, size),
        features=(channels,) * 5,
        rf_sizes=(2, 2, 1, 1),
        strides=(2, 2, 1, 1),
        beta=beta,
    )


def pointwise_config(channels: int, height: int, width: int, layers: int = 5, beta: float = 0.1) -> HierarchyConfig:
    """Hierarchy whose every layer keeps the input resolution (used by the runner strip)."""
    return HierarchyConfig(
        input_shape=(channels, height, width),
        features=(channels,) * layers,
        rf_sizes=(1,) * (layers - 1),
        strides=(1,) * (layers - 1),
        beta=beta,
    )


def identity_weights(features: tuple[int, ...], channels: int, rf_sizes: tuple[int, ...]) -> tuple[np.ndarray, ...]:
    """Each feature pools only its own input feature; spatial weight 1/rf per offset."""
    out = []
    prev = channels
    for i, f in enumerate(features):
        rf = 1 if i == 0 else rf_sizes[i - 1]
        w = np.zeros((f, prev, rf, rf))
        for k in range(min(f, prev)):
            w[k, k] = 1.0 / rf
        out.append(w)
        prev = f
    return tuple(out)


class Hierarchy:
    """Immutable validated hierarchy.  Shapes are indexed by layer, 0 = input."""

    def __init__(self, config: HierarchyConfig):
        self.config = config
        L = config.layer_count
        if L < 2:
            raise HierarchyError(f"layer_count must be >= 2, got {L}")
        c, h, w = (int(v) for v in config.input_shape)
        if min(c, h, w) < 1:
            raise HierarchyError(f"input shape must be positive, got {config.input_shape}")
        if len(config.rf_sizes) != L - 1 or len(config.strides) != L - 1:
            raise HierarchyError(f"need {L - 1} receptive-field sizes and strides for {L} layers")
        if config.beta < 0:
            raise HierarchyError(f"beta must be non-negative, got {config.beta}")
        if config.pool_radius < 0:
            raise HierarchyError("pool_radius must be non-negative")
        weights = config.weights
        if weights is None:
            weights = identity_weights(tuple(config.features), c, tuple(config.rf_sizes))
        if len(weights) != L:
            raise HierarchyError(f"need {L} weight tensors, got {len(weights)}")

        shapes = [(c, h, w)]
        ws: list[np.ndarray | None] = [None]
        for lam in range(1, L + 1):
            f = int(config.features[lam - 1])
            if f < 1:
                raise HierarchyError(f"layer {lam}: feature count must be >= 1")
            pf, ph, pw = shapes[-1]
            if lam == 1:
                rf, s = 1, 1
            else:
                rf, s = int(config.rf_sizes[lam - 2]), int(config.strides[lam - 2])
                if s < 1:
                    raise HierarchyError(f"layer {lam}: stride must be >= 1, got {s}")
                if rf < 1 or rf > ph or rf > pw:
                    raise HierarchyError(
                        f"layer {lam}: receptive field {rf} exceeds layer {lam - 1} extent {ph}x{pw}"
                    )
            wt = np.asarray(weights[lam - 1], dtype=float)
            if wt.shape != (f, pf, rf, rf):
                raise HierarchyError(f"layer {lam}: weight shape {wt.shape}, expected {(f, pf, rf, rf)}")
            if not np.all(np.isfinite(wt)) or wt.min() < 0:
                raise HierarchyError(f"layer {lam}: weights must be finite and non-negative")
            wt = wt.copy()
            wt.setflags(write=False)
            ws.append(wt)
            shapes.append((f, (ph - rf) // s + 1, (pw - rf) // s + 1))

        self.L = L
        self.shapes: tuple[tuple[int, int, int], ...] = tuple(shapes)
        self.weights = tuple(ws)
        self._rf = (1, 1) + tuple(int(r) for r in config.rf_sizes)
        self._stride = (1, 1) + tuple(int(s) for s in config.strides)

    # -- geometry ---------------------------------------------------------

    @property
    def beta(self) -> float:
        return float(self.config.beta)

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return self.shapes[0]

    def rf(self, layer: int) -> int:
        """Receptive-field size of connections into ``layer`` (1 for layer 1)."""
        return self._rf[layer]

    def stride(self, layer: int) -> int:
        return self._stride[layer]

    @property
    def unit_count(self) -> int:
        return sum(int(np.prod(s)) for s in self.shapes[1:])

    def units(self, layer: int | None = None) -> Iterator[Unit]:
        """Units in canonical (layer, feature, y, x) order."""
        layers = range(0, self.L + 1) if layer is None else [layer]
        for lam in layers:
            f, h, w = self.shapes[lam]
            for k, y, x in product(range(f), range(h), range(w)):
                yield (lam, k, y, x)

    def inputs_of(self, unit: Unit) -> list[Unit]:
        """Units at the layer below with a positive weight into ``unit``."""
        lam, f, y, x = unit
        if lam == 0:
            return []
        w = self.weights[lam]
        rf, s = self.rf(lam), self.stride(lam)
        out = []
        for g, dy, dx in product(range(w.shape[1]), range(rf), range(rf)):
            if w[f, g, dy, dx] > 0:
                out.append((lam - 1, g, y * s + dy, x * s + dx))
        return out

    def pool_of(self, unit: Unit) -> list[Unit]:
        """Normalisation neighbourhood of ``unit``: all features, (2r+1)^2 cells."""
        lam, _, y, x = unit
        f, h, w = self.shapes[lam]
        r = self.config.pool_radius
        out = []
        for k in range(f):
            for yy in range(max(0, y - r), min(h, y + r + 1)):
                for xx in range(max(0, x - r), min(w, x + r + 1)):
                    out.append((lam, k, yy, xx))
        return out

    def surround_of(self, unit: Unit) -> list[Unit]:
        """Pool members at other positions; the features sharing ``unit``'s cell are spared."""
        _, _, y, x = unit
        return [u for u in self.pool_of(unit) if (u[2], u[3]) != (y, x)]

    def rf_cells(self, unit: Unit) -> set[Cell]:
        """Stimulus cells in the receptive-field ancestry of ``unit``."""
        lam, _, y, x = unit
        y0, y1, x0, x1 = y, y, x, x
        for k in range(lam, 1, -1):
            rf, s = self.rf(k), self.stride(k)
            y0, x0 = y0 * s, x0 * s
            y1, x1 = y1 * s + rf - 1, x1 * s + rf - 1
        return {(yy, xx) for yy in range(y0, y1 + 1) for xx in range(x0, x1 + 1)}

    def relevance(
        self,
        channels: Iterable[int] | None = None,
        region: Iterable[Cell] | None = None,
        *,
        propagate: bool = True,
    ) -> "Relevance":
        """Relevance masks for every layer from input-channel and input-region relevance.

        A unit is relevant when it draws (through positive weights) from a
        relevant feature and its receptive field touches the relevant region.
        ``None`` means everything is relevant along that dimension. With
        ``propagate=False`` only the input layer is restricted and every
        higher unit counts as relevant.
        """
        c, h, w = self.shapes[0]
        feat = np.ones(c, dtype=bool)
        if channels is not None:
            feat = np.zeros(c, dtype=bool)
            for ch in channels:
                feat[int(ch)] = True
        space = np.ones((h, w), dtype=bool)
        if region is not None:
            space = np.zeros((h, w), dtype=bool)
            for yy, xx in region:
                space[int(yy), int(xx)] = True
        masks = [feat[:, None, None] & space[None]]
        if not propagate:
            masks += [np.ones(shape, dtype=bool) for shape in self.shapes[1:]]
            return Relevance(tuple(masks))
        for lam in range(1, self.L + 1):
            wt = self.weights[lam]
            f, hh, ww = self.shapes[lam]
            feat = (wt[:, feat].sum(axis=(1, 2, 3)) > 0) if feat.any() else np.zeros(f, dtype=bool)
            rf, s = self.rf(lam), self.stride(lam)
            nxt = np.zeros((hh, ww), dtype=bool)
            for dy, dx in product(range(rf), range(rf)):
                nxt |= space[dy : dy + s * (hh - 1) + 1 : s, dx : dx + s * (ww - 1) + 1 : s]
            space = nxt
            masks.append(feat[:, None, None] & space[None])
        return Relevance(tuple(masks))


def build_hierarchy(config: HierarchyConfig) -> Hierarchy:
    return Hierarchy(config)


# ---------------------------------------------------------------------------
# Gains and responses


@dataclass(frozen=True, eq=False)
class Relevance:
    masks: tuple[np.ndarray, ...]  # bool, per layer 0..L


@dataclass(eq=False)
class GainField:
    """Per-unit gains in [0, 1] for the input (index 0) and layers 1..L."""

    gains: list[np.ndarray]

    @classmethod
    def ones(cls, hierarchy: Hierarchy) -> "GainField":
        return cls([np.ones(s) for s in hierarchy.shapes])

    def copy(self) -> "GainField":
        return GainField([g.copy() for g in self.gains])

    def __getitem__(self, unit: Unit) -> float:
        lam, f, y, x = unit
        return float(self.gains[lam][f, y, x])

    def __setitem__(self, unit: Unit, value: float) -> None:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"gain {value} outside [0, 1]")
        lam, f, y, x = unit
        self.gains[lam][f, y, x] = value

    def __mul__(self, other: "GainField") -> "GainField":
        return GainField([a * b for a, b in zip(self.gains, other.gains)])

    def __eq__(self, other):
        return (
            isinstance(other, GainField)
            and len(self.gains) == len(other.gains)
            and all(np.array_equal(a, b) for a, b in zip(self.gains, other.gains))
        )

    def is_ones(self) -> bool:
        return all(np.all(g == 1.0) for g in self.gains)


@dataclass(eq=False)
class LayerState:
    """Responses per layer (index 0 is the gated stimulus) at simulated time ``timestamp``."""

    responses: tuple[np.ndarray, ...]
    timestamp: int
    stimulus: Stimulus

    def rho(self, unit: Unit) -> float:
        lam, f, y, x = unit
        return float(self.responses[lam][f, y, x])

    def layer(self, lam: int) -> np.ndarray:
        return self.responses[lam]

    @property
    def top(self) -> np.ndarray:
        return self.responses[-1]

    def __eq__(self, other):
        return (
            isinstance(other, LayerState)
            and self.timestamp == other.timestamp
            and all(np.array_equal(a, b) for a, b in zip(self.responses, other.responses))
        )


def _box_sum(a: np.ndarray, r: int) -> np.ndarray:
    if r == 0:
        return a.copy()
    h, w = a.shape
    p = np.zeros((h + 2 * r, w + 2 * r))
    p[r : r + h, r : r + w] = a
    out = np.zeros_like(a)
    for dy in range(2 * r + 1):
        for dx in range(2 * r + 1):
            out += p[dy : dy + h, dx : dx + w]
    return out


def compute_responses(hierarchy: Hierarchy, stimulus: Stimulus, gains: GainField) -> tuple[np.ndarray, ...]:
    """Responses of every layer; pure function, no clock."""
    if stimulus.shape != hierarchy.input_shape:
        raise StimulusError(f"stimulus shape {stimulus.shape} does not match hierarchy input {hierarchy.input_shape}")
    beta, r = hierarchy.beta, hierarchy.config.pool_radius
    prev = stimulus.values * gains.gains[0]
    out = [prev]
    for lam in range(1, hierarchy.L + 1):
        w = hierarchy.weights[lam]
        f, h, wd = hierarchy.shapes[lam]
        rf, s = hierarchy.rf(lam), hierarchy.stride(lam)
        drive = np.zeros((f, h, wd))
        for dy, dx in product(range(rf), range(rf)):
            window = prev[:, dy : dy + s * (h - 1) + 1 : s, dx : dx + s * (wd - 1) + 1 : s]
            drive += np.einsum("fg,ghw->fhw", w[:, :, dy, dx], window)
        a = gains.gains[lam] * np.maximum(drive, 0.0)
        pool = _box_sum(a.sum(axis=0), r)
        rho = a / (1.0 + beta * pool)[None]
        out.append(rho)
        prev = rho
    return tuple(out)


def feedforward(hierarchy: Hierarchy, stimulus: Stimulus, gains: GainField, clock: SimClock | None = None) -> LayerState:
    """One feedforward pass; costs L cycles."""
    resp = compute_responses(hierarchy, stimulus, gains)
    tick(clock, hierarchy.L)
    return LayerState(resp, clock.t if clock is not None else hierarchy.L, stimulus)


def apply_priming(gains: GainField, relevance: Relevance, g_low: float, clock: SimClock | None = None) -> GainField:
    """Relevant units keep their gain, irrelevant ones get ``g_low``; a top-down pass of L cycles."""
    if not 0.0 <= g_low < 1.0:
        raise ValueError(f"g_low must lie in [0, 1), got {g_low}")
    if len(relevance.masks) != len(gains.gains) or any(
        m.shape != g.shape for m, g in zip(relevance.masks, gains.gains)
    ):
        raise HierarchyError("relevance shape does not match the gain field")
    tick(clock, len(gains.gains) - 1)
    return GainField([np.where(m, g, g_low) for m, g in zip(relevance.masks, gains.gains)])


def reset_gains(gains: GainField) -> GainField:
    return GainField([np.ones_like(g) for g in gains.gains])
