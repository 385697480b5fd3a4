"""Deviation measures and the summed control objective.

Each Type I control variable i has a reference K_r and an observed value
K_gamma; its deviation is measured per variable kind (L2 for positions,
absolute difference for scalars, 1 - cosine for feature vectors).  The
executive minimises the sum over variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np


def l2(ref, obs) -> float:
    return float(math.dist(tuple(map(float, ref)), tuple(map(float, obs))))


def absdiff(ref, obs) -> float:
    return abs(float(ref) - float(obs))


def cosine_distance(ref, obs) -> float:
    a, b = np.asarray(ref, dtype=float), np.asarray(obs, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0 if na == nb else 1.0
    return float(max(0.0, 1.0 - np.dot(a, b) / (na * nb)))


MEASURES = {"l2": l2, "abs": absdiff, "cosine": cosine_distance}


@dataclass(frozen=True)
class Deviation:
    index: int | str
    reference: object
    observed: object
    measure: str = "abs"

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"unknown deviation measure {self.measure!r}")

    @property
    def value(self) -> float:
        v = MEASURES[self.measure](self.reference, self.observed)
        if not math.isfinite(v):
            raise ValueError(f"deviation {self.index} is not finite")
        return v

    @classmethod
    def spatial(cls, index, ref, obs) -> "Deviation":
        return cls(index, tuple(ref), tuple(obs), "l2")

    @classmethod
    def scalar(cls, index, ref, obs) -> "Deviation":
        return cls(index, float(ref), float(obs), "abs")

    @classmethod
    def feature(cls, index, ref, obs) -> "Deviation":
        return cls(index, tuple(map(float, ref)), tuple(map(float, obs)), "cosine")


def objective_value(deviations: Sequence[Deviation]) -> float:
    return float(sum(d.value for d in deviations))


def argmin_setting(
    options: Mapping[Hashable, Sequence[Deviation]],
    prefer: Hashable | None = None,
    scale: float = 1.0,
) -> Hashable:
    """Setting with the smallest objective; ``prefer`` wins ties, then sorted key order.

    ``scale`` multiplies every deviation (positive scaling never changes the choice).
    """
    if not options:
        raise ValueError("no candidate settings")
    if scale <= 0:
        raise ValueError("scale must be positive")
    scored = {k: scale * objective_value(v) for k, v in options.items()}
    best = min(scored.values())
    tied = [k for k, v in scored.items() if v == best]
    if prefer in tied:
        return prefer
    return sorted(tied, key=repr)[0]
