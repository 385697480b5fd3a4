"""Simulated clock shared by every operation that declares a cycle cost."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class SimClock:
    t: int = 0

    def advance(self, cycles: int) -> int:
        if cycles < 0:
            raise ValueError(f"cannot advance clock by {cycles} cycles")
        self.t += int(cycles)
        return self.t


def tick(clock: SimClock | None, cycles: int) -> None:
    if clock is not None:
        clock.advance(cycles)
