"""A one-row endless-runner world driven frame by frame by a CP.

The strip shows the runner's cell and ``lookahead`` cells ahead of it in
four channels (runner, platform, gap, obstacle). The world advances in
lock-step with the program: every ``onset()`` is one frame, and a jump
pressed during a frame takes effect at the next onset.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from .cp.runtime import EpisodeEnd, Environment, Runtime
from .executive import BoundCp, Executive, TaskSpec, TaxonomyNode, conformance, classify_task
from .hierarchy import Hierarchy, Stimulus, build_hierarchy, pointwise_config
from .harness import rng_for

RUNNER_CHANNELS = ("runner", "platform", "gap", "obstacle")
PLATFORM, GAP, OBSTACLE = "platform", "gap", "obstacle"


class DeadWorld(RuntimeError):
    pass


@dataclass(frozen=True)
class RunnerConfig:
    lookahead: int = 10
    G: int = 4  # cells covered by one jump
    frame_cycles: int = 2
    step_cap: int = 500
    platform_run: tuple[int, int] | None = None  # default (G+2, G+8)
    obstacle_prob: float = 0.3

    def __post_init__(self):
        if self.lookahead < 1 or self.G < 1 or self.step_cap < 1 or self.frame_cycles < 1:
            raise ValueError("lookahead, G, step_cap and frame_cycles must be positive")
        lo, hi = self.runs
        if not self.G + 1 <= lo <= hi:
            raise ValueError(f"platform runs must be at least G+1 = {self.G + 1} cells")
        if not 0 <= self.obstacle_prob <= 1:
            raise ValueError("obstacle_prob must lie in [0, 1]")

    @property
    def runs(self) -> tuple[int, int]:
        return self.platform_run or (self.G + 2, self.G + 8)


def generate_track(seed: int, length: int, config: RunnerConfig = RunnerConfig()) -> tuple[str, ...]:
    """Platform runs separated by single hazards: a gap of width 1..G or an obstacle of width 1."""
    rng = rng_for(seed, 0)
    lo, hi = config.runs
    cells: list[str] = []
    while len(cells) < length:
        cells += [PLATFORM] * int(rng.integers(lo, hi + 1))
        if rng.random() < config.obstacle_prob:
            cells.append(OBSTACLE)
        else:
            cells += [GAP] * int(rng.integers(1, config.G + 1))
    return tuple(cells[:length])


@dataclass(frozen=True)
class RunnerWorld:
    track: tuple[str, ...]
    G: int = 4
    pos: int = 0
    airborne: int = 0  # cells of flight left
    score: int = 0
    alive: bool = True
    jumps: tuple[int, ...] = ()  # positions at which a jump was started

    def __post_init__(self):
        if self.track and self.track[0] != PLATFORM:
            raise ValueError("the runner must start on a platform")
        run = 0
        for c in self.track + (PLATFORM,):
            if c == GAP:
                run += 1
            else:
                if run > self.G:
                    raise ValueError(f"gap of width {run} exceeds jump length {self.G}")
                run = 0

    def cell(self, i: int) -> str:
        return self.track[i] if 0 <= i < len(self.track) else PLATFORM

    def hazard_distance(self) -> int | None:
        """Cells to the next gap or obstacle ahead, or None if the rest of the track is clear."""
        for d in range(1, len(self.track) - self.pos):
            if self.cell(self.pos + d) != PLATFORM:
                return d
        return None


def runner_step(world: RunnerWorld, action: str = "none") -> RunnerWorld:
    """Scroll one cell; a jump keeps the runner airborne over the next G cells."""
    if not world.alive:
        raise DeadWorld("cannot step a dead world")
    if action not in ("none", "jump"):
        raise ValueError(f"unknown action {action!r}")
    airborne, jumps = world.airborne, world.jumps
    if action == "jump" and airborne == 0:
        airborne = world.G
        jumps = jumps + (world.pos,)
    pos = world.pos + 1
    if airborne > 0:
        airborne -= 1
        alive = True
    else:
        alive = world.cell(pos) == PLATFORM
    return replace(
        world, pos=pos, airborne=airborne, alive=alive, score=world.score + (1 if alive else 0), jumps=jumps
    )


def render_strip(world: RunnerWorld, lookahead: int) -> Stimulus:
    v = np.zeros((len(RUNNER_CHANNELS), 1, lookahead + 1))
    v[0, 0, 0] = 1.0
    for d in range(lookahead + 1):
        v[RUNNER_CHANNELS.index(world.cell(world.pos + d)), 0, d] = 1.0
    return Stimulus(v)


class RunnerEnv(Environment):
    """Environment adapter: onset() advances the world and applies the latched jump."""

    channel_names = RUNNER_CHANNELS

    def __init__(self, world: RunnerWorld, config: RunnerConfig = RunnerConfig()):
        self.world = world
        self.config = config
        self.frames = 0
        self._jump = False
        self.log: list[dict] = []

    def scene(self) -> Stimulus:
        return render_strip(self.world, self.config.lookahead)

    def onset(self, rt: Runtime) -> None:
        if self.frames > 0:
            action = "jump" if self._jump else "none"
            hazard = self.world.hazard_distance()
            self.world = runner_step(self.world, action)
            self.log.append({"frame": self.frames, "action": action, "hazard": hazard, "alive": self.world.alive})
            self._jump = False
        if not self.world.alive:
            raise EpisodeEnd(f"runner fell at cell {self.world.pos}")
        if self.frames >= self.config.step_cap:
            raise EpisodeEnd(f"step cap {self.config.step_cap} reached")
        self.frames += 1

    def press(self, key: str, t: int) -> None:
        if key == "jump":
            self._jump = True


def runner_hierarchy(config: RunnerConfig = RunnerConfig()) -> Hierarchy:
    return build_hierarchy(pointwise_config(len(RUNNER_CHANNELS), 1, config.lookahead + 1))


RUNNER_TASK = TaskSpec(TaxonomyNode("Detection", "n"), deadline=10**9, cp="runner")


@dataclass
class RunnerEpisode:
    seed: int
    score: int
    frames: int
    alive: bool
    jumps: tuple[int, ...]
    log: list[dict] = field(default_factory=list)
    trace: object = None  # SignalTrace of the final execution
    conformance: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "score": self.score,
            "frames": self.frames,
            "alive": self.alive,
            "jumps": list(self.jumps),
        }


def run_runner_episode(
    cp: BoundCp | None,
    world: RunnerWorld,
    executive: Executive | None = None,
    config: RunnerConfig = RunnerConfig(),
    seed: int = 0,
) -> RunnerEpisode:
    """Drive ``world`` with the runner CP until the runner falls or the step cap is hit."""
    executive = executive or Executive()
    bound = cp or executive.select(RUNNER_TASK)
    h = runner_hierarchy(config)
    envs: list[RunnerEnv] = []

    def factory(b: BoundCp, previous: Runtime | None) -> Runtime:
        env = RunnerEnv(world, config)
        envs.append(env)
        return Runtime(h, env, params=b.params)

    outcome = executive.run(RUNNER_TASK, factory, bound)
    env = envs[-1]
    trace = outcome.final.trace
    return RunnerEpisode(
        seed=seed,
        score=env.world.score,
        frames=env.frames,
        alive=env.world.alive,
        jumps=env.world.jumps,
        log=env.log,
        trace=trace,
        conformance=conformance(trace, classify_task(RUNNER_TASK), per_frame=True),
    )


def random_policy_episode(world: RunnerWorld, seed: int, p_jump: float = 0.5, step_cap: int = 500) -> RunnerWorld:
    """Baseline: jump with probability ``p_jump`` every frame."""
    rng = rng_for(seed, 1)
    for _ in range(step_cap):
        if not world.alive:
            break
        world = runner_step(world, "jump" if rng.random() < p_jump else "none")
    return world


def track_for(seed: int, config: RunnerConfig = RunnerConfig()) -> tuple[str, ...]:
    return generate_track(seed, config.step_cap + config.lookahead + 2, config)


@dataclass
class RunnerComparison:
    seeds: tuple[int, ...]
    cp_scores: list[int]
    random_scores: list[int]

    @property
    def cp_mean(self) -> float:
        return statistics.fmean(self.cp_scores)

    @property
    def random_mean(self) -> float:
        return statistics.fmean(self.random_scores)

    @property
    def ratio(self) -> float:
        return self.cp_mean / self.random_mean if self.random_mean > 0 else float("inf")

    def to_dict(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "cp_scores": self.cp_scores,
            "random_scores": self.random_scores,
            "cp_mean": round(self.cp_mean, 6),
            "random_mean": round(self.random_mean, 6),
            "ratio": round(self.ratio, 6),
        }


def compare_with_random(
    n: int = 100, seed: int = 0, config: RunnerConfig = RunnerConfig(), executive: Executive | None = None
) -> RunnerComparison:
    """Mean scores of the runner CP and of the random baseline on tracks ``seed .. seed+n-1``."""
    seeds = tuple(range(seed, seed + n))
    ex = executive or Executive()
    cp_scores, rnd_scores = [], []
    for s in seeds:
        world = RunnerWorld(track_for(s, config), G=config.G)
        cp_scores.append(run_runner_episode(None, world, ex, config, seed=s).score)
        rnd_scores.append(random_policy_episode(world, s, step_cap=config.step_cap).score)
    return RunnerComparison(seeds, cp_scores, rnd_scores)
