"""Random Walk mobility on the unit torus.

Agents move a fixed distance ``s`` per step along their heading; every
agent redraws its heading at the same time, once every ``m`` steps.

Randomness comes from a Philox (counter-based) generator keyed by
``(seed, trial)``. Initial draws are made agent by agent in the order
x, y, heading; each refresh draws one heading per agent in index order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class WorldConfig:
    n: int
    r: float
    s: float
    m: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one agent, got n={self.n}")
        if not self.r > 0:
            raise ValueError(f"radius must be positive, got r={self.r}")
        if not self.s >= 0 or not np.isfinite(self.s):
            raise ValueError(f"step length must be finite and >= 0, got s={self.s}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"angle-hold duration must be a positive integer, got m={self.m}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class AgentState:
    position: tuple[float, float]
    heading: float


def make_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Independent stream for trial ``trial`` under master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class WorldState:
    """Positions and headings at step ``t``.

    ``step`` never mutates a state; the generator is copied before it is
    advanced, so an old state can be stepped again with the same outcome.
    """

    t: int
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    config: WorldConfig
    rng: np.random.Generator = field(repr=False)
    _dx: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    _dy: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._dx is None:
            angle = TWO_PI * self.heading
            self._dx = self.config.s * np.cos(angle)
            self._dy = self.config.s * np.sin(angle)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    @property
    def agents(self) -> list[AgentState]:
        return [AgentState((float(a), float(b)), float(z))
                for a, b, z in zip(self.x, self.y, self.heading)]

    def same_as(self, other: "WorldState") -> bool:
        return (self.t == other.t and self.config == other.config
                and np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)
                and np.array_equal(self.heading, other.heading)
                and _same_state(self.rng.bit_generator.state, other.rng.bit_generator.state))


def _same_state(a, b) -> bool:
    if isinstance(a, dict):
        return isinstance(b, dict) and a.keys() == b.keys() and all(_same_state(a[k], b[k]) for k in a)
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def _copy_rng(rng: np.random.Generator) -> np.random.Generator:
    bg = np.random.Philox()
    bg.state = rng.bit_generator.state
    return np.random.Generator(bg)


def init_world(config: WorldConfig, trial: int = 0) -> WorldState:
    rng = make_rng(config.seed, trial)
    draws = rng.random((config.n, 3))
    return WorldState(0, draws[:, 0].copy(), draws[:, 1].copy(), draws[:, 2].copy(), config, rng)


def world_from_agents(config: WorldConfig, positions, headings, t: int = 0, trial: int = 0) -> WorldState:
    """Place agents explicitly (tests and hand-built scenarios)."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    z = np.asarray(headings, dtype=float).reshape(-1)
    if len(pos) != config.n or len(z) != config.n:
        raise ValueError("need one position and one heading per agent")
    if np.any((pos < 0) | (pos >= 1)) or np.any((z < 0) | (z >= 1)):
        raise ValueError("positions and headings must lie in [0, 1)")
    return WorldState(t, pos[:, 0].copy(), pos[:, 1].copy(), z.copy(), config, make_rng(config.seed, trial))


def step(world: WorldState) -> WorldState:
    """Advance every agent one step; refresh all headings on reaching a multiple of m."""
    nx, ny = _kernels.advance(world.x, world.y, world._dx, world._dy)
    t = world.t + 1
    if t % world.config.m == 0:
        rng = _copy_rng(world.rng)
        return WorldState(t, nx, ny, rng.random(world.n), world.config, rng)
    return WorldState(t, nx, ny, world.heading, world.config, world.rng, world._dx, world._dy)


Observer = Callable[[WorldState, WorldState], None]


def run(config: WorldConfig, T: int, observer: Optional[Observer] = None, trial: int = 0) -> WorldState:
    """Step ``T`` times from a fresh world, handing each (before, after) pair to ``observer``."""
    if T < 0:
        raise ValueError("T must be non-negative")
    world = init_world(config, trial)
    for _ in range(T):
        nxt = step(world)
        if observer is not None:
            observer(world, nxt)
        world = nxt
    return world


def positions_at(config: WorldConfig, T: int, trial: int = 0) -> np.ndarray:
    return run(config, T, trial=trial).points
