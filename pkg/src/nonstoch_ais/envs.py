"""Grid-world benchmarks: wall defense and pursuit evasion.

Cells are ``(column, row)`` integer pairs. States and observations are flat
integer tuples so that every map is a plain lookup on hashable points.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

from .dp import CompressedAbstraction, ConditionalRangeAbstraction
from .errors import Disconnected, SchemaError
from .model import INSTANTANEOUS, TERMINAL, StateSpaceModel
from .quantize import CoordinateQuantizer, QuantizationGrid, build_grid, quantize_range
from .ranges import (
    CoordinateMetric,
    FinitePointSet,
    GridPathMetric,
    HausdorffMetric,
    ProductMetric,
    bfs_distances,
)

MOVES = ((-1, 0), (1, 0), (0, 0), (0, 1), (0, -1))
STAY = (0, 0)


def clip_move(pos: tuple, delta: tuple, feasible) -> tuple:
    """``pos + delta`` when that cell is feasible, otherwise ``pos``."""
    nxt = (pos[0] + delta[0], pos[1] + delta[1])
    return nxt if nxt in feasible else pos


def observe(cell: tuple, n: tuple, feasible) -> tuple:
    return clip_move(cell, n, feasible)


# ---------------------------------------------------------------------------
# Wall defense
# ---------------------------------------------------------------------------

WALL_NOISE = ((0, 0), (0, 1))
DAMAGE_MAX = 3


@dataclass(frozen=True)
class WallDefenseState:
    agent: tuple
    attacker: tuple
    damage: tuple

    def to_point(self) -> tuple:
        return (*self.agent, *self.attacker, *self.damage)

    @classmethod
    def from_point(cls, p: tuple) -> WallDefenseState:
        return cls((p[0], p[1]), (p[2], p[3]), tuple(p[4:]))


@dataclass(frozen=True)
class WallGeometry:
    half_width: int = 2

    @property
    def columns(self) -> tuple:
        return tuple(range(-self.half_width, self.half_width + 1))

    @cached_property
    def agent_cells(self) -> frozenset:
        return frozenset((c, r) for c in self.columns for r in (1, 2))

    @cached_property
    def attacker_cells(self) -> frozenset:
        return frozenset((c, r) for c in self.columns for r in (-1, -2))


def wall_step(s: WallDefenseState, u: tuple, w: tuple, geometry: WallGeometry = WallGeometry()) -> WallDefenseState:
    """Damage update from the current positions, then both occupants move."""
    damage = []
    for i, d in zip(geometry.columns, s.damage):
        hit = 1 if s.attacker == (i, -1) else 0
        fix = 1 if s.agent == (i, 1) else 0
        damage.append(min(DAMAGE_MAX, max(0, d + hit - fix)))
    return WallDefenseState(
        clip_move(s.agent, u, geometry.agent_cells),
        clip_move(s.attacker, w, geometry.attacker_cells),
        tuple(damage),
    )


def wall_cost(damage: Sequence[int]) -> float:
    return float(sum(damage))


class _WallDynamics:
    def __init__(self, geometry):
        self.geometry = geometry

    def __call__(self, t, x, u, w):
        return wall_step(WallDefenseState.from_point(x), u, w, self.geometry).to_point()


class _WallObservation:
    def __init__(self, geometry):
        self.cells = geometry.attacker_cells

    def __call__(self, t, x, n):
        y = observe((x[2], x[3]), n, self.cells)
        return (x[0], x[1], y[0], y[1], *x[4:])


def _wall_cost_rule(t, x, u):
    return wall_cost(x[4:])


def _wall_metric(ncols: int) -> ProductMetric:
    m = CoordinateMetric("manhattan")
    return ProductMetric([((0, 1), m), ((2, 3), m), (tuple(range(4, 4 + ncols)), m)])


def wall_defense_system(half_width: int = 2, horizon: int = 4, agent_start: tuple = (0, 2),
                        initial_observation: tuple | None = None, quantized_cells: Iterable | None = None,
                        name: str = "wall-defense") -> StateSpaceModel:
    """Wall defense as a state-space system with the instantaneous criterion.

    State ``(ag_c, ag_r, at_c, at_r, D...)``; the agent sees its own cell and
    the damage exactly, and the attacker cell through the noise
    ``{(0,0),(0,1)}``. ``initial_observation`` is an attacker cell and
    conditions the problem on that first reading.
    """
    geo = WallGeometry(half_width)
    ncols = len(geo.columns)
    if agent_start not in geo.agent_cells:
        raise SchemaError(f"agent start {agent_start!r} outside the agent rows")
    states = FinitePointSet(
        (*a, *b, *d)
        for a in sorted(geo.agent_cells)
        for b in sorted(geo.attacker_cells)
        for d in itertools.product(range(DAMAGE_MAX + 1), repeat=ncols)
    )
    zero = (0,) * ncols
    x0 = [(*agent_start, *b, *zero) for b in sorted(geo.attacker_cells)]
    y0 = None
    if initial_observation is not None:
        y0 = [(*agent_start, *tuple(initial_observation), *zero)]
    metric = _wall_metric(ncols)
    sys = StateSpaceModel(
        horizon, states, MOVES, MOVES, WALL_NOISE,
        _WallDynamics(geo), _WallObservation(geo), _wall_cost_rule,
        criterion=INSTANTANEOUS, initial_states=x0, state_metric=metric, observation_metric=metric,
        action_metric=CoordinateMetric("manhattan"), initial_observations=y0, name=name,
    )
    sys.geometry = geo
    sys.time_invariant = True
    sys.quantized_cells = (
        FinitePointSet(tuple(c) for c in quantized_cells) if quantized_cells is not None
        else default_wall_quantized_cells(geo)
    )
    return sys


def default_wall_quantized_cells(geo: WallGeometry) -> FinitePointSet:
    """Attacker cells in even-numbered columns of both rows."""
    return FinitePointSet(c for c in geo.attacker_cells if c[0] % 2 == 0)


def wall_attacker_quantizer(sys: StateSpaceModel) -> CoordinateQuantizer:
    """Snaps the attacker coordinates of a wall state to the quantized cells."""
    m = CoordinateMetric("manhattan")
    grid = QuantizationGrid(sys.quantized_cells, 0.0, m)
    grid.gamma = grid.cover_radius(sys.geometry.attacker_cells)
    return CoordinateQuantizer(grid, (2, 3))


def wall_ais(sys: StateSpaceModel, base: ConditionalRangeAbstraction | None = None) -> CompressedAbstraction:
    """Approximate information state ``(agent cell, damage, quantized attacker range, y_0)``.

    The agent cell and damage are common to every state in a conditional
    range, so the tuple is the quantized range written componentwise.
    """
    if base is None:
        base = ConditionalRangeAbstraction(sys, with_initial_observation=True)
    q = wall_attacker_quantizer(sys)

    def kappa(t, pi):
        y0, P = pi
        first = P.items[0]
        attackers = FinitePointSet(q.grid.quantize_point((x[2], x[3])) for x in P)
        return ((first[0], first[1]), tuple(first[4:]), attackers, y0)

    m = CoordinateMetric("manhattan")
    metric = ProductMetric([(0, m), (1, m), (2, HausdorffMetric(m)), (3, sys.observation_metric)])
    a = CompressedAbstraction(base, kappa, metric=metric, provenance="approx")
    a.quantizer = q
    return a


# ---------------------------------------------------------------------------
# Pursuit evasion
# ---------------------------------------------------------------------------

DEFAULT_OBSTACLES_9 = (
    (-2, -2), (-2, -1), (-2, 0),
    (2, 0), (2, 1), (2, 2),
    (-1, 3), (0, 3),
    (0, -3), (1, -3),
)
DEFAULT_OBSTACLES_5 = ((0, 0), (0, 1), (1, -1))


@dataclass(frozen=True)
class PursuitState:
    agent: tuple
    target: tuple

    def to_point(self) -> tuple:
        return (*self.agent, *self.target)

    @classmethod
    def from_point(cls, p: tuple) -> PursuitState:
        return cls((p[0], p[1]), (p[2], p[3]))


def grid_cells(size: int) -> list[tuple]:
    r = size // 2
    return [(c, w) for c in range(-r, r + 1) for w in range(-r, r + 1)]


def free_cells(size: int, obstacles: Iterable[tuple]) -> frozenset:
    blocked = set(obstacles)
    return frozenset(c for c in grid_cells(size) if c not in blocked)


def pursuit_step(s: PursuitState, u: tuple, w: tuple, free) -> PursuitState:
    return PursuitState(clip_move(s.agent, u, free), clip_move(s.target, w, free))


def pursuit_terminal_cost(x_ta: tuple, x_ag: tuple, obstacles: Iterable[tuple] = (), cells=None) -> float:
    """Shortest 4-neighbour path length between two free cells.

    ``cells`` defaults to an unbounded-enough square around both points, so
    the obstacle-free case reduces to the Manhattan distance.
    """
    blocked = frozenset(obstacles)
    if cells is None:
        span = max(abs(v) for v in (*x_ta, *x_ag)) + 2 + max((abs(v) for o in blocked for v in o), default=0)
        cells = [(c, r) for c in range(-span, span + 1) for r in range(-span, span + 1)]
    free = frozenset(c for c in cells if c not in blocked)
    if x_ta not in free or x_ag not in free:
        raise Disconnected("cell lies on an obstacle or outside the grid")
    dist = bfs_distances(x_ta, free).get(x_ag)
    if dist is None:
        raise Disconnected(f"no path between {x_ta!r} and {x_ag!r}")
    return float(dist)


class _PursuitDynamics:
    def __init__(self, free):
        self.free = free

    def __call__(self, t, x, u, w):
        return pursuit_step(PursuitState.from_point(x), u, w, self.free).to_point()


class _PursuitObservation:
    def __init__(self, free):
        self.free = free

    def __call__(self, t, x, n):
        y = observe((x[2], x[3]), n, self.free)
        return (x[0], x[1], y[0], y[1])


class _PursuitCost:
    def __init__(self, horizon, path: GridPathMetric):
        self.horizon = horizon
        self.path = path

    def __call__(self, t, x, u):
        if t < self.horizon:
            return 0.0
        return self.path((x[2], x[3]), (x[0], x[1]))


def pursuit_system(size: int = 9, obstacles: Iterable[tuple] | None = None, horizon: int = 4,
                   agent_start: tuple | None = None, initial_observation: tuple | None = None,
                   name: str = "pursuit") -> StateSpaceModel:
    """Pursuit evasion with the terminal criterion.

    The agent observes its own cell exactly and the target cell through the
    five-move noise. No action is taken at time T. ``initial_observation`` is
    a target cell reading that conditions the problem.
    """
    if obstacles is None:
        obstacles = DEFAULT_OBSTACLES_9 if size == 9 else DEFAULT_OBSTACLES_5 if size == 5 else ()
    obstacles = tuple(tuple(o) for o in obstacles)
    free = free_cells(size, obstacles)
    path = GridPathMetric(grid_cells(size), obstacles)
    if len({len(bfs_distances(c, free)) for c in free}) != 1:
        raise SchemaError("obstacle layout disconnects the grid")
    r = size // 2
    if agent_start is None:
        agent_start = (-r, -r)
    agent_start = tuple(agent_start)
    if agent_start not in free:
        raise SchemaError(f"agent start {agent_start!r} is not a free cell")
    cells = sorted(free)
    states = FinitePointSet((*a, *b) for a in cells for b in cells)
    x0 = [(*agent_start, *b) for b in cells]
    y0 = None
    if initial_observation is not None:
        y0 = [(*agent_start, *tuple(initial_observation))]
    actions = [FinitePointSet(MOVES)] * horizon + [FinitePointSet([STAY])]
    metric = ProductMetric([((0, 1), path), ((2, 3), path)])
    sys = StateSpaceModel(
        horizon, states, actions, MOVES, MOVES,
        _PursuitDynamics(free), _PursuitObservation(free), _PursuitCost(horizon, path),
        criterion=TERMINAL, initial_states=x0, state_metric=metric, observation_metric=metric,
        action_metric=CoordinateMetric("manhattan"), initial_observations=y0, name=name,
    )
    sys.free = free
    sys.obstacles = obstacles
    sys.path_metric = path
    sys.agent_start = agent_start
    return sys


def pursuit_target_quantizer(sys: StateSpaceModel, gamma: float = 1.0) -> CoordinateQuantizer:
    """Greedy γ-cover of the free cells (path metric) applied to the target coordinates."""
    return CoordinateQuantizer(build_grid(sorted(sys.free), gamma, sys.path_metric), (2, 3))


def pursuit_initial_observations(sys: StateSpaceModel) -> list[tuple]:
    """Every possible first target reading for the fixed agent start."""
    return sorted({y[2:] for y in sys.observation_space(0)})


def wall_initial_observations(sys: StateSpaceModel) -> list[tuple]:
    return sorted({(y[2], y[3]) for y in sys.observation_space(0)})


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


def _cell(v):
    return None if v is None else tuple(v)


def env_from_config(cfg) -> StateSpaceModel:
    """Build a benchmark from a JSON-style dict with a ``name`` field."""
    cfg = dict(cfg)
    name = cfg.pop("name", None)
    try:
        if name == "wall_defense":
            return wall_defense_system(
                half_width=int(cfg.get("half_width", 2)),
                horizon=int(cfg.get("horizon", 4)),
                agent_start=_cell(cfg.get("agent_start", (0, 2))),
                initial_observation=_cell(cfg.get("initial_observation")),
                quantized_cells=cfg.get("quantized_cells") and [tuple(c) for c in cfg["quantized_cells"]],
            )
        if name == "pursuit":
            obstacles = cfg.get("obstacles")
            return pursuit_system(
                size=int(cfg.get("size", 9)),
                obstacles=None if obstacles is None else [tuple(o) for o in obstacles],
                horizon=int(cfg.get("horizon", 4)),
                agent_start=_cell(cfg.get("agent_start")),
                initial_observation=_cell(cfg.get("initial_observation")),
            )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"bad environment config: {exc}") from exc
    raise SchemaError(f"unknown environment {name!r}")
