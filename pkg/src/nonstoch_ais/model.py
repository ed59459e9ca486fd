"""System descriptions, memories and the conditional-range filter.

Two forms share one interface. :class:`StateSpaceModel` carries states,
dynamics ``f_t(x, u, w)``, observations ``h_t(x, n)`` and costs
``d_t(x, u)``. :class:`InputOutputModel` carries disturbance sets and maps on
disturbance/action histories. Both expose a *hidden history* view that the
memory tree uses to enumerate everything consistent with a memory.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import (
    InfeasibleObservation,
    InvalidModel,
    ModelTooLarge,
    OutOfRangeAction,
    OutOfRangeObservation,
    SchemaError,
)
from .ranges import FinitePointSet, Metric, absolute_metric, as_point_set, make_metric

INSTANTANEOUS = "instantaneous"
TERMINAL = "terminal"
CRITERIA = (INSTANTANEOUS, TERMINAL)
DEFAULT_BUDGET = 10_000_000


@dataclass(frozen=True, order=True)
class Memory:
    """Observation history ``y_{0:t}`` and action history ``u_{0:t-1}``."""

    ys: tuple
    us: tuple = ()

    def __post_init__(self):
        if len(self.ys) != len(self.us) + 1:
            raise ValueError("a memory holds one more observation than actions")

    @property
    def t(self) -> int:
        return len(self.us)

    def parent(self) -> Memory | None:
        if not self.us:
            return None
        return Memory(self.ys[:-1], self.us[:-1])

    def extend(self, u, y) -> Memory:
        return Memory(self.ys + (y,), self.us + (u,))


@dataclass(frozen=True)
class RangeState:
    """Conditional range of the state given a memory."""

    t: int
    support: FinitePointSet

    def __post_init__(self):
        if not isinstance(self.support, FinitePointSet):
            object.__setattr__(self, "support", FinitePointSet(self.support))
        if self.support.is_empty:
            raise InfeasibleObservation("empty conditional range")


def _per_time(value, count: int, what: str) -> list[FinitePointSet]:
    """Normalize one set, or a per-time list of sets, to ``count`` FinitePointSets.

    A per-time list is recognised by its elements all being set-like
    (FinitePointSet, set, frozenset or list); a list one short of ``count``
    repeats its last entry.
    """
    if isinstance(value, FinitePointSet):
        return [value] * count
    value = list(value)
    setlike = (FinitePointSet, set, frozenset, list)
    if value and all(isinstance(v, setlike) for v in value) and len(value) in (count, count - 1):
        sets = [as_point_set(v) for v in value]
        if len(sets) == count - 1:
            sets.append(sets[-1])
        return sets
    return [FinitePointSet(value)] * count


def _as_map(obj, arity: int, what: str) -> Callable:
    """Turn a rule callable or lookup table(s) into ``fn(t, *args)``."""
    if callable(obj) and not isinstance(obj, Mapping):
        return obj
    if isinstance(obj, Mapping):
        table = obj

        def lookup(t, *args):
            key = args if arity > 1 else args[0]
            try:
                return table[key]
            except KeyError:
                raise InvalidModel(f"{what} undefined at {key!r}") from None

        return lookup
    tables = list(obj)

    def lookup_t(t, *args):
        key = args if arity > 1 else args[0]
        try:
            return tables[t][key]
        except (KeyError, IndexError):
            raise InvalidModel(f"{what} undefined at t={t}, {key!r}") from None

    return lookup_t


class SystemModel:
    """Common interface of both system forms."""

    horizon: int
    criterion: str
    name: str = ""
    initial_observations: FinitePointSet | None = None
    observation_metric: Metric
    action_metric: Metric
    cost_metric: Metric

    def actions(self, t: int) -> FinitePointSet:
        return self._actions[t]

    def check_action(self, t: int, u) -> None:
        if u not in self.actions(t):
            raise OutOfRangeAction(f"{u!r} not in U_{t}")

    @property
    def is_state_space(self) -> bool:
        return False

    def hidden_initial(self) -> Iterable:
        raise NotImplementedError

    def hidden_observations(self, t: int, hidden, us: tuple) -> Iterable:
        raise NotImplementedError

    def hidden_cost(self, t: int, hidden, us: tuple) -> float:
        raise NotImplementedError

    def hidden_successors(self, t: int, hidden, us: tuple) -> Iterable:
        raise NotImplementedError

    def observation_space(self, t: int) -> FinitePointSet:
        raise NotImplementedError

    def admits_initial(self, y0) -> bool:
        return self.initial_observations is None or y0 in self.initial_observations

    def restrict(self, initial_observations) -> SystemModel:
        """Copy of the system conditioned on the initial observation set."""
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.initial_observations = as_point_set(initial_observations)
        clone._tree = None
        return clone

    # memory tree, cached for repeated solves and measurements
    _tree = None

    def memory_tree(self, budget: int = DEFAULT_BUDGET) -> MemoryTree:
        tree = self._tree
        if tree is None:
            tree = MemoryTree(self, budget)
            self._tree = tree
        elif tree.count > budget:
            raise ModelTooLarge(tree.count, budget)
        return tree


class StateSpaceModel(SystemModel):
    """``x_{t+1} = f_t(x_t, u_t, w_t)``, ``y_t = h_t(x_t, n_t)``, cost ``d_t(x_t, u_t)``.

    Per-time sets accept either one set or a list indexed by time. Maps accept
    a callable ``fn(t, ...)``, a time-invariant dict keyed by argument tuples,
    or a list of such dicts indexed by time.
    """

    def __init__(
        self,
        horizon: int,
        states,
        actions,
        disturbances,
        noises,
        dynamics,
        observation,
        cost,
        criterion: str = INSTANTANEOUS,
        initial_states=None,
        state_metric: Metric | None = None,
        observation_metric: Metric | None = None,
        action_metric: Metric | None = None,
        initial_observations=None,
        name: str = "",
    ):
        if horizon < 0:
            raise InvalidModel("horizon must be nonnegative")
        if criterion not in CRITERIA:
            raise InvalidModel(f"unknown criterion {criterion!r}")
        T = horizon
        self.horizon = T
        self.criterion = criterion
        self.name = name
        self._states = _per_time(states, T + 1, "states")
        self._actions = _per_time(actions, T + 1, "actions")
        self._disturbances = _per_time(disturbances, T + 1, "disturbances")
        self._noises = _per_time(noises, T + 1, "noises")
        self.initial_states = as_point_set(initial_states) if initial_states is not None else self._states[0]
        self.f = _as_map(dynamics, 3, "dynamics")
        self.h = _as_map(observation, 2, "observation")
        self.d = _as_map(cost, 2, "cost")
        self.state_metric = state_metric or absolute_metric()
        self.observation_metric = observation_metric or absolute_metric()
        self.action_metric = action_metric or absolute_metric()
        self.cost_metric = absolute_metric()
        self.initial_observations = None if initial_observations is None else as_point_set(initial_observations)
        self._succ: dict = {}
        self._obs: dict = {}
        self._cost: dict = {}
        self._obs_space: dict = {}

    @property
    def is_state_space(self) -> bool:
        return True

    def states(self, t: int) -> FinitePointSet:
        return self._states[t]

    def disturbances(self, t: int) -> FinitePointSet:
        return self._disturbances[t]

    def noises(self, t: int) -> FinitePointSet:
        return self._noises[t]

    # cached primitives -----------------------------------------------------

    def successors(self, t: int, x, u) -> tuple:
        key = (t, x, u)
        out = self._succ.get(key)
        if out is None:
            out = tuple(sorted({self.f(t, x, u, w) for w in self._disturbances[t]}))
            self._succ[key] = out
        return out

    def observations_of(self, t: int, x) -> frozenset:
        key = (t, x)
        out = self._obs.get(key)
        if out is None:
            out = frozenset(self.h(t, x, n) for n in self._noises[t])
            self._obs[key] = out
        return out

    def stage_cost(self, t: int, x, u) -> float:
        key = (t, x, u)
        out = self._cost.get(key)
        if out is None:
            out = self.d(t, x, u)
            self._cost[key] = out
        return out

    def observation_space(self, t: int) -> FinitePointSet:
        out = self._obs_space.get(t)
        if out is None:
            pool = self.initial_states if t == 0 else self._states[t]
            out = FinitePointSet(y for x in pool for y in self.observations_of(t, x))
            self._obs_space[t] = out
        return out

    def initial_observation_set(self) -> FinitePointSet:
        ys = self.observation_space(0)
        return FinitePointSet(y for y in ys if self.admits_initial(y))

    # hidden-history view: the hidden value is the state trajectory -----------

    def hidden_initial(self):
        return ((x,) for x in self.initial_states)

    def hidden_observations(self, t, hidden, us):
        return self.observations_of(t, hidden[-1])

    def hidden_cost(self, t, hidden, us):
        return self.stage_cost(t, hidden[-1], us[-1])

    def hidden_successors(self, t, hidden, us):
        return (hidden + (x,) for x in self.successors(t, hidden[-1], us[-1]))

    # validation ------------------------------------------------------------

    def validate(self) -> None:
        """Exhaustive totality, closure and sign checks; raises InvalidModel."""
        T = self.horizon
        if not self.initial_states.issubset(self._states[0]):
            raise InvalidModel("initial states outside X_0")
        for t in range(T + 1):
            for s, what in ((self._states[t], "X"), (self._actions[t], "U"), (self._noises[t], "N")):
                if s.is_empty:
                    raise InvalidModel(f"empty {what}_{t}")
            if t < T and self._disturbances[t].is_empty:
                raise InvalidModel(f"empty W_{t}")
            for x in self._states[t]:
                self.observations_of(t, x)
                for u in self._actions[t]:
                    c = self.stage_cost(t, x, u)
                    if not (isinstance(c, (int, float, np.integer, np.floating)) and math.isfinite(c) and c >= 0):
                        raise InvalidModel(f"cost d_{t}({x!r},{u!r}) = {c!r} is not a nonnegative real")
                    if t < T:
                        for x2 in self.successors(t, x, u):
                            if x2 not in self._states[t + 1]:
                                raise InvalidModel(f"f_{t}({x!r},{u!r},.) = {x2!r} leaves X_{t + 1}")


class InputOutputModel(SystemModel):
    """``y_0 = h_0(w_0)``, ``y_{t+1} = h_{t+1}(w_{0:t}, u_{0:t})``, ``c_t = d_t(w_{0:t}, u_{0:t})``.

    ``observation(t, ws, us)`` receives ``ws = w_{0:t-1}`` (``(w_0,)`` at t=0)
    and ``us = u_{0:t-1}``; ``cost(t, ws, us)`` receives ``w_{0:t}`` and
    ``u_{0:t}``.
    """

    def __init__(
        self,
        horizon: int,
        disturbances,
        actions,
        observation: Callable,
        cost: Callable,
        criterion: str = INSTANTANEOUS,
        observation_metric: Metric | None = None,
        action_metric: Metric | None = None,
        initial_observations=None,
        name: str = "",
    ):
        if horizon < 0:
            raise InvalidModel("horizon must be nonnegative")
        if criterion not in CRITERIA:
            raise InvalidModel(f"unknown criterion {criterion!r}")
        T = horizon
        self.horizon = T
        self.criterion = criterion
        self.name = name
        self._disturbances = _per_time(disturbances, T + 1, "disturbances")
        self._actions = _per_time(actions, T + 1, "actions")
        self.h = observation
        self.d = cost
        self.observation_metric = observation_metric or absolute_metric()
        self.action_metric = action_metric or absolute_metric()
        self.cost_metric = absolute_metric()
        self.initial_observations = None if initial_observations is None else as_point_set(initial_observations)
        self._obs_space: dict = {}

    def disturbances(self, t: int) -> FinitePointSet:
        return self._disturbances[t]

    def hidden_initial(self):
        return ((w,) for w in self._disturbances[0])

    def hidden_observations(self, t, hidden, us):
        ws = hidden[:1] if t == 0 else hidden[:t]
        return (self.h(t, ws, us[:t]),)

    def hidden_cost(self, t, hidden, us):
        return self.d(t, hidden, us)

    def hidden_successors(self, t, hidden, us):
        return (hidden + (w,) for w in self._disturbances[t + 1])

    def observation_space(self, t: int) -> FinitePointSet:
        out = self._obs_space.get(t)
        if out is None:
            ys = set()
            nw = max(t, 1)
            for ws in itertools.product(*(self._disturbances[s] for s in range(nw))):
                for us in itertools.product(*(self._actions[s] for s in range(t))):
                    ys.add(self.h(t, ws, us))
            out = FinitePointSet(ys)
            self._obs_space[t] = out
        return out


def to_input_output(sys: StateSpaceModel) -> InputOutputModel:
    """Input-output view of a state-space system.

    The composite disturbance is ``(x_0, n_0, w_0, n_1)`` at t=0 and
    ``(w_t, n_{t+1})`` afterwards, so each observation and cost is a function
    of the disturbance and action histories as the input-output form needs.
    """
    T = sys.horizon
    W = []
    if T == 0:
        W.append(FinitePointSet(itertools.product(sys.initial_states, sys.noises(0))))
    else:
        W.append(
            FinitePointSet(itertools.product(sys.initial_states, sys.noises(0), sys.disturbances(0), sys.noises(1)))
        )
        for t in range(1, T):
            W.append(FinitePointSet(itertools.product(sys.disturbances(t), sys.noises(t + 1))))
        W.append(FinitePointSet([()]))

    def replay(ws, us, t):
        x = ws[0][0]
        for s in range(t):
            w = ws[0][2] if s == 0 else ws[s][0]
            x = sys.f(s, x, us[s], w)
        return x

    def observation(t, ws, us):
        if t == 0:
            return sys.h(0, ws[0][0], ws[0][1])
        n = ws[0][3] if t == 1 else ws[t - 1][1]
        return sys.h(t, replay(ws, us, t), n)

    def cost(t, ws, us):
        return sys.d(t, replay(ws, us, t), us[t])

    return InputOutputModel(
        T,
        W,
        [sys.actions(t) for t in range(T + 1)],
        observation,
        cost,
        criterion=sys.criterion,
        observation_metric=sys.observation_metric,
        action_metric=sys.action_metric,
        initial_observations=sys.initial_observations,
        name=f"{sys.name}:io" if sys.name else "io",
    )


# ---------------------------------------------------------------------------
# Memory tree
# ---------------------------------------------------------------------------


class MemoryTree:
    """All reachable memories with the hidden histories consistent with each.

    ``layers[t]`` maps each memory to the frozenset of hidden histories;
    ``children[t][(m, u)]`` lists the successor memories in canonical order.
    """

    def __init__(self, sys: SystemModel, budget: int = DEFAULT_BUDGET):
        self.sys = sys
        self.budget = budget
        T = sys.horizon
        groups = defaultdict(set)
        for h in sys.hidden_initial():
            for y in sys.hidden_observations(0, h, ()):
                if sys.admits_initial(y):
                    groups[y].add(h)
        layer = {Memory((y,)): frozenset(groups[y]) for y in sorted(groups)}
        self.count = len(layer)
        self._guard()
        self.layers = [layer]
        self.children: list[dict] = []
        for t in range(T):
            nxt = {}
            kids = {}
            for m, hidden in layer.items():
                for u in sys.actions(t):
                    us = m.us + (u,)
                    by_y = defaultdict(set)
                    for h in hidden:
                        for h2 in sys.hidden_successors(t, h, us):
                            for y in sys.hidden_observations(t + 1, h2, us):
                                by_y[y].add(h2)
                    row = []
                    for y in sorted(by_y):
                        child = Memory(m.ys + (y,), us)
                        nxt[child] = frozenset(by_y[y])
                        row.append(child)
                    kids[(m, u)] = tuple(row)
                    self.count += len(row)
                self._guard()
            self.children.append(kids)
            self.layers.append(nxt)
            layer = nxt
        self._cost: dict = {}

    def _guard(self):
        if self.count > self.budget:
            raise ModelTooLarge(self.count, self.budget)

    @property
    def horizon(self) -> int:
        return self.sys.horizon

    def memories(self, t: int) -> list[Memory]:
        return list(self.layers[t])

    def initial(self) -> list[Memory]:
        return list(self.layers[0])

    def worst_cost(self, t: int, m: Memory, u) -> float:
        """``e_t(m, u)``: max stage cost over hidden histories consistent with m."""
        key = (m, u)
        out = self._cost.get(key)
        if out is None:
            us = m.us + (u,)
            out = max(self.sys.hidden_cost(t, h, us) for h in self.layers[t][m])
            self._cost[key] = out
        return out


def enumerate_reachable_memories(sys: SystemModel, t: int, budget: int = DEFAULT_BUDGET) -> list[Memory]:
    """Memories at time t with a nonempty consistent hidden history, canonically ordered."""
    if not 0 <= t <= sys.horizon:
        raise ValueError(f"t={t} outside 0..{sys.horizon}")
    return sorted(sys.memory_tree(budget).layers[t])


def memory_extend(m: Memory, u, y, sys: SystemModel | None = None) -> Memory:
    """Append ``(u_t, y_{t+1})``; membership is checked when ``sys`` is given."""
    if sys is not None:
        t = m.t
        if t >= sys.horizon:
            raise OutOfRangeObservation(f"memory already at the horizon T={sys.horizon}")
        if u not in sys.actions(t):
            raise OutOfRangeAction(f"{u!r} not in U_{t}")
        if y not in sys.observation_space(t + 1):
            raise OutOfRangeObservation(f"{y!r} not in Y_{t + 1}")
    return m.extend(u, y)


# ---------------------------------------------------------------------------
# Conditional-range filter
# ---------------------------------------------------------------------------


def _require_state_space(sys):
    if not sys.is_state_space:
        raise TypeError("the conditional-range filter needs a state-space model")


def range_filter_init(sys: StateSpaceModel, y0) -> RangeState:
    _require_state_space(sys)
    support = FinitePointSet(x for x in sys.initial_states if y0 in sys.observations_of(0, x))
    if support.is_empty:
        raise InfeasibleObservation(f"no initial state explains y0={y0!r}")
    return RangeState(0, support)


def filter_branches(sys: StateSpaceModel, t: int, support: Iterable, u) -> dict:
    """One-step filter for every possible next observation: ``{y': P'}``."""
    by_y = defaultdict(set)
    for x in support:
        for x2 in sys.successors(t, x, u):
            for y in sys.observations_of(t + 1, x2):
                by_y[y].add(x2)
    return {y: FinitePointSet(by_y[y]) for y in sorted(by_y)}


def range_filter_update(sys: StateSpaceModel, p: RangeState, u, y_next) -> RangeState:
    _require_state_space(sys)
    t = p.t
    if t >= sys.horizon:
        raise ValueError("cannot update a range past the horizon")
    sys.check_action(t, u)
    support = set()
    for x in p.support:
        for x2 in sys.successors(t, x, u):
            if y_next in sys.observations_of(t + 1, x2):
                support.add(x2)
    if not support:
        raise InfeasibleObservation(f"observation {y_next!r} impossible after action {u!r}")
    return RangeState(t + 1, FinitePointSet(support))


def range_of_memory(sys: StateSpaceModel, m: Memory) -> RangeState:
    p = range_filter_init(sys, m.ys[0])
    for u, y in zip(m.us, m.ys[1:]):
        p = range_filter_update(sys, p, u, y)
    return p


def worst_case_stage_cost(sys: SystemModel, carrier, u, t: int | None = None) -> float:
    """Max stage cost over the cost range induced by a memory, range state or support set."""
    if isinstance(carrier, Memory):
        t = carrier.t
        sys.check_action(t, u)
        return sys.memory_tree().worst_cost(t, carrier, u)
    if isinstance(carrier, RangeState):
        t, support = carrier.t, carrier.support
    else:
        support = as_point_set(carrier)
        if t is None:
            t = 0
        if support.is_empty:
            raise InfeasibleObservation("empty support")
    _require_state_space(sys)
    sys.check_action(t, u)
    return max(sys.stage_cost(t, x, u) for x in support)


# ---------------------------------------------------------------------------
# Random small systems (test corpus and CLI self-checks)
# ---------------------------------------------------------------------------


def random_system(
    rng: np.random.Generator,
    max_states: int = 6,
    max_actions: int = 3,
    max_disturbances: int = 3,
    max_noises: int = 2,
    max_horizon: int = 3,
    max_observations: int | None = None,
    perfectly_observed: bool = False,
    criterion: str | None = None,
    integer_costs: bool = True,
    max_cost: int = 5,
) -> StateSpaceModel:
    """Random finite state-space system on integer states with the absolute metric.

    Dynamics, observation and cost tables are drawn independently per time.
    """
    nx = int(rng.integers(2, max_states + 1))
    nu = int(rng.integers(1, max_actions + 1))
    nw = int(rng.integers(1, max_disturbances + 1))
    nn = 1 if perfectly_observed else int(rng.integers(1, max_noises + 1))
    T = int(rng.integers(0, max_horizon + 1))
    ny = nx if max_observations is None else max_observations
    ny = int(rng.integers(1, max(ny, 1) + 1))
    X = list(range(nx))
    U = list(range(nu))
    W = list(range(nw))
    N = list(range(nn))
    x0 = sorted(rng.choice(nx, size=int(rng.integers(1, nx + 1)), replace=False).tolist())
    dyn, obs, cost = [], [], []
    for _ in range(T + 1):
        dyn.append({(x, u, w): int(rng.integers(nx)) for x in X for u in U for w in W})
        if perfectly_observed:
            obs.append({(x, 0): x for x in X})
        else:
            obs.append({(x, n): int(rng.integers(ny)) for x in X for n in N})
        if integer_costs:
            cost.append({(x, u): int(rng.integers(0, max_cost + 1)) for x in X for u in U})
        else:
            cost.append({(x, u): float(rng.uniform(0, max_cost)) for x in X for u in U})
    if criterion is None:
        criterion = CRITERIA[int(rng.integers(2))]
    return StateSpaceModel(
        T, X, U, W, N, dyn, obs, cost, criterion=criterion, initial_states=x0,
        name="random-po" if not perfectly_observed else "random-fo",
    )


# ---------------------------------------------------------------------------
# JSON model files
# ---------------------------------------------------------------------------


def freeze(value):
    """JSON value to hashable point: lists become tuples recursively."""
    if isinstance(value, list):
        return tuple(freeze(v) for v in value)
    return value


def _points(raw) -> list:
    return [freeze(p) for p in raw]


def _rule(spec: Mapping, kind: str) -> Callable:
    name = spec.get("rule")
    p = spec.get("params", {})
    if kind == "dynamics":
        if name == "identity":
            return lambda t, x, u, w: x
        if name == "add-clip":
            lo, hi = p.get("min", -math.inf), p.get("max", math.inf)
            return lambda t, x, u, w: min(hi, max(lo, x + u + w))
    if kind == "observation":
        if name == "identity":
            return lambda t, x, n: x
        if name == "mod":
            k = p["modulus"]
            return lambda t, x, n: x % k
        if name == "constant":
            c = freeze(p["value"])
            return lambda t, x, n: c
        if name == "add-clip":
            lo, hi = p.get("min", -math.inf), p.get("max", math.inf)
            return lambda t, x, n: min(hi, max(lo, x + n))
    if kind == "cost":
        if name == "abs-diff":
            return lambda t, x, u: abs(x - u)
        if name == "zero":
            return lambda t, x, u: 0
        if name == "constant":
            c = p["value"]
            return lambda t, x, u: c
    raise SchemaError(f"unknown {kind} rule {name!r}")


def _table(rows, arity: int) -> dict:
    out = {}
    for row in rows:
        if len(row) != arity + 1:
            raise SchemaError(f"table row {row!r} should have {arity + 1} entries")
        key = tuple(freeze(v) for v in row[:arity])
        out[key] = freeze(row[arity])
    return out


def _map_from_spec(spec, kind: str, arity: int):
    if not isinstance(spec, Mapping):
        raise SchemaError(f"{kind} must be an object")
    if "rule" in spec:
        return _rule(spec, kind)
    if "table" in spec:
        return _table(spec["table"], arity)
    if "tables" in spec:
        return [_table(rows, arity) for rows in spec["tables"]]
    raise SchemaError(f"{kind} needs 'rule', 'table' or 'tables'")


def _metric_from_spec(spec) -> Metric | None:
    if spec is None:
        return None
    if isinstance(spec, str):
        return make_metric(spec)
    spec = dict(spec)
    return make_metric(spec.pop("kind"), **spec)


def _sets(raw, name: str):
    if raw is None:
        raise SchemaError(f"missing space {name!r}")
    if isinstance(raw, Mapping) and "per_time" in raw:
        return [FinitePointSet(_points(s)) for s in raw["per_time"]]
    return FinitePointSet(_points(raw))


def model_from_dict(spec: Mapping) -> SystemModel:
    """Build a state-space model from its JSON description and validate it."""
    try:
        if "env" in spec:
            from .envs import env_from_config

            return env_from_config(spec["env"])
        form = spec.get("form", "state-space")
        if form != "state-space":
            raise SchemaError("model files describe state-space systems")
        T = int(spec["horizon"])
        criterion = spec.get("criterion", INSTANTANEOUS)
        sp = spec["spaces"]
        metrics = spec.get("metrics", {})
        sys = StateSpaceModel(
            T,
            _sets(sp.get("states"), "states"),
            _sets(sp.get("actions"), "actions"),
            _sets(sp.get("disturbances", [0]), "disturbances"),
            _sets(sp.get("noises", [0]), "noises"),
            _map_from_spec(spec["dynamics"], "dynamics", 3),
            _map_from_spec(spec["observation"], "observation", 2),
            _map_from_spec(spec["cost"], "cost", 2),
            criterion=criterion,
            initial_states=None if "initial_states" not in sp else _points(sp["initial_states"]),
            state_metric=_metric_from_spec(metrics.get("state")),
            observation_metric=_metric_from_spec(metrics.get("observation")),
            action_metric=_metric_from_spec(metrics.get("action")),
            initial_observations=None if "initial_observations" not in spec else _points(spec["initial_observations"]),
            name=spec.get("name", ""),
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidModel):
            raise SchemaError(str(exc)) from exc
        raise SchemaError(f"malformed model: {exc!r}") from exc
    try:
        sys.validate()
    except InvalidModel as exc:
        raise SchemaError(str(exc)) from exc
    return sys


def load_model(source) -> SystemModel:
    if isinstance(source, (str, Path)):
        try:
            with open(source) as fh:
                source = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(source, Mapping):
        raise SchemaError("model must be a JSON object")
    return model_from_dict(source)
