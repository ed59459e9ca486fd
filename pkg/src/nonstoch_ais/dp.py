"""Dynamic programs over memories, information states and their approximations.

Every DP here runs on an :class:`InfoAbstraction`: realizations at each time,
a worst-case cost generator ``(t, pi, u) -> max cost`` and a transition
generator ``(t, pi, u) -> set of next realizations``. The memory DP is the
abstraction whose realizations are memories themselves.
"""

from __future__ import annotations

import time
from collections import defaultdict
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import GeneratorIncomplete, MissingKey, NegativeInput, OutOfRangeAction
from .model import (
    DEFAULT_BUDGET,
    INSTANTANEOUS,
    TERMINAL,
    Memory,
    RangeState,
    SystemModel,
    filter_branches,
    range_filter_init,
    range_filter_update,
)
from .ranges import (
    TOL,
    FinitePointSet,
    HausdorffMetric,
    Metric,
    ProductMetric,
    _unique_pairwise,
)

# ---------------------------------------------------------------------------
# Abstractions
# ---------------------------------------------------------------------------


class MemoryMetric(Metric):
    """Max of componentwise observation and action distances between equal-length memories."""

    kind = "memory-max"

    def __init__(self, obs_metric: Metric, action_metric: Metric):
        self.obs_metric = obs_metric
        self.action_metric = action_metric

    def __call__(self, a: Memory, b: Memory) -> float:
        if a.t != b.t:
            raise ValueError("memories of different lengths")
        ds = [self.obs_metric(y1, y2) for y1, y2 in zip(a.ys, b.ys)]
        ds += [self.action_metric(u1, u2) for u1, u2 in zip(a.us, b.us)]
        return max(ds)

    def pairwise(self, A, B) -> np.ndarray:
        out = np.zeros((len(A), len(B)))
        if not A or not B:
            return out
        t = A[0].t
        for i in range(t + 1):
            D = _unique_pairwise(self.obs_metric, [m.ys[i] for m in A], [m.ys[i] for m in B])
            np.maximum(out, D, out=out)
        for i in range(t):
            D = _unique_pairwise(self.action_metric, [m.us[i] for m in A], [m.us[i] for m in B])
            np.maximum(out, D, out=out)
        return out


class InfoAbstraction:
    """Executable compression of the memory with range-valued generators.

    Subclasses provide ``_initial``, ``_worst_cost``, ``_transitions`` and
    ``realization_of``; this base class adds caching and forward
    reachability.
    """

    provenance = "abstraction"
    exact = False
    metric: Metric | None = None

    def __init__(self, sys: SystemModel):
        self.sys = sys
        self.horizon = sys.horizon
        self._trans: dict = {}
        self._wc: dict = {}
        self._layers: list[list] | None = None

    # generators --------------------------------------------------------------

    def actions(self, t: int, pi=None) -> FinitePointSet:
        return self.sys.actions(t)

    def initial_realizations(self) -> list:
        return sorted(set(self._initial()))

    def worst_cost(self, t: int, pi, u) -> float:
        key = (t, pi, u)
        out = self._wc.get(key)
        if out is None:
            out = self._worst_cost(t, pi, u)
            self._wc[key] = out
        return out

    def transitions(self, t: int, pi, u) -> FinitePointSet:
        key = (t, pi, u)
        out = self._trans.get(key)
        if out is None:
            out = FinitePointSet(self._transitions(t, pi, u))
            if out.is_empty:
                raise GeneratorIncomplete(f"no transitions from {pi!r} under {u!r} at t={t}")
            self._trans[key] = out
        return out

    def realization_of(self, t: int, m: Memory):
        raise NotImplementedError

    def layers(self) -> list[list]:
        """Realizations reachable from the initial ones, per time, canonically ordered."""
        if self._layers is None:
            cur = self.initial_realizations()
            out = [cur]
            for t in range(self.horizon):
                nxt = set()
                for pi in cur:
                    for u in self.actions(t, pi):
                        nxt.update(self.transitions(t, pi, u))
                cur = sorted(nxt)
                out.append(cur)
            self._layers = out
        return self._layers

    def realization_count(self) -> int:
        return sum(len(layer) for layer in self.layers())

    def _initial(self) -> Iterable:
        raise NotImplementedError

    def _worst_cost(self, t, pi, u) -> float:
        raise NotImplementedError

    def _transitions(self, t, pi, u) -> Iterable:
        raise NotImplementedError


class MemoryAbstraction(InfoAbstraction):
    """Identity abstraction: the realization is the memory."""

    provenance = "memory"
    exact = True

    def __init__(self, sys: SystemModel, budget: int = DEFAULT_BUDGET):
        super().__init__(sys)
        self.tree = sys.memory_tree(budget)
        self.metric = MemoryMetric(sys.observation_metric, sys.action_metric)

    def initial_realizations(self):
        return sorted(self.tree.layers[0])

    def layers(self):
        if self._layers is None:
            self._layers = [sorted(layer) for layer in self.tree.layers]
        return self._layers

    def _worst_cost(self, t, m, u):
        return self.tree.worst_cost(t, m, u)

    def _transitions(self, t, m, u):
        return self.tree.children[t][(m, u)]

    def realization_of(self, t, m):
        return m


class MemoryGroupedAbstraction(InfoAbstraction):
    """Abstraction defined by an arbitrary compression ``sigma(t, m)`` of the memory.

    Generators take the max cost and the union of next realizations over every
    reachable memory sharing a realization. For an information state those
    coincide with the per-memory values, which :meth:`information_state_violations`
    checks exhaustively.
    """

    provenance = "memory-grouped"

    def __init__(self, sys: SystemModel, sigma: Callable[[int, Memory], Any], metric: Metric | None = None,
                 budget: int = DEFAULT_BUDGET, provenance: str | None = None):
        super().__init__(sys)
        self.tree = sys.memory_tree(budget)
        self.sigma = sigma
        self.metric = metric
        if provenance:
            self.provenance = provenance
        self._members: list[dict] = []
        self._sig: dict = {}
        for t, layer in enumerate(self.tree.layers):
            groups = defaultdict(list)
            for m in layer:
                groups[self.realization_of(t, m)].append(m)
            self._members.append(dict(groups))

    def realization_of(self, t, m):
        out = self._sig.get(m)
        if out is None:
            out = self.sigma(t, m)
            self._sig[m] = out
        return out

    def members(self, t, pi) -> list[Memory]:
        try:
            return self._members[t][pi]
        except KeyError:
            raise GeneratorIncomplete(f"realization {pi!r} not reachable at t={t}") from None

    def _initial(self):
        return self._members[0].keys()

    def _worst_cost(self, t, pi, u):
        return max(self.tree.worst_cost(t, m, u) for m in self.members(t, pi))

    def _transitions(self, t, pi, u):
        out = set()
        for m in self.members(t, pi):
            out.update(self.realization_of(t + 1, c) for c in self.tree.children[t][(m, u)])
        return out

    def information_state_violations(self, tol: float = TOL) -> list[tuple]:
        """Memories whose cost or next-realization range differs from their group's."""
        bad = []
        for t, groups in enumerate(self._members):
            for pi, ms in groups.items():
                for u in self.actions(t):
                    ref_cost = self.tree.worst_cost(t, ms[0], u)
                    ref_next = None
                    if t < self.horizon:
                        ref_next = {self.realization_of(t + 1, c) for c in self.tree.children[t][(ms[0], u)]}
                    for m in ms[1:]:
                        if abs(self.tree.worst_cost(t, m, u) - ref_cost) > tol:
                            bad.append(("cost", t, m, u))
                        if ref_next is not None:
                            nxt = {self.realization_of(t + 1, c) for c in self.tree.children[t][(m, u)]}
                            if nxt != ref_next:
                                bad.append(("evolution", t, m, u))
        return bad


def delayed_state_sigma(delay: int) -> Callable[[int, Memory], tuple]:
    """Compression ``(y_t, u_{t-n:t-1})`` for systems observing the state with delay n."""

    def sigma(t, m):
        return (m.ys[-1], m.us[max(0, t - delay):])

    return sigma


class ConditionalRangeAbstraction(InfoAbstraction):
    """Information state given by the set of states consistent with the memory.

    With ``with_initial_observation`` the realization is the pair
    ``(y_0, P_t)``, which keeps every initial observation separate.
    """

    provenance = "info-state"
    exact = True

    def __init__(self, sys: SystemModel, with_initial_observation: bool = False):
        if not sys.is_state_space:
            raise TypeError("the conditional-range abstraction needs a state-space model")
        super().__init__(sys)
        self.with_y0 = with_initial_observation
        base = HausdorffMetric(sys.state_metric)
        self.set_metric = base
        self.metric = ProductMetric([(0, sys.observation_metric), (1, base)]) if self.with_y0 else base
        self._branches: dict = {}
        self._of_memory: dict = {}

    def support(self, pi) -> FinitePointSet:
        return pi[1] if self.with_y0 else pi

    def _wrap(self, y0, p):
        return (y0, p) if self.with_y0 else p

    def _initial(self):
        for y0 in self.sys.initial_observation_set():
            yield self._wrap(y0, range_filter_init(self.sys, y0).support)

    def branches(self, t, pi, u) -> dict:
        """``{y_{t+1}: next realization}`` for one realization and action."""
        key = (t, pi, u)
        out = self._branches.get(key)
        if out is None:
            y0 = pi[0] if self.with_y0 else None
            out = {y: self._wrap(y0, p) for y, p in filter_branches(self.sys, t, self.support(pi), u).items()}
            self._branches[key] = out
        return out

    def _worst_cost(self, t, pi, u):
        return max(self.sys.stage_cost(t, x, u) for x in self.support(pi))

    def _transitions(self, t, pi, u):
        return self.branches(t, pi, u).values()

    def realization_of(self, t, m):
        out = self._of_memory.get(m)
        if out is None:
            parent = m.parent()
            if parent is None:
                out = self._wrap(m.ys[0], range_filter_init(self.sys, m.ys[0]).support)
            else:
                prev = self.realization_of(t - 1, parent)
                y0 = prev[0] if self.with_y0 else None
                p = range_filter_update(self.sys, RangeState(t - 1, self.support(prev)), m.us[-1], m.ys[-1])
                out = self._wrap(y0, p.support)
            self._of_memory[m] = out
        return out


class CompressedAbstraction(InfoAbstraction):
    """Image of an exact information state under a compression ``kappa(t, pi)``.

    Generators are joint ranges: cost is the max over every reachable base
    realization with the same image, transitions are the union of their
    mapped successors. With an injective ``kappa`` this reproduces the base DP.
    """

    provenance = "approx"

    def __init__(self, base: InfoAbstraction, kappa: Callable[[int, Any], Any], metric: Metric | None = None,
                 provenance: str | None = None):
        super().__init__(base.sys)
        self.base = base
        self.kappa = kappa
        self.metric = metric
        if provenance:
            self.provenance = provenance
        self._groups: list[dict] = []
        self._kcache: dict = {}
        for t, layer in enumerate(base.layers()):
            groups = defaultdict(list)
            for pi in layer:
                groups[self.project(t, pi)].append(pi)
            self._groups.append(dict(groups))

    def project(self, t, pi):
        key = (t, pi)
        out = self._kcache.get(key)
        if out is None:
            out = self.kappa(t, pi)
            self._kcache[key] = out
        return out

    def members(self, t, pihat) -> list:
        try:
            return self._groups[t][pihat]
        except KeyError:
            raise GeneratorIncomplete(f"realization {pihat!r} not reachable at t={t}") from None

    def _initial(self):
        return (self.project(0, pi) for pi in self.base.initial_realizations())

    def _worst_cost(self, t, pihat, u):
        return max(self.base.worst_cost(t, pi, u) for pi in self.members(t, pihat))

    def _transitions(self, t, pihat, u):
        out = set()
        for pi in self.members(t, pihat):
            out.update(self.project(t + 1, p2) for p2 in self.base.transitions(t, pi, u))
        return out

    def realization_of(self, t, m):
        return self.project(t, self.base.realization_of(t, m))


# ---------------------------------------------------------------------------
# Tables and strategies
# ---------------------------------------------------------------------------


@dataclass
class ValueTable:
    """Per-time values ``V[t][pi]`` and action values ``Q[t][pi][u]``."""

    V: list[dict]
    Q: list[dict]
    initial: tuple
    criterion: str
    runtime_ms: float = 0.0
    provenance: str = ""

    @property
    def horizon(self) -> int:
        return len(self.V) - 1

    @property
    def value(self) -> float:
        """Optimal worst-case value: max of V_0 over initial realizations."""
        return max(self.V[0][pi] for pi in self.initial)

    def counts(self) -> list[int]:
        return [len(v) for v in self.V]


@dataclass
class Strategy:
    """Per-time map from realizations to actions."""

    table: list[dict]
    provenance: str = ""
    tie_break: str = "lexicographic"
    abstraction: InfoAbstraction | None = field(default=None, repr=False)

    def action(self, t: int, pi):
        try:
            return self.table[t][pi]
        except KeyError:
            raise MissingKey(pi, f"(no action at t={t})") from None

    def act(self, t: int, m: Memory):
        """Action prescribed after memory ``m``."""
        if self.abstraction is None:
            return self.action(t, m)
        return self.action(t, self.abstraction.realization_of(t, m))


class FunctionStrategy(Strategy):
    """Strategy given directly as a function of (t, memory)."""

    def __init__(self, fn: Callable[[int, Memory], Any], provenance: str = "function"):
        super().__init__([], provenance=provenance)
        self.fn = fn

    def act(self, t, m):
        return self.fn(t, m)


def _argmin(row: dict, tol: float = TOL):
    best = min(row.values())
    for u in sorted(row):
        if row[u] <= best + tol:
            return u


def extract_strategy(q: Sequence[dict], tie_break: str = "lexicographic", actions=None,
                     provenance: str = "") -> Strategy:
    """Per-realization argmin of Q; ties go to the lexicographically smallest action.

    ``q`` is a per-time list of ``{pi: {u: value}}``. When ``actions`` (a
    callable ``t -> action set`` or a per-time list) is given, every row must
    cover it.
    """
    if tie_break != "lexicographic":
        raise ValueError(f"unsupported tie-break rule {tie_break!r}")
    table = []
    for t, rows in enumerate(q):
        acts = None
        if actions is not None:
            acts = actions(t) if callable(actions) else actions[t]
        out = {}
        for pi, row in rows.items():
            if not row:
                raise GeneratorIncomplete(f"no action values for {pi!r} at t={t}")
            if acts is not None:
                missing = [u for u in acts if u not in row]
                if missing:
                    raise GeneratorIncomplete(f"missing action(s) {missing!r} for {pi!r} at t={t}")
            out[pi] = _argmin(row)
        table.append(out)
    return Strategy(table, provenance=provenance, tie_break=tie_break)


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def solve_abstraction_dp(sys: SystemModel, a: InfoAbstraction, criterion: str | None = None):
    """Backward recursion over the realizations of ``a``.

    Instantaneous criterion: ``Q_t = max{e_t, max V_{t+1}}``. Terminal
    criterion: ``Q_t = max V_{t+1}`` for t < T and ``Q_T = e_T``.
    Returns ``(ValueTable, Strategy)``.
    """
    start = time.perf_counter()
    crit = criterion or sys.criterion
    T = sys.horizon
    layers = a.layers()
    V = [dict() for _ in range(T + 1)]
    Q = [dict() for _ in range(T + 1)]
    table = [dict() for _ in range(T + 1)]
    for t in range(T, -1, -1):
        nxt = V[t + 1] if t < T else None
        for pi in layers[t]:
            row = {}
            for u in a.actions(t, pi):
                if t < T:
                    try:
                        succ = max(nxt[p2] for p2 in a.transitions(t, pi, u))
                    except KeyError as exc:
                        raise GeneratorIncomplete(f"successor {exc.args[0]!r} has no value at t={t + 1}") from None
                if crit == TERMINAL:
                    q = a.worst_cost(t, pi, u) if t == T else succ
                else:
                    q = a.worst_cost(t, pi, u)
                    if t < T and succ > q:
                        q = succ
                row[u] = q
            if not row:
                raise GeneratorIncomplete(f"no admissible action for {pi!r} at t={t}")
            u_best = _argmin(row)
            Q[t][pi] = row
            V[t][pi] = row[u_best]
            table[t][pi] = u_best
    elapsed = (time.perf_counter() - start) * 1e3
    values = ValueTable(V, Q, tuple(layers[0]), crit, elapsed, a.provenance)
    return values, Strategy(table, provenance=a.provenance, abstraction=a)


def solve_memory_dp(sys: SystemModel, budget: int = DEFAULT_BUDGET):
    """Optimal DP over all reachable memories."""
    start = time.perf_counter()
    a = MemoryAbstraction(sys, budget)
    values, strategy = solve_abstraction_dp(sys, a)
    values.runtime_ms = (time.perf_counter() - start) * 1e3
    return values, strategy


def solve_terminal_dp(sys: SystemModel, budget: int = DEFAULT_BUDGET):
    """Memory DP specialized to the terminal-cost criterion."""
    if sys.criterion != TERMINAL:
        raise ValueError("solve_terminal_dp needs a terminal-criterion system")
    start = time.perf_counter()
    a = MemoryAbstraction(sys, budget)
    values, strategy = solve_abstraction_dp(sys, a, criterion=TERMINAL)
    values.runtime_ms = (time.perf_counter() - start) * 1e3
    return values, strategy


def solve_information_state_dp(sys: SystemModel, with_initial_observation: bool = False):
    """DP over the conditional-range information state."""
    start = time.perf_counter()
    a = ConditionalRangeAbstraction(sys, with_initial_observation)
    values, strategy = solve_abstraction_dp(sys, a)
    values.runtime_ms = (time.perf_counter() - start) * 1e3
    return values, strategy


# ---------------------------------------------------------------------------
# Worst-case evaluation of a fixed strategy
# ---------------------------------------------------------------------------


def _theta(crit, t, T, cost_fn, succ_vals):
    if crit == TERMINAL:
        return cost_fn() if t == T else max(succ_vals)
    c = cost_fn()
    if t < T:
        return max(c, max(succ_vals))
    return c


def evaluate_strategy_worst_case(sys: SystemModel, s: Strategy, budget: int = DEFAULT_BUDGET,
                                 per_initial: bool = False, via: InfoAbstraction | str | None = None):
    """Worst-case criterion of a strategy: Λ_0 maximized over initial memories.

    By default the recursion runs on the memory tree. Passing ``via`` (an
    exact information-state abstraction, or ``"base"`` to use the base of a
    compressed strategy) runs it on that abstraction's realizations instead,
    which is valid whenever the strategy depends on the memory only through it.
    """
    if via is not None:
        return _evaluate_via(sys, s, via, per_initial)
    tree = sys.memory_tree(budget)
    T = sys.horizon
    crit = sys.criterion
    lam_next: dict = {}
    for t in range(T, -1, -1):
        lam = {}
        for m in tree.layers[t]:
            u = s.act(t, m)
            if u not in sys.actions(t):
                raise OutOfRangeAction(f"strategy picks {u!r} outside U_{t}")
            succ = [lam_next[c] for c in tree.children[t][(m, u)]] if t < T else ()
            lam[m] = _theta(crit, t, T, lambda: tree.worst_cost(t, m, u), succ)
        lam_next = lam
    if per_initial:
        return dict(sorted(lam_next.items()))
    return max(lam_next.values())


def _evaluate_via(sys, s, via, per_initial):
    a = s.abstraction
    if via == "base":
        if not isinstance(a, CompressedAbstraction):
            raise TypeError("'base' evaluation needs a compressed-abstraction strategy")
        exact, project = a.base, a.project
    else:
        exact = via
        if a is exact:
            project = lambda t, pi: pi  # noqa: E731
        elif isinstance(a, CompressedAbstraction) and a.base is exact:
            project = a.project
        else:
            raise TypeError("strategy is not a function of the given abstraction")
    if not exact.exact:
        raise TypeError("evaluation needs an exact information state")
    T = sys.horizon
    crit = sys.criterion
    layers = exact.layers()
    lam_next: dict = {}
    for t in range(T, -1, -1):
        lam = {}
        for pi in layers[t]:
            u = s.action(t, project(t, pi))
            succ = [lam_next[p2] for p2 in exact.transitions(t, pi, u)] if t < T else ()
            lam[pi] = _theta(crit, t, T, lambda: exact.worst_cost(t, pi, u), succ)
        lam_next = lam
    if per_initial:
        return dict(sorted(lam_next.items()))
    return max(lam_next.values())


# ---------------------------------------------------------------------------
# α recursion
# ---------------------------------------------------------------------------


def alpha_bound(eps: Sequence[float], delta: Sequence[float], lips: Sequence[float],
                terminal: bool = False) -> list[float]:
    """Backward α recursion.

    ``lips[t]`` is the Lipschitz constant of the approximate value function at
    ``t + 1``. Instantaneous: ``α_t = max(ε_t, α_{t+1} + L·δ_t)`` with
    ``α_{T+1} = 0``. Terminal: ``α_T = ε_T`` and ``α_t = α_{t+1} + L·δ_t``.
    """
    eps, delta, lips = list(eps), list(delta), list(lips)
    if not (len(eps) == len(delta) == len(lips)):
        raise ValueError("eps, delta and lips must have equal length")
    for name, seq in (("eps", eps), ("delta", delta), ("lips", lips)):
        if any(v < 0 for v in seq):
            raise NegativeInput(f"{name} has a negative entry")
    n = len(eps)
    alpha = [0.0] * n
    nxt = 0.0
    for t in range(n - 1, -1, -1):
        if terminal:
            a = eps[t] if t == n - 1 else nxt + lips[t] * delta[t]
        else:
            a = max(eps[t], nxt + lips[t] * delta[t])
        alpha[t] = float(a)
        nxt = a
    return alpha


# ---------------------------------------------------------------------------
# Rollouts
# ---------------------------------------------------------------------------


@dataclass
class RolloutResult:
    costs: list[float]
    max_cost: float
    runtime_ms: float
    traces: list[dict] = field(default_factory=list)


def _pick(rng, seq):
    seq = seq.items if isinstance(seq, FinitePointSet) else tuple(seq)
    return seq[int(rng.integers(len(seq)))]


def simulate_rollouts(sys: SystemModel, s: Strategy, n: int, seed: int = 0,
                      record: bool = False) -> RolloutResult:
    """Seeded rollouts with disturbances and noises drawn uniformly from their sets.

    Each rollout's cost follows the system criterion (max stage cost, or the
    terminal cost). The empirical max lower-bounds the strategy's worst case.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not sys.is_state_space:
        raise TypeError("rollouts need a state-space model")
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    T = sys.horizon
    starts = [(x, nz) for x in sys.initial_states for nz in sys.noises(0) if sys.admits_initial(sys.h(0, x, nz))]
    costs, traces = [], []
    for rep in range(n):
        x, nz = starts[int(rng.integers(len(starts)))]
        y = sys.h(0, x, nz)
        m = Memory((y,))
        stage = []
        for t in range(T + 1):
            u = s.act(t, m)
            c = sys.stage_cost(t, x, u)
            stage.append(c)
            if record:
                traces.append({"replicate": rep, "t": t, "state": x, "observation": y, "action": u, "stage_cost": c})
            if t < T:
                x = sys.f(t, x, u, _pick(rng, sys.disturbances(t)))
                y = sys.h(t + 1, x, _pick(rng, sys.noises(t + 1)))
                m = m.extend(u, y)
        costs.append(float(stage[-1] if sys.criterion == TERMINAL else max(stage)))
    elapsed = (time.perf_counter() - start) * 1e3
    return RolloutResult(costs, max(costs), elapsed, traces)
