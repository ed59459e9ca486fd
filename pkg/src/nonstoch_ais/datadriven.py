"""Learning conditional ranges from trajectory data, tabular form.

Histories are truncated to a window of the last ``k`` observations (and the
actions between them). Transitions sharing a window and an action are grouped:
the union of their next observations estimates the next-observation range and
the max of their costs estimates the worst-case cost. A window at least as
long as the history is the full memory.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .dp import InfoAbstraction, MemoryMetric, Strategy, solve_abstraction_dp
from .errors import EmptyDataset, MissingKey, SchemaError
from .model import Memory, SystemModel, freeze
from .ranges import FinitePointSet, Metric, average_hausdorff


@dataclass(frozen=True)
class Trajectory:
    ys: tuple
    us: tuple
    cs: tuple

    def __post_init__(self):
        if not (len(self.ys) == len(self.us) == len(self.cs)):
            raise ValueError("trajectory fields must have equal length")

    @property
    def horizon(self) -> int:
        return len(self.ys) - 1


@dataclass
class TrajectoryDataset:
    trajectories: list[Trajectory]
    horizon: int
    criterion: str
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.trajectories)

    def to_ndjson(self) -> str:
        lines = []
        for rep, tr in enumerate(self.trajectories):
            for t in range(len(tr.ys)):
                lines.append(json.dumps({"replicate": rep, "t": t, "y": tr.ys[t], "u": tr.us[t], "c": tr.cs[t]}))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_ndjson(cls, text: str, horizon: int, criterion: str, metadata: dict | None = None) -> TrajectoryDataset:
        rows = defaultdict(dict)
        for line in text.splitlines():
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                rows[rec["replicate"]][rec["t"]] = (freeze(rec["y"]), freeze(rec["u"]), rec["c"])
            except (json.JSONDecodeError, KeyError) as exc:
                raise SchemaError(f"bad dataset record: {exc}") from exc
        trajs = []
        for rep in sorted(rows):
            steps = [rows[rep][t] for t in sorted(rows[rep])]
            trajs.append(Trajectory(*(tuple(s[i] for s in steps) for i in range(3))))
        return cls(trajs, horizon, criterion, dict(metadata or {}))


def _coverage(trajs: list[Trajectory], horizon: int) -> dict:
    pairs = [set() for _ in range(horizon + 1)]
    acts = [set() for _ in range(horizon + 1)]
    for tr in trajs:
        for t in range(horizon + 1):
            pairs[t].add((tr.ys[t], tr.us[t]))
            acts[t].add(tr.us[t])
    return {"distinct_actions": [len(a) for a in acts], "distinct_observation_action_pairs": [len(p) for p in pairs]}


def generate_dataset(sys: SystemModel, policy="uniform", n: int = 100, seed: int = 0) -> TrajectoryDataset:
    """Seeded rollouts under an exploration policy.

    ``policy`` is ``"uniform"`` (actions drawn uniformly), ``"round-robin"``
    (action index ``(replicate + t) mod |U_t|``), a :class:`Strategy`, or a
    callable ``(t, memory) -> action``. Disturbances and noises are uniform.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not sys.is_state_space:
        raise TypeError("dataset generation needs a state-space model")
    rng = np.random.default_rng(seed)
    T = sys.horizon
    starts = [(x, nz) for x in sys.initial_states for nz in sys.noises(0) if sys.admits_initial(sys.h(0, x, nz))]
    if isinstance(policy, Strategy):
        choose, name = (lambda rep, t, m: policy.act(t, m)), f"strategy:{policy.provenance}"
    elif callable(policy):
        choose, name = (lambda rep, t, m: policy(t, m)), "callable"
    elif policy == "uniform":
        def choose(rep, t, m):
            acts = sys.actions(t).items
            return acts[int(rng.integers(len(acts)))]
        name = "uniform"
    elif policy == "round-robin":
        def choose(rep, t, m):
            acts = sys.actions(t).items
            return acts[(rep + t) % len(acts)]
        name = "round-robin"
    else:
        raise ValueError(f"unknown exploration policy {policy!r}")
    trajs = []
    for rep in range(n):
        x, nz = starts[int(rng.integers(len(starts)))]
        y = sys.h(0, x, nz)
        m = Memory((y,))
        ys, us, cs = [], [], []
        for t in range(T + 1):
            u = choose(rep, t, m)
            ys.append(y)
            us.append(u)
            cs.append(sys.stage_cost(t, x, u))
            if t < T:
                W = sys.disturbances(t).items
                N = sys.noises(t + 1).items
                x = sys.f(t, x, u, W[int(rng.integers(len(W)))])
                y = sys.h(t + 1, x, N[int(rng.integers(len(N)))])
                m = m.extend(u, y)
        trajs.append(Trajectory(tuple(ys), tuple(us), tuple(cs)))
    meta = {"policy": name, "n": n, "seed": seed, "coverage": _coverage(trajs, T)}
    return TrajectoryDataset(trajs, T, sys.criterion, meta)


def exhaustive_dataset(sys: SystemModel) -> TrajectoryDataset:
    """Every distinct (observation, action, cost) sequence the system can produce."""
    if not sys.is_state_space:
        raise TypeError("exhaustive enumeration needs a state-space model")
    T = sys.horizon
    out: list[Trajectory] = []

    def walk(t, ys, us, cs, states):
        for u in sys.actions(t):
            by_cost = defaultdict(set)
            for x in states:
                by_cost[sys.stage_cost(t, x, u)].add(x)
            for c in sorted(by_cost):
                group = by_cost[c]
                if t == T:
                    out.append(Trajectory(ys, us + (u,), cs + (c,)))
                    continue
                by_y = defaultdict(set)
                for x in group:
                    for x2 in sys.successors(t, x, u):
                        for y in sys.observations_of(t + 1, x2):
                            by_y[y].add(x2)
                for y in sorted(by_y):
                    walk(t + 1, ys + (y,), us + (u,), cs + (c,), by_y[y])

    by_y0 = defaultdict(set)
    for x in sys.initial_states:
        for y in sys.observations_of(0, x):
            if sys.admits_initial(y):
                by_y0[y].add(x)
    for y0 in sorted(by_y0):
        walk(0, (y0,), (), (), by_y0[y0])
    return TrajectoryDataset(out, T, sys.criterion, {"policy": "exhaustive", "n": len(out)})


# ---------------------------------------------------------------------------
# Empirical ranges
# ---------------------------------------------------------------------------


def window_key(ys, us, t: int, k: int) -> Memory:
    """Last ``k`` observations up to time t and the actions between them."""
    lo = max(0, t - k + 1)
    return Memory(tuple(ys[lo : t + 1]), tuple(us[lo:t]))


def _shift(key: Memory, u, y, k: int) -> Memory:
    ys = key.ys + (y,)
    us = key.us + (u,)
    if len(ys) > k:
        ys, us = ys[-k:], us[len(us) - (k - 1):] if k > 1 else ()
    return Memory(ys, us)


@dataclass
class EmpiricalRangeModel:
    k: int
    horizon: int
    criterion: str
    next_obs: list[dict]
    cmax: list[dict]

    @property
    def full_memory(self) -> bool:
        return self.k >= self.horizon + 1

    def keys(self, t: int) -> list[Memory]:
        return sorted(self._acts[t])

    def __post_init__(self):
        self._acts = [defaultdict(list) for _ in self.cmax]
        for t, layer in enumerate(self.cmax):
            for kk, u in sorted(layer):
                self._acts[t][kk].append(u)

    def actions(self, t: int, key: Memory) -> list:
        acts = self._acts[t].get(key)
        if not acts:
            raise MissingKey(key, f"at t={t}")
        return acts

    def to_json(self) -> str:
        entries = []
        for t in range(self.horizon + 1):
            for (key, u), c in sorted(self.cmax[t].items()):
                nxt = self.next_obs[t].get((key, u)) if t < self.horizon else None
                entries.append({"t": t, "ys": key.ys, "us": key.us, "u": u, "cmax": c,
                                "next": None if nxt is None else list(nxt)})
        return json.dumps({"k": self.k, "horizon": self.horizon, "criterion": self.criterion,
                           "entries": entries}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> EmpiricalRangeModel:
        try:
            d = json.loads(text)
            T = d["horizon"]
            nxt = [dict() for _ in range(T + 1)]
            cmax = [dict() for _ in range(T + 1)]
            for e in d["entries"]:
                key = Memory(freeze(e["ys"]), freeze(e["us"]))
                u = freeze(e["u"])
                cmax[e["t"]][(key, u)] = e["cmax"]
                if e["next"] is not None:
                    nxt[e["t"]][(key, u)] = FinitePointSet(freeze(y) for y in e["next"])
            return cls(d["k"], T, d["criterion"], nxt, cmax)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise SchemaError(f"bad empirical range model: {exc}") from exc


def build_empirical_ranges(d: TrajectoryDataset, k: int) -> EmpiricalRangeModel:
    """Group transitions by (window, action): union next observations, max costs."""
    if k < 1:
        raise ValueError("window k must be at least 1")
    if d is None or not d.trajectories:
        raise EmptyDataset("no trajectories")
    T = d.horizon
    nxt = [defaultdict(set) for _ in range(T + 1)]
    cmax = [dict() for _ in range(T + 1)]
    for tr in d.trajectories:
        for t in range(T + 1):
            key = window_key(tr.ys, tr.us, t, k)
            u = tr.us[t]
            c = tr.cs[t]
            prev = cmax[t].get((key, u))
            if prev is None or c > prev:
                cmax[t][(key, u)] = c
            if t < T:
                nxt[t][(key, u)].add(tr.ys[t + 1])
    return EmpiricalRangeModel(
        k, T, d.criterion, [{kk: FinitePointSet(v) for kk, v in layer.items()} for layer in nxt], cmax
    )


def range_prediction_loss(predicted, empirical, m: Metric, c_pred: float | None = None,
                          c_max: float | None = None, lam: float = 1.0) -> float:
    """``lam·|c_pred − c_max| + average Hausdorff(predicted, empirical)``."""
    loss = average_hausdorff(predicted, empirical, m)
    if lam and c_pred is not None and c_max is not None:
        loss += lam * abs(c_pred - c_max)
    return loss


# ---------------------------------------------------------------------------
# DP over the learned model
# ---------------------------------------------------------------------------


class DataDrivenAbstraction(InfoAbstraction):
    """Window keys as realizations; generators read from the empirical model."""

    provenance = "data-driven"

    def __init__(self, model: EmpiricalRangeModel, sys: SystemModel | None = None):
        self.model = model
        self.sys = sys
        self.horizon = model.horizon
        self._trans = {}
        self._wc = {}
        self._layers = None
        self._keysets = {}
        if sys is not None:
            self.metric = MemoryMetric(sys.observation_metric, sys.action_metric)

    def actions(self, t, pi=None):
        return self.model.actions(t, pi)

    def _initial(self):
        return self.model.keys(0)

    def _worst_cost(self, t, key, u):
        try:
            return self.model.cmax[t][(key, u)]
        except KeyError:
            raise MissingKey(key, f"action {u!r} at t={t}") from None

    def _transitions(self, t, key, u):
        try:
            ys = self.model.next_obs[t][(key, u)]
        except KeyError:
            raise MissingKey(key, f"action {u!r} at t={t}") from None
        keys = self._keyset(t + 1)
        out = []
        for y in ys:
            nk = _shift(key, u, y, self.model.k)
            if nk not in keys:
                raise MissingKey(nk, f"at t={t + 1}")
            out.append(nk)
        return out

    def _keyset(self, t):
        out = self._keysets.get(t)
        if out is None:
            out = self._keysets[t] = frozenset(kk for kk, _ in self.model.cmax[t])
        return out

    def realization_of(self, t, m: Memory):
        return window_key(m.ys, m.us, t, self.model.k)


@dataclass
class _Signature:
    horizon: int
    criterion: str


def solve_dp_from_data(model: EmpiricalRangeModel, sys: SystemModel | None = None):
    """DP over window keys with the empirical ranges and max costs.

    Only actions recorded at a window are candidates there. Reaching a window
    absent from the data raises :class:`MissingKey`.
    """
    if model is None or not any(model.cmax):
        raise EmptyDataset("empty empirical model")
    a = DataDrivenAbstraction(model, sys)
    sig = _Signature(model.horizon, model.criterion)
    return solve_abstraction_dp(sig, a, criterion=model.criterion)
