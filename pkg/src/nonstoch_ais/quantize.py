"""Quantization-based approximate information states and their error bounds."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from .dp import (
    CompressedAbstraction,
    ConditionalRangeAbstraction,
    InfoAbstraction,
    ValueTable,
    alpha_bound,
    evaluate_strategy_worst_case,
    solve_abstraction_dp,
)
from .errors import EmptySet, NegativeInput
from .model import DEFAULT_BUDGET, TERMINAL, StateSpaceModel, filter_branches
from .ranges import (
    TOL,
    FinitePointSet,
    HausdorffMetric,
    Metric,
    _unique_pairwise,
    as_point_set,
    hausdorff,
)

# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


class QuantizationGrid:
    """Finite γ-cover of a point set with nearest-point snapping."""

    def __init__(self, points, gamma: float, metric: Metric):
        self.points = as_point_set(points)
        if self.points.is_empty:
            raise EmptySet("empty quantization grid")
        self.gamma = float(gamma)
        self.metric = metric
        self._mu: dict = {}

    def quantize_point(self, x):
        out = self._mu.get(x)
        if out is None:
            best, out = math.inf, None
            for g in self.points:  # canonical order: first minimizer wins ties
                d = self.metric(x, g)
                if d < best - TOL:
                    best, out = d, g
            self._mu[x] = out
        return out

    def cover_radius(self, carrier) -> float:
        """Max distance from a carrier point to its nearest grid point."""
        carrier = list(as_point_set(carrier))
        D = self.metric.pairwise(carrier, list(self.points))
        return float(D.min(axis=1).max())

    def __repr__(self):
        return f"QuantizationGrid({len(self.points)} points, gamma={self.gamma})"


class CoordinateQuantizer:
    """Snaps selected coordinates of a flat state tuple with an inner grid.

    Its resolution equals the inner grid's when the state metric restricted to
    the selected coordinates is the grid metric and other coordinates are
    left unchanged.
    """

    def __init__(self, grid: QuantizationGrid, coords: Sequence[int]):
        self.grid = grid
        self.coords = tuple(coords)
        self.gamma = grid.gamma

    def quantize_point(self, x):
        sub = tuple(x[i] for i in self.coords)
        q = self.grid.quantize_point(sub)
        out = list(x)
        for i, v in zip(self.coords, q):
            out[i] = v
        return tuple(out)


def build_grid(x, gamma: float, m: Metric) -> QuantizationGrid:
    """Greedy cover: scan in canonical order, keep a point when nothing kept lies within γ."""
    if gamma < 0:
        raise NegativeInput("gamma must be nonnegative")
    pts = list(as_point_set(x))
    if gamma == 0:
        return QuantizationGrid(pts, 0.0, m)
    kept: list = []
    for p in pts:
        if all(m(p, g) > gamma + TOL for g in kept):
            kept.append(p)
    return QuantizationGrid(kept, gamma, m)


def quantize_point(grid, x):
    return grid.quantize_point(x)


def quantize_range(grid, p) -> FinitePointSet:
    p = as_point_set(p)
    if p.is_empty:
        raise EmptySet("cannot quantize an empty range")
    return FinitePointSet(grid.quantize_point(x) for x in p)


def _grid_at(grids, t):
    if isinstance(grids, (list, tuple)):
        return grids[t]
    return grids


def gammas(grids, horizon: int) -> list[float]:
    return [float(_grid_at(grids, t).gamma) for t in range(horizon + 1)]


# ---------------------------------------------------------------------------
# Quantized abstraction
# ---------------------------------------------------------------------------


def quantized_abstraction(sys: StateSpaceModel, grids, base: ConditionalRangeAbstraction | None = None,
                          with_initial_observation: bool = False) -> CompressedAbstraction:
    """Approximate information state ``nu_t(P_t)`` over the conditional-range filter.

    ``grids`` is one grid or a per-time list; any object with
    ``quantize_point`` and ``gamma`` works.
    """
    if base is None:
        base = ConditionalRangeAbstraction(sys, with_initial_observation)
    if base.with_y0:
        def kappa(t, pi):
            return (pi[0], quantize_range(_grid_at(grids, t), pi[1]))
    else:
        def kappa(t, pi):
            return quantize_range(_grid_at(grids, t), pi)
    return CompressedAbstraction(base, kappa, metric=base.metric, provenance="approx")


# ---------------------------------------------------------------------------
# Lipschitz constants of the system maps
# ---------------------------------------------------------------------------


def _lip_many(Dx: np.ndarray, images: list[list], my: Metric) -> float:
    pos = Dx > 0
    best = 0.0
    for ys in images:
        Dy = _unique_pairwise(my, ys, ys)
        if np.any(Dy[~pos] > TOL):
            return math.inf
        if pos.any():
            best = max(best, float((Dy[pos] / Dx[pos]).max()))
    return best


def system_lipschitz(sys: StateSpaceModel, supports: Sequence | None = None) -> dict[str, list[float]]:
    """Lipschitz constants of ``d_t``, ``f_t`` and ``h_t`` in the state, uniform in the other arguments.

    Computed over ``supports[t]`` (default: the declared ``X_t``). ``L_f`` at
    the horizon is 0 because no transition leaves time T. Results over the
    declared sets are cached on the model; a model flagged ``time_invariant``
    is measured once at t=0.
    """
    cached = sys.__dict__.get("_lipschitz") if supports is None else None
    if cached is not None:
        return {k: list(v) for k, v in cached.items()}
    T = sys.horizon
    out = {"L_d": [], "L_f": [], "L_h": []}
    invariant = supports is None and getattr(sys, "time_invariant", False)
    for t in range(T + 1):
        if invariant and t > 0:
            for k in out:
                out[k].append(out[k][0] if (k != "L_f" or t < T) else 0.0)
            continue
        xs = list(supports[t] if supports is not None else sys.states(t))
        Dx = sys.state_metric.pairwise(xs, xs)
        out["L_d"].append(_lip_many(Dx, [[sys.stage_cost(t, x, u) for x in xs] for u in sys.actions(t)],
                                    sys.cost_metric))
        out["L_h"].append(_lip_many(Dx, [[sys.h(t, x, n) for x in xs] for n in sys.noises(t)],
                                    sys.observation_metric))
        if t < T:
            imgs = [[sys.f(t, x, u, w) for x in xs] for u in sys.actions(t) for w in sys.disturbances(t)]
            out["L_f"].append(_lip_many(Dx, imgs, sys.state_metric))
        else:
            out["L_f"].append(0.0)
    if supports is None:
        sys._lipschitz = {k: list(v) for k, v in out.items()}
    return out


def filter_lipschitz(a: CompressedAbstraction) -> list[float]:
    """Measured Lipschitz constant of the filter ``(P, y) -> P'`` per time.

    Measured over pairs of reachable ranges with the same quantized image
    (the only pairs the bound argument compares) and every feasible next
    observation, under ``max(H(P1, P2), eta(y1, y2))`` on the input and
    Hausdorff distance on the output.
    """
    base = a.base
    sys = a.sys
    hm = HausdorffMetric(sys.state_metric)
    ym = sys.observation_metric
    T = sys.horizon
    out = []
    for t in range(T + 1):
        if t == T:
            out.append(0.0)
            continue
        best = 0.0
        for pihat, group in a._groups[t].items():
            supports = [base.support(pi) for pi in group]
            for u in sys.actions(t):
                pts = []
                for P in supports:
                    for y, P2 in filter_branches(sys, t, P, u).items():
                        pts.append((P, y, P2))
                if len(pts) < 2:
                    continue
                Ps = [p[0] for p in pts]
                Ys = [p[1] for p in pts]
                Qs = [p[2] for p in pts]
                Din = np.maximum(_unique_pairwise(hm, Ps, Ps), _unique_pairwise(ym, Ys, Ys))
                Dout = _unique_pairwise(hm, Qs, Qs)
                pos = Din > 0
                if np.any(Dout[~pos] > TOL):
                    best = math.inf
                elif pos.any():
                    best = max(best, float((Dout[pos] / Din[pos]).max()))
        out.append(best)
    return out


# ---------------------------------------------------------------------------
# Bound formulas
# ---------------------------------------------------------------------------


def perfect_obs_bounds(sys: StateSpaceModel | None, grids, lips: dict | None = None,
                       horizon: int | None = None) -> tuple[list[float], list[float]]:
    """``eps_t = 2 L_d γ_t`` and ``delta_t = 2 γ_{t+1} + 2 L_f γ_t`` with ``γ_{T+1} = 0``."""
    T = sys.horizon if horizon is None else horizon
    if lips is None:
        lips = system_lipschitz(sys)
    g = gammas(grids, T) + [0.0]
    eps = [2 * lips["L_d"][t] * g[t] for t in range(T + 1)]
    delta = [2 * g[t + 1] + 2 * lips["L_f"][t] * g[t] for t in range(T + 1)]
    return eps, delta


def partial_obs_bounds(sys: StateSpaceModel | None, grids, lips: dict | None = None,
                       filter_lips: Sequence[float] | None = None, literal: bool = False,
                       horizon: int | None = None) -> tuple[list[float], list[float]]:
    """``eps_t = 2 L_d γ_t`` and ``delta_t = 2 γ_{t+1} + 2 L_fbar·K_t·γ_t``.

    With ``literal=True``, ``K_t = L_h(t+1)·L_f(t)``. By default
    ``K_t = max(1, L_h(t+1)·L_f(t))``, which also covers the filter's
    dependence on its range argument (see the README). The two agree whenever
    ``L_h·L_f ≥ 1``. ``filter_lips`` defaults to 1 for formula-only use.
    """
    T = sys.horizon if horizon is None else horizon
    if lips is None:
        lips = system_lipschitz(sys)
    if filter_lips is None:
        filter_lips = [1.0] * (T + 1)
    g = gammas(grids, T) + [0.0]
    eps = [2 * lips["L_d"][t] * g[t] for t in range(T + 1)]
    delta = []
    for t in range(T + 1):
        if t == T:
            delta.append(2 * g[t + 1])
            continue
        k = lips["L_h"][t + 1] * lips["L_f"][t]
        if not literal:
            k = max(1.0, k)
        term = 0.0 if g[t] == 0 else 2 * filter_lips[t] * k * g[t]
        delta.append(2 * g[t + 1] + term)
    return eps, delta


# ---------------------------------------------------------------------------
# Measurements
# ---------------------------------------------------------------------------


def empirical_eps_delta(sys, a: InfoAbstraction, via: str = "memory",
                        budget: int = DEFAULT_BUDGET) -> tuple[list[float], list[float]]:
    """Measured worst-cost error ε_t and evolution error δ_t of an abstraction.

    ``via="memory"`` enumerates every reachable memory (the definition).
    ``via="state"`` enumerates realizations of the exact information state a
    compressed abstraction is built on, which gives the same numbers because
    the exact state determines both the cost range and the next-state range.
    """
    T = sys.horizon
    eps = [0.0] * (T + 1)
    delta = [0.0] * (T + 1)
    metric = a.metric
    seen: dict = {}

    def hd(K, Khat):
        key = (K, Khat)
        val = seen.get(key)
        if val is None:
            val = 0.0 if K == Khat else hausdorff(K, Khat, metric)
            seen[key] = val
        return val

    if via == "memory":
        tree = sys.memory_tree(budget)
        for t in range(T + 1):
            for m in tree.layers[t]:
                pihat = a.realization_of(t, m)
                for u in sys.actions(t):
                    e = abs(tree.worst_cost(t, m, u) - a.worst_cost(t, pihat, u))
                    if e > eps[t]:
                        eps[t] = e
                    if t < T:
                        K = FinitePointSet(a.realization_of(t + 1, c) for c in tree.children[t][(m, u)])
                        d = hd(K, a.transitions(t, pihat, u))
                        if d > delta[t]:
                            delta[t] = d
        return eps, delta
    if via != "state":
        raise ValueError(f"unknown route {via!r}")
    if not isinstance(a, CompressedAbstraction):
        raise TypeError("the state route needs a compressed abstraction")
    base = a.base
    for t, layer in enumerate(base.layers()):
        for pi in layer:
            pihat = a.project(t, pi)
            for u in sys.actions(t):
                e = abs(base.worst_cost(t, pi, u) - a.worst_cost(t, pihat, u))
                if e > eps[t]:
                    eps[t] = e
                if t < T:
                    K = FinitePointSet(a.project(t + 1, p2) for p2 in base.transitions(t, pi, u))
                    d = hd(K, a.transitions(t, pihat, u))
                    if d > delta[t]:
                        delta[t] = d
    return eps, delta


def _pair_ratio_max(num: np.ndarray, den: np.ndarray) -> float:
    pos = den > 0
    if np.any(num[~pos] > TOL):
        return math.inf
    return float((num[pos] / den[pos]).max()) if pos.any() else 0.0


def verify_value_lipschitz(tables: ValueTable, a: InfoAbstraction) -> list[float]:
    """Measured Lipschitz constant of each ``V_t`` over its realizations."""
    out = []
    for t, V in enumerate(tables.V):
        pis = list(V)
        if len(pis) < 2:
            out.append(0.0)
            continue
        vals = np.array([V[p] for p in pis], dtype=float)
        D = a.metric.pairwise(pis, pis)
        out.append(_pair_ratio_max(np.abs(vals[:, None] - vals[None, :]), D))
    return out


def lips_for_alpha(value_lips: Sequence[float]) -> list[float]:
    """Shift per-time value Lipschitz constants to the ``L_{V_{t+1}}`` indexing of the α recursion."""
    return [float(v) for v in value_lips[1:]] + [0.0]


def measured_lambda(a: InfoAbstraction) -> list[float]:
    """Max over realization pairs and actions of H(next ranges) / distance, per time."""
    T = a.horizon
    out = []
    for t, layer in enumerate(a.layers()):
        if t == T or len(layer) < 2:
            out.append(0.0)
            continue
        D = a.metric.pairwise(layer, layer)
        best = 0.0
        for u in a.sys.actions(t):
            nxt = [a.transitions(t, pi, u) for pi in layer]
            H = _unique_pairwise(_SetLift(a.metric), nxt, nxt)
            best = max(best, _pair_ratio_max(H, D))
        out.append(best)
    return out


class _SetLift(Metric):
    def __init__(self, base):
        self.base = base

    def __call__(self, A, B):
        return hausdorff(A, B, self.base)


# ---------------------------------------------------------------------------
# Bound reports
# ---------------------------------------------------------------------------


@dataclass
class BoundReport:
    kind: str
    gamma: list[float]
    eps_formula: list[float]
    delta_formula: list[float]
    eps_measured: list[float]
    delta_measured: list[float]
    alpha: list[float]
    value_lipschitz: list[float]
    lipschitz: dict = field(default_factory=dict)
    delta_formula_literal: list[float] | None = None
    value: float | None = None
    approx_value: float | None = None
    approx_worst_case: float | None = None
    realizations_exact: int | None = None
    realizations_approx: int | None = None

    def violations(self) -> list[str]:
        bad = []
        for t in range(len(self.eps_formula)):
            if self.eps_measured[t] > self.eps_formula[t] + TOL:
                bad.append(f"eps[{t}] {self.eps_measured[t]} > {self.eps_formula[t]}")
            if self.delta_measured[t] > self.delta_formula[t] + TOL:
                bad.append(f"delta[{t}] {self.delta_measured[t]} > {self.delta_formula[t]}")
        if self.value is not None and self.approx_value is not None:
            if abs(self.value - self.approx_value) > self.alpha[0] + TOL:
                bad.append(f"|V0 - Vhat0| = {abs(self.value - self.approx_value)} > alpha0 = {self.alpha[0]}")
        if self.value is not None and self.approx_worst_case is not None:
            gap = self.approx_worst_case - self.value
            if gap < -TOL or gap > 2 * self.alpha[0] + TOL:
                bad.append(f"Lambda0 - V0 = {gap} outside [0, 2 alpha0 = {2 * self.alpha[0]}]")
        return bad

    def to_json(self) -> str:
        d = asdict(self)
        d["violations"] = self.violations()
        return json.dumps(d, indent=2, default=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "eps_formula", "eps_measured", "delta_formula", "delta_measured", "alpha"])
        for t in range(len(self.eps_formula)):
            w.writerow([t, self.eps_formula[t], self.eps_measured[t], self.delta_formula[t],
                        self.delta_measured[t], self.alpha[t]])
        return buf.getvalue()


def is_perfectly_observed(sys: StateSpaceModel) -> bool:
    return all(
        sys.h(t, x, n) == x for t in range(sys.horizon + 1) for x in sys.states(t) for n in sys.noises(t)
    )


def bound_report(sys: StateSpaceModel, grids, kind: str = "auto", with_initial_observation: bool = False,
                 via: str = "state", lips: dict | None = None, abstraction: CompressedAbstraction | None = None,
                 evaluate: bool = True) -> BoundReport:
    """Solve the exact and quantized DPs, measure (ε, δ, L_V̂) and compare with the formulas."""
    if kind == "auto":
        kind = "perfect" if is_perfectly_observed(sys) else "partial"
    if abstraction is None:
        abstraction = quantized_abstraction(sys, grids, with_initial_observation=with_initial_observation)
    base = abstraction.base
    if lips is None:
        lips = system_lipschitz(sys)
    exact_values, _ = solve_abstraction_dp(sys, base)
    approx_values, approx_strategy = solve_abstraction_dp(sys, abstraction)
    eps_m, delta_m = empirical_eps_delta(sys, abstraction, via=via)
    vl = verify_value_lipschitz(approx_values, abstraction)
    alpha = alpha_bound(eps_m, delta_m, lips_for_alpha(vl), terminal=sys.criterion == TERMINAL)
    lips = dict(lips)
    literal = None
    if kind == "perfect":
        eps_f, delta_f = perfect_obs_bounds(sys, grids, lips)
    else:
        fl = filter_lipschitz(abstraction)
        lips["L_fbar"] = fl
        eps_f, delta_f = partial_obs_bounds(sys, grids, lips, fl)
        literal = partial_obs_bounds(sys, grids, lips, fl, literal=True)[1]
    worst = None
    if evaluate:
        worst = evaluate_strategy_worst_case(sys, approx_strategy, via="base")
    return BoundReport(
        kind=kind,
        gamma=gammas(grids, sys.horizon),
        eps_formula=eps_f,
        delta_formula=delta_f,
        eps_measured=eps_m,
        delta_measured=delta_m,
        alpha=alpha,
        value_lipschitz=vl,
        lipschitz=lips,
        delta_formula_literal=literal,
        value=exact_values.value,
        approx_value=approx_values.value,
        approx_worst_case=worst,
        realizations_exact=base.realization_count(),
        realizations_approx=abstraction.realization_count(),
    )
