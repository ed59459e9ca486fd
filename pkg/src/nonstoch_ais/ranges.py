"""Range calculus over finite point sets.

Points are hashable values: tuples of numbers for coordinate spaces, plain
scalars for one-dimensional spaces, or nested tuples/sets for realization
spaces of abstractions. Every range is realized as a :class:`FinitePointSet`.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict, deque
from collections.abc import Callable, Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from .errors import (
    DimensionMismatch,
    Disconnected,
    EmptySet,
    SchemaError,
    UnknownConditioningValue,
)

TOL = 1e-9


def leq(a: float, b: float, tol: float = TOL) -> bool:
    """``a <= b`` up to the absolute tolerance used for real-valued metrics."""
    return a <= b + tol


def _dim(p) -> int:
    return len(p) if isinstance(p, tuple) else 1


def _as_tuple(p) -> tuple:
    return p if isinstance(p, tuple) else (p,)


class FinitePointSet:
    """Immutable, deduplicated, canonically ordered finite set of points."""

    __slots__ = ("_items", "_hash", "_lookup")

    def __init__(self, points: Iterable = ()):
        if isinstance(points, FinitePointSet):
            items = points._items
        else:
            items = tuple(sorted(set(points)))
        self._items = items
        self._hash = hash(items)
        self._lookup = None

    @classmethod
    def of(cls, *points) -> FinitePointSet:
        return cls(points)

    @property
    def items(self) -> tuple:
        return self._items

    @property
    def is_empty(self) -> bool:
        return not self._items

    def __iter__(self):
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, p) -> bool:
        if self._lookup is None:
            self._lookup = frozenset(self._items)
        return p in self._lookup

    def __eq__(self, other) -> bool:
        if isinstance(other, FinitePointSet):
            return self._hash == other._hash and self._items == other._items
        return NotImplemented

    def __lt__(self, other) -> bool:
        if isinstance(other, FinitePointSet):
            return self._items < other._items
        return NotImplemented

    def __le__(self, other) -> bool:
        return self == other or self < other

    def __gt__(self, other) -> bool:
        if isinstance(other, FinitePointSet):
            return self._items > other._items
        return NotImplemented

    def __hash__(self) -> int:
        return self._hash

    def __or__(self, other: Iterable) -> FinitePointSet:
        return FinitePointSet(itertools.chain(self._items, other))

    def issubset(self, other: Iterable) -> bool:
        other = other if isinstance(other, FinitePointSet) else FinitePointSet(other)
        return all(p in other for p in self._items)

    def __repr__(self) -> str:
        return "FinitePointSet(" + ", ".join(map(repr, self._items)) + ")"


def as_point_set(a) -> FinitePointSet:
    return a if isinstance(a, FinitePointSet) else FinitePointSet(a)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


class Metric:
    """A distance on some carrier. Subclasses override ``__call__``.

    ``pairwise`` returns the full distance matrix between two point lists and
    is overridden with vectorized versions where possible.
    """

    kind = "custom"

    def __call__(self, a, b) -> float:
        raise NotImplementedError

    def pairwise(self, A: Sequence, B: Sequence) -> np.ndarray:
        out = np.empty((len(A), len(B)), dtype=float)
        for i, a in enumerate(A):
            for j, b in enumerate(B):
                out[i, j] = self(a, b)
        return out

    def check_dims(self, A: Sequence, B: Sequence) -> None:
        pass

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.kind})"


class CoordinateMetric(Metric):
    """Euclidean, manhattan or chebyshev distance on coordinate tuples.

    Scalars are treated as one-dimensional points, so ``manhattan`` doubles as
    the absolute-value metric on the reals.
    """

    KINDS = ("euclidean", "manhattan", "chebyshev")

    def __init__(self, kind: str = "euclidean"):
        if kind not in self.KINDS:
            raise ValueError(f"unknown coordinate metric {kind!r}")
        self.kind = kind

    def __call__(self, a, b) -> float:
        a, b = _as_tuple(a), _as_tuple(b)
        if len(a) != len(b):
            raise DimensionMismatch(f"{a!r} vs {b!r}")
        diffs = [abs(x - y) for x, y in zip(a, b)]
        if self.kind == "manhattan":
            return float(sum(diffs))
        if self.kind == "chebyshev":
            return float(max(diffs, default=0))
        return math.hypot(*diffs)

    def _array(self, P: Sequence) -> np.ndarray:
        arr = np.asarray([_as_tuple(p) for p in P], dtype=float)
        return arr.reshape(len(P), -1)

    def check_dims(self, A, B) -> None:
        dims = {_dim(p) for p in itertools.chain(A, B)}
        if len(dims) > 1:
            raise DimensionMismatch(f"mixed dimensions {sorted(dims)}")

    def pairwise(self, A, B) -> np.ndarray:
        if not len(A) or not len(B):
            return np.zeros((len(A), len(B)))
        a, b = self._array(A), self._array(B)
        if a.shape[1] != b.shape[1]:
            raise DimensionMismatch(f"{a.shape[1]} vs {b.shape[1]}")
        diff = np.abs(a[:, None, :] - b[None, :, :])
        if self.kind == "manhattan":
            return diff.sum(axis=2)
        if self.kind == "chebyshev":
            return diff.max(axis=2)
        return np.sqrt((diff**2).sum(axis=2))


def absolute_metric() -> CoordinateMetric:
    return CoordinateMetric("manhattan")


class DiscreteMetric(Metric):
    kind = "discrete"

    def __call__(self, a, b) -> float:
        return 0.0 if a == b else 1.0

    def pairwise(self, A, B) -> np.ndarray:
        ids: dict = {}
        ia = np.array([ids.setdefault(a, len(ids)) for a in A], dtype=np.int64)
        ib = np.array([ids.setdefault(b, len(ids)) for b in B], dtype=np.int64)
        return (ia[:, None] != ib[None, :]).astype(float)


class TableMetric(Metric):
    """Distances read from an explicit symmetric table."""

    kind = "custom-table"

    def __init__(self, points: Sequence, distances: Sequence[Sequence[float]]):
        pts = [_freeze(p) for p in points]
        D = np.asarray(distances, dtype=float)
        if D.shape != (len(pts), len(pts)):
            raise SchemaError("distance table must be square and match the point list")
        if len(set(pts)) != len(pts):
            raise SchemaError("duplicate points in distance table")
        self.points = tuple(pts)
        self.index = {p: i for i, p in enumerate(pts)}
        self.table = D

    @classmethod
    def from_json(cls, source) -> TableMetric:
        if isinstance(source, (str, Path)):
            with open(source) as fh:
                source = json.load(fh)
        try:
            return cls(source["points"], source["distances"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad metric table: {exc}") from exc

    def _idx(self, p) -> int:
        try:
            return self.index[p]
        except KeyError:
            raise DimensionMismatch(f"{p!r} is not in the metric table") from None

    def __call__(self, a, b) -> float:
        return float(self.table[self._idx(a), self._idx(b)])

    def pairwise(self, A, B) -> np.ndarray:
        ia = np.array([self._idx(a) for a in A], dtype=np.int64)
        ib = np.array([self._idx(b) for b in B], dtype=np.int64)
        return self.table[np.ix_(ia, ib)]


def _freeze(x):
    if isinstance(x, list):
        return tuple(_freeze(v) for v in x)
    return x


def grid_neighbors(cell: tuple) -> list[tuple]:
    c, r = cell
    return [(c - 1, r), (c + 1, r), (c, r - 1), (c, r + 1)]


def bfs_distances(source: tuple, free: frozenset) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        for nxt in grid_neighbors(cur):
            if nxt in free and nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


class GridPathMetric(Metric):
    """Shortest 4-neighbour path length on a grid with obstacles."""

    kind = "obstacle-shortest-path"

    def __init__(self, cells: Iterable[tuple], obstacles: Iterable[tuple] = ()):
        blocked = frozenset(obstacles)
        self.cells = tuple(sorted(c for c in set(cells) if c not in blocked))
        self.obstacles = blocked
        self.index = {c: i for i, c in enumerate(self.cells)}
        free = frozenset(self.cells)
        n = len(self.cells)
        D = np.full((n, n), np.inf)
        for i, c in enumerate(self.cells):
            for d, dist in bfs_distances(c, free).items():
                D[i, self.index[d]] = dist
        self.table = D

    def _idx(self, p) -> int:
        try:
            return self.index[p]
        except KeyError:
            raise DimensionMismatch(f"{p!r} is not a free cell") from None

    def __call__(self, a, b) -> float:
        d = self.table[self._idx(a), self._idx(b)]
        if not np.isfinite(d):
            raise Disconnected(f"no path between {a!r} and {b!r}")
        return float(d)

    def pairwise(self, A, B) -> np.ndarray:
        ia = np.array([self._idx(a) for a in A], dtype=np.int64)
        ib = np.array([self._idx(b) for b in B], dtype=np.int64)
        D = self.table[np.ix_(ia, ib)]
        if not np.all(np.isfinite(D)):
            raise Disconnected("disconnected cells in pairwise request")
        return D


def _project(p, sel):
    if isinstance(sel, int):
        return p[sel]
    return tuple(p[i] for i in sel)


class ProductMetric(Metric):
    """Max of component metrics on tuple-structured points.

    ``parts`` is a list of ``(selector, metric)``. A selector is an int (one
    component) or a sequence of ints (a sub-tuple of coordinates).
    """

    kind = "product-max"

    def __init__(self, parts: Sequence[tuple[Any, Metric]]):
        self.parts = [(s if isinstance(s, int) else tuple(s), m) for s, m in parts]

    def __call__(self, a, b) -> float:
        return max(m(_project(a, s), _project(b, s)) for s, m in self.parts)

    def pairwise(self, A, B) -> np.ndarray:
        out = np.zeros((len(A), len(B)))
        for s, m in self.parts:
            pa = [_project(a, s) for a in A]
            pb = [_project(b, s) for b in B]
            np.maximum(out, _unique_pairwise(m, pa, pb), out=out)
        return out


def _unique_pairwise(m: Metric, A: Sequence, B: Sequence) -> np.ndarray:
    """Pairwise distances computed once per distinct value, then scattered."""
    ua = list(dict.fromkeys(A))
    ub = list(dict.fromkeys(B))
    if len(ua) == len(A) and len(ub) == len(B):
        return m.pairwise(A, B)
    D = m.pairwise(ua, ub)
    ia = {v: i for i, v in enumerate(ua)}
    ib = {v: i for i, v in enumerate(ub)}
    return D[np.ix_([ia[a] for a in A], [ib[b] for b in B])]


class HausdorffMetric(Metric):
    """Hausdorff distance between finite sets, lifted from a base metric."""

    kind = "hausdorff"

    def __init__(self, base: Metric):
        self.base = base
        self._cache: dict = {}

    def __call__(self, a, b) -> float:
        key = (a, b) if hash(a) <= hash(b) else (b, a)
        val = self._cache.get(key)
        if val is None:
            val = hausdorff(a, b, self.base)
            if len(self._cache) > 200_000:
                self._cache.clear()
            self._cache[key] = val
        return val

    def pairwise(self, A, B) -> np.ndarray:
        sets = list(dict.fromkeys(itertools.chain(A, B)))
        for s in sets:
            if not len(s):
                raise EmptySet("Hausdorff distance of an empty set")
        elems = list(dict.fromkeys(itertools.chain.from_iterable(sets)))
        pos = {e: i for i, e in enumerate(elems)}
        E = self.base.pairwise(elems, elems)
        idx = {s: np.fromiter((pos[e] for e in s), dtype=np.int64) for s in sets}
        out = np.empty((len(A), len(B)))
        for i, a in enumerate(A):
            sub = E[idx[a]]
            for j, b in enumerate(B):
                block = sub[:, idx[b]]
                out[i, j] = max(block.min(axis=1).max(), block.min(axis=0).max())
        return out


class CallableMetric(Metric):
    def __init__(self, fn: Callable[[Any, Any], float], kind: str = "custom"):
        self.fn = fn
        self.kind = kind

    def __call__(self, a, b) -> float:
        return float(self.fn(a, b))


def make_metric(kind: str, **params) -> Metric:
    """Construct a metric by name."""
    if kind in CoordinateMetric.KINDS:
        return CoordinateMetric(kind)
    if kind in ("absolute", "abs"):
        return absolute_metric()
    if kind == "discrete":
        return DiscreteMetric()
    if kind in ("custom-table", "table"):
        if "path" in params:
            return TableMetric.from_json(params["path"])
        return TableMetric(params["points"], params["distances"])
    if kind in ("obstacle-shortest-path", "grid-path"):
        cells = [tuple(c) for c in params["cells"]]
        return GridPathMetric(cells, [tuple(o) for o in params.get("obstacles", ())])
    raise SchemaError(f"unknown metric kind {kind!r}")


def check_metric_axioms(m: Metric, carrier: Sequence, tol: float = TOL) -> list[str]:
    """Exhaustively check the metric axioms on a finite carrier.

    Returns a list of human-readable violations (empty when all hold).
    """
    pts = list(dict.fromkeys(carrier))
    D = m.pairwise(pts, pts)
    bad = []
    n = len(pts)
    if np.any(np.abs(np.diag(D)) > tol):
        bad.append("nonzero self-distance")
    if np.any(np.abs(D - D.T) > tol):
        bad.append("asymmetry")
    off = D + np.eye(n)
    if n > 1 and np.any(off[~np.eye(n, dtype=bool)] <= 0):
        bad.append("zero distance between distinct points")
    if n:
        via = (D[:, :, None] + D[None, :, :]).min(axis=1)
        if np.any(D > via + tol):
            bad.append("triangle inequality")
    return bad


# ---------------------------------------------------------------------------
# Set distances
# ---------------------------------------------------------------------------


def _check_pair(a, b, m: Metric):
    a, b = as_point_set(a), as_point_set(b)
    if a.is_empty or b.is_empty:
        raise EmptySet("distance between sets requires non-empty sets")
    m.check_dims(a.items[:1] + b.items[:1], ())
    return a, b


def _directed(a: FinitePointSet, b: FinitePointSet, m: Metric) -> tuple[float, float]:
    if len(a) * len(b) <= 64:
        rows = [[m(x, y) for y in b] for x in a]
        ab = max(min(r) for r in rows)
        ba = max(min(rows[i][j] for i in range(len(a))) for j in range(len(b)))
        return ab, ba
    D = m.pairwise(a.items, b.items)
    return float(D.min(axis=1).max()), float(D.min(axis=0).max())


def hausdorff(a, b, m: Metric) -> float:
    """Hausdorff distance: the larger of the two directed sup-inf distances."""
    a, b = _check_pair(a, b, m)
    if a == b:
        return 0.0
    return float(max(_directed(a, b, m)))


def average_hausdorff(a, b, m: Metric) -> float:
    """Sum of the two directed mean nearest-point distances."""
    a, b = _check_pair(a, b, m)
    D = m.pairwise(a.items, b.items)
    return float(D.min(axis=1).mean() + D.min(axis=0).mean())


# ---------------------------------------------------------------------------
# Relations and conditional ranges
# ---------------------------------------------------------------------------


class FiniteRelation:
    """A finite joint range ``[[X, Y]]`` stored as a set of pairs."""

    __slots__ = ("pairs", "_by_y")

    def __init__(self, pairs: Iterable[tuple]):
        self.pairs = frozenset(pairs)
        by_y = defaultdict(list)
        for x, y in self.pairs:
            by_y[y].append(x)
        self._by_y = {y: FinitePointSet(xs) for y, xs in by_y.items()}

    @property
    def x_range(self) -> FinitePointSet:
        return FinitePointSet(x for x, _ in self.pairs)

    @property
    def y_range(self) -> FinitePointSet:
        return FinitePointSet(self._by_y)

    def given(self, y) -> FinitePointSet:
        try:
            return self._by_y[y]
        except KeyError:
            raise UnknownConditioningValue(y) from None

    @classmethod
    def from_map(cls, f, domain=None) -> FiniteRelation:
        return cls((x, y) for x, y in _items(f, domain))


def conditional_range(r, y) -> FinitePointSet:
    """``[[X | y]]``: every x paired with ``y`` in the relation."""
    if not isinstance(r, FiniteRelation):
        r = FiniteRelation(r)
    return r.given(y)


# ---------------------------------------------------------------------------
# Lipschitz-type constants of finite maps
# ---------------------------------------------------------------------------


def _items(f, domain) -> list[tuple]:
    if isinstance(f, Mapping):
        return list(f.items())
    if domain is None:
        raise TypeError("a callable map needs an explicit domain")
    return [(x, f(x)) for x in dict.fromkeys(domain)]


def l_inverse_constant(f, mx: Metric, my: Metric, domain=None) -> float:
    """Max over distinct image points of H(f^-1(y1), f^-1(y2)) / η(y1, y2).

    ``f`` is a mapping or a callable together with ``domain``. A singleton
    image yields 0.
    """
    pre = defaultdict(list)
    for x, y in _items(f, domain):
        pre[y].append(x)
    image = sorted(pre)
    if len(image) < 2:
        return 0.0
    xs = [x for y in image for x in pre[y]]
    pos = {x: i for i, x in enumerate(xs)}
    Dx = mx.pairwise(xs, xs)
    Dy = my.pairwise(image, image)
    idx = [np.array([pos[x] for x in pre[y]]) for y in image]
    best = 0.0
    for i in range(len(image)):
        sub = Dx[idx[i]]
        for j in range(i + 1, len(image)):
            block = sub[:, idx[j]]
            h = max(block.min(axis=1).max(), block.min(axis=0).max())
            if h > 0:
                best = max(best, h / Dy[i, j] if Dy[i, j] > 0 else math.inf)
    return float(best)


def lipschitz_constant(f, mx: Metric, my: Metric, domain=None, block: int = 512) -> float:
    """Max over distinct domain points of η(f(x1), f(x2)) / η(x1, x2)."""
    items = _items(f, domain)
    if len(items) < 2:
        return 0.0
    xs = [x for x, _ in items]
    ys = [y for _, y in items]
    best = 0.0
    for start in range(0, len(xs), block):
        Dx = mx.pairwise(xs[start : start + block], xs)
        Dy = _unique_pairwise(my, ys[start : start + block], ys)
        pos = Dx > 0
        if np.any(Dy[~pos] > TOL):
            # zero-distance points mapped apart (pseudo-metric carrier)
            return math.inf
        if pos.any():
            best = max(best, float((Dy[pos] / Dx[pos]).max()))
    return best
