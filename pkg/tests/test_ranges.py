import itertools
import json
import math

import numpy as np
import pytest

from nonstoch_ais.errors import DimensionMismatch, Disconnected, EmptySet, UnknownConditioningValue
from nonstoch_ais.ranges import (
    CoordinateMetric,
    DiscreteMetric,
    FinitePointSet,
    FiniteRelation,
    GridPathMetric,
    HausdorffMetric,
    ProductMetric,
    TableMetric,
    absolute_metric,
    average_hausdorff,
    check_metric_axioms,
    conditional_range,
    hausdorff,
    l_inverse_constant,
    lipschitz_constant,
    make_metric,
)

E = CoordinateMetric("euclidean")
A = absolute_metric()


def brute_hausdorff(a, b, m):
    ab = max(min(m(x, y) for y in b) for x in a)
    ba = max(min(m(x, y) for x in a) for y in b)
    return max(ab, ba)


class TestFinitePointSet:
    def test_canonical_and_dedup(self):
        s = FinitePointSet([(1, 1), (0, 0), (1, 1)])
        assert s.items == ((0, 0), (1, 1))
        assert s == FinitePointSet([(0, 0), (1, 1)])
        assert hash(s) == hash(FinitePointSet([(1, 1), (0, 0)]))

    def test_membership_and_union(self):
        s = FinitePointSet([1, 2]) | FinitePointSet([3])
        assert 3 in s and 4 not in s and len(s) == 3
        assert FinitePointSet([1]).issubset(s)

    def test_empty_flag(self):
        assert FinitePointSet().is_empty


class TestHausdorff:
    def test_identical(self):
        assert hausdorff({(0, 0), (1, 1)}, {(0, 0), (1, 1)}, E) == 0

    def test_singletons(self):
        assert hausdorff({(0, 0)}, {(3, 4)}, E) == 5

    def test_scalars_against_brute_force(self):
        assert hausdorff({0, 1}, {2}, A) == brute_hausdorff([0, 1], [2], A) == 2

    def test_empty_raises(self):
        with pytest.raises(EmptySet):
            hausdorff(set(), {1}, A)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            hausdorff({(0, 0)}, {(1, 2, 3)}, E)

    def test_vectorized_path_matches_loops(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = {tuple(p) for p in rng.integers(0, 9, size=(12, 2))}
            b = {tuple(p) for p in rng.integers(0, 9, size=(15, 2))}
            assert math.isclose(hausdorff(a, b, E), brute_hausdorff(a, b, E))


class TestAverageHausdorff:
    def test_zero(self):
        assert average_hausdorff({0}, {0}, A) == 0

    def test_singletons(self):
        assert average_hausdorff({0}, {1}, A) == 2

    def test_two_vs_one(self):
        assert average_hausdorff({0, 2}, {1}, A) == 2

    def test_empty(self):
        with pytest.raises(EmptySet):
            average_hausdorff({0}, set(), A)


class TestConditionalRange:
    r = FiniteRelation([(0, "a"), (1, "a"), (2, "b")])

    def test_two_points(self):
        assert conditional_range(self.r, "a") == FinitePointSet([0, 1])

    def test_single(self):
        assert conditional_range(FiniteRelation([(0, "a")]), "a") == FinitePointSet([0])

    def test_unknown(self):
        with pytest.raises(UnknownConditioningValue):
            conditional_range(self.r, "c")

    def test_projections(self):
        assert self.r.x_range == FinitePointSet([0, 1, 2])
        assert self.r.y_range == FinitePointSet(["a", "b"])


class TestConstants:
    def test_l_inverse_identity(self):
        assert l_inverse_constant({0: 0, 1: 1}, A, A) == 1

    def test_l_inverse_constant_map(self):
        assert l_inverse_constant({0: 5, 1: 5}, A, A) == 0

    def test_l_inverse_mod2(self):
        assert l_inverse_constant(lambda x: x % 2, A, A, domain=[0, 1, 2, 3]) == 1

    def test_lipschitz_identity(self):
        assert lipschitz_constant(lambda x: x, A, A, domain=[0, 1, 2]) == 1

    def test_lipschitz_doubling(self):
        assert lipschitz_constant(lambda x: 2 * x, A, A, domain=[0, 1, 2]) == 2

    def test_lipschitz_constant_map(self):
        assert lipschitz_constant(lambda x: 7, A, A, domain=[0, 1, 2]) == 0

    def test_lipschitz_singleton_domain(self):
        assert lipschitz_constant({3: 1}, A, A) == 0


class TestMetrics:
    carrier = [(i, j) for i in range(4) for j in range(3)]

    @pytest.mark.parametrize("kind", ["euclidean", "manhattan", "chebyshev"])
    def test_coordinate_axioms(self, kind):
        assert check_metric_axioms(CoordinateMetric(kind), self.carrier) == []

    def test_discrete(self):
        m = DiscreteMetric()
        assert m(1, 1) == 0 and m(1, 2) == 1
        assert check_metric_axioms(m, self.carrier) == []

    def test_grid_path_with_obstacle(self):
        cells = [(i, j) for i in range(3) for j in range(3)]
        m = GridPathMetric(cells, obstacles=[(1, 1)])
        assert m((0, 1), (2, 1)) == 4
        assert check_metric_axioms(m, [c for c in cells if c != (1, 1)]) == []

    def test_grid_path_disconnected(self):
        m = GridPathMetric([(0, 0), (0, 2)])
        with pytest.raises(Disconnected):
            m((0, 0), (0, 2))

    def test_table_metric_json(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"points": [0, 1, 2], "distances": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]}))
        m = make_metric("custom-table", path=str(p))
        assert isinstance(m, TableMetric) and m(0, 2) == 2

    def test_axiom_checker_flags_violation(self):
        bad = TableMetric([0, 1, 2], [[0, 1, 5], [1, 0, 1], [5, 1, 0]])
        assert "triangle inequality" in check_metric_axioms(bad, [0, 1, 2])

    def test_product_is_componentwise_max(self):
        m = ProductMetric([(0, A), (1, DiscreteMetric())])
        assert m((0, "a"), (3, "b")) == 3
        assert m((0, "a"), (0, "b")) == 1

    def test_hausdorff_metric_pairwise(self):
        h = HausdorffMetric(A)
        sets = [FinitePointSet(s) for s in ([0], [0, 2], [1, 3], [4])]
        D = h.pairwise(sets, sets)
        for i, j in itertools.product(range(4), repeat=2):
            assert D[i, j] == hausdorff(sets[i], sets[j], A)
