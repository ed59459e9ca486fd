import pytest
from conftest import corpus, parity_system, toy_t0

from nonstoch_ais.datadriven import (
    EmpiricalRangeModel,
    Trajectory,
    TrajectoryDataset,
    build_empirical_ranges,
    exhaustive_dataset,
    generate_dataset,
    range_prediction_loss,
    solve_dp_from_data,
    window_key,
)
from nonstoch_ais.dp import (
    FunctionStrategy,
    evaluate_strategy_worst_case,
    solve_information_state_dp,
    solve_memory_dp,
    solve_terminal_dp,
)
from nonstoch_ais.errors import EmptyDataset, EmptySet, MissingKey
from nonstoch_ais.model import Memory, StateSpaceModel
from nonstoch_ais.ranges import FinitePointSet, absolute_metric


def deterministic_system():
    return StateSpaceModel(2, [0, 1, 2, 3], [0, 1], [0], [0], lambda t, x, u, w: min(3, x + u),
                           lambda t, x, n: x, lambda t, x, u: x, initial_states=[1])


def ds(*trajs, horizon=1):
    return TrajectoryDataset([Trajectory(*t) for t in trajs], horizon, "instantaneous")


class TestGenerate:
    def test_single_deterministic(self):
        d = generate_dataset(deterministic_system(), FunctionStrategy(lambda t, m: 1), n=1, seed=0)
        assert d.trajectories == [Trajectory((1, 2, 3), (1, 1, 1), (1, 2, 3))]

    def test_seeded(self):
        sys = parity_system(3)
        assert generate_dataset(sys, "uniform", 40, seed=2).trajectories == \
            generate_dataset(sys, "uniform", 40, seed=2).trajectories

    def test_toy_coverage_reported(self):
        d = generate_dataset(toy_t0(observed=False), "uniform", 100, seed=0)
        assert d.metadata["policy"] == "uniform" and d.metadata["seed"] == 0
        assert d.metadata["coverage"]["distinct_actions"] == [2]

    def test_round_robin(self):
        d = generate_dataset(parity_system(1), "round-robin", 3, seed=0)
        assert [tr.us[0] for tr in d.trajectories] == [-1, 0, 1]

    def test_n_positive(self):
        with pytest.raises(ValueError):
            generate_dataset(parity_system(1), "uniform", 0)

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            generate_dataset(parity_system(1), "greedy", 5)


class TestBuildRanges:
    def test_single_trajectory_singletons(self):
        m = build_empirical_ranges(ds(((0, 1), (0, 0), (1, 2))), k=2)
        assert all(len(v) == 1 for layer in m.next_obs for v in layer.values())

    def test_grouping(self):
        m = build_empirical_ranges(ds(((0, "b"), (0, 0), (1, 1)), ((0, "c"), (0, 0), (2, 2))), k=1)
        assert m.next_obs[0][(Memory((0,)), 0)] == FinitePointSet(["b", "c"])
        assert m.cmax[0][(Memory((0,)), 0)] == 2

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            build_empirical_ranges(ds(), k=1)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            build_empirical_ranges(ds(((0, 1), (0, 0), (0, 0))), k=0)

    def test_exhaustive_full_memory_equals_model_ranges(self, small_corpus):
        for sys in small_corpus:
            m = build_empirical_ranges(exhaustive_dataset(sys), sys.horizon + 1)
            tree = sys.memory_tree()
            for t in range(sys.horizon):
                for mem in tree.layers[t]:
                    for u in sys.actions(t):
                        model_range = {c.ys[-1] for c in tree.children[t][(mem, u)]}
                        assert set(m.next_obs[t][(mem, u)]) == model_range
                        assert m.cmax[t][(mem, u)] == tree.worst_cost(t, mem, u)

    def test_sampled_ranges_are_subsets(self, small_corpus):
        for sys in small_corpus[:15]:
            m = build_empirical_ranges(generate_dataset(sys, "uniform", 30, seed=1), sys.horizon + 1)
            tree = sys.memory_tree()
            for t in range(sys.horizon):
                for (mem, u), ys in m.next_obs[t].items():
                    assert set(ys) <= {c.ys[-1] for c in tree.children[t][(mem, u)]}

    def test_monotone_coverage(self):
        sys = parity_system(3)
        d = generate_dataset(sys, "uniform", 60, seed=4)
        small = build_empirical_ranges(TrajectoryDataset(d.trajectories[:20], 3, sys.criterion), 2)
        big = build_empirical_ranges(d, 2)
        for t in range(3):
            for key, ys in small.next_obs[t].items():
                assert ys.issubset(big.next_obs[t][key])


class TestLoss:
    def test_zero(self):
        assert range_prediction_loss({1, 2}, {1, 2}, absolute_metric()) == 0

    def test_singletons(self):
        assert range_prediction_loss({0}, {1}, absolute_metric()) == 2

    def test_lambda_zero_ignores_cost(self):
        assert range_prediction_loss({0}, {1}, absolute_metric(), c_pred=5, c_max=1, lam=0) == 2

    def test_cost_term(self):
        assert range_prediction_loss({0}, {0}, absolute_metric(), c_pred=5, c_max=1, lam=0.5) == 2

    def test_empty(self):
        with pytest.raises(EmptySet):
            range_prediction_loss(set(), {0}, absolute_metric())


class TestSolveFromData:
    def test_terminal_exhaustive_full_memory(self):
        for sys in corpus(20, seed=15, criterion="terminal"):
            m = build_empirical_ranges(exhaustive_dataset(sys), sys.horizon + 1)
            assert solve_dp_from_data(m, sys)[0].value == solve_terminal_dp(sys)[0].value

    def test_full_memory_strategy_is_optimal(self, small_corpus):
        for sys in small_corpus:
            m = build_empirical_ranges(exhaustive_dataset(sys), sys.horizon + 1)
            _, s = solve_dp_from_data(m, sys)
            assert evaluate_strategy_worst_case(sys, s) == solve_memory_dp(sys)[0].value

    def test_window_one_dominated(self, small_corpus):
        for sys in small_corpus:
            d = exhaustive_dataset(sys)
            _, full = solve_dp_from_data(build_empirical_ranges(d, sys.horizon + 1), sys)
            _, one = solve_dp_from_data(build_empirical_ranges(d, 1), sys)
            assert evaluate_strategy_worst_case(sys, one) >= evaluate_strategy_worst_case(sys, full)

    def test_empty_model(self):
        with pytest.raises(EmptyDataset):
            solve_dp_from_data(EmpiricalRangeModel(1, 0, "instantaneous", [{}], [{}]))

    def test_unseen_window(self):
        m = build_empirical_ranges(ds(((0, 1), (0, 0), (1, 1))), k=2)
        del m.cmax[1][(Memory((0, 1), (0,)), 0)]
        m.__post_init__()
        with pytest.raises(MissingKey):
            solve_dp_from_data(m)

    def test_sparse_strategy_hits_missing_key(self):
        sys = parity_system(2)
        d = generate_dataset(sys, FunctionStrategy(lambda t, m: 0), 5, seed=0)
        _, s = solve_dp_from_data(build_empirical_ranges(d, 3), sys)
        with pytest.raises(MissingKey):
            evaluate_strategy_worst_case(sys, s)


class TestPersistence:
    def test_ndjson_roundtrip(self):
        sys = parity_system(2)
        d = generate_dataset(sys, "uniform", 10, seed=3)
        back = TrajectoryDataset.from_ndjson(d.to_ndjson(), d.horizon, d.criterion)
        assert back.trajectories == d.trajectories

    def test_ndjson_fields(self):
        import json

        line = generate_dataset(parity_system(1), "uniform", 1).to_ndjson().splitlines()[0]
        assert set(json.loads(line)) == {"replicate", "t", "y", "u", "c"}

    def test_model_roundtrip(self):
        sys = corpus(1, seed=21)[0]
        m = build_empirical_ranges(exhaustive_dataset(sys), 2)
        back = EmpiricalRangeModel.from_json(m.to_json())
        assert back.cmax == m.cmax and back.next_obs[:-1] == m.next_obs[:-1]
        assert solve_dp_from_data(back, sys)[0].value == solve_dp_from_data(m, sys)[0].value


def test_window_key():
    assert window_key((1, 2, 3), (7, 8), 2, 2) == Memory((2, 3), (8,))
    assert window_key((1, 2, 3), (7, 8), 2, 5) == Memory((1, 2, 3), (7, 8))
    assert window_key((1, 2, 3), (7, 8), 1, 1) == Memory((2,))


def test_information_state_strategy_as_exploration():
    sys = parity_system(2)
    _, s = solve_information_state_dp(sys)
    d = generate_dataset(sys, s, 5, seed=0)
    assert d.metadata["policy"].startswith("strategy")
