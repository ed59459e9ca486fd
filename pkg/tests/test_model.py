import json

import pytest
from conftest import corpus, parity_system, toy_t0
from oracles import brute_conditional_ranges, brute_memories

from nonstoch_ais.dp import solve_memory_dp
from nonstoch_ais.errors import (
    InfeasibleObservation,
    InvalidModel,
    ModelTooLarge,
    OutOfRangeAction,
    OutOfRangeObservation,
    SchemaError,
)
from nonstoch_ais.model import (
    InputOutputModel,
    Memory,
    RangeState,
    StateSpaceModel,
    enumerate_reachable_memories,
    load_model,
    memory_extend,
    range_filter_init,
    range_filter_update,
    range_of_memory,
    to_input_output,
    worst_case_stage_cost,
)
from nonstoch_ais.envs import wall_defense_system
from nonstoch_ais.ranges import FinitePointSet


def identity_system(observation=lambda t, x, n: x):
    return StateSpaceModel(1, [0, 1, 2], [0], [0], [0], lambda t, x, u, w: x, observation, lambda t, x, u: 0)


class TestMemory:
    def test_extend(self):
        assert memory_extend(Memory(("y0",)), "u0", "y1") == Memory(("y0", "y1"), ("u0",))

    def test_extend_length(self):
        m = memory_extend(Memory((0,)), 0, 1)
        assert m.t == 1 and len(m.ys) == 2

    def test_out_of_range_action(self):
        with pytest.raises(OutOfRangeAction):
            memory_extend(Memory((0,)), 7, 0, sys=parity_system())

    def test_out_of_range_observation(self):
        with pytest.raises(OutOfRangeObservation):
            memory_extend(Memory((0,)), 0, 5, sys=parity_system())

    def test_invariant(self):
        with pytest.raises(ValueError):
            Memory((0, 1), ())


class TestReachableMemories:
    def test_perfectly_observed_t0(self):
        assert enumerate_reachable_memories(toy_t0(), 0) == [Memory((0,)), Memory((1,))]

    def test_input_output_constant_observation(self):
        io = InputOutputModel(0, [0, 1], [0], lambda t, ws, us: "c", lambda t, ws, us: 0)
        assert enumerate_reachable_memories(io, 0) == [Memory(("c",))]

    @pytest.mark.parametrize("i", range(15))
    def test_matches_replay_oracle(self, i):
        sys = corpus(15, seed=3)[i]
        for t in range(sys.horizon + 1):
            got = {(m.ys, m.us) for m in enumerate_reachable_memories(sys, t)}
            assert got == brute_memories(sys, t)

    def test_budget(self):
        with pytest.raises(ModelTooLarge) as exc:
            enumerate_reachable_memories(parity_system(3), 3, budget=5)
        assert exc.value.count > 5


class TestFilter:
    def test_noise_free_identity(self):
        p = RangeState(0, FinitePointSet([0, 1, 2]))
        assert range_filter_update(identity_system(), p, 0, 1).support == FinitePointSet([1])

    def test_parity_observation(self):
        sys = identity_system(lambda t, x, n: x % 2)
        p = RangeState(0, FinitePointSet([0, 1, 2]))
        assert range_filter_update(sys, p, 0, 0).support == FinitePointSet([0, 2])

    def test_infeasible_update(self):
        p = RangeState(0, FinitePointSet([0]))
        with pytest.raises(InfeasibleObservation):
            range_filter_update(identity_system(), p, 0, 2)

    def test_init_noise_free(self):
        assert range_filter_init(identity_system(), 2).support == FinitePointSet([2])

    def test_init_wall_defense(self):
        sys = wall_defense_system(half_width=2, horizon=1)
        p = range_filter_init(sys, sys_obs(sys, (0, -1)))
        assert {(x[2], x[3]) for x in p.support} == {(0, -1), (0, -2)}

    def test_init_infeasible(self):
        with pytest.raises(InfeasibleObservation):
            range_filter_init(identity_system(), 9)

    @pytest.mark.parametrize("i", range(15))
    def test_filter_equals_brute_force(self, i):
        sys = corpus(15, seed=4)[i]
        for t in range(sys.horizon + 1):
            mems = enumerate_reachable_memories(sys, t)
            ref = brute_conditional_ranges(sys, t, [m.us for m in mems])
            for m in mems:
                assert set(range_of_memory(sys, m).support) == ref[(m.ys, m.us)]

    def test_update_within_forward_image(self, small_corpus):
        for sys in small_corpus:
            for t in range(sys.horizon):
                for m in enumerate_reachable_memories(sys, t):
                    p = range_of_memory(sys, m)
                    for u in sys.actions(t):
                        image = {x2 for x in p.support for x2 in sys.successors(t, x, u)}
                        for y in sys.observation_space(t + 1):
                            try:
                                q = range_filter_update(sys, p, u, y)
                            except InfeasibleObservation:
                                continue
                            assert set(q.support) <= image


def sys_obs(sys, attacker):
    """Full wall observation with the default agent start and zero damage."""
    return next(y for y in sys.observation_space(0) if (y[2], y[3]) == attacker)


class TestWorstCaseStageCost:
    sys = StateSpaceModel(0, [0, 1], [0, 1], [0], [0], lambda t, x, u, w: x, lambda t, x, n: 0,
                          lambda t, x, u: abs(x - u))

    def test_two_points(self):
        assert worst_case_stage_cost(self.sys, FinitePointSet([0, 1]), 0) == 1

    def test_singleton(self):
        assert worst_case_stage_cost(self.sys, RangeState(0, FinitePointSet([1])), 0) == 1

    def test_zero_cost(self):
        z = StateSpaceModel(0, [0, 1], [0], [0], [0], lambda t, x, u, w: x, lambda t, x, n: 0, lambda t, x, u: 0)
        assert worst_case_stage_cost(z, FinitePointSet([0, 1]), 0) == 0

    def test_bad_action(self):
        with pytest.raises(OutOfRangeAction):
            worst_case_stage_cost(self.sys, FinitePointSet([0]), 5)

    def test_memory_carrier_matches_brute_range(self, small_corpus):
        # The memory's cost range comes from the worlds consistent with it,
        # whatever strategy produced it.
        for sys in small_corpus:
            for t in range(sys.horizon + 1):
                mems = enumerate_reachable_memories(sys, t)
                ref = brute_conditional_ranges(sys, t, [m.us for m in mems])
                for m in mems:
                    xs = ref[(m.ys, m.us)]
                    for u in sys.actions(t):
                        assert worst_case_stage_cost(sys, m, u) == max(sys.d(t, x, u) for x in xs)


class TestInputOutputView:
    def test_same_value(self, small_corpus):
        for sys in small_corpus[:15]:
            v_ss, _ = solve_memory_dp(sys)
            v_io, _ = solve_memory_dp(to_input_output(sys))
            assert v_ss.value == v_io.value

    def test_same_memories(self, small_corpus):
        for sys in small_corpus[:15]:
            io = to_input_output(sys)
            for t in range(sys.horizon + 1):
                assert enumerate_reachable_memories(sys, t) == enumerate_reachable_memories(io, t)


class TestValidation:
    def test_negative_horizon(self):
        with pytest.raises(InvalidModel):
            StateSpaceModel(-1, [0], [0], [0], [0], lambda *a: 0, lambda *a: 0, lambda *a: 0)

    def test_non_closed_dynamics(self):
        sys = StateSpaceModel(1, [0, 1], [0], [0], [0], lambda t, x, u, w: x + 5, lambda t, x, n: x,
                              lambda t, x, u: 0)
        with pytest.raises(InvalidModel):
            sys.validate()

    def test_negative_cost(self):
        sys = StateSpaceModel(0, [0, 1], [0], [0], [0], lambda t, x, u, w: x, lambda t, x, n: x,
                              lambda t, x, u: -1)
        with pytest.raises(InvalidModel):
            sys.validate()


class TestLoading:
    def test_rule_model(self, configs_dir):
        cfg = json.loads((configs_dir / "toy_t0.json").read_text())
        sys = load_model(cfg["model"])
        assert sys.horizon == 0 and list(sys.states(0)) == [0, 1]

    def test_table_model(self):
        spec = {
            "horizon": 1,
            "spaces": {"states": [0, 1], "actions": [0, 1]},
            "dynamics": {"table": [[0, 0, 0, 0], [0, 1, 0, 1], [1, 0, 0, 1], [1, 1, 0, 0]]},
            "observation": {"table": [[0, 0, 0], [1, 0, 0]]},
            "cost": {"rule": "abs-diff"},
        }
        sys = load_model(spec)
        assert sys.f(0, 1, 1, 0) == 0

    def test_partial_table_rejected(self):
        spec = {
            "horizon": 1,
            "spaces": {"states": [0, 1], "actions": [0]},
            "dynamics": {"table": [[0, 0, 0, 0]]},
            "observation": {"rule": "identity"},
            "cost": {"rule": "zero"},
        }
        with pytest.raises(SchemaError):
            load_model(spec)

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{ not json")
        with pytest.raises(SchemaError):
            load_model(p)

    def test_unknown_rule(self):
        spec = {"horizon": 0, "spaces": {"states": [0], "actions": [0]}, "dynamics": {"rule": "warp"},
                "observation": {"rule": "identity"}, "cost": {"rule": "zero"}}
        with pytest.raises(SchemaError):
            load_model(spec)
