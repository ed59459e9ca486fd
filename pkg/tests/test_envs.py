import itertools

import numpy as np
import pytest

from nonstoch_ais.envs import (
    DEFAULT_OBSTACLES_5,
    MOVES,
    WALL_NOISE,
    PursuitState,
    WallDefenseState,
    WallGeometry,
    clip_move,
    env_from_config,
    free_cells,
    observe,
    pursuit_step,
    pursuit_system,
    pursuit_terminal_cost,
    wall_cost,
    wall_defense_system,
    wall_step,
)
from nonstoch_ais.errors import Disconnected, SchemaError
from nonstoch_ais.ranges import check_metric_axioms

GEO = WallGeometry(2)
FREE5 = free_cells(5, DEFAULT_OBSTACLES_5)


class TestClipMove:
    def test_stay(self):
        assert clip_move((0, 0), (0, 0), {(0, 0)}) == (0, 0)

    def test_blocked_by_obstacle(self):
        free = free_cells(3, [(1, 0)])
        assert clip_move((0, 0), (1, 0), free) == (0, 0)

    def test_wall_agent_edge(self):
        assert clip_move((2, 2), (1, 0), GEO.agent_cells) == (2, 2)


class TestWallStep:
    def state(self, agent, attacker, d0):
        return WallDefenseState(agent, attacker, (0, 0, d0, 0, 0))

    def test_upper_clip(self):
        s = wall_step(self.state((2, 2), (0, -1), 3), (0, 0), (0, 0), GEO)
        assert s.damage[2] == 3

    def test_lower_clip(self):
        s = wall_step(self.state((0, 1), (2, -2), 0), (0, 0), (0, 0), GEO)
        assert s.damage[2] == 0

    def test_attack_and_repair_cancel(self):
        s = wall_step(self.state((0, 1), (0, -1), 1), (0, 0), (0, 0), GEO)
        assert s.damage[2] == 1

    def test_damage_stays_in_range(self):
        rng = np.random.default_rng(0)
        s = self.state((0, 2), (0, -2), 0)
        for _ in range(2000):
            s = wall_step(s, MOVES[rng.integers(5)], MOVES[rng.integers(5)], GEO)
            assert all(0 <= d <= 3 for d in s.damage)
            assert s.agent in GEO.agent_cells and s.attacker in GEO.attacker_cells


class TestWallCost:
    @pytest.mark.parametrize("d,c", [((0,) * 5, 0), ((3,) * 5, 15), ((1, 0, 2, 0, 0), 3)])
    def test_sum(self, d, c):
        assert wall_cost(d) == c


class TestPursuitStep:
    def test_stay(self):
        s = PursuitState((0, 0), (1, 1))
        assert pursuit_step(s, (0, 0), (0, 0), free_cells(5, [])) == s

    def test_target_at_boundary(self):
        s = pursuit_step(PursuitState((0, 0), (2, 2)), (0, 0), (1, 0), free_cells(5, []))
        assert s.target == (2, 2)

    def test_agent_moves(self):
        s = pursuit_step(PursuitState((0, 0), (2, 2)), (0, 1), (0, 0), free_cells(5, []))
        assert s.agent == (0, 1)


class TestPursuitCost:
    def test_same_cell(self):
        assert pursuit_terminal_cost((1, 1), (1, 1)) == 0

    def test_adjacent(self):
        assert pursuit_terminal_cost((0, 0), (0, 1)) == 1

    def test_manhattan_without_obstacles(self):
        assert pursuit_terminal_cost((0, 0), (2, 3)) == 5

    def test_detour_around_obstacle(self):
        cells = [(c, r) for c in range(-2, 3) for r in range(-2, 3)]
        assert pursuit_terminal_cost((-1, 0), (1, 0), obstacles=[(0, -1), (0, 0), (0, 1)], cells=cells) == 6

    def test_disconnected(self):
        cells = [(c, 0) for c in range(3)]
        with pytest.raises(Disconnected):
            pursuit_terminal_cost((0, 0), (2, 0), obstacles=[(1, 0)], cells=cells)

    def test_metric_on_reduced_layout(self):
        cells = [(c, r) for c in range(-2, 3) for r in range(-2, 3)]
        free = sorted(FREE5)
        D = {(a, b): pursuit_terminal_cost(a, b, DEFAULT_OBSTACLES_5, cells) for a in free for b in free}
        for a, b, c in itertools.product(free, repeat=3):
            assert D[a, b] == D[b, a]
            assert D[a, c] <= D[a, b] + D[b, c]
        assert check_metric_axioms(pursuit_system(size=5, horizon=1).path_metric, free) == []


class TestObserve:
    def test_no_noise(self):
        assert observe((1, -2), (0, 0), GEO.attacker_cells) == (1, -2)

    def test_clipped_upward(self):
        assert observe((0, -1), (0, 1), GEO.attacker_cells) == (0, -1)

    def test_shift_into_row(self):
        assert observe((0, -2), (0, 1), GEO.attacker_cells) == (0, -1)


class TestSystems:
    def test_wall_validates(self):
        sys = wall_defense_system(half_width=1, horizon=2)
        sys.validate()
        assert set(sys.noises(0)) == set(WALL_NOISE)

    def test_pursuit_validates(self):
        sys = pursuit_system(size=5, horizon=2)
        sys.validate()
        assert sys.criterion == "terminal"
        assert all(c not in FREE5 for c in DEFAULT_OBSTACLES_5)

    def test_pursuit_no_action_at_horizon(self):
        sys = pursuit_system(size=5, horizon=2)
        assert list(sys.actions(2)) == [(0, 0)]

    def test_env_from_config(self):
        sys = env_from_config({"name": "pursuit", "size": 5, "horizon": 1})
        assert sys.horizon == 1

    def test_env_unknown(self):
        with pytest.raises(SchemaError):
            env_from_config({"name": "chess"})

    def test_pursuit_bad_layout(self):
        with pytest.raises(SchemaError):
            pursuit_system(size=5, horizon=1, obstacles=[(-1, -2), (-2, -1)])
