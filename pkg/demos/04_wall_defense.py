"""Wall defense: an approximate information state that keeps only coarse attacker cells.

The defender patrols a wall strip while an attacker damages segments. The
exact filter tracks every possible attacker cell; the compressed abstraction
tracks a coarse cell instead. Both are solved per initial reading.
"""

from nonstoch_ais.dp import evaluate_strategy_worst_case, solve_abstraction_dp, ConditionalRangeAbstraction
from nonstoch_ais.envs import wall_ais, wall_defense_system, wall_initial_observations

sys = wall_defense_system(half_width=1, horizon=3)
print(f"{len(sys.states(0))} initial states, {len(sys.initial_observation_set())} initial readings")
for y0 in list(sys.initial_observation_set())[:4]:
    s = sys.restrict([y0])
    v_is, _ = solve_abstraction_dp(s, ConditionalRangeAbstraction(s))
    ais = wall_ais(s)
    v_ais, strat = solve_abstraction_dp(s, ais)
    lam = evaluate_strategy_worst_case(s, strat, via="base")
    print(f"reading {y0}: IS value {v_is.value} ({sum(v_is.counts())} ranges), "
          f"AIS strategy worst case {lam} ({sum(v_ais.counts())} cells)")
print("attacker readings available:", wall_initial_observations(sys)[:5], "...")
