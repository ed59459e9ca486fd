"""Pursuit on a 5x5 grid with obstacles, scored only at the final time.

The agent sees its own cell exactly and the target's cell up to one noisy
move. The terminal-criterion DP gives the smallest guaranteed final path
distance; quantizing the target coordinates trades it for a smaller table.
"""

from nonstoch_ais import bound_report, solve_terminal_dp
from nonstoch_ais.envs import pursuit_system, pursuit_target_quantizer, pursuit_initial_observations
from nonstoch_ais.quantize import quantized_abstraction

sys = pursuit_system(size=5, horizon=2)
print("obstacles:", sys.obstacles, " agent starts at", sys.agent_start)
values, strategy = solve_terminal_dp(sys)
print("guaranteed final distance over all target readings:", values.value)

for y in pursuit_initial_observations(sys)[:3]:
    s = pursuit_system(size=5, horizon=2, initial_observation=y)
    print(f"  target read at {y}: guaranteed distance {solve_terminal_dp(s)[0].value}")

grids = pursuit_target_quantizer(sys, 1.0)
rep = bound_report(sys, grids, abstraction=quantized_abstraction(sys, grids))
print(f"gamma=1 target quantization: Vhat0={rep.approx_value}, worst case {rep.approx_worst_case}, "
      f"alpha0={rep.alpha[0]:g}, {rep.realizations_exact} -> {rep.realizations_approx} realizations")
