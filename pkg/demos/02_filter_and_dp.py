"""Worst-case control with the conditional-range filter.

A cart on positions 0..4 is pushed by an unknown disturbance and watched by
a sensor that only reports whether it sits left of, at, or right of the
middle. The memory DP and the filter-based DP agree, but the filter needs far
fewer table entries.
"""

from nonstoch_ais import (
    StateSpaceModel,
    evaluate_strategy_worst_case,
    range_filter_init,
    range_filter_update,
    simulate_rollouts,
    solve_information_state_dp,
    solve_memory_dp,
)

cart = StateSpaceModel(
    3, list(range(5)), [-1, 0, 1], [-1, 0, 1], [0],
    dynamics=lambda t, x, u, w: min(4, max(0, x + u + w)),
    observation=lambda t, x, n: (x > 2) - (x < 2),
    cost=lambda t, x, u: abs(x - 2) + abs(u),
)

mem_values, _ = solve_memory_dp(cart)
is_values, strategy = solve_information_state_dp(cart)
print("memory DP value:", mem_values.value, "over", sum(mem_values.counts()), "memories")
print("filter DP value:", is_values.value, "over", sum(is_values.counts()), "ranges")
print("evaluated worst case of the filter strategy:", evaluate_strategy_worst_case(cart, strategy))

# One step of the filter by hand: start left of centre, push right, read "centre".
pi = range_filter_init(cart, -1)
print("after reading 'left':", list(pi.support))
print("after pushing right and reading 'centre':", list(range_filter_update(cart, pi, 1, 0).support))

runs = simulate_rollouts(cart, strategy, n=200, seed=1)
print(f"200 random rollouts: max cost {runs.max_cost} never exceeds the guarantee {is_values.value}")
