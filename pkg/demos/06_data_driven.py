"""Learning ranges from trajectories instead of a model.

We log trajectories of a noisy chain, tabulate which next observations and
costs followed each window of recent history, and plan on that table. With
every disturbance sequence logged and the full history as window the learned
DP matches the model. A one-step window forgets context; on this chain that
costs nothing, but on the pursuit grid it costs some initial readings.
"""

from nonstoch_ais import (
    StateSpaceModel,
    build_empirical_ranges,
    evaluate_strategy_worst_case,
    exhaustive_dataset,
    generate_dataset,
    range_prediction_loss,
    solve_dp_from_data,
    solve_memory_dp,
)
from nonstoch_ais.envs import pursuit_system

chain = StateSpaceModel(
    3, list(range(5)), [-1, 0, 1], [0, 1], [-1, 0, 1],
    dynamics=lambda t, x, u, w: min(4, max(0, x + u + w)),
    observation=lambda t, x, n: min(4, max(0, x + n)),
    cost=lambda t, x, u: abs(x - 2),
    initial_states=[0, 4],
)
truth = solve_memory_dp(chain)[0].value
data = exhaustive_dataset(chain)
print(f"model value {truth}; exhaustive log has {len(data)} trajectories")
for k in (chain.horizon + 1, 2, 1):
    model = build_empirical_ranges(data, k)
    values, strategy = solve_dp_from_data(model, chain)
    print(f"window k={k}: learned value {values.value}, true worst case of its strategy "
          f"{evaluate_strategy_worst_case(chain, strategy)}")

sampled = generate_dataset(chain, "uniform", n=40, seed=0)
full = build_empirical_ranges(data, chain.horizon + 1)
small = build_empirical_ranges(sampled, chain.horizon + 1)
print("coverage of 40 random trajectories:", sampled.metadata["coverage"]["distinct_actions"])
losses = [
    range_prediction_loss(ys, full.next_obs[t][key_u], chain.observation_metric)
    for t in range(chain.horizon)
    for key_u, ys in small.next_obs[t].items()
]
print(f"mean range prediction loss of the sampled table over {len(losses)} windows:",
      round(sum(losses) / len(losses), 3))

pursuit = pursuit_system(size=5, horizon=2)
print("pursuit readings where the one-step window loses worst-case performance:")
for y0 in pursuit.initial_observation_set():
    s = pursuit.restrict([y0])
    logged = exhaustive_dataset(s)
    lam = {k: evaluate_strategy_worst_case(s, solve_dp_from_data(build_empirical_ranges(logged, k), s)[1])
           for k in (s.horizon + 1, 1)}
    if lam[1] > lam[s.horizon + 1]:
        print(f"  target at {y0[2:]}: full history {lam[s.horizon + 1]}, one step {lam[1]}")
