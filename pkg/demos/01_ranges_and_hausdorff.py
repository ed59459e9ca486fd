"""Uncertain variables as finite sets, and how far apart two sets are.

We build a small joint range of (position, sensor reading) pairs, condition
on a reading, and measure set-prediction error with the Hausdorff distance.
"""

from nonstoch_ais import (
    FiniteRelation,
    absolute_metric,
    average_hausdorff,
    conditional_range,
    hausdorff,
    l_inverse_constant,
    lipschitz_constant,
)

m = absolute_metric()

# A coarse sensor reports position // 2.
positions = range(6)
sensor = {x: x // 2 for x in positions}
joint = FiniteRelation.from_map(sensor)
print("joint range:", sorted(joint.pairs))
for y in sorted(joint.y_range):
    print(f"  positions consistent with reading {y}:", list(conditional_range(joint, y)))

a, b = [0, 1], [3, 4, 5]
print("H(A, B) =", hausdorff(a, b, m), " average H =", average_hausdorff(a, b, m))

# How fast preimages move when the reading moves, and how fast the reading moves with position.
print("L-inverse constant of the sensor:", l_inverse_constant(sensor, m, m))
print("Lipschitz constant of the sensor:", lipschitz_constant(sensor, m, m))
