"""Tour of the dyadic grid layer: cubes, averages, rearrangements, weak norms.

Run:  python3 demos/01_grids_and_rearrangements.py
"""

import numpy as np

from sparselab import DyadicCube, GridFunction, average, dilate, rearrangement, weak_norm, weighted_norm
from sparselab.grid import root_cube

rng = np.random.default_rng(0)

# A grid function is piecewise constant on 2^L cells of the periodic unit
# interval.  Averages over dyadic cubes are exact finite sums.
L = 6
f = GridFunction(1, L, rng.uniform(0.0, 1.0, 1 << L))
root = root_cube(1)
half = DyadicCube(1, (0,))

print("local averages <f>_{Q,p0} grow with p0 (power-mean monotonicity):")
for p0 in (1.0, 1.5, 2.0, 4.0):
    print(f"  p0 = {p0}:  root {average(f, root, p0):.6f}   [0,1/2) {average(f, half, p0):.6f}")

# Dilates wrap around the torus and saturate once the side reaches 1.
Q = DyadicCube(2, (0,))
for k in (0, 1, 2):
    cells = int(dilate(Q, k, L).sum())
    print(f"2^{k} Q for Q = [0,1/4): {cells} of {1 << L} cells")

# The decreasing rearrangement sorts mass by height; weak norms read off
# its breakpoints.
g = GridFunction(1, 2, [4.0, 2.0, 1.0, 0.0])
print("\nrearrangement of (4,2,1,0):", [rearrangement(g, t) for t in (0.25, 0.3, 0.6, 1.0)])
print("weak L^2 quasinorm:", weak_norm(g, 2.0), " (attained at t = 1/4: sqrt(1/4)*4 = 2)")
print("strong L^2 norm   :", weighted_norm(g, 2.0))
