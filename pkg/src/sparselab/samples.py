"""Seeded random inputs for the verification campaigns.

Function samples are i.i.d. uniform on [0,1] per cell; weight samples are
log-uniform on [2^-4, 2^4].  Every consumer records the seed it used, so
any report can be replayed bit for bit.
"""

from __future__ import annotations

import numpy as np

from .grid import DyadicCube, GridFunction, root_cube
from .sparse import CarlesonSequence, SparseFamily, greedy_witness


def rng_from(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_function(rng, n: int, L: int) -> GridFunction:
    return GridFunction(n, L, rng.uniform(0.0, 1.0, (1 << L) ** n))


def random_signed_function(rng, n: int, L: int) -> GridFunction:
    return GridFunction(n, L, rng.normal(0.0, 1.0, (1 << L) ** n))


def random_weight(rng, n: int, L: int) -> GridFunction:
    return GridFunction(n, L, np.exp2(rng.uniform(-4.0, 4.0, (1 << L) ** n)))


def random_carleson(rng, n: int, L: int, root: DyadicCube | None = None,
                    k_grid: int = 0, density: float = 0.2) -> CarlesonSequence:
    """Random normalized Carleson sequence below ``root``.

    With k_grid >= 1 the support is restricted to levels root + j*k_grid,
    j >= 1, matching the ingestion contract of complexity-k selection.
    """
    root = root or root_cube(n)
    rl = root.level
    if k_grid >= 1:
        levels = list(range(rl + k_grid, L + 1, k_grid))
    else:
        levels = list(range(rl, L + 1))
    coeffs: dict[DyadicCube, float] = {}
    for j in levels:
        side = 1 << (j - rl)
        if n == 1:
            (r0,) = root.index
            picks = np.nonzero(rng.random(side) < density)[0]
            for i in picks:
                coeffs[DyadicCube(j, (r0 * side + int(i),))] = float(rng.uniform(0.05, 1.0))
        else:
            r0, r1 = root.index
            mask = rng.random((side, side)) < density
            for i, kk in zip(*np.nonzero(mask)):
                cube = DyadicCube(j, (r0 * side + int(i), r1 * side + int(kk)))
                coeffs[cube] = float(rng.uniform(0.05, 1.0))
    if not coeffs and levels:
        j = levels[-1]
        side = 1 << (j - rl)
        idx = tuple(r * side for r in root.index)
        coeffs[DyadicCube(j, idx)] = 1.0
    return CarlesonSequence(root, coeffs).normalized()


def random_sparse_family(rng, n: int, L: int, starts: int = 3) -> SparseFamily:
    """Random sparse family built from branch-limited descents.

    Each descent selects its cube and recurses into at most half of the
    children, so the union of selected strict descendants of any selected
    cube covers at most half of it and the greedy witness always succeeds.
    """
    chosen: set[DyadicCube] = set()

    def descend(Q: DyadicCube):
        if rng.random() < 0.85:
            chosen.add(Q)
        if Q.level >= L or rng.random() < 0.25:
            return
        kids = list(Q.children())
        take = 1 if n == 1 else int(rng.integers(1, 3))
        picks = rng.choice(len(kids), size=take, replace=False)
        for i in picks:
            descend(kids[int(i)])

    lvl = int(rng.integers(1, max(2, L - 2)))
    side = 1 << lvl
    count = min(starts, side**n)
    # distinct start cubes at a common level keep the branch budgets disjoint
    picks = rng.choice(side**n, size=count, replace=False)
    for flat in picks:
        if n == 1:
            Q = DyadicCube(lvl, (int(flat),))
        else:
            Q = DyadicCube(lvl, (int(flat) // side, int(flat) % side))
        descend(Q)
    if not chosen:
        chosen.add(root_cube(n))
    return greedy_witness(chosen, n, L)
