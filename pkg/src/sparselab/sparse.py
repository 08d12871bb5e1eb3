"""Carleson sequences, sparse families, multilinear sparse operators.

The centrepiece is the constructive domination pipeline: a complexity-k
sparse operator (coefficients alpha_Q with dyadic-ancestor averages) is
sliced into pure-scale pieces, each piece runs a budget-driven selection
walk that emits a sparse family, and the output is compared cellwise
against the complexity-0 operators of the selected families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import (
    DomainError,
    DimensionError,
    DyadicCube,
    GridFunction,
    block_reduce,
    dilate,
    mean_pyramid,
    weak_norm,
)


class SparsityError(RuntimeError):
    """A cube whose disjoint witness would fall below half its measure."""

    def __init__(self, cube: DyadicCube, deficit: int = 0):
        super().__init__(f"witness smaller than half the cube at {cube} (deficit {deficit} cells)")
        self.cube = cube
        self.deficit = deficit


# ---------------------------------------------------------------------------
# Carleson sequences


class CarlesonSequence:
    """Nonnegative coefficients alpha_Q on dyadic cubes below a root cube."""

    def __init__(self, root: DyadicCube, coeffs):
        self.root = root
        items = dict(coeffs)
        for Q, a in items.items():
            if a < 0:
                raise DomainError(f"negative coefficient {a} at {Q}")
            if not root.contains(Q):
                raise DomainError(f"support cube {Q} lies outside the root {root}")
        self.coeffs = {Q: float(a) for Q, a in sorted(items.items()) if a != 0.0}

    @property
    def dim(self) -> int:
        return self.root.dim

    def items(self):
        return self.coeffs.items()

    def __len__(self):
        return len(self.coeffs)

    def support_levels(self) -> list[int]:
        return sorted({Q.level for Q in self.coeffs})

    def max_level(self) -> int:
        return max((Q.level for Q in self.coeffs), default=self.root.level)

    def dense_levels(self) -> dict[int, np.ndarray]:
        """Coefficients as one dense array per populated level."""
        out: dict[int, np.ndarray] = {}
        n = self.dim
        for Q, a in self.coeffs.items():
            arr = out.setdefault(Q.level, np.zeros((1 << Q.level,) * n))
            arr[Q.index if n == 2 else Q.index[0]] += a
        return out

    def scaled(self, factor: float) -> "CarlesonSequence":
        return CarlesonSequence(self.root, {Q: a * factor for Q, a in self.coeffs.items()})

    def normalized(self) -> "CarlesonSequence":
        """Rescale so the packing supremum equals one (no-op for the zero sequence)."""
        ratio, _ = packing(self)
        if ratio <= 0:
            return self
        return self.scaled(1.0 / ratio)


@dataclass(frozen=True)
class CarlesonReport:
    ok: bool
    worst_cube: DyadicCube
    ratio: float


def packing(a: CarlesonSequence) -> tuple[float, DyadicCube]:
    """sup_Q |Q|^-1 sum_{T subset Q} alpha_T |T| and the attaining cube, bottom-up."""
    n = a.dim
    dense = a.dense_levels()
    if not dense:
        return 0.0, a.root
    deepest = max(dense)
    rl = a.root.level
    # partial packing sums S(Q) accumulated from the deepest level upward
    S = None
    best, where = -1.0, a.root
    for j in range(deepest, rl - 1, -1):
        vol = 2.0 ** (-n * j)
        cur = np.zeros((1 << j,) * n)
        if S is not None:
            cur += block_reduce(S, n, j + 1, j, "sum")
        if j in dense:
            cur += dense[j] * vol
        ratios = cur / vol
        i = int(np.argmax(ratios.ravel()))
        if ratios.ravel()[i] > best:
            best = float(ratios.ravel()[i])
            if n == 1:
                where = DyadicCube(j, (i,))
            else:
                side = 1 << j
                where = DyadicCube(j, (i // side, i % side))
        S = cur
    return best, where


def verify_carleson(a: CarlesonSequence, tol: float = 1e-12) -> CarlesonReport:
    """True iff the packing normalization sup <= 1 holds (within tol)."""
    ratio, worst = packing(a)
    return CarlesonReport(ratio <= 1.0 + tol, worst, ratio)


def beta_sequence(a: CarlesonSequence, k: int) -> CarlesonSequence:
    """Push coefficients k generations up: beta_Q = 2^(-nk) sum_{R in D_k(Q)} alpha_R."""
    if k < 0:
        raise DomainError("k must be nonnegative")
    if k == 0:
        return a
    n = a.dim
    factor = 2.0 ** (-n * k)
    out: dict[DyadicCube, float] = {}
    for R, alpha in a.items():
        if R.level - k < a.root.level:
            continue
        Q = R.ancestor(k)
        out[Q] = out.get(Q, 0.0) + factor * alpha
    return CarlesonSequence(a.root, out)


# ---------------------------------------------------------------------------
# Sparse families


class SparseFamily:
    """Cubes with pairwise-disjoint witness cell sets E_Q, |Q| <= 2|E_Q|."""

    def __init__(self, dim: int, level: int, witness: dict[DyadicCube, np.ndarray]):
        self.dim = dim
        self.level = level
        self.witness = {Q: np.asarray(w, dtype=np.int64) for Q, w in sorted(witness.items())}
        self.cubes = tuple(self.witness)

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def to_records(self, omegas: dict | None = None) -> list[dict]:
        recs = []
        for Q in self.cubes:
            rec = {
                "cube": {"level": Q.level, "index": list(Q.index)},
                "E": _runs(self.witness[Q]),
            }
            if omegas is not None:
                rec["omega"] = omegas.get(Q, 0.0)
            recs.append(rec)
        return recs


def _runs(flat: np.ndarray) -> list[list[int]]:
    """Sorted flat cell indices as [start, stop) runs."""
    if flat.size == 0:
        return []
    flat = np.sort(flat)
    breaks = np.nonzero(np.diff(flat) != 1)[0]
    starts = np.concatenate(([0], breaks + 1))
    stops = np.concatenate((breaks, [flat.size - 1]))
    return [[int(flat[s]), int(flat[e]) + 1] for s, e in zip(starts, stops)]


def verify_sparse(S: SparseFamily) -> bool:
    """Exact cell-count check of disjointness, containment and the half bound."""
    seen: set[int] = set()
    for Q in S.cubes:
        E = S.witness[Q]
        cells = set(int(c) for c in Q.flat_cells(S.level))
        idx = set(int(c) for c in E)
        if len(idx) != E.size:
            return False
        if not idx <= cells:
            return False
        if idx & seen:
            return False
        if Q.cell_count(S.level) > 2 * len(idx):
            return False
        seen |= idx
    return True


def greedy_witness(cubes, dim: int, level: int) -> SparseFamily:
    """Assign E_Q = Q minus all family cubes strictly inside Q, deepest first.

    Raises SparsityError naming the first cube whose leftover cells fall
    below half its measure.
    """
    cubes = sorted(set(cubes), key=lambda Q: (-Q.level, Q.index))
    total = (1 << level) ** dim
    owner = np.zeros(total, dtype=bool)
    witness: dict[DyadicCube, np.ndarray] = {}
    for Q in cubes:
        flat = Q.flat_cells(level)
        free = flat[~owner[flat]]
        if 2 * free.size < flat.size:
            raise SparsityError(Q, deficit=int(math.ceil(flat.size / 2)) - free.size)
        owner[free] = True
        witness[Q] = free
    return SparseFamily(dim, level, witness)


# ---------------------------------------------------------------------------
# Sparse operator evaluation


def _as_items(obj):
    if isinstance(obj, CarlesonSequence):
        return obj.items(), obj.root.level, obj.dim
    if isinstance(obj, SparseFamily):
        return [(Q, 1.0) for Q in obj.cubes], 0, obj.dim
    raise DimensionError(f"cannot evaluate a sparse operator from {type(obj).__name__}")


def _check_tuple(fs) -> tuple[int, int]:
    if not fs:
        raise DomainError("need at least one input function")
    n, L = fs[0].dim, fs[0].level
    for f in fs:
        if f.dim != n or f.level != L:
            raise DimensionError("input tuple mixes grids")
    return n, L


def eval_sparse_A(obj, k: int, p0: float, fs) -> GridFunction:
    """Ancestor-type sparse operator sum_Q alpha_Q prod_i <f_i>_{Q^(k),p0} chi_Q.

    Cubes whose k-th ancestor is not contained in the root are skipped.
    """
    if k < 0:
        raise DomainError("complexity k must be nonnegative")
    if p0 < 1:
        raise DomainError("p0 must be >= 1")
    items, rootlvl, dim = _as_items(obj)
    n, L = _check_tuple(fs)
    if dim != n:
        raise DimensionError("operator dimension does not match functions")
    pyramids = [mean_pyramid(np.abs(f.values) ** p0, n, L) for f in fs]
    out = np.zeros((1 << L,) * n)
    inv = 1.0 / p0
    for Q, alpha in items:
        if Q.level - k < rootlvl:
            continue
        A = Q.ancestor(k)
        coef = alpha
        for pyr in pyramids:
            block = pyr[A.level]
            v = block[A.index] if n == 2 else block[A.index[0]]
            coef *= float(v) ** inv
        out[Q.cell_slices(L)] += coef
    return GridFunction(n, L, out)


def eval_sparse_T(obj, k: int, p0: float, fs) -> GridFunction:
    """Dilate-type sparse operator sum_Q alpha_Q prod_i <f_i>_{2^k Q,p0} chi_Q."""
    if k < 0:
        raise DomainError("complexity k must be nonnegative")
    if p0 < 1:
        raise DomainError("p0 must be >= 1")
    items, _, dim = _as_items(obj)
    n, L = _check_tuple(fs)
    if dim != n:
        raise DimensionError("operator dimension does not match functions")
    powers = [np.abs(f.values) ** p0 for f in fs]
    out = np.zeros((1 << L,) * n)
    inv = 1.0 / p0
    for Q, alpha in items:
        mask = dilate(Q, k, L)
        coef = alpha
        for pw in powers:
            coef *= float(pw[mask].mean()) ** inv
        out[Q.cell_slices(L)] += coef
    return GridFunction(n, L, out)


# ---------------------------------------------------------------------------
# Scale slicing


@dataclass(frozen=True)
class SlicePiece:
    ell: int
    root: DyadicCube
    seq: CarlesonSequence


def slice_scales(a: CarlesonSequence, k: int) -> list[SlicePiece]:
    """Split by scale residue: piece (ell, P) keeps the cubes of P whose depth
    below the root is congruent to ell mod k and at least k.

    The pieces reassemble the complexity-k operator exactly, cube by cube.
    """
    if k < 1:
        raise DomainError("slicing needs k >= 1")
    rl = a.root.level
    buckets: dict[tuple[int, DyadicCube], dict[DyadicCube, float]] = {}
    for Q, alpha in a.items():
        rel = Q.level - rl
        if rel < k:
            continue
        ell = rel % k
        P = Q.ancestor(Q.level - (rl + ell))
        buckets.setdefault((ell, P), {})[Q] = alpha
    pieces = [
        SlicePiece(ell, P, CarlesonSequence(P, coeffs))
        for (ell, P), coeffs in sorted(buckets.items())
    ]
    return [p for p in pieces if len(p.seq)]


# ---------------------------------------------------------------------------
# Selection of a dominating sparse family


@dataclass
class SelectionResult:
    family: SparseFamily
    cstar: float
    w_hat: float
    pointwise_constant: float
    covered: bool
    selected: tuple[DyadicCube, ...] = ()

    def report(self) -> dict:
        return {
            "selected": len(self.selected),
            "cstar": self.cstar,
            "w_hat": self.w_hat,
            "pointwise_constant": self.pointwise_constant,
            "covered": self.covered,
        }


def measure_weak_norm(a: CarlesonSequence, k: int, p0: float, m: int,
                      trials: int = 8, seed: int = 0) -> float:
    """Empirical lower estimate of the L^p0 x ... x L^p0 -> L^(p0/m,inf) norm.

    Runs seeded random tuples normalized in L^p0 and keeps the running max;
    the estimate never decreases as trials grow.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    n = a.dim
    L_res = max(a.max_level(), a.root.level)
    rng = np.random.default_rng(seed)
    best = 0.0
    shape = (1 << L_res,) * n
    for _ in range(trials):
        fs = []
        ok = True
        for _ in range(m):
            vals = rng.uniform(0.0, 1.0, shape)
            nrm = (vals**p0).mean() ** (1.0 / p0)
            if nrm == 0:
                ok = False
                break
            fs.append(GridFunction(n, L_res, vals / nrm))
        if not ok:
            continue
        out = eval_sparse_A(a, k, p0, fs)
        best = max(best, weak_norm(out, p0 / m))
    return best


def _dense_alpha(a: CarlesonSequence, L: int) -> dict[int, np.ndarray]:
    dense = a.dense_levels()
    return {j: arr for j, arr in dense.items() if j <= L}


def _lookup(arr: np.ndarray, idx: tuple[int, ...], n: int) -> float:
    return float(arr[idx] if n == 2 else arr[idx[0]])


def select_sparse(a: CarlesonSequence, k: int, p0: float, fs,
                  cstar: float | None = None, seed: int = 0,
                  wnorm_trials: int = 8) -> SelectionResult:
    """Budget-driven selection of a sparse family dominating the sliced operator.

    Walks the k-generation tree below the root carrying a budget Delta.  A
    cube P is selected when Delta_P < gamma_P * prod_i <f_i>_{P,p0} with
    gamma_P the largest coefficient k generations below P; selection tops
    the budget up by cstar times the local product, and every step down
    pays the child's own coefficient times the product.  The default cstar
    is 2^(2(m+1)) times twice the measured weak-norm estimate (floored at
    one, which the single-generation averaging operator always attains).
    """
    n, L = _check_tuple(fs)
    if a.dim != n:
        raise DimensionError("sequence dimension does not match functions")
    for f in fs:
        if np.any(f.values < 0):
            raise DomainError("selection needs nonnegative input functions")
    m = len(fs)
    rl = a.root.level
    if k >= 1:
        for Q in a.coeffs:
            rel = Q.level - rl
            if rel < k or rel % k != 0:
                raise DomainError(
                    f"complexity-{k} selection needs support on levels root+j*k; found {Q}"
                )
    if cstar is None:
        w_hat = 2.0 * max(1.0, measure_weak_norm(a, k, p0, m, wnorm_trials, seed))
        cstar = 2.0 ** (2 * (m + 1)) * w_hat
    else:
        w_hat = float("nan")
    if cstar <= 0:
        raise DomainError("cstar must be positive")

    step = k if k >= 1 else 1
    alpha = _dense_alpha(a, L)
    pyramids = [mean_pyramid(f.values**p0, n, L) for f in fs]
    inv = 1.0 / p0

    # gamma per tested level: block max of the coefficients k levels deeper
    gamma: dict[int, np.ndarray] = {}
    # support-at-or-below flags drive pruning of the walk
    sab: dict[int, np.ndarray] = {}
    prev = None
    for j in range(L, rl - 1, -1):
        cur = np.zeros((1 << j,) * n, dtype=bool)
        if j in alpha:
            cur |= alpha[j] > 0
        if prev is not None:
            cur |= block_reduce(prev, n, j + 1, j, "any")
        sab[j] = cur
        prev = cur

    def gamma_at(lvl: int) -> np.ndarray | None:
        if lvl + k > L and k >= 1:
            return None
        src_lvl = lvl + k
        if src_lvl not in alpha:
            return None
        if lvl not in gamma:
            gamma[lvl] = block_reduce(alpha[src_lvl], n, src_lvl, lvl, "max")
        return gamma[lvl]

    selected: list[DyadicCube] = []
    stack: list[tuple[DyadicCube, float]] = [(a.root, 0.0)]
    while stack:
        P, delta = stack.pop()
        prod = 1.0
        for pyr in pyramids:
            prod *= _lookup(pyr[P.level], P.index, n) ** inv
        g_arr = gamma_at(P.level)
        g = _lookup(g_arr, P.index, n) if g_arr is not None else 0.0
        base = delta
        if delta - prod * g < 0.0:
            selected.append(P)
            base = delta + cstar * prod
        nxt = P.level + step
        if nxt <= L:
            a_arr = alpha.get(nxt)
            s_arr = sab[nxt]
            # complexity 0 consumes the just-tested coefficient on the way
            # down; complexity k >= 1 pays each arrival cube's own one
            ap_own = g if k == 0 else 0.0
            for C in P.descendants(step):
                if not _lookup(s_arr, C.index, n):
                    continue
                if k >= 1:
                    ac = _lookup(a_arr, C.index, n) if a_arr is not None else 0.0
                else:
                    ac = ap_own
                stack.append((C, base - ac * prod))

    family = greedy_witness(selected, n, L)
    lhs = eval_sparse_A(a, k, p0, fs).values
    rhs = eval_sparse_A(family, 0, p0, fs).values
    pos = rhs > 0
    pointwise = float(np.max(lhs[pos] / rhs[pos])) if pos.any() else 0.0
    covered = bool(np.all(lhs[~pos] <= 1e-12 * max(1.0, float(np.max(lhs, initial=0.0)))))
    return SelectionResult(family, float(cstar), w_hat, pointwise, covered,
                           tuple(sorted(selected)))


@dataclass
class DominationResult:
    pieces: list[SlicePiece]
    selections: list[SelectionResult]
    cell_constant: float
    covered: bool

    def families(self) -> list[SparseFamily]:
        return [s.family for s in self.selections]

    def report(self) -> dict:
        return {
            "pieces": len(self.pieces),
            "cell_constant": self.cell_constant,
            "covered": self.covered,
            "selections": [s.report() for s in self.selections],
        }


def dominate(a: CarlesonSequence, k: int, p0: float, fs,
             cstar: float | None = None, seed: int = 0) -> DominationResult:
    """Full pipeline: slice by scale residue, select per piece, compare cellwise.

    The reported cell constant is the supremum over cells of the original
    complexity-k operator divided by the sum of the selected families'
    complexity-0 operators.
    """
    if k == 0:
        pieces = [SlicePiece(0, a.root, a)]
    else:
        pieces = slice_scales(a, k)
    selections = [
        select_sparse(p.seq, k, p0, fs, cstar=cstar, seed=seed + 101 * i)
        for i, p in enumerate(pieces)
    ]
    n, L = _check_tuple(fs)
    lhs = eval_sparse_A(a, k, p0, fs).values
    rhs = np.zeros_like(lhs)
    for sel in selections:
        rhs += eval_sparse_A(sel.family, 0, p0, fs).values
    pos = rhs > 0
    cell_c = float(np.max(lhs[pos] / rhs[pos])) if pos.any() else 0.0
    covered = bool(np.all(lhs[~pos] <= 1e-12 * max(1.0, float(np.max(lhs, initial=0.0)))))
    return DominationResult(pieces, selections, cell_c, covered)


# ---------------------------------------------------------------------------
# Carleson embedding


@dataclass(frozen=True)
class EmbeddingReport:
    lhs: float
    rhs: float
    holds: bool


def carleson_embedding_check(a: CarlesonSequence, q: float, ps, fs) -> EmbeddingReport:
    """Check (sum_Q alpha_Q (prod <f_i>_Q)^q |Q|)^(1/q) <= prod p_i' ||f_i||_{p_i}."""
    from .weights import conjugate

    n, L = _check_tuple(fs)
    if a.dim != n:
        raise DimensionError("sequence dimension does not match functions")
    ps = tuple(float(p) for p in ps)
    if len(ps) != len(fs):
        raise DomainError("need one exponent per function")
    if abs(1.0 / q - sum(1.0 / p for p in ps)) > 1e-12:
        raise DomainError("exponents must satisfy 1/q = sum 1/p_i")
    for f in fs:
        if np.any(f.values < 0):
            raise DomainError("embedding check needs nonnegative functions")
    pyramids = [mean_pyramid(f.values, n, L) for f in fs]
    total = 0.0
    for Q, alpha in a.items():
        prod = 1.0
        for pyr in pyramids:
            prod *= _lookup(pyr[Q.level], Q.index, n)
        total += alpha * prod**q * Q.volume
    lhs = total ** (1.0 / q)
    rhs = 1.0
    for f, p in zip(fs, ps):
        rhs *= conjugate(p) * float((f.values**p).mean() ** (1.0 / p))
    return EmbeddingReport(lhs, rhs, lhs <= rhs * (1.0 + 1e-9))


# ---------------------------------------------------------------------------
# Calderon-Zygmund decomposition


@dataclass
class CZDecomposition:
    base: DyadicCube
    lam: float
    p0: float
    m: int
    good: list[GridFunction]
    bad: list[GridFunction]
    stopping: list[list[DyadicCube]]
    short_circuit: list[int]

    def verify(self, fs, tol: float = 1e-9) -> bool:
        """Recheck every structural invariant against the original tuple."""
        if self.short_circuit:
            return True
        thr = self.lam ** (1.0 / self.m)
        n, L = _check_tuple(fs)
        for i, f in enumerate(fs):
            power = np.abs(f.values) ** self.p0
            b, g = self.bad[i].values, self.good[i].values
            if not np.allclose(power, g + b, rtol=0, atol=tol):
                return False
            meas = 0.0
            for R in self.stopping[i]:
                block = b[R.cell_slices(L)]
                if abs(block.mean()) > tol:
                    return False
                avg = float(power[R.cell_slices(L)].mean()) ** (1.0 / self.p0)
                parent = float(power[R.ancestor(1).cell_slices(L)].mean()) ** (1.0 / self.p0)
                if not (avg > thr * (1 - 1e-12) and parent <= thr * (1 + 1e-12)):
                    return False
                meas += R.volume
            outside = np.ones_like(b, dtype=bool)
            for R in self.stopping[i]:
                outside[R.cell_slices(L)] = False
            if np.any(np.abs(b[outside]) > tol):
                return False
            # the height bound holds inside the base cube, where every cell
            # sits below a non-stopping ancestor
            bound = 2.0 ** (n * self.p0) * self.lam ** (self.p0 / self.m)
            if np.any(np.abs(g[self.base.cell_slices(L)]) > bound * (1 + 1e-12)):
                return False
            l1 = float(np.abs(g).sum()) * f.cell_volume
            lp = float(power.sum()) * f.cell_volume
            if l1 > lp * (1 + 1e-12) + tol:
                return False
            norm_bound = self.lam ** (-self.p0 / self.m) * lp
            if meas > norm_bound * (1 + 1e-12) + tol:
                return False
        return True


def cz_decompose(fs, lam: float, p0: float, m: int, P: DyadicCube) -> CZDecomposition:
    """Stopping-time decomposition of (f_1^p0, ..., f_m^p0) at height lam.

    Stopping cubes are the maximal strict dyadic subcubes R of P with
    <f_i>_{R,p0} above lam^(1/m); each bad part has exact zero mean on its
    cube and the good part stays bounded by the inflated parent average.
    When some <f_i>_{P,p0} already exceeds the height the index is reported
    in short_circuit and no decomposition is attempted for it.
    """
    if lam <= 0:
        raise DomainError(f"level lambda must be positive, got {lam}")
    if p0 < 1:
        raise DomainError("p0 must be >= 1")
    if m != len(fs):
        raise DimensionError(f"m = {m} does not match {len(fs)} functions")
    n, L = _check_tuple(fs)
    thr_pow = lam ** (p0 / m)  # compare p0-th powers of averages
    good, bad, stopping, short = [], [], [], []
    for i, f in enumerate(fs):
        power = np.abs(f.values) ** p0
        pyr = mean_pyramid(power, n, L)
        if _lookup(pyr[P.level], P.index, n) > thr_pow:
            short.append(i)
            good.append(GridFunction(n, L, power))
            bad.append(GridFunction.constant(n, L, 0.0))
            stopping.append([])
            continue
        cubes: list[DyadicCube] = []
        frontier = [P]
        while frontier:
            nxt = []
            for Q in frontier:
                if Q.level == L:
                    continue
                for C in Q.children():
                    if _lookup(pyr[C.level], C.index, n) > thr_pow:
                        cubes.append(C)
                    else:
                        nxt.append(C)
            frontier = nxt
        b = np.zeros_like(power)
        for R in cubes:
            sl = R.cell_slices(L)
            b[sl] = power[sl] - power[sl].mean()
        good.append(GridFunction(n, L, power - b))
        bad.append(GridFunction(n, L, b))
        stopping.append(cubes)
    return CZDecomposition(P, lam, p0, m, good, bad, stopping, short)


# ---------------------------------------------------------------------------
# Dyadic maximal functions


def dyadic_maximal(f: GridFunction, p0: float = 1.0, sigma: GridFunction | None = None,
                   maxlevel: int | None = None) -> GridFunction:
    """Cellwise sup over dyadic cubes of local averages.

    Plain mode returns sup_Q <f>_{Q,p0}; with sigma it returns the
    sigma-weighted maximal function sup_Q sigma(Q)^-1 int_Q |f| sigma.
    """
    n, L = f.dim, f.level
    maxlevel = L if maxlevel is None else min(maxlevel, L)
    out = np.zeros((1 << L,) * n)
    if sigma is not None:
        if np.any(sigma.values <= 0):
            raise DomainError("sigma must be strictly positive")
        num = np.abs(f.values) * sigma.values
        den = sigma.values
        for j in range(maxlevel + 1):
            ratio = block_reduce(num, n, L, j, "mean") / block_reduce(den, n, L, j, "mean")
            out = np.maximum(out, _broadcast(ratio, n, L, j))
        return GridFunction(n, L, out)
    if p0 < 1:
        raise DomainError("p0 must be >= 1")
    power = np.abs(f.values) ** p0
    for j in range(maxlevel + 1):
        avg = block_reduce(power, n, L, j, "mean")
        out = np.maximum(out, _broadcast(avg, n, L, j))
    return GridFunction(n, L, out ** (1.0 / p0))


def _broadcast(arr: np.ndarray, n: int, L: int, j: int) -> np.ndarray:
    s = 1 << (L - j)
    if n == 1:
        return np.repeat(arr, s)
    return np.repeat(np.repeat(arr, s, axis=0), s, axis=1)
