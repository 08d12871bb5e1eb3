"""Dyadic geometry on the periodic unit cube [0,1)^n and discretized functions.

Everything in this package works on a single canonical dyadic grid.  A
GridFunction is piecewise constant on the 2^(n*L) lattice cells of a fixed
resolution level L, so integrals over dyadic cubes are exact finite sums and
the inequalities checked elsewhere hold up to floating rounding only.
Dilates of cubes wrap around periodically and saturate to the full torus
once their side length reaches 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

SUPPORTED_DIMS = (1, 2)
MAX_LEVEL = {1: 12, 2: 8}


class DomainError(ValueError):
    """A parameter lies outside the admissible range of an operation."""


class DimensionError(ValueError):
    """Mismatched dimensions or resolutions."""


class FormatError(ValueError):
    """Malformed input file; the message carries line/column information."""


def _check_dim(n: int) -> None:
    if n not in SUPPORTED_DIMS:
        raise DimensionError(f"dimension {n} not supported (use n in {SUPPORTED_DIMS})")


@dataclass(frozen=True, order=True)
class DyadicCube:
    """The cube 2^(-level) * (index + [0,1)^n) of the canonical dyadic grid."""

    level: int
    index: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise DomainError(f"cube level must be nonnegative, got {self.level}")
        _check_dim(len(self.index))
        top = 1 << self.level
        for i in self.index:
            if not 0 <= i < top:
                raise DomainError(f"index {self.index} out of range at level {self.level}")

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def volume(self) -> float:
        return 2.0 ** (-self.level * self.dim)

    def ancestor(self, k: int) -> "DyadicCube":
        """The unique cube of level (level - k) containing this cube."""
        if k < 0:
            raise DomainError("ancestor order must be nonnegative")
        if k > self.level:
            raise DomainError(f"cube of level {self.level} has no ancestor {k} levels up")
        return DyadicCube(self.level - k, tuple(i >> k for i in self.index))

    def children(self) -> Iterator["DyadicCube"]:
        lvl = self.level + 1
        if self.dim == 1:
            (i,) = self.index
            for a in range(2):
                yield DyadicCube(lvl, (2 * i + a,))
        else:
            i, j = self.index
            for a in range(2):
                for b in range(2):
                    yield DyadicCube(lvl, (2 * i + a, 2 * j + b))

    def descendants(self, k: int) -> Iterator["DyadicCube"]:
        """All cubes exactly k levels below this one, in index order."""
        lvl = self.level + k
        span = 1 << k
        if self.dim == 1:
            (i,) = self.index
            for a in range(span):
                yield DyadicCube(lvl, (i * span + a,))
        else:
            i, j = self.index
            for a in range(span):
                for b in range(span):
                    yield DyadicCube(lvl, (i * span + a, j * span + b))

    def contains(self, other: "DyadicCube") -> bool:
        if other.dim != self.dim or other.level < self.level:
            return False
        k = other.level - self.level
        return tuple(i >> k for i in other.index) == self.index

    def cell_slices(self, L: int) -> tuple[slice, ...]:
        """Slices selecting this cube's cells in a level-L value array."""
        if L < self.level:
            raise DimensionError(f"resolution {L} too coarse for level-{self.level} cube")
        s = 1 << (L - self.level)
        return tuple(slice(i * s, (i + 1) * s) for i in self.index)

    def cell_count(self, L: int) -> int:
        return (1 << (L - self.level)) ** self.dim

    def flat_cells(self, L: int) -> np.ndarray:
        """Flat (row-major) indices of this cube's cells at resolution L."""
        s = 1 << (L - self.level)
        if self.dim == 1:
            (i,) = self.index
            return np.arange(i * s, (i + 1) * s, dtype=np.int64)
        i, j = self.index
        rows = np.arange(i * s, (i + 1) * s, dtype=np.int64)
        cols = np.arange(j * s, (j + 1) * s, dtype=np.int64)
        return (rows[:, None] * (1 << L) + cols[None, :]).ravel()

    def center(self) -> tuple[float, ...]:
        return tuple((i + 0.5) * self.side for i in self.index)


def root_cube(n: int) -> DyadicCube:
    _check_dim(n)
    return DyadicCube(0, (0,) * n)


def cubes_at_level(n: int, j: int) -> Iterator[DyadicCube]:
    _check_dim(n)
    top = 1 << j
    if n == 1:
        for i in range(top):
            yield DyadicCube(j, (i,))
    else:
        for i in range(top):
            for k in range(top):
                yield DyadicCube(j, (i, k))


def all_cubes(n: int, maxlevel: int) -> Iterator[DyadicCube]:
    for j in range(maxlevel + 1):
        yield from cubes_at_level(n, j)


class GridFunction:
    """Real function that is constant on each lattice cell of resolution 2^-L.

    Values are stored row-major; the array is frozen after construction so
    instances can be shared freely across threads.
    """

    __slots__ = ("dim", "level", "values")

    def __init__(self, dim: int, level: int, values):
        _check_dim(dim)
        if not 0 <= level <= MAX_LEVEL[dim]:
            raise DomainError(f"resolution level {level} out of range for n={dim}")
        arr = np.asarray(values, dtype=float)
        shape = (1 << level,) * dim
        if arr.size != (1 << level) ** dim:
            raise DimensionError(
                f"expected {(1 << level) ** dim} cell values for n={dim}, L={level}, got {arr.size}"
            )
        arr = arr.reshape(shape).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.dim * self.level)

    @classmethod
    def constant(cls, dim: int, level: int, c: float) -> "GridFunction":
        return cls(dim, level, np.full((1 << level,) * dim, float(c)))

    @classmethod
    def indicator(cls, dim: int, level: int, cube: DyadicCube) -> "GridFunction":
        vals = np.zeros((1 << level,) * dim)
        vals[cube.cell_slices(level)] = 1.0
        return cls(dim, level, vals)

    def on(self, cube: DyadicCube) -> np.ndarray:
        """The block of cell values covered by ``cube``."""
        return self.values[cube.cell_slices(self.level)]

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def _wrap(self, arr) -> "GridFunction":
        return GridFunction(self.dim, self.level, arr)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            _match(self, other)
            return self._wrap(self.values + other.values)
        return self._wrap(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            _match(self, other)
            return self._wrap(self.values - other.values)
        return self._wrap(self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            _match(self, other)
            return self._wrap(self.values * other.values)
        return self._wrap(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.values)

    def __abs__(self):
        return self._wrap(np.abs(self.values))

    def __pow__(self, e):
        return self._wrap(self.values**e)

    def __repr__(self):
        return f"GridFunction(n={self.dim}, L={self.level})"


def _match(f: GridFunction, g: GridFunction) -> None:
    if f.dim != g.dim or f.level != g.level:
        raise DimensionError(
            f"grid mismatch: (n={f.dim}, L={f.level}) vs (n={g.dim}, L={g.level})"
        )


def block_reduce(values: np.ndarray, n: int, L: int, j: int, op: str = "mean") -> np.ndarray:
    """Reduce level-L cell values to one number per level-j cube (op: mean/sum/min/max/any)."""
    if j > L:
        raise DimensionError(f"cannot reduce to level {j} from resolution {L}")
    s = 1 << (L - j)
    if n == 1:
        v = values.reshape(1 << j, s)
        return getattr(v, op)(axis=1)
    v = values.reshape(1 << j, s, 1 << j, s)
    return getattr(v, op)(axis=(1, 3))


def mean_pyramid(values: np.ndarray, n: int, L: int) -> list[np.ndarray]:
    """Per-cube means at every level 0..L, computed bottom-up."""
    out: list[np.ndarray] = [None] * (L + 1)  # type: ignore[list-item]
    out[L] = np.asarray(values, dtype=float).reshape((1 << L,) * n)
    for j in range(L - 1, -1, -1):
        out[j] = block_reduce(out[j + 1], n, j + 1, j, "mean")
    return out


def average(f: GridFunction, Q: DyadicCube, p0: float) -> float:
    """The local p0-average of f over Q, ((1/|Q|) * int_Q |f|^p0)^(1/p0)."""
    if p0 < 1:
        raise DomainError(f"p0 must be >= 1, got {p0}")
    if Q.dim != f.dim:
        raise DimensionError("cube dimension does not match function dimension")
    if Q.level > f.level:
        raise DimensionError(
            f"cube level {Q.level} exceeds function resolution {f.level}"
        )
    block = np.abs(f.on(Q))
    if p0 == 1:
        return float(block.mean())
    return float((block**p0).mean() ** (1.0 / p0))


def dilate(Q: DyadicCube, k: int, L: int) -> np.ndarray:
    """Boolean cell mask of the concentric dilate 2^k Q at resolution L.

    The dilate wraps periodically and saturates to the whole torus once its
    side reaches 1.  A cell belongs to the dilate when its center lies in
    the half-open cube [c - s/2, c + s/2) per axis; whenever the dilate is
    aligned with cell boundaries this is exactly the covered cell set, and
    it stays well defined for dilates of bottom-level cubes whose boundary
    cuts through cells.
    """
    if k < 0:
        raise DomainError("dilation order must be nonnegative")
    n = Q.dim
    N = 1 << L
    shape = (N,) * n
    if L < Q.level:
        raise DimensionError(f"resolution {L} too coarse for a level-{Q.level} cube")
    if k == 0:
        mask = np.zeros(shape, dtype=bool)
        mask[Q.cell_slices(L)] = True
        return mask
    if k >= Q.level:
        return np.ones(shape, dtype=bool)
    half = 2.0 ** (k - Q.level) / 2.0
    centers = (np.arange(N) + 0.5) / N
    axes = []
    for i, c in zip(Q.index, Q.center()):
        rel = (centers - c + 0.5) % 1.0 - 0.5
        axes.append((-half <= rel) & (rel < half))
    if n == 1:
        return axes[0]
    return axes[0][:, None] & axes[1][None, :]


@dataclass(frozen=True)
class Annulus:
    """Ring S_j(Q) = 2^j Q \\ 2^(j-1) Q around a base cube (S_0(Q) = Q)."""

    base: DyadicCube
    ring: int

    def __post_init__(self):
        if self.ring < 0:
            raise DomainError("ring index must be nonnegative")

    def is_empty(self) -> bool:
        # the inner dilate already covers the torus
        return self.ring >= 1 and (self.ring - 1) >= self.base.level

    def mask(self, L: int) -> np.ndarray:
        if self.ring == 0:
            return dilate(self.base, 0, L)
        outer = dilate(self.base, self.ring, L)
        inner = dilate(self.base, self.ring - 1, L)
        return outer & ~inner


def annulus_mask(Q: DyadicCube, j: int, L: int) -> np.ndarray:
    return Annulus(Q, j).mask(L)


def rearrangement(f: GridFunction, t: float) -> float:
    """Decreasing rearrangement f*(t) = inf{a > 0 : |{|f| > a}| < t}."""
    if t <= 0:
        raise DomainError(f"rearrangement needs t > 0, got {t}")
    v = f.cell_volume
    k = math.ceil(t / v - 1e-12)
    if k > f.size:
        return 0.0
    a = np.abs(f.values).ravel()
    # k-th largest value
    return float(np.partition(a, a.size - k)[a.size - k])


def kth_largest(a: np.ndarray, k: int) -> float:
    a = np.asarray(a).ravel()
    return float(np.partition(a, a.size - k)[a.size - k])


def weighted_norm(f: GridFunction, p: float, w: GridFunction | None = None) -> float:
    """Discrete L^p(w) (quasi)norm; w = None means Lebesgue measure."""
    if p <= 0:
        raise DomainError(f"norm exponent must be positive, got {p}")
    vals = np.abs(f.values) ** p
    if w is not None:
        _match(f, w)
        if np.any(w.values <= 0):
            raise DomainError("weight must be strictly positive cellwise")
        vals = vals * w.values
    return float((vals.sum() * f.cell_volume) ** (1.0 / p))


def weak_norm(f: GridFunction, q: float) -> float:
    """Weak L^q quasinorm sup_t t^(1/q) f*(t), exact on the discrete measure."""
    if q <= 0:
        raise DomainError(f"weak norm exponent must be positive, got {q}")
    a = np.sort(np.abs(f.values), axis=None)[::-1]
    t = np.arange(1, a.size + 1) * f.cell_volume
    return float(np.max(t ** (1.0 / q) * a))


# ---------------------------------------------------------------------------
# GridFunction text format: line 1 "GFN1 <n> <L>", then cell values row-major.


def parse_gfn(text: str) -> GridFunction:
    lines = text.splitlines()
    if not lines:
        raise FormatError("line 1: empty file, expected 'GFN1 <n> <L>' header")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "GFN1":
        raise FormatError("line 1: expected header 'GFN1 <n> <L>'")
    try:
        n, L = int(head[1]), int(head[2])
    except ValueError:
        raise FormatError("line 1: dimension and level must be integers") from None
    _check_dim(n)
    if not 0 <= L <= MAX_LEVEL[n]:
        raise FormatError(f"line 1: level {L} out of range for n={n}")
    expected = (1 << L) ** n
    values: list[float] = []
    for ln, line in enumerate(lines[1:], start=2):
        for col, tok in enumerate(line.split(), start=1):
            try:
                values.append(float(tok))
            except ValueError:
                raise FormatError(f"line {ln}, field {col}: not a number: {tok!r}") from None
            if len(values) > expected:
                raise FormatError(
                    f"line {ln}, field {col}: expected {expected} values, found more"
                )
    if len(values) != expected:
        raise FormatError(
            f"line {len(lines)}: expected {expected} values, found {len(values)}"
        )
    return GridFunction(n, L, values)


def read_gfn(path) -> GridFunction:
    with open(path, "r", encoding="ascii") as fh:
        return parse_gfn(fh.read())


def format_gfn(f: GridFunction) -> str:
    rows = f.values.reshape(-1, f.values.shape[-1])
    body = "\n".join(" ".join(repr(float(x)) for x in row) for row in rows)
    return f"GFN1 {f.dim} {f.level}\n{body}\n"


def write_gfn(path, f: GridFunction) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_gfn(f))
