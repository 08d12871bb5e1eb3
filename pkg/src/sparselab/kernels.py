"""Model singular operators: Fourier multipliers, the periodic Hilbert
transform, their kernels, and numerical checkers for symbol regularity and
ring-decay of kernel differences.

Symbols are sampled on the integer frequency lattice [-N/2, N/2) per axis
(math order, index i holds frequency i - N/2).  The unpaired Nyquist bin
-N/2 of an even grid has no mirror image; built-in real symbols zero it so
real inputs map to real outputs exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    DomainError,
    DimensionError,
    DyadicCube,
    GridFunction,
    annulus_mask,
    dilate,
)


@dataclass(frozen=True)
class Symbol:
    """Sampled multiplier on the integer frequency lattice, math order."""

    freq_dim: int
    values: np.ndarray = field(compare=False)
    name: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex)
        if arr.ndim != self.freq_dim:
            raise DimensionError("symbol array rank must equal freq_dim")
        N = arr.shape[0]
        if any(s != N for s in arr.shape) or N & (N - 1):
            raise DimensionError("symbol must be sampled on a square power-of-two lattice")
        if not np.all(np.isfinite(arr)):
            raise DomainError("symbol values must be finite (bounded symbol)")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def frequencies(self) -> np.ndarray:
        N = self.N
        return np.arange(-N // 2, N // 2)

    def fft_order(self) -> np.ndarray:
        return np.fft.ifftshift(self.values)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """m(-xi) = conj m(xi) on paired bins, real on the unpaired ones."""
        v = self.values
        flipped = v[(slice(None, 0, -1),) * self.freq_dim]
        inner = v[(slice(1, None),) * self.freq_dim]
        if not np.allclose(flipped, np.conj(inner), atol=tol):
            return False
        edges = np.zeros(v.shape, dtype=bool)
        for ax in range(self.freq_dim):
            sl = [slice(None)] * self.freq_dim
            sl[ax] = 0
            edges[tuple(sl)] = True
        return bool(np.all(np.abs(v[edges].imag) <= tol))


def symbol_from_function(fn, N: int, freq_dim: int = 1, name: str = "") -> Symbol:
    freqs = np.arange(-N // 2, N // 2)
    if freq_dim == 1:
        vals = np.array([fn(float(x)) for x in freqs], dtype=complex)
    else:
        vals = np.array([[fn(float(x), float(y)) for y in freqs] for x in freqs], dtype=complex)
    return Symbol(freq_dim, vals, name)


def symbol_identity(N: int, freq_dim: int = 1) -> Symbol:
    return Symbol(freq_dim, np.ones((N,) * freq_dim), "identity")


def symbol_sign(N: int) -> Symbol:
    """-i sign(xi) with the zero and unpaired Nyquist bins set to zero."""
    freqs = np.arange(-N // 2, N // 2)
    vals = -1j * np.sign(freqs).astype(complex)
    vals[0] = 0.0  # unpaired bin at -N/2
    return Symbol(1, vals, "sign")


def symbol_oscillating(N: int, tau: float = 1.0) -> Symbol:
    """|xi|^(i tau), a bounded oscillating symbol (value 1 at xi = 0)."""
    freqs = np.arange(-N // 2, N // 2).astype(float)
    out = np.ones(N, dtype=complex)
    nz = freqs != 0
    out[nz] = np.exp(1j * tau * np.log(np.abs(freqs[nz])))
    return Symbol(1, out, f"oscillating(tau={tau})")


def symbol_cone(N: int) -> Symbol:
    """Degree-0 homogeneous cone xi / sqrt(xi^2 + eta^2), 0 at the origin.

    Smooth away from the origin, so its lattice derivatives of order k decay
    like |(xi, eta)|^-k; the l1-normalized variant xi/(|xi|+|eta|) has kinks
    on the axes and fails the order-2 condition there.
    """
    freqs = np.arange(-N // 2, N // 2).astype(float)
    X, Y = np.meshgrid(freqs, freqs, indexing="ij")
    den = np.sqrt(X**2 + Y**2)
    out = np.zeros_like(X, dtype=complex)
    nz = den > 0
    out[nz] = X[nz] / den[nz]
    return Symbol(2, out, "cone")


def symbol_smooth_bump(N: int, freq_dim: int = 2, width: float = 0.25) -> Symbol:
    """Smooth compactly supported bump exp(-1/(1-r^2)) on r < 1, r = |xi|/(width N/2)."""
    freqs = np.arange(-N // 2, N // 2).astype(float)
    scale = width * (N / 2)
    if freq_dim == 1:
        r2 = (freqs / scale) ** 2
    else:
        X, Y = np.meshgrid(freqs, freqs, indexing="ij")
        r2 = (X**2 + Y**2) / scale**2
    out = np.zeros_like(r2, dtype=complex)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return Symbol(freq_dim, out / np.abs(out).max(), "bump")


NAMED_SYMBOLS = {
    "identity": lambda N: symbol_identity(N),
    "sign": symbol_sign,
    "riesz1d": symbol_sign,
}


# ---------------------------------------------------------------------------
# Multiplier application


def apply_linear_multiplier(m: Symbol, f: GridFunction) -> GridFunction:
    """Diagonal Fourier action: transform, multiply by the symbol, invert.

    Hermitian symbols return the exact real part; other symbols report the
    complex modulus cellwise.
    """
    if m.freq_dim != f.dim:
        raise DimensionError("symbol rank does not match function dimension")
    if m.N != 1 << f.level:
        raise DimensionError("symbol lattice does not match function resolution")
    spec = np.fft.fftn(f.values) * m.fft_order()
    out = np.fft.ifftn(spec)
    if m.is_hermitian():
        return GridFunction(f.dim, f.level, out.real)
    return GridFunction(f.dim, f.level, np.abs(out))


def hilbert_transform(f: GridFunction) -> GridFunction:
    """Periodic Hilbert transform via the -i sign(xi) multiplier (n = 1).

    Kills constants and the unpaired Nyquist mode; on the remaining modes
    applying it twice equals -(identity - mean).
    """
    if f.dim != 1:
        raise DimensionError("hilbert_transform is one-dimensional")
    return apply_linear_multiplier(symbol_sign(1 << f.level), f)


def apply_bilinear_multiplier(m: Symbol, f: GridFunction, g: GridFunction) -> GridFunction:
    """Direct double-sum bilinear multiplier on the 1d torus lattice.

    T(f,g)(x) = sum_{xi,eta} m(xi,eta) fhat(xi) ghat(eta) e^(2 pi i (xi+eta) x),
    with unit-normalized coefficients so the constant symbol gives f g.
    """
    if m.freq_dim != 2:
        raise DimensionError("bilinear multiplier needs a rank-2 symbol")
    if f.dim != 1 or g.dim != 1:
        raise DimensionError("bilinear multiplier is implemented on the 1d torus")
    if f.level != g.level:
        raise DimensionError("input functions must share a resolution")
    N = 1 << f.level
    if m.N != N:
        raise DimensionError("symbol lattice does not match function resolution")
    fh = np.fft.fft(f.values) / N
    gh = np.fft.fft(g.values) / N
    mf = np.fft.ifftshift(m.values)
    A = mf * fh[:, None] * gh[None, :]
    x = np.arange(N) / N
    freqs = np.fft.fftfreq(N, d=1.0 / N)
    U = np.exp(2j * np.pi * np.outer(x, freqs))
    out = np.einsum("xk,kl,xl->x", U, A, U, optimize=True)
    sym = m.values
    mirror = sym[:0:-1, :0:-1]
    hermitian = np.allclose(mirror, np.conj(sym[1:, 1:]), atol=1e-12) and np.all(
        np.abs(sym[0, :].imag) < 1e-12
    ) and np.all(np.abs(sym[:, 0].imag) < 1e-12)
    if hermitian:
        return GridFunction(1, f.level, out.real)
    return GridFunction(1, f.level, np.abs(out))


class LinearMultiplierOperator:
    arity = 1

    def __init__(self, symbol: Symbol, name: str = ""):
        self.symbol = symbol
        self.name = name or symbol.name

    def apply(self, fs) -> GridFunction:
        (f,) = fs
        return apply_linear_multiplier(self.symbol, f)


class HilbertOperator:
    arity = 1
    name = "hilbert"

    def apply(self, fs) -> GridFunction:
        (f,) = fs
        return hilbert_transform(f)


class BilinearMultiplierOperator:
    arity = 2

    def __init__(self, symbol: Symbol, name: str = ""):
        self.symbol = symbol
        self.name = name or symbol.name

    def apply(self, fs) -> GridFunction:
        f, g = fs
        return apply_bilinear_multiplier(self.symbol, f, g)


# ---------------------------------------------------------------------------
# Symbol class checkers


def _central_diff(values: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit-spacing central difference and the mask of valid lattice points."""
    v = np.moveaxis(values, axis, 0)
    out = np.zeros_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / 2.0
    valid = np.zeros(v.shape, dtype=bool)
    valid[1:-1] = True
    return np.moveaxis(out, 0, axis), np.moveaxis(valid, 0, axis)


def _derivative(sym: Symbol, alpha: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    vals = np.asarray(sym.values, dtype=complex)
    valid = np.ones(vals.shape, dtype=bool)
    for ax, order in enumerate(alpha):
        for _ in range(order):
            vals, ok = _central_diff(vals, ax)
            valid &= ok
            # shrink the valid band the same way the stencil does
            v = np.moveaxis(valid, ax, 0)
            v[0] = False
            v[-1] = False
            valid = np.moveaxis(v, 0, ax)
    if sum(alpha) > 0:
        stencil = sum(alpha)
        grids = np.meshgrid(*[np.abs(sym.frequencies())] * sym.freq_dim, indexing="ij")
        near0 = np.ones(vals.shape, dtype=bool)
        for g in grids:
            near0 &= g <= stencil
        valid &= ~near0
    return vals, valid


def _multi_indices(dim: int, max_order: int):
    if dim == 1:
        for a in range(max_order + 1):
            yield (a,)
    else:
        for a in range(max_order + 1):
            for b in range(max_order + 1 - a):
                yield (a, b)


@dataclass
class MslReport:
    s: float
    l: int
    radii: list[int]
    terms: dict[tuple[int, ...], list[float]]
    member: bool

    def sup(self, alpha) -> float:
        return max(self.terms[tuple(alpha)])

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "l": self.l,
            "radii": self.radii,
            "terms": {str(list(a)): v for a, v in self.terms.items()},
            "member": self.member,
        }


_GROWTH_CAP = 1.75  # per-octave growth above this flags an unbounded symbol


def check_msl(m: Symbol, s: float, l: int, radii=None) -> MslReport:
    """Ring-integrated derivative sums sup_R (R^(s|a|-n) int_{R<|x|<2R} |d^a m|^s)^(1/s).

    Derivatives use unit central differences with the origin excluded from
    their stencils.  Membership requires every term finite with per-octave
    growth at most 1.75 across the scanned dyadic radii.
    """
    if not 1.0 < s <= 2.0:
        raise DomainError(f"s must lie in (1, 2], got {s}")
    if l < 0:
        raise DomainError("l must be nonnegative")
    d = m.freq_dim
    N = m.N
    if radii is None:
        radii = [1 << j for j in range(1, max(2, int(math.log2(N)) - 2))]
    radii = sorted(int(R) for R in radii)
    if 2 * radii[-1] > N // 2:
        raise DomainError("largest radius exceeds the frequency lattice")
    grids = np.meshgrid(*[np.abs(m.frequencies().astype(float))] * d, indexing="ij")
    radius = np.maximum.reduce(grids)  # sup-norm radius on the lattice
    terms: dict[tuple[int, ...], list[float]] = {}
    member = True
    for alpha in _multi_indices(d, l):
        deriv, valid = _derivative(m, alpha)
        vals = []
        for R in radii:
            ring = (radius > R) & (radius <= 2 * R) & valid
            if not ring.any():
                vals.append(0.0)
                continue
            total = float((np.abs(deriv[ring]) ** s).sum())
            vals.append((float(R) ** (s * sum(alpha) - d) * total) ** (1.0 / s))
        terms[alpha] = vals
        pos = [v for v in vals if v > 0]
        if len(pos) >= 2:
            octaves = len(pos) - 1
            growth = (pos[-1] / pos[0]) ** (1.0 / octaves)
            if growth > _GROWTH_CAP or not all(map(math.isfinite, vals)):
                member = False
    return MslReport(s, l, list(radii), terms, member)


@dataclass
class HormanderReport:
    s: int
    constants: dict[tuple[tuple[int, ...], tuple[int, ...]], float]
    member: bool

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "constants": {f"{list(a)}|{list(b)}": v for (a, b), v in self.constants.items()},
            "member": self.member,
        }


def check_hormander_bilinear(m: Symbol, s: int) -> HormanderReport:
    """Estimate sup (|xi|+|eta|)^(|a|+|b|) |d^a_xi d^b_eta m| for |a|+|b| <= s.

    Uses lattice central differences; the membership flag requires each
    constant to stay bounded across dyadic annuli (per-octave growth at
    most 1.75).
    """
    if m.freq_dim != 2:
        raise DimensionError("bilinear Hormander check needs a rank-2 symbol")
    if s < 0:
        raise DomainError("s must be nonnegative")
    freqs = m.frequencies().astype(float)
    X, Y = np.meshgrid(np.abs(freqs), np.abs(freqs), indexing="ij")
    weight = X + Y
    N = m.N
    radii = [1 << j for j in range(1, max(2, int(math.log2(N)) - 1))]
    constants: dict = {}
    member = True
    for a in range(s + 1):
        for b in range(s + 1 - a):
            deriv, valid = _derivative(m, (a, b))
            w = weight ** (a + b) * np.abs(deriv)
            w = np.where(valid & (weight > 0), w, 0.0)
            constants[((a,), (b,))] = float(w.max())
            octs = []
            for R in radii:
                ring = (weight > R) & (weight <= 2 * R) & valid
                octs.append(float(w[ring].max()) if ring.any() else 0.0)
            pos = [v for v in octs if v > 0]
            if len(pos) >= 2:
                growth = (pos[-1] / pos[0]) ** (1.0 / (len(pos) - 1))
                if growth > _GROWTH_CAP:
                    member = False
    return HormanderReport(s, constants, member)


# ---------------------------------------------------------------------------
# Kernels and the ring-decay condition


class KernelSample:
    """Translation-invariant kernel evaluated on lattice offsets, diagonal masked."""

    def __init__(self, arity: int, dim: int, level: int, table: np.ndarray, name: str = ""):
        if dim != 1:
            raise DimensionError("kernel sampling is implemented on the 1d torus")
        self.arity = arity
        self.dim = dim
        self.level = level
        table = np.asarray(table)
        expected = (1 << level,) * arity
        if table.shape != expected:
            raise DimensionError(f"kernel table must have shape {expected}")
        self.table = table
        self.name = name

    def diff(self, x: int, xbar: int, ys: tuple[np.ndarray, ...]) -> np.ndarray:
        """K(x, y...) - K(xbar, y...) on arrays of y cell indices."""
        N = 1 << self.level
        if self.arity == 1:
            (y,) = ys
            return self.table[(x - y) % N] - self.table[(xbar - y) % N]
        y1, y2 = ys
        a = self.table[np.ix_((x - y1) % N, (x - y2) % N)]
        b = self.table[np.ix_((xbar - y1) % N, (xbar - y2) % N)]
        return a - b


def kernel_from_symbol(m: Symbol, arity: int, level: int | None = None) -> KernelSample:
    """Inverse-transform table K(x, y...) = mcheck(x - y_1, ..., x - y_m).

    The table is normalized so that integrating K against cell values
    reproduces the multiplier operator exactly on the grid.
    """
    if arity not in (1, 2):
        raise DomainError("kernel arity must be 1 or 2")
    if m.freq_dim != arity:
        raise DimensionError("symbol rank must equal the kernel arity")
    N = m.N
    level = int(math.log2(N)) if level is None else level
    if 1 << level != N:
        raise DimensionError("kernel level must match the symbol lattice")
    mf = m.fft_order()
    if arity == 1:
        table = np.fft.ifft(mf) * N
    else:
        table = np.fft.ifft2(mf) * N * N
    if m.is_hermitian():
        table = table.real
    return KernelSample(arity, 1, level, table, m.name)


def hilbert_kernel(level: int) -> KernelSample:
    """Closed-form periodized Hilbert kernel cot(pi z) on lattice offsets."""
    N = 1 << level
    z = np.arange(N) / N
    z = np.where(z >= 0.5, z - 1.0, z)  # signed displacement in [-1/2, 1/2)
    table = np.zeros(N)
    nz = z != 0.0
    table[nz] = 1.0 / np.tan(np.pi * z[nz])
    return KernelSample(1, 1, level, table, "hilbert")


NAMED_KERNELS = {
    "hilbert": hilbert_kernel,
}


@dataclass
class H2Report:
    """Measured ring norms of kernel differences and the fitted decay rate."""

    p0: float
    base: DyadicCube
    rings: list[int]
    b_values: list[float]
    delta_hat: float | None
    residual: float | None
    pairs: int
    degenerate: bool

    @property
    def delta0(self) -> float | None:
        if self.delta_hat is None:
            return None
        n = len(self.base.index)
        return self.delta_hat - n / self.p0

    def to_dict(self) -> dict:
        return {
            "p0": self.p0,
            "cube": {"level": self.base.level, "index": list(self.base.index)},
            "rings": self.rings,
            "b_values": self.b_values,
            "delta_hat": self.delta_hat,
            "delta0": self.delta0,
            "residual": self.residual,
            "pairs": self.pairs,
            "degenerate": self.degenerate,
        }


def _half_cube_cells(Q: DyadicCube, L: int) -> np.ndarray:
    """Cell indices of the concentric half cube of Q (1d)."""
    if L < Q.level + 2:
        raise DimensionError("need L >= level + 2 to resolve the half cube")
    s = 1 << (L - Q.level)
    (i,) = Q.index
    start = i * s + s // 4
    return np.arange(start, start + s // 2, dtype=np.int64)


def _fit_slope(xs, ys) -> tuple[float, float]:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xm, ym = xs.mean(), ys.mean()
    slope = float(((xs - xm) * (ys - ym)).sum() / ((xs - xm) ** 2).sum())
    resid = ys - (ym + slope * (xs - xm))
    return slope, float(np.sqrt((resid**2).mean()))


def check_h2(K: KernelSample, p0: float, Q: DyadicCube, jmax: int,
             max_pairs: int = 64, seed: int = 0) -> H2Report:
    """Measure B_j = sup_pairs (int_{S_j(Q)} |K(x,.) - K(xbar,.)|^p0' dy)^(1/p0')
    and fit the decay slope of log2 B_j against the ring index.

    p0 = 1 uses the ring supremum in place of the integral.  All (x, xbar)
    pairs from the half cube are used while the half cube holds at most 64
    cells; beyond that a seeded sample of 64 pairs is drawn.  For bilinear
    kernels the ring pairs are grouped by max(j1, j2).
    """
    if p0 < 1:
        raise DomainError("p0 must be >= 1")
    if jmax < 1:
        raise DomainError("need at least one ring")
    if jmax > Q.level:
        raise DomainError(
            f"ring {jmax} of a level-{Q.level} cube is empty on the torus"
        )
    L = K.level
    cells = _half_cube_cells(Q, L)
    pairs = [(int(a), int(b)) for ai, a in enumerate(cells) for b in cells[ai + 1 :]]
    if cells.size > max_pairs:
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[int(i)] for i in picks]
    vol = 2.0 ** (-L)
    p0c = math.inf if p0 == 1.0 else p0 / (p0 - 1.0)

    ring_cells = []
    for j in range(1, jmax + 1):
        mask = annulus_mask(Q, j, L)
        ring_cells.append(np.nonzero(mask.ravel())[0])

    def ring_norm(diff_abs: np.ndarray) -> float:
        if math.isinf(p0c):
            return float(diff_abs.max()) if diff_abs.size else 0.0
        total = float((diff_abs**p0c).sum())
        weight = vol if K.arity == 1 else vol * vol
        return (total * weight) ** (1.0 / p0c)

    b_values = []
    js = list(range(1, jmax + 1))
    if K.arity == 1:
        for yc in ring_cells:
            best = 0.0
            for x, xbar in pairs:
                d = np.abs(K.diff(x, xbar, (yc,)))
                best = max(best, ring_norm(d))
            b_values.append(best)
    else:
        grouped = {j: 0.0 for j in js}
        for j1, yc1 in zip(js, ring_cells):
            for j2, yc2 in zip(js, ring_cells):
                j0 = max(j1, j2)
                for x, xbar in pairs:
                    d = np.abs(K.diff(x, xbar, (yc1, yc2)))
                    grouped[j0] = max(grouped[j0], ring_norm(d))
        # rings paired with S_0 = Q itself
        q_cells = np.nonzero(dilate(Q, 0, L).ravel())[0]
        for j, yc in zip(js, ring_cells):
            for x, xbar in pairs:
                d1 = np.abs(K.diff(x, xbar, (yc, q_cells)))
                d2 = np.abs(K.diff(x, xbar, (q_cells, yc)))
                grouped[j] = max(grouped[j], ring_norm(d1), ring_norm(d2))
        b_values = [grouped[j] for j in js]

    fit_js = [j for j, b in zip(js, b_values) if b > 0 and j >= 2]
    fit_bs = [b for j, b in zip(js, b_values) if b > 0 and j >= 2]
    if len(fit_js) < 3:
        return H2Report(p0, Q, js, b_values, None, None, len(pairs), True)
    slope, resid = _fit_slope(fit_js, np.log2(fit_bs))
    return H2Report(p0, Q, js, b_values, -slope, resid, len(pairs), False)
