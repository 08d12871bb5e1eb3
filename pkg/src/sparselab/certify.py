"""Experiment drivers that measure the theorem-level inequalities.

Each driver produces a CertificationRecord with the measured left side,
the weighted bound on the right side, and their ratio.  Implicit constants
are never asserted against fixed values: campaigns track running suprema
of ratios, while the exact per-cube inequalities live in their own modules
and are asserted there.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import DomainError, DyadicCube, GridFunction, root_cube, weighted_norm
from .kernels import H2Report, HilbertOperator, check_h2, hilbert_kernel
from .oscillation import lerner_decompose, ring_average_products
from .sparse import (
    CarlesonSequence,
    SparseFamily,
    dominate,
    dyadic_maximal,
    eval_sparse_A,
)
from .weights import WeightTuple, ap_constant, multi_ap_constant, power_weight
from . import samples


def beta_exponent(pbar, p0: float) -> float:
    """max(1, (p_i/p0)'/p) over i, with 1/p = sum 1/p_i."""
    pbar = tuple(float(p) for p in pbar)
    if not pbar:
        raise DomainError("need at least one exponent")
    if p0 < 1 or p0 >= min(pbar):
        raise DomainError(f"p0 = {p0} must satisfy 1 <= p0 < min p_i")
    p = 1.0 / sum(1.0 / q for q in pbar)
    best = 1.0
    for q in pbar:
        a = q / p0
        best = max(best, (a / (a - 1.0)) / p)
    return best


@dataclass
class CertificationRecord:
    experiment: str
    params: dict
    lhs: float
    rhs: float
    constants: dict = field(default_factory=dict)
    seed: int | None = None
    degenerate: bool = False

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0 else math.inf

    def key(self) -> str:
        canon = json.dumps({"experiment": self.experiment, "params": self.params},
                           sort_keys=True)
        return hashlib.sha1(canon.encode()).hexdigest()[:12]

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "key": self.key(),
            "params": self.params,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": None if self.degenerate and self.rhs == 0 else self.ratio,
            "constants": self.constants,
            "seed": self.seed,
            "degenerate": self.degenerate,
        }


def certify_theorem_b(S: SparseFamily, t: WeightTuple, fs, maxlevel: int | None = None,
                      seed: int | None = None) -> CertificationRecord:
    """Sparse-form bound: ||A_S f||_{L^p(nu)} against [w]^beta prod ||f_i||_{L^{p_i}(w_i)}."""
    for f in fs:
        if np.any(f.values < 0):
            raise DomainError("certification inputs must be nonnegative")
    if len(fs) != t.m:
        raise DomainError("tuple arity does not match the weights")
    lhs = weighted_norm(eval_sparse_A(S, 0, t.p0, fs), t.p, t.nu())
    const = multi_ap_constant(t, r=t.p0, maxlevel=maxlevel)
    beta = beta_exponent(t.exponents, t.p0)
    rhs = const.value**beta
    for f, p_i, w in zip(fs, t.exponents, t.weights):
        rhs *= weighted_norm(f, p_i, w)
    return CertificationRecord(
        "theorem-b",
        {"m": t.m, "p0": t.p0, "p": list(t.exponents), "L": t.level, "n": t.dim,
         "family_size": len(S)},
        lhs, rhs,
        constants={"multi_ap": const.value, "beta": beta},
        seed=seed,
        degenerate=(rhs == 0.0),
    )


def certify_theorem_a(a: CarlesonSequence, k: int, p0: float, fs, p: float,
                      w: GridFunction | None = None, seed: int | None = None,
                      cstar: float | None = None) -> CertificationRecord:
    """Complexity collapse: ||A^k f|| against (k+1) ||sum_l A^0_{S_l} f|| in L^p(w)."""
    res = dominate(a, k, p0, fs, cstar=cstar, seed=seed or 0)
    lhs_fun = eval_sparse_A(a, k, p0, fs)
    rhs_vals = np.zeros_like(lhs_fun.values)
    for sel in res.selections:
        rhs_vals += eval_sparse_A(sel.family, 0, p0, fs).values
    lhs = weighted_norm(lhs_fun, p, w)
    denom = weighted_norm(GridFunction(lhs_fun.dim, lhs_fun.level, rhs_vals), p, w)
    rhs = (k + 1) * denom
    degenerate = rhs == 0.0 and lhs == 0.0
    return CertificationRecord(
        "theorem-a",
        {"k": k, "p0": p0, "p": p, "L": fs[0].level, "n": fs[0].dim, "m": len(fs)},
        lhs, rhs,
        constants={
            "cell_constant": res.cell_constant,
            "pieces": len(res.pieces),
            "raw_norm_ratio": (lhs / denom) if denom > 0 else (0.0 if lhs == 0 else math.inf),
        },
        seed=seed,
        degenerate=degenerate,
    )


def certify_theorem_c(op, t: WeightTuple, fs, h2, lam: float | None = None,
                      maxlevel: int | None = None, seed: int | None = None) -> CertificationRecord:
    """End-to-end operator bound through the oscillation decomposition.

    Applies the operator, runs the sparse decomposition of the output, logs
    the per-cube oscillation ratios against the ring series, and compares
    ||T f||_{L^p(nu)} with [w]^beta prod ||f_i||.
    """
    delta0 = h2.delta0 if isinstance(h2, H2Report) else float(h2)
    if delta0 is None or delta0 <= 0:
        raise DomainError("need a positive effective decay rate delta0")
    if len(fs) != t.m:
        raise DomainError("tuple arity does not match the weights")
    n = fs[0].dim
    lam = 2.0 ** (-(n + 2)) if lam is None else lam
    u = op.apply(fs)
    dec = lerner_decompose(u, root_cube(n))
    osc_ratios = []
    for Q, om in dec.omegas.items():
        rings = ring_average_products(fs, Q, t.p0)
        series = sum(2.0 ** (-ell * delta0) * v for ell, v in enumerate(rings))
        if series > 0:
            osc_ratios.append(om / series)
    lhs = weighted_norm(u, t.p, t.nu())
    const = multi_ap_constant(t, r=t.p0, maxlevel=maxlevel)
    beta = beta_exponent(t.exponents, t.p0)
    rhs = const.value**beta
    for f, p_i, w in zip(fs, t.exponents, t.weights):
        rhs *= weighted_norm(f, p_i, w)
    return CertificationRecord(
        "theorem-c",
        {"operator": getattr(op, "name", type(op).__name__), "m": t.m, "p0": t.p0,
         "p": list(t.exponents), "L": t.level, "n": t.dim},
        lhs, rhs,
        constants={
            "multi_ap": const.value,
            "beta": beta,
            "delta0": delta0,
            "family_size": len(dec.family),
            "median": dec.base_median,
            "osc_ratio_sup": max(osc_ratios, default=0.0),
        },
        seed=seed,
        degenerate=(rhs == 0.0 and lhs == 0.0),
    )


def certify_buckley(w: GridFunction, p: float, f: GridFunction,
                    maxlevel: int | None = None, seed: int | None = None) -> CertificationRecord:
    """Maximal-function bound ||M f||_{L^p(w)} against [w]_{A_p}^(1/(p-1)) ||f||_{L^p(w)}."""
    if p <= 1:
        raise DomainError(f"need p > 1, got {p}")
    lhs = weighted_norm(dyadic_maximal(f, 1.0, maxlevel=maxlevel), p, w)
    const = ap_constant(w, p, maxlevel)
    rhs = const.value ** (1.0 / (p - 1.0)) * weighted_norm(f, p, w)
    return CertificationRecord(
        "buckley",
        {"p": p, "L": f.level, "n": f.dim},
        lhs, rhs,
        constants={"ap": const.value},
        seed=seed,
        degenerate=(rhs == 0.0 and lhs == 0.0),
    )


# ---------------------------------------------------------------------------
# Campaign helpers


def extremal_probe_tuple(t: WeightTuple, maxlevel: int | None = None):
    """Near-extremizer inputs f_i = sigma_i chi_Q on the witness cube of [w]."""
    const = multi_ap_constant(t, r=t.p0, maxlevel=maxlevel)
    Q = const.witness
    out = []
    for s in t.dual_weights():
        vals = np.zeros_like(s.values)
        vals[Q.cell_slices(t.level)] = s.values[Q.cell_slices(t.level)]
        out.append(GridFunction(t.dim, t.level, vals))
    return out


def power_weight_tuple(alpha: float, exponents, p0: float, n: int = 1, L: int = 8) -> WeightTuple:
    """Weight pair (dist^alpha, dist^-alpha) centred at 0 and 1/2 respectively."""
    w1 = power_weight(alpha, center=0.0 if n == 1 else (0.0, 0.0), n=n, L=L)
    w2 = power_weight(-alpha, center=0.5 if n == 1 else (0.5, 0.5), n=n, L=L)
    weights = [w1, w2][: len(tuple(exponents))]
    while len(weights) < len(tuple(exponents)):
        weights.append(GridFunction.constant(n, L, 1.0))
    return WeightTuple(tuple(weights), tuple(exponents), p0=p0)


def hilbert_h2_fit(L: int, p0: float) -> H2Report:
    """Ring-decay fit for the reference singular kernel at resolution L.

    The base cube level keeps every fitted ring inside the principal sheet
    of the torus (the outermost dilate stays strictly below full size).
    """
    level = min(6, L - 2)
    jmax = min(5, level)
    return check_h2(hilbert_kernel(L), p0, DyadicCube(level, (1,)), jmax)


# ---------------------------------------------------------------------------
# Parameter sweeps

SWEEP_KEYS = {
    "experiment", "n", "L", "m", "p0", "p", "k", "weight_family",
    "trials", "seed", "out", "plot", "jobs",
}
WEIGHT_FAMILY_KEYS = {"type", "alpha_grid"}


def validate_config(config: dict) -> dict:
    unknown = set(config) - SWEEP_KEYS
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    if "experiment" not in config:
        raise DomainError("config needs an 'experiment' field")
    exp = config["experiment"]
    if exp not in {"theorem-a", "theorem-b", "theorem-c", "buckley"}:
        raise DomainError(f"unknown experiment {exp!r}")
    wf = config.get("weight_family", {"type": "constant", "alpha_grid": [0.0]})
    unknown = set(wf) - WEIGHT_FAMILY_KEYS
    if unknown:
        raise DomainError(f"unknown weight_family keys: {sorted(unknown)}")
    if wf.get("type", "power") not in {"power", "constant"}:
        raise DomainError(f"unknown weight family type {wf.get('type')!r}")
    plot = config.get("plot")
    if plot is not None:
        unknown = set(plot) - {"x", "y", "out"}
        if unknown:
            raise DomainError(f"unknown plot keys: {sorted(unknown)}")
        if "out" not in plot:
            raise DomainError("plot needs an 'out' path")
    out = {
        "experiment": exp,
        "n": int(config.get("n", 1)),
        "L": int(config.get("L", 8)),
        "m": int(config.get("m", 1)),
        "p0": config.get("p0", 1.0),
        "p": list(config.get("p", [2.0])),
        "k": config.get("k", [0]),
        "weight_family": {"type": wf.get("type", "power"),
                          "alpha_grid": list(wf.get("alpha_grid", [0.0]))},
        "trials": int(config.get("trials", 8)),
        "seed": int(config.get("seed", 0)),
        "out": config.get("out"),
        "plot": config.get("plot"),
        "jobs": int(config.get("jobs", 1)),
    }
    if not isinstance(out["k"], list):
        out["k"] = [int(out["k"])]
    return out


def _grid_points(cfg: dict) -> list[dict]:
    exp = cfg["experiment"]
    pts = []
    if exp == "theorem-a":
        for k in cfg["k"]:
            pts.append({"k": int(k)})
    else:
        for alpha in cfg["weight_family"]["alpha_grid"]:
            pts.append({"alpha": float(alpha)})
    return pts


def _run_point(cfg: dict, point: dict, point_index: int) -> list[CertificationRecord]:
    n, L, m = cfg["n"], cfg["L"], cfg["m"]
    trials = cfg["trials"]
    seed_seq = np.random.SeedSequence([cfg["seed"], point_index])
    rng = np.random.default_rng(seed_seq)
    exp = cfg["experiment"]
    records: list[CertificationRecord] = []
    if exp == "buckley":
        alpha = point["alpha"]
        w = (power_weight(alpha, n=n, L=L) if cfg["weight_family"]["type"] == "power"
             else GridFunction.constant(n, L, 1.0))
        p = cfg["p"][0]
        for ti in range(trials):
            f = samples.random_function(rng, n, L)
            rec = certify_buckley(w, p, f, seed=cfg["seed"])
            rec.params["alpha"] = alpha
            rec.params["trial"] = ti
            records.append(rec)
        return records
    if exp == "theorem-a":
        k = point["k"]
        p = cfg["p"][0]
        for ti in range(trials):
            a = samples.random_carleson(rng, n, L, k_grid=k)
            fs = [samples.random_function(rng, n, L) for _ in range(m)]
            rec = certify_theorem_a(a, k, cfg["p0"], fs, p, seed=cfg["seed"])
            rec.params["trial"] = ti
            if not rec.degenerate:
                records.append(rec)
        return records
    # theorem-b / theorem-c share the weight grid
    alpha = point["alpha"]
    exponents = tuple(cfg["p"]) if len(cfg["p"]) == m else tuple([cfg["p"][0]] * m)
    if cfg["weight_family"]["type"] == "constant":
        ones = tuple(GridFunction.constant(n, L, 1.0) for _ in range(m))
        t = WeightTuple(ones, exponents, p0=cfg["p0"])
    else:
        t = power_weight_tuple(alpha, exponents, cfg["p0"], n=n, L=L)
    if exp == "theorem-b":
        probes = [extremal_probe_tuple(t)]
        for ti in range(trials):
            if ti < len(probes):
                fs = probes[ti]
                kind = "extremal"
            else:
                fs = [samples.random_function(rng, n, L) for _ in range(m)]
                kind = "random"
            fam = samples.random_sparse_family(rng, n, L)
            rec = certify_theorem_b(fam, t, fs, seed=cfg["seed"])
            rec.params.update({"alpha": alpha, "trial": ti, "inputs": kind})
            if not rec.degenerate:
                records.append(rec)
        return records
    # theorem-c with the reference singular operator
    op = HilbertOperator()
    h2 = hilbert_h2_fit(L, cfg["p0"])
    for ti in range(trials):
        fs = [samples.random_function(rng, n, L) for _ in range(m)]
        rec = certify_theorem_c(op, t, fs, h2, seed=cfg["seed"])
        rec.params.update({"alpha": alpha, "trial": ti})
        if not rec.degenerate:
            records.append(rec)
    return records


@dataclass
class SweepResult:
    config: dict
    records: list[CertificationRecord]
    summary: list[dict]

    def ndjson(self) -> str:
        lines = [json.dumps(r.to_dict(), sort_keys=True) for r in self.records]
        return "\n".join(lines) + ("\n" if lines else "")

    def csv(self) -> str:
        buf = io.StringIO()
        if not self.summary:
            return ""
        cols = list(self.summary[0])
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for row in self.summary:
            writer.writerow(row)
        return buf.getvalue()


def sweep(config: dict, done_keys: set | None = None) -> SweepResult:
    """Run the experiment grid described by ``config`` deterministically.

    Points run independently (thread pool when jobs > 1) and merge in grid
    order, so outputs are byte-identical for a fixed seed regardless of the
    parallelism degree.  Records whose key appears in ``done_keys`` are
    skipped, which makes interrupted sweeps resumable.
    """
    cfg = validate_config(config)
    points = _grid_points(cfg)
    results: dict[int, list[CertificationRecord]] = {}
    if cfg["jobs"] > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg["jobs"]) as pool:
            futs = {i: pool.submit(_run_point, cfg, pt, i) for i, pt in enumerate(points)}
            for i, fut in futs.items():
                results[i] = fut.result()
    else:
        for i, pt in enumerate(points):
            results[i] = _run_point(cfg, pt, i)
    records: list[CertificationRecord] = []
    for i in range(len(points)):
        records.extend(results[i])
    if done_keys:
        records = [r for r in records if r.key() not in done_keys]
    summary = []
    for i, pt in enumerate(points):
        recs = results[i]
        ratios = sorted(r.ratio for r in recs if math.isfinite(r.ratio))
        row = {"experiment": cfg["experiment"], **pt, "records": len(recs)}
        row["ratio_max"] = max(ratios) if ratios else 0.0
        row["ratio_median"] = ratios[len(ratios) // 2] if ratios else 0.0
        summary.append(row)
    return SweepResult(cfg, records, summary)
