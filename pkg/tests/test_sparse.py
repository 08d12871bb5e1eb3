import math

import numpy as np
import pytest

from sparselab.grid import (
    DomainError,
    DyadicCube,
    GridFunction,
    all_cubes,
    average,
    dilate,
    root_cube,
    weak_norm,
    weighted_norm,
)
from sparselab.samples import (
    random_carleson,
    random_function,
    random_sparse_family,
    random_weight,
    rng_from,
)
from sparselab.sparse import (
    CarlesonSequence,
    SparseFamily,
    SparsityError,
    beta_sequence,
    carleson_embedding_check,
    cz_decompose,
    dominate,
    dyadic_maximal,
    eval_sparse_A,
    eval_sparse_T,
    greedy_witness,
    measure_weak_norm,
    packing,
    select_sparse,
    slice_scales,
    verify_carleson,
    verify_sparse,
)

R1 = root_cube(1)


def seq(coeffs, root=R1):
    return CarlesonSequence(root, coeffs)


def chain_family(L=4):
    cubes = [DyadicCube(0, (0,)), DyadicCube(1, (0,)), DyadicCube(2, (0,))]
    return greedy_witness(cubes, 1, L)


# --- packing / verify_carleson -------------------------------------------------


def oracle_packing(a, maxlevel):
    best, worst = -1.0, None
    for Q in all_cubes(a.dim, maxlevel):
        s = sum(alpha * T.volume for T, alpha in a.items() if Q.contains(T))
        r = s / Q.volume
        if r > best + 1e-15:
            best, worst = r, Q
    return best, worst


def test_verify_carleson_delta():
    a = seq({R1: 1.0})
    rep = verify_carleson(a)
    assert rep.ok and rep.worst_cube == R1 and rep.ratio == pytest.approx(1.0)


def test_verify_carleson_overpacked():
    a = seq({R1: 1.0, DyadicCube(1, (0,)): 1.0})
    rep = verify_carleson(a)
    assert not rep.ok
    assert rep.ratio == pytest.approx(1.5)
    assert rep.worst_cube == R1
    b, w = oracle_packing(a, 3)
    assert rep.ratio == pytest.approx(b) and rep.worst_cube == w


def test_verify_carleson_zero():
    assert verify_carleson(seq({})).ok


def test_verify_carleson_rejects_negative():
    with pytest.raises(DomainError):
        seq({R1: -0.5})


def test_packing_matches_oracle_random():
    rng = rng_from(42)
    for _ in range(10):
        a = random_carleson(rng, 1, 4)
        got, wit = packing(a)
        exp, ewit = oracle_packing(a, 4)
        assert got == pytest.approx(exp)
        assert got <= 1.0 + 1e-12  # normalized on construction


# --- sparse family / witness ----------------------------------------------------


def test_verify_sparse_single():
    fam = greedy_witness([R1], 1, 3)
    assert verify_sparse(fam)
    assert fam.witness[R1].size == 8


def test_verify_sparse_chain_counts():
    fam = chain_family()
    assert verify_sparse(fam)
    # cell-count oracle: E of [0,1) is [1/2,1), E of [0,1/2) is [1/4,1/2)
    assert fam.witness[DyadicCube(0, (0,))].size == 8
    assert fam.witness[DyadicCube(2, (0,))].size == 4


def test_verify_sparse_rejects_small_witness():
    fam = chain_family()
    bad = dict(fam.witness)
    bad[DyadicCube(0, (0,))] = np.array([12], dtype=np.int64)
    assert not verify_sparse(SparseFamily(1, 4, bad))


def test_verify_sparse_rejects_overlap():
    w = {
        DyadicCube(1, (0,)): np.arange(0, 4, dtype=np.int64),
        DyadicCube(1, (1,)): np.arange(3, 8, dtype=np.int64),
    }
    w[DyadicCube(1, (0,))] = np.arange(0, 4)
    fam = SparseFamily(1, 3, w)
    assert not verify_sparse(fam)


def test_greedy_witness_failure():
    cubes = [R1, DyadicCube(1, (0,)), DyadicCube(1, (1,))]
    with pytest.raises(SparsityError) as err:
        greedy_witness(cubes, 1, 4)
    assert err.value.cube == R1


def test_random_families_sparse():
    rng = rng_from(9)
    for _ in range(25):
        fam = random_sparse_family(rng, 1, 6)
        assert verify_sparse(fam)
    for _ in range(10):
        fam = random_sparse_family(rng, 2, 4)
        assert verify_sparse(fam)


# --- sparse operators ------------------------------------------------------------


def oracle_eval_A(items, rootlvl, k, p0, fs):
    n, L = fs[0].dim, fs[0].level
    out = np.zeros((1 << L,) * n)
    for Q, alpha in items:
        if Q.level - k < rootlvl:
            continue
        A = Q.ancestor(k)
        coef = alpha
        for f in fs:
            coef *= average(f, A, p0)
        out[Q.cell_slices(L)] += coef
    return out


def test_eval_sparse_A_unit_family():
    fam = greedy_witness([R1], 1, 4)
    f = GridFunction.constant(1, 4, 1.0)
    out = eval_sparse_A(fam, 0, 1.0, [f])
    assert np.allclose(out.values, 1.0)


def test_eval_sparse_A_ancestor():
    fam = greedy_witness([DyadicCube(1, (0,))], 1, 4)
    f = GridFunction.indicator(1, 4, DyadicCube(1, (1,)))
    out = eval_sparse_A(fam, 1, 1.0, [f])
    assert np.allclose(out.values[:8], 0.5)
    assert np.allclose(out.values[8:], 0.0)


def test_eval_sparse_A_bilinear():
    fam = greedy_witness([R1], 1, 4)
    f = GridFunction.indicator(1, 4, DyadicCube(1, (0,)))
    out = eval_sparse_A(fam, 0, 2.0, [f, f])
    assert np.allclose(out.values, 0.5)


def test_eval_sparse_A_matches_oracle():
    rng = rng_from(5)
    a = random_carleson(rng, 1, 5)
    fs = [random_function(rng, 1, 5), random_function(rng, 1, 5)]
    for k in (0, 1, 2):
        got = eval_sparse_A(a, k, 1.5, fs).values
        exp = oracle_eval_A(list(a.items()), 0, k, 1.5, fs)
        assert np.allclose(got, exp, rtol=1e-12)


def test_eval_sparse_A_sublinear_scaling():
    rng = rng_from(6)
    a = random_carleson(rng, 1, 5)
    f1, f2 = random_function(rng, 1, 5), random_function(rng, 1, 5)
    base = eval_sparse_A(a, 1, 2.0, [f1, f2]).values
    for lam in (-3.0, 0.5):
        scaled = eval_sparse_A(a, 1, 2.0, [f1 * lam, f2]).values
        assert np.allclose(scaled, abs(lam) * base, rtol=1e-12)


def test_eval_sparse_A_monotone_in_p0():
    rng = rng_from(61)
    a = random_carleson(rng, 1, 5)
    fs = [random_function(rng, 1, 5)]
    lo = eval_sparse_A(a, 0, 1.0, fs).values
    hi = eval_sparse_A(a, 0, 2.0, fs).values
    assert np.all(hi >= lo - 1e-12)


def test_eval_sparse_T_matches_A_at_k0():
    rng = rng_from(7)
    a = random_carleson(rng, 1, 5)
    fs = [random_function(rng, 1, 5)]
    t = eval_sparse_T(a, 0, 1.5, fs).values
    s = eval_sparse_A(a, 0, 1.5, fs).values
    assert np.allclose(t, s)


def test_eval_sparse_T_wrap():
    fam = greedy_witness([DyadicCube(2, (0,))], 1, 5)
    f = GridFunction.indicator(1, 5, DyadicCube(2, (3,)))
    out = eval_sparse_T(fam, 2, 1.0, [f])
    # dilate saturates to the torus, coefficient is the global average
    assert np.allclose(out.values[:8], 0.25)
    mask = dilate(DyadicCube(2, (0,)), 2, 5)
    assert mask.all()


def test_eval_sparse_T_dilate_cells():
    fam = greedy_witness([DyadicCube(2, (0,))], 1, 5)
    f = GridFunction.indicator(1, 5, DyadicCube(3, (7,)))  # [7/8, 1)
    out = eval_sparse_T(fam, 1, 1.0, [f])
    # 2Q = [7/8, 1) + [0, 3/8), captures the whole support: average 1/4
    assert np.allclose(out.values[:8], 0.25)


# --- slicing ----------------------------------------------------------------------


def test_slice_k1_single_piece():
    a = seq({DyadicCube(2, (1,)): 0.5, DyadicCube(3, (5,)): 0.25})
    pieces = slice_scales(a, 1)
    assert len(pieces) == 1
    assert pieces[0].ell == 0 and pieces[0].root == R1


def test_slice_reassembly():
    rng = rng_from(8)
    fs = [random_function(rng, 1, 6)]
    a = random_carleson(rng, 1, 6)
    for k in (2, 3):
        pieces = slice_scales(a, k)
        total = np.zeros(1 << 6)
        for p in pieces:
            total += eval_sparse_A(p.seq, k, 1.0, fs).values
        assert np.allclose(total, eval_sparse_A(a, k, 1.0, fs).values, atol=1e-13)


def test_slice_levels_pattern():
    a = seq({DyadicCube(2, (1,)): 0.3, DyadicCube(3, (5,)): 0.2})
    pieces = slice_scales(a, 2)
    ells = sorted(p.ell for p in pieces)
    assert ells == [0, 1]
    for p in pieces:
        for Q in p.seq.coeffs:
            assert (Q.level - p.root.level) % 2 == 0
            assert Q.level - p.root.level >= 2


def test_slice_empty():
    assert slice_scales(seq({}), 2) == []


# --- selection --------------------------------------------------------------------


def test_select_hand_trace():
    a = seq({R1: 1.0})
    fs = [GridFunction.constant(1, 4, 1.0)]
    res = select_sparse(a, 0, 1.0, fs, cstar=4.0)
    assert res.family.cubes == (R1,)
    assert verify_sparse(res.family)
    assert res.pointwise_constant <= 4.0 + 1e-12


def test_select_zero_functions():
    rng = rng_from(10)
    a = random_carleson(rng, 1, 5)
    fs = [GridFunction.constant(1, 5, 0.0)]
    res = select_sparse(a, 0, 1.0, fs, cstar=4.0)
    assert len(res.family) == 0
    assert res.pointwise_constant == 0.0


def test_select_rejects_negative_f():
    a = seq({R1: 1.0})
    f = GridFunction(1, 4, np.linspace(-1, 1, 16))
    with pytest.raises(DomainError):
        select_sparse(a, 0, 1.0, [f])


def test_select_rejects_off_grid_support():
    a = seq({DyadicCube(3, (1,)): 0.5})
    fs = [GridFunction.constant(1, 4, 1.0)]
    with pytest.raises(DomainError):
        select_sparse(a, 2, 1.0, fs)


def test_select_randomized_step3():
    # randomized sparsity verification across k, m, p0
    rng = rng_from(11)
    trials = 0
    for k in (0, 1, 2):
        for m in (1, 2):
            for p0 in (1.0, 1.5, 2.0):
                for _ in range(4):
                    a = random_carleson(rng, 1, 6, k_grid=k)
                    fs = [random_function(rng, 1, 6) for _ in range(m)]
                    res = select_sparse(a, k, p0, fs, seed=trials)
                    assert verify_sparse(res.family)
                    assert res.covered
                    trials += 1
    assert trials == 72


def test_select_domination_covers():
    rng = rng_from(12)
    a = random_carleson(rng, 1, 6, k_grid=2)
    fs = [random_function(rng, 1, 6)]
    res = select_sparse(a, 2, 1.0, fs)
    lhs = eval_sparse_A(a, 2, 1.0, fs).values
    rhs = eval_sparse_A(res.family, 0, 1.0, fs).values
    assert np.all(lhs <= res.pointwise_constant * rhs + 1e-12)


# --- carleson embedding ------------------------------------------------------------


def test_embedding_trivial():
    a = seq({R1: 1.0})
    f = GridFunction.constant(1, 4, 1.0)
    rep = carleson_embedding_check(a, 2.0, (2.0,), [f])
    assert rep.lhs == pytest.approx(1.0)
    assert rep.rhs == pytest.approx(2.0)
    assert rep.holds


def test_embedding_randomized():
    rng = rng_from(13)
    for _ in range(30):
        a = random_carleson(rng, 1, 5)
        f = random_function(rng, 1, 5)
        rep = carleson_embedding_check(a, 2.0, (2.0,), [f])
        assert rep.holds
    for _ in range(30):
        a = random_carleson(rng, 1, 5)
        f1, f2 = random_function(rng, 1, 5), random_function(rng, 1, 5)
        rep = carleson_embedding_check(a, 1.0, (2.0, 2.0), [f1, f2])
        assert rep.holds


def test_embedding_single_cell_slack():
    rng = rng_from(14)
    a = random_carleson(rng, 1, 5)
    f = GridFunction.indicator(1, 5, DyadicCube(5, (17,)))
    rep = carleson_embedding_check(a, 2.0, (2.0,), [f])
    assert rep.holds
    assert rep.lhs < 0.5 * rep.rhs


def test_embedding_rejects_mismatch():
    a = seq({R1: 1.0})
    f = GridFunction.constant(1, 4, 1.0)
    with pytest.raises(DomainError):
        carleson_embedding_check(a, 2.0, (3.0,), [f])


# --- beta sequence ------------------------------------------------------------------


def test_beta_identity_k0():
    a = seq({DyadicCube(2, (1,)): 0.5})
    assert beta_sequence(a, 0) is a


def test_beta_single_cube():
    R = DyadicCube(2, (1,))
    a = seq({R: 1.0})
    b = beta_sequence(a, 2)
    assert b.coeffs == {R1: pytest.approx(2.0**-2)}


def test_beta_preserves_carleson():
    rng = rng_from(15)
    for k in (1, 2):
        for _ in range(10):
            a = random_carleson(rng, 1, 6)
            b = beta_sequence(a, k)
            assert verify_carleson(b).ok


# --- CZ decomposition ----------------------------------------------------------------


def test_cz_example():
    f = GridFunction(1, 4, 4.0 * (np.arange(16) < 4))
    dec = cz_decompose([f], 1.5, 1.0, 1, R1)
    assert dec.short_circuit == []
    assert dec.stopping[0] == [DyadicCube(1, (0,))]
    b = dec.bad[0].values
    assert np.allclose(b[:8], f.values[:8] - 2.0)
    assert np.allclose(b[8:], 0.0)
    assert np.allclose(dec.good[0].values[:8], 2.0)
    assert dec.verify([f])


def test_cz_zero():
    f = GridFunction.constant(1, 4, 0.0)
    dec = cz_decompose([f], 1.0, 1.0, 1, R1)
    assert dec.stopping[0] == []
    assert np.allclose(dec.bad[0].values, 0.0)
    assert dec.verify([f])


def test_cz_no_stopping_below_height():
    f = GridFunction.constant(1, 4, 0.5)
    dec = cz_decompose([f], 1.0, 1.0, 1, R1)
    assert dec.stopping[0] == []
    assert np.allclose(dec.good[0].values, f.values)
    assert dec.verify([f])


def test_cz_short_circuit():
    f = GridFunction.constant(1, 4, 5.0)
    dec = cz_decompose([f], 1.0, 1.0, 1, R1)
    assert dec.short_circuit == [0]


def test_cz_invariants_randomized():
    rng = rng_from(16)
    done = 0
    while done < 25:
        f1, f2 = random_function(rng, 1, 6), random_function(rng, 1, 6)
        lam = float(rng.uniform(0.3, 1.5))
        dec = cz_decompose([f1, f2], lam, 1.5, 2, R1)
        if dec.short_circuit:
            continue
        assert dec.verify([f1, f2])
        done += 1


def test_cz_rejects_bad_lambda():
    f = GridFunction.constant(1, 3, 1.0)
    with pytest.raises(DomainError):
        cz_decompose([f], 0.0, 1.0, 1, R1)


# --- weak norm measurement ------------------------------------------------------------


def test_measure_weak_norm_delta():
    a = seq({R1: 1.0})
    f = GridFunction.constant(1, 4, 1.0)
    out = eval_sparse_A(a, 0, 1.0, [f])
    assert weak_norm(out, 1.0) == pytest.approx(1.0)


def test_measure_weak_norm_contractive_single_family():
    a = seq({R1: 1.0})
    for m in (1, 2):
        val = measure_weak_norm(a, 0, 1.0, m, trials=20, seed=3)
        assert val <= 1.0 + 1e-9
        assert val == pytest.approx(1.0)


def test_measure_weak_norm_monotone_in_trials():
    rng = rng_from(17)
    a = random_carleson(rng, 1, 5)
    v1 = measure_weak_norm(a, 1, 1.0, 1, trials=3, seed=5)
    v2 = measure_weak_norm(a, 1, 1.0, 1, trials=9, seed=5)
    assert v2 >= v1 - 1e-15


def test_measure_weak_norm_deterministic():
    rng = rng_from(18)
    a = random_carleson(rng, 1, 5)
    assert measure_weak_norm(a, 0, 1.5, 2, 5, seed=7) == measure_weak_norm(a, 0, 1.5, 2, 5, seed=7)


# --- dyadic maximal --------------------------------------------------------------------


def oracle_maximal(f, p0):
    n, L = f.dim, f.level
    out = np.zeros((1 << L,) * n)
    for Q in all_cubes(n, L):
        val = average(f, Q, p0)
        sl = Q.cell_slices(L)
        out[sl] = np.maximum(out[sl], val)
    return out


def test_maximal_constant():
    f = GridFunction.constant(1, 4, 1.0)
    assert np.allclose(dyadic_maximal(f).values, 1.0)


def test_maximal_indicator():
    f = GridFunction.indicator(1, 4, DyadicCube(2, (0,)))
    out = dyadic_maximal(f).values
    assert np.allclose(out[8:], 0.25)
    assert np.allclose(out, oracle_maximal(f, 1.0))


def test_maximal_matches_oracle():
    rng = rng_from(19)
    f = GridFunction(1, 5, rng.uniform(0, 2, 32))
    for p0 in (1.0, 2.0):
        assert np.allclose(dyadic_maximal(f, p0).values, oracle_maximal(f, p0))
    g = GridFunction(2, 3, rng.uniform(0, 2, 64))
    assert np.allclose(dyadic_maximal(g).values, oracle_maximal(g, 1.0))


def test_maximal_weighted_bound():
    rng = rng_from(20)
    for _ in range(40):
        f = GridFunction(1, 6, rng.normal(size=64))
        s = random_weight(rng, 1, 6)
        lhs = weighted_norm(dyadic_maximal(f, sigma=s), 2.0, s)
        rhs = 2.0 * weighted_norm(f, 2.0, s)
        assert lhs <= rhs * (1 + 1e-9)


def test_maximal_dominates_identity():
    rng = rng_from(201)
    f = GridFunction(1, 5, rng.uniform(0, 1, 32))
    assert np.all(dyadic_maximal(f).values >= np.abs(f.values) - 1e-12)


# --- full domination pipeline ------------------------------------------------------------


def test_dominate_k0():
    rng = rng_from(22)
    a = random_carleson(rng, 1, 5)
    fs = [random_function(rng, 1, 5)]
    res = dominate(a, 0, 1.0, fs)
    assert len(res.pieces) == 1
    assert res.covered
    assert math.isfinite(res.cell_constant)


def test_dominate_k2_random():
    rng = rng_from(23)
    for _ in range(5):
        a = random_carleson(rng, 1, 6, k_grid=2)
        fs = [random_function(rng, 1, 6), random_function(rng, 1, 6)]
        res = dominate(a, 2, 1.0, fs)
        assert res.covered
        for sel in res.selections:
            assert verify_sparse(sel.family)
        lhs = eval_sparse_A(a, 2, 1.0, fs).values
        rhs = sum(eval_sparse_A(s.family, 0, 1.0, fs).values for s in res.selections)
        assert np.all(lhs <= res.cell_constant * rhs + 1e-12)


def test_dominate_zero_input():
    rng = rng_from(24)
    a = random_carleson(rng, 1, 5)
    fs = [GridFunction.constant(1, 5, 0.0)]
    res = dominate(a, 1, 1.0, fs)
    assert res.cell_constant == 0.0


def test_select_and_dominate_2d():
    rng = rng_from(25)
    for k in (0, 1):
        a = random_carleson(rng, 2, 4, k_grid=k)
        fs = [random_function(rng, 2, 4)]
        res = dominate(a, k, 1.5, fs)
        assert res.covered
        for sel in res.selections:
            assert verify_sparse(sel.family)


def test_annulus_2d_disjoint():
    from sparselab.grid import Annulus

    Q = DyadicCube(3, (2, 5))
    L = 5
    seen = np.zeros((1 << L, 1 << L), dtype=int)
    for j in range(4):
        ring = Annulus(Q, j)
        if ring.is_empty():
            continue
        seen += ring.mask(L).astype(int)
    assert seen.max() <= 1


def test_dilate_form_dominated_by_selected_families():
    # single-grid stand-in for the dilate-to-ancestor reduction: the wrapped
    # dilate operator is covered by the selected families, with a measured
    # cell constant recorded here (approx. 2.6 at these seeds)
    rng = rng_from(55)
    worst = 0.0
    for k in (1, 2):
        for _ in range(10):
            a = random_carleson(rng, 1, 8, k_grid=k)
            fs = [random_function(rng, 1, 8)]
            res = dominate(a, k, 1.0, fs)
            lhs = eval_sparse_T(a, k, 1.0, fs).values
            rhs = sum(eval_sparse_A(s.family, 0, 1.0, fs).values for s in res.selections)
            pos = rhs > 0
            assert np.all(lhs[~pos] <= 1e-12)
            worst = max(worst, float((lhs[pos] / rhs[pos]).max()))
    assert math.isfinite(worst)
    assert worst < 6.0
