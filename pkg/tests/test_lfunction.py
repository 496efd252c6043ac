"""Tests for twisted exponential sums and the classical Newton polygon."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from twistnp.lfunction import (
    BudgetExceededError,
    classical_sums_multi,
    exp_sum_Tadic,
    exp_sum_classical,
    l_polynomial,
    newton_polygon_classical,
    trace_count_matrix,
)
from twistnp.padic import make_context, poly_pow_mod
from twistnp.polygon import Params, hodge_polygon, lies_above, lower_bound_polygon

F = Fraction


def _brute_force_counts(p, m, modulus, g, lam_vec, d_exp, e_exp, c):
    """Reference enumeration with plain polynomial arithmetic."""
    from twistnp.lfunction import _ff_trace_row
    from twistnp.padic import poly_mul_mod

    tr = _ff_trace_row(modulus, p, m)
    counts = np.zeros((p, c), dtype=np.int64)
    z = (1,)
    for j in range(p**m - 1):
        zd = poly_pow_mod(z, d_exp, modulus, p)
        ze = poly_pow_mod(z, e_exp, modulus, p)
        fz = poly_mul_mod(lam_vec, ze, modulus, p)
        fz = tuple((a + b) % p for a, b in
                   zip(zd + (0,) * (m - len(zd)), fz + (0,) * (m - len(fz))))
        t = int(sum(int(tr[i]) * fz[i] for i in range(m)) % p)
        counts[t, j % c] += 1
        z = poly_mul_mod(z, g, modulus, p)
    return counts


@pytest.mark.parametrize("p,m,c", [(5, 2, 1), (7, 2, 2), (11, 1, 1), (3, 4, 2)])
def test_trace_count_matrix_against_brute_force(p, m, c):
    ctx = make_context(p, m, 2)
    g = ctx.generator
    lam = g  # an arbitrary nonzero element
    got = trace_count_matrix(p, m, ctx.modulus, g, [lam], 3 if p != 3 else 4, 1, c)
    want = _brute_force_counts(p, m, ctx.modulus, g, lam, 3 if p != 3 else 4, 1, c)
    assert got.shape == (1, p, c)
    assert (got[0] == want).all()
    assert got.sum() == p**m - 1


def test_character_orthogonality():
    # sum over x of omega(x)^{-u}: q-1 for u = 0, else 0
    for (p, a, c, mu) in [(11, 1, 1, 1), (11, 1, 2, 1), (13, 1, 3, 2), (11, 2, 3, 1)]:
        pr = Params(p=p, a=a, d=3, e=2, c=c, mu=mu)
        s = exp_sum_classical(pr, 1)
        # the count matrix is uniform across character buckets per trace value
        big = s.big_ctx
        V = [big.teichmuller(poly_pow_mod(big.generator,
                                          ((-pr.u) * mm) % (pr.q - 1),
                                          big.modulus, big.p))
             for mm in range(c)]
        total = big.zero()
        for mm in range(c):
            total = total + V[mm] * int(s.counts[:, mm].sum())
        if pr.u == 0:
            assert total == big.from_int(pr.q - 1)
        else:
            assert total.is_zero()


def test_classical_sum_is_frobenius_invariant():
    # S_k over F_{q^k} is fixed by sigma^a; descent doubles as the check
    from twistnp.padic import RamifiedElem

    for (p, a, d, e, c, mu, lam, k) in [(11, 1, 3, 2, 1, 1, 2, 2),
                                        (7, 1, 3, 1, 2, 1, 1, 3),
                                        (11, 2, 3, 2, 3, 1, 5, 2)]:
        pr = Params(p=p, a=a, d=d, e=e, c=c, mu=mu, lam_index=lam)
        s = exp_sum_classical(pr, k)
        big = s.big_ctx
        comps = s.value_big.comps
        for _ in range(a):
            comps = tuple(big.frobenius(x) for x in comps)
        assert RamifiedElem(big, comps) == s.value_big


def test_exp_sum_budget():
    pr = Params(p=11, a=1, d=3, e=2, c=1, mu=1)
    with pytest.raises(BudgetExceededError):
        exp_sum_classical(pr, 3, budget=100)


def test_tadic_sum_degree_zero_and_one():
    # (1+T)^t at T = 0 gives character orthogonality; T^1 coefficient is
    # the trace-weighted character sum
    pr = Params(p=7, a=1, d=3, e=2, c=1, mu=1, lam_index=2)
    ts = exp_sum_Tadic(pr, 1, 3)
    base = make_context(7, 1, pr.a * pr.d + 8)
    assert ts.coeffs[0] == base.from_int(6)
    s1 = exp_sum_classical(pr, 1)
    # classical sum mod pi^2 equals c_0 + c_1 * pi
    lhs = s1.value
    rhs = base.ram_from_zq(ts.coeffs[0])
    pi_term = [base.zero()] * 6
    pi_term[1] = ts.coeffs[1]
    from twistnp.padic import RamifiedElem

    rhs = rhs + RamifiedElem(base, tuple(pi_term))
    assert lhs.congruent_mod_pi(rhs, 2)


@pytest.mark.parametrize(
    "p,a,d,e,c,mu,lam,k,J",
    [
        (7, 1, 3, 2, 1, 1, 2, 1, 5),
        (7, 1, 3, 2, 2, 1, 1, 2, 4),
        (11, 1, 3, 2, 1, 1, 3, 1, 6),
        (11, 2, 3, 2, 3, 1, 5, 1, 5),
    ],
)
def test_tadic_specializes_to_classical(p, a, d, e, c, mu, lam, k, J):
    pr = Params(p=p, a=a, d=d, e=e, c=c, mu=mu, lam_index=lam)
    ts = exp_sum_Tadic(pr, k, J)
    cs = exp_sum_classical(pr, k)
    base = cs.value.ctx
    from twistnp.padic import RamifiedElem

    acc = base.ram_zero()
    for jj in range(J, -1, -1):
        comps = list(acc.comps)
        # multiply by pi and add c_jj: Horner in pi
        if jj < J:
            shifted = [base.zero()] + comps[:-1]
            top = comps[-1]
            acc = RamifiedElem(base, shifted)
            if not top.is_zero():
                table = base.pi_xpow_table()[0]
                corr = RamifiedElem(base, tuple(base.from_int(t) * top for t in table))
                acc = acc + corr
        comps = list(acc.comps)
        comps[0] = comps[0] + ts.coeffs[jj]
        acc = RamifiedElem(base, comps)
    assert cs.value.congruent_mod_pi(acc, J + 1)


def test_l_polynomial_low_coefficients():
    pr = Params(p=11, a=1, d=3, e=2, c=1, mu=1, lam_index=1)
    data = l_polynomial(pr)
    base = data.coeffs[0].ctx
    assert data.coeffs[0] == base.ram_one()
    assert data.coeffs[1] == data.sums[0]
    two_l2 = data.coeffs[2] + data.coeffs[2]
    assert two_l2 == data.sums[0] * data.sums[0] + data.sums[1]


def test_newton_polygon_p_equiv_1_is_hodge():
    pr = Params(p=7, a=1, d=3, e=2, c=1, mu=1, lam_index=1)
    np_poly = newton_polygon_classical(pr)
    assert np_poly.slopes() == [F(0), F(1, 3), F(2, 3)]
    assert np_poly.values == hodge_polygon(pr, 3).values


def test_newton_polygon_p11_anchor_all_lambda():
    # e = d-1 and p > c(d^2-d+1) force equality with the bound
    pr0 = Params(p=11, a=1, d=3, e=2, c=1, mu=1)
    P = lower_bound_polygon(pr0, 3)
    assert P.slopes() == [F(0), F(2, 5), F(3, 5)]
    sums = classical_sums_multi(pr0, 1, list(range(10)))
    for lam in range(10):
        pr = Params(p=11, a=1, d=3, e=2, c=1, mu=1, lam_index=lam)
        np_poly = newton_polygon_classical(pr)
        assert np_poly.values == P.values, f"lambda index {lam}"
        assert sum(np_poly.slopes()) == 1


def test_extend_newton_polygon():
    from twistnp.lfunction import extend_newton_polygon
    from twistnp.polygon import Polygon

    base = Polygon((F(0), F(0), F(2, 5), F(1)))
    ext = extend_newton_polygon(base, 9)
    assert ext.values[:4] == base.values
    for n in range(6):
        assert ext.slope(n + 3) == ext.slope(n) + 1
    assert ext.is_convex()


def test_newton_polygon_degree_and_endpoint():
    for (p, a, d, e, c, mu, lam) in [(11, 1, 3, 2, 1, 1, 2), (13, 1, 4, 3, 1, 1, 1),
                                     (11, 1, 3, 2, 2, 1, 4)]:
        pr = Params(p=p, a=a, d=d, e=e, c=c, mu=mu, lam_index=lam)
        data = l_polynomial(pr)
        assert data.valuations[d] is not None
        np_poly = newton_polygon_classical(pr, data=data)
        P = lower_bound_polygon(pr, d)
        H = hodge_polygon(pr, d)
        assert np_poly.value(d) == P.value(d) == H.value(d)
        assert lies_above(np_poly, P).ok
