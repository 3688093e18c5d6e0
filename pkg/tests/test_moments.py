import pytest
from mpmath import mp, mpf

from conftest import hp_diff
from lfmoments.precision import make_context, DomainError, PrecisionContext
from lfmoments.moments import (
    MOMENT_CONTEXT, md_twist_limit, diagonal_term, nondiagonal_term,
    error_terms, brute_lhs, twisted_moment_check, bump, theorem1_report,
    moment_breakdown, weight_data, _md_at,
)

FAST = PrecisionContext(128, 1e-10)


def test_md_limit_matches_symbolic():
    # independent symbolic u->0 limit:
    # ((3/2)gamma - (3/2)log 2pi + pi/4 - log j + (psi(m-1/4)+psi(m+1/4))/2)/sqrt(j)
    for m, j in ((6, 1), (6, 2), (10, 3)):
        v = md_twist_limit(m, j, MOMENT_CONTEXT)
        with mp.workprec(220):
            ref = ((mpf(3) / 2 * mp.euler - mpf(3) / 2 * mp.log(2 * mp.pi)
                    + mp.pi / 4 - mp.log(j)
                    + (mp.digamma(m - mpf(1) / 4) + mp.digamma(m + mpf(1) / 4)) / 2)
                   / mp.sqrt(j))
            assert hp_diff(v.mid, ref) <= v.rad + mpf(1e-12), (m, j)


def test_md_extrapolation_consistency():
    # Richardson from (1e-3, 1e-4) vs direct average at 1e-5 agree to ~1e-12
    m, j = 6, 1
    with mp.workprec(220):
        a1 = (_md_at(m, j, 1e-3, MOMENT_CONTEXT) + _md_at(m, j, -1e-3, MOMENT_CONTEXT)) * mpf(0.5)
        a2 = (_md_at(m, j, 1e-4, MOMENT_CONTEXT) + _md_at(m, j, -1e-4, MOMENT_CONTEXT)) * mpf(0.5)
        w1, w2 = mpf(1e-3) ** 2, mpf(1e-4) ** 2
        rich = (a2 * w1 - a1 * w2) / (w1 - w2)
        a3 = (_md_at(m, j, 1e-5, MOMENT_CONTEXT) + _md_at(m, j, -1e-5, MOMENT_CONTEXT)) * mpf(0.5)
        assert abs(rich.mid - a3.mid) < mpf(1e-10)
        v = md_twist_limit(m, j, MOMENT_CONTEXT)
        assert hp_diff(v.mid, rich.mid) <= v.rad + rich.rad + mpf(1e-12)


def test_diagonal_closed_value_and_psi_band():
    v = diagonal_term(10, "closed", MOMENT_CONTEXT)
    with mp.workprec(220):
        ref = mp.zeta(mpf(3) / 2) * (-3 * mp.log(2 * mp.pi) + mp.pi / 2 + 3 * mp.euler
                                     + 2 * mp.zeta(mpf(3) / 2, derivative=1) / mp.zeta(mpf(3) / 2)
                                     + mp.digamma(mpf(10) - 0.25) + mp.digamma(mpf(10) + 0.25))
        assert hp_diff(v.mid, ref) <= v.rad + mpf(1e-12)
    # the psi part tracks 2 log m (the full closed value does NOT: the
    # constant block is -5.22, making closed(6) negative)
    with mp.workprec(120):
        for m in (6, 10, 20):
            psis = mp.digamma(m - mpf(1) / 4) + mp.digamma(m + mpf(1) / 4)
            assert 0.5 <= psis / (2 * mp.log(m)) <= 2


def test_diagonal_series_vs_closed_gap_is_contour_remainder():
    # companion to the (defective) m^-5 criterion: closed + remainder = series,
    # remainder computed as the independently-evaluated shifted-contour integral
    m = 6
    closed = diagonal_term(m, "closed", MOMENT_CONTEXT)
    series = diagonal_term(m, "series", MOMENT_CONTEXT)
    with mp.workprec(240):
        a = mpf(2)  # shift, 0 < a < m

        def zeta_sum_block(s):
            cm = (mpf(3) / 2 * mp.euler - mpf(3) / 2 * mp.log(2 * mp.pi) + mp.pi / 4
                  + (mp.digamma(m - mpf(1) / 4) + mp.digamma(m + mpf(1) / 4)) / 2)
            return cm * mp.zeta(mpf(3) / 2 + 2 * s) + mp.zeta(mpf(3) / 2 + 2 * s, derivative=1)

        def integrand(t):
            s = mp.mpc(-a, t)
            g = (s * s - mpf(1) / 16) ** 2 * 256
            return (mp.gamma(m + s) / mp.gamma(m) * g * mp.power(2 * mp.pi, -s)
                    * zeta_sum_block(s) / s)

        remainder = 2 * (mp.quad(integrand, [-40, -10, 0, 10, 40]) / (2 * mp.pi)).real
        gap = series.mid - closed.mid
        assert abs(gap - remainder) < mpf(1e-8), (gap, remainder)
    # and the faithful criterion quantity is numerically large at m = 6
    assert abs(series.mid - closed.mid) > 100


def test_nondiagonal_stability_and_reality():
    total, lg = nondiagonal_term(6, FAST)
    total2, lg2 = nondiagonal_term(6, MOMENT_CONTEXT)
    assert hp_diff(total.mid, total2.mid) <= total.rad + total2.rad
    assert not total.is_complex
    # curlyL(-4l)(1/2) real for l <= 100
    from lfmoments.quadl import curly_L
    for l in (1, 7, 25, 100):
        v = curly_L(-4 * l, 0.5, FAST)
        assert not v.value.is_complex


def test_error_terms_policy_equivalence():
    d1, d2 = error_terms(6, FAST, "direct")
    m1, m2 = error_terms(6, FAST, "mixed")
    assert hp_diff(d1.mid, m1.mid) <= d1.rad + m1.rad
    assert hp_diff(d2.mid, m2.mid) <= d2.rad + m2.rad
    # LG model radii dominate the mixed route
    assert m2.rad > d2.rad


def test_error_terms_zero_elision():
    # discriminants n^2-4l are always 0,1 mod 4: no vanishing terms occur,
    # so the elision branch changes nothing
    for l in (2, 5, 7):
        n = 1
        while n * n < 4 * l:
            assert (n * n - 4 * l) % 4 in (0, 1)
            n += 1


def test_twisted_check_weight12():
    chk = twisted_moment_check(6, 1, MOMENT_CONTEXT)
    assert abs(chk.residual.mid) <= mpf(1e-12)
    assert chk.exploratory is None
    # square twist exercises the diagonal branch; l=3 skips it
    chk4 = twisted_moment_check(6, 4, MOMENT_CONTEXT)
    chk3 = twisted_moment_check(6, 3, MOMENT_CONTEXT)
    assert abs(chk4.residual.mid) <= mpf(1e-12)
    assert abs(chk3.residual.mid) <= mpf(1e-12)
    with mp.workprec(200):
        md = md_twist_limit(6, 2, MOMENT_CONTEXT)
        gap = abs((chk4.rhs.mid - md.mid) - chk3.rhs.mid)  # not a relation; just both finite
        assert mp.isfinite(gap)


def test_twisted_check_exploratory_odd_m():
    chk = twisted_moment_check(9, 2, MOMENT_CONTEXT)  # weight 18
    assert chk.exploratory is not None
    assert set(chk.exploratory) == {"lemma31", "ndod"}
    # measured outcome (frozen): the (-1)^m convention matches, + does not
    assert chk.matched == "ndod"
    assert abs(chk.exploratory["ndod"].mid) <= mpf(1e-10) + chk.exploratory["ndod"].rad
    assert abs(chk.exploratory["lemma31"].mid) > mpf(0.1)


def test_brute_lhs_zero_cases():
    # dim 0 weight
    assert brute_lhs(5, 0.0, FAST).mid == 0
    # weight 18 = 2 mod 4: sign kills every term
    v = brute_lhs(9, 0.0, FAST)
    assert abs(v.mid) <= v.rad


def test_brute_lhs_precision_reproducibility():
    a = brute_lhs(6, 0.0, PrecisionContext(128, 1e-10))
    b = brute_lhs(6, 0.0, PrecisionContext(256, 1e-16))
    assert hp_diff(a.mid, b.mid) <= a.rad + b.rad


def test_bump_properties():
    h = bump(1.0, 2.0, FAST)
    assert h(1.0) == 0 and h(2.0) == 0
    assert h(0.5) == 0 and h(2.5) == 0
    assert h.H.mid > 0
    assert h(1.5) > 0
    # refinement stability is encoded in the radius
    h2 = bump(1.0, 2.0, MOMENT_CONTEXT)
    assert hp_diff(h.H.mid, h2.H.mid) <= h.H.rad + h2.H.rad + mpf(1e-20)
    with pytest.raises(DomainError):
        bump(2.0, 1.0, FAST)


def test_theorem1_smoke():
    h = bump(1.4, 2.2, FAST)
    rep = theorem1_report(16.0, h, PrecisionContext(128, 1e-7), kernel_policy="mixed")
    assert sorted(rep.breakdowns) == [6, 7, 8]
    # bookkeeping identity: lhs_avg is exactly the h-weighted breakdown sum
    with mp.workprec(220):
        acc = mpf(0)
        rad = mpf(0)
        for k, bd in rep.breakdowns.items():
            hv = rep.weights_h[k]
            tot = bd.M_D + bd.M_ND + bd.ET1 + bd.ET2 + bd.residual
            acc += (hv * tot).mid
            rad += (hv * tot).rad
        assert abs(rep.lhs_avg.mid - acc) <= rep.lhs_avg.rad + rad
    assert rep.residual_fit and rep.residual_fit[0][0] == 0


def test_theorem1_max_weight_guard():
    h = bump(1.0, 2.0, FAST)
    with pytest.raises(DomainError):
        theorem1_report(40.0, h, FAST, max_weight=36)


def test_parallel_matches_serial():
    h = bump(1.4, 2.2, FAST)
    ctx = PrecisionContext(96, 1e-6)
    serial = theorem1_report(16.0, h, ctx, kernel_policy="mixed", jobs=1)
    try:
        par = theorem1_report(16.0, h, ctx, kernel_policy="mixed", jobs=2)
    except (OSError, PermissionError) as exc:  # sandboxed environments
        pytest.skip(f"process pool unavailable: {exc}")
    assert par.lhs_avg.mid == serial.lhs_avg.mid
    assert par.lhs_avg.rad == serial.lhs_avg.rad
    for k in serial.breakdowns:
        assert par.breakdowns[k].lhs_brute.mid == serial.breakdowns[k].lhs_brute.mid
