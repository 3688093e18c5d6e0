import math
import random

import pytest
from mpmath import mp, mpf

from conftest import assert_close, hp_diff
from lfmoments.precision import make_context, DomainError
from lfmoments.kernels import (
    g_weight, hecke_afe_weight, afe_weight_closed, afe_weight_tail_bound,
    sym2_afe_weight, psi_kernel, psi_bound, phi_kernel, phi_envelope,
    phi_lg, phi_prefactor,
)

CTX = make_context(128, 1e-24)


def test_g_weight_values():
    with mp.workprec(120):
        assert g_weight(mpf(0), mpf(0)) == 1
        assert g_weight(mpf(1) / 4, mpf(0)) == 0
        assert g_weight(mpf(1), mpf(0)) == 225
        # zeros at +-(1/4 +- u/2)
        u = mpf(0.2)
        assert abs(g_weight(mpf(1) / 4 + u / 2, u)) < mpf(1e-30)


def test_g_weight_degenerate():
    with pytest.raises(DomainError):
        g_weight(mpf(1), mpf(0.5))


def test_afe_weight_contour_vs_closed_form():
    # dual-route: defining quadrature vs inverse-Mellin closed form
    for (m, l, u) in [(6, 1, 0.0), (6, 4, 0.0), (8, 2, 0.1), (12, 7, -0.2), (20, 3, 0.0)]:
        q = hecke_afe_weight(m, l, u, CTX)
        c = afe_weight_closed(m, l, u, CTX)
        assert hp_diff(q.mid, c.mid) <= q.rad + c.rad, (m, l, u)


def test_afe_weight_contour_shift_independence():
    rng = random.Random(11)
    for _ in range(10):
        m = rng.choice([6, 8, 10, 14])
        l = rng.randint(1, 9)
        a = hecke_afe_weight(m, l, 0.0, CTX, sigma=rng.uniform(0.5, 1.5))
        b = hecke_afe_weight(m, l, 0.0, CTX, sigma=rng.uniform(1.5, 3.0))
        assert hp_diff(a.mid, b.mid) <= a.rad + b.rad, (m, l)


def test_afe_weight_decay_bound():
    # m=6, l=10^6: |V| <= 1e-30 as a computed bound, not an evaluation
    bound = afe_weight_tail_bound(6, 10 ** 6)
    assert bound < mpf(1e-30)


def test_afe_weight_real_for_real_u():
    v = hecke_afe_weight(6, 1, 0.0, CTX)
    assert not v.value.is_complex or abs(v.mid.imag) <= v.rad


def test_sym2_weight_near_zero():
    # G(y) -> 1 at rate y^(1+s0): at y=1e-8 the first shifted-pole term is ~1e-11
    g = sym2_afe_weight(6, 1e-8, 0.5, CTX)
    assert hp_diff(g.mid, mpf(1)) < mpf(1e-10)
    g1 = sym2_afe_weight(6, 1e-12, 1.0, CTX)
    assert hp_diff(g1.mid, mpf(1)) < mpf(1e-20)


def test_sym2_weight_contour_shift():
    a = sym2_afe_weight(6, 2.0, 0.5, CTX, sigma=1.0)
    b = sym2_afe_weight(6, 2.0, 0.5, CTX, sigma=2.0)
    assert hp_diff(a.mid, b.mid) <= a.rad + b.rad


def test_sym2_weight_decay():
    # decay of the e^{s^2}-smoothed cutoff is quasi-polynomial
    # (exp(-log(y/C)^2/4)); measured against a doubled-contour cross-check
    m = 6
    g = sym2_afe_weight(m, 60.0, 0.5, CTX, sigma=3.0)
    g2 = sym2_afe_weight(m, 60.0, 0.5, CTX, sigma=6.0)
    assert abs(g.mid) < mpf(0.01)
    assert hp_diff(g.mid, g2.mid) <= g.rad + g2.rad
    # |G| <= 1e-25 holds far out; certified value plus radius
    far = sym2_afe_weight(m, 1e8, 0.5, CTX, sigma=7.0)
    assert abs(far.mid) + far.rad < mpf(1e-25)


def test_sym2_weight_domain():
    with pytest.raises(DomainError):
        sym2_afe_weight(6, -1.0, 0.5, CTX)
    with pytest.raises(DomainError):
        sym2_afe_weight(6, 1.0, 0.75, CTX)


def test_psi_kernel_zero_and_oracle():
    assert psi_kernel(6, 0.0, CTX).mid == 0
    p = psi_kernel(6, 0.9, CTX)
    hi = psi_kernel(6, 0.9, make_context(512, 1e-60))
    assert hp_diff(p.mid, hi.mid) < mpf(1e-24)


def test_psi_kernel_ode_residual():
    # hypergeometric ODE residual via central differences at matched precision
    m, x = 6, mpf(0.5)
    a, b, c = m - mpf(1) / 4, m + mpf(1) / 4, mpf(2 * m)
    ctx = make_context(320, 1e-70)
    h = mpf(1e-14)

    def F(t):
        return psi_kernel(m, t, ctx).mid / (t ** m
               * mp.gamma(a) * mp.gamma(b) / mp.gamma(c))

    with mp.workprec(340):
        f0 = F(x)
        fp = (F(x + h) - F(x - h)) / (2 * h)
        fpp = (F(x + h) - 2 * f0 + F(x - h)) / (h * h)
        resid = x * (1 - x) * fpp + (c - (a + b + 1) * x) * fp - a * b * f0
        assert abs(resid) / abs(a * b * f0) < mpf(1e-20)


def test_psi_bound_dominates():
    for x in (0.1, 0.5, 0.9):
        v = psi_kernel(6, x, CTX)
        assert abs(v.mid) <= psi_bound(6, x)


def test_phi_kernel_at_zero():
    # Phi_m(0) = Gamma(m-1/4)Gamma(3/4-m)/Gamma(1/2); Phi_1(0) = -4 Gamma(3/4)^2/sqrt(pi)
    v = phi_kernel(2, 0.0, CTX)
    with mp.workprec(300):
        ref = mp.gamma(mpf(2) - mpf(1) / 4) * mp.gamma(mpf(3) / 4 - 2) / mp.sqrt(mp.pi)
        assert_close(v.mid, ref, 1e-24)
    # the m=1 prefactor identity via the gamma recursion
    with mp.workprec(300):
        c1 = mp.gamma(mpf(3) / 4) * mp.gamma(-mpf(1) / 4) / mp.sqrt(mp.pi)
        ref1 = -4 * mp.gamma(mpf(3) / 4) ** 2 / mp.sqrt(mp.pi)
        assert_close(c1, ref1, 1e-40)


def test_phi_kernel_oracle_512():
    v = phi_kernel(6, 0.9, CTX)
    hi = phi_kernel(6, 0.9, make_context(512, 1e-60))
    assert hp_diff(v.mid, hi.mid) < mpf(1e-24)


def test_phi_kernel_ode_residual():
    m, x = 6, mpf(0.3)
    a, b, c = m - mpf(1) / 4, mpf(3) / 4 - m, mpf(1) / 2
    ctx = make_context(320, 1e-70)
    h = mpf(1e-14)

    def F(t):
        return phi_kernel(m, t, ctx).mid

    with mp.workprec(340):
        f0 = F(x)
        fp = (F(x + h) - F(x - h)) / (2 * h)
        fpp = (F(x + h) - 2 * f0 + F(x - h)) / (h * h)
        resid = x * (1 - x) * fpp + (c - (a + b + 1) * x) * fp - a * b * f0
        assert abs(resid) / abs(a * b * f0) < mpf(1e-20)


def test_phi_envelope_certified():
    rng = random.Random(5)
    for _ in range(25):
        m = rng.choice([4, 6, 10, 20])
        x = rng.uniform(0.0, 0.95)
        v = phi_kernel(m, x, CTX)
        assert abs(v.mid) <= phi_envelope(m, x), (m, x)


def test_phi_radius_soundness_grid():
    # re-evaluation at 4x precision lands inside the reported radius
    for m in (6, 12):
        for x in (0.1, 0.5, 0.8):
            v = phi_kernel(m, x, make_context(96, 1e-18))
            hi = phi_kernel(m, x, make_context(384, 1e-70))
            assert hp_diff(v.mid, hi.mid) <= v.rad


def test_phi_lg_domain_checks():
    with pytest.raises(DomainError):
        phi_lg(20, 10, 25, 1, CTX)  # n^2 = 4l turning point
    with pytest.raises(DomainError):
        phi_lg(20, 11, 25, 1, CTX)  # beyond the turning point
    with pytest.raises(DomainError):
        phi_lg(20, 5, 100, 4, CTX)  # unimplemented order


def test_phi_lg_matches_direct_within_model():
    # m=40, l=1000, n=31: order 1 within C/m of direct
    m, n, l = 40, 31, 1000
    direct = phi_kernel(m, n * n / (4 * l), CTX)
    lg = phi_lg(m, n, l, 1, CTX)
    # the model radius must cover the true discrepancy
    assert hp_diff(lg.mid, direct.mid) <= lg.rad
    rel = hp_diff(lg.mid, direct.mid) / abs(direct.mid)
    assert rel <= mpf(0.07) / m  # C measured ~0.068, frozen in config


def test_phi_lg_doubling_halves_discrepancy():
    # doubling m at fixed xi gives ratio in [0.3, 0.7] (grid RMS)
    grid = [(n, 1000) for n in range(8, 50, 2)]
    prev = None
    for m in (20, 40, 80):
        num = mpf(0)
        den = mpf(0)
        with mp.workprec(200):
            for (n, l) in grid:
                d = phi_kernel(m, n * n / (4 * l), CTX).mid
                a = phi_lg(m, n, l, 1, CTX).mid
                num += (a - d) ** 2
                den += d ** 2
            disc = mp.sqrt(num / den)
        if prev is not None:
            assert 0.3 <= disc / prev <= 0.7, (m, disc, prev)
        prev = disc


def test_phi_lg_order2_better_than_order1():
    m, n, l = 40, 19, 1000
    d = phi_kernel(m, n * n / (4 * l), CTX)
    e1 = hp_diff(phi_lg(m, n, l, 1, CTX).mid, d.mid)
    e2 = hp_diff(phi_lg(m, n, l, 2, CTX).mid, d.mid)
    assert e2 < e1 / 5


def test_phi_lg_xi_small_angle_limit():
    # xi -> (pi/2)^2 as n^2/(4l) -> 0: check through the returned value scale
    with mp.workprec(120):
        w = mp.acos(mpf(1) / (2 * mp.sqrt(mpf(10 ** 6))))
        assert abs(w - mp.pi / 2) < mpf(1e-2)


def test_kernel_radius_soundness_sampled_grid():
    # invariant: 4x precision re-evaluation inside the reported radius,
    # for every kernel on a sampled grid
    lo = make_context(96, 1e-14)
    hi = make_context(384, 1e-60)
    for (m, l, u) in ((6, 2, 0.0), (10, 5, 0.1)):
        a = hecke_afe_weight(m, l, u, lo)
        b = afe_weight_closed(m, l, u, hi)
        assert hp_diff(a.mid, b.mid) <= a.rad
    for (m, x) in ((6, 0.4), (12, 0.75)):
        a = psi_kernel(m, x, lo)
        b = psi_kernel(m, x, hi)
        assert hp_diff(a.mid, b.mid) <= a.rad
    for (m, y, s0) in ((6, 2.5, 0.5), (8, 0.3, 1.0)):
        a = sym2_afe_weight(m, y, s0, lo)
        b = sym2_afe_weight(m, y, s0, hi)
        assert hp_diff(a.mid, b.mid) <= a.rad
    a = phi_lg(40, 31, 1000, 2, lo)
    b = phi_lg(40, 31, 1000, 2, hi)
    assert hp_diff(a.mid, b.mid) <= a.rad
