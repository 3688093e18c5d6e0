"""Central and edge L-values per eigenform, and the harmonic weight.

hecke_central evaluates (1 + eps) sum lambda(l) l^-1/2 V(l,u) with
eps = i^weight: the contour identity T (1 + eps) = L(f, 1/2) holds for both
signs, so weights that are 2 mod 4 return exactly 0 (the single sum T does
not vanish there and means nothing on its own).

sym2_value computes the AFE sum and its dual through the plain Gamma-kernel
weight (1/2 pi i) int L_inf(s0+s)/L_inf(s0) y^-s ds/s, evaluated by swapping
the (truncated) Dirichlet series with the contour.  The Gamma kernel decays
exponentially in y, so the certified truncation radius
2 zeta(2) M^(2-R)/(R-2) times the absolute weight integral is honest at
M ~ 10^2; the e^(s^2)-smoothed weight of sym2_afe_weight would need M ~ 10^6
for the same certified accuracy (its kernel decays only like
exp(-log^2(y)/4)), which is why the value path does not go through it.

The harmonic weight has two routes: a Petersson linear solve across the full
basis of the weight (primary; no external constant), and a Rankin route
whose constant is calibrated once per process by equating the two routes at
weights 12 and 16, never asserted from memory.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

from mpmath import mp, mpf, mpc

from .precision import (
    Ball, DomainError, PrecisionContext, PrecisionError, DEFAULT_CONTEXT,
    ball_sum, bessel,
)
from .kernels import (
    afe_weight_closed, afe_weight_tail_bound, hecke_afe_weight,
    sym2_gamma_factor,
)
from .forms import HeckeEigenform, cusp_dim, hecke_eigendata
from .quadl import factorize

__all__ = [
    "NumericFailure",
    "LValueRecord",
    "hecke_central",
    "sym2_value",
    "sym2_required_length",
    "lam_square",
    "harmonic_weight",
    "petersson_side",
    "attach_harmonic_weights",
    "eigendata_with_weights",
    "required_n_terms",
    "rankin_constant",
]


class NumericFailure(ArithmeticError):
    """Ill-conditioned linear algebra or an unusable configuration."""


@dataclass
class LValueRecord:
    form_id: str
    quantity: str  # hecke_central | sym2_half | sym2_one | omega
    value: Ball
    afe_length: int


def epsilon_sign(weight: int) -> int:
    """Functional-equation sign i^weight for even weight: +1 or -1."""
    if weight % 2:
        raise DomainError("even weight required")
    return 1 if weight % 4 == 0 else -1


# ---------------------------------------------------------------------------
# Hecke L(f, 1/2)
# ---------------------------------------------------------------------------

def hecke_afe_length(weight: int, u=0.0, target: float = 1e-25) -> int:
    """Smallest L with certified 4 sum_{l>L} |V| below target/4."""
    m = weight // 2
    L = max(2, int(m / 4))
    while afe_weight_tail_bound(m, L + 1, u) * 4 > mpf(target) / 4:
        L = int(L * 1.3) + 2
        if L > 10 ** 6:
            raise PrecisionError("hecke AFE length cap exceeded")
    return L


def hecke_central(f: HeckeEigenform, u=0.0,
                  ctx: PrecisionContext = DEFAULT_CONTEXT,
                  v_route: str = "closed") -> Ball:
    """L(f, 1/2) = (1 + i^weight) sum_l lambda(l) l^-1/2 V(l, u)."""
    if not abs(u) < 0.5:
        raise DomainError("|u| < 1/2 required")
    eps = epsilon_sign(f.weight)
    if eps == -1:
        return Ball(mpf(0))  # exact zero of the functional equation
    m = f.weight // 2
    L = hecke_afe_length(f.weight, u, ctx.target_abs_error)
    if L > f.n_terms:
        raise DomainError(
            f"eigen-data too short: need n_terms >= {L}, have {f.n_terms}")
    sub = ctx.with_target(ctx.target_abs_error / (4 * L))
    Vfn = afe_weight_closed if v_route == "closed" else hecke_afe_weight
    terms = []
    prec = ctx.working_bits + 32
    for l in range(1, L + 1):
        V = Vfn(m, l, u, sub)
        with mp.workprec(prec):
            terms.append(f.lam_at(l) * V.value * Ball.rounded(mp.power(l, -mpf(1) / 2)))
    with mp.workprec(prec):
        tail = 4 * afe_weight_tail_bound(m, L + 1, u)
        return (ball_sum(terms) * 2).widened(tail)


# ---------------------------------------------------------------------------
# symmetric square values
# ---------------------------------------------------------------------------

def lam_square(f: HeckeEigenform, e: int, prec: int) -> Ball:
    """lambda(e^2) via the Hecke recursion from lambda(p), p | e."""
    with mp.workprec(prec):
        out = Ball(mpf(1))
        for p, a in factorize(e).items():
            lp = f.lam_at(p)
            vals = [Ball(mpf(1)), lp]
            while len(vals) <= 2 * a:
                vals.append(lp * vals[-1] - vals[-2])
            out = out * vals[2 * a]
        return out


def _sym2_coeffs(f: HeckeEigenform, M: int, prec: int) -> list[Ball]:
    """c_n = sum_{d^2 e = n} lambda(e^2) for n = 1..M."""
    sq = {}
    with mp.workprec(prec):
        out = []
        for n in range(1, M + 1):
            c = Ball(mpf(0))
            d = 1
            while d * d <= n:
                if n % (d * d) == 0:
                    e = n // (d * d)
                    if e not in sq:
                        sq[e] = lam_square(f, e, prec)
                    c = c + sq[e]
                d += 1
            out.append(c)
        return out


def _dirichlet_tail(M: int, R) -> mpf:
    """Certified: |sum_{n>M} c_n n^-R| <= 2 zeta(2) M^(2-R)/(R-2) (R > 2)."""
    if not R > 2:
        return mp.inf
    return 2 * mp.zeta(2) * mp.power(M, 2 - R) / (R - 2) * (1 + mpf(2) / M)


def _weight_growth(weight_half: int, s0, sigma, prec: int = 80) -> mpf:
    """|L_inf(anchor+sigma)/L_inf(s0)| at t=0: scale of the weight integral."""
    with mp.workprec(prec):
        anchor = min(mpf(s0), 1 - mpf(s0))
        return abs(sym2_gamma_factor(anchor + sigma, weight_half)
                   / sym2_gamma_factor(mpf(s0), weight_half))


def sym2_required_length(weight: int, s0, target: float, cap: int = 4000):
    """(sigma, M): truncation so that tail * weight-integral beats target.

    The radius of the swapped evaluation is the series tail
    2 zeta(2) M^(2-R)/(R-2) times the absolute integral of the Gamma-kernel
    weight, whose scale is the t=0 ratio; both are explicit, so pick the
    cheapest (sigma, M) on a ladder.
    """
    m = weight // 2
    anchor = min(mpf(s0), 1 - mpf(s0))
    best = None
    for sigma in (6, 8, 10, 12, 14, 16, 20):
        R = anchor + sigma
        if not R > 2.5:
            continue
        W = _weight_growth(m, s0, sigma) / sigma + 1
        M = 8
        while _dirichlet_tail(M, R) * W > mpf(target) / 8 and M <= cap:
            M = int(M * 1.4) + 2
        if M > cap:
            continue
        cost = (2 * sigma + math.log(M + 1)) * M
        if best is None or cost < best[0]:
            best = (cost, sigma, M)
    if best is None:
        raise PrecisionError("sym2 truncation cap exceeded")
    return best[1], best[2]


def sym2_value(f: HeckeEigenform, s0=0.5,
               ctx: PrecisionContext = DEFAULT_CONTEXT,
               m_trunc: int | None = None,
               sigma_override: float | None = None) -> Ball:
    """L(sym^2 f, s0) for s0 in {1/2, 1} by the swapped-contour AFE.

    m_trunc overrides the Dirichlet truncation (afe_length); doubling it must
    move the value by less than the reported radius.
    """
    if float(s0) not in (0.5, 1.0):
        raise DomainError("s0 must be 1/2 or 1")
    m = f.weight // 2
    target = ctx.target()
    sigma, M = sym2_required_length(f.weight, s0, ctx.target_abs_error)
    if sigma_override is not None:
        sigma = sigma_override
    if m_trunc is not None:
        M = m_trunc
    if M > f.n_terms:
        raise DomainError(
            f"eigen-data too short for sym2 AFE: need n_terms >= {M}, "
            f"have {f.n_terms}")
    prec = ctx.working_bits + 48
    coeffs = _sym2_coeffs(f, M, prec)
    with mp.workprec(prec):
        s0v = mpf(s0)
        sg = mpf(sigma)
        den = sym2_gamma_factor(s0v, m)
        logs = [mp.log(n) for n in range(1, M + 1)]
        mids = [c.mid for c in coeffs]
        rads = [c.rad for c in coeffs]

        total = Ball(mpf(0))
        for anchor in (s0v, 1 - s0v):
            R = anchor + sg
            dtail = _dirichlet_tail(M, R)
            crad = mp.fsum(r * mp.power(n + 1, -R) for n, r in enumerate(rads))
            amps = [mids[n] * mp.power(n + 1, -R) for n in range(M)]

            def fval(t):
                s = mpc(sg, t)
                D = mp.fsum(amps[n] * mp.e ** mpc(0, -t * logs[n]) for n in range(M))
                return sym2_gamma_factor(anchor + s, m) / den * D / s

            # t-range: the three gamma factors decay at least like e^(-pi t/4)
            T = mpf(8)
            while abs(fval(T)) * (1 + T) > target / 64 and T < 6000:
                T *= mpf(1.25)

            def line_sum(h):
                K = int(mp.ceil(T / h))
                rots = [mp.e ** mpc(0, -h * logs[n]) for n in range(M)]
                z = [mpc(1) for _ in range(M)]
                s = mpc(sg, 0)
                D0 = mp.fsum(amps)
                f0 = sym2_gamma_factor(anchor + s, m) / den * D0 / s
                acc = f0 / 2
                absum = abs(f0) / 2
                wsum = abs(sym2_gamma_factor(anchor + s, m) / den / s) / 2
                for j in range(1, K + 1):
                    for n in range(M):
                        z[n] = z[n] * rots[n]
                    D = mp.fsum(amps[n] * z[n] for n in range(M))
                    s = mpc(sg, j * h)
                    wj = sym2_gamma_factor(anchor + s, m) / den / s
                    fj = wj * D
                    acc += fj
                    absum += abs(fj)
                    wsum += abs(wj)
                # f(-t) = conj f(t): integral = 2 Re of the half line
                return (2 * acc.real * h / (2 * mp.pi),
                        2 * absum * h / (2 * mp.pi),
                        2 * wsum * h / (2 * mp.pi))

            h = mpf(0.4) / (1 + mp.log(M + 1) + mp.log(m + 2))
            val, absum, wsum = line_sum(h)
            qerr = abs(val) + 1
            for _ in range(10):
                val2, absum, wsum = line_sum(h / 2)
                qerr = abs(val2 - val)
                val, h = val2, h / 2
                if qerr <= target / 8:
                    break
            # t-tail: anchored gamma decay at rate >= pi/4 past T
            anchor_val = abs(sym2_gamma_factor(mpc(anchor + sg, T), m) / den)
            Dmax = mp.fsum(abs(a) for a in amps) + dtail
            t_tail = anchor_val * Dmax / T * (4 / mp.pi) / mp.pi
            rad = (qerr + t_tail + (dtail + crad) * wsum
                   + absum * mpf(2) ** (10 - prec))
            total = total + Ball(val, rad)
        return total


# ---------------------------------------------------------------------------
# Petersson side and Kloosterman sums
# ---------------------------------------------------------------------------

def kloosterman(m: int, n: int, c: int, prec: int) -> Ball:
    """S(m,n;c) = sum_{d dbar = 1 (c)} e((m d + n dbar)/c), exact phases."""
    if c == 1:
        return Ball(mpf(1))  # empty modulus convention
    with mp.workprec(prec):
        total = Ball(mpf(0))
        for d in range(1, c):
            if math.gcd(d, c) != 1:
                continue
            dbar = pow(d, -1, c)
            r = (m * d + n * dbar) % c
            total = total + Ball.rounded(mp.cospi(mpf(2 * r) / c))
        return total


def _bessel_j_bound(nu: int, x, prec: int = 64) -> mpf:
    """|J_nu(x)| <= 2 (x/2)^nu / nu! valid once (x/2)^2 <= (nu+1)/2."""
    with mp.workprec(prec):
        xx = mpf(x)
        assert (xx / 2) ** 2 <= (nu + 1) / mpf(2)
        return 2 * mp.power(xx / 2, nu) / mp.factorial(nu)


def petersson_side(weight: int, m: int, n: int,
                   ctx: PrecisionContext = DEFAULT_CONTEXT,
                   c_max: int | None = None) -> Ball:
    """delta_{mn} + 2 pi i^-weight sum_c S(m,n;c)/c J_{weight-1}(4 pi sqrt(mn)/c)."""
    if m < 1 or n < 1:
        raise DomainError("m, n >= 1 required")
    nu = weight - 1
    sign = 1 if weight % 4 == 0 else -1
    target = ctx.target()
    prec = ctx.working_bits + 32
    with mp.workprec(prec):
        root = mp.sqrt(mpf(m) * n)
        if c_max is None:
            C = max(1, int(4 * mp.pi * root / mp.sqrt((nu + 1) / mpf(2))) + 1)
            while True:
                lead = 2 * mp.power(2 * mp.pi * root, nu) / mp.factorial(nu)
                tail = lead * mp.power(C, -nu + 1) / (nu - 1) * 2
                if tail * 2 * mp.pi < target / 4 or C > 10 ** 6:
                    break
                C = int(C * 1.3) + 1
        else:
            C = c_max
            lead = 2 * mp.power(2 * mp.pi * root, nu) / mp.factorial(nu)
            tail = lead * mp.power(C, -nu + 1) / (nu - 1) * 2
        sub = ctx.with_target(ctx.target_abs_error / (8 * C))
        total = Ball(mpf(1) if m == n else mpf(0))
        for c in range(1, C + 1):
            x = 4 * mp.pi * root / c
            S = kloosterman(m, n, c, prec)
            if S.mid == 0 and S.rad < mpf(1e-40):
                continue
            J = bessel("J", x, sub, order=nu)
            total = total + S * J * Ball.rounded(2 * mp.pi * sign / mpf(c))
        return total.widened(tail * 2 * mp.pi)


# ---------------------------------------------------------------------------
# harmonic weights
# ---------------------------------------------------------------------------

def _ball_matrix_solve(A: list[list[Ball]], b: list[Ball], prec: int) -> list[Ball]:
    d = len(A)
    with mp.workprec(prec):
        rows = [A[i][:] + [b[i]] for i in range(d)]
        perm = []
        used = [False] * d
        for col in range(d):
            best, best_val = None, mpf(-1)
            for r in range(d):
                if not used[r] and rows[r][col].lower() > best_val:
                    best, best_val = r, rows[r][col].lower()
            if best is None or not best_val > 0:
                raise NumericFailure("singular Petersson system")
            used[best] = True
            perm.append(best)
            prow = rows[best]
            for r in range(d):
                if not used[r]:
                    fac = rows[r][col] / prow[col]
                    rows[r] = [x - fac * y for x, y in zip(rows[r], prow)]
        x = [None] * d
        for idx in range(d - 1, -1, -1):
            r = perm[idx]
            acc = rows[r][d]
            for j in range(idx + 1, d):
                acc = acc - rows[r][j] * x[j]
            x[idx] = acc / rows[r][idx]
        return x


def _matrix_cond_estimate(A: list[list[Ball]], prec: int) -> mpf:
    """Rough infinity-norm condition estimate via explicit inverse columns."""
    d = len(A)
    with mp.workprec(prec):
        norm_a = max(mp.fsum(abs(A[i][j].mid) for j in range(d)) for i in range(d))
        inv_cols = []
        for j in range(d):
            e = [Ball(mpf(1) if i == j else mpf(0)) for i in range(d)]
            inv_cols.append(_ball_matrix_solve(A, e, prec))
        norm_inv = max(mp.fsum(abs(inv_cols[j][i].mid) for j in range(d))
                       for i in range(d))
        return norm_a * norm_inv


def attach_harmonic_weights(forms: list[HeckeEigenform],
                            ctx: PrecisionContext = DEFAULT_CONTEXT) -> None:
    """Petersson-route omega for every form of the weight, in place."""
    if not forms:
        return
    weight = forms[0].weight
    d = len(forms)
    if d != cusp_dim(weight):
        raise DomainError("attach_harmonic_weights needs the full basis")
    prec = ctx.working_bits + 32
    A = [[forms[j].lam_at(l) for j in range(d)] for l in range(1, d + 1)]
    b = [petersson_side(weight, l, 1, ctx) for l in range(1, d + 1)]
    if d > 1 and _matrix_cond_estimate(A, prec) > 1e6:
        raise NumericFailure("Petersson system condition number above 1e6")
    omegas = _ball_matrix_solve(A, b, prec)
    for f, w in zip(forms, omegas):
        f.omega = w


_rankin_cache: dict = {}
_rankin_lock = threading.Lock()


def rankin_constant(ctx: PrecisionContext = DEFAULT_CONTEXT) -> dict:
    """c(weight)*(weight-1), calibrated by equating the omega routes at 12 and 16.

    Returned dict carries the constant and its provenance; cached per process.
    """
    key = (ctx.working_bits, ctx.target_abs_error)
    with _rankin_lock:
        hit = _rankin_cache.get(key)
    if hit is not None:
        return hit
    vals = {}
    for weight in (12, 16):
        forms = hecke_eigendata(weight, required_n_terms(weight, ctx), ctx)
        attach_harmonic_weights(forms, ctx)
        f = forms[0]
        L1 = sym2_value(f, 1.0, ctx)
        with mp.workprec(ctx.working_bits + 32):
            vals[weight] = f.omega * L1 * (weight - 1)
    with mp.workprec(ctx.working_bits + 32):
        gap = abs(vals[12].mid - vals[16].mid)
        allowed = (vals[12].rad + vals[16].rad) * 4 + mpf(1e-10)
        if gap > allowed:
            raise NumericFailure(
                f"Rankin constant calibration mismatch: {mp.nstr(gap, 6)}")
        const = (vals[12] + vals[16]) * mpf(0.5)
    out = {
        "constant_times_weight_minus_1": const,
        "provenance": "equated petersson and rankin routes at weights 12, 16",
        "weight12": vals[12],
        "weight16": vals[16],
    }
    with _rankin_lock:
        _rankin_cache.setdefault(key, out)
    return out


def harmonic_weight(f: HeckeEigenform, route: str = "petersson",
                    ctx: PrecisionContext = DEFAULT_CONTEXT,
                    basis: list[HeckeEigenform] | None = None) -> Ball:
    """omega(f) by the Petersson solve or the calibrated Rankin route."""
    if route == "petersson":
        if f.omega is not None:
            return f.omega
        forms = basis or hecke_eigendata(f.weight, f.n_terms, ctx)
        attach_harmonic_weights(forms, ctx)
        for g in forms:
            if abs(g.theta2.mid - f.theta2.mid) <= g.theta2.rad + f.theta2.rad + mpf(1e-20):
                f.omega = g.omega
                return g.omega
        raise NumericFailure("form not found in its weight basis")
    if route == "rankin":
        cal = rankin_constant(ctx)
        L1 = sym2_value(f, 1.0, ctx)
        with mp.workprec(ctx.working_bits + 32):
            return cal["constant_times_weight_minus_1"] / ((f.weight - 1) * L1)
    raise DomainError(f"unknown omega route {route!r}")


# ---------------------------------------------------------------------------
# sizing and assembly helpers
# ---------------------------------------------------------------------------

def required_n_terms(weight: int, ctx: PrecisionContext,
                     extra: int = 0) -> int:
    """Eigen-data length covering the AFE lengths this ctx will request."""
    L_hecke = hecke_afe_length(weight, 0.0, ctx.target_abs_error) \
        if weight % 4 == 0 else 0
    _, M_half = sym2_required_length(weight, 0.5, ctx.target_abs_error)
    _, M_one = sym2_required_length(weight, 1.0, ctx.target_abs_error)
    d = cusp_dim(weight)
    return max(L_hecke, M_half, M_one, 3 * d + 2, d + 10, extra) + 16


def eigendata_with_weights(weight: int, ctx: PrecisionContext = DEFAULT_CONTEXT,
                           n_terms: int | None = None) -> list[HeckeEigenform]:
    """Eigenforms with omega attached (petersson route)."""
    n = n_terms or required_n_terms(weight, ctx)
    forms = hecke_eigendata(weight, n, ctx)
    if forms:
        attach_harmonic_weights(forms, ctx)
    return forms
