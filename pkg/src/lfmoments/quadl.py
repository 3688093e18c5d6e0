"""The quadratic series curlyL_n(s), its routes, and Dirichlet L-functions.

curlyL_n(s) counts square roots of n modulo 4q (weighted by zeta(2s)/zeta(s));
it specializes to zeta(2s-1) at n = 0 and vanishes identically unless
n = 0, 1 (mod 4).  Away from the region of absolute convergence the value is
obtained through the factorization n = D f^2 (D fundamental) and

    curlyL_n(s) = L(s, chi_D) * sum_{d | f} mu(d) chi_D(d) d^-s sigma_{1-2s}(f/d).

This identity is never taken on faith: a dual-route calibration against the
direct series (convergent for Re s > 1) must pass before the decomposition
is used at Re s <= 1, and the fundamental-discriminant L-value runs through
a theta-function AFE whose root number (+1 for real primitive characters)
is verified per discriminant via the theta transformation identity.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

from mpmath import mp, mpf, mpc

from .precision import (
    Ball, DomainError, PoleError, PrecisionError, PrecisionContext,
    DEFAULT_CONTEXT, ball_sum, zeta,
)

__all__ = [
    "CalibrationError",
    "bound_curly_half_smooth",
    "DiscriminantSplit",
    "QuadLValue",
    "sqrt_count",
    "sqrt_count_brute",
    "split_discriminant",
    "chi_kronecker",
    "dirichlet_L",
    "curly_L",
    "completed_fe_residual",
    "lg_minus_partial",
    "calibrate_decomposition",
    "bound_L_half",
    "bound_curly_half",
]


class CalibrationError(RuntimeError):
    """Decomposition used before calibration, or a calibration failure."""


# ---------------------------------------------------------------------------
# integer arithmetic
# ---------------------------------------------------------------------------

_SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # deterministic Miller-Rabin for n < 3.3e24
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    if n % 2 == 0:
        return 2
    for c in range(1, 50):
        x = y = 2
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
    raise ArithmeticError(f"pollard rho failed on {n}")


@lru_cache(maxsize=1 << 18)
def _factorize_cached(n: int) -> tuple:
    out: dict[int, int] = {}
    for p in range(2, 10000):
        if p * p > n:
            break
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if _is_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        d = _pollard_rho(m)
        stack.extend([d, m // d])
    return tuple(sorted(out.items()))


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division then Pollard rho."""
    if n < 1:
        raise DomainError("factorize needs n >= 1")
    return dict(_factorize_cached(n))


def divisors(n: int) -> list[int]:
    fac = factorize(n)
    out = [1]
    for p, e in fac.items():
        out = [d * p ** k for d in out for k in range(e + 1)]
    return sorted(out)


def moebius(n: int) -> int:
    fac = factorize(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return -1 if len(fac) % 2 else 1


# ---------------------------------------------------------------------------
# counting square roots mod 4q
# ---------------------------------------------------------------------------

def _count_prime_power(p: int, a: int, n: int) -> int:
    """#{t mod p^a : t^2 = n (mod p^a)}."""
    v = 0
    m = n % p ** a
    if m == 0:
        return p ** (a // 2)
    nn = n
    while nn % p == 0:
        nn //= p
        v += 1
    if v >= a:
        return p ** (a // 2)
    if v % 2 == 1:
        return 0
    npart = nn  # n / p^v, coprime to p
    r = a - v
    if p == 2:
        if r == 1:
            base = 1
        elif r == 2:
            base = 2 if npart % 4 == 1 else 0
        else:
            base = 4 if npart % 8 == 1 else 0
    else:
        base = 1 + chi_kronecker_prime(npart, p)
    return p ** (v // 2) * base


def chi_kronecker_prime(n: int, p: int) -> int:
    """Legendre symbol (n/p) for odd prime p."""
    n %= p
    if n == 0:
        return 0
    return 1 if pow(n, (p - 1) // 2, p) == 1 else -1


def sqrt_count(n: int, q: int) -> int:
    """#{1 <= t <= 2q : t^2 = n (mod 4q)} via factorization of 4q.

    Solutions mod 4q pair up as {t, t+2q}, exactly one of each pair landing
    in [1, 2q], so the count is half the count mod 4q.
    """
    if q < 1:
        raise DomainError("q must be >= 1")
    total = 1
    for p, a in _factorize_cached(4 * q):
        total *= _count_prime_power(p, a, n)
        if total == 0:
            return 0
    return total // 2


def sqrt_count_brute(n: int, q: int) -> int:
    """Direct loop oracle (q <= 10^4 scale)."""
    m = 4 * q
    return sum(1 for t in range(1, 2 * q + 1) if (t * t - n) % m == 0)


# ---------------------------------------------------------------------------
# discriminants and characters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscriminantSplit:
    n: int
    D: int
    f: int


def is_fundamental(D: int) -> bool:
    if D == 0:
        return False
    if D % 4 == 1:  # Python % is nonnegative, so this covers negative D too
        return _squarefree(abs(D)) if D != 1 else True
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _squarefree(abs(m))
    return False


def _squarefree(n: int) -> bool:
    return all(e == 1 for e in factorize(n).values()) if n > 1 else True


def split_discriminant(n: int) -> DiscriminantSplit:
    """Unique n = D f^2 with D a fundamental discriminant (or D = 1)."""
    if n == 0:
        raise DomainError("n = 0 is handled by the zeta identity route")
    if n % 4 not in (0, 1):
        raise DomainError(f"n = {n} is 2 or 3 mod 4; no discriminant split")
    f0 = 1
    core = abs(n)
    for p, e in factorize(abs(n)).items():
        if e >= 2:
            f0 *= p ** (e // 2)
            core //= p ** (2 * (e // 2))
    s = core if n > 0 else -core  # squarefree part, signed
    if s % 4 == 1:
        D, f = s, f0
    else:
        assert f0 % 2 == 0, (n, s, f0)
        D, f = 4 * s, f0 // 2
    assert D * f * f == n
    return DiscriminantSplit(n, D, f)


def chi_kronecker(D: int, m: int) -> int:
    """Kronecker symbol (D/m) for m >= 1."""
    if m < 1:
        raise DomainError("m must be >= 1")
    if m == 0:
        return 1 if abs(D) == 1 else 0
    res = 1
    a, b = D, m
    while b % 2 == 0:
        b //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            res = -res
    a %= b
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if b % 8 in (3, 5):
                res = -res
        a, b = b, a
        if a % 4 == 3 and b % 4 == 3:
            res = -res
        a %= b
    return res if b == 1 else 0


# ---------------------------------------------------------------------------
# Dirichlet L(s, chi_D) via the theta AFE
# ---------------------------------------------------------------------------

_root_checked: set[int] = set()
_root_lock = threading.Lock()


def _theta_sum(D: int, t, a: int, prec: int):
    """sum_n chi(n) n^a exp(-pi n^2 t / |D|) with a certified tail."""
    with mp.workprec(prec):
        q = abs(D)
        tt = mpf(t)
        total = mpf(0)
        n = 1
        while True:
            term = mp.e ** (-mp.pi * n * n * tt / q)
            if a:
                term *= n
            c = chi_kronecker(D, n)
            if c:
                total += c * term
            if term * (n + 2) < mpf(2) ** (-prec - 8) and n > math.isqrt(q) + 2:
                ratio = mp.e ** (-mp.pi * (2 * n + 3) * tt / q) * (1 + mpf(2) / n)
                tail = term * ratio / (1 - ratio)
                return total, tail
            n += 1


def _validate_root_number(D: int, prec: int = 120) -> None:
    """theta(1/t0) = t0^(a+1/2) theta(t0) pins the root number to +1."""
    if D == 1:
        return
    with _root_lock:
        if D in _root_checked:
            return
    a = 0 if D > 0 else 1
    with mp.workprec(prec):
        t0 = mpf(13) / 10
        lhs, tl = _theta_sum(D, 1 / t0, a, prec)
        rhs, tr = _theta_sum(D, t0, a, prec)
        rhs_scaled = mp.power(t0, a + mpf(1) / 2) * rhs
        scale = max(abs(lhs), abs(rhs_scaled), mpf(1))
        if abs(lhs - rhs_scaled) > tl + 2 * tr + scale * mpf(1e-20):
            raise CalibrationError(
                f"theta transformation failed for D={D}: root number is not +1")
    with _root_lock:
        _root_checked.add(D)


def _upper_gamma_abs_bound(a_re, x, prec: int):
    """Certified bound for |Gamma(w, x)| with Re w = a_re, x > 0."""
    with mp.workprec(prec):
        xx = mpf(x)
        if a_re <= 1:
            return mp.power(xx, a_re - 1) * mp.e ** (-xx)
        if xx > 2 * (a_re - 1):
            return mp.power(xx, a_re - 1) * mp.e ** (-xx) * 2
        return mp.gamma(a_re) * (1 + mp.power(xx, a_re))  # crude but safe


def _dirichlet_L_theta(D: int, s, ctx: PrecisionContext) -> Ball:
    """L(s, chi_D) by the incomplete-gamma AFE (valid for all s)."""
    _validate_root_number(D)
    q = abs(D)
    a = 0 if D > 0 else 1
    target = ctx.target()
    for bits in ctx.ladder():
        prec = bits + 32
        with mp.workprec(prec):
            ss = mpc(s) if isinstance(s, complex) else mpf(s) if isinstance(s, (int, float)) else s
            w1 = (ss + a) / 2
            w2 = (1 - ss + a) / 2
            total = mpc(0)
            absum = mpf(0)
            n = 1
            while True:
                x = mp.pi * n * n / q
                c = chi_kronecker(D, n)
                if c:
                    t1 = mp.power(x, -w1) * mp.gammainc(w1, x)
                    t2 = mp.power(x, -w2) * mp.gammainc(w2, x)
                    piece = (t1 + t2) * (n ** a)
                    total += c * piece
                    absum += abs(piece)
                # certified termination: bound both tails
                if n > math.isqrt(q) + 1:
                    b1 = mp.power(x, -mp.re(w1)) * _upper_gamma_abs_bound(mp.re(w1), x, prec)
                    b2 = mp.power(x, -mp.re(w2)) * _upper_gamma_abs_bound(mp.re(w2), x, prec)
                    tb = (b1 + b2) * n ** a
                    if tb * (n + 2) ** (a + 1) < mpf(2) ** (-prec // 2):
                        ratio = mp.e ** (-mp.pi * (2 * n + 3) / q) * (1 + mpf(3) / n) ** (a + 2)
                        tail = tb * ratio / (1 - ratio)
                        break
                n += 1
            pref = mp.power(mp.pi / q, (ss + a) / 2) / mp.gamma((ss + a) / 2)
            val = pref * total
            rad = abs(pref) * (tail + absum * mpf(2) ** (10 - prec))
            res = Ball(val.real, rad + abs(val.imag)) if abs(val.imag) <= rad else Ball(val, rad)
        if res.rad <= target:
            return res
    raise PrecisionError("dirichlet_L theta AFE did not reach target")


def _dirichlet_L_direct(D: int, s, ctx: PrecisionContext,
                        n_cap: int = 300000) -> Ball:
    """Direct character sum for Re s > 1 with a Polya-Vinogradov tail.

    Single pass (escalating bits cannot shrink the tail); refuses up front
    if the tail bound needs more than n_cap terms.
    """
    q = abs(D)
    target = ctx.target()
    prec = ctx.working_bits + 16
    with mp.workprec(prec):
        ss = mpc(s) if isinstance(s, complex) else mpf(s) if isinstance(s, (int, float)) else s
        sigma = mp.re(ss)
        if not sigma > 1:
            raise DomainError("direct route needs Re s > 1")
        pv = 2 * mp.sqrt(q) * (mp.log(q) + 1)
        need = mp.power(pv * (1 + abs(ss) / sigma) * 2 / target, 1 / sigma)
        if need > n_cap:
            raise PrecisionError(
                f"direct Dirichlet series would need ~{mp.nstr(need, 3)} terms")
        N = int(need) + 2
        total = mpf(0) if mp.im(ss) == 0 else mpc(0)
        for n in range(1, N + 1):
            c = chi_kronecker(D, n)
            if c:
                total += c * mp.power(n, -ss)
        tail = pv * mp.power(N, -sigma) * (1 + abs(ss) / sigma)
        rad = tail + (abs(total) + 1) * N * mpf(2) ** (8 - prec)
        return Ball(total, rad)


def dirichlet_L(D: int, s, ctx: PrecisionContext = DEFAULT_CONTEXT,
                route: str = "auto") -> Ball:
    """L(s, chi_D) for a fundamental discriminant D (D=1 gives zeta)."""
    if not is_fundamental(D) and D != 1:
        raise DomainError(f"D = {D} is not a fundamental discriminant")
    with mp.workprec(64):
        sigma = mp.re(mpc(s)) if isinstance(s, complex) else mpf(float(s))
    if D == 1:
        if s == 1:
            raise PoleError("zeta pole at s=1 (D=1)")
        return zeta(s, 0, ctx)
    if route == "direct" or (route == "auto" and sigma > mpf(1.25)):
        try:
            return _dirichlet_L_direct(D, s, ctx)
        except PrecisionError:
            if route == "direct":
                raise
    return _dirichlet_L_theta(D, s, ctx)


def bound_L_half(D: int, prec: int = 64) -> mpf:
    """Certified envelope |L(1/2, chi_D)| <= 4 (|D|/pi)^(1/4) + 3.

    From the theta AFE with |chi| <= 1: the x <= 1 terms contribute at most
    2 sum_{n <= M} n^(-1/2) <= 4 sqrt(M) with M = sqrt(|D|/pi) after the
    prefactor cancels, and the x > 1 terms are exponentially small.
    """
    with mp.workprec(prec):
        return 4 * mp.power(abs(D) / mp.pi, mpf(1) / 4) + 3


# ---------------------------------------------------------------------------
# curlyL_n(s)
# ---------------------------------------------------------------------------

@dataclass
class QuadLValue:
    n: int
    s: object
    value: Ball
    route: str

    @property
    def mid(self):
        return self.value.mid

    @property
    def rad(self):
        return self.value.rad


_mini_calibrated = False
_cal_lock = threading.Lock()
_power_cache: dict = {}
_power_lock = threading.Lock()


def _direct_powers(ss, Q: int, prec: int):
    key = (mp.nstr(ss, 40), Q, prec)
    with _power_lock:
        hit = _power_cache.get(key)
    if hit is not None:
        return hit
    with mp.workprec(prec):
        table = [mp.power(q, -ss) for q in range(1, Q + 1)]
    with _power_lock:
        _power_cache.setdefault(key, table)
    return table
_half_memo: dict = {}
_half_memo_lock = threading.Lock()


def _decomposition_factor(D: int, f: int, s, prec: int) -> Ball:
    """T_f(s) = sum_{d|f} mu(d) chi_D(d) d^-s sigma_{1-2s}(f/d)."""
    with mp.workprec(prec):
        ss = mpc(s) if isinstance(s, complex) else mpf(s) if isinstance(s, (int, float)) else s
        total = Ball(mpf(0))
        for d in divisors(f):
            mu = moebius(d)
            if mu == 0:
                continue
            c = mu * chi_kronecker(D, d)
            if c == 0:
                continue
            sig = Ball(mpf(0))
            for e in divisors(f // d):
                sig = sig + Ball.rounded(mp.power(e, 1 - 2 * ss))
            total = total + Ball.rounded(mp.power(d, -ss)) * sig * c
        return total


def _curly_L_decomposition(n: int, s, ctx: PrecisionContext) -> Ball:
    split = split_discriminant(n)
    sub = ctx.with_target(ctx.target_abs_error / max(4, 4 * split.f))
    L = dirichlet_L(split.D, s, sub)
    T = _decomposition_factor(split.D, split.f, s, ctx.working_bits + 32)
    with mp.workprec(ctx.working_bits + 32):
        return L * T


def _curly_L_direct(n: int, s, ctx: PrecisionContext, Q: int | None = None) -> Ball:
    """Truncated defining series for Re s > 1.5; tail from the divisor bound."""
    with mp.workprec(ctx.working_bits + 16):
        ss = mpf(float(s)) if isinstance(s, (int, float)) else s
        sigma = mp.re(ss)
        if not sigma > mpf(1.5):
            raise DomainError("direct curlyL route needs Re s > 3/2")
        # largest square divisor of 4|n| feeds the rho_q bound
        S = 1
        if n != 0:
            for p, e in factorize(4 * abs(n)).items():
                S *= p ** (2 * (e // 2))
        Q = Q or 4000
        powers = _direct_powers(ss, Q, mp.prec)
        mid = mpf(0)
        rad = mpf(0)
        for q in range(1, Q + 1):
            r = sqrt_count(n, q)
            if r:
                mid += r * powers[q - 1]
                rad += r * abs(powers[q - 1])
        total = Ball(mid, rad * mpf(2) ** (8 - mp.prec))
        tail = (2 * mp.sqrt(S) * mp.power(Q, 1 - sigma)
                * ((mp.log(Q) + 2) / (sigma - 1) + mp.zeta(sigma) + 1) * 2)
        z2 = zeta(2 * ss, 0, ctx)
        z1 = zeta(ss, 0, ctx)
        return z2 / z1 * total.widened(tail)


def _run_calibration(ctx: PrecisionContext, nmax: int, s_values, Q: int,
                     tol_factor: float = 1.0) -> list:
    """Compare direct and decomposition routes; raises on any mismatch."""
    results = []
    for n in range(-nmax, nmax + 1):
        if n == 0 or n % 4 in (2, 3):
            continue
        for s in s_values:
            a = _curly_L_direct(n, s, ctx, Q=Q)
            b = _curly_L_decomposition(n, s, ctx)
            with mp.workprec(ctx.working_bits + 16):
                gap = abs(a.mid - b.mid)
                allowed = (a.rad + b.rad) * tol_factor
                if gap > allowed:
                    raise CalibrationError(
                        f"decomposition calibration failed at n={n}, s={s}: "
                        f"gap {mp.nstr(gap, 5)} > {mp.nstr(allowed, 5)}")
            results.append((n, s, gap, allowed))
    return results


def calibrate_decomposition(ctx: PrecisionContext | None = None, nmax: int = 500,
                            s_values=(2, 3), Q: int = 4000) -> list:
    """Full dual-route calibration; enables the decomposition gate."""
    global _mini_calibrated
    ctx = ctx or PrecisionContext(96, 1e-18)
    res = _run_calibration(ctx, nmax, s_values, Q)
    with _cal_lock:
        _mini_calibrated = True
    return res


def _ensure_calibrated() -> None:
    """Cheap once-per-process gate before central-value use."""
    global _mini_calibrated
    with _cal_lock:
        if _mini_calibrated:
            return
    _run_calibration(PrecisionContext(80, 1e-12), 40, (3,), 700)
    with _cal_lock:
        _mini_calibrated = True


def curly_L(n: int, s, ctx: PrecisionContext = DEFAULT_CONTEXT,
            route: str = "auto") -> QuadLValue:
    """curlyL_n(s) with route provenance.

    Routes: exact 0 for n = 2,3 (mod 4); zeta(2s-1) at n = 0; the direct
    series for Re s > 3/2; the calibrated decomposition elsewhere.
    """
    if n % 4 in (2, 3):
        return QuadLValue(n, s, Ball(mpf(0)), "vanishing")
    if n == 0:
        with mp.workprec(ctx.working_bits + 16):
            s2 = (mpc(s) if isinstance(s, complex) else mpf(s) if isinstance(s, (int, float)) else s)
            return QuadLValue(n, s, zeta(2 * s2 - 1, 0, ctx), "zeta_identity")
    with mp.workprec(64):
        sigma = mp.re(mpc(s)) if isinstance(s, complex) else mpf(float(s))
    if route == "direct":
        return QuadLValue(n, s, _curly_L_direct(n, s, ctx), "direct")
    if sigma <= 1:
        _ensure_calibrated()
    if s == 0.5:
        key = (n, ctx.working_bits, ctx.target_abs_error)
        with _half_memo_lock:
            hit = _half_memo.get(key)
        if hit is not None:
            return QuadLValue(n, s, hit, "decomposition")
        val = _curly_L_decomposition(n, s, ctx)
        with _half_memo_lock:
            _half_memo.setdefault(key, val)
        return QuadLValue(n, s, val, "decomposition")
    return QuadLValue(n, s, _curly_L_decomposition(n, s, ctx), "decomposition")


def completed_fe_residual(n: int, s, ctx: PrecisionContext = DEFAULT_CONTEXT) -> Ball:
    """curlyL*_n(s) - curlyL*_n(1-s); 0 within radii when the FE holds."""
    if n == 0 or n % 4 in (2, 3):
        raise DomainError("completed FE residual needs n != 0, n = 0,1 mod 4")

    def completed(sv):
        Lv = curly_L(n, sv, ctx).value
        with mp.workprec(ctx.working_bits + 32):
            ss = mpf(sv) if isinstance(sv, (int, float)) else sv
            sgn = 1 if n > 0 else -1
            pref = (mp.power(mp.pi / abs(n), -ss / 2)
                    * mp.gamma(ss / 2 + mpf(1) / 4 - mpf(sgn) / 4))
            return Lv * Ball.rounded(pref)

    with mp.workprec(ctx.working_bits + 32):
        one_minus = 1 - (mpf(s) if isinstance(s, (int, float)) else s)
        return completed(s) - completed(one_minus)


def lg_minus_partial(s, N: int, ctx: PrecisionContext = DEFAULT_CONTEXT) -> Ball:
    """(1/8) sum_{j<=N} curlyL_{-4j}(1/2) / j^(s+1/2): diagnostic partial sum.

    No convergence claim at s = 1/4; the abscissa sits right of it and the
    value at 1/4 only exists by continuation, which is out of scope here.
    """
    if N < 1:
        raise DomainError("N >= 1 required")
    terms = []
    for j in range(1, N + 1):
        lv = curly_L(-4 * j, 0.5, ctx).value
        with mp.workprec(ctx.working_bits + 16):
            ss = mpf(s) if isinstance(s, (int, float)) else s
            terms.append(lv * Ball.rounded(mp.power(j, -(ss + mpf(1) / 2))))
    with mp.workprec(ctx.working_bits + 16):
        return ball_sum(terms) / 8


def bound_curly_half_smooth(x, prec: int = 64) -> mpf:
    """Monotone certified majorant of |curlyL_n(1/2)| over all |n| <= x.

    L-part <= 4(x/pi)^(1/4)+3 and the finite factor is at most
    sum_{d|f} d^-1/2 sigma_0(f/d) <= sigma_0(f)^2 <= 4f <= 4 sqrt(x).
    """
    with mp.workprec(prec):
        xx = mpf(max(2, x))
        return (4 * mp.power(xx / mp.pi, mpf(1) / 4) + 3) * (1 + 4 * mp.sqrt(xx))


def bound_curly_half(n: int, prec: int = 64) -> mpf:
    """Certified bound |curlyL_n(1/2)| for tail certificates."""
    if n % 4 in (2, 3):
        return mpf(0)
    if n == 0:
        return mpf(1)  # |zeta(0)| = 1/2
    split = split_discriminant(n)
    with mp.workprec(prec):
        base = bound_L_half(split.D, prec) if split.D != 1 else mpf(1.47)
        tfac = mpf(1)
        for d in divisors(split.f):
            if moebius(d) != 0:
                tfac += mp.power(d, -mpf(1) / 2) * len(divisors(split.f // d))
        return base * tfac
