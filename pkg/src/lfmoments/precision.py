"""Error-tracked arbitrary-precision arithmetic on top of mpmath.

Every numeric result is a Ball (midpoint + absolute error radius).  Radii are
propagated monotonically: arithmetic never understates the combined input
radii plus a rounding cushion of a few ulps per operation.  Special functions
come in two flavours here:

* gamma / log-gamma / digamma: two-precision evaluation, radius from the
  cross-precision difference plus the rounding model;
* zeta and zeta': Euler-Maclaurin with an explicit Bernoulli remainder bound
  (the derivative bound comes from a Cauchy estimate on the remainder);
* 2F1 and Bessel series: term-tracked summation that records the largest
  partial term M and the result magnitude R, and escalates the working
  precision until working_bits - log2(M/R) leaves enough bits for the target.

All functions are pure in (input, ctx); the mpmath global context is only
touched through mp.workprec, so results are deterministic bit-for-bit.
Process-based parallelism is safe; thread-based is not (mpmath's context is
global state), which is why the moment engine parallelises over processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mpmath import mp, mpf, mpc

__all__ = [
    "PrecisionContext",
    "Ball",
    "DomainError",
    "PoleError",
    "PrecisionError",
    "make_context",
    "gamma_family",
    "zeta",
    "hyp2f1",
    "bessel",
]


class DomainError(ValueError):
    """Input outside the supported domain of an operation."""


class PoleError(ValueError):
    """Evaluation requested at a pole."""


class PrecisionError(ArithmeticError):
    """Escalation budget exhausted without meeting the target error."""


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision, target error and escalation policy."""

    working_bits: int
    target_abs_error: float
    max_escalations: int = 8
    escalation_factor: int = 2

    def target(self) -> mpf:
        with mp.workprec(64):
            return mpf(self.target_abs_error)

    def ladder(self):
        """Yield working precisions, escalating up to max_escalations times."""
        bits = self.working_bits
        for _ in range(self.max_escalations + 1):
            yield bits
            bits *= self.escalation_factor

    def with_target(self, target_abs_error) -> "PrecisionContext":
        return PrecisionContext(self.working_bits, float(target_abs_error),
                                self.max_escalations, self.escalation_factor)

    def with_bits(self, working_bits: int) -> "PrecisionContext":
        return PrecisionContext(int(working_bits), self.target_abs_error,
                                self.max_escalations, self.escalation_factor)


def make_context(working_bits: int, target_abs_error: float) -> PrecisionContext:
    if working_bits < 53:
        raise DomainError(f"working_bits must be >= 53, got {working_bits}")
    if not (float(target_abs_error) > 0):
        raise DomainError("target_abs_error must be positive")
    return PrecisionContext(int(working_bits), float(target_abs_error))


DEFAULT_CONTEXT = PrecisionContext(128, 1e-30)


def _eps(extra: int = 0) -> mpf:
    # rounding cushion at the current precision; a few ulps per operation
    return mpf(2) ** (4 + extra - mp.prec)


class Ball:
    """Midpoint-radius value. mid is mpf or mpc, rad is a nonnegative mpf."""

    __slots__ = ("mid", "rad")

    def __init__(self, mid, rad=None):
        self.mid = mid
        if rad is None:
            rad = mpf(0)
        self.rad = rad if rad >= 0 else -rad

    @staticmethod
    def exact(x) -> "Ball":
        if isinstance(x, Ball):
            return x
        if isinstance(x, (int, float)):
            return Ball(mpf(x) if not isinstance(x, complex) else mpc(x))
        return Ball(x)

    @staticmethod
    def rounded(mid) -> "Ball":
        """Value known to the current working precision only."""
        return Ball(mid, abs(mid) * _eps())

    # -- bookkeeping ------------------------------------------------------

    def mag(self) -> mpf:
        """Upper bound for |value|."""
        return abs(self.mid) + self.rad

    def lower(self) -> mpf:
        """Lower bound for |value| (>= 0)."""
        lo = abs(self.mid) - self.rad
        return lo if lo > 0 else mpf(0)

    @property
    def is_complex(self) -> bool:
        return isinstance(self.mid, mpc)

    def real(self) -> "Ball":
        if not self.is_complex:
            return self
        return Ball(self.mid.real, self.rad)

    def imag(self) -> "Ball":
        if not self.is_complex:
            return Ball(mpf(0), self.rad)
        return Ball(self.mid.imag, self.rad)

    def contains(self, x) -> bool:
        return abs(self.mid - x) <= self.rad * (1 + _eps())

    def overlaps(self, other: "Ball") -> bool:
        return abs(self.mid - other.mid) <= (self.rad + other.rad) * (1 + _eps())

    def widened(self, extra) -> "Ball":
        return Ball(self.mid, self.rad + abs(extra))

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        o = Ball.exact(other)
        mid = self.mid + o.mid
        return Ball(mid, self.rad + o.rad + abs(mid) * _eps())

    __radd__ = __add__

    def __neg__(self):
        return Ball(-self.mid, self.rad)

    def __sub__(self, other):
        return self + (-Ball.exact(other))

    def __rsub__(self, other):
        return Ball.exact(other) + (-self)

    def __mul__(self, other):
        o = Ball.exact(other)
        mid = self.mid * o.mid
        rad = (abs(self.mid) * o.rad + abs(o.mid) * self.rad + self.rad * o.rad
               + abs(mid) * _eps())
        return Ball(mid, rad)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Ball.exact(other)
        den_lo = abs(o.mid) - o.rad
        if not den_lo > 0:
            raise ZeroDivisionError("ball division by an interval containing 0")
        mid = self.mid / o.mid
        # |x/y - mx/my| <= (|mx| ry + |my| rx) / (|my| (|my| - ry))
        rad = (abs(self.mid) * o.rad + abs(o.mid) * self.rad) / (abs(o.mid) * den_lo)
        return Ball(mid, rad + abs(mid) * _eps())

    def __rtruediv__(self, other):
        return Ball.exact(other) / self

    def sqrt(self) -> "Ball":
        if self.is_complex:
            raise DomainError("sqrt of complex balls not supported")
        lo = self.mid - self.rad
        if lo < 0:
            raise DomainError("sqrt of an interval reaching below 0")
        mid = mp.sqrt(self.mid)
        # derivative bound 1/(2 sqrt(lo)) on the interval
        rad = self.rad / (2 * mp.sqrt(lo)) if lo > 0 else mp.sqrt(self.rad)
        return Ball(mid, rad + abs(mid) * _eps())

    def __repr__(self):
        return f"Ball({mp.nstr(self.mid, 12)} +/- {mp.nstr(self.rad, 3)})"

    def __str__(self):
        return self.__repr__()


def ball_sum(balls) -> Ball:
    """Sum in the given (fixed) order; radius is the exact radius sum."""
    total = Ball(mpf(0))
    for b in balls:
        total = total + b
    return total


# ---------------------------------------------------------------------------
# gamma family
# ---------------------------------------------------------------------------

def _is_nonpositive_int(z) -> bool:
    if isinstance(z, mpc):
        if z.imag != 0:
            return False
        z = z.real
    return z <= 0 and z == mp.floor(z)


def _two_precision(fn, ctx: PrecisionContext) -> Ball:
    """Evaluate fn(bits) at two precisions; radius from the difference."""
    target = ctx.target()
    result = None
    for bits in ctx.ladder():
        with mp.workprec(bits + 48):
            hi = fn()
        with mp.workprec(bits):
            lo = fn()
        with mp.workprec(bits + 48):
            rad = abs(hi - lo) + abs(hi) * mpf(2) ** (20 - bits - 48)
            result = Ball(hi, rad)
        if result.rad <= target:
            return result
    raise PrecisionError(f"target {ctx.target_abs_error} not met after "
                         f"{ctx.max_escalations} escalations (rad={result.rad})")


def gamma_family(z, variant: str, ctx: PrecisionContext = DEFAULT_CONTEXT) -> Ball:
    """gamma, log_gamma or digamma of z with a tracked error radius."""
    with mp.workprec(ctx.working_bits + 16):
        zz = mpc(z) if isinstance(z, complex) else mpf(z) if isinstance(z, (int, float)) else z
    if variant in ("gamma", "digamma") and _is_nonpositive_int(zz):
        raise PoleError(f"{variant} pole at z={zz}")
    if variant == "log_gamma":
        re = zz.real if isinstance(zz, mpc) else zz
        if not re > 0:
            raise DomainError("log_gamma restricted to Re z > 0")
    fns = {"gamma": mp.gamma, "log_gamma": mp.loggamma, "digamma": mp.digamma}
    if variant not in fns:
        raise DomainError(f"unknown variant {variant!r}")
    f = fns[variant]
    return _two_precision(lambda: f(zz), ctx)


# ---------------------------------------------------------------------------
# zeta via Euler-Maclaurin
# ---------------------------------------------------------------------------

def _pochhammer(s, r):
    v = mpf(1) if not isinstance(s, mpc) else mpc(1)
    for i in range(r):
        v *= (s + i)
    return v


def _zeta_em_terms(s, N: int, J: int, derivative: bool):
    """Finite Euler-Maclaurin part (and its exact s-derivative if asked)."""
    val = mpf(0) if not isinstance(s, mpc) else mpc(0)
    dval = val
    for n in range(1, N):
        ns = mp.power(n, -s)
        val += ns
        if derivative:
            dval += -mp.log(n) * ns
    Npow = mp.power(N, -s)
    logN = mp.log(N)
    val += N * Npow / (s - 1) + Npow / 2
    if derivative:
        dval += (-logN * N * Npow / (s - 1) - N * Npow / (s - 1) ** 2
                 - logN * Npow / 2)
    for j in range(1, J + 1):
        bp, bq = mp.bernfrac(2 * j)
        B = mpf(bp) / bq
        fac = mp.factorial(2 * j)
        poch = _pochhammer(s, 2 * j - 1)
        Nexp = mp.power(N, -s - 2 * j + 1)
        coeff = B / fac
        val += coeff * poch * Nexp
        if derivative:
            dpoch = poch * mp.fsum(1 / (s + i) for i in range(2 * j - 1))
            dval += coeff * (dpoch - logN * poch) * Nexp
    return val, dval


def _zeta_em_remainder_bound(s_abs, sigma, N: int, J: int) -> mpf:
    """|R_J(s,N)| <= |s+2J+1|/(sigma+2J+1) * |next Bernoulli term| (sigma+2J+1 > 1)."""
    if not sigma + 2 * J + 1 > 1:
        return mp.inf
    bp, bq = mp.bernfrac(2 * J + 2)
    B = abs(mpf(bp) / bq)
    # |(s)_{2J+1}| <= prod (|s| + i)
    poch = mpf(1)
    for i in range(2 * J + 1):
        poch *= (s_abs + i)
    term = B / mp.factorial(2 * J + 2) * poch * mp.power(N, -(sigma + 2 * J + 1))
    return (s_abs + 2 * J + 1) / (sigma + 2 * J + 1) * term


def zeta(s, derivative_order: int = 0, ctx: PrecisionContext = DEFAULT_CONTEXT) -> Ball:
    """zeta(s) or zeta'(s) by Euler-Maclaurin with a rigorous remainder bound."""
    if derivative_order not in (0, 1):
        raise DomainError("derivative_order must be 0 or 1")
    with mp.workprec(ctx.working_bits + 16):
        ss = mpc(s) if isinstance(s, complex) else mpf(s) if isinstance(s, (int, float)) else s
        if ss == 1:
            raise PoleError("zeta pole at s=1")
        sigma = ss.real if isinstance(ss, mpc) else ss
        s_abs = abs(ss)
    target = ctx.target()
    last = None
    for bits in ctx.ladder():
        with mp.workprec(bits + 32):
            J = max(4, int(0.18 * bits), int((2 - sigma) / 2) + 2)
            # remainder ~ (N/(2 pi))-geometric in J once N > |s|; pick N then J
            N = max(10, int(s_abs) + 8, int(0.36 * bits / max(math.log(4), 1)))
            n_cap = 64 * bits + int(s_abs) + 64
            while True:
                bound = _zeta_em_remainder_bound(s_abs, sigma, N, J)
                if derivative_order == 1:
                    # Cauchy bound on R' over a radius-1/2 disk around s
                    bound = bound + 2 * _zeta_em_remainder_bound(
                        s_abs + mpf(1) / 2, sigma - mpf(1) / 2, N, J)
                if bound <= target / 4 or N >= n_cap:
                    break
                N = min(int(N * 1.5) + 4, n_cap)
            val, dval = _zeta_em_terms(ss, N, J, derivative_order == 1)
            out = dval if derivative_order == 1 else val
            rad = bound + abs(out) * mpf(2) ** (24 - bits) * (N + 2 * J)
            last = Ball(out, rad)
        if last.rad <= target:
            return last
    raise PrecisionError(f"zeta target {ctx.target_abs_error} not met (rad={last.rad})")


# ---------------------------------------------------------------------------
# Gauss hypergeometric with cancellation tracking
# ---------------------------------------------------------------------------

def _tracked_series(term_iter, ratio_bound, bits: int):
    """Sum a series given by term_iter at precision bits.

    ratio_bound(j) must upper-bound |t_{i+1}/t_i| for all i >= j.  Returns
    (sum, max_term, tail_bound, nterms).  Terms are generated until the
    current term is below 2^-bits relative to the running scale and the
    ratio bound certifies a geometric tail.
    """
    tiny = mpf(2) ** (-bits - 10)
    total = mpf(0)
    max_term = mpf(0)
    j = 0
    for t in term_iter:
        total += t
        at = abs(t)
        if at > max_term:
            max_term = at
        scale = max(abs(total), max_term * mpf(2) ** (-bits // 2))
        if j > 2 and at <= max(scale, mpf(1)) * tiny:
            r = ratio_bound(j)
            if r < 1:
                tail = at * r / (1 - r)
                return total, max_term, tail, j + 1
        j += 1
        if j > 4000000:
            raise PrecisionError("series did not certify a geometric tail")
    # generator exhausted: the series terminated exactly
    return total, max_term, mpf(0), j


def _hyp2f1_raw(a, b, c, x, bits: int):
    """(value, max_term, tail_bound) of 2F1(a,b;c;x) at precision bits."""
    with mp.workprec(bits):
        aa, bb, cc, xx = mpf(a), mpf(b), mpf(c), mpf(x)
        amax, bmax, cmax = abs(aa), abs(bb), abs(cc)

        def terms():
            t = mpf(1)
            j = 0
            while True:
                yield t
                t = t * (aa + j) * (bb + j) / ((cc + j) * (1 + j)) * xx
                if t == 0:
                    yield t
                    return
                j += 1

        def ratio_bound(j):
            if j <= cmax:
                return mpf(1)  # not yet certified
            return xx * (j + amax) * (j + bmax) / ((j - cmax) * (j + 1))

        return _tracked_series(terms(), ratio_bound, bits)


def hyp2f1(a, b, c, x, ctx: PrecisionContext = DEFAULT_CONTEXT) -> Ball:
    """2F1(a,b;c;x) for 0 <= x < 1 with cancellation-aware escalation."""
    if not (0 <= x < 1):
        raise DomainError(f"hyp2f1 needs 0 <= x < 1, got x={x}")
    with mp.workprec(64):
        if mpf(c) <= 0 and mpf(c) == mp.floor(mpf(c)):
            raise DomainError("c must not be a non-positive integer")
    target = ctx.target()
    with mp.workprec(64):
        tbits = max(8, int(-mp.log(target, 2)) + 8)
    guard = 24
    last = None
    for bits in ctx.ladder():
        work = bits + guard
        total, max_term, tail, _ = _hyp2f1_raw(a, b, c, x, work)
        with mp.workprec(work):
            scale = max(abs(total), mpf(2) ** -work)
            cancel_bits = int(mp.log(max_term / scale, 2)) + 1 if max_term > scale else 0
            rad = tail + max_term * mpf(2) ** (10 - work)
            last = Ball(total, rad)
            # escalate until the guard covers cancellation plus the target bits
            if work - cancel_bits >= tbits and last.rad <= target:
                return last
            guard = max(guard * 2, cancel_bits + 24)
    raise PrecisionError(f"hyp2f1 cancellation not resolved (rad={last.rad})")


# ---------------------------------------------------------------------------
# Bessel functions
# ---------------------------------------------------------------------------

def _j0_series(x, bits):
    with mp.workprec(bits):
        q = mpf(x) ** 2 / 4

        def terms():
            t = mpf(1)
            j = 0
            while True:
                yield t
                t = -t * q / ((j + 1) ** 2)
                j += 1

        def ratio_bound(j):
            return q / ((j + 1) ** 2)

        return _tracked_series(terms(), ratio_bound, bits)


def _y0_series(x, bits):
    """Y0 via the standard small-argument series (needs J0)."""
    with mp.workprec(bits):
        xx = mpf(x)
        q = xx ** 2 / 4
        j0, mt0, tail0, _ = _j0_series(xx, bits)
        total = mpf(0)
        max_term = mpf(0)
        t = mpf(1)
        h = mpf(0)
        j = 0
        tiny = mpf(2) ** (-bits - 10)
        tail = None
        while True:
            j += 1
            h += mpf(1) / j
            t = t * q / j ** 2
            term = (-1) ** (j + 1) * h * t
            total += term
            if abs(term) > max_term:
                max_term = abs(term)
            if j > 3 and abs(term) <= max(abs(total), mpf(1)) * tiny:
                r = q / (j + 1) ** 2 * (h + 1) / h
                if r < 1:
                    tail = abs(term) * r / (1 - r)
                    break
            if j > 4000000:
                raise PrecisionError("Y0 series stalled")
        lead = (mp.log(xx / 2) + mp.euler) * j0
        val = 2 / mp.pi * (lead + total)
        rad = 2 / mp.pi * ((abs(mp.log(xx / 2)) + 1) * (tail0 + mt0 * mpf(2) ** (8 - bits))
                           + tail + max_term * mpf(2) ** (8 - bits))
        return val, max(max_term, mt0), rad


def _jn_series(nu, x, bits):
    with mp.workprec(bits):
        xx = mpf(x)
        q = xx ** 2 / 4
        lead = mp.power(xx / 2, nu) / mp.factorial(nu)

        def terms():
            t = lead
            j = 0
            while True:
                yield t
                t = -t * q / ((j + 1) * (nu + j + 1))
                j += 1

        def ratio_bound(j):
            return q / ((j + 1) * (nu + j + 1))

        return _tracked_series(terms(), ratio_bound, bits)


def _bessel_asymptotic(kind, x, bits):
    """Hankel expansion for J0/Y0 at large x; remainder ~ 2 |first omitted|."""
    with mp.workprec(bits):
        xx = mpf(x)
        # a_k(0) = prod_{i<=k} (-(2i-1)^2) / (k! 8^k), signs included
        P = mpf(1)
        Q = mpf(0)
        ak = mpf(1)
        k = 0
        last_p = mpf(1)
        last_q = mpf(0)
        while True:
            ak_next = ak * -((2 * k + 1) ** 2) / ((k + 1) * 8)  # a_{k+1}
            term = ak_next / xx ** (k + 1)
            if k % 2 == 0:
                Q += ((-1) ** (k // 2)) * term
                last_q = abs(term)
            else:
                P += ((-1) ** ((k + 1) // 2)) * term
                last_p = abs(term)
            k += 1
            nxt = abs(ak_next * ((2 * k + 1) ** 2) / ((k + 1) * 8) / xx ** (k + 1))
            if nxt > abs(term):
                break  # smallest term of the divergent tail reached
            if nxt < mpf(2) ** (-bits - 8):
                break
            ak = ak_next
            if k > 4 * bits:
                break
        rem = 2 * (last_p + last_q)
        amp = mp.sqrt(2 / (mp.pi * xx))
        w = xx - mp.pi / 4
        cw, sw = mp.cos(w), mp.sin(w)
        if kind == "J0":
            val = amp * (cw * P - sw * Q)
        else:
            val = amp * (sw * P + cw * Q)
        return val, amp * rem + abs(val) * mpf(2) ** (8 - bits)


def bessel(kind, x, ctx: PrecisionContext = DEFAULT_CONTEXT, order: int | None = None) -> Ball:
    """J0, Y0 or integer-order J_nu at real x with tracked radius.

    kind: "J0", "Y0" or "J" (with order=nu >= 0).  Power series for small x;
    the Hankel asymptotic branch takes over once its certified remainder
    beats the target, and the two are cross-validated at the crossover in
    the test suite.
    """
    if kind == "Y0" and not x > 0:
        raise DomainError("Y0 needs x > 0")
    if kind in ("J0", "J") and x < 0:
        raise DomainError("J needs x >= 0")
    if kind == "J":
        if order is None or order < 0 or int(order) != order:
            raise DomainError("J needs a nonnegative integer order")
    target = ctx.target()
    with mp.workprec(64):
        asym_ok = kind in ("J0", "Y0") and mpf(x) >= 0.6 * (-mp.log(target) ) + 10
    last = None
    guard = 16
    for bits in ctx.ladder():
        work = bits + guard
        if asym_ok:
            with mp.workprec(work):
                val, rad = _bessel_asymptotic(kind, x, work)
                last = Ball(val, rad)
            if last.rad <= target:
                return last
            guard *= 2
            continue
        if kind == "J0":
            total, max_term, tail, _ = _j0_series(x, work)
        elif kind == "Y0":
            total, max_term, tail = _y0_series(x, work)
        else:
            total, max_term, tail, _ = _jn_series(int(order), x, work)
        with mp.workprec(work):
            rad = tail + max_term * mpf(2) ** (10 - work)
            last = Ball(total, rad)
            scale = max(abs(total), mpf(2) ** -work)
            cancel_bits = int(mp.log(max_term / scale, 2)) + 1 if max_term > scale else 0
        with mp.workprec(64):
            tbits = max(8, int(-mp.log(target, 2)) + 8)
        if work - cancel_bits >= tbits and last.rad <= target:
            return last
        guard = max(guard * 2, cancel_bits + 24)
    raise PrecisionError(f"bessel {kind} target not met (rad={last.rad})")
