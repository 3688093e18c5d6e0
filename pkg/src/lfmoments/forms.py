"""Level-1 cusp forms: exact integer Miller basis and Hecke eigendata.

The pipeline is exact-integer all the way to the eigenvalue normalization:
Eisenstein series (constants from exact Bernoulli fractions), an echelonized
integral basis, integer Hecke matrices, an integer characteristic polynomial
(Faddeev-LeVerrier over Fractions, asserted integral), and real roots
isolated by Sturm sequences with dyadic bisection.  Floating point enters
only at lambda(n) = a(n) / n^((weight-1)/2).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm

from mpmath import mp, mpf

from .precision import Ball, DomainError, PrecisionContext, DEFAULT_CONTEXT

__all__ = [
    "QExpansionBasis",
    "HeckeEigenform",
    "DiagonalizationError",
    "cusp_dim",
    "miller_basis",
    "hecke_matrix",
    "hecke_eigendata",
]


class DiagonalizationError(ArithmeticError):
    """T2 and T3 both fail to separate eigenforms."""


def cusp_dim(weight: int) -> int:
    """dim S_weight(SL2(Z)) by the classical formula."""
    if weight % 2 != 0:
        raise DomainError("odd weight has no level-1 forms here")
    if weight < 4:
        return 0
    full = weight // 12 + (0 if weight % 12 == 2 else 1)
    return max(0, full - 1)


# ---------------------------------------------------------------------------
# integer q-expansions
# ---------------------------------------------------------------------------

def _sigma_table(k: int, N: int) -> list[int]:
    """sigma_k(n) for 0 <= n <= N (index 0 unused)."""
    out = [0] * (N + 1)
    for d in range(1, N + 1):
        dk = d ** k
        for n in range(d, N + 1, d):
            out[n] += dk
    return out


def _eisenstein(k: int, N: int) -> list[int]:
    """E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n, exact integer constant."""
    p, q = mp.bernfrac(k)
    c = Fraction(-2 * k) / Fraction(int(p), int(q))
    assert c.denominator == 1, f"E_{k} constant not integral"
    c = int(c)
    sig = _sigma_table(k - 1, N)
    return [1] + [c * sig[n] for n in range(1, N + 1)]


def _poly_mul_trunc(a: list[int], b: list[int], N: int) -> list[int]:
    out = [0] * (N + 1)
    for i, ai in enumerate(a):
        if ai == 0 or i > N:
            continue
        lim = N - i
        for j, bj in enumerate(b):
            if j > lim:
                break
            if bj:
                out[i + j] += ai * bj
    return out


_series_cache: dict = {}
_series_lock = threading.Lock()


def _cached_series(name: str, n_terms: int, builder) -> list[int]:
    key = (name, n_terms)
    with _series_lock:
        hit = _series_cache.get(key)
    if hit is not None:
        return hit
    val = builder()
    with _series_lock:
        _series_cache.setdefault(key, val)
    return val


def _delta_series(N: int) -> list[int]:
    def build():
        e4 = _cached_series("E4", N, lambda: _eisenstein(4, N))
        e6 = _cached_series("E6", N, lambda: _eisenstein(6, N))
        e4sq = _poly_mul_trunc(e4, e4, N)
        e4cu = _poly_mul_trunc(e4sq, e4, N)
        e6sq = _poly_mul_trunc(e6, e6, N)
        out = []
        for x, y in zip(e4cu, e6sq):
            num = x - y
            assert num % 1728 == 0
            out.append(num // 1728)
        return out
    return _cached_series("Delta", N, build)


def _delta_power(i: int, N: int) -> list[int]:
    if i == 0:
        return [1] + [0] * N
    def build():
        return _poly_mul_trunc(_delta_power(i - 1, N), _delta_series(N), N)
    return _cached_series(f"Delta^{i}", N, build)


def _e4_power(a: int, N: int) -> list[int]:
    if a == 0:
        return [1] + [0] * N
    def build():
        return _poly_mul_trunc(_e4_power(a - 1, N), _cached_series("E4", N, lambda: _eisenstein(4, N)), N)
    return _cached_series(f"E4^{a}", N, build)


@dataclass
class QExpansionBasis:
    weight: int
    n_terms: int
    rows: list[list[int]]  # rows[i][n] = coefficient of q^n; leading 1 at q^(i+1)

    @property
    def dim(self) -> int:
        return len(self.rows)


def miller_basis(weight: int, n_terms: int) -> QExpansionBasis:
    """Echelonized integer basis of S_weight from Delta^i E4^a E6^b products."""
    d = cusp_dim(weight)
    if n_terms < d + 10:
        raise DomainError(f"n_terms must be >= dim + 10 = {d + 10}")
    N = n_terms
    rows = []
    e6 = _cached_series("E6", N, lambda: _eisenstein(6, N))
    for i in range(1, d + 1):
        e = weight - 12 * i
        b = 0 if e % 4 == 0 else 1
        a = (e - 6 * b) // 4
        assert a >= 0
        g = _poly_mul_trunc(_delta_power(i, N), _e4_power(a, N), N)
        if b:
            g = _poly_mul_trunc(g, e6, N)
        rows.append(g)
    # unitriangular elimination to Miller echelon form
    for i in range(d):
        for j in range(d):
            if j == i:
                continue
            c = rows[i][j + 1]
            if c and j > i:
                rj = rows[j]
                rows[i] = [x - c * y for x, y in zip(rows[i], rj)]
    # second sweep guarantees zeros also below (construction is triangular,
    # so one upward pass suffices; assert the contract)
    for i in range(d):
        assert rows[i][i + 1] == 1
        for j in range(d):
            if j != i:
                assert rows[i][j + 1] == 0, (weight, i, j)
    return QExpansionBasis(weight, n_terms, rows)


def hecke_matrix(basis: QExpansionBasis, p: int) -> list[list[int]]:
    """Integer matrix of T_p on the Miller basis (columns = images)."""
    d = basis.dim
    if basis.n_terms < p * d:
        raise DomainError(f"n_terms {basis.n_terms} < p*dim = {p * d}")
    kappa = basis.weight
    M = [[0] * d for _ in range(d)]
    for i in range(d):
        row = basis.rows[i]
        for n in range(1, d + 1):
            v = row[p * n] if p * n <= basis.n_terms else 0
            if n % p == 0:
                v += p ** (kappa - 1) * row[n // p]
            M[n - 1][i] = v  # coefficient of q^n of T_p f_i
    return M


# ---------------------------------------------------------------------------
# characteristic polynomial and Sturm isolation
# ---------------------------------------------------------------------------

def charpoly(M: list[list[int]]) -> list[int]:
    """Monic characteristic polynomial of an integer matrix, exact.

    Faddeev-LeVerrier over Fractions; coefficients asserted integral.
    Returns [c0, c1, ..., c_{d-1}, 1] with p(x) = sum c_k x^k.
    """
    d = len(M)
    A = [[Fraction(x) for x in row] for row in M]
    Mk = [[Fraction(1) if i == j else Fraction(0) for j in range(d)] for i in range(d)]
    coeffs = [Fraction(0)] * (d + 1)
    coeffs[d] = Fraction(1)
    for k in range(1, d + 1):
        # Ak = A @ Mk
        Ak = [[sum(A[i][t] * Mk[t][j] for t in range(d)) for j in range(d)]
              for i in range(d)]
        tr = sum(Ak[i][i] for i in range(d))
        ck = -tr / k
        coeffs[d - k] = ck
        Mk = [[Ak[i][j] + (ck if i == j else 0) for j in range(d)] for i in range(d)]
    out = []
    for c in coeffs:
        assert c.denominator == 1, "characteristic polynomial not integral"
        out.append(int(c))
    return out


def _poly_eval_sign(coeffs: list[int], u: int, k: int) -> int:
    """Sign of p(u / 2^k) for integer coefficients, exact integer arithmetic."""
    d = len(coeffs) - 1
    acc = 0
    for i in range(d, -1, -1):
        acc = acc * u + coeffs[i] * (1 << (k * (d - i)))  # p(x) 2^(k d) at x=u/2^k
    return (acc > 0) - (acc < 0)


def _poly_derivative(coeffs: list[int]) -> list[int]:
    return [i * coeffs[i] for i in range(1, len(coeffs))]


def _int_gcd_poly_is_one(p: list[int], q: list[int]) -> bool:
    """True if gcd(p, q) is constant (squarefree test via Fractions)."""
    a = [Fraction(c) for c in p]
    b = [Fraction(c) for c in q]

    def deg(v):
        while v and v[-1] == 0:
            v.pop()
        return len(v) - 1

    while deg(b) >= 0:
        da, db = deg(a), deg(b)
        if db < 0:
            break
        if da < db:
            a, b = b, a
            continue
        # a -= lead(a)/lead(b) x^(da-db) b
        f = a[-1] / b[-1]
        sh = da - db
        for i in range(db + 1):
            a[i + sh] -= f * b[i]
        a[-1] = Fraction(0)
        if deg(a) < deg(b):
            a, b = b, a
    return deg(a) == 0


def _sturm_chain(coeffs: list[int]) -> list[list[int]]:
    """Sturm chain as integer polynomials (denominators cleared)."""
    chain = [[Fraction(c) for c in coeffs],
             [Fraction(c) for c in _poly_derivative(coeffs)]]
    while True:
        a, b = chain[-2][:], chain[-1]
        if len(b) == 0 or all(c == 0 for c in b):
            chain.pop()
            break
        # remainder of a by b
        while len(a) >= len(b):
            if a[-1] == 0:
                a.pop()
                continue
            f = a[-1] / b[-1]
            sh = len(a) - len(b)
            for i in range(len(b)):
                a[i + sh] -= f * b[i]
            a.pop()
        while a and a[-1] == 0:
            a.pop()
        if not a:
            break
        chain.append([-c for c in a])
    out = []
    for poly in chain:
        den = 1
        for c in poly:
            den = lcm(den, c.denominator)
        ints = [int(c * den) for c in poly]
        g = 0
        for c in ints:
            g = gcd(g, abs(c))
        if g > 1:
            ints = [c // g for c in ints]
        out.append(ints)
    return out


def _sign_changes(chain, u: int, k: int) -> int:
    signs = []
    for poly in chain:
        s = _poly_eval_sign(poly, u, k)
        if s != 0:
            signs.append(s)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def real_roots(coeffs: list[int], prec: int) -> list[Ball]:
    """All real roots of a squarefree integer polynomial as tight balls."""
    d = len(coeffs) - 1
    if d == 0:
        return []
    if d == 1:
        r = Fraction(-coeffs[0], coeffs[1])
        with mp.workprec(prec + 16):
            return [Ball(mpf(r.numerator) / r.denominator,
                         abs(mpf(r.numerator) / r.denominator) * mpf(2) ** (8 - prec))]
    chain = _sturm_chain(coeffs)
    # Cauchy bound, rounded up to a power of two
    bound = 1 + max(abs(c) for c in coeffs[:-1]) // abs(coeffs[-1])
    k0 = 0
    B = 1
    while B < 2 * bound:
        B <<= 1
    intervals = [(-B, B, k0)]  # (u_lo, u_hi, k): endpoints u/2^k
    roots = []
    while intervals:
        lo, hi, k = intervals.pop()
        nroots = _sign_changes(chain, lo, k) - _sign_changes(chain, hi, k)
        if nroots == 0:
            continue
        if nroots == 1:
            roots.append((lo, hi, k))
            continue
        # split at a dyadic point where p does not vanish (at most d zeros)
        mid, lo2, hi2, k2 = lo + hi, 2 * lo, 2 * hi, k + 1
        while _poly_eval_sign(coeffs, mid, k2) == 0:
            mid, lo2, hi2, k2 = 2 * mid + 1, 2 * lo2, 2 * hi2, k2 + 1
        intervals.append((lo2, mid, k2))
        intervals.append((mid, hi2, k2))
    out = []
    for (lo, hi, k) in sorted(roots, key=lambda t: Fraction(t[0], 1 << t[2])):
        # bisection refinement on the sign of p; (lo, hi] holds 1 simple root
        exact = None
        if _poly_eval_sign(coeffs, hi, k) == 0:
            exact = Fraction(hi, 1 << k)
        slo = _poly_eval_sign(coeffs, lo, k)
        while exact is None and Fraction(hi - lo, 1 << k) > Fraction(1, 1 << (prec + 8)):
            mid = lo + hi
            lo, hi, k = 2 * lo, 2 * hi, k + 1
            sm = _poly_eval_sign(coeffs, mid, k)
            if sm == 0:
                exact = Fraction(mid, 1 << k)
                break
            if sm == slo:
                lo = mid
            else:
                hi = mid
        with mp.workprec(prec + 32):
            if exact is not None:
                m = mpf(exact.numerator) / exact.denominator
                out.append(Ball(m, abs(m) * mpf(2) ** (4 - prec - 32)))
            else:
                flo = mpf(lo) / (1 << k)
                fhi = mpf(hi) / (1 << k)
                m = (flo + fhi) / 2
                out.append(Ball(m, (fhi - flo) / 2 + abs(m) * mpf(2) ** (8 - prec - 32)))
    return out


# ---------------------------------------------------------------------------
# eigenforms
# ---------------------------------------------------------------------------

@dataclass
class HeckeEigenform:
    weight: int
    n_terms: int
    lam: list  # lam[n]: Ball for 1 <= n <= n_terms; lam[0] unused
    conjugacy_tag: int
    theta2: Ball
    omega: Ball | None = None

    def lam_at(self, n: int) -> Ball:
        if n < 1 or n > self.n_terms:
            raise DomainError(
                f"lambda({n}) outside eigen-data range; rebuild with n_terms >= {n}")
        return self.lam[n]


def _ball_solve_eigenvector(M: list[list[int]], theta: Ball, prec: int) -> list[Ball]:
    """Solve (M - theta) v = 0 with v_1 = 1 in ball arithmetic."""
    d = len(M)
    if d == 1:
        return [Ball(mpf(1))]
    with mp.workprec(prec):
        # unknowns v_2..v_d; equations: rows of (M - theta I)
        A = [[Ball.exact(mpf(M[i][j])) - (theta if i == j else 0)
              for j in range(d)] for i in range(d)]
        rows = [[A[i][j] for j in range(1, d)] + [-A[i][0]] for i in range(d)]
        # Gaussian elimination with partial pivoting over d x (d-1) system
        piv_rows = []
        used = [False] * d
        for col in range(d - 1):
            best, best_val = None, mpf(0)
            for r in range(d):
                if used[r]:
                    continue
                mag = rows[r][col].lower()
                if mag > best_val:
                    best, best_val = r, mag
            if best is None or best_val == 0:
                raise DiagonalizationError("singular reduced system")
            used[best] = True
            piv_rows.append(best)
            prow = rows[best]
            for r in range(d):
                if used[r] and r != best or r == best:
                    continue
                f = rows[r][col] / prow[col]
                rows[r] = [x - f * y for x, y in zip(rows[r], prow)]
        # back substitution
        v = [None] * (d - 1)
        for idx in range(d - 2, -1, -1):
            r = piv_rows[idx]
            acc = rows[r][d - 1]
            for j in range(idx + 1, d - 1):
                acc = acc - rows[r][j] * v[j]
            v[idx] = acc / rows[r][idx]
        return [Ball(mpf(1))] + v


def hecke_eigendata(weight: int, n_terms: int,
                    ctx: PrecisionContext = DEFAULT_CONTEXT) -> list[HeckeEigenform]:
    """Eigenforms of S_weight with normalized eigenvalue balls.

    T2-first diagonalization; if its characteristic polynomial is not
    squarefree, T3 discriminates; if both are degenerate the failure is
    reported, never guessed around.
    """
    d = cusp_dim(weight)
    if d < 1:
        return []
    n_terms = max(n_terms, 3 * d + 2, d + 10)
    basis = miller_basis(weight, n_terms)
    prec = ctx.working_bits + 64

    for p in (2, 3):
        M = hecke_matrix(basis, p)
        cp = charpoly(M)
        if _int_gcd_poly_is_one(cp, _poly_derivative(cp)):
            thetas = real_roots(cp, prec)
            if len(thetas) != d:
                raise DiagonalizationError(
                    f"T{p} at weight {weight}: {len(thetas)} real roots, dim {d}")
            M2 = M if p == 2 else hecke_matrix(basis, 2)
            forms = []
            for tag, theta in enumerate(thetas):
                v = _ball_solve_eigenvector(M, theta, prec)
                with mp.workprec(prec):
                    lam = [None] * (n_terms + 1)
                    half = mpf(weight - 1) / 2
                    for n in range(1, n_terms + 1):
                        a_n = Ball(mpf(0))
                        for i in range(d):
                            c = basis.rows[i][n]
                            if c:
                                a_n = a_n + v[i] * c
                        lam[n] = a_n * Ball.rounded(mp.power(n, -half))
                    if p == 2:
                        th2 = theta
                    else:
                        # T2 eigenvalue from (M2 v)_1 since v_1 = 1
                        th2 = Ball(mpf(0))
                        for j in range(d):
                            if M2[0][j]:
                                th2 = th2 + v[j] * M2[0][j]
                forms.append(HeckeEigenform(weight, n_terms, lam, tag, th2))
            forms.sort(key=lambda f: f.theta2.mid)
            for tag, f in enumerate(forms):
                f.conjugacy_tag = tag
            return forms
    raise DiagonalizationError(
        f"T2 and T3 both have repeated eigenvalues at weight {weight}")
