from mpmath import mp, mpf


def hp_diff(a, b, prec: int = 512):
    """|a - b| computed at high precision (mp global prec would round)."""
    with mp.workprec(prec):
        return abs(a - b)


def assert_close(a, b, tol, prec: int = 512):
    with mp.workprec(prec):
        d = abs(a - b)
        assert d < mpf(tol), f"|{mp.nstr(a, 20)} - {mp.nstr(b, 20)}| = {mp.nstr(d, 5)} >= {tol}"
