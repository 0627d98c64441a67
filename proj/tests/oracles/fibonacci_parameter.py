"""Independent estimate of the Fibonacci parameter of x^l + c.

The superattracting centers f_c^{S_n}(0) = 0 for the Fibonacci periods S_n = 2, 3, 5, 8, ...
converge to the parameter.  Each center is found by Newton in c, seeded by geometric
extrapolation of the previous ones.  No closest-return bookkeeping is shared with the library.

    python3 fibonacci_parameter.py L LEVELS DIGITS
"""
import sys

import numpy as np

from mpmath import mp, mpf


def orbit(l, c, period):
    x, dx = mpf(0), mpf(0)
    for _ in range(period):
        dx = l * x ** (l - 1) * dx + 1
        x = x ** l + c
    return x, dx


def center(l, period, guess):
    c = guess
    tol = mpf(10) ** (-mp.dps + 5)
    for _ in range(200):
        x, dx = orbit(l, c, period)
        step = x / dx
        c -= step
        if abs(step) < tol:
            break
    return c


def closest_returns(l, c, period):
    x, best, times = c, None, []
    for t in range(1, period):
        if best is None or abs(x) < best:
            best = abs(x)
            times.append(t)
        x = x ** l + c
    return times


def fibonacci_like(times, period):
    s = [1, 2]
    while s[-1] < period:
        s.append(s[-1] + s[-2])
    return times == [t for t in s if t < period]


def centers_near(l, period, lo, hi, grid):
    """Sign changes of f_c^period(0) on a float grid, polished by Newton at full precision."""
    pts = np.linspace(float(lo), float(hi), grid + 1)
    x = np.zeros_like(pts)
    for _ in range(period):
        x = x ** l + pts
    out = []
    for k in np.nonzero(np.sign(x[:-1]) != np.sign(x[1:]))[0]:
        if not fibonacci_like(closest_returns(l, float(pts[k]), min(period, 60)), min(period, 60)):
            continue
        c = center(l, period, mpf((pts[k] + pts[k + 1]) / 2))
        if lo <= c <= hi and fibonacci_like(closest_returns(l, c, period), period):
            if all(abs(c - o) > mpf(10) ** (-mp.dps // 2) for o in out):
                out.append(c)
    return out


def main():
    l, levels, digits = int(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3])
    mp.dps = digits + 20
    periods = [3, 5]
    while len(periods) < levels:
        periods.append(periods[-1] + periods[-2])
    prev = None
    lo, hi = mpf(-2), mpf(-1)
    for p in periods:
        found = centers_near(l, p, lo, hi, 2_000_000)
        if not found:
            print(p, "none in", mp.nstr(lo, 12), mp.nstr(hi, 12), flush=True)
            return
        c = found[0] if prev is None else min(found, key=lambda v: abs(v - prev))
        print(p, len(found), mp.nstr(c, digits), flush=True)
        if prev is not None:
            w = 4 * abs(c - prev)
            lo, hi = max(c - w, mpf(-2)), min(c + w, mpf(-1))
        prev = c


main()
