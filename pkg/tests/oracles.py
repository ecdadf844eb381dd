"""Independent reference computations used by the tests."""
import math


def brute_directed_1d(a, b):
    best = 0.0
    for x in a:
        m = math.inf
        for y in b:
            d = abs(float(x) - float(y))
            if d < m:
                m = d
        if m > best:
            best = m
    return best


def brute_directed_2d(a, b, lam):
    best = 0.0
    for ta, va in a:
        m = math.inf
        for tb, vb in b:
            dx = lam * float(ta) - lam * float(tb)
            dy = float(va) - float(vb)
            d = math.sqrt(dx * dx + dy * dy)
            if d < m:
                m = d
        if m > best:
            best = m
    return best


def linear_interp(ts, vs, x):
    for i in range(len(ts) - 1):
        if ts[i] <= x <= ts[i + 1]:
            w = (x - ts[i]) / (ts[i + 1] - ts[i])
            return vs[i] + w * (vs[i + 1] - vs[i])
    raise ValueError("outside range")


def normal_pdf(x, mu, sigma):
    z = (x - mu) / sigma
    return math.exp(-0.5 * z * z) / (sigma * math.sqrt(2 * math.pi))


def bisect_pdf_crossing(mu_a, sa, mu_b, sb, iters=200):
    def f(x):
        return normal_pdf(x, mu_a, sa) - normal_pdf(x, mu_b, sb)

    lo, hi = mu_a, mu_b
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
