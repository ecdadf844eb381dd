# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: max-min Hausdorff scans and the fixed-step rod integrator.

Every function here has a drop-in twin in ``fallsift._pykernels``; the two
must agree to the last bit on the Hausdorff scans.
"""
import numpy as np

from libc.math cimport sin, sqrt, fabs, INFINITY


def directed_hd_1d(const double[::1] a, const double[::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0]
    cdef Py_ssize_t i, lo, hi, mid
    cdef double best = 0.0, d, x
    cdef double[::1] s = np.sort(np.asarray(b))
    for i in range(n):
        x = a[i]
        lo = 0
        hi = m
        while lo < hi:
            mid = (lo + hi) // 2
            if s[mid] < x:
                lo = mid + 1
            else:
                hi = mid
        d = INFINITY
        if lo < m:
            d = fabs(x - s[lo])
        if lo > 0 and fabs(x - s[lo - 1]) < d:
            d = fabs(x - s[lo - 1])
        if d > best:
            best = d
    return best


def directed_hd_2d(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0]
    cdef Py_ssize_t i, j
    cdef double best = 0.0, cmin, dx, dy, d
    for i in range(n):
        cmin = INFINITY
        for j in range(m):
            dx = a[i, 0] - b[j, 0]
            dy = a[i, 1] - b[j, 1]
            d = dx * dx + dy * dy
            if d < cmin:
                cmin = d
                # this point cannot raise the running maximum any more
                if cmin <= best:
                    break
        if cmin > best:
            best = cmin
    return sqrt(best)


cdef inline double _acc(double k, double theta) nogil:
    return k * sin(theta)


def rod_rk4(double theta0, double omega0, double k, double dt,
            double theta_stop, double lever, double speed_stop,
            bint stop_on_stall, Py_ssize_t max_steps):
    cdef double[::1] th = np.empty(max_steps + 1)
    cdef double[::1] om = np.empty(max_steps + 1)
    cdef double t1, w1, t2, w2, t3, w3, t4, w4, theta = theta0, omega = omega0
    cdef double h2 = 0.5 * dt
    cdef Py_ssize_t i = 0
    cdef int code = 3
    th[0] = theta
    om[0] = omega
    while i < max_steps:
        t1 = omega
        w1 = _acc(k, theta)
        t2 = omega + h2 * w1
        w2 = _acc(k, theta + h2 * t1)
        t3 = omega + h2 * w2
        w3 = _acc(k, theta + h2 * t2)
        t4 = omega + dt * w3
        w4 = _acc(k, theta + dt * t3)
        theta = theta + dt / 6.0 * (t1 + 2.0 * t2 + 2.0 * t3 + t4)
        omega = omega + dt / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4)
        i += 1
        th[i] = theta
        om[i] = omega
        if theta >= theta_stop:
            code = 0
            break
        if lever * sin(theta) * omega >= speed_stop:
            code = 1
            break
        if stop_on_stall and omega <= 0.0:
            code = 2
            break
    return np.asarray(th[:i + 1]).copy(), np.asarray(om[:i + 1]).copy(), code
