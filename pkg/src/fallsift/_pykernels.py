"""Pure-Python/numpy twins of the compiled kernels in ``_kernels.pyx``."""
import math

import numpy as np

_CHUNK = 2048


def directed_hd_1d(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    best = 0.0
    for start in range(0, a.shape[0], _CHUNK):
        block = a[start:start + _CHUNK]
        d = np.abs(block[:, None] - b[None, :]).min(axis=1).max()
        best = max(best, float(d))
    return best


def directed_hd_2d(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    best = 0.0
    for start in range(0, a.shape[0], _CHUNK):
        block = a[start:start + _CHUNK]
        dx = block[:, None, 0] - b[None, :, 0]
        dy = block[:, None, 1] - b[None, :, 1]
        d = (dx * dx + dy * dy).min(axis=1).max()
        best = max(best, float(d))
    return math.sqrt(best)


def rod_rk4(theta0, omega0, k, dt, theta_stop, lever, speed_stop,
            stop_on_stall, max_steps):
    sin = math.sin
    h2 = 0.5 * dt
    theta, omega = theta0, omega0
    th = [theta]
    om = [omega]
    code = 3
    for _ in range(max_steps):
        t1 = omega
        w1 = k * sin(theta)
        t2 = omega + h2 * w1
        w2 = k * sin(theta + h2 * t1)
        t3 = omega + h2 * w2
        w3 = k * sin(theta + h2 * t2)
        t4 = omega + dt * w3
        w4 = k * sin(theta + dt * t3)
        theta = theta + dt / 6.0 * (t1 + 2.0 * t2 + 2.0 * t3 + t4)
        omega = omega + dt / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4)
        th.append(theta)
        om.append(omega)
        if theta >= theta_stop:
            code = 0
            break
        if lever * sin(theta) * omega >= speed_stop:
            code = 1
            break
        if stop_on_stall and omega <= 0.0:
            code = 2
            break
    return np.array(th), np.array(om), code
