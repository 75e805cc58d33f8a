"""Independent reference values for the frozen regression tests.

Re-implements the documented generator (mt19937_64, 53-bit uniforms,
pairwise Box-Muller) in pure Python and a range-bearing EKF predict/correct
step with numpy. Run with: python3 reference_values.py
"""

import math

import numpy as np


class MT19937_64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.index = 312
        self.mt[0] = seed & 0xFFFFFFFFFFFFFFFF
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & 0xFFFFFFFFFFFFFFFF

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.index = 0

    def next(self):
        if self.index >= 312:
            self._twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & 0xFFFFFFFFFFFFFFFF


def normals(seed, count):
    gen = MT19937_64(seed)
    out = []
    while len(out) < count:
        u1 = (gen.next() >> 11) * 2.0**-53
        u2 = (gen.next() >> 11) * 2.0**-53
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        out += [r * math.cos(2.0 * math.pi * u2), r * math.sin(2.0 * math.pi * u2)]
    return out[:count]


def wrap(a):
    return math.remainder(a, 2.0 * math.pi)


LANDMARKS = [(5.0, 5.0), (2.0, 8.0)]


def h(x):
    z = []
    for lx, ly in LANDMARKS:
        dx, dy = lx - x[0], ly - x[1]
        z += [math.hypot(dx, dy), wrap(math.atan2(dy, dx) - x[2])]
    return np.array(z)


def H(x):
    rows = []
    for lx, ly in LANDMARKS:
        dx, dy = lx - x[0], ly - x[1]
        r2 = dx * dx + dy * dy
        r = math.sqrt(r2)
        rows.append([-dx / r, -dy / r, 0.0])
        rows.append([dy / r2, -dx / r2, -1.0])
    return np.array(rows)


def ekf_step():
    dt, v, w = 0.1, 1.0, 0.1
    x = np.array([1.0, 2.0, 0.5])
    P = np.diag([0.04, 0.09, 0.01])
    Q = np.diag([1e-3, 1e-3, 1e-4])
    R = np.diag([1e-2, 1e-3, 1e-2, 1e-3])
    F = np.eye(3)
    F[0, 2] = -v * dt * math.sin(x[2])
    F[1, 2] = v * dt * math.cos(x[2])
    xp = np.array([x[0] + v * dt * math.cos(x[2]), x[1] + v * dt * math.sin(x[2]), wrap(x[2] + w * dt)])
    Pp = F @ P @ F.T + Q
    z = np.array([4.5, 0.3, 6.0, 0.7])
    innov = z - h(xp)
    innov[1::2] = [wrap(a) for a in innov[1::2]]
    Hx = H(xp)
    K = Pp @ Hx.T @ np.linalg.inv(Hx @ Pp @ Hx.T + R)
    return xp, Pp, xp + K @ innov, (np.eye(3) - K @ Hx) @ Pp


if __name__ == "__main__":
    print("normals(seed=42):", [f"{v:.17g}" for v in normals(42, 6)])
    xp, Pp, xc, Pc = ekf_step()
    for name, a in [("x_pred", xp), ("P_pred", Pp), ("x_corr", xc), ("P_corr", Pc)]:
        print(name, np.array2string(np.asarray(a), precision=17, separator=", "))
