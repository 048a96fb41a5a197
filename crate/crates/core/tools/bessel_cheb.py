"""Regenerate the Chebyshev coefficients used by `specfun` for x >= 7.75.

The fitted function is sqrt(x) * exp(-x) * I_n(x) expressed in the variable
t = 15.5 / x - 1, which maps [7.75, inf) onto (-1, 1].

    python3 tools/bessel_cheb.py
"""

import mpmath as mp
import numpy as np

mp.mp.dps = 60
X0 = mp.mpf("7.75")
NODES = 80
TOL = 1e-19


def scaled(n, t):
    x = 2 * X0 / (t + 1)
    return mp.sqrt(x) * mp.exp(-x) * mp.besseli(n, x)


def coefficients(n):
    th = [mp.pi * (j + mp.mpf(1) / 2) / NODES for j in range(NODES)]
    fv = [scaled(n, mp.cos(t)) for t in th]
    cs = [2 * mp.fsum(fv[j] * mp.cos(k * th[j]) for j in range(NODES)) / NODES for k in range(NODES)]
    cs[0] /= 2
    keep = max(k for k in range(NODES) if abs(cs[k]) > TOL) + 1
    return [float(c) for c in cs[:keep]]


def clenshaw(c, t):
    b1 = b2 = 0.0
    for ck in reversed(c[1:]):
        b1, b2 = 2 * t * b1 - b2 + ck, b1
    return t * b1 - b2 + c[0]


if __name__ == "__main__":
    for n in (0, 1):
        c = coefficients(n)
        xs = np.concatenate([np.linspace(7.75, 40, 3000), np.geomspace(40, 1e6, 2000)])
        worst = max(
            abs(clenshaw(c, 15.5 / x - 1) - float(scaled(n, mp.mpf(15.5) / mp.mpf(x) - 1)))
            / float(scaled(n, mp.mpf(15.5) / mp.mpf(x) - 1))
            for x in xs
        )
        print(f"// I{n}: {len(c)} terms, max relative error {worst:.2e}")
        print(f"const SCALED_I{n}_CHEB: [f64; {len(c)}] = [")
        for v in c:
            print(f"    {v!r},")
        print("];")
