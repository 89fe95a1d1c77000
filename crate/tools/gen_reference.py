#!/usr/bin/env python3
"""Generate frozen reference values for the test suite.

Every value printed here is computed by an independent route (scipy special
functions, mpmath arbitrary precision, closed forms) and pasted into the Rust
tests as hard-coded expectations.  Keep this script runnable so the numbers
can be regenerated and audited.

Usage: python3 tools/gen_reference.py
"""

import mpmath as mp
import numpy as np
from scipy.special import roots_jacobi, eval_jacobi, gammaln, betainc

mp.mp.dps = 50


def h_k(k, a, b):
    """L2(mu) norm of the classically normalized Jacobi polynomial P_k^(a,b)."""
    if k == 0:
        return np.sqrt(np.exp((a + b + 1) * np.log(2.0) + gammaln(a + 1) + gammaln(b + 1) - gammaln(a + b + 2)))
    ln = (
        (a + b + 1) * np.log(2.0)
        - np.log(2 * k + a + b + 1)
        + gammaln(k + a + 1)
        + gammaln(k + b + 1)
        - gammaln(k + a + b + 1)
        - gammaln(k + 1.0)
    )
    return np.sqrt(np.exp(ln))


def ortho_jacobi(k, a, b, x):
    return eval_jacobi(k, a, b, x) / h_k(k, a, b)


def total_mass(a, b):
    return np.exp((a + b + 1) * np.log(2.0) + gammaln(a + 1) + gammaln(b + 1) - gammaln(a + b + 2))


def ball_measure(a, b, x, r):
    """mu(B(x,r)) via the regularized incomplete beta function.

    With t = sin^2(theta/2) the measure of a theta-interval is
    total_mass * (I_t(a+1, b+1) evaluated between the endpoints).
    """
    th = np.arccos(x)
    lo, hi = max(0.0, th - r), min(np.pi, th + r)
    t_lo, t_hi = np.sin(lo / 2) ** 2, np.sin(hi / 2) ** 2
    return total_mass(a, b) * (betainc(a + 1, b + 1, t_hi) - betainc(a + 1, b + 1, t_lo))


def heat_kernel_mp(a, b, t, x, y, kmax=400):
    """p_t(x,y) at 50 digits via mpmath Jacobi polynomials."""
    a_, b_, t_, x_, y_ = map(mp.mpf, (a, b, t, x, y))
    s = mp.mpf(0)
    for k in range(kmax):
        lam = k * (k + a_ + b_ + 1)
        hk2 = (
            mp.power(2, a_ + b_ + 1)
            / (2 * k + a_ + b_ + 1)
            * mp.gamma(k + a_ + 1)
            * mp.gamma(k + b_ + 1)
            / (mp.gamma(k + a_ + b_ + 1) * mp.factorial(k))
        ) if k > 0 else mp.power(2, a_ + b_ + 1) * mp.beta(a_ + 1, b_ + 1)
        pk_x = mp.jacobi(k, a_, b_, x_)
        pk_y = mp.jacobi(k, a_, b_, y_)
        s += mp.e ** (-lam * t_) * pk_x * pk_y / hk2
    return s


def fmt(v):
    return f"{float(v):.17e}"


print("== gauss-jacobi rules (scipy.roots_jacobi; weight (1-x)^a (1+x)^b) ==")
for (a, b, n) in [(0.0, 0.0, 5), (-0.5, -0.5, 6), (0.5, -0.5, 4), (0.5, 0.5, 3), (-0.3, 0.7, 8)]:
    xs, ws = roots_jacobi(n, a, b)
    print(f"a={a} b={b} n={n}")
    print("  nodes  = [" + ", ".join(fmt(v) for v in xs) + "]")
    print("  weights= [" + ", ".join(fmt(v) for v in ws) + "]")

print("\n== chebyshev closed forms (sanity for the above) ==")
n = 6
nodes_t = np.cos((2 * np.arange(1, n + 1) - 1) * np.pi / (2 * n))
print("  T-nodes = [" + ", ".join(fmt(v) for v in sorted(nodes_t)) + "]  weight pi/6 =", fmt(np.pi / 6))

print("\n== second moments  int x^2 dmu ==")
for (a, b) in [(0.0, 0.0), (0.5, -0.5), (0.5, 0.5), (-0.3, 0.7)]:
    xs, ws = roots_jacobi(8, a, b)
    print(f"  a={a} b={b}: {fmt(np.dot(ws, xs ** 2))}   total={fmt(total_mass(a, b))}")

print("\n== orthonormal jacobi point values P_k(x)/h_k ==")
for (a, b, k, x) in [
    (0.0, 0.0, 4, 0.3),
    (0.5, 0.5, 3, -0.7),
    (-0.3, 0.7, 5, 0.1),
    (0.0, 0.0, 64, 0.9),
    (1.5, 0.5, 7, -0.2),
    (-0.3, 0.7, 0, 0.5),
]:
    print(f"  a={a} b={b} k={k} x={x}: {fmt(ortho_jacobi(k, a, b, x))}")

print("\n== ball measures (incomplete beta route) ==")
for (a, b, x, r) in [
    (0.0, 0.0, 0.0, 0.4),
    (0.5, 0.5, 0.3, 0.4),
    (-0.3, 0.7, -0.8, 0.25),
    (0.5, 0.5, 1.0, 0.1),
    (-0.3, 0.7, 0.99, 0.05),
    (0.0, 0.0, -1.0, 2.0),
]:
    print(f"  a={a} b={b} x={x} r={r}: {fmt(ball_measure(a, b, x, r))}")

print("\n== heat kernel values (mpmath, 50 digits, 400 terms) ==")
for (a, b, t, x, y) in [
    (0.0, 0.0, 0.1, 0.2, -0.4),
    (0.0, 0.0, 0.01, 0.9, 0.85),
    (0.5, 0.5, 0.05, 0.1, 0.3),
    (-0.3, 0.7, 0.1, -0.5, 0.6),
]:
    print(f"  a={a} b={b} t={t} x={x} y={y}: {fmt(heat_kernel_mp(a, b, t, x, y))}")

print("\n== single-mode heat-norm integral ==")
# (int_{1e-4}^{1} (t^{-s/2} (t lam)^m e^{-t lam})^q dt/t)^{1/q}, lam = n(n+a+b+1)
for (s, q, m, n_mode, a, b) in [(1.0, 2.0, 1, 20, 0.0, 0.0), (0.5, 1.0, 1, 8, 0.0, 0.0)]:
    lam = n_mode * (n_mode + a + b + 1)
    f = lambda t: (t ** (-s / 2) * (t * lam) ** m * mp.e ** (-t * lam)) ** q / t
    val = mp.quad(f, [mp.mpf("1e-4"), mp.mpf(1)]) ** (1 / mp.mpf(q))
    print(f"  s={s} q={q} m={m} n={n_mode}: {fmt(val)}")

print("\n== spectral dimension integral  int mu(B(x,1/lam))^-1 dmu  (a=b=0) ==")
for lam in [10.0, 32.0]:
    f = lambda th: 1.0 / ball_measure(0.0, 0.0, float(mp.cos(th)), 1.0 / lam) * float(mp.sin(th))
    val = mp.quad(f, [0, mp.pi])
    print(f"  lam={lam}: {fmt(val)}")

print("\n== anchored equality-constrained least squares, tiny net (a=b=0) ==")
# centers {0, pi/2, pi} in theta, Voronoi cells -> |A| = (1-cos(pi/4), cos(pi/4)-cos(3pi/4), 1+cos(3pi/4))
# minimize sum ((w_i-a_i)/a_i)^2  s.t.  sum w_i = 2  and  sum w_i cos(theta_i) = 0
import numpy.linalg as la

cells = np.array([1 - np.cos(np.pi / 4), np.cos(np.pi / 4) - np.cos(-np.pi / 4 + np.pi), 1 + np.cos(3 * np.pi / 4)])
C = np.array([[1.0, 1.0, 1.0], [1.0, 0.0, -1.0]])
d = np.array([2.0, 0.0])
# w = a + D u with D=diag(a); min ||u|| s.t. (C D) u = d - C a
M = C * cells
r = d - C @ cells
u = M.T @ la.solve(M @ M.T, r)
w = cells * (1 + u)
print("  cells  = [" + ", ".join(fmt(v) for v in cells) + "]")
print("  weights= [" + ", ".join(fmt(v) for v in w) + "]")

print("\n== plateau cutoff values (same formula, independent evaluation) ==")
def plateau(u, bb):
    if u <= 1.0:
        return 1.0
    if u >= bb:
        return 0.0
    h = lambda t: np.exp(-1.0 / t) if t > 0 else 0.0
    x1 = h((bb - u) / (bb - 1.0))
    x2 = h((u - 1.0) / (bb - 1.0))
    return x1 / (x1 + x2)

for u in [1.25, 1.5, 1.75]:
    print(f"  Phi({u}; b=2) = {fmt(plateau(u, 2.0))}")
grid = np.linspace(2 ** -0.75, 2 ** 0.75, 20001)
psi = np.array([plateau(u, 2.0) - plateau(2.0 * u, 2.0) for u in grid])
print(f"  min Psi on [2^-3/4, 2^3/4] = {fmt(psi.min())}")

print("\n== poincare closed form ==")
print(f"  1/(2 pi^2) = {fmt(1.0 / (2 * np.pi ** 2))}")
