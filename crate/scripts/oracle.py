"""Arbitrary-precision reference values for the resource formulas.

The printed numbers are frozen into crates/core/tests/resources.rs.
"""
from mpmath import mp, mpf, ceil, log, sqrt

mp.dps = 50


def cost_models(L, nf, t, eps, p):
    L, nf, t, eps = map(mpf, (L, nf, t, eps))
    pf = L**2 * nf**4 * t ** (1 + mpf(1) / p) * eps ** (-mpf(1) / p)
    g = nf + log(L * nf**2)
    qsvt = L * nf**2 * (t * g + g * log(1 / eps))
    return pf, qsvt


def trotter(alpha, t, eps, p, gamma):
    alpha, t, eps = map(mpf, (alpha, t, eps))
    if p == 1:
        return ceil(t**2 * alpha / (2 * eps))
    return ceil(gamma * t * (t / eps) ** (mpf(1) / p) * alpha ** (mpf(p + 1) / p) * mpf(2) ** (mpf(1) / p))


pf, qsvt = cost_models(100, 6, 300, mpf("1e-6"), 10)
print("cost_pf(100,6,300,1e-6,10) =", mp.nstr(pf, 20))
print("cost_qsvt(100,6,300,1e-6,10) =", mp.nstr(qsvt, 20))
pf, qsvt = cost_models(1000, 6, 1000, mpf("1e-10"), 10)
print("cost_pf(1000,6,1000,1e-10,10) =", mp.nstr(pf, 20))
print("cost_qsvt(1000,6,1000,1e-10,10) =", mp.nstr(qsvt, 20))
print("trotter(1,10,1e-6,p=2,G=3) =", trotter(1, 10, mpf("1e-6"), 2, 3))
print("trotter(0.7,5,1e-3,p=4,G=4) =", trotter(mpf("0.7"), 5, mpf("1e-3"), 4, 4))
print("trotter(2,1,0.01,p=1) =", trotter(2, 1, mpf("0.01"), 1, 1))
print("qsvt_degree(2,100,1e-10) =", ceil(2 * 100 + log(1 / mpf("1e-10"))))
