"""Independent oracle values frozen into the C++ test suites.

Everything here is computed from scalar closed forms, bisection, or brute
force enumeration, never through the library under test.
"""
import itertools
import math

from scipy.optimize import brentq

V, VT, EPS = 0.315, 0.3937, 1.0


def homogeneous_root(v, lam=1.0, tau=1.0, eps=1.0, rho=1.0):
    # (rho - s) tau = lam v s / (eps + v s)
    f = lambda s: (rho - s) * tau - lam * v * s / (eps + v * s)
    return brentq(f, 0.0, rho, xtol=1e-15, rtol=1e-15)


def booking_prob(v, s, eps=1.0):
    return v * s / (eps + v * s)


def main():
    s_gc = homogeneous_root(V)
    s_gt = homogeneous_root(VT)
    quad_gc = (-1 + math.sqrt(1 + 4 * V)) / (2 * V)
    print("s_gc", s_gc, "quadratic", quad_gc, "p_gc", booking_prob(V, s_gc))
    print("s_gt", s_gt, "p_gt", booking_prob(VT, s_gt))
    print("gte calib", booking_prob(VT, s_gt) - booking_prob(V, s_gc))

    print("p(0.315,s=1)", 0.315 / 1.315, "p(0.3937,s=1)", 0.3937 / 1.3937)

    # demand limit, homogeneous, a_C = 1, a_L = 0.5
    a_c, a_l = 1.0, 0.5
    den = EPS + (1 - a_l) * V + a_l * VT
    q11 = a_c * a_l * VT / den
    q10 = a_c * (1 - a_l) * V / den
    gte_d = VT / (EPS + VT) - V / (EPS + V)
    lr = q11 / a_l - q10 / (1 - a_l)
    print("demand q11", q11, "q10", q10, "gte/lam", gte_d, "lr", lr, "lr bias", lr - gte_d)

    # supply limit, homogeneous TSR(0.5, 0.5)
    a_c, a_l = 0.5, 0.5
    q00 = (1 - a_c) * (1 - a_l)
    q10 = a_c * (1 - a_l)
    q01 = (1 - a_c) * V / ((1 - a_c) * V + a_c * VT) * a_l
    q11 = a_c * VT / ((1 - a_c) * V + a_c * VT) * a_l
    print("supply tsr q00", q00, "q10", q10, "q01", q01, "q11", q11)
    cr_supply = 2 * (VT - V) / (V + VT)
    print("supply cr/tau", cr_supply)

    # schedule
    e = math.exp(-1.0)
    print("schedule(1)", (1 - e) + 0.5 * e, 0.5 * (1 - e) + e, "beta", e)

    # two-listing example
    zeta = 0.5 * VT / (EPS + VT) + 0.5 * V / (EPS + V)
    eta = 0.5 * VT / (EPS + VT) / zeta
    print("zeta", zeta, "eta", eta, "cr limit (lam->inf, tau=1)", 4 * (2 * eta - 1))

    # supply-state approx homogeneous GC, tau = 1: s ~ eps / (lam v)
    lam = 1e4
    s_num = homogeneous_root(V, lam=lam)
    print("supply approx", EPS / (lam * V), "exact root", s_num)

    # largest remainder
    rho = [1 / 3] * 3
    n = 10
    base = [math.floor(r * n) for r in rho]
    rem = sorted(range(3), key=lambda i: (-(rho[i] * n - base[i]), i))
    for i in rem[: n - sum(base)]:
        base[i] += 1
    print("apportion", base)

    # scenario sanity: booking probabilities with equal shares
    def multi_root(phi, rho, vmat, lam=1.0, tau=1.0, eps=1.0):
        # damped fixed point, brute force
        import numpy as np
        phi = np.array(phi); rho = np.array(rho); vmat = np.array(vmat)
        s = rho.copy()
        for _ in range(200000):
            den = eps + vmat @ s
            p = vmat * s / den[:, None]
            flow = lam * (phi @ p)
            s_new = rho - flow / tau
            s = 0.5 * s + 0.5 * s_new
        den = eps + vmat @ s
        return float((phi @ (vmat * s / den[:, None])).sum())

    for name, phi, rho, vmat in [
        ("custHetL", [0.5, 0.5], [1.0], [[0.17], [0.51]]),
        ("custHetH", [0.5, 0.5], [1.0], [[0.12], [0.46]]),
        ("listHetL", [1.0], [0.5, 0.5], [[0.25, 0.4]]),
        ("listHetH", [1.0], [0.5, 0.5], [[0.1, 0.6]]),
        ("hte", [1.0], [0.5, 0.5], [[0.27, 0.351]]),
        ("hte amp GT", [1.0], [0.5, 0.5], [[0.2727, 0.5265]]),
        ("hte rev GT", [1.0], [0.5, 0.5], [[0.432, 0.355]]),
        ("hte mult GT", [1.0], [0.5, 0.5], [[0.3375, 0.4388]]),
    ]:
        print(name, multi_root(phi, rho, vmat))

    # cluster y = 0: separable sub-markets phi = rho = 0.5
    x, delta = 0.5, 1.3
    def sub(v):
        s = brentq(lambda s: (0.5 - s) - 0.5 * v * s / (1 + v * s), 0, 0.5, xtol=1e-15)
        return 0.5 * v * s / (1 + v * s)
    print("cluster y=0 gte", 2 * sub(delta * x) - 2 * sub(x))

    # bootstrap coverage for the symmetric two-point sample {0, 2}: enumerate
    # all resamples of size 2 (4 equally likely) -> means {0,1,1,2}
    means = [sum(c) / 2 for c in itertools.product([0, 2], repeat=2)]
    print("two-point bootstrap means", sorted(means))


if __name__ == "__main__":
    main()
