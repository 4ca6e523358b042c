"""Independent high-precision evaluation of the frozen test fixtures.

Run with `python3 tests/oracles/fixtures.py`. Every number printed here is
pasted into the C++ tests as a literal; the C++ code is never consulted.
"""
from mpmath import mp, mpf, log, sqrt, exp, binomial, factorial

mp.dps = 50


def h(x):
    x = mpf(x)
    if x == 0 or x == 1:
        return mpf(0)
    return -x * log(x, 2) - (1 - x) * log(1 - x, 2)


def hinv(y):
    lo, hi = mpf(0), mpf("0.5")
    for _ in range(300):
        m = (lo + hi) / 2
        if h(m) < y:
            lo = m
        else:
            hi = m
    return (lo + hi) / 2


def hoeffding(n, eps):
    return sqrt(mpf(n) / 2 * log(1 / mpf(eps)))


def serfling(e, L, k, eps):
    L, k = mpf(L), mpf(k)
    return mpf(e) + 2 / L * sqrt((L / 2 + 1) * (L / 2 + k) / (2 * k) * log(1 / mpf(eps)))


def gamma(a, b, c, d):
    a, b, c, d = map(mpf, (a, b, c, d))
    return sqrt((c + d) * (1 - b) * b / (c * d * log(2)) * log((c + d) / (c * d * (1 - b) * b) * (21 / a) ** 2, 2))


def tau(n, mu, nu, p):
    mu, nu, p = mpf(mu), mpf(nu), mpf(p)
    return p * exp(-mu) * mu**n / factorial(n) + (1 - p) * exp(-nu) * nu**n / factorial(n)


def show(name, v):
    print(f"{name:40s} {mp.nstr(v, 17)}")


print("# math core")
show("h(0.0218)", h("0.0218"))
show("h(0.11)", h("0.11"))
show("hinv(0.57377)", hinv(mpf("0.57377")))
show("hoeffding(2000, 1e-5)", hoeffding(2000, "1e-5"))
show("serfling(0.002, 50000, 2500, 1e-5)", serfling("0.002", 50000, 2500, "1e-5"))
show("serfling(0.002, 50000, 5000, 1e-5)", serfling("0.002", 50000, 5000, "1e-5"))
show("gamma(1e-10, 0.05, 1e5, 1e5)", gamma("1e-10", "0.05", 1e5, 1e5))
show("gamma(1e-10, 0.05, 1e6, 1e6)", gamma("1e-10", "0.05", 1e6, 1e6))
show("gamma(1e-10, 0.05, 1e5, 4e5)", gamma("1e-10", "0.05", 1e5, 4e5))

print("# channel model")
eta103 = mpf("0.65") * mpf(10) ** (-(mpf("0.175") * 103 + mpf("1.53")) / 10)
show("eta(103 km)", eta103)
y0 = 2 * mpf(20) * mpf("2e-9")
show("Y0", y0)
show("Q(0.5, eta103, 8e-8)", 1 - (1 - y0) * exp(-eta103 * mpf("0.5")))
show("EQ(0.5, eta103, 8e-8, 0.003)",
     mpf("0.5") * y0 * exp(-eta103 * mpf("0.5")) + mpf("0.003") * (1 - exp(-eta103 * mpf("0.5"))))

print("# one-decoy estimator")
mu, nu, p = mpf("0.5"), mpf("0.25"), mpf("0.7")
show("tau0(0.5,0.25,0.7)", tau(0, mu, nu, p))
show("tau1(0.5,0.25,0.7)", tau(1, mu, nu, p))
show("scaled(3.49126e6, mu=0.5, p=0.7)", exp(mu) / p * mpf("3.49126e6"))
N, e = mpf(10) ** 9, mpf("0.01")
nmu = N * p * (1 - exp(-e * mu))
nnu = N * (1 - p) * (1 - exp(-e * nu))
show("n_mu (N=1e9, eta=0.01)", nmu)
show("n_nu (N=1e9, eta=0.01)", nnu)
s1 = tau(1, mu, nu, p) * mu / (nu * (mu - nu)) * (exp(nu) / (1 - p) * nnu - nu**2 / mu**2 * exp(mu) / p * nmu)
show("s1_lower noise-free", s1)
show("true single-photon detections", N * tau(1, mu, nu, p) * e)
show("phase bound 0.05 + gamma(1e5,1e5)", mpf("0.05") + gamma("1e-10", "0.05", 1e5, 1e5))

print("# security")
show("solve_p_e(17250, 51022, 0.0218)", hinv(2 * mpf(17250) / 51022 * (1 - h("0.0218"))))
show("p_rep(0.0802, 0.1081, 51022)", 2 * exp(-(mpf("0.1081") - mpf("0.0802")) ** 2 * 51022 / 4))
L = mpf(51022)
expo = L / 2 * (2 * mpf(17250) / L * (1 - h("0.0218")) - h("0.1081"))
show("eps_F exponent (bits)", expo)
show("eps_F(1e-5, 51022, ...)", (mpf(2) ** (-expo) + mpf("1e-10")) / mpf("1e-5"))

print("# table rows: (s_z1, phi, s_alpha, s_upsilon, Bob Z yield, Charlie Z yield)")
rows = {
    103: (17250, "0.0218", "0.0802", "0.1081", 4.17e9 + 4.05e7, 4.03e9 + 4.09e7),
    204: (21877, "0.0253", "0.0719", "0.0959", 5.53e7 + 4.22e6, 5.21e7 + 4.00e6),
    280: (139259, "0.0390", "0.0467", "0.0544", 2.04e6 + 407033, 2.05e6 + 396024),
}
for d, (s, phi, sa, su, yb, yc) in rows.items():
    sa, su = mpf(sa), mpf(su)
    pe, eu = 2 * su - sa, 2 * sa - su
    Lr = 2 * s * (1 - h(phi)) / h(pe)
    show(f"{d} km E^U", eu)
    show(f"{d} km p_E", pe)
    show(f"{d} km L (reconstructed)", Lr)
    show(f"{d} km solve_p_e at L", hinv(2 * mpf(s) / Lr * (1 - h(phi))))
    tb = 2 * Lr / (mpf("5e7") * mpf(yb) / mpf("2e12"))
    tc = 2 * Lr / (mpf("5e7") * mpf(yc) / mpf("2e12"))
    show(f"{d} km time Bob link", tb)
    show(f"{d} km time both links", max(tb, tc))

print("# forging by guessing: P[Bin(L/2, 1/2) < s L/2]")
for L, s in ((2, "0.4"), (20, "0.3"), (20, "0.45"), (200, "0.4")):
    half = L // 2
    lim = mpf(s) * L / 2
    total = sum(binomial(half, j) for j in range(half + 1) if j < lim) / mpf(2) ** half
    show(f"forge L={L} s={s}", total)
