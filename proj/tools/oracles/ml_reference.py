"""Reference Mittag-Leffler values for tests/data/ml_reference.inc.

Moderate arguments: power series in mpmath with enough working digits to absorb the
cancellation. Large negative arguments with alpha < 1: the algebraic expansion, whose
remainder is below exp(-|z|^(1/alpha)) and therefore far below double precision.
alpha = 1/2 additionally uses exp(z^2) erfc(-z).
"""
import mpmath as mp


def series(a, b, z):
    a, b, z = mp.mpf(a), mp.mpf(b), mp.mpf(z)
    # size of the largest term decides the working precision
    logmax = 0.0
    k = 0
    while True:
        arg = a * k + b
        if arg > 0:
            lt = float(k * mp.log(abs(z)) - mp.loggamma(arg)) if z != 0 else 0.0
            logmax = max(logmax, lt)
            if k > 5 and lt < -120 and arg > 2 and lt < logmax:
                break
        k += 1
    mp.mp.dps = int(logmax / 2.30) + 40
    s = mp.mpf(0)
    zk = mp.mpf(1)
    for n in range(k + 1):
        s += zk * mp.rgamma(a * n + b)
        zk *= z
    return s, mp.mp.dps


def asymptotic(a, b, z):
    mp.mp.dps = 50
    a, b, z = mp.mpf(a), mp.mpf(b), mp.mpf(z)
    s = mp.mpf(0)
    for n in range(1, 80):
        s -= z ** (-n) * mp.rgamma(b - a * n)
    return s


rows = []
for a in (0.3, 0.5, 0.7, 0.9, 1.2, 1.5, 1.9):
    for b in (0.5, 1.0, 1.3, 2.0):
        for z in (-0.6, -2.0, -5.0, -10.0, -20.0, -35.0, -50.0, 0.7, 3.0):
            need = (abs(z) ** (1 / a)) / a if z < 0 else 0
            if need > 4000:
                continue
            v, dps = series(a, b, z)
            rows.append((a, b, z, v))

for a in (0.3, 0.5, 0.7, 0.9):
    for b in (0.5, 1.0, 1.3, 2.0, a):
        for z in (-1.0e2, -1.0e3, -1.0e4, -1.0e5):
            if abs(z) ** (1 / a) < 200:
                continue
            rows.append((a, b, z, asymptotic(a, b, z)))

mp.mp.dps = 60
for z in (-30.0, -100.0, -1.0e3, -1.0e4):
    x = mp.mpf(-z)
    rows.append((0.5, 1.0, z, mp.exp(x * x) * mp.erfc(x)))

print("// alpha, beta, z, E_{alpha,beta}(z)")
for a, b, z, v in rows:
    print("{%r, %r, %r, %s}," % (a, b, z, mp.nstr(v, 20, min_fixed=1, max_fixed=0)))
