"""Reference values for the mixed test model, computed with mpmath."""
import mpmath as mp

mp.mp.dps = 30

sigma, c, k = mp.mpf("0.3"), mp.mpf("0.2"), mp.mpf("0.1")
delta = mp.mpf("1e-3")
atom = (mp.mpf("-1.5"), mp.mpf("0.7"))


def uniform(z):
    return mp.mpf("1.2") / mp.mpf("1.5") if -2 <= z <= -0.5 else 0


def expo(z):
    # 0.8 e^{1.5 z} on (-inf, -0.1]
    return mp.mpf("0.8") * mp.e ** (mp.mpf("1.5") * z)


def power(z):
    # scale 0.3 |z|^{-1-0.5} on [-1, 0)
    return mp.mpf("0.3") * (-z) ** (-mp.mpf("1.5"))


def integrate(f):
    pieces = [
        (lambda z: f(z) * uniform(z), [-2, -0.5]),
        (lambda z: f(z) * expo(z), [-mp.inf, -1, -0.1]),
        (lambda z: f(z) * power(z), [-1, -0.5, -0.1, -0.01, -delta, -1e-4, -1e-8, 0]),
    ]
    return atom[1] * f(atom[0]) + sum(mp.quad(g, pts) for g, pts in pieces)


def phi(q):
    q = mp.mpf(q)
    return -k + sigma**2 * q**2 / 2 + c * q + integrate(
        lambda z: mp.e ** (q * z) - 1 + q * (1 - mp.e**z))


def kappa(q):
    q = mp.mpf(q)
    return phi(q) + integrate(lambda z: (1 - mp.e**z) ** q)


def drift():
    # c + int_{z <= -delta} (1 - e^z) + int_{-delta < z < 0} (z + 1 - e^z)
    big = integrate(lambda z: (1 - mp.e**z) if z <= -delta else (z + 1 - mp.e**z))
    return c + big


if __name__ == "__main__":
    for q in ("0.8", "2", "3"):
        print(q, mp.nstr(phi(q), 17), mp.nstr(kappa(q), 17))
    print("drift", mp.nstr(drift(), 17))
