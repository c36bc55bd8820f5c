"""Chebyshev fits of the Hankel amplitude functions P0, Q0 for x >= X0.

J0(x) = sqrt(2/(pi x)) (P0 cos chi - Q0 sin chi)
Y0(x) = sqrt(2/(pi x)) (P0 sin chi + Q0 cos chi),   chi = x - pi/4

With u = X0/x in (0, 1] and s = 2u^2 - 1 in (-1, 1]:
  P0(x) = sum_k p_k T_k(s)
  Q0(x) = u * sum_k q_k T_k(s)

Prints Rust const arrays. Requires mpmath.
"""
import mpmath as mp

mp.mp.dps = 60
X0 = mp.mpf(8)
N = 48


def pq(x):
    chi = x - mp.pi / 4
    a = mp.sqrt(mp.pi * x / 2)
    j, y = mp.besselj(0, x), mp.bessely(0, x)
    p = a * (j * mp.cos(chi) + y * mp.sin(chi))
    q = a * (-j * mp.sin(chi) + y * mp.cos(chi))
    return p, q


def fit():
    nodes = [mp.cos(mp.pi * (i + mp.mpf(1) / 2) / N) for i in range(N)]
    fp, fq = [], []
    for s in nodes:
        u2 = (s + 1) / 2
        if u2 == 0:
            raise ValueError("node at u = 0")
        u = mp.sqrt(u2)
        p, q = pq(X0 / u)
        fp.append(p)
        fq.append(q / u)
    cp, cq = [], []
    for k in range(N):
        tk = [mp.cos(k * mp.pi * (i + mp.mpf(1) / 2) / N) for i in range(N)]
        scale = mp.mpf(2) / N if k else mp.mpf(1) / N
        cp.append(scale * mp.fsum(f * t for f, t in zip(fp, tk)))
        cq.append(scale * mp.fsum(f * t for f, t in zip(fq, tk)))
    return cp, cq


def trim(c, tol=mp.mpf("1e-19")):
    n = len(c)
    while n > 1 and abs(c[n - 1]) < tol:
        n -= 1
    return c[:n]


if __name__ == "__main__":
    cp, cq = fit()
    for name, c in (("P0_CHEB", trim(cp)), ("Q0_CHEB", trim(cq))):
        print(f"const {name}: [f64; {len(c)}] = [")
        for v in c:
            print(f"    {mp.nstr(v, 20, min_fixed=0, max_fixed=0)},")
        print("];")
