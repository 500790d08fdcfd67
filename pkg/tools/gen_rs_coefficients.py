"""Regenerate src/zetaladder/_rs_tables.py.

Taylor coefficients, in powers of (p - 1/2), of the Riemann-Siegel
correction functions C0..C4 built from derivatives of

    Psi(p) = cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p).

Requires mpmath.  Run from the repository root:

    python tools/gen_rs_coefficients.py > src/zetaladder/_rs_tables.py
"""
import mpmath as mp

mp.mp.dps = 80
NTERMS = 48


def psi(p):
    return mp.cos(2 * mp.pi * (p * p - p - mp.mpf(1) / 16)) / mp.cos(2 * mp.pi * p)


def main():
    c = mp.taylor(psi, mp.mpf(1) / 2, NTERMS + 13)

    def deriv(k):
        return [c[j + k] * mp.factorial(j + k) / mp.factorial(j) for j in range(NTERMS)]

    d = {k: deriv(k) for k in range(13)}
    pi = mp.pi

    def combine(terms):
        out = [mp.mpf(0)] * NTERMS
        for coef, k in terms:
            for j in range(NTERMS):
                out[j] += coef * d[k][j]
        return out

    rows = [
        combine([(1, 0)]),
        combine([(-1 / (96 * pi**2), 3)]),
        combine([(1 / (64 * pi**2), 2), (1 / (18432 * pi**4), 6)]),
        combine([(-1 / (64 * pi**2), 1), (-1 / (3840 * pi**4), 5), (-1 / (5308416 * pi**6), 9)]),
        combine([
            (1 / (128 * pi**2), 0),
            (19 / (24576 * pi**4), 4),
            (11 / (5898240 * pi**6), 8),
            (1 / (2038431744 * pi**8), 12),
        ]),
    ]
    print('"""Riemann-Siegel correction coefficients (generated by tools/gen_rs_coefficients.py)."""')
    print()
    print("# RS_COEFFS[k][j] is the coefficient of (p - 1/2)**j in C_k(p).")
    print("RS_COEFFS = (")
    for row in rows:
        print("    (")
        for v in row:
            v = mp.mpf(0) if abs(v) < mp.mpf(10) ** -60 else v
            print(f"        {mp.nstr(v, 20, min_fixed=0, max_fixed=0)},")
        print("    ),")
    print(")")


if __name__ == "__main__":
    main()
