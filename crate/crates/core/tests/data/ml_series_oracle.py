"""Exhaustive high-precision series summation of E_alpha(z) = sum z^n / Gamma(alpha n + 1).

Regenerates mittag_leffler_series.csv. Working precision is raised until the
largest series term is resolved with 40 spare digits, so cancellation in the
alternating (z < 0) case cannot reach the printed digits.
"""
import mpmath as mp


def ml_series(alpha, z):
    alpha = mp.mpf(alpha)
    z = mp.mpf(z)
    if z == 0:
        return mp.mpf(1)
    # log10 of the largest term is roughly |z|^(1/alpha) / ln(10)
    peak = float(abs(z)) ** (1.0 / float(alpha)) / 2.302585 if z < 0 else 0.0
    with mp.workdps(int(peak) + 60):
        total = mp.mpf(0)
        n = 0
        tiny = mp.mpf(10) ** (-(int(peak) + 50))
        while True:
            term = z ** n / mp.gamma(alpha * n + 1)
            total += term
            if n > 5 and abs(term) < tiny * max(1, abs(total)) and n * alpha > abs(z) ** (1 / alpha):
                break
            n += 1
        return +total


def main():
    rows = []
    for alpha in ["0.25", "0.5", "0.75", "0.9", "1"]:
        for i in range(101):
            z = mp.mpf(-5) + mp.mpf(i) / 10
            rows.append((alpha, z, ml_series(alpha, z)))
    for alpha in ["0.5", "0.75", "0.9"]:
        for z in [-7.5, -10, -15, -20, -30, -50]:
            rows.append((alpha, mp.mpf(z), ml_series(alpha, z)))
    for alpha in ["0.75", "0.9"]:
        for z in [-75, -100]:
            rows.append((alpha, mp.mpf(z), ml_series(alpha, z)))
    with open("mittag_leffler_series.csv", "w") as out:
        out.write("alpha,z,value\n")
        for alpha, z, v in rows:
            out.write("%s,%s,%s\n" % (alpha, mp.nstr(z, 17), mp.nstr(v, 20, min_fixed=-1, max_fixed=1)))


if __name__ == "__main__":
    main()
