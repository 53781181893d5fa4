#!/usr/bin/env python3
"""Independent reference values for the C++ oracles.

Nothing here calls the C++ code: every number comes from closed forms or from
mpmath / scipy quadrature written directly from the integral definitions. Run
once and commit the JSON; the unit tests compare against the frozen values.

    python3 golden/generate.py > golden/oracle.json
"""

import json
import math

import mpmath as mp
from scipy import integrate, stats

mp.mp.dps = 30


def philox4x64_10(ctr, key):
    M0, M1 = 0xD2E7470EE14C6C93, 0xCA5A826395121157
    W0, W1 = 0x9E3779B97F4A7C15, 0xBB67AE8584CAA73B
    mask = (1 << 64) - 1
    c, k = list(ctr), list(key)
    for i in range(10):
        if i:
            k = [(k[0] + W0) & mask, (k[1] + W1) & mask]
        p0, p1 = M0 * c[0], M1 * c[2]
        c = [(p1 >> 64) ^ c[1] ^ k[0], p1 & mask, (p0 >> 64) ^ c[3] ^ k[1], p0 & mask]
    return c


def unit_ball_volume(d):
    return mp.pi ** (mp.mpf(d) / 2) / mp.gamma(mp.mpf(d) / 2 + 1)


def symdiff(d, r, D):
    """Volume of B(0, r) xor B(x, r), |x| = D."""
    V = unit_ball_volume(d) * r**d
    if 2 * r <= D:
        return 2 * V
    if d == 1:
        lens = 2 * r - D
    elif d == 2:
        lens = 2 * r * r * mp.acos(D / (2 * r)) - D / 2 * mp.sqrt(4 * r * r - D * D)
    else:
        lens = mp.pi * (4 * r + D) * (2 * r - D) ** 2 / 12
    return 2 * (V - lens)


def increment_variance(d, m, D, r_min, r_max):
    f = lambda r: symdiff(d, r, D) * r ** (-d - 1 + 2 * m)
    pts = [p for p in [r_min, D / 2, D, 2 * D, r_max] if r_min <= p <= r_max]
    pts = sorted(set(pts))
    return mp.quad(f, pts)


def psi_constant(d, m):
    D = mp.mpf(1)
    if d == 1:
        return 4 * mp.mpf(0.5) ** (2 * m) / (2 * m) + 2 * mp.mpf(0.5) ** (2 * m - 1) / (1 - 2 * m)
    return increment_variance(d, m, D, mp.mpf(0), mp.inf)


def spectral_density(k, d, m):
    k = mp.mpf(k)
    nu = mp.mpf(d) / 2
    inner = mp.quad(lambda s: mp.besselj(nu, s) ** 2 * s ** (2 * m - 1), [0, k])
    return (2 * mp.pi) ** (mp.mpf(d) / 2) * k ** (-2 * m - d) * inner


def star_zm(m, half_angle):
    """Z_m(e1) for the cone of directions within half_angle of +-e1 in d = 2.

    D(r) = |K n B(e1, r)| - |K n B(0, r)| in polar coordinates around the
    origin; for r > 1 it is the constant int_K cos(2 phi) / 2 by symmetry.
    """
    m = mp.mpf(m)

    def sector_area(r):
        def ray(theta):
            c = mp.cos(theta)
            disc = r * r - mp.sin(theta) ** 2
            if disc <= 0:
                return mp.mpf(0)
            t2 = c + mp.sqrt(disc)
            t1 = max(c - mp.sqrt(disc), 0)
            return (t2 * t2 - t1 * t1) / 2 if t2 > 0 else mp.mpf(0)

        a = mp.mpf(half_angle)
        edges = [-a, a]
        if r < 1:
            edges = sorted(set([-a, a] + [t for t in (-mp.asin(r), mp.asin(r)) if -a < t < a]))
        right = mp.quad(ray, edges)
        left = mp.quad(ray, [mp.pi - a, mp.pi + a]) if r > 1 else 0
        return right + left

    cone = 4 * mp.mpf(half_angle)

    def D(r):
        return sector_area(r) - cone * r * r / 2

    const = mp.quad(lambda t: mp.cos(2 * t) / 2, [-half_angle, half_angle]) * 2
    body = mp.quad(lambda r: D(r) * r ** (-3 + 2 * m), [0, mp.mpf(1) / 2, 1 - mp.sin(half_angle), 1])
    # Z_m = -int D(r) r^{-3+2m} dr
    return -(body + const / (2 - 2 * m))


def g2_integral_d2(y, r):
    """int_R G(y, g, r)^2 dg with G = sqrt(r^2 - (y - g)^2)_+ - sqrt(r^2 - g^2)_+."""
    y, r = mp.mpf(y), mp.mpf(r)
    sq = lambda a: mp.sqrt(a) if a > 0 else mp.mpf(0)
    G = lambda g: sq(r * r - (y - g) ** 2) - sq(r * r - g * g)
    pts = sorted({-r, r, y - r, y + r})
    return mp.quad(lambda g: G(g) ** 2, pts)


def gamma_d2(y, yp, H):
    """X-ray tangent covariance in d = 2: int int G(y, g, r) G(y', g, r) r^{-3+2m} dg dr, m = H - 1/2."""
    y, yp, m = mp.mpf(y), mp.mpf(yp), mp.mpf(H) - mp.mpf(1) / 2

    def G(yy, g, r):
        a, b = r * r - (yy - g) ** 2, r * r - g * g
        if a > 0 and b > 0:
            return (2 * yy * g - yy * yy) / (mp.sqrt(a) + mp.sqrt(b))
        return (mp.sqrt(a) if a > 0 else 0) - (mp.sqrt(b) if b > 0 else 0)

    def inner(r):
        pts = sorted({-r, r, y - r, y + r, yp - r, yp + r})
        return mp.quad(lambda g: G(y, g, r) * G(yp, g, r), pts)

    s = max(abs(y), abs(yp), abs(y - yp))
    knots = sorted({mp.mpf(0), abs(y) / 2, abs(yp) / 2, abs(y - yp) / 2, abs(y), abs(yp), abs(y - yp), s, 2 * s,
                    10 * s, 100 * s, 1000 * s, mp.inf})
    return mp.quad(lambda r: inner(r) * r ** (-3 + 2 * m), knots)


def truncated_d1(m, lam, r_min, r_max):
    f = lambda r: 2 * min(2 * r, lam) * r ** (-2 + 2 * m)
    return integrate.quad(f, r_min, lam / 2, epsrel=1e-13, epsabs=0)[0] + integrate.quad(
        f, lam / 2, r_max, epsrel=1e-13, epsabs=0, points=[lam], limit=200)[0]


def entry(value, source):
    return {"value": float(value), "source": source}


def main():
    out = {"notes": (
        "Reference values generated by golden/generate.py from closed forms or "
        "mpmath/scipy quadrature of the defining integrals; independent of the "
        "C++ implementation. Regenerate with python3 golden/generate.py.")}

    mask = (1 << 64) - 1
    kat = []
    for ctr, key in [([0] * 4, [0] * 2), ([mask] * 4, [mask] * 2),
                     ([0x243F6A8885A308D3, 0x13198A2E03707344, 0xA4093822299F31D0, 0x082EFA98EC4E6C89],
                      [0x452821E638D01377, 0xBE5466CF34E90C6C]),
                     ([1, 2, 3, 4], [42, 7])]:
        kat.append({"counter": ["%016x" % v for v in ctr], "key": ["%016x" % v for v in key],
                    "output": ["%016x" % v for v in philox4x64_10(ctr, key)]})
    out["philox4x64_10"] = {"vectors": kat, "source": (
        "pure-Python Philox4x64-10 (multipliers D2E7470EE14C6C93, CA5A826395121157; "
        "Weyl constants 9E3779B97F4A7C15, BB67AE8584CAA73B); the first three "
        "vectors are the published Random123 known-answer vectors")}

    psi = {}
    for d in (1, 2, 3):
        for m in (0.15, 0.25, 0.35):
            psi["d%d_m%s" % (d, m)] = entry(psi_constant(d, mp.mpf(m)),
                                            "closed form" if d == 1 else "mpmath quad of the lens-volume integral")
    out["psi_moment_constant"] = psi

    out["truncated_increment_variance"] = {
        "d1_m0.25_lag2^-8_rmin2^-20_rmax1": entry(truncated_d1(0.25, 2.0**-8, 2.0**-20, 1.0), "scipy quad, d = 1 overlap"),
        "d1_m0.15_lag2^-12_rmin2^-20_rmax1": entry(truncated_d1(0.15, 2.0**-12, 2.0**-20, 1.0), "scipy quad, d = 1 overlap"),
        "d2_m0.25_lag0.5_rmin0.01_rmax1": entry(increment_variance(2, mp.mpf(0.25), mp.mpf(0.5), mp.mpf(0.01), mp.mpf(1)),
                                                "mpmath quad of the lens-area integral"),
        "d3_m0.3_lag0.2_rmin0_rmax2": entry(increment_variance(3, mp.mpf(0.3), mp.mpf(0.2), mp.mpf(0), mp.mpf(2)),
                                            "mpmath quad of the lens-volume integral"),
    }

    out["spectral_density"] = {
        "d1_m0.25_k1": entry(spectral_density(1, 1, mp.mpf(0.25)), "mpmath quad with besselj"),
        "d2_m0.25_k2": entry(spectral_density(2, 2, mp.mpf(0.25)), "mpmath quad with besselj"),
    }

    out["tangent_field_zm"] = {
        "star_d2_m0.2_e1": entry(star_zm(0.2, mp.pi / 6),
                                 "mpmath polar integration of the sector areas, cone within 30 degrees of +-e1"),
    }

    out["g_l2_integral"] = {
        "d2_y0.3_r1": entry(g2_integral_d2(0.3, 1), "mpmath quad"),
        "d2_y0.3_r0.1": entry(g2_integral_d2(0.3, 0.1), "mpmath quad"),
        "d2_y0.3_r50": entry(g2_integral_d2(0.3, 50), "mpmath quad"),
    }

    out["xray_tangent_covariance"] = {
        "d2_H0.75_y0.3_yp0.3": entry(gamma_d2(0.3, 0.3, 0.75), "mpmath nested quad, rationalized G"),
        "d2_H0.75_y0.3_yp-0.5": entry(gamma_d2(0.3, -0.5, 0.75), "mpmath nested quad, rationalized G"),
    }

    # Skellam(mu, mu) through scipy
    out["skellam_pmf"] = {
        "k%d_mu%s" % (k, mu): entry(stats.skellam.pmf(k, mu, mu), "scipy.stats.skellam")
        for k, mu in [(0, 0.5), (1, 0.5), (-3, 2.0), (10, 3.0), (0, 40.0), (25, 40.0)]
    }
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
