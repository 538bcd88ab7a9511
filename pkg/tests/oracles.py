"""Independent oracles used to freeze expected values.

The K1 oracle uses the classical small-argument series and large-argument
asymptotic expansion, evaluated in mpmath extended precision so that the
series cancellation is harmless; it never calls the implementation under
test. Validated against published tables (Abramowitz & Stegun 9.8).
"""

from __future__ import annotations

import numpy as np
from mpmath import mp, mpf, exp, log, sqrt, pi, euler


def k1_series(x, dps: int = 40) -> float:
    """K1 by the ascending series (any x, but used for x <= 12).

    K1(x) = 1/x + log(x/2)*I1(x)
            - (x/4) * sum_k [psi(k+1) + psi(k+2)] (x^2/4)^k / (k! (k+1)!)
    with psi(1) = -euler and psi(n+1) = psi(n) + 1/n.
    """
    with mp.workdps(dps):
        x = mpf(x)
        q = x * x / 4
        # I1 series and the psi-weighted series share c_k = q^k / (k! (k+1)!)
        c = mpf(1)  # k = 0 term of sum c_k
        i1 = mpf(1)
        psi_a = -euler          # psi(1)
        psi_b = -euler + 1      # psi(2)
        s = (psi_a + psi_b) * c
        k = 0
        while True:
            k += 1
            c = c * q / (k * (k + 1))
            i1 += c
            psi_a += mpf(1) / k
            psi_b += mpf(1) / (k + 1)
            term = (psi_a + psi_b) * c
            s += term
            if abs(term) < abs(s) * mpf(10) ** (-dps) and k > 4:
                break
        i1 = i1 * x / 2
        val = 1 / x + log(x / 2) * i1 - (x / 4) * s
        return float(val)


def k1_asymptotic(x, dps: int = 40) -> float:
    """K1 by the large-argument expansion, truncated at the smallest term.

    K1(x) ~ sqrt(pi/(2x)) e^-x [1 + sum_k a_k], a_k built from mu = 4.
    """
    with mp.workdps(dps):
        x = mpf(x)
        mu = mpf(4)
        total = mpf(1)
        term = mpf(1)
        k = 0
        prev = None
        while True:
            k += 1
            factor = (mu - (2 * k - 1) ** 2) / (8 * x * k)
            term = term * factor
            if prev is not None and abs(term) > abs(prev):
                break  # divergent tail: stop at the smallest term
            total += term
            prev = term
            if abs(term) < abs(total) * mpf(10) ** (-30) or k > 200:
                break
        val = sqrt(pi / (2 * x)) * exp(-x) * total
        return float(val)


def k1_oracle(x) -> float:
    """Series for x <= 12, asymptotic beyond (truncation error < 1e-10 there)."""
    if x <= 0:
        raise ValueError("oracle domain is x > 0")
    if x <= 12.0:
        return k1_series(x)
    return k1_asymptotic(x)


def brute_force_rdf(positions: np.ndarray, box_l: float, bin_width: float,
                    r_max: float) -> np.ndarray:
    """O(N^2) python-loop RDF with explicit bin assignment."""
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    n_bins = int(np.ceil(r_max / bin_width))
    counts = [0.0] * n_bins
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dx = positions[i, 0] - positions[j, 0]
            dy = positions[i, 1] - positions[j, 1]
            dx -= box_l * round(dx / box_l)
            dy -= box_l * round(dy / box_l)
            r = (dx * dx + dy * dy) ** 0.5
            b = int(r / bin_width)
            if b < n_bins:
                counts[b] += 1.0
    rho = n / (box_l * box_l)
    g = np.empty(n_bins)
    for b in range(n_bins):
        r_lo = b * bin_width
        r_hi = (b + 1) * bin_width
        area = np.pi * (r_hi * r_hi - r_lo * r_lo)
        g[b] = counts[b] / (n * rho * area)
    return g


def triangular_lattice(n_x: int, n_y: int, box_l: float) -> np.ndarray:
    """Near-commensurate triangular lattice in a periodic square box.

    Row spacing is box_l/n_y, within a fraction of a percent of the ideal
    sqrt(3)/2 * a when n_y ~ round(n_x * 2/sqrt(3)).
    """
    a_x = box_l / n_x
    h = box_l / n_y
    pts = []
    for row in range(n_y):
        offset = 0.25 * a_x if row % 2 == 0 else 0.75 * a_x
        for col in range(n_x):
            pts.append(((offset + col * a_x) % box_l, (0.5 + row) * h % box_l))
    return np.array(pts)


def brute_force_frame(positions: np.ndarray, box_l: float) -> np.ndarray:
    """Python-loop binary rasterization oracle."""
    n_pix = int(round(box_l))
    frame = np.zeros((n_pix, n_pix), dtype=np.uint8)
    for x, y in np.asarray(positions, dtype=float):
        ix = int(np.floor(x)) % n_pix
        iy = int(np.floor(y)) % n_pix
        frame[iy, ix] = 255
    return frame
