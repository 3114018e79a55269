"""Bessel functions J0, J1, Y0, Y1 and Hankel functions H0(1), H1(1) of real argument.

Three evaluation branches, selected per element:

* ``x <= SERIES_MAX``: ascending power series.
* ``SERIES_MAX < x < ASYMPTOTIC_MIN``: Miller backward recurrence for J_n,
  normalised by ``J0 + 2 sum J_2k = 1``; Y0 and Y1 from the Neumann series
  in the even-order J_n.
* ``x >= ASYMPTOTIC_MIN``: Hankel asymptotic expansion.

All routines accept scalars or numpy arrays and return the same shape.
"""

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
SERIES_MAX = 8.0
ASYMPTOTIC_MIN = 25.0

_N_SERIES = 40
_N_ASYMPTOTIC = 30


def _check_order(order):
    if order not in (0, 1):
        raise ValueError(f"only orders 0 and 1 are supported, got {order!r}")


def _series(x):
    """Ascending series for J0, J1, Y0, Y1 on 0 < x <= SERIES_MAX."""
    q = 0.25 * x * x
    # term_k = (-q)^k / (k!)^2 for J0; J1 terms carry an extra 1/(k+1)
    term = np.ones_like(x)
    j0 = np.ones_like(x)
    j1 = np.ones_like(x)
    harmonic = 0.0
    y0_sum = np.zeros_like(x)
    # Y1 series: sum (-1)^k (psi(k+1) + psi(k+2)) (x/2)^(2k+1) / (k!(k+1)!)
    y1_sum = (-2.0 * EULER_GAMMA + 1.0) * np.ones_like(x)
    for k in range(1, _N_SERIES):
        term = term * (-q) / (k * k)
        harmonic += 1.0 / k
        j0 = j0 + term
        t1 = term / (k + 1)
        j1 = j1 + t1
        y0_sum = y0_sum - harmonic * term
        psi_sum = 2.0 * (harmonic - EULER_GAMMA) + 1.0 / (k + 1)
        y1_sum = y1_sum + psi_sum * t1
    half = 0.5 * x
    j1 = half * j1
    log_term = np.log(half) + EULER_GAMMA
    y0 = (2.0 / np.pi) * (log_term * j0 + y0_sum)
    y1 = (2.0 / np.pi) * np.log(half) * j1 - 2.0 / (np.pi * x) - (half / np.pi) * y1_sum
    return j0, j1, y0, y1


def _miller(x):
    """Backward recurrence for J0, J1 and Neumann series for Y0, Y1."""
    xmax = float(np.max(x))
    top = int(xmax + 30.0 + 6.0 * math.sqrt(xmax))
    top += top % 2
    inv_x = 1.0 / x
    jp2 = np.zeros_like(x)  # J_{n+2}
    jp1 = np.zeros_like(x)  # J_{n+1}
    jn = np.full_like(x, 1e-30)  # J_n, unnormalised
    norm = np.zeros_like(x)
    s0 = np.zeros_like(x)  # sum_k (-1)^k J_2k / k
    s1 = np.zeros_like(x)  # sum_k (-1)^k (J_{2k-1} - J_{2k+1}) / k
    for n in range(top, 0, -1):
        if n % 2 == 0:
            k = n // 2
            norm = norm + 2.0 * jn
            s0 = s0 + (-1.0) ** k * jn / k
        else:
            k = (n + 1) // 2
            s1 = s1 + (-1.0) ** k * (jn - jp2) / k
        jp2, jp1, jn = jp1, jn, 2.0 * n * inv_x * jn - jp1
        if np.max(np.abs(jn)) > 1e200:
            jp2, jp1, jn = jp2 * 1e-200, jp1 * 1e-200, jn * 1e-200
            norm, s0, s1 = norm * 1e-200, s0 * 1e-200, s1 * 1e-200
    norm = norm + jn
    j0 = jn / norm
    j1 = jp1 / norm
    s0 = s0 / norm
    s1 = s1 / norm
    log_term = np.log(0.5 * x) + EULER_GAMMA
    y0 = (2.0 / np.pi) * log_term * j0 - (4.0 / np.pi) * s0
    y1 = (2.0 / np.pi) * log_term * j1 - (2.0 / np.pi) * j0 * inv_x + (2.0 / np.pi) * s1
    return j0, j1, y0, y1


def _asymptotic_pq(nu, x):
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    coeff = 1.0
    inv8x = 1.0 / (8.0 * x)
    power = np.ones_like(x)
    for k in range(1, 2 * _N_ASYMPTOTIC):
        coeff *= (mu - (2 * k - 1) ** 2) / k
        power = power * inv8x
        t = coeff * power
        if k % 2:
            q = q + (t if (k // 2) % 2 == 0 else -t)
        else:
            p = p + (t if (k // 2) % 2 == 0 else -t)
    return p, q


def _asymptotic(x):
    amp = np.sqrt(2.0 / (np.pi * x))
    out = []
    for nu in (0, 1):
        p, q = _asymptotic_pq(nu, x)
        chi = x - (0.5 * nu + 0.25) * np.pi
        c, s = np.cos(chi), np.sin(chi)
        out.append((amp * (p * c - q * s), amp * (p * s + q * c)))
    (j0, y0), (j1, y1) = out
    return j0, j1, y0, y1


def bessel_all(x):
    """Return ``(J0, J1, Y0, Y1)`` at positive ``x`` in one pass.

    This is the workhorse behind kernel assembly, where both orders are
    needed at every matrix entry.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xf = np.atleast_1d(x).ravel()
    if np.any(~(xf > 0)):
        raise ValueError("Bessel Y and Hankel functions require x > 0")
    outs = [np.empty_like(xf) for _ in range(4)]
    for lo, hi, branch in (
        (0.0, SERIES_MAX, _series),
        (SERIES_MAX, ASYMPTOTIC_MIN, _miller),
        (ASYMPTOTIC_MIN, np.inf, _asymptotic),
    ):
        if branch is _series:
            mask = xf <= hi
        elif branch is _miller:
            mask = (xf > lo) & (xf < hi)
        else:
            mask = xf >= lo
        if np.any(mask):
            for dst, val in zip(outs, branch(xf[mask])):
                dst[mask] = val
    outs = [o.reshape(x.shape) for o in outs]
    if scalar:
        return tuple(float(o) for o in outs)
    return tuple(outs)


def bessel_j(order, x):
    """Bessel function of the first kind, order 0 or 1, for ``x >= 0``."""
    _check_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("bessel_j requires x >= 0")
    zero = x == 0
    safe = np.where(zero, 1.0, x)
    j0, j1, _, _ = bessel_all(safe)
    val = j0 if order == 0 else j1
    val = np.where(zero, 1.0 if order == 0 else 0.0, val)
    return float(val) if val.ndim == 0 else val


def bessel_y(order, x):
    """Bessel function of the second kind, order 0 or 1, for ``x > 0``."""
    _check_order(order)
    _, _, y0, y1 = bessel_all(x)
    return y0 if order == 0 else y1


def hankel1(order, x):
    """First-kind Hankel function ``J + iY`` of order 0 or 1 for ``x > 0``."""
    _check_order(order)
    j0, j1, y0, y1 = bessel_all(x)
    if order == 0:
        return j0 + 1j * y0
    return j1 + 1j * y1


def hankel01(x):
    """Return ``(H0(1)(x), H1(1)(x), J0(x), J1(x))`` for array ``x > 0``."""
    j0, j1, y0, y1 = bessel_all(x)
    return j0 + 1j * y0, j1 + 1j * y1, j0, j1
