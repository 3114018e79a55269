"""Independent reference solutions (separation of variables with scipy.special)."""

import numpy as np
import pytest
import scipy.special as sp


def mie_scattered(kind, k, radius, direction, points):
    """Scattered field of a plane wave by a sound-soft or sound-hard disk."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = np.asarray(direction, dtype=float)
    z = z / np.hypot(*z)
    theta0 = np.arctan2(z[1], z[0])
    r = np.hypot(pts[:, 0], pts[:, 1])
    th = np.arctan2(pts[:, 1], pts[:, 0])
    ka = k * radius
    out = np.zeros(len(pts), dtype=complex)
    for m in range(-int(ka + 30), int(ka + 30) + 1):
        if kind == "soft":
            c = -sp.jv(m, ka) / sp.hankel1(m, ka)
        else:
            c = -sp.jvp(m, ka) / sp.h1vp(m, ka)
        out += c * 1j**m * sp.hankel1(m, k * r) * np.exp(1j * m * (th - theta0))
    return out


def mie_radial(kind, k, direction, radius, r, theta, order, dtheta=0):
    """``d^order/dr^order d^dtheta/dtheta^dtheta`` of the Mie scattered field (exact series)."""
    ka = k * radius
    theta0 = np.arctan2(direction[1], direction[0])
    out = np.zeros_like(theta, dtype=complex)
    for m in range(-int(ka + 30), int(ka + 30) + 1):
        c = -sp.jv(m, ka) / sp.hankel1(m, ka) if kind == "soft" else -sp.jvp(m, ka) / sp.h1vp(m, ka)
        radial = k**order * sp.h1vp(m, k * r, order) if order else sp.hankel1(m, k * r)
        out += c * 1j**m * radial * (1j * m) ** dtheta * np.exp(1j * m * (theta - theta0))
    return out


def mie_impedance(k, radius, lam, direction, points, alpha=1.0):
    """Disk with ``alpha dn u_tot + i lam u_tot = 0``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = np.asarray(direction, dtype=float)
    theta0 = np.arctan2(z[1], z[0])
    r = np.hypot(pts[:, 0], pts[:, 1])
    th = np.arctan2(pts[:, 1], pts[:, 0])
    ka = k * radius
    out = np.zeros(len(pts), dtype=complex)
    for m in range(-int(ka + 30), int(ka + 30) + 1):
        num = alpha * k * sp.jvp(m, ka) + 1j * lam * sp.jv(m, ka)
        den = alpha * k * sp.h1vp(m, ka) + 1j * lam * sp.hankel1(m, ka)
        out += -num / den * 1j**m * sp.hankel1(m, k * r) * np.exp(1j * m * (th - theta0))
    return out


def penetrable_disk(k, radius, alpha_in, alpha_ex, source, points, inside):
    """Point source outside a penetrable disk; interior total field or exterior scattered field."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    xs = np.asarray(source, dtype=float)
    ki, ke = k / np.sqrt(alpha_in), k / np.sqrt(alpha_ex)
    rs, ts = np.hypot(*xs), np.arctan2(xs[1], xs[0])
    r = np.hypot(pts[:, 0], pts[:, 1])
    th = np.arctan2(pts[:, 1], pts[:, 0])
    a = radius
    out = np.zeros(len(pts), dtype=complex)
    for m in range(-60, 61):
        c = 0.25j * sp.hankel1(m, ke * rs)
        mat = np.array([[sp.hankel1(m, ke * a), -sp.jv(m, ki * a)],
                        [alpha_ex * ke * sp.h1vp(m, ke * a), -alpha_in * ki * sp.jvp(m, ki * a)]])
        amp_ex, amp_in = np.linalg.solve(mat, [-c * sp.jv(m, ke * a), -alpha_ex * c * ke * sp.jvp(m, ke * a)])
        out += np.where(inside, amp_in * sp.jv(m, ki * r), amp_ex * sp.hankel1(m, ke * r)) * np.exp(1j * m * (th - ts))
    return out


@pytest.fixture
def ring64():
    th = 2.0 * np.pi * np.arange(64) / 64
    return 5.0 * np.column_stack([np.cos(th), np.sin(th)])


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
