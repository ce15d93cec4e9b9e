"""Compiled inner loops for the plane-wave solver.

Cell ``j`` holds ``psi_j(x) = a_j exp(i k_j (x - x_j)) + b_j exp(-i k_j (x - x_{j+1}))``:
the right-mover is referenced at the cell's left edge and the left-mover at
its right edge, so every propagation factor has modulus <= 1.  Cells 0 and
N-1 are semi-infinite leads; amplitudes there are referenced at the
interfaces x_1 and x_{N-1}.
"""

import math

import numpy as np
from numba import njit

from .constants import HBAR2_2M0

# stands in for k = 0 (E exactly at a band edge), where plane waves degenerate;
# truncation error ~(k w)^2 and roundoff ~eps/k balance near here
_K_FLOOR = 1e-6


@njit(cache=True)
def wavevector(E, V, m):
    d = (E - V) * m / HBAR2_2M0
    if d >= 0.0:
        return complex(math.sqrt(d), 0.0)
    return complex(0.0, math.sqrt(-d))


@njit(cache=True)
def _k_safe(E, V, m):
    k = wavevector(E, V, m)
    if abs(k) < _K_FLOOR:
        k = complex(0.0, _K_FLOOR)
    return k


@njit(cache=True)
def _interface(qa, qb):
    s = qa + qb
    return (qa - qb) / s, 2.0 * qa / s, (qb - qa) / s, 2.0 * qb / s


@njit(cache=True)
def smatrix(V, m, w, E):
    """Total (r, t, r', t') of the mesh at energy E, plus the failing cell (or -1)."""
    n = V.size
    k_prev = _k_safe(E, V[0], m[0])
    q_prev = k_prev / m[0]
    k1 = _k_safe(E, V[1], m[1])
    q1 = k1 / m[1]
    r, t, rp, tp = _interface(q_prev, q1)
    k_prev, q_prev = k1, q1
    bad = -1
    for j in range(1, n - 1):
        p = np.exp(1j * k_prev * w[j])
        # absorb propagation across cell j
        t = p * t
        tp = tp * p
        rp = p * p * rp
        kn = _k_safe(E, V[j + 1], m[j + 1])
        qn = kn / m[j + 1]
        ri, ti, rpi, tpi = _interface(q_prev, qn)
        den = 1.0 - rp * ri
        if den == 0.0:
            bad = j
            break
        d = 1.0 / den
        r = r + tp * ri * d * t
        rp_new = rpi + ti * rp * d * tpi
        t = ti * d * t
        tp = tp * d * tpi
        rp = rp_new
        k_prev, q_prev = kn, qn
        if not (math.isfinite(t.real) and math.isfinite(t.imag) and math.isfinite(r.real)):
            bad = j
            break
    return r, t, rp, tp, bad


@njit(cache=True)
def transmission_many(V, m, w, energies):
    out = np.zeros(energies.size)
    for i in range(energies.size):
        E = energies[i]
        if E <= V[0] or E <= V[-1]:
            continue
        r, t, rp, tp, bad = smatrix(V, m, w, E)
        q0 = wavevector(E, V[0], m[0]).real / m[0]
        qn = wavevector(E, V[-1], m[-1]).real / m[-1]
        out[i] = qn / q0 * (t.real * t.real + t.imag * t.imag)
    return out


@njit(cache=True)
def amplitudes(V, m, w, E):
    """Per-cell (a_j, b_j) for unit incidence from the channel lead and no return from the gate."""
    n = V.size
    k = np.empty(n, dtype=np.complex128)
    for j in range(n):
        k[j] = _k_safe(E, V[j], m[j])
    q = k / m
    p = np.ones(n, dtype=np.complex128)
    for j in range(1, n - 1):
        p[j] = np.exp(1j * k[j] * w[j])

    # rho[j]: reflection seen from the left of interface (j, j+1)
    rho = np.zeros(n, dtype=np.complex128)
    for j in range(n - 2, -1, -1):
        ri, ti, rpi, tpi = _interface(q[j], q[j + 1])
        sigma = 0.0j if j + 1 == n - 1 else p[j + 1] * p[j + 1] * rho[j + 1]
        rho[j] = ri + tpi * ti * sigma / (1.0 - rpi * sigma)

    a = np.zeros(n, dtype=np.complex128)
    b = np.zeros(n, dtype=np.complex128)
    a[0] = 1.0
    b[0] = rho[0]
    ri, tl, rpl, tpi = _interface(q[0], q[1])
    for j in range(1, n - 1):
        sigma = p[j] * p[j] * rho[j]
        a[j] = tl / (1.0 - rpl * sigma)
        b[j] = rho[j] * a[j] * p[j]
        # extend the left block across cell j and interface (j, j+1)
        tl = p[j] * tl
        rpl = p[j] * p[j] * rpl
        ri, ti, rpi, tpi = _interface(q[j], q[j + 1])
        d = 1.0 / (1.0 - rpl * ri)
        rpl = rpi + ti * rpl * d * tpi
        tl = ti * d * tl
    a[n - 1] = tl
    return a, b, k


@njit(cache=True)
def _advance(psi, phi, E, V, m, w):
    """Carry (psi, psi'/m) across one cell; also return the node count inside (0, w]."""
    d = (E - V) * m / HBAR2_2M0
    if d > 0.0:
        k = math.sqrt(d)
        c = math.cos(k * w)
        s = math.sin(k * w)
        psi1 = psi * c + m * phi / k * s
        phi1 = -psi * k / m * s + phi * c
        theta = math.atan2(m * phi / k, psi)
        nodes = math.floor((k * w - theta - 0.5 * math.pi) / math.pi) - math.floor(
            (-theta - 0.5 * math.pi) / math.pi)
        return psi1, phi1, int(nodes)
    if d < 0.0:
        kap = math.sqrt(-d)
        c = math.cosh(kap * w)
        s = math.sinh(kap * w)
        psi1 = psi * c + m * phi / kap * s
        phi1 = psi * kap / m * s + phi * c
    else:
        psi1 = psi + m * phi * w
        phi1 = phi
    nodes = 1 if (psi != 0.0 and psi * psi1 <= 0.0) else 0
    return psi1, phi1, nodes


@njit(cache=True)
def sturm_count(V, m, w, E, i0, i1):
    """Number of bound states below E of cells i0..i1 with those end cells extended to infinity.

    Counts nodes of the solution that decays toward -infinity; returns -1
    when E is not below both confining end potentials.
    """
    if E >= V[i0] or E >= V[i1]:
        return -1
    kap = math.sqrt((V[i0] - E) * m[i0] / HBAR2_2M0)
    psi = 1.0
    phi = kap / m[i0]
    count = 0
    for j in range(i0, i1 + 1):
        psi, phi, nodes = _advance(psi, phi, E, V[j], m[j], w[j])
        count += nodes
        scale = abs(psi) + abs(phi)
        psi /= scale
        phi /= scale
    kap = math.sqrt((V[i1] - E) * m[i1] / HBAR2_2M0)
    tail = psi + m[i1] * phi / kap
    if psi != 0.0 and psi * tail < 0.0:
        count += 1
    return count


@njit(cache=True)
def bound_state(V, m, w, E, i0, i1, i_match):
    """Closed-structure eigenfunction at cell centers (unnormalized).

    Integrated from the left up to the right edge of cell ``i_match`` and from
    the right back to it, then matched in value there.
    """
    n = V.size
    out = np.zeros(n)
    kap = math.sqrt(max(V[i0] - E, 0.0) * m[i0] / HBAR2_2M0)
    psi, phi = 1.0, kap / m[i0]
    logscale = 0.0
    left_scale = np.zeros(n)
    for j in range(i0, i_match + 1):
        ph, _, _ = _advance(psi, phi, E, V[j], m[j], 0.5 * w[j])
        out[j] = ph
        left_scale[j] = logscale
        psi, phi, _ = _advance(psi, phi, E, V[j], m[j], w[j])
        s = abs(psi) + abs(phi)
        psi /= s
        phi /= s
        logscale += math.log(s)
    psi_left_end, log_left_end = psi, logscale
    for j in range(i0, i_match + 1):
        out[j] *= math.exp(left_scale[j] - log_left_end)
    # integrate from the right; stepping backward is the same ODE with x -> -x
    kap = math.sqrt(max(V[i1] - E, 0.0) * m[i1] / HBAR2_2M0)
    psi, phi = 1.0, kap / m[i1]
    logscale = 0.0
    right_scale = np.zeros(n)
    for j in range(i1, i_match, -1):
        ph, _, _ = _advance(psi, phi, E, V[j], m[j], 0.5 * w[j])
        out[j] = ph
        right_scale[j] = logscale
        psi, phi, _ = _advance(psi, phi, E, V[j], m[j], w[j])
        s = abs(psi) + abs(phi)
        psi /= s
        phi /= s
        logscale += math.log(s)
    ratio = psi_left_end / psi if psi != 0.0 else 1.0
    for j in range(i1, i_match, -1):
        out[j] *= ratio * math.exp(right_scale[j] - logscale)
    return out
