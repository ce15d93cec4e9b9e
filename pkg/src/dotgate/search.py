"""Golden-section search for the extremum of a unimodal function."""

import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a: float, b: float, tol: float) -> float:
    """Maximizer of ``f`` on [a, b], assuming a single interior peak, to within ``tol``."""
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            if not a < c < d:
                break
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            if not c < d < b:
                break
            fd = f(d)
    return c if fc >= fd else d


def golden_section_min(f, a: float, b: float, tol: float) -> float:
    return golden_section_max(lambda x: -f(x), a, b, tol)
