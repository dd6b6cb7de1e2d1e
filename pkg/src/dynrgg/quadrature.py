"""Adaptive Gauss-Legendre quadrature on an interval."""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss


class QuadratureError(RuntimeError):
    pass


_RULES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _rule(order):
    if order not in _RULES:
        _RULES[order] = leggauss(order)
    return _RULES[order]


def adaptive_gauss_legendre(f, a, b, rtol=1e-10, atol=0.0, order=12, max_depth=40, breakpoints=(),
                            smooth_ends=False):
    """Integrate ``f`` over ``[a, b]``; returns ``(value, error_estimate)``.

    ``f`` is called with a 1-d array of nodes. Each panel is split in two
    until the halves agree with the whole to within the panel's share of
    ``max(atol, rtol * |integral|)``. Known kinks should be passed as
    ``breakpoints`` so they land on panel edges.

    With ``smooth_ends`` every segment between breakpoints is remapped by
    x = lo + (hi - lo) (1 - cos(pi u)) / 2, which removes square-root
    behaviour at the segment ends.
    """
    if b < a:
        val, err = adaptive_gauss_legendre(f, b, a, rtol, atol, order, max_depth, breakpoints, smooth_ends)
        return -val, err
    if b == a:
        return 0.0, 0.0
    if smooth_ends:
        edges = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
        val = err = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)

            def mapped(u, lo=lo, half=half):
                return f(lo + half * (1.0 - np.cos(np.pi * u))) * (half * np.pi * np.sin(np.pi * u))

            v, e = adaptive_gauss_legendre(mapped, 0.0, 1.0, rtol, atol / (b - a) * (hi - lo) if atol else 0.0,
                                           order, max_depth)
            val += v
            err += e
        return val, err
    nodes, weights = _rule(order)

    def panel(lo, hi):
        half = 0.5 * (hi - lo)
        return half * float(np.dot(weights, f(lo + half * (nodes + 1.0))))

    edges = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    stack = [(lo, hi, panel(lo, hi), 0) for lo, hi in zip(edges[:-1], edges[1:])]
    scale = abs(sum(item[2] for item in stack))
    length = b - a
    total = 0.0
    err_total = 0.0
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = panel(lo, mid)
        right = panel(mid, hi)
        err = abs(left + right - whole)
        target = max(atol, rtol * scale) * (hi - lo) / length
        if err <= target or err <= 1e-15 * abs(left + right) or hi - lo <= 1e-15 * length:
            total += left + right
            err_total += err
            continue
        if depth >= max_depth:
            raise QuadratureError(
                f"no convergence on [{lo:.6g}, {hi:.6g}] after {max_depth} bisections (err {err:.3g})")
        stack.append((lo, mid, left, depth + 1))
        stack.append((mid, hi, right, depth + 1))
    return total, err_total
