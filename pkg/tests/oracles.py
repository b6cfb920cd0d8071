"""Independent oracles used by the tests.

The photon-cubic oracle brackets roots by a dense sign-change scan and
refines them by bisection; it never touches the closed-form solver under
test. Scan windows come from the Fujiwara bound on the monic cubic, so
every real root is inside the scanned interval by construction.
"""

from __future__ import annotations

import numpy as np

LINEAR_NODE_MAX = 24.0


def cubic_value(n, delta, xi):
    return xi * xi * n**3 - 2.0 * delta * xi * n**2 + (delta * delta + 0.25) * n - 0.5


def root_bound(delta, xi):
    """Fujiwara upper bound for the positive roots."""
    if xi == 0.0:
        return 5.0
    b = -2.0 * delta / xi
    c = (delta * delta + 0.25) / (xi * xi)
    d = -0.5 / (xi * xi)
    return 2.0 * max(abs(b), np.sqrt(abs(c)), np.cbrt(abs(d))) + 1.0


def brute_force_roots(delta, xi, n_max=None, step=1e-4):
    """Literal fixed-step sign-change scan, then bisection refinement."""
    if n_max is None:
        n_max = root_bound(delta, xi)
    nodes = np.arange(0.0, n_max + step, step)
    return _refine(nodes, delta, xi)


def scanned_roots(delta, xi, linear_nodes=12001, log_nodes=8001):
    """Composite linear+log scan sized to the per-point root bound."""
    bound = root_bound(delta, xi)
    nodes = np.linspace(0.0, min(LINEAR_NODE_MAX, bound), linear_nodes)
    if bound > LINEAR_NODE_MAX:
        nodes = np.concatenate(
            [nodes, np.geomspace(LINEAR_NODE_MAX, bound, log_nodes)[1:]]
        )
    return _refine(nodes, delta, xi)


def _refine(nodes, delta, xi, iterations=90):
    values = cubic_value(nodes, delta, xi)
    sign = np.sign(values)
    exact = nodes[values == 0.0]
    flips = np.flatnonzero((sign[:-1] * sign[1:]) < 0.0)
    lo = nodes[flips].astype(float)
    hi = nodes[flips + 1].astype(float)
    flo = values[flips]
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fmid = cubic_value(mid, delta, xi)
        take_left = (flo * fmid) <= 0.0
        hi = np.where(take_left, mid, hi)
        lo = np.where(take_left, lo, mid)
        flo = np.where(take_left, flo, fmid)
    roots = np.sort(np.concatenate([exact, 0.5 * (lo + hi)]))
    return roots
