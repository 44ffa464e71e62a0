"""Shared builders and set comparisons for the test suites."""

import numpy as np

from realsmooth.poly import Polynomial, PolySystem


def set_distance(P, Q):
    """Largest distance from a point of one set to the other set."""
    if len(P) != len(Q):
        return np.inf
    d1 = max((min(np.linalg.norm(p - q) for q in Q) for p in P), default=0.0)
    d2 = max((min(np.linalg.norm(p - q) for p in P) for q in Q), default=0.0)
    return max(d1, d2)


def random_quadratic_system(rng, n, real=False):
    """``n`` dense quadrics in ``n`` unknowns with normal coefficients."""
    reg = tuple(f"x{i}" for i in range(n))
    polys = []
    for _ in range(n):
        terms = {}
        for e in np.ndindex(*(3,) * n):
            if sum(e) <= 2:
                terms[e] = float(rng.normal()) if real else complex(rng.normal(), rng.normal())
        polys.append(Polynomial(terms, reg))
    return PolySystem(polys, reg)


def central_difference_jacobian(S, z, h=1e-6):
    n = len(z)
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append((S.evaluate(z + e) - S.evaluate(z - e)) / (2 * h))
    return np.array(cols).T
