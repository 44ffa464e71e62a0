"""Vectorised evaluation of polynomial systems and their Jacobians.

All polynomials and their first partials are flattened onto a shared
monomial basis.  A batch of points is mapped to monomial values with one
power table per variable, after which values and Jacobians are plain
matrix products.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .poly import Polynomial


class CompiledSystem:
    """Fast batch evaluator for a list of polynomials on one registry.

    Args:
        polys: polynomials sharing ``registry``.
        registry: variable names; defaults to the registry of ``polys[0]``.
        jacobian: whether to prepare first partials as well.
    """

    def __init__(self, polys: Sequence[Polynomial], registry: Sequence[str] | None = None,
                 jacobian: bool = True):
        polys = list(polys)
        if registry is None:
            registry = polys[0].registry
        self.registry = tuple(registry)
        for p in polys:
            if p.registry != self.registry:
                raise ValueError("all polynomials must share the registry")
        self.m = len(polys)
        self.n = len(self.registry)
        self.has_jacobian = jacobian

        partials = [[p.diff(j) for j in range(self.n)] for p in polys] if jacobian else []
        index: dict[tuple[int, ...], int] = {}

        def slot(e):
            k = index.get(e)
            if k is None:
                k = index[e] = len(index)
            return k

        entries_v = []
        for i, p in enumerate(polys):
            for e, c in p.terms.items():
                entries_v.append((slot(e), i, c))
        entries_j = []
        for i, row in enumerate(partials):
            for j, dp in enumerate(row):
                for e, c in dp.terms.items():
                    entries_j.append((slot(e), i * self.n + j, c))
        K = max(len(index), 1)
        self.exponents = np.zeros((K, self.n), dtype=np.int64)
        for e, k in index.items():
            self.exponents[k] = e
        self.Cv = np.zeros((K, self.m), dtype=complex)
        for k, i, c in entries_v:
            self.Cv[k, i] += c
        self.Cv_abs = np.abs(self.Cv)
        if jacobian:
            self.Cj = np.zeros((K, self.m * self.n), dtype=complex)
            for k, col, c in entries_j:
                self.Cj[k, col] += c
        self._build_recurrence()

    def _build_recurrence(self):
        """Close the basis under division by one variable and group it by degree.

        Every monomial of degree ``d`` is then a monomial of degree ``d - 1``
        times one variable, so the whole basis costs one product per monomial.
        Parents already in the basis are preferred to keep the closure small.
        """
        basis = [tuple(e) for e in self.exponents]
        index = {e: k for k, e in enumerate(basis)}
        parent, var = {}, {}
        queue = sorted(basis, key=sum, reverse=True)
        while queue:
            e = queue.pop(0)
            if e in parent or not any(e):
                continue
            options = [j for j, a in enumerate(e) if a]
            cands = [(j, e[:j] + (e[j] - 1,) + e[j + 1:]) for j in options]
            j, p = next(((j, p) for j, p in cands if p in index), cands[0])
            parent[e], var[e] = p, j
            if p not in index:
                index[p] = len(index)
                # keep the queue ordered by decreasing degree
                queue.insert(next((k for k, q in enumerate(queue) if sum(q) < sum(p)), len(queue)), p)
        zero = (0,) * self.n
        if zero not in index:
            index[zero] = len(index)
        self._K_full = len(index)
        self._K = len(basis)
        self._one = index[zero]
        by_deg: dict[int, list] = {}
        for e, k in index.items():
            d = sum(e)
            if d:
                by_deg.setdefault(d, []).append((k, index[parent[e]], var[e]))
        self._levels = []
        for d in sorted(by_deg):
            arr = np.array(by_deg[d], dtype=np.int64)
            self._levels.append((arr[:, 0], arr[:, 1], arr[:, 2]))

    def monomials(self, X: np.ndarray) -> np.ndarray:
        """Values of the shared monomial basis at each row of ``X``."""
        X = np.asarray(X)
        # variable-major layout keeps the gathers contiguous
        Xt = np.ascontiguousarray(X.T)
        M = np.empty((self._K_full, X.shape[0]), dtype=np.result_type(X.dtype, float))
        M[self._one] = 1.0
        for tgt, par, var in self._levels:
            M[tgt] = M[par] * Xt[var]
        return M[: self._K].T

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        return self.monomials(X) @ self.Cv

    def values_and_jacobian(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return values ``(B, m)`` and Jacobians ``(B, m, n)``."""
        if not self.has_jacobian:
            raise RuntimeError("compiled without Jacobian")
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        M = self.monomials(X)
        return M @ self.Cv, (M @ self.Cj).reshape(X.shape[0], self.m, self.n)

    def term_scale(self, X: np.ndarray) -> np.ndarray:
        """``sum |c| |x^a|`` per polynomial; denominator of the backward error."""
        X = np.atleast_2d(np.abs(np.asarray(X, dtype=complex)))
        return self.monomials(X) @ self.Cv_abs

    def jacobian_scale(self, X: np.ndarray) -> np.ndarray:
        """``max(sum |c| |x^a|, sum |c|)`` for every Jacobian entry, shape ``(B, m, n)``."""
        X = np.atleast_2d(np.abs(np.asarray(X, dtype=complex)))
        Cj = np.abs(self.Cj)
        scale = np.maximum(self.monomials(X) @ Cj, Cj.sum(axis=0)[None, :])
        return scale.reshape(X.shape[0], self.m, self.n)

    def backward_error(self, X: np.ndarray) -> np.ndarray:
        """Relative residual, maximised over polynomials.

        Each value is divided by ``max(sum |c| |x^a|, sum |c|)`` so that points
        where every term is tiny are not over-penalised.
        """
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        if self.m == 0:
            return np.zeros(X.shape[0])
        vals = np.abs(self.values(X))
        scale = np.maximum(self.term_scale(X), self.Cv_abs.sum(axis=0)[None, :])
        return np.max(vals / np.maximum(scale, 1e-300), axis=1)
