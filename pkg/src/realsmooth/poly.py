"""Sparse multivariate polynomials with complex coefficients.

A :class:`Polynomial` maps exponent tuples to complex coefficients over a
fixed variable registry (a tuple of names).  Values are immutable once
built.  A :class:`PolySystem` is an ordered collection of polynomials on a
shared registry, some of whose names may be declared parameters (for
example the continuation parameter ``t``).
"""

from __future__ import annotations

import itertools
import numbers
from typing import Iterable, Mapping, Sequence

import numpy as np


class RegistryError(ValueError):
    """Raised when polynomials on different variable registries are mixed."""


def _check_registry(a: "Polynomial", b: "Polynomial") -> None:
    if a.registry != b.registry:
        raise RegistryError(f"registry mismatch: {a.registry} vs {b.registry}")


def grlex_key(exps: tuple[int, ...]):
    return (sum(exps), exps)


class Polynomial:
    """Immutable sparse polynomial over a variable registry."""

    __slots__ = ("registry", "terms", "_hash")

    def __init__(self, terms: Mapping[tuple[int, ...], complex], registry: Sequence[str]):
        registry = tuple(registry)
        n = len(registry)
        clean = {}
        for exps, c in terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != n:
                raise ValueError(f"exponent vector {exps} does not match {n} variables")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = complex(c)
            if c != 0:
                clean[exps] = c
        object.__setattr__(self, "registry", registry)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, key, value):
        raise AttributeError("Polynomial is immutable")

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls, registry: Sequence[str]) -> "Polynomial":
        return cls({}, registry)

    @classmethod
    def constant(cls, c: complex, registry: Sequence[str]) -> "Polynomial":
        return cls({(0,) * len(registry): c}, registry)

    @classmethod
    def variable(cls, name: str, registry: Sequence[str]) -> "Polynomial":
        registry = tuple(registry)
        exps = [0] * len(registry)
        exps[registry.index(name)] = 1
        return cls({tuple(exps): 1.0}, registry)

    @classmethod
    def linear(cls, coeffs: Sequence[complex], const: complex, registry: Sequence[str]) -> "Polynomial":
        """Return ``sum(coeffs[i] * x_i) + const``."""
        registry = tuple(registry)
        if len(coeffs) != len(registry):
            raise ValueError("one coefficient per variable expected")
        n = len(registry)
        terms = {(0,) * n: const}
        for i, c in enumerate(coeffs):
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = c
        return cls(terms, registry)

    # ---- basic queries ------------------------------------------------

    @property
    def nvars(self) -> int:
        return len(self.registry)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def degree_in(self, indices: Iterable[int]) -> int:
        idx = list(indices)
        if not self.terms:
            return -1
        return max(sum(e[i] for i in idx) for e in self.terms)

    def constant_term(self) -> complex:
        return self.terms.get((0,) * self.nvars, 0j)

    def sorted_terms(self) -> list[tuple[tuple[int, ...], complex]]:
        """Terms in descending graded lexicographic order."""
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]), reverse=True)

    def is_real(self, tol: float = 0.0) -> bool:
        return all(abs(c.imag) <= tol * max(1.0, abs(c)) for c in self.terms.values())

    def coeff_norm(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def used_variables(self) -> list[int]:
        used = set()
        for e in self.terms:
            used.update(i for i, k in enumerate(e) if k)
        return sorted(used)

    # ---- arithmetic ---------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            _check_registry(self, other)
            return other
        if isinstance(other, numbers.Number):
            return Polynomial.constant(other, self.registry)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0j) + c
        return Polynomial(terms, self.registry)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({e: -c for e, c in self.terms.items()}, self.registry)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            c0 = complex(other)
            return Polynomial({e: c * c0 for e, c in self.terms.items()}, self.registry)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[tuple[int, ...], complex] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0j) + c1 * c2
        return Polynomial(terms, self.registry)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, numbers.Number):
            return self * (1.0 / complex(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, numbers.Integral) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Polynomial.constant(1.0, self.registry)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, numbers.Number):
            other = Polynomial.constant(other, self.registry)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.registry == other.registry and self.terms == other.terms

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.registry, frozenset(self.terms.items())))
            object.__setattr__(self, "_hash", h)
        return h

    def allclose(self, other: "Polynomial", rtol: float = 1e-12, atol: float = 1e-14) -> bool:
        _check_registry(self, other)
        scale = max(self.coeff_norm(), other.coeff_norm(), 1.0)
        for e in set(self.terms) | set(other.terms):
            a = self.terms.get(e, 0j)
            b = other.terms.get(e, 0j)
            if abs(a - b) > atol + rtol * scale:
                return False
        return True

    # ---- calculus and evaluation -------------------------------------

    def diff(self, var: int | str) -> "Polynomial":
        """Formal partial derivative with respect to a variable index or name."""
        i = self.registry.index(var) if isinstance(var, str) else int(var)
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range")
        terms = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                ne = e[:i] + (k - 1,) + e[i + 1:]
                terms[ne] = terms.get(ne, 0j) + c * k
        return Polynomial(terms, self.registry)

    def gradient(self, indices: Iterable[int] | None = None) -> list["Polynomial"]:
        idx = range(self.nvars) if indices is None else indices
        return [self.diff(i) for i in idx]

    def eval(self, point: Sequence[complex]) -> complex:
        point = np.asarray(point, dtype=complex)
        if point.shape != (self.nvars,):
            raise ValueError(f"point has dimension {point.shape}, expected ({self.nvars},)")
        total = 0j
        for e, c in self.terms.items():
            term = c
            for xi, k in zip(point, e):
                if k:
                    term *= xi ** k
            total += term
        return complex(total)

    __call__ = eval

    def subs(self, values: Mapping[str, complex]) -> "Polynomial":
        """Substitute numeric values for some variables and drop them from the registry."""
        drop = [self.registry.index(name) for name in values]
        keep = [i for i in range(self.nvars) if i not in drop]
        registry = tuple(self.registry[i] for i in keep)
        vals = {self.registry.index(k): complex(v) for k, v in values.items()}
        terms: dict[tuple[int, ...], complex] = {}
        for e, c in self.terms.items():
            for i, v in vals.items():
                if e[i]:
                    c = c * v ** e[i]
            ne = tuple(e[i] for i in keep)
            terms[ne] = terms.get(ne, 0j) + c
        return Polynomial(terms, registry)

    def extend(self, registry: Sequence[str]) -> "Polynomial":
        """Re-express over a larger registry containing all current variables."""
        registry = tuple(registry)
        pos = [registry.index(name) for name in self.registry]
        n = len(registry)
        terms = {}
        for e, c in self.terms.items():
            ne = [0] * n
            for p, k in zip(pos, e):
                ne[p] = k
            terms[tuple(ne)] = c
        return Polynomial(terms, registry)

    def restrict(self, registry: Sequence[str]) -> "Polynomial":
        """Re-express over a smaller registry; dropped variables must not appear."""
        registry = tuple(registry)
        for i in self.used_variables():
            if self.registry[i] not in registry:
                raise RegistryError(f"variable {self.registry[i]} is used")
        pos = [self.registry.index(name) for name in registry]
        return Polynomial({tuple(e[p] for p in pos): c for e, c in self.terms.items()}, registry)

    def compose_linear(self, A: np.ndarray) -> "Polynomial":
        """Return ``p(A x)`` for a square matrix ``A`` acting on all variables."""
        A = np.asarray(A)
        n = self.nvars
        if A.shape != (n, n):
            raise ValueError(f"matrix shape {A.shape} does not match {n} variables")
        images = [Polynomial.linear(A[i], 0.0, self.registry) for i in range(n)]
        powers: dict[tuple[int, int], Polynomial] = {}

        def power(i, k):
            key = (i, k)
            if key not in powers:
                powers[key] = images[i] if k == 1 else power(i, k - 1) * images[i]
            return powers[key]

        result = Polynomial.zero(self.registry)
        for e, c in self.terms.items():
            term = Polynomial.constant(c, self.registry)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            result = result + term
        return result

    def homogenize(self, groups: Sequence[Sequence[int]], hom_names: Sequence[str],
                   degrees: Sequence[int] | None = None) -> "Polynomial":
        """Multi-homogenize with respect to variable groups.

        The homogenizing variables are prepended to the registry in the order
        given by ``hom_names``.  Variables not in any group are left alone.
        """
        if degrees is None:
            degrees = [max(self.degree_in(g), 0) for g in groups]
        registry = tuple(hom_names) + self.registry
        terms = {}
        for e, c in self.terms.items():
            h = tuple(d - sum(e[i] for i in g) for g, d in zip(groups, degrees))
            if any(k < 0 for k in h):
                raise ValueError("declared group degree is below the polynomial degree")
            terms[h + e] = c
        return Polynomial(terms, registry)

    def real_part(self) -> "Polynomial":
        return Polynomial({e: c.real for e, c in self.terms.items()}, self.registry)

    def normalized(self) -> "Polynomial":
        """Scale so the leading grlex coefficient is one."""
        if not self.terms:
            return self
        lead = self.sorted_terms()[0][1]
        return self * (1.0 / lead)

    # ---- display -----------------------------------------------------

    def to_string(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                name if k == 1 else f"{name}^{k}"
                for name, k in zip(self.registry, e) if k
            )
            coeff = _format_coeff(c)
            if not mono:
                parts.append(coeff)
            elif coeff == "1":
                parts.append(mono)
            elif coeff == "-1":
                parts.append("-" + mono)
            else:
                parts.append(f"{coeff}*{mono}")
        text = " + ".join(parts)
        return text.replace("+ -", "- ")

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"Polynomial({self.to_string()!r}, registry={self.registry})"


def _format_coeff(c: complex) -> str:
    if c.imag == 0:
        r = c.real
        if r == int(r) and abs(r) < 1e15:
            return str(int(r))
        return repr(r)
    if c.real == 0:
        return f"{c.imag!r}j"
    return f"({c.real!r} + {c.imag!r}j)"


class PolySystem:
    """Ordered polynomials over one registry, optionally with parameter names."""

    def __init__(self, polys: Sequence[Polynomial], registry: Sequence[str] | None = None,
                 params: Sequence[str] = ()):
        polys = list(polys)
        if registry is None:
            if not polys:
                raise ValueError("registry required for an empty system")
            registry = polys[0].registry
        self.registry = tuple(registry)
        for p in polys:
            if p.registry != self.registry:
                raise RegistryError(f"polynomial registry {p.registry} differs from {self.registry}")
        for name in params:
            if name not in self.registry:
                raise ValueError(f"parameter {name} not in registry")
        self.polys = tuple(polys)
        self.params = tuple(params)

    def __len__(self):
        return len(self.polys)

    def __iter__(self):
        return iter(self.polys)

    def __getitem__(self, i):
        return self.polys[i]

    def __eq__(self, other):
        if not isinstance(other, PolySystem):
            return NotImplemented
        return (self.registry, self.polys, self.params) == (other.registry, other.polys, other.params)

    def __repr__(self):
        body = ", ".join(p.to_string() for p in self.polys)
        return f"PolySystem([{body}], registry={self.registry}, params={self.params})"

    @property
    def unknowns(self) -> tuple[str, ...]:
        return tuple(v for v in self.registry if v not in self.params)

    @property
    def unknown_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.registry) if v not in self.params]

    def degrees(self) -> list[int]:
        return [p.total_degree() for p in self.polys]

    def is_square(self) -> bool:
        return len(self.polys) == len(self.unknowns)

    def bind(self, **values: complex) -> "PolySystem":
        """Fix parameter values; the result lives on the remaining registry."""
        polys = [p.subs(values) for p in self.polys]
        registry = tuple(v for v in self.registry if v not in values)
        params = tuple(p for p in self.params if p not in values)
        return PolySystem(polys, registry, params)

    def extend(self, registry: Sequence[str], params: Sequence[str] | None = None) -> "PolySystem":
        return PolySystem([p.extend(registry) for p in self.polys], registry,
                          self.params if params is None else params)

    def append(self, polys: Iterable[Polynomial]) -> "PolySystem":
        return PolySystem(list(self.polys) + list(polys), self.registry, self.params)

    def without_zeros(self) -> "PolySystem":
        return PolySystem([p for p in self.polys if not p.is_zero()], self.registry, self.params)

    def _full_point(self, point, param_values):
        point = np.asarray(point, dtype=complex)
        if not self.params:
            if point.shape != (len(self.registry),):
                raise ValueError(f"point dimension {point.shape} does not match {len(self.registry)}")
            return point
        unknowns = self.unknown_indices
        if point.shape == (len(self.registry),):
            return point
        if point.shape != (len(unknowns),):
            raise ValueError(f"point dimension {point.shape} does not match {len(unknowns)} unknowns")
        param_values = dict(param_values or {})
        missing = [p for p in self.params if p not in param_values]
        if missing:
            raise ValueError(f"unbound parameters: {missing}")
        full = np.zeros(len(self.registry), dtype=complex)
        full[unknowns] = point
        for name, v in param_values.items():
            full[self.registry.index(name)] = v
        return full

    def evaluate(self, point, param_values: Mapping[str, complex] | None = None) -> np.ndarray:
        full = self._full_point(point, param_values)
        return np.array([p.eval(full) for p in self.polys], dtype=complex)

    def jacobian_polys(self, indices: Sequence[int] | None = None) -> list[list[Polynomial]]:
        idx = self.unknown_indices if indices is None else list(indices)
        return [[p.diff(j) for j in idx] for p in self.polys]

    def to_strings(self) -> list[str]:
        return [p.to_string() for p in self.polys]


def jacobian(S: PolySystem, point, param_values: Mapping[str, complex] | None = None) -> np.ndarray:
    """Numeric Jacobian of ``S`` at ``point`` with respect to its unknowns."""
    full = S._full_point(point, param_values)
    cols = S.unknown_indices
    J = np.zeros((len(S), len(cols)), dtype=complex)
    for i, p in enumerate(S.polys):
        for k, j in enumerate(cols):
            J[i, k] = p.diff(j).eval(full)
    return J


def sum_of_squares_pullback(F: PolySystem, A) -> Polynomial:
    """Return ``sum_i F_i(A x)^2``.

    Raises ``ValueError`` if ``A`` is numerically singular.
    """
    A = np.asarray(A, dtype=float)
    n = len(F.registry)
    if A.shape != (n, n):
        raise ValueError(f"A must be {n}x{n}")
    scaled = A / np.maximum(np.abs(A).max(axis=1, keepdims=True), 1e-300)
    if abs(np.linalg.det(scaled)) <= 1e-10:
        raise ValueError("coordinate change A is singular")
    total = Polynomial.zero(F.registry)
    for f in F.polys:
        g = f.compose_linear(A)
        total = total + g * g
    return total


def variables(names: Sequence[str]) -> list[Polynomial]:
    """Convenience: one polynomial per variable name on the registry ``names``."""
    return [Polynomial.variable(n, names) for n in names]


def determinant(M: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Symbolic determinant by cofactor expansion with memoized minors."""
    k = len(M)
    if k == 0:
        raise ValueError("empty matrix")
    registry = M[0][0].registry
    cache: dict[tuple[int, tuple[int, ...]], Polynomial] = {}

    def minor(row: int, cols: tuple[int, ...]) -> Polynomial:
        if row == k - 1:
            return M[row][cols[0]]
        key = (row, cols)
        if key in cache:
            return cache[key]
        total = Polynomial.zero(registry)
        for pos, c in enumerate(cols):
            entry = M[row][c]
            if entry.is_zero():
                continue
            rest = cols[:pos] + cols[pos + 1:]
            sub = minor(row + 1, rest)
            if sub.is_zero():
                continue
            term = entry * sub
            total = total - term if pos % 2 else total + term
        cache[key] = total
        return total

    return minor(0, tuple(range(k)))


def all_minors(M: Sequence[Sequence[Polynomial]], size: int) -> list[Polynomial]:
    """All ``size`` x ``size`` minors of a polynomial matrix.

    Minors are produced for row subsets in lexicographic order and, within
    each, column subsets in lexicographic order.  Sub-determinants are
    shared between minors through one cache.
    """
    rows = len(M)
    cols = len(M[0]) if rows else 0
    if size < 1 or size > rows or size > cols:
        return []
    registry = M[0][0].registry
    cache: dict[tuple[tuple[int, ...], tuple[int, ...]], Polynomial] = {}

    def det(r: tuple[int, ...], c: tuple[int, ...]) -> Polynomial:
        if len(r) == 1:
            return M[r[0]][c[0]]
        key = (r, c)
        hit = cache.get(key)
        if hit is not None:
            return hit
        total = Polynomial.zero(registry)
        for pos, col in enumerate(c):
            entry = M[r[0]][col]
            if entry.is_zero():
                continue
            sub = det(r[1:], c[:pos] + c[pos + 1:])
            if sub.is_zero():
                continue
            term = entry * sub
            total = total - term if pos % 2 else total + term
        cache[key] = total
        return total

    out = []
    for r in itertools.combinations(range(rows), size):
        for c in itertools.combinations(range(cols), size):
            out.append(det(r, c))
    return out
