"""Reductions to bounded algebraic sets.

Strict inequalities ``q > 0`` become equations ``z^2 q - 1 = 0`` in fresh
variables, and an unbounded set is cut down to a sphere by appending one
fresh coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .poly import Polynomial, PolySystem

LIFT_PREFIX = "z"
BOUND_NAME = "_w"


@dataclass
class SemiAlgebraicInput:
    """Equations ``f_i = 0`` and strict inequalities ``q_j > 0`` over ``variables``."""

    variables: tuple[str, ...]
    equations: list[Polynomial] = field(default_factory=list)
    inequalities: list[Polynomial] = field(default_factory=list)

    def __post_init__(self):
        self.variables = tuple(self.variables)
        for p in list(self.equations) + list(self.inequalities):
            if p.registry != self.variables:
                raise ValueError("all polynomials must share the variable registry")

    def as_system(self) -> PolySystem:
        return PolySystem(list(self.equations), self.variables)

    def __eq__(self, other):
        if not isinstance(other, SemiAlgebraicInput):
            return NotImplemented
        return (self.variables == other.variables
                and list(self.equations) == list(other.equations)
                and list(self.inequalities) == list(other.inequalities))


def _fresh(base: str, taken: Sequence[str]) -> str:
    name = base
    while name in taken:
        name = "_" + name
    return name


def lift_inequalities(S: SemiAlgebraicInput) -> PolySystem:
    """Replace each ``q_j > 0`` by ``z_j^2 q_j - 1 = 0``; ``z`` is appended to the variables."""
    names = list(S.variables)
    zs = []
    for j in range(len(S.inequalities)):
        z = _fresh(f"{LIFT_PREFIX}{j + 1}", names)
        names.append(z)
        zs.append(z)
    reg = tuple(names)
    polys = [f.extend(reg) for f in S.equations]
    for z, q in zip(zs, S.inequalities):
        polys.append(Polynomial.variable(z, reg) ** 2 * q.extend(reg) - 1.0)
    return PolySystem(polys, reg)


def embed_bounded(F: PolySystem, q: Sequence[float] | None = None, delta: float = 16.0,
                  name: str = BOUND_NAME) -> PolySystem:
    """Append ``|x - q|^2 + w^2 - delta`` in a fresh last variable ``w``.

    The real zero set of the result lies on a sphere of radius ``sqrt(delta)``
    and projects onto the part of ``V(F)`` in the closed ball around ``q``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    names = tuple(F.unknowns)
    if F.params:
        raise ValueError("bind parameters before embedding")
    q = np.zeros(len(names)) if q is None else np.asarray(q, dtype=float)
    if q.shape != (len(names),):
        raise ValueError(f"center must have {len(names)} entries")
    w = _fresh(name, names)
    reg = names + (w,)
    ball = Polynomial.variable(w, reg) ** 2 - float(delta)
    for v, c in zip(names, q):
        ball = ball + (Polynomial.variable(v, reg) - float(c)) ** 2
    return PolySystem([f.extend(reg) for f in F.polys] + [ball], reg)
