"""Polar systems, isosingular deflation and minor-determinant objectives.

The polar system of level ``i`` cuts out the points of a (perturbed)
variety where the projection onto the first ``i`` coordinates is not a
submersion.  Limit points of such systems are turned into witness systems
by isosingular deflation, and a nonvanishing maximal minor of the deflated
Jacobian supplies an objective ``g`` that vanishes on the singular locus.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evaluator import CompiledSystem
from .poly import Polynomial, PolySystem, all_minors, determinant
from .solve import ParameterHomotopy, numerical_rank

log = logging.getLogger(__name__)

T_NAME = "_t"
S_NAME = "_s"
MU_PREFIX = "_mu"
MAX_DEFLATIONS = 10
# deflated systems beyond this size are treated as a failed deflation
MAX_SYSTEM_SIZE = 400


class DeflationCapError(RuntimeError):
    """Deflation did not stabilise within the step budget."""


# ---------------------------------------------------------------------------
# polar systems


def polar_system(f: Polynomial, i: int, with_t: bool = True, xi: complex = 1.0,
                 t_name: str = T_NAME) -> PolySystem:
    """``{f - t xi, df/dx_{i+1}, ..., df/dx_n}`` over the registry of ``f``.

    With ``with_t`` the continuation parameter is appended to the registry
    and declared a parameter; otherwise the first entry is ``f`` itself.
    """
    n = f.nvars
    if not 1 <= i <= n:
        raise ValueError(f"level i={i} outside 1..{n}")
    partials = [f.diff(k) for k in range(i, n)]
    if not with_t:
        return PolySystem([f] + partials, f.registry)
    reg = f.registry + (t_name,)
    t = Polynomial.variable(t_name, reg)
    first = f.extend(reg) - t * complex(xi)
    return PolySystem([first] + [p.extend(reg) for p in partials], reg, params=(t_name,))


@dataclass
class PolarFamily:
    """Perturbed polar system of one level, ready for continuation in ``t``.

    ``system`` lives on ``x_names + mu_names + (t_name,)``.  The ambient space
    of the level is ``x_names + mu_names``; multipliers ``mu`` only appear when
    the polar condition is a rank drop of a wide matrix.
    """

    system: PolySystem
    level: int
    x_names: tuple[str, ...]
    mu_names: tuple[str, ...]
    xi: complex
    a: np.ndarray
    t_name: str = T_NAME

    @property
    def ambient(self) -> tuple[str, ...]:
        return self.x_names + self.mu_names

    @property
    def dim(self) -> int:
        """Expected dimension of the polar variety."""
        return self.level - 1

    @property
    def groups(self) -> list[list[str]] | None:
        if self.mu_names:
            return [list(self.x_names), list(self.mu_names)]
        return None


def perturbed_polar(F: PolySystem, i: int, xi: complex, a: Sequence[float] | None = None,
                    rng: np.random.Generator | None = None, t_name: str = T_NAME) -> PolarFamily:
    """Polar system of level ``i`` for the perturbation ``F - t xi a``.

    For one equation this is :func:`polar_system`.  For ``c`` equations the
    polar condition ``rank dF/dx_{i+1..n} < c`` is written as a determinant when
    the matrix is square, and with multipliers ``mu`` (normalised by a random
    real linear equation) when it is wide.  Levels with fewer than ``c``
    trailing directions return the perturbed system alone.
    """
    x_names = F.unknowns
    n = len(x_names)
    c = len(F)
    if not 1 <= i <= n:
        raise ValueError(f"level i={i} outside 1..{n}")
    a = np.ones(c) if a is None else np.asarray(a, dtype=float)
    if a.shape != (c,) or not np.any(a):
        raise ValueError("perturbation direction must be nonzero with one entry per equation")
    k = n - i
    use_mu = c > 1 and k > c
    mu_names = tuple(f"{MU_PREFIX}{j + 1}" for j in range(c)) if use_mu else ()
    reg = tuple(x_names) + mu_names + (t_name,)
    t = Polynomial.variable(t_name, reg)
    base = [f.extend(reg) for f in F.polys]
    eqs = [f - t * (complex(xi) * float(aj)) for f, aj in zip(base, a)]
    trailing = list(range(i, n))
    if k >= c:
        if c == 1:
            eqs += [base[0].diff(j) for j in trailing]
        elif k == c:
            eqs.append(determinant([[f.diff(j) for j in trailing] for f in base]))
        else:
            mus = [Polynomial.variable(m, reg) for m in mu_names]
            for j in trailing:
                total = Polynomial.zero(reg)
                for mu, f in zip(mus, base):
                    total = total + mu * f.diff(j)
                eqs.append(total)
            rng = rng if rng is not None else np.random.default_rng(0)
            r = rng.normal(size=c)
            eqs.append(sum((mu * float(rj) for mu, rj in zip(mus, r)), Polynomial.zero(reg)) - 1.0)
    system = PolySystem(eqs, reg, params=(t_name,))
    return PolarFamily(system, i, tuple(x_names), mu_names, complex(xi), a, t_name)


def random_slice(names: Sequence[str], registry: Sequence[str], count: int,
                 rng: np.random.Generator) -> list[Polynomial]:
    """``count`` random complex affine linear forms in the variables ``names``."""
    registry = tuple(registry)
    out = []
    for _ in range(count):
        coeffs = np.zeros(len(registry), dtype=complex)
        for v in names:
            coeffs[registry.index(v)] = rng.normal() + 1j * rng.normal()
        out.append(Polynomial.linear(coeffs, rng.normal() + 1j * rng.normal(), registry))
    return out


# ---------------------------------------------------------------------------
# deflation


def _normalise(p: Polynomial) -> Polynomial:
    q = p.normalized()
    if q.is_real(1e-12):
        q = q.real_part()
    return q


def _rephase(p: Polynomial) -> Polynomial:
    """Rotate by the phase of the leading coefficient; real up to round-off becomes real."""
    if p.is_zero():
        return p
    lead = p.sorted_terms()[0][1]
    q = p * (abs(lead) / lead)
    if q.is_real(1e-12):
        q = q.real_part()
    return q


def _key(p: Polynomial, digits: int = 9):
    return tuple(sorted((e, round(c.real, digits), round(c.imag, digits)) for e, c in p.terms.items()))


def _unique_append(existing: Sequence[Polynomial], new: Sequence[Polynomial]) -> list[Polynomial]:
    """Append nonzero polynomials from ``new`` that are not scalar multiples of earlier ones."""
    seen = {_key(_normalise(p)) for p in existing if not p.is_zero()}
    out = list(existing)
    for p in new:
        if p.is_zero():
            continue
        # drop coefficients that are pure round-off
        scale = max(abs(c) for c in p.terms.values())
        p = Polynomial({e: c for e, c in p.terms.items() if abs(c) > 1e-13 * scale}, p.registry)
        key = _key(_normalise(p))
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


def system_jacobian(F: PolySystem, q) -> np.ndarray:
    """Jacobian of ``F`` with respect to every registry variable."""
    comp = CompiledSystem(F.polys, F.registry)
    _, J = comp.values_and_jacobian(np.asarray(q, dtype=complex)[None])
    return J[0]


def system_rank(F: PolySystem, q, rank_tol: float = 1e-8) -> int:
    """Numerical rank of the Jacobian at ``q`` after scaling each row by its term size.

    A row is divided by the norm of ``max(sum |c| |x^a|, sum |c|)`` over its
    entries, so entries that are small through cancellation count as zero.
    """
    if len(F) == 0:
        return 0
    comp = CompiledSystem(F.polys, F.registry)
    X = np.asarray(q, dtype=complex)[None]
    J = comp.values_and_jacobian(X)[1][0]
    scale = np.linalg.norm(comp.jacobian_scale(X)[0], axis=1)
    keep = scale > 0
    if not np.any(keep):
        return 0
    return numerical_rank(J[keep] / scale[keep, None], rank_tol, floor=1.0)


def system_residual(F: PolySystem, q) -> float:
    if len(F) == 0:
        return 0.0
    comp = CompiledSystem(F.polys, F.registry, jacobian=False)
    return float(np.max(np.abs(comp.values(np.asarray(q, dtype=complex)[None])[0])))


def deflation_step(F: PolySystem, q, rank_tol: float = 1e-8,
                   residual_tol: float = 1e-8) -> PolySystem:
    """Append all ``(r+1) x (r+1)`` Jacobian minors, ``r`` the numerical rank at ``q``.

    Minors are taken with respect to every variable of the registry.  When
    no minor of that size exists the input is returned unchanged.
    """
    res = system_residual(F, q)
    if res > residual_tol:
        raise ValueError(f"anchor is not a root: residual {res:.3g}")
    r = system_rank(F, q, rank_tol)
    return _deflate_with_rank(F, r)


def _deflate_with_rank(F: PolySystem, r: int) -> PolySystem:
    n = len(F.registry)
    if r + 1 > min(len(F), n):
        return F
    count = math.comb(len(F), r + 1) * math.comb(n, r + 1)
    if count > 50 * MAX_SYSTEM_SIZE:
        raise DeflationCapError(f"deflation would append {count} minors")
    JF = [[p.diff(j) for j in range(n)] for p in F.polys]
    minors = all_minors(JF, r + 1)
    out = _unique_append(F.polys, minors)
    if len(out) > MAX_SYSTEM_SIZE:
        raise DeflationCapError(f"deflated system has {len(out)} polynomials")
    return PolySystem(out, F.registry, F.params)


@dataclass
class DeflationSequence:
    """Deflation of ``{H(x, t), s}`` anchored at ``(p, 0, 0)``.

    ``witness`` is ``F_j(x, 0, 0)`` at the stabilised step and ``refined`` the
    multiplicity-one system derived from it; ``signature`` concatenates the
    ranks of both sequences.
    """

    systems: list[PolySystem]
    anchor: np.ndarray
    ranks: list[int]
    witness: PolySystem
    refined: PolySystem | None = None
    refine_ranks: list[int] = field(default_factory=list)

    @property
    def signature(self) -> tuple[int, ...]:
        return tuple(self.ranks) + (-1,) + tuple(self.refine_ranks)


def _as_polar(H) -> tuple[PolySystem, str]:
    if isinstance(H, PolarFamily):
        return H.system, H.t_name
    if isinstance(H, ParameterHomotopy):
        return H.system, H.t_name
    if isinstance(H, PolySystem):
        if len(H.params) != 1:
            raise ValueError("expected exactly one continuation parameter")
        return H, H.params[0]
    raise TypeError(f"cannot read a parameterised system from {type(H).__name__}")


def deflation_sequence(H, p, rank_tol: float = 1e-6, max_steps: int = MAX_DEFLATIONS,
                       target_dim: int | None = None, s_name: str = S_NAME) -> DeflationSequence:
    """Iterate the deflation operator on ``{H(x, t), s}`` at ``q = (p, 0, 0)``.

    Stops once the rank at ``q`` (and therefore the null dimension) repeats.
    With ``target_dim`` given, multiplicity-one refinement follows.
    """
    system, t_name = _as_polar(H)
    unknowns = system.unknowns
    reg = tuple(unknowns) + (t_name, s_name)
    F0 = PolySystem([f.extend(reg) for f in system.polys] + [Polynomial.variable(s_name, reg)], reg)
    q = np.concatenate([np.asarray(p, dtype=complex), [0.0, 0.0]])
    systems = [F0]
    ranks = [system_rank(F0, q, rank_tol)]
    for _ in range(max_steps):
        Fn = _deflate_with_rank(systems[-1], ranks[-1])
        rn = system_rank(Fn, q, rank_tol)
        systems.append(Fn)
        ranks.append(rn)
        if rn == ranks[-2]:
            break
    else:
        raise DeflationCapError(f"deflation did not stabilise in {max_steps} steps (ranks {ranks})")
    witness = PolySystem(
        _unique_append([], [f.subs({t_name: 0.0, s_name: 0.0}) for f in systems[-1].polys]),
        tuple(unknowns),
    )
    seq = DeflationSequence(systems, q, ranks, witness)
    if target_dim is not None:
        seq.refined, seq.refine_ranks = _refine(witness, p, target_dim, rank_tol, max_steps)
    return seq


def witness_system_for_limit(H, p, rank_tol: float = 1e-6, max_steps: int = MAX_DEFLATIONS) -> PolySystem:
    """Witness system ``F_j(x, 0, 0)`` for the limit component through ``p``."""
    return deflation_sequence(H, p, rank_tol, max_steps).witness


def _refine(F: PolySystem, p, target_dim: int, rank_tol: float, max_steps: int):
    p = np.asarray(p, dtype=complex)
    n = len(F.registry)
    G = F
    ranks = [system_rank(G, p, rank_tol)]
    for _ in range(max_steps + 1):
        if n - ranks[-1] == target_dim:
            return G, ranks
        if len(ranks) > max_steps:
            break
        G = _deflate_with_rank(G, ranks[-1])
        ranks.append(system_rank(G, p, rank_tol))
        if n - ranks[-1] < target_dim:
            raise ValueError(f"null dimension fell below the target {target_dim} (ranks {ranks})")
    raise DeflationCapError(f"multiplicity-one refinement did not reach null dimension {target_dim} (ranks {ranks})")


def multiplicity_one_refine(F: PolySystem, p, target_dim: int, rank_tol: float = 1e-8,
                            max_steps: int = MAX_DEFLATIONS) -> PolySystem:
    """Deflate ``F`` at ``p`` until the Jacobian null space has dimension ``target_dim``."""
    return _refine(F, p, target_dim, rank_tol, max_steps)[0]


# ---------------------------------------------------------------------------
# objective from a maximal minor


def pivot_rows_cols(J: np.ndarray, k: int) -> tuple[list[int], list[int]]:
    """Greedy complete-pivoting elimination choosing ``k`` rows and columns."""
    A = np.array(J, dtype=complex)
    rows, cols = [], []
    for _ in range(k):
        mag = np.abs(A)
        if rows:
            mag[rows, :] = -1
        if cols:
            mag[:, cols] = -1
        r, c = np.unravel_index(int(np.argmax(mag)), mag.shape)
        if mag[r, c] <= 0:
            break
        rows.append(int(r))
        cols.append(int(c))
        piv = A[r, c]
        A = A - np.outer(A[:, c] / piv, A[r, :])
    return rows, cols


def minor_g(F: PolySystem, z, target_rank: int, min_abs: float = 1e-10) -> Polynomial:
    """Determinant of a ``target_rank`` square submatrix of the Jacobian nonsingular at ``z``."""
    J = system_jacobian(F, z)
    rows, cols = pivot_rows_cols(J, target_rank)
    if len(rows) < target_rank:
        raise ValueError(f"Jacobian at the point has rank below {target_rank}")
    M = [[F.polys[r].diff(c) for c in cols] for r in rows]
    g = determinant(M)
    val = abs(g.eval(np.asarray(z, dtype=complex)))
    if val <= min_abs:
        raise ValueError(f"selected minor is numerically zero at the point ({val:.3g})")
    return _rephase(g)


@dataclass
class SignatureGroup:
    """Limit points sharing one deflation signature, with their objective."""

    signature: tuple[int, ...]
    points: list[np.ndarray]
    system: PolySystem
    g: Polynomial | None
    representative: np.ndarray
    error: str | None = None


def group_by_signature(points: Sequence, H, target_dim: int | None = None,
                       rank_tol: float = 1e-6, max_steps: int = MAX_DEFLATIONS,
                       g_tol: float = 1e-8) -> list[SignatureGroup]:
    """Group limit points by deflation signature and attach one ``g`` per group.

    Equal signatures give identical deflated systems, so one representative
    defines the group's objective.  Members at which that objective vanishes
    are split off and receive their own minor.
    """
    if not len(points):
        return []
    system, _ = _as_polar(H)
    if target_dim is None:
        target_dim = H.dim if isinstance(H, PolarFamily) else 0
    buckets: dict[tuple[int, ...], list] = {}
    errors: list[SignatureGroup] = []
    for p in points:
        p = np.asarray(p, dtype=complex)
        try:
            seq = deflation_sequence(H, p, rank_tol, max_steps, target_dim=target_dim)
        except (DeflationCapError, ValueError) as exc:
            errors.append(SignatureGroup((), [p], PolySystem([], system.unknowns), None, p, error=str(exc)))
            continue
        buckets.setdefault(seq.signature, []).append((p, seq))
    groups: list[SignatureGroup] = []
    n_amb = len(system.unknowns)
    rank = n_amb - target_dim
    for sig, members in buckets.items():
        G = members[0][1].refined
        pending = [p for p, _ in members]
        while pending:
            rep = pending[0]
            try:
                g = minor_g(G, rep, rank)
            except ValueError as exc:
                groups.append(SignatureGroup(sig, [rep], G, None, rep, error=str(exc)))
                pending = pending[1:]
                continue
            scale = max(1.0, g.coeff_norm())
            keep = [p for p in pending if abs(g.eval(p)) > g_tol * scale]
            if not any(np.array_equal(rep, p) for p in keep):
                keep = [rep] + keep
            groups.append(SignatureGroup(sig, keep, G, g, rep))
            pending = [p for p in pending if not any(p is k for k in keep)]
    return groups + errors


@dataclass
class WitnessData:
    """Witness set of a polar level: system, slice and slice points."""

    witness_system: PolySystem
    slice: list[Polynomial]
    points: list[np.ndarray]
    dim: int
    deflation_signature: list[int] = field(default_factory=list)
