"""Critical points of an objective on a real variety via Lagrange multipliers.

Given equations ``f_1..f_c`` in ``x`` and an objective ``g``, the Lagrange
system is ``dg/dx_k + sum_j lam_j df_j/dx_k`` for every ``x_k`` together with
the equations themselves.  Its real solutions with ``g != 0`` that pass a
rank test are smooth real points of the variety.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import Tolerances, TrackerConfig
from .evaluator import CompiledSystem
from .poly import Polynomial, PolySystem
from .solve import (CONVERGED, SolveResult, deduplicate, gauss_newton_real, numerical_rank,
                    random_unit, solve_square, solve_then_limit)

log = logging.getLogger(__name__)

LAMBDA_PREFIX = "_lam"


class DegenerateObjectiveError(RuntimeError):
    """The Lagrange system has a positive-dimensional solution set."""


@dataclass
class LagrangeSystem:
    """Lagrange system of ``g`` on ``base``; unknowns are ``x_names + multipliers``."""

    base: PolySystem
    objective: Polynomial
    multipliers: tuple[str, ...]
    combined: PolySystem
    x_names: tuple[str, ...]

    @property
    def groups(self) -> list[list[str]]:
        return [list(self.x_names), list(self.multipliers)]


def build_lagrange(base: PolySystem, g: Polynomial, prefix: str = LAMBDA_PREFIX) -> LagrangeSystem:
    """Return ``{dg/dx_k + sum_j lam_j df_j/dx_k} + base`` in the unknowns ``(x, lam)``.

    ``base`` may carry parameters (such as a continuation parameter); they
    are kept as parameters of the combined system.  ``g`` may be written over
    the unknowns of ``base`` or over its full registry.
    """
    x_names = tuple(base.unknowns)
    if g.registry != base.registry:
        g = g.extend(base.registry) if set(g.registry) <= set(base.registry) else None
        if g is None:
            raise ValueError("objective uses variables outside the system")
    x_idx = [base.registry.index(v) for v in x_names]
    if all(g.diff(k).is_zero() for k in x_idx):
        raise ValueError("objective is constant in the unknowns: no critical structure")
    m = len(base)
    lams = tuple(f"{prefix}{j + 1}" for j in range(m))
    params = base.params
    reg = x_names + lams + tuple(params)
    gx = g.extend(reg) if g.registry != reg else g
    fs = [f.extend(reg) for f in base.polys]
    lam_polys = [Polynomial.variable(name, reg) for name in lams]
    eqs = []
    for v in x_names:
        k = reg.index(v)
        e = gx.diff(k)
        for lam, f in zip(lam_polys, fs):
            e = e + lam * f.diff(k)
        eqs.append(e)
    combined = PolySystem(eqs + fs, reg, params)
    return LagrangeSystem(PolySystem(fs, reg, params), gx, lams, combined, x_names)


@dataclass
class SmoothPoint:
    x: np.ndarray
    g_value: float
    jacobian_rank: int
    residual: float
    component_hint: str = ""

    def as_dict(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "g_value": float(self.g_value),
            "rank": int(self.jacobian_rank),
            "residual": float(self.residual),
            "component": self.component_hint,
        }


@dataclass
class SmoothPointReport:
    """Certified smooth real points and the run parameters that produced them."""

    points: list[SmoothPoint]
    seed: int
    perturbation_trace: dict
    method: str
    warnings: list[str] = field(default_factory=list)
    candidates: list[SmoothPoint] = field(default_factory=list)
    degenerate: bool = False
    solve: SolveResult | None = None


def certify_point(system: PolySystem, g: Polynomial, x, expected_rank: int,
                  tol: Tolerances) -> tuple[bool, SmoothPoint]:
    """Three-part smoothness certificate: backward error, Jacobian rank and ``g != 0``.

    ``system`` has no parameters and lives on the same registry as ``g``.
    """
    x = np.asarray(x, dtype=float)
    comp = CompiledSystem(system.polys, system.registry) if len(system) else None
    if comp is not None:
        F, J = comp.values_and_jacobian(x[None].astype(complex))
        # relative to the size of the terms, so high-degree deflation minors are judged fairly
        residual = float(comp.backward_error(x[None])[0]) if F.shape[1] else 0.0
        rank = numerical_rank(J[0], tol.rank_tol, floor=1.0) if J.size else 0
    else:
        residual, rank = 0.0, 0
    gval = g.eval(x.astype(complex))
    gcomp = CompiledSystem([g], g.registry, jacobian=False)
    gscale = float(gcomp.term_scale(x[None])[0, 0])
    ok = (residual <= tol.certificate_residual and rank == expected_rank
          and abs(gval) > tol.g_zero_tol * (1 + gscale))
    return ok, SmoothPoint(x, float(gval.real), rank, residual)


def _real_candidates(points: Sequence[np.ndarray], x_count: int, tol: Tolerances) -> list[np.ndarray]:
    out = []
    for p in points:
        xp = np.asarray(p)[:x_count]
        if np.all(np.isfinite(xp)) and np.max(np.abs(xp.imag), initial=0.0) <= tol.real_tol * (1 + np.linalg.norm(xp)):
            out.append(xp)
    return out


def _spread_singular(sol: SolveResult, system: PolySystem, x_count: int, tol: Tolerances) -> int:
    """Count finite rank-deficient endpoints whose x-parts are isolated from each other.

    Isolated singular roots attract several paths to one spot; a continuum
    of solutions spreads single paths over many distinct points.
    """
    comp = CompiledSystem(system.polys, system.registry)
    sing = []
    for p in sol.paths:
        if p.status != CONVERGED:
            continue
        _, J = comp.values_and_jacobian(p.endpoint[None])
        if numerical_rank(J[0], tol.rank_tol) < J.shape[2]:
            sing.append(p.endpoint[:x_count])
    spread = 0
    for k, a in enumerate(sing):
        others = [np.linalg.norm(a - b) for j, b in enumerate(sing) if j != k]
        if not others or min(others) > 1e-3 * (1 + np.linalg.norm(a)):
            spread += 1
    return spread


def _finish(cands: list[np.ndarray], base_x: PolySystem, g: Polynomial, expected_rank: int,
            tol: Tolerances, certify_system=None) -> tuple[list[SmoothPoint], list[SmoothPoint]]:
    """Refine real candidates, deduplicate and certify."""
    refined = [gauss_newton_real(base_x, c).real for c in cands] if len(base_x) else [c.real for c in cands]
    reps, _, _ = deduplicate([r.astype(complex) for r in refined], tol.dedup_tol)
    good, seen = [], []
    for r in reps:
        r = r.real
        system = base_x if certify_system is None else certify_system(r)
        ok, sp = certify_point(system, g, r, expected_rank, tol)
        seen.append(sp)
        if ok:
            good.append(sp)
    good.sort(key=lambda s: tuple(s.x))
    seen.sort(key=lambda s: tuple(s.x))
    return good, seen


def _x_objective(g: Polynomial, x_names: Sequence[str]) -> Polynomial:
    if g.registry == tuple(x_names):
        return g
    return g.restrict(x_names)


def _free_variables(base: PolySystem, g: Polynomial) -> list[str]:
    used = set()
    for p in list(base.polys) + [g]:
        used.update(p.registry[i] for i in p.used_variables())
    return [v for v in base.unknowns if v not in used]


def critical_points_unperturbed(base: PolySystem, g: Polynomial, seed: int = 0,
                                tol: Tolerances | None = None, cfg: TrackerConfig | None = None,
                                raise_on_degenerate: bool = True) -> SmoothPointReport:
    """Real critical points of ``g`` on ``V(base)`` with ``g != 0`` and full Jacobian rank.

    Raises :class:`DegenerateObjectiveError` when the Lagrange system has a
    positive-dimensional solution set (unless ``raise_on_degenerate`` is off,
    in which case the report is flagged).
    """
    tol = tol or Tolerances()
    cfg = cfg or TrackerConfig()
    free = _free_variables(base, g)
    if free:
        # every critical point extends along the free coordinates; only emptiness is reportable
        kept = tuple(v for v in base.unknowns if v not in free)
        if not kept:
            raise DegenerateObjectiveError("no variable appears in the equations or the objective")
        sub = critical_points_unperturbed(PolySystem([f.restrict(kept) for f in base.polys], kept),
                                          g.restrict(kept), seed, tol, cfg, raise_on_degenerate)
        if sub.degenerate or sub.points or sub.candidates:
            msg = f"critical set is unbounded along free variables {', '.join(free)}"
            if raise_on_degenerate:
                raise DegenerateObjectiveError(msg)
            sub.degenerate = True
            sub.warnings.append(msg)
        else:
            sub.warnings.append(f"variables {', '.join(free)} are unconstrained and no real critical point exists")
        sub.points, sub.candidates = [], []
        return sub
    L = build_lagrange(base, g)
    if any(e.is_constant() and not e.is_zero() for e in L.combined.polys):
        # inconsistent system: g has no critical points at all
        return SmoothPointReport([], seed, {"kind": "none"}, "unperturbed",
                                 warnings=["the Lagrange system is inconsistent"])
    sol = solve_square(L.combined, seed, cfg, groups=L.groups)
    report = SmoothPointReport([], seed, {"kind": "none"}, "unperturbed", solve=sol)
    if _spread_singular(sol, L.combined, len(L.x_names), tol) >= 2:
        msg = "Lagrange system has a positive-dimensional solution set; choose a different objective"
        if raise_on_degenerate:
            raise DegenerateObjectiveError(msg)
        report.degenerate = True
        report.warnings.append(msg)
        return report
    n = len(L.x_names)
    cands = _real_candidates(sol.solutions, n, tol)
    gx = _x_objective(g, L.x_names)
    base_x = PolySystem([f.restrict(L.x_names) for f in base.polys], L.x_names)
    report.points, report.candidates = _finish(cands, base_x, gx, len(base), tol)
    return report


def critical_points_perturbed(base: PolySystem, g: Polynomial, a: Sequence[float] | None = None,
                              seed: int = 0, tol: Tolerances | None = None,
                              cfg: TrackerConfig | None = None, xi: complex | None = None,
                              certify_with_deflation: bool = True) -> SmoothPointReport:
    """Limits of real critical points of ``g`` on ``V(base - t xi a)`` as ``t -> 0``.

    When the raw Jacobian of ``base`` is rank deficient at a limit point
    (a nonreduced base), the certificate is evaluated on the
    multiplicity-one deflation of ``base`` at that point instead.
    """
    from .polar import T_NAME, DeflationCapError, multiplicity_one_refine

    tol = tol or Tolerances()
    cfg = cfg or TrackerConfig()
    rng = np.random.default_rng(seed)
    c = len(base)
    if a is None:
        a = rng.normal(size=c)
    a = np.asarray(a, dtype=float)
    if a.shape != (c,) or not np.any(a):
        raise ValueError("perturbation direction must be a nonzero vector with one entry per equation")
    xi = random_unit(rng) if xi is None else complex(xi)
    x_names = tuple(base.unknowns)
    reg = x_names + (T_NAME,)
    t = Polynomial.variable(T_NAME, reg)
    pert = PolySystem([f.extend(reg) - t * (xi * aj) for f, aj in zip(base.polys, a)], reg, (T_NAME,))
    L = build_lagrange(pert, g.extend(reg) if g.registry != reg else g)
    lim, sol = solve_then_limit(L.combined, int(rng.integers(2**31)), cfg, groups=L.groups,
                                finite_groups=[0], t_name=T_NAME)
    report = SmoothPointReport([], seed, {"kind": "t*xi*a", "xi": [xi.real, xi.imag], "a": a.tolist()},
                               "perturbed", solve=sol)
    n = len(x_names)
    cands = _real_candidates(lim.points, n, tol)
    gx = _x_objective(g, x_names)
    base_x = PolySystem([f.restrict(x_names) for f in base.polys], x_names)
    expected = len(base)

    def certify_system(p):
        J = CompiledSystem(base_x.polys, x_names).values_and_jacobian(p[None].astype(complex))[1][0]
        if numerical_rank(J, tol.rank_tol) == expected or not certify_with_deflation:
            return base_x
        try:
            return multiplicity_one_refine(base_x, p, n - expected, tol.rank_tol)
        except (DeflationCapError, ValueError):
            return base_x

    report.points, report.candidates = _finish(cands, base_x, gx, expected, tol, certify_system)
    return report
