"""Real dimension of a compact real algebraic set through smooth points of polar varieties.

For levels ``i = n, n-1, ..., 1`` the limit of the polar variety of the
perturbation ``f - t xi`` is sampled by a witness slice, its components are
grouped by deflation signature, and each group receives an objective ``g``
vanishing on its singular locus.  Real critical points of ``g`` with
``g != 0`` are smooth real points of a component of dimension ``i - 1``;
the first level where they exist gives the answer.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import Tolerances, TrackerConfig
from .critical import (DegenerateObjectiveError, SmoothPoint, SmoothPointReport, build_lagrange,
                       certify_point, critical_points_perturbed, critical_points_unperturbed)
from .poly import Polynomial, PolySystem, sum_of_squares_pullback
from .polar import (DeflationCapError, PolarFamily, SignatureGroup, WitnessData, deflation_sequence,
                    group_by_signature, perturbed_polar, random_slice)
from .evaluator import CompiledSystem
from .solve import (CONVERGED, DIVERGED, deduplicate, gauss_newton_real, random_unit, solve_square,
                    solve_then_limit)

log = logging.getLogger(__name__)

METHODS = ("sos", "system", "auto")


@dataclass
class LevelTrace:
    level: int
    g: list[str]
    size: int
    elapsed: float
    signatures: list[list[int]] = field(default_factory=list)
    limit_points: int = 0
    errors: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "g": self.g,
            "size": self.size,
            "elapsed": round(self.elapsed, 4),
            "signatures": self.signatures,
            "limit_points": self.limit_points,
            "errors": self.errors,
        }


@dataclass
class RealDimRun:
    """Outcome of :func:`real_dimension`; ``witnesses`` are in the input coordinates."""

    input: PolySystem
    A: np.ndarray
    xi: complex
    per_i_trace: list[LevelTrace]
    result: int
    seed: int
    method: str = "sos"
    witnesses: list[SmoothPoint] = field(default_factory=list)
    witness_sets: list[WitnessData] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "dimension": self.result,
            "seed": self.seed,
            "method": self.method,
            "xi": [self.xi.real, self.xi.imag],
            "A": self.A.tolist(),
            "trace": [t.as_dict() for t in self.per_i_trace],
            "witnesses": [w.as_dict() for w in self.witnesses],
            "warnings": list(self.warnings),
        }


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix from the QR factorisation of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    return Q * np.sign(np.diag(R))


def _real_system(G: PolySystem) -> PolySystem:
    """Real equations with the same real zeros as ``G``.

    Deflation minors that involve the ``t`` column carry the phase of ``xi``;
    such polynomials are rotated back, anything still complex is split.
    """
    out = []
    for p in G.polys:
        if p.is_zero():
            continue
        lead = p.sorted_terms()[0][1]
        q = p * (abs(lead) / lead)
        if q.is_real(1e-10):
            out.append(q.real_part())
            continue
        re = q.real_part()
        im = (q * -1j).real_part()
        out += [r for r in (re, im) if not r.is_zero()]
    return PolySystem(out, G.registry)


def _objective(group: SignatureGroup, x_names: Sequence[str], amb: Sequence[str],
               rng: np.random.Generator, warnings: list[str]) -> Polynomial:
    g = group.g
    if g.is_constant():
        # a point component: any nonvanishing objective isolates it
        coeffs = np.zeros(len(amb))
        for v in x_names:
            coeffs[list(amb).index(v)] = rng.normal()
        g = Polynomial.linear(coeffs, rng.normal(), amb)
        warnings.append(f"constant objective for signature {list(group.signature)}; using a random linear form")
    return g


def _is_real(p, tol: Tolerances) -> bool:
    p = np.asarray(p)
    return bool(np.all(np.isfinite(p)) and np.max(np.abs(p.imag), initial=0.0) <= tol.real_tol * (1 + np.linalg.norm(p)))


def _same_signature(fam: PolarFamily, p, signature, tol: Tolerances) -> bool:
    try:
        seq = deflation_sequence(fam, np.asarray(p, dtype=complex), tol.rank_tol, target_dim=fam.dim)
    except (DeflationCapError, ValueError):
        return False
    return seq.signature == tuple(signature)


def _certified(fam: PolarFamily, group: SignatureGroup, G_real: PolySystem, g: Polynomial | None,
               cands: Sequence[np.ndarray], tol: Tolerances) -> list[SmoothPoint]:
    """Refine real candidates on the group's witness system and certify them."""
    n_amb = len(fam.ambient)
    expected = n_amb - fam.dim
    refined = [gauss_newton_real(G_real, c).real for c in cands]
    reps, _, _ = deduplicate([r.astype(complex) for r in refined], tol.dedup_tol)
    out = []
    for r in reps:
        r = r.real
        obj = g if g is not None else Polynomial.constant(1.0, G_real.registry)
        ok, sp = certify_point(G_real, obj, r, expected, tol)
        if not ok or not _same_signature(fam, r, group.signature, tol):
            log.debug("level %d rejected %s: rank %d/%d residual %.3g g %.3g", fam.level, r,
                      sp.jacobian_rank, expected, sp.residual, sp.g_value)
            continue
        sp.component_hint = "signature " + ",".join(str(k) for k in group.signature)
        out.append(sp)
    return out


def _witness_points(fam: PolarFamily, rng: np.random.Generator, cfg: TrackerConfig):
    """Limit points of the polar family cut by ``dim`` random x-only hyperplanes."""
    reg = fam.system.registry
    sl = random_slice(fam.x_names, reg, fam.dim, rng)
    system = fam.system.append(sl)
    lim, sol = solve_then_limit(system, int(rng.integers(2**31)), cfg, groups=fam.groups,
                                t_name=fam.t_name)
    return lim, sol, sl


def _lagrange_limits(fam: PolarFamily, g: Polynomial, rng: np.random.Generator,
                     cfg: TrackerConfig) -> list[np.ndarray]:
    """Limits of the critical points of ``g`` on the perturbed polar variety, in ambient coordinates."""
    L = build_lagrange(fam.system, g.extend(fam.system.registry))
    groups = [list(fam.x_names)]
    if fam.mu_names:
        groups.append(list(fam.mu_names))
    finite = list(range(len(groups)))
    groups.append(list(L.multipliers))
    lim, _ = solve_then_limit(L.combined, int(rng.integers(2**31)), cfg, groups=groups,
                              finite_groups=finite, t_name=fam.t_name)
    for p, w in zip(lim.points, lim.winding):
        log.debug("limit %s winding %d", np.round(np.asarray(p)[: len(fam.x_names)], 5), w)
    return [np.asarray(p)[: len(fam.ambient)] for p in lim.points]


def run_level(fam: PolarFamily, rng: np.random.Generator, tol: Tolerances, cfg: TrackerConfig,
              warnings: list[str]) -> tuple[list[SmoothPoint], LevelTrace, WitnessData | None, float]:
    """Compute the set of certified smooth real points for one polar level."""
    t0 = time.perf_counter()
    trace = LevelTrace(fam.level, [], 0, 0.0)
    lim, sol, sl = _witness_points(fam, rng, cfg)
    trace.limit_points = len(lim.points)
    diverged = sum(p.status == DIVERGED for p in lim.paths) / max(len(lim.paths), 1)
    amb = fam.ambient
    pts = [np.asarray(p) for p in lim.points]
    groups = group_by_signature(pts, fam, fam.dim, tol.rank_tol)
    found: list[SmoothPoint] = []
    wd = None
    for grp in groups:
        if grp.error is not None:
            trace.errors.append(grp.error)
            continue
        trace.signatures.append(list(grp.signature))
        G_real = _real_system(grp.system)
        if wd is None:
            wd = WitnessData(grp.system, sl, grp.points, fam.dim, list(grp.signature))
        if fam.dim == 0:
            # the limit set is finite: its real points are the samples
            cands = [p.real for p in grp.points if _is_real(p, tol)]
            trace.g.append("1")
            found += _certified(fam, grp, G_real, None, cands, tol)
            continue
        g = _objective(grp, fam.x_names, amb, rng, warnings)
        trace.g.append(g.to_string())
        if not g.is_real(1e-10):
            g = g.real_part()
        lag = _lagrange_limits(fam, g, rng, cfg)
        cands = [p.real for p in lag if _is_real(p, tol)]
        log.debug("level %d group %s: %d Lagrange limits, %d real", fam.level, grp.signature, len(lag), len(cands))
        found += _certified(fam, grp, G_real, g, cands, tol)
    reps, _, labels = deduplicate([s.x.astype(complex) for s in found], tol.dedup_tol)
    unique = [found[labels.index(k)] for k in range(len(reps))]
    trace.size = len(unique)
    trace.elapsed = time.perf_counter() - t0
    return unique, trace, wd, diverged


def has_excess_component(F: PolySystem, seed: int = 0, cfg: TrackerConfig | None = None,
                         residual_tol: float = 1e-8) -> bool:
    """True when ``V(F)`` has a complex component of dimension above ``n - len(F)``.

    Such a component meets a generic affine space of codimension
    ``n - len(F) + 1``; the intersection is computed from ``len(F) - 1``
    random combinations of ``F`` and checked against all of ``F``.
    """
    names = tuple(F.unknowns)
    n, c = len(names), len(F)
    if c > n:
        raise ValueError("needs at most as many equations as variables")
    rng = np.random.default_rng(seed)
    k = n - c + 1
    R = rng.normal(size=(c - 1, c)) + 1j * rng.normal(size=(c - 1, c))
    combos = [sum((complex(r) * f for r, f in zip(row, F.polys)), Polynomial.zero(names)) for row in R]
    lines = [Polynomial.linear(rng.normal(size=n) + 1j * rng.normal(size=n), complex(rng.normal()), names)
             for _ in range(k)]
    sol = solve_square(PolySystem(combos + lines, names), int(rng.integers(2**31)), cfg)
    if not sol.solutions:
        return False
    comp = CompiledSystem(F.polys, names, jacobian=False)
    err = comp.backward_error(np.array(sol.solutions))
    return bool(np.any(err <= residual_tol))


def choose_method(F: PolySystem, seed: int = 0, cfg: TrackerConfig | None = None) -> str:
    """``system`` when ``F`` cuts out a set of the expected dimension, else ``sos``."""
    if len(F) > len(F.unknowns) or has_excess_component(F, seed, cfg):
        return "sos"
    return "system"


def _levels(n: int, c: int, method: str) -> range:
    if method == "sos":
        return range(n, 0, -1)
    return range(n - c + 1, 0, -1)


def real_dimension(F: PolySystem, seed: int = 0, method: str = "sos", tol: Tolerances | None = None,
                   cfg: TrackerConfig | None = None, A: np.ndarray | None = None,
                   xi: complex | None = None) -> RealDimRun:
    """Real dimension of ``V(F)`` in real space, assumed compact.

    ``method="sos"`` works with ``f = sum f_i(A x)^2``; ``method="system"``
    perturbs the equations ``f_i(A x)`` themselves, which keeps degrees low
    but is only valid when every complex component of ``V(F)`` has dimension
    ``n - len(F)``.  ``method="auto"`` tests for that and picks one.
    Returns ``-1`` for an empty set.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    tol = tol or Tolerances()
    cfg = cfg or TrackerConfig()
    if F.params:
        raise ValueError("bind parameters first")
    names = tuple(F.unknowns)
    F = PolySystem([f.restrict(names) if f.registry != names else f for f in F.polys], names)
    n = len(names)
    F = F.without_zeros()
    rng = np.random.default_rng(seed)
    A = random_orthogonal(n, rng) if A is None else np.asarray(A, dtype=float)
    xi = random_unit(rng) if xi is None else complex(xi)
    run = RealDimRun(F, A, xi, [], -1, seed, method)
    if len(F) == 0:
        # every point is real and smooth
        run.result = n
        run.warnings.append("no equations: the set is all of real space")
        return run
    if any(f.is_constant() for f in F.polys):
        return run
    if method == "auto":
        method = run.method = choose_method(F, seed, cfg)
    if method == "sos":
        f = sum_of_squares_pullback(F, A)
        base = PolySystem([f], names)
    else:
        if len(F) > n:
            raise ValueError("system mode needs at most as many equations as variables")
        base = PolySystem([p.compose_linear(A) for p in F.polys], names)
    a = rng.normal(size=len(base))
    for i in _levels(n, len(base), method):
        fam = perturbed_polar(base, i, xi, a, rng)
        found, trace, wd, diverged = run_level(fam, rng, tol, cfg, run.warnings)
        run.per_i_trace.append(trace)
        if wd is not None:
            run.witness_sets.append(wd)
        if trace.errors:
            run.warnings += [f"level {i}: {e}" for e in trace.errors]
        if i == _levels(n, len(base), method)[0] and diverged > 0.5 and trace.limit_points == 0:
            run.warnings.append("most witness paths diverged at the top level; the real set may not be compact")
        if found:
            run.result = i - 1
            for sp in found:
                x = A @ sp.x[:n]
                run.witnesses.append(SmoothPoint(x, sp.g_value, sp.jacobian_rank, sp.residual,
                                                 sp.component_hint))
            return run
    return run


def smooth_sample(F: PolySystem, g: Polynomial | None = None, seed: int = 0,
                  tol: Tolerances | None = None, cfg: TrackerConfig | None = None,
                  perturbed: bool = False, xi_crosscheck: bool = False) -> SmoothPointReport:
    """Smooth real points of ``V(F)``, one or more per reachable compact component.

    With ``g`` given, its real critical points on ``V(F)`` off ``V(g)`` are
    returned (perturbed variant on request).  Without ``g``, an objective is
    built from a deflation minor at the top dimension.
    """
    tol = tol or Tolerances()
    cfg = cfg or TrackerConfig()
    F = F.without_zeros()
    if any(f.is_constant() for f in F.polys):
        return SmoothPointReport([], seed, {"kind": "none"}, "unperturbed")
    if g is not None:
        if perturbed:
            rep = critical_points_perturbed(F, g, seed=seed, tol=tol, cfg=cfg)
        else:
            rep = critical_points_unperturbed(F, g, seed=seed, tol=tol, cfg=cfg)
        if xi_crosscheck:
            other = critical_points_perturbed(F, g, seed=seed + 1, tol=tol, cfg=cfg)
            if not _same_sets([p.x for p in rep.points], [p.x for p in other.points], 1e-6):
                rep.warnings.append("points differ under a second random perturbation")
        return rep
    names = tuple(F.unknowns)
    n, c = len(names), len(F)
    rng = np.random.default_rng(seed)
    xi = random_unit(rng)
    warnings: list[str] = []
    if c <= n:
        base, level = F, n - c + 1
    else:
        base, level = PolySystem([sum((f * f for f in F.polys), Polynomial.zero(names))], names), n
    a = rng.normal(size=len(base))
    fam = perturbed_polar(base, level, xi, a, rng)
    found, trace, _, _ = run_level(fam, rng, tol, cfg, warnings)
    pts = [SmoothPoint(p.x[:n], p.g_value, p.jacobian_rank, p.residual, p.component_hint) for p in found]
    pts.sort(key=lambda s: tuple(s.x))
    trace_d = {"kind": "t*xi*a", "xi": [xi.real, xi.imag], "a": list(map(float, a)), "g": trace.g}
    return SmoothPointReport(pts, seed, trace_d, "perturbed", warnings=warnings)


def _same_sets(P: Sequence[np.ndarray], Q: Sequence[np.ndarray], tol: float) -> bool:
    if len(P) != len(Q):
        return False
    return all(min((np.linalg.norm(p - q) for q in Q), default=np.inf) <= tol * (1 + np.linalg.norm(p))
               for p in P)
