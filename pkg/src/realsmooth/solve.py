"""Homotopy continuation in multi-projective coordinates.

Every homotopy is tracked on a product of projective spaces: each variable
group receives its own homogenising coordinate and a random affine patch.
Paths that run off to infinity in affine space therefore stay bounded, and
divergence is read off the homogenising coordinates at the end.

All paths of a homotopy are advanced together as one vectorised batch.
Each path keeps its own ``t``, step size and status, so the batch behaves
exactly like independent trackers running side by side.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import TrackerConfig
from .evaluator import CompiledSystem
from .poly import Polynomial, PolySystem

CONVERGED = "converged"
DIVERGED = "diverged"
PATH_FAILURE = "path_failure"

log = logging.getLogger(__name__)

_ACTIVE, _DONE, _FAILED, _DIVERGED = 0, 1, 2, 3


def random_unit(rng: np.random.Generator) -> complex:
    """A complex number drawn uniformly from the unit circle."""
    return complex(np.exp(2j * np.pi * rng.random()))


def numerical_rank(M, tol_rel: float = 1e-8, floor: float = 0.0) -> int:
    """Number of singular values above ``tol_rel * max(sigma_1, floor)``.

    ``floor`` gives an absolute scale below which a matrix counts as zero.
    """
    if not 0 < tol_rel < 1:
        raise ValueError("tol_rel must lie in (0, 1)")
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0 or not np.isfinite(s[0]):
        return 0
    return int(np.sum(s > tol_rel * max(s[0], floor)))


def null_dimension(M, tol_rel: float = 1e-8) -> int:
    M = np.atleast_2d(np.asarray(M))
    return M.shape[1] - numerical_rank(M, tol_rel)


def _batch_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``A[k] x = b[k]`` for a stack; singular members fall back to lstsq."""
    try:
        x = np.linalg.solve(A, b[..., None])[..., 0]
        if np.all(np.isfinite(x)):
            return x
    except np.linalg.LinAlgError:
        pass
    out = np.empty(b.shape, dtype=complex)
    for k in range(A.shape[0]):
        try:
            out[k] = np.linalg.solve(A[k], b[k])
            if not np.all(np.isfinite(out[k])):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            out[k] = np.linalg.lstsq(A[k], b[k], rcond=None)[0]
    return out


def _rownorm(X: np.ndarray) -> np.ndarray:
    return np.linalg.norm(X, axis=-1)


# ---------------------------------------------------------------------------
# projective frame


class ProjectiveFrame:
    """Coordinates ``v = (h_1..h_G, x_1..x_N)`` with one affine patch per group.

    Args:
        unknowns: names of the affine unknowns, in order.
        groups: partition of ``unknowns`` into variable groups; one group by default.
        rng: generator for the patch vectors.
    """

    def __init__(self, unknowns: Sequence[str], groups: Sequence[Sequence[str]] | None,
                 rng: np.random.Generator):
        self.unknowns = tuple(unknowns)
        if groups is None:
            groups = [list(self.unknowns)]
        groups = [list(g) for g in groups if len(g)]
        flat = [v for g in groups for v in g]
        if sorted(flat) != sorted(self.unknowns) or len(flat) != len(set(flat)):
            raise ValueError("variable groups must partition the unknowns")
        self.groups = groups
        self.G = len(groups)
        self.N = len(self.unknowns)
        self.dim = self.G + self.N
        self.hom_names = tuple(f"_h{g}" for g in range(self.G))
        self.group_index = [[self.unknowns.index(v) for v in g] for g in groups]
        # positions inside v of (h_g, x_g)
        self.positions = [np.array([g] + [self.G + k for k in idx]) for g, idx in enumerate(self.group_index)]
        self.patches = [rng.normal(size=len(p)) + 1j * rng.normal(size=len(p)) for p in self.positions]
        self.patches = [a / np.linalg.norm(a) for a in self.patches]

    def to_projective(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        V = np.zeros((X.shape[0], self.dim), dtype=complex)
        V[:, self.G:] = X
        V[:, :self.G] = 1.0
        for g, (pos, a) in enumerate(zip(self.positions, self.patches)):
            scale = V[:, pos] @ a
            V[:, pos] /= scale[:, None]
        return V

    def to_affine(self, V: np.ndarray) -> np.ndarray:
        V = np.atleast_2d(V)
        X = np.empty((V.shape[0], self.N), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            for g, idx in enumerate(self.group_index):
                X[:, idx] = V[:, [self.G + k for k in idx]] / V[:, [g]]
        return X

    def group_norms(self, V: np.ndarray) -> np.ndarray:
        """Affine norm of each group, ``(B, G)``; ``inf`` at infinity."""
        V = np.atleast_2d(V)
        out = np.empty((V.shape[0], self.G))
        with np.errstate(divide="ignore", invalid="ignore"):
            for g, idx in enumerate(self.group_index):
                num = _rownorm(V[:, [self.G + k for k in idx]])
                den = np.abs(V[:, g])
                out[:, g] = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)
        return out

    def h_ratio(self, V: np.ndarray) -> np.ndarray:
        """``|h_g| / |(h_g, x_g)|`` per group, ``(B, G)``; zero exactly at infinity."""
        V = np.atleast_2d(V)
        return np.stack([np.abs(V[:, g]) / np.maximum(_rownorm(V[:, pos]), 1e-300)
                         for g, pos in enumerate(self.positions)], axis=1)

    def patch_values(self, V: np.ndarray) -> np.ndarray:
        return np.stack([V[:, pos] @ a - 1.0 for pos, a in zip(self.positions, self.patches)], axis=1)

    def patch_rows(self) -> np.ndarray:
        rows = np.zeros((self.G, self.dim), dtype=complex)
        for g, (pos, a) in enumerate(zip(self.positions, self.patches)):
            rows[g, pos] = a
        return rows

    def homogenize(self, p: Polynomial, registry_unknown_idx: Sequence[int]) -> Polynomial:
        """Multi-homogenise ``p`` whose registry contains the unknowns at the given indices."""
        groups = [[registry_unknown_idx[k] for k in idx] for idx in self.group_index]
        return p.homogenize(groups, self.hom_names)

    def group_degrees(self, p: Polynomial, registry_unknown_idx: Sequence[int]) -> list[int]:
        return [max(p.degree_in([registry_unknown_idx[k] for k in idx]), 0) for idx in self.group_index]


# ---------------------------------------------------------------------------
# start systems


class StartSystem:
    """Products of linear forms, one product per equation.

    ``factors[i]`` lists ``(g, c)`` pairs: the form ``c[0]*h_g + c[1:] . x_g``
    in the projective coordinates of ``frame``.  ``roots`` are affine.
    """

    def __init__(self, frame: ProjectiveFrame, factors: list[list[tuple[int, np.ndarray]]],
                 roots: np.ndarray, label: str, polys: PolySystem | None = None):
        self.frame = frame
        self.factors = factors
        self.roots = np.atleast_2d(np.asarray(roots, dtype=complex)).reshape(-1, frame.N)
        self.label = label
        self._polys = polys
        dim = frame.dim
        self._forms = []
        for fac in factors:
            L = np.zeros((len(fac), dim), dtype=complex)
            for a, (g, c) in enumerate(fac):
                L[a, frame.positions[g]] = c
            self._forms.append(L)

    @property
    def bezout(self) -> int:
        return self.roots.shape[0]

    def evaluate(self, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        B = V.shape[0]
        n = len(self._forms)
        vals = np.empty((B, n), dtype=complex)
        J = np.zeros((B, n, self.frame.dim), dtype=complex)
        for i, L in enumerate(self._forms):
            lin = V @ L.T  # (B, d)
            d = lin.shape[1]
            prefix = np.ones((B, d + 1), dtype=complex)
            suffix = np.ones((B, d + 1), dtype=complex)
            for a in range(d):
                prefix[:, a + 1] = prefix[:, a] * lin[:, a]
                suffix[:, d - a - 1] = suffix[:, d - a] * lin[:, d - a - 1]
            vals[:, i] = prefix[:, d]
            others = prefix[:, :d] * suffix[:, 1:]
            J[:, i, :] = others @ L
        return vals, J

    def as_polysystem(self, registry: Sequence[str]) -> PolySystem:
        """Affine start system (homogenising coordinates set to one)."""
        if self._polys is not None:
            return self._polys
        registry = tuple(registry)
        polys = []
        for fac in self.factors:
            p = Polynomial.constant(1.0, registry)
            for g, c in fac:
                coeffs = np.zeros(len(registry), dtype=complex)
                for k, idx in enumerate(self.frame.group_index[g]):
                    coeffs[registry.index(self.frame.unknowns[idx])] = c[1 + k]
                p = p * Polynomial.linear(coeffs, c[0], registry)
            polys.append(p)
        self._polys = PolySystem(polys, registry)
        return self._polys


def _check_square_target(target: PolySystem):
    if not target.is_square():
        raise ValueError(f"system is not square: {len(target)} equations, {len(target.unknowns)} unknowns")
    for p in target.polys:
        if p.is_zero():
            raise ValueError("zero polynomial in target system")
        idx = target.unknown_indices
        if p.degree_in(idx) < 1:
            raise ValueError("constant polynomial in target system")


def total_degree_start_system(target: PolySystem, frame: ProjectiveFrame) -> StartSystem:
    """Start system ``x_i^{d_i} - 1`` over a single-group frame."""
    _check_square_target(target)
    if frame.G != 1:
        raise ValueError("total-degree start needs a single variable group")
    idx = target.unknown_indices
    degrees = [p.degree_in(idx) for p in target.polys]
    factors = []
    for i, d in enumerate(degrees):
        fac = []
        for k in range(d):
            c = np.zeros(frame.N + 1, dtype=complex)
            c[0] = -np.exp(2j * np.pi * k / d)
            c[1 + frame.group_index[0].index(i)] = 1.0
            fac.append((0, c))
        factors.append(fac)
    roots = np.array([[np.exp(2j * np.pi * k / d) for k, d in zip(ks, degrees)]
                      for ks in itertools.product(*[range(d) for d in degrees])], dtype=complex)
    registry = tuple(target.unknowns)
    polys = PolySystem([Polynomial.variable(v, registry) ** d - 1.0 for v, d in zip(registry, degrees)], registry)
    return StartSystem(frame, factors, roots, "total_degree", polys)


def total_degree_start(target: PolySystem) -> tuple[PolySystem, list[np.ndarray]]:
    """Return the start system ``{x_i^{d_i} - 1}`` and all of its roots."""
    _check_square_target(target)
    frame = ProjectiveFrame(target.unknowns, None, np.random.default_rng(0))
    start = total_degree_start_system(target, frame)
    return start.as_polysystem(target.unknowns), [r for r in start.roots]


def linear_product_start_system(target: PolySystem, frame: ProjectiveFrame,
                                rng: np.random.Generator) -> StartSystem:
    """Multi-homogeneous linear-product start system matching the group degrees of ``target``."""
    _check_square_target(target)
    uidx = target.unknown_indices
    degs = [frame.group_degrees(p, uidx) for p in target.polys]
    factors = []
    for i, dg in enumerate(degs):
        fac = []
        for g, d in enumerate(dg):
            for _ in range(d):
                size = len(frame.group_index[g]) + 1
                fac.append((g, rng.normal(size=size) + 1j * rng.normal(size=size)))
        factors.append(fac)
    sizes = [len(idx) for idx in frame.group_index]
    n = len(factors)
    roots = []
    choice: list[tuple[int, int]] = []

    def recurse(i, remaining):
        if i == n:
            x = np.empty(frame.N, dtype=complex)
            for g, idx in enumerate(frame.group_index):
                rows = [factors[e][a][1] for e, (gg, a) in enumerate(choice) if gg == g]
                A = np.array([r[1:] for r in rows])
                b = -np.array([r[0] for r in rows])
                x[idx] = np.linalg.solve(A, b)
            roots.append(x)
            return
        for a, (g, _) in enumerate(factors[i]):
            if remaining[g] > 0:
                remaining[g] -= 1
                choice.append((g, a))
                recurse(i + 1, remaining)
                choice.pop()
                remaining[g] += 1

    recurse(0, list(sizes))
    return StartSystem(frame, factors, np.array(roots).reshape(-1, frame.N), "linear_product")


def multihomogeneous_bezout(target: PolySystem, groups: Sequence[Sequence[str]]) -> int:
    """Root count of the linear-product start system for the given grouping."""
    uidx = target.unknown_indices
    frame = ProjectiveFrame(target.unknowns, groups, np.random.default_rng(0))
    degs = [frame.group_degrees(p, uidx) for p in target.polys]
    sizes = [len(idx) for idx in frame.group_index]

    def count(i, remaining):
        if i == len(degs):
            return 1
        total = 0
        for g, d in enumerate(degs[i]):
            if d and remaining[g]:
                remaining[g] -= 1
                total += d * count(i + 1, remaining)
                remaining[g] += 1
        return total

    return count(0, sizes)


# ---------------------------------------------------------------------------
# homotopies


class Homotopy:
    """Square homotopy ``H(v, t)`` on a projective frame; ``t = 1`` is the start."""

    frame: ProjectiveFrame
    target: PolySystem

    def evaluate(self, V: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Values ``(B, dim)``, Jacobian in ``v`` ``(B, dim, dim)`` and ``dH/dt`` ``(B, dim)``."""
        raise NotImplementedError

    def target_at_zero(self) -> PolySystem:
        """Affine system whose roots are the ``t = 0`` endpoints."""
        raise NotImplementedError

    def _finish(self, vals, J, Ht, V):
        fr = self.frame
        B = V.shape[0]
        Hfull = np.empty((B, fr.dim), dtype=complex)
        Jfull = np.empty((B, fr.dim, fr.dim), dtype=complex)
        Htfull = np.zeros((B, fr.dim), dtype=complex)
        n = vals.shape[1]
        Hfull[:, :n] = vals
        Hfull[:, n:] = fr.patch_values(V)
        Jfull[:, :n] = J
        Jfull[:, n:] = fr.patch_rows()[None]
        Htfull[:, :n] = Ht
        return Hfull, Jfull, Htfull

    @property
    def max_degree(self) -> int:
        return max([p.total_degree() for p in self.target.polys] + [1])

    def affine_backward_error(self, X: np.ndarray) -> np.ndarray:
        if not hasattr(self, "_affine_target"):
            self._affine_target = CompiledSystem(self.target_at_zero().polys, jacobian=False)
        return self._affine_target.backward_error(X)


class BlendHomotopy(Homotopy):
    """``H = gamma * t * start + (1 - t) * target`` with the start given as linear products.

    Args:
        target: square system without parameters.
        start: start system built on ``frame``.
        gamma: complex constant of modulus one.
    """

    def __init__(self, target: PolySystem, start: StartSystem, gamma: complex):
        _check_square_target(target)
        if target.params:
            raise ValueError("bind parameters before blending")
        self.target = target
        self.start = start
        self.frame = start.frame
        self.gamma = complex(gamma)
        uidx = list(range(len(target.registry)))
        order = [target.registry.index(v) for v in self.frame.unknowns]
        hom = [self.frame.homogenize(p, order) for p in target.polys]
        # compile on v layout: (h..., unknowns in frame order)
        reg = self.frame.hom_names + self.frame.unknowns
        hom = [h.extend(h.registry).restrict(reg) if h.registry != reg else h for h in hom]
        self.compiled = CompiledSystem(hom, reg)
        del uidx

    def evaluate(self, V, t):
        t = np.asarray(t, dtype=float)[:, None]
        Fv, FJ = self.compiled.values_and_jacobian(V)
        Sv, SJ = self.start.evaluate(V)
        g = self.gamma
        vals = g * t * Sv + (1 - t) * Fv
        J = g * t[:, :, None] * SJ + (1 - t)[:, :, None] * FJ
        Ht = g * Sv - Fv
        return self._finish(vals, J, Ht, V)

    def target_at_zero(self):
        return self.target

    @property
    def start_points(self) -> np.ndarray:
        return self.start.roots


class ParameterHomotopy(Homotopy):
    """Homotopy whose continuation parameter appears inside the system.

    Args:
        system: square system in its unknowns with parameter ``t_name``.
        groups: variable groups for the projective frame.
        rng: generator for the patch vectors.
    """

    def __init__(self, system: PolySystem, groups: Sequence[Sequence[str]] | None = None,
                 rng: np.random.Generator | None = None, t_name: str = "t"):
        if t_name not in system.params:
            raise ValueError(f"system has no parameter {t_name!r}")
        other = [p for p in system.params if p != t_name]
        if other:
            raise ValueError(f"unbound parameters {other}")
        if not system.is_square():
            raise ValueError("parameter homotopy must be square in its unknowns")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.system = system
        self.t_name = t_name
        self.frame = ProjectiveFrame(system.unknowns, groups, rng)
        fr = self.frame
        order = [system.registry.index(v) for v in fr.unknowns]
        hom = [fr.homogenize(p, order) for p in system.polys]
        reg = fr.hom_names + fr.unknowns + (t_name,)
        hom = [h.restrict(reg) if set(h.registry) == set(reg) else h.extend(reg) for h in hom]
        self.compiled = CompiledSystem(hom, reg)
        self.target = system

    def evaluate(self, V, t):
        B = V.shape[0]
        X = np.empty((B, self.frame.dim + 1), dtype=complex)
        X[:, :-1] = V
        X[:, -1] = t
        vals, J = self.compiled.values_and_jacobian(X)
        return self._finish(vals, J[:, :, :-1], J[:, :, -1], V)

    def target_at_zero(self):
        return self.system.bind(**{self.t_name: 0.0})

    def at(self, t: float) -> PolySystem:
        return self.system.bind(**{self.t_name: t})


# ---------------------------------------------------------------------------
# results


@dataclass
class PathResult:
    """Outcome of one tracked path.

    ``endpoint`` is affine (entries may be huge or infinite when diverged);
    ``projective`` holds the patch coordinates actually tracked.
    """

    endpoint: np.ndarray
    status: str
    final_t: float
    residual: float
    cond_estimate: float
    winding_hint: int = 1
    error_estimate: float = 0.0
    projective: np.ndarray | None = None
    start_index: int = -1
    steps: int = 0

    @property
    def is_finite(self) -> bool:
        return self.status == CONVERGED


def deduplicate(points: Sequence[np.ndarray], tol: float = 1e-6) -> tuple[list[np.ndarray], list[int], list[int]]:
    """Cluster points with ``|a - b| <= tol (1 + |a|)``.

    Returns representatives, multiplicities, and the cluster label of each input.
    Input order does not affect the clusters: points are sorted canonically first.
    """
    pts = [np.asarray(p, dtype=complex) for p in points]
    order = sorted(range(len(pts)), key=lambda k: tuple(np.round(np.concatenate([pts[k].real, pts[k].imag]), 6)))
    reps: list[np.ndarray] = []
    mult: list[int] = []
    labels = [0] * len(pts)
    for k in order:
        p = pts[k]
        for r, q in enumerate(reps):
            if np.linalg.norm(p - q) <= tol * (1 + np.linalg.norm(q)):
                mult[r] += 1
                labels[k] = r
                break
        else:
            labels[k] = len(reps)
            reps.append(p)
            mult.append(1)
    return reps, mult, labels


@dataclass
class SolveResult:
    """All paths of one homotopy solve plus the deduplicated finite endpoints."""

    paths: list[PathResult]
    solutions: list[np.ndarray]
    multiplicities: list[int]
    gamma: complex
    start_count: int
    labels: list[int] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        out = {CONVERGED: 0, DIVERGED: 0, PATH_FAILURE: 0}
        for p in self.paths:
            out[p.status] += 1
        return out

    def __iter__(self):
        return iter(self.paths)

    def __len__(self):
        return len(self.paths)


# ---------------------------------------------------------------------------
# core batch tracker


def _newton_correct(H: Homotopy, X: np.ndarray, t: np.ndarray, cfg: TrackerConfig,
                    iters: int, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised Newton at fixed ``t``; returns corrected points and success mask."""
    X = X.copy()
    B = X.shape[0]
    ok = np.zeros(B, dtype=bool)
    alive = np.ones(B, dtype=bool)
    prev = np.full(B, np.inf)
    for it in range(iters):
        sel = np.nonzero(alive & ~ok)[0]
        if sel.size == 0:
            break
        Hv, J, _ = H.evaluate(X[sel], t[sel])
        dx = _batch_solve(J, -Hv)
        nrm = _rownorm(dx)
        finite = np.isfinite(nrm)
        X[sel[finite]] += dx[finite]
        scale = 1 + _rownorm(X[sel])
        conv = finite & (nrm <= tol * scale)
        bad = ~finite | ((it > 0) & (nrm > cfg.contraction * prev[sel]) & ~conv)
        ok[sel[conv]] = True
        alive[sel[bad]] = False
        prev[sel] = nrm
    return X, ok


def _tangent(H: Homotopy, V: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``dv/dt`` along the solution path."""
    _, J, Ht = H.evaluate(V, t)
    return _batch_solve(J, -Ht)


def _predict(H: Homotopy, V: np.ndarray, t: np.ndarray, h: np.ndarray, method: str) -> np.ndarray:
    """Step from ``t`` to ``t - h`` with an explicit Runge-Kutta predictor."""
    hc = h[:, None]
    k1 = _tangent(H, V, t)
    if method == "euler":
        return V - hc * k1
    k2 = _tangent(H, V - 0.5 * hc * k1, t - 0.5 * h)
    if method == "rk2":
        return V - hc * k2
    k3 = _tangent(H, V - 0.5 * hc * k2, t - 0.5 * h)
    k4 = _tangent(H, V - hc * k3, t - h)
    return V - hc * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def _track_batch(H: Homotopy, V0: np.ndarray, t_start: np.ndarray | float, t_end: float,
                 cfg: TrackerConfig, h0: np.ndarray | None = None):
    """Track every row of ``V0`` from ``t_start`` down to ``t_end``.

    Returns ``(V, t, state, steps)``.
    """
    V = np.array(V0, dtype=complex, copy=True)
    B = V.shape[0]
    t = np.broadcast_to(np.asarray(t_start, dtype=float), (B,)).copy()
    h = np.full(B, cfg.initial_step) if h0 is None else h0.copy()
    succ = np.zeros(B, dtype=int)
    state = np.full(B, _ACTIVE)
    steps = np.zeros(B, dtype=int)
    state[t <= t_end] = _DONE
    for _ in range(cfg.max_iterations):
        idx = np.nonzero(state == _ACTIVE)[0]
        if idx.size == 0:
            break
        tt = t[idx]
        remaining = tt - t_end
        hh = np.minimum(np.minimum(h[idx], cfg.max_step), remaining)
        hh = np.minimum(hh, np.maximum(cfg.max_relative_step * tt, h[idx] * 0 + cfg.min_step))
        hh = np.where(remaining - hh <= 1e-15 * max(t_end, 1e-300) + 1e-16, remaining, hh)
        t1 = tt - hh
        t1 = np.where(np.abs(t1 - t_end) <= 1e-16, t_end, t1)
        Xp = _predict(H, V[idx], tt, tt - t1, cfg.predictor)
        Xc, ok = _newton_correct(H, Xp, t1, cfg, cfg.corrector_iters, cfg.corrector_tol)
        good = idx[ok]
        bad = idx[~ok]
        V[good] = Xc[ok]
        t[good] = t1[ok]
        steps[good] += 1
        succ[good] += 1
        grow = good[succ[good] >= cfg.growth_after]
        h[grow] = np.minimum(h[grow] * 2, cfg.max_step)
        succ[grow] = 0
        h[bad] /= 2
        succ[bad] = 0
        state[bad[h[bad] < cfg.min_step]] = _FAILED
        state[good[t[good] <= t_end]] = _DONE
        big = good[_rownorm(V[good]) > cfg.divergence]
        state[big] = _DIVERGED
    state[state == _ACTIVE] = _FAILED
    return V, t, state, steps, h


def _richardson(samples: np.ndarray, c: int) -> tuple[np.ndarray, np.ndarray]:
    """Extrapolate samples taken at ``t_k = t_0 2^{-k}`` to ``t = 0`` in ``s = t^{1/c}``.

    Returns the full-depth estimate and the discrepancy between the two
    one-shorter estimates (first and last ``K - 1`` samples).
    """
    K = samples.shape[0]
    r = 2.0 ** (-1.0 / c)

    def table(block):
        R = [block[k] for k in range(block.shape[0])]
        for j in range(1, block.shape[0]):
            rj = r ** j
            R = [(R[k] - rj * R[k - 1]) / (1 - rj) for k in range(1, len(R))]
        return R[0]

    full = table(samples)
    a = table(samples[:K - 1])
    b = table(samples[1:])
    return full, _rownorm(a - b)


def _extrapolate(window: np.ndarray, cfg: TrackerConfig):
    """Best Richardson estimate over cycle numbers for a window of samples ``(K, B, N)``."""
    B = window.shape[1]
    estimates = [_richardson(window, c) for c in range(1, cfg.max_cycle + 1)]
    errs = np.stack([e for _, e in estimates])  # (C, B)
    floor = np.maximum(errs.min(axis=0) * 10, 1e-12)
    cycle = np.ones(B, dtype=int)
    for b in range(B):
        for c in range(errs.shape[0]):
            if errs[c, b] <= floor[b]:
                cycle[b] = c + 1
                break
    best = np.stack([estimates[cycle[b] - 1][0][b] for b in range(B)]) if B else window[-1].copy()
    err = np.array([errs[cycle[b] - 1, b] for b in range(B)])
    bad = ~np.all(np.isfinite(best), axis=1)
    best[bad] = window[-1][bad]
    err[bad] = np.inf
    return best, err, cycle


def _endgame(H: Homotopy, V: np.ndarray, cfg: TrackerConfig):
    """From points at ``t_min``, sample geometrically, extrapolate and refine at ``t = 0``.

    Paths whose extrapolation has not settled keep halving ``t`` with a
    sliding window of samples, down to ``t_min * 2^-endgame_depth``.

    Returns ``(V0, cycle, err, ok, cond)``.
    """
    B = V.shape[0]
    K = cfg.endgame_samples
    samples = [None] * K
    tk = cfg.t_min
    Vk, _ = _newton_correct(H, V, np.full(B, tk), cfg, 4, cfg.sample_tol)
    samples[0] = Vk
    ok = np.ones(B, dtype=bool)
    h = np.full(B, tk / 2)
    for k in range(1, K):
        tnext = tk / 2
        Vn, tn, state, _, _ = _track_batch(H, samples[k - 1], np.full(B, tk), tnext, cfg, h0=h)
        ok &= state == _DONE
        Vn, _ = _newton_correct(H, Vn, np.full(B, tnext), cfg, 4, cfg.sample_tol)
        samples[k] = Vn
        tk = tnext
    window = np.stack(samples)
    best, best_err, cycle = _extrapolate(window, cfg)
    target = cfg.endgame_tol * (1 + _rownorm(best))
    active = np.nonzero(ok & (best_err > target))[0]
    stale = np.zeros(B, dtype=int)
    depth = K
    window = window[:, active]
    while active.size and depth < cfg.endgame_depth:
        tnext = tk / 2
        Vn, _, state, _, _ = _track_batch(H, window[-1], np.full(active.size, tk), tnext, cfg,
                                          h0=np.full(active.size, tk / 2))
        Vn, _ = _newton_correct(H, Vn, np.full(active.size, tnext), cfg, 4, cfg.sample_tol)
        moved = state == _DONE
        window = np.concatenate([window[1:], Vn[None]])
        est, err, cyc = _extrapolate(window, cfg)
        better = moved & (err < best_err[active])
        sel = active[better]
        best[sel] = est[better]
        best_err[sel] = err[better]
        cycle[sel] = cyc[better]
        stale[active] = np.where(better, 0, stale[active] + 1)
        keep = moved & (stale[active] < 2) & (best_err[active] > cfg.endgame_tol * (1 + _rownorm(best[active])))
        window = window[:, keep]
        active = active[keep]
        tk = tnext
        depth += 1
    V0, cond = _refine_at_zero(H, best, cfg)
    return V0, cycle, best_err, ok, cond


def _refine_at_zero(H: Homotopy, V: np.ndarray, cfg: TrackerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Newton at ``t = 0`` for nonsingular endpoints, truncated Gauss-Newton otherwise."""
    B = V.shape[0]
    if B == 0:
        return V, np.zeros(0)
    zero = np.zeros(B)
    V = V.copy()
    Hv, J, _ = H.evaluate(V, zero)
    s = np.linalg.svd(J, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = s[:, 0] / s[:, -1]
    cond = np.where(np.isfinite(cond), cond, np.inf)
    regular = cond < cfg.singular_cond
    if regular.any():
        idx = np.nonzero(regular)[0]
        Vr, okr = _newton_correct(H, V[idx], zero[idx], cfg.with_(contraction=0.9), 6, cfg.final_tol)
        # accept only if the refined point stayed close to the extrapolated one
        near = _rownorm(Vr - V[idx]) <= 1e-4 * (1 + _rownorm(V[idx]))
        take = idx[near]
        V[take] = Vr[near]
    sing = np.nonzero(~regular)[0]
    for _ in range(3):
        if sing.size == 0:
            break
        Hv, J, _ = H.evaluate(V[sing], zero[sing])
        U, S, Wh = np.linalg.svd(J)
        r = np.sum(S > 1e-6 * S[:, :1], axis=1)
        res0 = _rownorm(Hv)
        Vn = V[sing].copy()
        for k in range(sing.size):
            rk = r[k]
            coef = (U[k, :, :rk].conj().T @ (-Hv[k])) / S[k, :rk]
            Vn[k] = V[sing[k]] + Wh[k, :rk].conj().T @ coef
        Hn, _, _ = H.evaluate(Vn, zero[sing])
        better = _rownorm(Hn) < res0
        V[sing[better]] = Vn[better]
        sing = sing[better]
    return V, cond


def track_batch(H: Homotopy, X0: np.ndarray, cfg: TrackerConfig | None = None,
                finite_groups: Sequence[int] | None = None) -> list[PathResult]:
    """Track affine start points ``X0`` from ``t = 1`` to ``t = 0`` with the endgame.

    Args:
        H: homotopy whose ``t = 1`` slice is solved by ``X0``.
        X0: affine start points, one per row.
        cfg: tracker settings.
        finite_groups: variable groups that must stay finite for a path to
            count as converged; all groups by default.
    """
    cfg = cfg or TrackerConfig()
    fr = H.frame
    X0 = np.atleast_2d(np.asarray(X0, dtype=complex)).reshape(-1, fr.N)
    B = X0.shape[0]
    if B == 0:
        return []
    V0 = fr.to_projective(X0)
    ones = np.ones(B)

    def residual(V):
        return _rownorm(H.evaluate(V, ones)[0]) / (1 + _rownorm(V)) ** H.max_degree

    # polish start points from ill-conditioned linear solves, keeping improvements only
    Vp, _ = _newton_correct(H, V0, ones, cfg, 2, cfg.sample_tol)
    r0, rp = residual(V0), residual(Vp)
    better = np.isfinite(rp) & (rp < r0)
    V0[better] = Vp[better]
    start_res = np.where(better, rp, r0)
    if np.any(start_res > cfg.start_residual):
        bad = int(np.argmax(start_res))
        raise ValueError(f"start point {bad} has residual {start_res[bad]:.3g} at t = 1")
    V, t, state, steps, _ = _track_batch(H, V0, 1.0, cfg.t_min, cfg)
    reached = np.nonzero(state == _DONE)[0]
    cycle = np.ones(B, dtype=int)
    err = np.zeros(B)
    cond = np.full(B, np.inf)
    final_t = t.copy()
    if reached.size:
        Vz, cyc, e, ok, cnd = _endgame(H, V[reached], cfg)
        V[reached] = Vz
        cycle[reached] = cyc
        err[reached] = e
        cond[reached] = cnd
        final_t[reached] = 0.0
        state[reached[~ok]] = _FAILED
    groups = list(range(fr.G)) if finite_groups is None else list(finite_groups)
    X = fr.to_affine(V)
    # a group is at infinity when its homogenising coordinate cannot be told
    # apart from zero given the extrapolation error
    at_inf = fr.h_ratio(V) <= np.maximum(1.0 / cfg.divergence, 10 * err)[:, None]
    results = []
    need = [k for k in range(B) if state[k] == _DONE]
    bwd = np.full(B, np.inf)
    if need:
        finite_rows = [k for k in need if not np.any(at_inf[k, groups])]
        if finite_rows:
            Xf = X[finite_rows].copy()
            # groups allowed at infinity do not enter the backward error
            bwd[finite_rows] = _group_backward_error(H, V[finite_rows], Xf, groups)
    for k in range(B):
        if state[k] == _DONE:
            if np.any(at_inf[k, groups]) or not np.all(np.isfinite(X[k, _group_cols(fr, groups)])):
                status = DIVERGED
            elif bwd[k] <= cfg.converged_residual:
                status = CONVERGED
            else:
                status = PATH_FAILURE
        elif state[k] == _DIVERGED:
            status = DIVERGED
        else:
            status = PATH_FAILURE
        results.append(PathResult(
            endpoint=X[k], status=status, final_t=float(final_t[k]), residual=float(bwd[k]),
            cond_estimate=float(cond[k]), winding_hint=int(cycle[k]), error_estimate=float(err[k]),
            projective=V[k].copy(), start_index=k, steps=int(steps[k]),
        ))
    return results


def _group_cols(fr: ProjectiveFrame, groups) -> list[int]:
    return [k for g in groups for k in fr.group_index[g]]


def _group_backward_error(H: Homotopy, V, X, groups) -> np.ndarray:
    fr = H.frame
    if len(groups) == fr.G:
        return H.affine_backward_error(X)
    # some groups may sit at infinity: measure on the homogeneous equations with
    # the patch-normalised coordinates instead
    Hv, _, _ = H.evaluate(V, np.zeros(V.shape[0]))
    return _rownorm(Hv) / (1 + _rownorm(V))


def track(H: Homotopy, x0, t_end: float = 0.0, cfg: TrackerConfig | None = None) -> PathResult:
    """Follow one path from ``t = 1`` to ``t_end``.

    For ``t_end = 0`` the endgame is used; otherwise the point at ``t_end``
    is returned after tight Newton correction.
    """
    cfg = cfg or TrackerConfig()
    if not 0 <= t_end < 1:
        raise ValueError("t_end must lie in [0, 1)")
    if t_end == 0:
        return track_batch(H, np.atleast_2d(x0), cfg)[0]
    fr = H.frame
    V0 = fr.to_projective(np.atleast_2d(x0))
    Hv, _, _ = H.evaluate(V0, np.ones(1))
    res = float(_rownorm(Hv)[0] / (1 + _rownorm(V0)[0]))
    if res > cfg.start_residual:
        raise ValueError(f"start point has residual {res:.3g} at t = 1")
    V, t, state, steps, _ = _track_batch(H, V0, 1.0, t_end, cfg)
    if state[0] == _DONE:
        V, _ = _newton_correct(H, V, t, cfg, 4, cfg.sample_tol)
    Hv, J, _ = H.evaluate(V, t)
    s = np.linalg.svd(J[0], compute_uv=False)
    X = fr.to_affine(V)[0]
    norm = float(np.linalg.norm(X))
    if state[0] == _DIVERGED or norm > cfg.divergence:
        status = DIVERGED
    elif state[0] == _DONE:
        status = CONVERGED
    else:
        status = PATH_FAILURE
    return PathResult(endpoint=X, status=status, final_t=float(t[0]),
                      residual=float(np.linalg.norm(Hv[0])), cond_estimate=float(s[0] / max(s[-1], 1e-300)),
                      projective=V[0], start_index=0, steps=int(steps[0]))


def _summarize(paths: list[PathResult], gamma: complex, cfg: TrackerConfig,
               keep: Sequence[int] | None = None) -> SolveResult:
    conv = [p for p in paths if p.status == CONVERGED]
    pts = [p.endpoint if keep is None else p.endpoint[list(keep)] for p in conv]
    reps, mult, labels = deduplicate(pts, cfg.dedup_tol)
    return SolveResult(paths=paths, solutions=reps, multiplicities=mult, gamma=gamma,
                       start_count=len(paths), labels=labels)


def solve_square(target: PolySystem, seed: int = 0, cfg: TrackerConfig | None = None,
                 groups: Sequence[Sequence[str]] | None = None,
                 finite_groups: Sequence[int] | None = None) -> SolveResult:
    """Solve a square system by a gamma-trick homotopy.

    With ``groups`` omitted a total-degree start system is used; otherwise a
    multi-homogeneous linear-product start system for the given grouping.
    """
    cfg = cfg or TrackerConfig()
    if target.params:
        raise ValueError(f"bind parameters {target.params} before solving")
    rng = np.random.default_rng(seed)
    gamma = random_unit(rng)
    frame = ProjectiveFrame(target.unknowns, groups, rng)
    if groups is None or len(frame.groups) == 1:
        start = total_degree_start_system(target, frame)
    else:
        start = linear_product_start_system(target, frame, rng)
    H = BlendHomotopy(target, start, gamma)
    paths = track_batch(H, start.roots, cfg, finite_groups=finite_groups)
    keep = None if finite_groups is None else _group_cols(frame, finite_groups)
    return _summarize(paths, gamma, cfg, keep)


@dataclass
class LimitResult:
    """Limits of a parameter homotopy as ``t -> 0``."""

    points: list[np.ndarray]
    multiplicities: list[int]
    paths: list[PathResult]
    winding: list[int]
    labels: list[int] = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, k):
        return self.points[k]


def limit_points(H: ParameterHomotopy, endpoints_at_t1: Iterable, cfg: TrackerConfig | None = None,
                 finite_groups: Sequence[int] | None = None) -> LimitResult:
    """Track solutions at ``t = 1`` toward ``t = 0`` and collect the finite limits.

    Diverging paths are dropped.  Coordinates in groups outside
    ``finite_groups`` are reported but ignored for deduplication.
    """
    cfg = cfg or TrackerConfig()
    X0 = np.array([np.asarray(p, dtype=complex) for p in endpoints_at_t1]).reshape(-1, H.frame.N)
    if X0.shape[0]:
        # endpoints that are not roots in this frame (near infinity, say) cannot start a path
        V0 = H.frame.to_projective(X0)
        Hv, _, _ = H.evaluate(V0, np.ones(X0.shape[0]))
        res = _rownorm(Hv) / (1 + _rownorm(V0)) ** H.max_degree
        good = np.isfinite(res) & (res <= cfg.start_residual)
        if not good.all():
            log.warning("dropping %d start points that do not solve the system at t = 1", int((~good).sum()))
        X0 = X0[good]
    paths = track_batch(H, X0, cfg, finite_groups=finite_groups)
    conv = [p for p in paths if p.status == CONVERGED]
    keep = list(range(H.frame.N)) if finite_groups is None else _group_cols(H.frame, finite_groups)
    reps, mult, labels = deduplicate([p.endpoint[keep] for p in conv], cfg.dedup_tol)
    winding = [1] * len(reps)
    for p, lab in zip(conv, labels):
        winding[lab] = max(winding[lab], p.winding_hint)
    full_reps = []
    for r in range(len(reps)):
        members = [p for p, lab in zip(conv, labels) if lab == r]
        full_reps.append(members[0].endpoint if finite_groups is None else reps[r])
    return LimitResult(points=full_reps, multiplicities=mult, paths=paths, winding=winding, labels=labels)


def solve_then_limit(system: PolySystem, seed: int, cfg: TrackerConfig | None = None,
                     groups: Sequence[Sequence[str]] | None = None,
                     finite_groups: Sequence[int] | None = None,
                     t_name: str = "t") -> tuple[LimitResult, SolveResult]:
    """Solve ``system`` at ``t = 1`` and follow every finite root to ``t = 0``."""
    cfg = cfg or TrackerConfig()
    rng = np.random.default_rng(seed)
    at_one = system.bind(**{t_name: 1.0})
    sol = solve_square(at_one, int(rng.integers(2**31)), cfg, groups=groups)
    H = ParameterHomotopy(system, groups, rng, t_name)
    roots = [p.endpoint for p in sol.paths if p.status == CONVERGED]
    # solutions at t = 1 are generically simple; keep one copy of each
    roots, _, _ = deduplicate(roots, 1e-8)
    lim = limit_points(H, roots, cfg, finite_groups=finite_groups)
    return lim, sol


class Refinement(tuple):
    """``(x, residual)`` pair with extra attributes ``singular`` and ``iterations``."""

    def __new__(cls, x, residual, singular=False, iterations=0):
        obj = super().__new__(cls, (x, residual))
        obj.singular = singular
        obj.iterations = iterations
        return obj

    @property
    def x(self):
        return self[0]

    @property
    def residual(self):
        return self[1]


def newton_refine(S: PolySystem, x, max_iter: int = 20, tol: float = 1e-13,
                  rank_tol: float = 1e-10) -> Refinement:
    """Newton (Gauss-Newton when overdetermined) refinement of an approximate root.

    Stops when the residual drops below ``tol (1 + |x|)``.  If the Jacobian is
    rank deficient or the iteration only converges linearly, the input is
    returned with ``singular = True``.
    """
    x0 = np.asarray(x, dtype=complex).copy()
    if len(S) < len(S.unknowns):
        raise ValueError("underdetermined system")
    comp = CompiledSystem(S.polys, S.registry)
    cols = S.unknown_indices
    if S.params:
        raise ValueError("bind parameters before refinement")
    xk = x0.copy()
    prev_step = None
    slow = 0
    for it in range(max_iter + 1):
        F, J = comp.values_and_jacobian(xk[None])
        F, J = F[0], J[0][:, cols]
        res = float(np.linalg.norm(F))
        if res <= tol * (1 + np.linalg.norm(xk)):
            return Refinement(xk, res, False, it)
        if it == max_iter:
            break
        if numerical_rank(J, rank_tol) < len(cols):
            return Refinement(x0, _residual(comp, x0), True, it)
        dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        step = float(np.linalg.norm(dx))
        if prev_step is not None and prev_step > 0 and step > 0.25 * prev_step:
            slow += 1
            if slow >= 2:
                return Refinement(x0, _residual(comp, x0), True, it)
        else:
            slow = 0
        prev_step = step
        xk = xk + dx
        if not np.all(np.isfinite(xk)):
            return Refinement(x0, _residual(comp, x0), True, it)
    return Refinement(xk, res, False, max_iter)


def _residual(comp: CompiledSystem, x) -> float:
    return float(np.linalg.norm(comp.values(np.asarray(x)[None])[0]))


def gauss_newton_real(S: PolySystem, x, iters: int = 8, rank_tol: float = 1e-8) -> np.ndarray:
    """Project a nearly real point onto the real zero set with truncated-SVD steps."""
    comp = CompiledSystem(S.polys, S.registry)
    xk = np.asarray(x, dtype=complex).real.astype(complex)
    res = _residual(comp, xk)
    for _ in range(iters):
        F, J = comp.values_and_jacobian(xk[None])
        F, J = F[0].real, J[0].real
        if F.size == 0:
            break
        U, s, Wt = np.linalg.svd(J, full_matrices=False)
        if s.size == 0 or s[0] == 0:
            break
        r = int(np.sum(s > rank_tol * s[0]))
        dx = Wt[:r].T @ ((U[:, :r].T @ -F) / s[:r])
        cand = xk + dx
        rc = _residual(comp, cand)
        if not rc < res:
            break
        xk, res = cand, rc
        if res < 1e-15 * (1 + np.linalg.norm(xk)):
            break
    return xk
