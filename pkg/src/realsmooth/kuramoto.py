"""Steady states of the Kuramoto model as a polynomial system.

With ``theta_n = 0`` and ``s_i = sin(theta_i)``, ``c_i = cos(theta_i)`` the
equilibrium equations become, for ``i < n``::

    omega_i - (1/n) sum_j (s_i c_j - s_j c_i) = 0,    s_i^2 + c_i^2 - 1 = 0

where ``s_n = 0`` and ``c_n = 1``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances, TrackerConfig
from .poly import Polynomial, PolySystem
from .solve import deduplicate, newton_refine, numerical_rank, solve_square

SUPPORTED_N = (3, 4)


def kuramoto_variables(n: int) -> tuple[str, ...]:
    m = n - 1
    return tuple(f"s{i}" for i in range(1, m + 1)) + tuple(f"c{i}" for i in range(1, m + 1))


def omega_bound(n: int) -> float:
    """Largest possible ``|omega_i|`` at an equilibrium: ``(n - 1) / n``."""
    return (n - 1) / n


def kuramoto_system(n: int, omega) -> PolySystem:
    """Equilibrium system for ``n`` oscillators; ``omega`` holds ``omega_1..omega_{n-1}``."""
    if n not in SUPPORTED_N:
        raise ValueError(f"n must be one of {SUPPORTED_N}")
    omega = np.asarray(omega, dtype=float).ravel()
    m = n - 1
    if omega.shape != (m,):
        raise ValueError(f"omega needs {m} entries")
    reg = kuramoto_variables(n)
    s = [Polynomial.variable(f"s{i}", reg) for i in range(1, m + 1)] + [Polynomial.zero(reg)]
    c = [Polynomial.variable(f"c{i}", reg) for i in range(1, m + 1)] + [Polynomial.constant(1.0, reg)]
    coupling, circles = [], []
    for i in range(m):
        acc = Polynomial.zero(reg)
        for j in range(n):
            if j != i:
                acc = acc + s[i] * c[j] - s[j] * c[i]
        coupling.append(acc * (-1.0 / n) + float(omega[i]))
        circles.append(s[i] * s[i] + c[i] * c[i] - 1.0)
    return PolySystem(coupling + circles, reg)


def sample_omega(n: int, rng: np.random.Generator, bound: float | None = None) -> np.ndarray:
    """Uniform sample of ``omega_1..omega_{n-1}`` with every ``|omega_i| <= bound``,
    ``omega_n = -sum`` included in the constraint (rejection sampling)."""
    bound = omega_bound(n) if bound is None else bound
    while True:
        w = rng.uniform(-bound, bound, size=n - 1)
        if abs(w.sum()) <= bound:
            return w


@dataclass
class KuramotoCount:
    omega: np.ndarray
    real_solutions: list[np.ndarray]
    paths: int
    finite: int
    gamma: complex

    @property
    def count(self) -> int:
        return len(self.real_solutions)


def count_real_equilibria(n: int, omega, seed: int = 0, tol: Tolerances | None = None,
                          cfg: TrackerConfig | None = None, newton_tol: float = 1e-12) -> KuramotoCount:
    """Real nonsingular solutions found by a total-degree homotopy."""
    tol = tol or Tolerances()
    F = kuramoto_system(n, omega)
    sol = solve_square(F, seed, cfg)
    found = []
    for x in sol.solutions:
        if np.max(np.abs(x.imag)) > tol.real_tol:
            continue
        ref = newton_refine(F, x.real.astype(complex))
        if ref.singular:
            continue
        xr = ref.x
        if np.max(np.abs(xr.imag)) > tol.real_tol or ref.residual > newton_tol:
            continue
        J = np.array([[p.diff(v).eval(xr) for v in F.registry] for p in F.polys])
        if numerical_rank(J, tol.rank_tol) < len(F):
            continue
        found.append(xr.real)
    reps, _, _ = deduplicate(found, tol.dedup_tol)
    reps = [r.real for r in reps]
    reps.sort(key=tuple)
    return KuramotoCount(np.asarray(omega, dtype=float), reps, len(sol.paths),
                         sum(p.is_finite for p in sol.paths), sol.gamma)


@dataclass
class KuramotoSurvey:
    n: int
    seed: int
    omegas: list[np.ndarray]
    per_sample_counts: list[int]
    gammas: list[complex] = field(default_factory=list)
    recheck_counts: list[int] | None = None
    elapsed: float = 0.0

    @property
    def max_observed(self) -> int:
        return max(self.per_sample_counts, default=0)

    @property
    def gamma_invariant(self) -> bool | None:
        if self.recheck_counts is None:
            return None
        return self.recheck_counts == self.per_sample_counts

    def as_dict(self) -> dict:
        out = {
            "n": self.n,
            "seed": self.seed,
            "samples": len(self.omegas),
            "omegas": [w.tolist() for w in self.omegas],
            "per_sample_counts": self.per_sample_counts,
            "max_observed": self.max_observed,
            "gammas": [[g.real, g.imag] for g in self.gammas],
            "elapsed": self.elapsed,
        }
        if self.recheck_counts is not None:
            out["recheck_counts"] = self.recheck_counts
            out["gamma_invariant"] = self.gamma_invariant
        return out


def survey(n: int, samples: int, seed: int = 0, recheck: bool = False,
           tol: Tolerances | None = None, cfg: TrackerConfig | None = None) -> KuramotoSurvey:
    """Count equilibria at ``samples`` random in-box frequency vectors.

    With ``recheck`` every sample is solved again with a different gamma.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    omegas = [sample_omega(n, rng) for _ in range(samples)]
    seeds = rng.integers(2**31, size=(samples, 2))
    res = [count_real_equilibria(n, w, int(s), tol, cfg) for w, s in zip(omegas, seeds[:, 0])]
    out = KuramotoSurvey(n, seed, omegas, [r.count for r in res], [r.gamma for r in res])
    if recheck:
        out.recheck_counts = [count_real_equilibria(n, w, int(s), tol, cfg).count
                              for w, s in zip(omegas, seeds[:, 1])]
    out.elapsed = time.perf_counter() - start
    return out
