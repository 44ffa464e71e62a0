"""Numerical settings shared by the solver and the pipelines."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace


@dataclass(frozen=True)
class TrackerConfig:
    """Path tracking and endgame settings."""

    # euler, rk2 or rk4
    predictor: str = "rk4"
    initial_step: float = 0.05
    max_step: float = 0.1
    # never step further than this fraction of the current t
    max_relative_step: float = 0.5
    min_step: float = 1e-14
    growth_after: int = 3
    corrector_iters: int = 3
    corrector_tol: float = 1e-9
    contraction: float = 0.5
    divergence: float = 1e8
    t_min: float = 1e-4
    endgame_samples: int = 5
    # unsettled paths keep halving t down to t_min * 2^-endgame_depth
    endgame_depth: int = 30
    endgame_tol: float = 1e-10
    max_cycle: int = 6
    sample_tol: float = 1e-14
    final_tol: float = 1e-13
    converged_residual: float = 1e-10
    # rejects wrong start points; products of many linear factors lose digits
    start_residual: float = 1e-6
    dedup_tol: float = 1e-6
    singular_cond: float = 1e8
    max_iterations: int = 20000

    def with_(self, **kw) -> "TrackerConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class Tolerances:
    """Filters applied to computed points."""

    real_tol: float = 1e-6
    g_zero_tol: float = 1e-8
    # rank decisions at points obtained from extrapolated limits
    rank_tol: float = 1e-6
    dedup_tol: float = 1e-6
    t_min: float = 1e-4
    certificate_residual: float = 1e-8

    def with_(self, **kw) -> "Tolerances":
        return replace(self, **kw)


@dataclass
class RunConfig:
    """Everything a command needs besides its input."""

    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    delta: float = 16.0
    emit_plot: bool = False
    xi_crosscheck: bool = False

    def __post_init__(self):
        for name, value in asdict(self.tolerances).items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "tolerances": asdict(self.tolerances),
            "delta": self.delta,
        }
