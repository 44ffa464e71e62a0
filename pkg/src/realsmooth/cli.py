"""Command-line front end.

Exit codes: 0 success (possibly with an empty result), 1 usage or input error,
2 degenerate objective, 3 deflation failure, 4 parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time

import numpy as np

from .config import RunConfig, Tolerances, TrackerConfig
from .critical import DegenerateObjectiveError, SmoothPointReport
from .io import parse_input
from .kuramoto import SUPPORTED_N, survey
from .parsing import ParseError, parse_polynomial
from .poly import PolySystem
from .polar import DeflationCapError
from .realdim import METHODS, real_dimension, smooth_sample
from .reduce import SemiAlgebraicInput, embed_bounded, lift_inequalities

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEGENERATE = 2
EXIT_DEFLATION = 3
EXIT_PARSE = 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which is reserved here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


DEFAULT_DELTA = RunConfig().delta


def parse_bound(text: str, n: int) -> tuple[np.ndarray, float]:
    """``""``, ``"delta"``, ``"q1,...,qn"`` or ``"q1,...,qn,delta"``.

    The center defaults to the origin and delta to ``DEFAULT_DELTA``.
    """
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"bad --bound {text!r}") from None
    if not vals:
        return np.zeros(n), DEFAULT_DELTA
    if len(vals) == 1:
        return np.zeros(n), vals[0]
    if len(vals) == n:
        return np.array(vals), DEFAULT_DELTA
    if len(vals) != n + 1:
        raise ValueError(f"--bound needs delta, {n} center coordinates, or both")
    return np.array(vals[:-1]), vals[-1]


def prepare(S: SemiAlgebraicInput, bound: str | None) -> PolySystem:
    """Lift inequalities, then optionally cut down to a ball."""
    F = lift_inequalities(S)
    if bound is not None:
        q, delta = parse_bound(bound, len(F.unknowns))
        F = embed_bounded(F, q, delta)
    return F


def _tracker(args) -> TrackerConfig:
    return TrackerConfig(t_min=args.t_min)


def _tolerances(args) -> Tolerances:
    return Tolerances(real_tol=args.real_tol, g_zero_tol=args.g_zero_tol, rank_tol=args.rank_tol,
                      dedup_tol=args.dedup_tol, t_min=args.t_min)


def _point_dict(sp, n: int) -> dict:
    d = sp.as_dict()
    # drop lifting and bounding coordinates
    d["x"] = d["x"][:n]
    return d


def curve_samples(f, box: tuple[float, float, float, float], count: int = 400) -> np.ndarray:
    """Real points of a plane curve ``f(x, y) = 0`` on vertical and horizontal grid lines."""
    x0, x1, y0, y1 = box
    out = []
    for axis, (lo, hi) in enumerate([(x0, x1), (y0, y1)]):
        other = 1 - axis
        deg = f.degree_in([other])
        if deg == 0:
            continue
        for c in np.linspace(lo, hi, count):
            # coefficients of f restricted to the line, highest power first
            coeffs = np.zeros(deg + 1, dtype=complex)
            for e, v in f.terms.items():
                coeffs[deg - e[other]] += v * c ** e[axis]
            if abs(coeffs[0]) < 1e-14:
                continue
            for r in np.roots(coeffs):
                if abs(r.imag) < 1e-8:
                    pt = [0.0, 0.0]
                    pt[axis], pt[other] = c, r.real
                    out.append(pt)
    return np.array(out).reshape(-1, 2)


def write_plot_csv(path: str, S: SemiAlgebraicInput, points: list[list[float]], delta: float):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind"] + list(S.variables))
        for p in points:
            w.writerow(["point"] + [repr(float(v)) for v in p])
        if len(S.variables) == 2 and len(S.equations) == 1:
            r = float(np.sqrt(delta))
            if points:
                r = max(r, 1.5 * float(np.max(np.abs(points))))
            for x, y in curve_samples(S.equations[0], (-r, r, -r, r)):
                w.writerow(["curve", repr(float(x)), repr(float(y))])


def _project_unique(points, n: int, tol: float) -> list[dict]:
    # lifted sheets (z and -z) project to the same point
    out = []
    for sp in points:
        d = _point_dict(sp, n)
        if all(np.linalg.norm(np.subtract(d["x"], e["x"])) > tol for e in out):
            out.append(d)
    return out


def _report_dict(rep: SmoothPointReport, n: int, cfg: RunConfig) -> dict:
    trace = rep.perturbation_trace or {}
    gamma = rep.solve.gamma if rep.solve is not None else None
    return {
        "points": _project_unique(rep.points, n, cfg.tolerances.dedup_tol),
        "seed": cfg.seed,
        "xi": trace.get("xi"),
        "gamma": None if gamma is None else [gamma.real, gamma.imag],
        "method": rep.method,
        "perturbation": trace,
        "warnings": list(rep.warnings),
        **cfg.as_dict(),
    }


def cmd_smooth_points(args) -> int:
    S = parse_input(args.input)
    F = prepare(S, args.bound)
    cfg = RunConfig(seed=args.seed, tolerances=_tolerances(args), tracker=_tracker(args),
                    emit_plot=args.csv is not None, xi_crosscheck=args.xi_crosscheck)
    if args.bound is not None:
        cfg.delta = parse_bound(args.bound, len(F.unknowns) - 1)[1]
    g = None
    if args.g is not None:
        try:
            g = parse_polynomial(args.g, S.variables).extend(F.registry)
        except ParseError as e:
            raise ParseError(f"--g: {e.message}", None, e.column) from None
    start = time.perf_counter()
    rep = smooth_sample(F, g, seed=args.seed, tol=cfg.tolerances, cfg=cfg.tracker,
                        perturbed=args.perturbed, xi_crosscheck=args.xi_crosscheck)
    out = _report_dict(rep, len(S.variables), cfg)
    if args.bound is None:
        out["delta"] = None
    out["elapsed"] = time.perf_counter() - start
    if cfg.emit_plot:
        write_plot_csv(args.csv, S, [p["x"] for p in out["points"]], cfg.delta)
    _emit(out)
    return EXIT_OK


def cmd_real_dim(args) -> int:
    S = parse_input(args.input)
    F = prepare(S, args.bound)
    cfg = RunConfig(seed=args.seed, tolerances=_tolerances(args), tracker=_tracker(args))
    if args.bound is not None:
        cfg.delta = parse_bound(args.bound, len(F.unknowns) - 1)[1]
    start = time.perf_counter()
    run = real_dimension(F, seed=args.seed, method=args.method, tol=cfg.tolerances, cfg=cfg.tracker)
    out = run.as_dict()
    out["witnesses"] = _project_unique(run.witnesses, len(S.variables), cfg.tolerances.dedup_tol)
    out["variables"] = list(F.unknowns)
    out.update(cfg.as_dict())
    if args.bound is None:
        out["delta"] = None
    out["elapsed"] = time.perf_counter() - start
    _emit(out)
    # failed groups above the answering level leave the answer unconfirmed
    failed = [t for t in run.per_i_trace if t.errors and t.level - 1 > run.result]
    return EXIT_DEFLATION if failed else EXIT_OK


def cmd_kuramoto(args) -> int:
    res = survey(args.n, args.samples, seed=args.seed, recheck=args.recheck, tol=_tolerances(args),
                 cfg=_tracker(args))
    _emit(res.as_dict())
    return EXIT_OK


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


BOUND_HELP = (f"intersect with the ball |x - q|^2 <= delta; give 'delta', 'q1,...,qn' or 'q1,...,qn,delta' "
              f"(q defaults to the origin, delta to {DEFAULT_DELTA:g}; q also covers the z variables "
              f"added for inequalities)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="realsmooth", description="Smooth real points and real dimension by homotopy continuation.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(q):
        d = Tolerances()
        q.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        q.add_argument("--real-tol", type=float, default=d.real_tol, dest="real_tol")
        q.add_argument("--g-zero-tol", type=float, default=d.g_zero_tol, dest="g_zero_tol")
        q.add_argument("--rank-tol", type=float, default=d.rank_tol, dest="rank_tol")
        q.add_argument("--dedup-tol", type=float, default=d.dedup_tol, dest="dedup_tol")
        q.add_argument("--t-min", type=float, default=d.t_min, dest="t_min", help="endgame start")

    sp = sub.add_parser("smooth-points", help="smooth real points via critical points of g")
    sp.add_argument("--input", required=True, help="text or JSON input file")
    sp.add_argument("--g", default=None, help="objective in the input variables; built automatically if omitted")
    sp.add_argument("--bound", nargs="?", const="", default=None, help=BOUND_HELP)
    sp.add_argument("--xi-crosscheck", action="store_true", dest="xi_crosscheck",
                    help="repeat with a second random perturbation and warn on disagreement")
    sp.add_argument("--perturbed", action="store_true", help="use the perturbed critical point system")
    sp.add_argument("--csv", default=None, help="write real points (and a curve sampling in 2D) here")
    common(sp)
    sp.set_defaults(func=cmd_smooth_points)

    rd = sub.add_parser("real-dim", help="real dimension of a compact real algebraic set")
    rd.add_argument("--input", required=True)
    rd.add_argument("--bound", nargs="?", const="", default=None, help=BOUND_HELP)
    rd.add_argument("--method", choices=METHODS, default="auto",
                    help="sos: sum of squares of the equations; system: perturb the equations directly "
                         "(needs every complex component of the expected dimension); auto: test and pick")
    common(rd)
    rd.set_defaults(func=cmd_real_dim)

    ku = sub.add_parser("kuramoto", help="count Kuramoto equilibria at random frequencies")
    ku.add_argument("--n", type=int, default=4, choices=SUPPORTED_N)
    ku.add_argument("--samples", type=int, default=20)
    ku.add_argument("--recheck", action=argparse.BooleanOptionalAction, default=True,
                    help="solve every sample again with a new gamma and compare counts")
    common(ku)
    ku.set_defaults(func=cmd_kuramoto)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except DegenerateObjectiveError as e:
        print(f"degenerate objective: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DeflationCapError as e:
        print(f"deflation failed: {e}", file=sys.stderr)
        return EXIT_DEFLATION
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
