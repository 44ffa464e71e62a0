"""Acceptance checks, one test per criterion; each prints a PASS or FAIL line."""

import contextlib
import json
import time

import numpy as np
import pytest

from realsmooth.cli import main
from realsmooth.config import Tolerances
from realsmooth.critical import certify_point
from realsmooth.kuramoto import count_real_equilibria
from realsmooth.parsing import parse_polynomial, parse_system
from realsmooth.poly import Polynomial, PolySystem, jacobian, sum_of_squares_pullback
from realsmooth.polar import T_NAME, deflation_sequence, multiplicity_one_refine, polar_system, witness_system_for_limit
from realsmooth.solve import CONVERGED, DIVERGED, PATH_FAILURE, newton_refine, numerical_rank, solve_square, solve_then_limit

from helpers import central_difference_jacobian, random_quadratic_system, set_distance


@pytest.fixture
def verdict(capsys):
    """Yields a dict for details; prints PASS or FAIL for the criterion when the test ends."""
    state = {}

    @contextlib.contextmanager
    def _run(number, title):
        ok = False
        try:
            yield state
            ok = True
        finally:
            detail = ", ".join(f"{k}={v}" for k, v in state.items())
            with capsys.disabled():
                print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})")

    return _run


def cli_json(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_criterion_1_circle(verdict, capsys, tmp_path):
    with verdict(1, "circle baseline") as info:
        path = write(tmp_path, "circle.txt", "vars x y\neq: x^2+y^2-1\n")
        start = time.perf_counter()
        code, out = cli_json(capsys, ["smooth-points", "--input", path, "--g", "x"])
        info["seconds"] = round(time.perf_counter() - start, 3)
        assert code == 0
        pts = sorted(out["points"], key=lambda p: p["x"][0])
        assert len(pts) == 2
        assert np.max(np.abs(np.array([p["x"] for p in pts]) - [[-1, 0], [1, 0]])) <= 1e-9
        assert [p["g_value"] for p in pts] == pytest.approx([-1, 1], abs=1e-9)
        assert info["seconds"] < 1.0


def test_criterion_2_lips(verdict, capsys, tmp_path):
    with verdict(2, "Thom's lips") as info:
        path = write(tmp_path, "lips.txt", "vars x y\neq: y^2-(-x^2+x^3)^2\n")
        start = time.perf_counter()
        code, out = cli_json(capsys, ["smooth-points", "--input", path, "--g", "x*(x-1)"])
        info["seconds"] = round(time.perf_counter() - start, 3)
        assert code == 0
        X = np.array(sorted((p["x"] for p in out["points"]), key=lambda v: v[1]))
        assert X.shape == (2, 2)
        assert np.max(np.abs(X - [[0.5, -0.125], [0.5, 0.125]])) <= 1e-6
        F = parse_system(["y^2-(-x^2+x^3)^2"], ("x", "y"))
        g = parse_polynomial("x*(x-1)", ("x", "y"))
        assert all(certify_point(F, g, x, 1, Tolerances())[0] for x in X)
        assert info["seconds"] < 5.0


def test_criterion_3_whitney(verdict, capsys, tmp_path):
    with verdict(3, "Whitney umbrella and handle") as info:
        W = write(tmp_path, "whitney.txt", "vars x y z w\neq: x^2-y^2*z\neq: x^2+y^2+z^2+w^2-4\n")
        start = time.perf_counter()
        code, out = cli_json(capsys, ["real-dim", "--input", W])
        info["whitney_seconds"] = round(time.perf_counter() - start, 2)
        info["whitney_dim"] = out["dimension"]
        assert code == 0 and out["dimension"] == 2
        assert info["whitney_seconds"] < 60

        H = write(tmp_path, "handle.txt", "vars x y z w\neq: x^2-y^2*z\neq: x^2+y^2+(z+1)^2+w^2-1/4\n")
        start = time.perf_counter()
        code, out = cli_json(capsys, ["real-dim", "--input", H])
        info["handle_seconds"] = round(time.perf_counter() - start, 2)
        info["handle_dim"] = out["dimension"]
        assert code == 0 and out["dimension"] == 1
        F = parse_system(["x^2-y^2*z", "x^2+y^2+(z+1)^2+w^2-1/4"], ("x", "y", "z", "w"))
        on_handle = [w["x"] for w in out["witnesses"]
                     if abs(w["x"][0]) <= 1e-6 and abs(w["x"][1]) <= 1e-6
                     and np.max(np.abs(F.evaluate(w["x"]))) <= 1e-8]
        info["handle_witnesses"] = len(on_handle)
        assert on_handle
        assert info["handle_seconds"] < 60


def test_criterion_4_deflation(verdict):
    with verdict(4, "deflation unit fidelity") as info:
        reg = ("x1", "x2", "t")
        H1 = parse_system(["x1*x2 - t", "x1*x2 - x1"], reg, params=("t",))
        p = np.array([0.0, 1.0])
        seq = deflation_sequence(H1, p, target_dim=0)
        info["first_ranks"] = list(seq.ranks)
        assert seq.ranks[0] == 2
        W = witness_system_for_limit(H1, p)
        assert np.max(np.abs(W.evaluate(p))) <= 1e-10
        # isolated: full column rank, and Newton from nearby returns to p
        assert W.unknowns == ("x1", "x2")
        assert numerical_rank(jacobian(W, p), 1e-10) == 2
        ref = newton_refine(W, p + np.array([1e-3, -2e-3]))
        assert np.max(np.abs(ref.x - p)) <= 1e-10 and ref.residual <= 1e-10

        H2 = parse_system(["x1^2 - x2 - t", "x2"], reg, params=("t",))
        q = np.zeros(2)
        W2 = witness_system_for_limit(H2, q)
        G = multiplicity_one_refine(W2, q, 0)
        added = G.polys[len(W2):]
        x1 = Polynomial.variable("x1", G.registry)
        info["appended"] = [str(a) for a in added]
        assert any(a.normalized() == x1.normalized() for a in added)
        J = jacobian(G, q)
        info["null_dim"] = 2 - numerical_rank(J, 1e-10)
        assert info["null_dim"] == 0
        assert np.max(np.abs(G.evaluate(q))) <= 1e-10


def test_criterion_5_xi_independence(verdict):
    with verdict(5, "limit points independent of the xi arc") as info:
        rng = np.random.default_rng(20240605)
        reg = ("x", "y", "z")
        F = random_quadratic_system(rng, 3, real=True)
        F = PolySystem([Polynomial(p.terms, reg) for p in F.polys], reg)
        f = sum_of_squares_pullback(F, np.eye(3))
        start = time.perf_counter()
        limits = []
        for _ in range(2):
            xi = np.exp(2j * np.pi * rng.uniform())
            S = polar_system(f, 1, xi=xi)
            lim, _ = solve_then_limit(S, seed=int(rng.integers(2**31)), t_name=T_NAME)
            limits.append(lim.points)
        info["seconds"] = round(time.perf_counter() - start, 2)
        info["points"] = [len(L) for L in limits]
        d = set_distance(*limits)
        info["set_distance"] = f"{d:.2e}"
        assert limits[0] and d <= 1e-6
        assert info["seconds"] < 30


def test_criterion_6_kuramoto(verdict, capsys):
    with verdict(6, "Kuramoto desk scale") as info:
        start = time.perf_counter()
        code, out = cli_json(capsys, ["kuramoto", "--n", "4", "--samples", "20", "--seed", "0"])
        info["seconds"] = round(time.perf_counter() - start, 1)
        info["max_observed"] = out["max_observed"]
        info["counts"] = out["per_sample_counts"]
        assert code == 0 and len(out["per_sample_counts"]) == 20
        assert out["max_observed"] <= 10
        assert out["recheck_counts"] == out["per_sample_counts"] and out["gamma_invariant"]
        # a frequency outside the box, directly or through omega_4 = -sum
        outside = [count_real_equilibria(4, w, seed=3).count
                   for w in ([0.8, 0.0, 0.0], [0.1, -0.9, 0.2], [0.5, 0.3, 0.1])]
        info["outside_counts"] = outside
        assert outside == [0, 0, 0]
        assert info["seconds"] < 600


def test_criterion_7_properties(verdict):
    with verdict(7, "property suites") as info:
        rng = np.random.default_rng(7)
        reg = ("x", "y", "z")
        worst = 0.0
        for _ in range(200):
            polys = []
            for _ in range(2):
                terms = {tuple(rng.integers(0, 5, size=3)): complex(*rng.integers(-9, 10, size=2))
                         for _ in range(rng.integers(1, 7))}
                polys.append(Polynomial(terms, reg))
            S = PolySystem(polys, reg)
            z = rng.uniform(0, 1, 3) ** 0.5 * np.exp(2j * np.pi * rng.uniform(size=3))
            J = jacobian(S, z)
            worst = max(worst, np.max(np.abs(J - central_difference_jacobian(S, z))) / (1 + np.max(np.abs(J))))
        info["fd_rel_error"] = f"{worst:.1e}"
        assert worst <= 1e-6

        bad = 0
        for k in range(50):
            n = 2 + k % 2
            sol = solve_square(random_quadratic_system(rng, n), seed=k)
            c = sol.counts()
            bad += c[CONVERGED] + c[DIVERGED] + c[PATH_FAILURE] != 2**n
        info["conservation_failures"] = bad
        assert bad == 0

        worst = 0.0
        for k in range(10):
            S = random_quadratic_system(rng, 2 + k % 2)
            worst = max(worst, set_distance(solve_square(S, seed=100 + k).solutions,
                                            solve_square(S, seed=200 + k).solutions))
        info["gamma_set_distance"] = f"{worst:.1e}"
        assert worst <= 1e-8
