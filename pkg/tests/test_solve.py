import numpy as np
import pytest
import sympy as sp

from realsmooth.config import TrackerConfig
from realsmooth.parsing import parse_polynomial, parse_system
from realsmooth.poly import Polynomial, PolySystem
from realsmooth.solve import (CONVERGED, DIVERGED, PATH_FAILURE, ParameterHomotopy, limit_points,
                              newton_refine, numerical_rank, solve_square, solve_then_limit,
                              total_degree_start, track)

from helpers import random_quadratic_system, set_distance


# ---- start systems --------------------------------------------------

def test_total_degree_start_univariate():
    S, roots = total_degree_start(parse_system(["x^2 - 3"], ("x",)))
    assert S.polys[0] == parse_polynomial("x^2 - 1", ("x",))
    assert sorted(r[0].real for r in roots) == pytest.approx([-1, 1])


def test_total_degree_start_counts():
    _, roots = total_degree_start(parse_system(["x^2 + y", "x*y - 1"], ("x", "y")))
    assert len(roots) == 4
    from realsmooth.kuramoto import kuramoto_system
    _, roots = total_degree_start(kuramoto_system(4, [0.1, 0.2, -0.1]))
    assert len(roots) == 64


def test_total_degree_start_rejects_zero():
    with pytest.raises(ValueError):
        total_degree_start(PolySystem([Polynomial.zero(("x",))], ("x",)))


# ---- tracking -------------------------------------------------------

def test_track_blend_root():
    # x^2 - (4 - 3t): the root 1 at t = 1 moves continuously to 2
    S = parse_system(["x^2 - 4 + 3*t"], ("x", "t"), params=("t",))
    H = ParameterHomotopy(S, rng=np.random.default_rng(1))
    r = track(H, [1.0])
    assert r.status == CONVERGED
    assert abs(r.endpoint[0] - 2) < 1e-10
    mid = track(H, [1.0], t_end=0.5)
    assert abs(mid.endpoint[0] - np.sqrt(2.5)) < 1e-10


def test_track_double_root_winding():
    xi = np.exp(0.7j)
    S = PolySystem([parse_polynomial("x^2", ("x", "t")) - parse_polynomial("t", ("x", "t")) * xi],
                   ("x", "t"), params=("t",))
    H = ParameterHomotopy(S, rng=np.random.default_rng(2))
    r = track(H, [np.sqrt(xi)])
    assert r.status == CONVERGED
    assert abs(r.endpoint[0]) < 1e-8
    assert r.winding_hint == 2


def test_track_rejects_bad_start():
    S = parse_system(["x^2 - 4 + 3*t"], ("x", "t"), params=("t",))
    H = ParameterHomotopy(S, rng=np.random.default_rng(1))
    with pytest.raises(ValueError):
        track(H, [0.0])


# ---- solve_square ---------------------------------------------------

def test_solve_line_and_parabola():
    sol = solve_square(parse_system(["x^2 - 1", "y - x"], ("x", "y")), seed=4)
    pts = sorted(sol.solutions, key=lambda p: p[0].real)
    assert set_distance(pts, [np.array([-1, -1]), np.array([1, 1])]) < 1e-10


def test_solve_nonreal():
    sol = solve_square(parse_system(["x^2 + 1"], ("x",)), seed=0)
    assert set_distance(sol.solutions, [np.array([1j]), np.array([-1j])]) < 1e-10


def test_solve_circle_lagrange():
    S = parse_system(["1 + 2*l*x", "2*l*y", "x^2 + y^2 - 1"], ("x", "y", "l"))
    sol = solve_square(S, seed=0)
    expected = [np.array([1, 0, -0.5]), np.array([-1, 0, 0.5])]
    assert set_distance(sol.solutions, expected) < 1e-10


def test_solve_matches_resultant_oracle():
    # independent oracle: roots of the resultant in y, back-substituted
    rng = np.random.default_rng(11)
    x, y = sp.symbols("x y")
    for _ in range(3):
        c = rng.integers(-5, 6, size=(2, 6))
        exprs = [c[k, 0] * x**2 + c[k, 1] * x * y + c[k, 2] * y**2 + c[k, 3] * x + c[k, 4] * y + c[k, 5] + 1
                 for k in range(2)]
        res = sp.Poly(sp.resultant(exprs[0], exprs[1], x), y)
        oracle = []
        for yr in res.nroots(n=30):
            xs = sp.Poly(exprs[0].subs(y, yr), x).nroots(n=30)
            xr = min(xs, key=lambda v: abs(complex(exprs[1].subs({x: v, y: yr}))))
            oracle.append(np.array([complex(xr), complex(yr)]))
        S = parse_system([str(e).replace("**", "^") for e in exprs], ("x", "y"))
        sol = solve_square(S, seed=3)
        assert set_distance(sol.solutions, oracle) < 1e-8


def test_path_count_conservation():
    rng = np.random.default_rng(2024)
    for k in range(50):
        n = 2 + k % 2
        S = random_quadratic_system(rng, n)
        sol = solve_square(S, seed=k)
        c = sol.counts()
        assert c[CONVERGED] + c[DIVERGED] + c[PATH_FAILURE] == 2**n == sol.start_count
        assert sum(sol.multiplicities) <= 2**n
        # generic dense quadratics have the full Bezout count of simple roots
        assert len(sol.solutions) == 2**n


def test_gamma_invariance():
    rng = np.random.default_rng(77)
    for k in range(10):
        S = random_quadratic_system(rng, 2 + k % 2)
        a = solve_square(S, seed=100 + k).solutions
        b = solve_square(S, seed=200 + k).solutions
        assert set_distance(a, b) <= 1e-8


def test_diverging_paths_counted():
    # two parallel lines meet only at infinity
    sol = solve_square(parse_system(["x + y - 1", "x + y - 2"], ("x", "y")), seed=0)
    assert sol.counts()[DIVERGED] == 1
    assert sol.solutions == []


# ---- limits ---------------------------------------------------------

def test_limit_example_path():
    reg = ("x1", "x2", "t")
    xi = np.exp(1.3j)
    t = Polynomial.variable("t", reg)
    S = PolySystem([parse_polynomial("x1*x2", reg) - t * xi, parse_polynomial("x1*x2 - x1", reg)],
                   reg, params=("t",))
    lim, _ = solve_then_limit(S, seed=5)
    assert len(lim.points) == 1
    assert np.allclose(lim.points[0], [0, 1], atol=1e-8)


def test_limit_nonreal():
    reg = ("x", "t")
    S = PolySystem([parse_polynomial("x^2 + 1", reg) - Polynomial.variable("t", reg) * np.exp(0.4j)],
                   reg, params=("t",))
    lim, _ = solve_then_limit(S, seed=1)
    assert set_distance(lim.points, [np.array([1j]), np.array([-1j])]) < 1e-8


def test_limit_double_root_multiplicity():
    reg = ("x", "t")
    xi = np.exp(2.1j)
    S = PolySystem([parse_polynomial("x^2", reg) - Polynomial.variable("t", reg) * xi], reg, params=("t",))
    H = ParameterHomotopy(S, rng=np.random.default_rng(0))
    r = np.sqrt(xi)
    lim = limit_points(H, [[r], [-r]])
    assert len(lim.points) == 1 and lim.multiplicities == [2]
    assert abs(lim.points[0][0]) < 1e-8


def test_limit_xi_invariance():
    # limits do not depend on the unit xi used for the arc
    reg = ("x", "y", "t")
    f = parse_polynomial("(x^2 + y^2 - 1)*(x - 2*y)", reg)
    results = []
    for k, xi in enumerate([np.exp(0.3j), np.exp(2.2j)]):
        t = Polynomial.variable("t", reg)
        S = PolySystem([f - t * xi, parse_polynomial("3*x + y - 0.5", reg)], reg, params=("t",))
        results.append(solve_then_limit(S, seed=k)[0].points)
    assert set_distance(*results) < 1e-6


# ---- refinement and rank --------------------------------------------

def test_newton_sqrt2():
    r = newton_refine(parse_system(["x^2 - 2"], ("x",)), [1.4])
    assert abs(r.x[0] - np.sqrt(2)) < 1e-11 and not r.singular


def test_newton_line_circle():
    r = newton_refine(parse_system(["x^2 + y^2 - 1", "x - y"], ("x", "y")), [0.7, 0.7])
    assert np.allclose(r.x, [np.sqrt(0.5)] * 2, atol=1e-12)


def test_newton_singular_flag():
    r = newton_refine(parse_system(["x^2"], ("x",)), [1e-3])
    assert r.singular
    assert r.x[0] == 1e-3


def test_newton_overdetermined():
    r = newton_refine(parse_system(["x - 1", "y + 2", "x + y + 1"], ("x", "y")), [1.1, -1.9])
    assert np.allclose(r.x, [1, -2], atol=1e-12)


@pytest.mark.parametrize("M, rank", [
    (np.eye(3), 3),
    (np.zeros((2, 5)), 0),
    (np.diag([1.0, 1e-12]), 1),
])
def test_numerical_rank(M, rank):
    assert numerical_rank(M, 1e-8) == rank


def test_numerical_rank_floor():
    # a tiny matrix is rank zero against an absolute floor
    assert numerical_rank(np.diag([1e-10, 1e-11])) == 2
    assert numerical_rank(np.diag([1e-10, 1e-11]), 1e-8, floor=1.0) == 0


def test_config_predictors_agree():
    S = parse_system(["x^2 + y^2 - 4", "x*y - 1"], ("x", "y"))
    ref = solve_square(S, seed=9).solutions
    for method in ("euler", "rk2"):
        other = solve_square(S, seed=9, cfg=TrackerConfig(predictor=method)).solutions
        assert set_distance(ref, other) < 1e-8
