import numpy as np
import pytest
import sympy as sp

from realsmooth.config import Tolerances
from realsmooth.critical import (DegenerateObjectiveError, build_lagrange, certify_point,
                                 critical_points_perturbed, critical_points_unperturbed)
from realsmooth.parsing import parse_polynomial, parse_system
from realsmooth.poly import jacobian

XY = ("x", "y")
XYZ = ("x", "y", "z")
CIRCLE = parse_system(["x^2 + y^2 - 1"], XY)
LIPS = parse_system(["y^2 - (-x^2 + x^3)^2"], XY)
SAMOSA = parse_system(["2*x*y - x^2 - y^2 - z^2 + 1"], XYZ)


def xs(report):
    return sorted((tuple(np.round(p.x, 9) + 0.0) for p in report.points))


def check_certificate(F, g, report, tol=Tolerances()):
    # re-verify every reported point independently of the pipeline
    for p in report.points:
        x = p.x.astype(complex)
        assert np.max(np.abs(F.evaluate(x))) <= 1e-8
        assert np.linalg.matrix_rank(jacobian(F, x), tol=1e-6) == len(F)
        assert abs(g.eval(x)) > tol.g_zero_tol


def test_build_lagrange_circle():
    L = build_lagrange(CIRCLE, parse_polynomial("x", XY))
    reg = ("x", "y", "_lam1")
    assert [str(p) for p in L.combined.polys] == ["2*x*_lam1 + 1", "2*y*_lam1", "x^2 + y^2 - 1"]
    assert L.combined.registry == reg
    assert L.combined.is_square()


def test_build_lagrange_lips_shape():
    L = build_lagrange(LIPS, parse_polynomial("x^2 - x", XY))
    assert len(L.combined) == 3 and L.combined.unknowns == ("x", "y", "_lam1")


def test_build_lagrange_rejects_constant():
    with pytest.raises(ValueError):
        build_lagrange(CIRCLE, parse_polynomial("3", XY))


def test_circle_unperturbed():
    g = parse_polynomial("x", XY)
    rep = critical_points_unperturbed(CIRCLE, g, seed=0)
    assert xs(rep) == [(-1.0, 0.0), (1.0, 0.0)]
    assert sorted(p.g_value for p in rep.points) == pytest.approx([-1, 1])
    assert all(p.jacobian_rank == 1 for p in rep.points)
    check_certificate(CIRCLE, g, rep)


def test_lips_unperturbed():
    g = parse_polynomial("x*(x - 1)", XY)
    rep = critical_points_unperturbed(LIPS, g, seed=0)
    pts = np.array(sorted((p.x for p in rep.points), key=lambda v: v[1]))
    assert np.allclose(pts, [[0.5, -0.125], [0.5, 0.125]], atol=1e-9)
    assert all(p.g_value == pytest.approx(-0.25) for p in rep.points)
    check_certificate(LIPS, g, rep)


def test_samosa_matches_sympy_oracle():
    g = parse_polynomial("x^2 + y^2 + z^2 - 3", XYZ)
    x, y, z, lam = sp.symbols("x y z lam")
    f = 2 * x * y - x**2 - y**2 - z**2 + 1
    G = x**2 + y**2 + z**2 - 3
    eqs = [sp.diff(G, v) + lam * sp.diff(f, v) for v in (x, y, z)] + [f]
    oracle = sorted(tuple(float(s[v]) for v in (x, y, z)) for s in sp.solve(eqs, [x, y, z, lam], dict=True)
                    if all(s[v].is_real for v in (x, y, z)))
    # frozen: (+-1/2, -+1/2, 0) and (0, 0, +-1)
    assert oracle == [(-0.5, 0.5, 0.0), (0.0, 0.0, -1.0), (0.0, 0.0, 1.0), (0.5, -0.5, 0.0)]
    rep = critical_points_unperturbed(SAMOSA, g, seed=0)
    assert np.allclose(np.array(xs(rep)), np.array(oracle), atol=1e-9)
    check_certificate(SAMOSA, g, rep)


def test_degenerate_objective():
    with pytest.raises(DegenerateObjectiveError):
        critical_points_unperturbed(CIRCLE, parse_polynomial("x^2 + y^2", XY), seed=0)
    rep = critical_points_unperturbed(CIRCLE, parse_polynomial("x^2 + y^2", XY), seed=0,
                                      raise_on_degenerate=False)
    assert rep.degenerate and rep.points == []


def test_free_variable_with_empty_real_part():
    rep = critical_points_unperturbed(parse_system(["x^2 + 1"], XY), parse_polynomial("x", XY))
    assert rep.points == [] and rep.warnings


def test_free_variable_with_real_points_is_degenerate():
    with pytest.raises(DegenerateObjectiveError):
        critical_points_unperturbed(parse_system(["x^2 - 1"], XY), parse_polynomial("x", XY))


def test_inconsistent_lagrange_system():
    rep = critical_points_unperturbed(parse_system(["x^2 + 1"], XY), parse_polynomial("y", XY))
    assert rep.points == []


def test_perturbed_nonreduced_point():
    F = parse_system(["x^2", "y"], XY)
    g = parse_polynomial("x + 2", XY)
    rep = critical_points_perturbed(F, g, seed=0)
    assert len(rep.points) == 1
    assert np.allclose(rep.points[0].x, [0, 0], atol=1e-8)
    assert rep.points[0].g_value == pytest.approx(2)


def test_perturbed_circle():
    rep = critical_points_perturbed(CIRCLE, parse_polynomial("x", XY), a=[1.0], seed=0)
    assert np.allclose(np.array(xs(rep)), [[-1, 0], [1, 0]], atol=1e-9)


def test_perturbed_empty():
    rep = critical_points_perturbed(parse_system(["x^2 + y^2 + 1"], XY), parse_polynomial("x", XY), seed=0)
    assert rep.points == []


def test_perturbed_rejects_zero_direction():
    with pytest.raises(ValueError):
        critical_points_perturbed(CIRCLE, parse_polynomial("x", XY), a=[0.0])


@pytest.mark.parametrize("F, g", [(CIRCLE, "x"), (LIPS, "x*(x - 1)")])
def test_perturbation_direction_invariance(F, g):
    g = parse_polynomial(g, XY)
    signs = []
    for seed in (1, 2, 3):
        rep = critical_points_perturbed(F, g, seed=seed)
        signs.append(sorted(np.sign(p.g_value) for p in rep.points))
    assert signs[0] == signs[1] == signs[2]


def test_certificate_parts():
    g = parse_polynomial("x", XY)
    tol = Tolerances()
    ok, sp_ = certify_point(CIRCLE, g, [1.0, 0.0], 1, tol)
    assert ok and sp_.jacobian_rank == 1
    # off the variety
    assert not certify_point(CIRCLE, g, [1.1, 0.0], 1, tol)[0]
    # g vanishes
    assert not certify_point(CIRCLE, g, [0.0, 1.0], 1, tol)[0]
    # rank deficient at the cusp of the lips
    assert not certify_point(LIPS, parse_polynomial("x - 2", XY), [0.0, 0.0], 1, tol)[0]
