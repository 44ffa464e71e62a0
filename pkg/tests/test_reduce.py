import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from realsmooth.parsing import parse_polynomial, parse_system
from realsmooth.poly import Polynomial, PolySystem
from realsmooth.reduce import BOUND_NAME, SemiAlgebraicInput, embed_bounded, lift_inequalities


def S(vars_, eqs=(), gts=()):
    return SemiAlgebraicInput(vars_, [parse_polynomial(e, vars_) for e in eqs],
                              [parse_polynomial(q, vars_) for q in gts])


def test_lift_without_inequalities():
    F = lift_inequalities(S(("x",), ["x - 1"]))
    assert F.registry == ("x",)
    assert F.polys == (parse_polynomial("x - 1", ("x",)),)


def test_lift_single_inequality():
    F = lift_inequalities(S(("x",), [], ["x"]))
    assert F.registry == ("x", "z1")
    assert F.polys[0] == parse_polynomial("z1^2*x - 1", ("x", "z1"))


def test_lift_semicircle():
    F = lift_inequalities(S(("x", "y"), ["x^2 + y^2 - 1"], ["y"]))
    reg = ("x", "y", "z1")
    assert list(F.polys) == [parse_polynomial("x^2+y^2-1", reg), parse_polynomial("z1^2*y - 1", reg)]
    # a point of the open upper semicircle lifts
    th = 1.1
    x, y = np.cos(th), np.sin(th)
    assert np.allclose(F.evaluate([x, y, 1 / np.sqrt(y)]), 0)


def test_lift_avoids_name_clash():
    F = lift_inequalities(S(("z1", "x"), [], ["x", "z1"]))
    assert len(set(F.registry)) == 4
    assert F.registry[:2] == ("z1", "x")


def test_lift_registry_mismatch():
    with pytest.raises(ValueError):
        SemiAlgebraicInput(("x", "y"), [parse_polynomial("x", ("x",))])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_lifted_inequalities_positive(seed):
    # a real solution of z^2 q - 1 = 0 has q = 1/z^2 > 0
    rng = np.random.default_rng(seed)
    reg = ("x", "y")
    qs = [Polynomial.linear(rng.normal(size=2), rng.normal(), reg) for _ in range(2)]
    F = lift_inequalities(SemiAlgebraicInput(reg, [], qs))
    xy = rng.normal(size=2)
    vals = [q.eval(xy).real for q in qs]
    if min(vals) <= 0:
        return
    z = 1 / np.sqrt(vals)
    point = np.concatenate([xy, z])
    assert np.allclose(F.evaluate(point), 0, atol=1e-12)
    for q in qs:
        assert q.eval(point[:2]).real >= 1 / np.max(z) ** 2 - 1e-12


def test_embed_line():
    F = embed_bounded(parse_system(["x"], ("x",)), [0.0], 4.0)
    assert F.registry == ("x", BOUND_NAME)
    assert F.polys[1] == parse_polynomial(f"x^2 + {BOUND_NAME}^2 - 4", F.registry)
    for w in (2.0, -2.0):
        assert np.allclose(F.evaluate([0.0, w]), 0)


def test_embed_empty_system_gives_circle():
    F = embed_bounded(PolySystem([], ("x",)), [0.0], 1.0)
    assert list(F.polys) == [parse_polynomial(f"x^2 + {BOUND_NAME}^2 - 1", F.registry)]


def test_embed_whitney_handle():
    F = embed_bounded(parse_system(["x^2 - y^2*z"], ("x", "y", "z")), [0, 0, -1], 0.25)
    assert F.polys[1] == parse_polynomial(f"x^2 + y^2 + (z + 1)^2 + {BOUND_NAME}^2 - 1/4", F.registry)
    assert F.registry[-1] == BOUND_NAME


def test_embed_rejects_bad_delta():
    with pytest.raises(ValueError):
        embed_bounded(parse_system(["x"], ("x",)), None, 0.0)
    with pytest.raises(ValueError):
        embed_bounded(parse_system(["x"], ("x",)), [0.0, 1.0], 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_embedded_lift_of_a_root(seed):
    rng = np.random.default_rng(seed)
    # a random line through a random point p, embedded around a random center
    p = rng.normal(size=2)
    d = rng.normal(size=2)
    reg = ("x", "y")
    F = PolySystem([Polynomial.linear([d[1], -d[0]], -(d[1] * p[0] - d[0] * p[1]), reg)], reg)
    q = p + rng.normal(size=2) * 0.3
    delta = float(np.sum((p - q) ** 2)) + rng.uniform(0.1, 2.0)
    E = embed_bounded(F, q, delta)
    w = np.sqrt(delta - np.sum((p - q) ** 2))
    assert np.max(np.abs(E.evaluate([p[0], p[1], w]))) <= 1e-12 * (1 + delta)
