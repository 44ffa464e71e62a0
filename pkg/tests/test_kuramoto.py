import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from realsmooth.kuramoto import (count_real_equilibria, kuramoto_system, kuramoto_variables, omega_bound,
                                 sample_omega, survey)
from realsmooth.solve import total_degree_start


def angle_oracle(n, omega, grid=14, iters=60):
    """Count nonsingular equilibria by multistart Newton directly in the angles."""
    m = n - 1
    omega = np.asarray(omega, dtype=float)
    axes = [np.linspace(-np.pi, np.pi, grid, endpoint=False) + 0.1] * m
    th = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, m)
    idx = np.arange(m)

    def residual_jac(th):
        full = np.concatenate([th, np.zeros((len(th), 1))], 1)
        d = full[:, :m, None] - full[:, None, :]
        C = np.cos(d)
        J = C[:, :, :m] / n
        J[:, idx, idx] = -(C.sum(-1) - 1) / n
        return omega - np.sin(d).sum(-1) / n, J

    for _ in range(iters):
        r, J = residual_jac(th)
        th = th - (np.linalg.pinv(J) @ r[..., None])[..., 0]
    r, J = residual_jac(th)
    ok = (np.abs(r).max(1) < 1e-12) & (np.abs(np.linalg.det(J)) > 1e-8)
    reps = []
    for t in np.angle(np.exp(1j * th[ok])):
        if all(np.abs(np.angle(np.exp(1j * (t - q)))).max() > 1e-6 for q in reps):
            reps.append(t)
    return len(reps)


def test_variables_and_degrees():
    F = kuramoto_system(4, [0.1, 0.2, -0.1])
    assert F.registry == kuramoto_variables(4) == ("s1", "s2", "s3", "c1", "c2", "c3")
    assert len(F) == 6 and F.degrees() == [2] * 6
    assert len(total_degree_start(F)[1]) == 64


def test_synchronized_state_is_a_solution():
    # all phases equal: s = 0, c = 1
    F = kuramoto_system(4, [0.0, 0.0, 0.0])
    assert np.allclose(F.evaluate([0, 0, 0, 1, 1, 1]), 0)


def test_rejects_unsupported_n():
    with pytest.raises(ValueError):
        kuramoto_system(5, [0.0] * 4)
    with pytest.raises(ValueError):
        kuramoto_system(4, [0.0, 0.0])


def test_solutions_are_on_the_circles():
    res = count_real_equilibria(4, [0.05, -0.02, 0.01], seed=0)
    for x in res.real_solutions:
        s, c = x[:3], x[3:]
        assert np.allclose(s**2 + c**2, 1, atol=1e-10)


@pytest.mark.parametrize("omega", [[0.0, 0.0], [0.05, -0.02], [0.3, -0.1], [0.244, 0.246], [-0.5, 0.1]])
def test_three_oscillators_match_angle_oracle(omega):
    assert count_real_equilibria(3, omega, seed=1).count == angle_oracle(3, omega)


# frozen from the angle oracle (grid 14, 60 Newton steps)
@pytest.mark.parametrize("omega, expected", [
    ([0.0, 0.0, 0.0], 5),
    ([0.05, -0.02, 0.01], 8),
    ([0.3, -0.1, 0.05], 4),
    ([0.012, -0.171, -0.357], 2),
])
def test_four_oscillators_frozen_oracle(omega, expected):
    assert count_real_equilibria(4, omega, seed=1).count == expected


def test_out_of_box_has_no_equilibria():
    assert omega_bound(4) == 0.75
    assert count_real_equilibria(4, [0.9, -0.3, 0.1], seed=0).count == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([3, 4]))
def test_sampled_omegas_stay_in_box(seed, n):
    w = sample_omega(n, np.random.default_rng(seed))
    full = np.append(w, -w.sum())
    assert np.all(np.abs(full) <= omega_bound(n))


def test_count_is_gamma_invariant():
    w = [0.05, -0.02, 0.01]
    counts = {count_real_equilibria(4, w, seed=s).count for s in (0, 1, 2)}
    assert counts == {8}


def test_survey_small():
    sv = survey(3, 4, seed=0, recheck=True)
    assert len(sv.per_sample_counts) == 4
    assert sv.gamma_invariant
    assert sv.max_observed <= 6
    d = sv.as_dict()
    assert d["gamma_invariant"] is True and d["samples"] == 4


def test_survey_is_reproducible():
    a = survey(3, 3, seed=7)
    b = survey(3, 3, seed=7)
    assert a.per_sample_counts == b.per_sample_counts
    assert all(np.array_equal(x, y) for x, y in zip(a.omegas, b.omegas))
