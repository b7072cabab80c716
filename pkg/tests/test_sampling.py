import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from maxstable.measures import MaxStableLaw, standard_measure
from maxstable.rng import RngSpec
from maxstable.sampling import (BLOCK, add_point, configuration_max, extremal_scale, realization_rows,
                                sample_extremal_integral, sample_frechet, sample_gumbel, sample_max_id_functional,
                                sample_max_stable, sample_pareto, sample_sup_measure_points, sample_unit_scale,
                                sample_weibull, sample_with_direction_sampler, sup_measure_on_grid)


@given(st.floats(0.01, 0.99), st.sampled_from([0.5, 1.0, 2.0]), st.floats(0.1, 10.0))
def test_inverse_cdf_draws(u, alpha, sigma):
    z = float(sample_frechet(alpha, sigma, u=u))
    assert math.exp(-((z / sigma) ** -alpha)) == pytest.approx(u, rel=1e-12)
    g = float(sample_gumbel(u=u))
    assert math.exp(-math.exp(-g)) == pytest.approx(u, rel=1e-12)
    w = float(sample_weibull(-alpha, u=u))
    assert w < 0 and math.exp(-((-w) ** alpha)) == pytest.approx(u, rel=1e-12)
    p = float(sample_pareto(alpha, u=u))
    assert p ** (-alpha) == pytest.approx(u, rel=1e-12)


@pytest.mark.parametrize("bad", [
    lambda: sample_frechet(0.0, 1.0, u=0.5),
    lambda: sample_frechet(1.0, -1.0, u=0.5),
    lambda: sample_weibull(1.0, u=0.5),
    lambda: sample_pareto(-1.0, u=0.5),
])
def test_parameter_checks(bad):
    with pytest.raises(ValueError):
        bad()


def test_thread_count_does_not_change_draws():
    law = MaxStableLaw(1.0, standard_measure(3, "mixture", 0.3))
    n = 2 * BLOCK + 17
    a = sample_unit_scale(law, n, RngSpec(3), threads=1)
    b = sample_unit_scale(law, n, RngSpec(3), threads=3)
    assert np.array_equal(a, b)


def test_backends_give_same_draws():
    law = MaxStableLaw(1.0, standard_measure(2, "mixture", 0.3))
    a = sample_unit_scale(law, 5000, RngSpec(8), use_numba=True)
    b = sample_unit_scale(law, 5000, RngSpec(8), use_numba=False)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("kind", ["independence", "dependence", "mixture"])
def test_margins_are_unit_frechet(kind):
    law = MaxStableLaw(1.0, standard_measure(2, kind, 0.3 if kind == "mixture" else None))
    z = sample_max_stable(law, RngSpec(21), 20_000)
    for j in range(2):
        assert stats.kstest(z[:, j], stats.invweibull(1.0).cdf).pvalue > 1e-3


def test_branches_are_psi_images():
    nu = standard_measure(1, "independence")
    g = sample_max_stable(MaxStableLaw(0.0, nu), RngSpec(2), 20_000)[:, 0]
    assert stats.kstest(g, stats.gumbel_r.cdf).pvalue > 1e-3
    w = sample_max_stable(MaxStableLaw(-2.0, nu), RngSpec(2), 20_000)[:, 0]
    assert np.all(w < 0)
    assert stats.kstest(-w, stats.weibull_min(2.0).cdf).pvalue > 1e-3


def test_dependence_gives_equal_coordinates():
    z = sample_max_stable(MaxStableLaw(2.0, standard_measure(3, "dependence")), RngSpec(1), 100)
    assert np.allclose(z, z[:, :1])


@given(st.integers(0, 10_000), st.lists(st.floats(0.01, 5.0), min_size=1, max_size=5))
def test_stopping_rule_is_decisive(seed, incs):
    law = MaxStableLaw(1.5, standard_measure(3, "mixture", 0.3))
    z, real = sample_max_stable(law, RngSpec(seed), return_realization=True)
    assert real.truncation_count == len(real.radii)
    # once r <= min z no later point, on any atom, can raise the maximum
    gamma_stop = law.nu.mass * z.min() ** (-law.alpha)
    first = gamma_stop * (1 + 1e-12) - real.increments.sum()
    rng = np.random.default_rng(seed)
    atoms = rng.integers(0, law.nu.weights.size, len(incs) + 1)
    ext = real.extend(law, [first] + list(incs), atoms)
    # radii are recomputed vectorized, so allow last-bit rounding
    np.testing.assert_allclose(ext, z, rtol=1e-14, atol=0)


def test_realization_rows():
    law = MaxStableLaw(1.0, standard_measure(2, "independence"))
    z, real = sample_max_stable(law, RngSpec(0), return_realization=True)
    rows = realization_rows(real, law)
    assert len(rows) == real.truncation_count
    assert all(rows[i][1] >= rows[i + 1][1] for i in range(len(rows) - 1))
    assert np.allclose(z, np.max([[r[1] * u for u in r[3:]] for r in rows], axis=0))


def test_direction_sampler_route():
    eye = np.eye(2)

    def sampler(g, k):
        return eye[g.integers(0, 2, k)]

    z = sample_with_direction_sampler(1.0, 2.0, sampler, RngSpec(4), 20_000)
    assert stats.kstest(z[:, 1], stats.invweibull(1.0).cdf).pvalue > 1e-3
    with pytest.raises(ValueError):
        sample_with_direction_sampler(1.0, 1.0, lambda g, k: np.full((k, 1), 2.0), RngSpec(0), 5)


def test_max_id_functionals():
    empty = configuration_max(np.zeros((0, 2)))
    assert empty.empty and np.all(np.isneginf(empty.maximum))
    m = sample_max_id_functional([[1.0, 3.0], [2.0, 0.5]], f=lambda x: x.sum())
    assert m.value == 5.0
    assert np.array_equal(add_point(m, [0.0, 4.0]).maximum, [2.0, 4.0])


def test_extremal_integral_is_scaled_frechet():
    vals, brk = np.array([1.0, 3.0, 0.5]), np.array([0.0, 0.5, 1.0, 3.0])
    s = extremal_scale(vals, brk, 2.0)
    assert s == pytest.approx(math.sqrt(0.5 + 4.5 + 0.5))
    draws = sample_extremal_integral(vals, brk, 2.0, RngSpec(6), 20_000)
    assert stats.kstest(draws / s, stats.invweibull(2.0).cdf).pvalue > 1e-3
    with pytest.raises(ValueError):
        sup_measure_on_grid([0.0, 0.0], 1.0, RngSpec(0))


def test_sup_measure_point_count():
    counts = [sample_sup_measure_points(1.0, 2.0, 0.5, RngSpec(7, i)).radii.size for i in range(400)]
    # Poisson with mean T c^-alpha = 4
    assert abs(np.mean(counts) - 4.0) < 3 * math.sqrt(4.0 / 400)
