import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxstable.fields import catalog, coordinate_sum, positive_catalog
from maxstable.generator import GeneratorContext, center
from maxstable.identities import (FAIL, INCONCLUSIVE, PASS, RANDOMIZED_SUITES, SUITES, chaos_expansion_1d,
                                  chaos_remainder, equality, frechet_source, inequality, integrability_constant,
                                  iterated_gradient_bruteforce, log_variance, max_stable_source, run_suite,
                                  second_order_poincare_1d, standardize, stein_status, verify_covariance_1d,
                                  verify_frechet_cov, verify_log_sobolev_1d, verify_poincare, verify_stein,
                                  wasserstein_to_normal)
from maxstable.measures import MaxStableLaw, standard_measure
from maxstable.rng import RngSpec

# 30-digit mpmath evaluations (alpha = 1 unless noted)
COV_LOG_INV1P = -0.265965385032409180625
ID1_INV1P_ATANLOG_A2 = 0.0422339869912344426074
CHAOS_DIRECT = 0.796599599297053134284
CHAOS_S8 = 0.796596404004105942959
ENT_1P_RATIO = 0.0151251496705843671434
LSI_RHS_1P_RATIO = 0.0217654435643566712964
POINCARE_INV1P_RHS = 0.0644165922583757130914
POINCARE_INV1P_VAR = 0.0480224611269750142598

LAW1 = MaxStableLaw(1.0, standard_measure(1, "independence"))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_log_variance(alpha):
    assert log_variance(alpha) == pytest.approx(math.pi**2 / (6 * alpha**2), abs=1e-12)


def test_integrability_constant():
    assert integrability_constant() == pytest.approx(math.pi**2 / 6, abs=1e-12)


def test_covariance_frozen():
    rep = verify_covariance_1d(1.0, catalog("log"), catalog("inv1p"))
    assert rep.passed
    assert rep.lhs == pytest.approx(COV_LOG_INV1P, abs=1e-11)
    assert rep.rhs == pytest.approx(COV_LOG_INV1P, abs=1e-9)


def test_covariance_negative_control():
    rep = verify_covariance_1d(1.0, catalog("log"), catalog("log"), rhs_alpha=2.0)
    assert not rep.passed and rep.status == FAIL


def test_frechet_cov_id1_frozen():
    rep = verify_frechet_cov(2.0, catalog("inv1p"), catalog("atanlog"), "id1")
    assert rep.passed
    assert rep.lhs == pytest.approx(ID1_INV1P_ATANLOG_A2, abs=1e-10)
    assert rep.rhs == pytest.approx(ID1_INV1P_ATANLOG_A2, abs=1e-10)


def test_frechet_cov_checks():
    with pytest.raises(ValueError):
        verify_frechet_cov(1.0, catalog("h_z:1"), catalog("log"))
    with pytest.raises(ValueError, match="not centered"):
        verify_frechet_cov(1.0, catalog("inv1p"), catalog("log"), "id2")
    with pytest.raises(ValueError):
        verify_frechet_cov(1.0, catalog("inv1p"), catalog("log"), "id3")


@pytest.mark.slow
def test_frechet_cov_id2():
    ctx = GeneratorContext.univariate(1.0)
    rep = verify_frechet_cov(1.0, center(ctx, catalog("inv1p")), catalog("log"), "id2")
    assert rep.passed


@pytest.mark.parametrize("dm, se, n, want", [
    (0.0, 1.0, 1000, PASS), (3.0, 1.0, 1000, PASS), (4.0, 1.0, 1000, INCONCLUSIVE),
    (5.01, 1.0, 1000, FAIL), (0.0, 1.0, 99, INCONCLUSIVE), (0.0, float("nan"), 1000, INCONCLUSIVE),
])
def test_stein_status(dm, se, n, want):
    assert stein_status(dm, se, n) == want


def test_stein_positive_and_negative():
    one = standard_measure(1, "independence")
    ok = verify_stein(frechet_source(1.0, 1.0), one, catalog("log"), 20_000, RngSpec(1))
    assert ok.status == PASS
    bad = verify_stein(frechet_source(1.0, 2.0), one, catalog("log"), 20_000, RngSpec(2))
    # E <Z, f'(Z)> = 1 against E D f(Z) = E 1/Z = 1/2
    assert bad.status == FAIL and bad.lhs == pytest.approx(1.0) and bad.rhs == pytest.approx(0.5, abs=0.02)


def test_stein_bivariate():
    nu = standard_measure(2, "mixture", 0.3)
    rep = verify_stein(max_stable_source(MaxStableLaw(1.0, nu)), nu, coordinate_sum(catalog("log"), 2), 10_000,
                       RngSpec(3))
    assert rep.status == PASS


def test_stein_rejects_bad_sources():
    one = standard_measure(1, "independence")
    with pytest.raises(ValueError):
        verify_stein(np.array([1.0, -1.0, 2.0]), one, catalog("log"))
    rep = verify_stein(np.array([1.0, 2.0, 3.0]), one, catalog("log"))
    assert rep.status == INCONCLUSIVE


def test_poincare_quadrature_frozen():
    rep = verify_poincare(LAW1, catalog("inv1p"))
    assert rep.passed and rep.slack > 0
    assert rep.lhs == pytest.approx(POINCARE_INV1P_VAR, abs=1e-11)
    assert rep.rhs == pytest.approx(POINCARE_INV1P_RHS, abs=1e-11)
    assert rep.extra["rhs_alt"] == pytest.approx(POINCARE_INV1P_RHS, abs=1e-9)


def test_poincare_mc_d2():
    law = MaxStableLaw(1.0, standard_measure(2, "mixture", 0.3))
    rep = verify_poincare(law, coordinate_sum(catalog("inv1p"), 2), "mc", n=20_000, rng=RngSpec(4))
    assert rep.passed
    with pytest.raises(ValueError):
        verify_poincare(law, coordinate_sum(catalog("inv1p"), 2))


def test_log_sobolev_frozen():
    rep = verify_log_sobolev_1d(1.0, positive_catalog()[0])
    assert rep.passed
    assert rep.lhs == pytest.approx(ENT_1P_RATIO, abs=1e-11)
    assert rep.rhs == pytest.approx(LSI_RHS_1P_RATIO, abs=1e-11)


def test_log_sobolev_rejects_nonpositive():
    with pytest.raises(ValueError, match="not positive"):
        verify_log_sobolev_1d(1.0, catalog("log"))


def test_chaos_frozen():
    res = chaos_expansion_1d(1.0, catalog("log"), 1.0, 1.0, 24)
    assert res.direct == pytest.approx(CHAOS_DIRECT, abs=1e-12)
    assert res.partial_sums[8] == pytest.approx(CHAOS_S8, abs=1e-12)
    assert res.errors[24] <= 1e-8
    assert res.terms_needed(1e-8) is not None and res.terms_needed(1e-8) > 8
    pred = chaos_remainder(1.0, catalog("log"), 1.0, 1.0, 8)
    assert res.partial_sums[8] + pred == pytest.approx(CHAOS_DIRECT, abs=1e-10)


@given(st.floats(0.2, 5.0), st.floats(0.2, 3.0))
def test_chaos_constant_weights(x, sigma):
    res = chaos_expansion_1d(1.0, catalog("const1"), x, sigma, 60)
    assert res.weights.sum() == pytest.approx(1.0, abs=1e-10)
    assert res.partial_sums[-1] == pytest.approx(1.0, abs=1e-10)


def test_chaos_converges_off_unit_scale():
    res = chaos_expansion_1d(2.0, catalog("inv1p"), 0.7, 1.3, 30)
    assert res.errors[-1] <= 1e-10


@given(st.floats(0.1, 10.0), st.lists(st.floats(0.1, 10.0), min_size=1, max_size=5))
def test_iterated_gradients(x, radii):
    resid, brute, closed = iterated_gradient_bruteforce(catalog("atanlog"), x, radii)
    assert resid <= 1e-12


def test_standardize_guard():
    with pytest.raises(ValueError, match="zero variance"):
        standardize(1.0, catalog("const1"))
    st_ = standardize(1.0, catalog("log"))
    assert st_.mean == pytest.approx(0.5772156649015329, abs=1e-12)
    assert st_.sd == pytest.approx(math.pi / math.sqrt(6), abs=1e-12)


def test_wasserstein_exact():
    # one atom at 0: int |1{x >= 0} - Phi| = 2 * phi(0) = sqrt(2 / pi)
    assert wasserstein_to_normal([0.0]) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    from scipy.stats import norm, wasserstein_distance
    g = np.random.Generator(np.random.Philox(9))
    s = g.normal(size=2000)
    big = norm.ppf((np.arange(200_000) + 0.5) / 200_000)
    assert wasserstein_to_normal(s) == pytest.approx(wasserstein_distance(s, big), abs=2e-4)


def test_second_order_small():
    rep = second_order_poincare_1d(1.0, catalog("inv1p"), 50_000, RngSpec(5))
    assert rep.passed
    g = [rep.extra[k] for k in ("gamma_1", "gamma_2", "gamma_3")]
    assert all(v > 0 for v in g)


def test_reports_serialize():
    e = equality("x", 1.0, 1.0 + 1e-9, 1e-8, "m")
    i = inequality("y", 1.0, 2.0, 0.0, "m", note=np.float64(3.0))
    assert e.passed and e.slack > 0 and i.slack == 1.0
    assert json.loads(i.to_json())["extra"]["note"] == 3.0


def test_run_suite_checks():
    with pytest.raises(KeyError):
        run_suite("nope")
    for nm in RANDOMIZED_SUITES:
        with pytest.raises(ValueError, match="seed"):
            run_suite(nm)
    assert set(SUITES) >= {"stein", "covariance", "poincare", "logsobolev", "commutators", "chaos", "secondorder"}


@pytest.mark.parametrize("name", ["chaos", "logsobolev"])
def test_fast_suites_as_expected(name):
    items = run_suite(name, quick=True)
    assert all(it.as_expected for it in items)
    assert any(not it.expect_pass for it in items)
