import numpy as np
import pytest

from curveq.errors import ConfigError, DomainError
from curveq.fitting import fit
from curveq.scenarios import (
    CASE_STUDY_THETA1,
    CASE_STUDY_THETA2,
    SCENARIO2_NOMINAL_MAX_DIFF,
    SCENARIO_NAMES,
    case_study,
    get_scenario,
    scenario1,
    scenario3,
    scenario4,
)
from curveq.simulation import (
    default_workers,
    generate_data,
    replication_rng,
    run_coverage_study,
    run_replications,
    run_size_power_study,
)


def test_identical_seeds_give_identical_data():
    s = scenario3(1.0, 1.0, 150)
    a = generate_data(s, replication_rng(5, 3))
    b = generate_data(s, replication_rng(5, 3))
    for x, y in zip(a, b):
        for r, q in zip(x.responses, y.responses):
            assert r.tobytes() == q.tobytes()
    c = generate_data(s, replication_rng(5, 4))
    assert c[0].responses[0].tobytes() != a[0].responses[0].tobytes()


def test_zero_variance_limit_returns_model_values():
    s = scenario4(sigma2=1e-300, n=30)
    ds1, ds2 = generate_data(s, replication_rng(0, 0))
    for ds, model, theta in ((ds1, s.model1, s.theta1), (ds2, s.model2, s.theta2)):
        for d, r in zip(ds.dose_levels, ds.responses):
            np.testing.assert_allclose(r, model.evaluate(theta, d), atol=1e-140)


@pytest.mark.slow
def test_pooled_residual_variance_matches_sigma2():
    s = scenario1(1.0, sigma2=2.0, n=150)
    ss, count = 0.0, 0
    for i in range(2000):
        ds1, ds2 = generate_data(s, replication_rng(9, i))
        for ds, model, theta in ((ds1, s.model1, s.theta1), (ds2, s.model2, s.theta2)):
            d, y = ds.long()
            ss += float(np.sum((y - model.evaluate(theta, d)) ** 2))
            count += y.size
    assert ss / count == pytest.approx(2.0, rel=0.05)


def test_study_is_reproducible():
    s = scenario1(2.0, 1.0, 30)
    a = run_coverage_study(s, 100, 0.05, seed=3, workers=1)
    b = run_coverage_study(s, 100, 0.05, seed=3, workers=1)
    assert a == b


def test_worker_count_does_not_change_results():
    s = scenario3(1.0, 1.0, 30)
    a = run_replications(s, 40, "med_diff", seed=1, workers=1)
    b = run_replications(s, 40, "med_diff", seed=1, workers=2)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.failures == b.failures


def test_summary_fields():
    s = scenario1(3.0, 1.0, 150)
    reps = run_replications(s, 200, seed=4, alphas=(0.05, 0.1), workers=1)
    cov = reps.coverage(0.05)
    rej = reps.rejection_rate(0.1, 3.0)
    assert cov.measure == "coverage" and rej.measure == "rejection_rate"
    assert cov.valid + cov.failed == cov.replications == 200
    assert 0 <= cov.coverage <= 1 and 0 <= rej.rejection_rate <= 1
    assert cov.mc_se == pytest.approx(np.sqrt(cov.estimate * (1 - cov.estimate) / cov.valid))
    with pytest.raises(AttributeError):
        cov.rejection_rate
    with pytest.raises(DomainError):
        reps.coverage(0.2)


def test_coverage_and_rejection_are_complementary_at_truth():
    # rejecting at delta = truth means the interval for the maximum lies below it
    s = scenario1(3.0, 1.0, 150)
    reps = run_replications(s, 300, seed=8, workers=1)
    cov = reps.coverage(0.05).estimate
    rej = reps.rejection_rate(0.05, 3.0).estimate
    assert cov + rej == pytest.approx(1.0, abs=1e-12)


def test_med_study_needs_clinical_effect():
    with pytest.raises(DomainError):
        run_replications(scenario1(), 10, "med_diff")


def test_unknown_kind():
    with pytest.raises(DomainError):
        run_replications(scenario1(), 10, "median")


def test_size_power_study_runs():
    s = scenario3(1.0, 1.0, 150)
    r = run_size_power_study(s, 50, 0.05, margin=1.0, kind="med_diff", seed=2, workers=1)
    assert r.rejection_rate > 0.9


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("CURVEQ_THREADS", "1")
    assert default_workers() == 1
    monkeypatch.setenv("CURVEQ_THREADS", "many")
    with pytest.raises(DomainError):
        default_workers()


@pytest.mark.parametrize("h", [1, 2, 3, 4, 5])
def test_scenario2_maxima_near_published(h):
    s = get_scenario(f"scenario2-h{h}")
    delta, dose = SCENARIO2_NOMINAL_MAX_DIFF[h]
    # published parameters are rounded, so the maxima match to about 0.005
    assert s.true_max_diff == pytest.approx(delta, abs=0.005)


def test_scenario2_reference_pair_is_identical():
    assert get_scenario("scenario2-h0").true_max_diff == 0.0


def test_scenario3_true_med_difference_is_zero():
    assert scenario3(2.0, 1.0, 150).true_med_diff == pytest.approx(0.0, abs=1e-12)


def test_scenario4_true_meds():
    s = scenario4(1.6)
    assert s.true_med_diff == pytest.approx(4 / 3 - 2)


def test_case_study_meds_on_unit_scale():
    s = case_study()
    assert s.theta1 == CASE_STUDY_THETA1 and s.theta2 == CASE_STUDY_THETA2
    m1 = s.model1.inverse(s.theta1, s.model1.evaluate(s.theta1, 0) - 3)
    m2 = s.model2.inverse(s.theta2, s.model2.evaluate(s.theta2, 0) - 3)
    assert (m1, m2) == pytest.approx((0.073, 0.176), abs=1e-3)
    assert s.n1 + s.n2 == 7 * 50


def test_case_study_regenerated_fit():
    s = case_study()
    ds1, ds2 = generate_data(s, replication_rng(2018, 0))
    f1, f2 = fit(ds1, s.model1), fit(ds2, s.model2)
    assert f1.converged and f2.converged
    assert f1.n_total + f2.n_total == 350


def test_catalog_names_resolve():
    for name in SCENARIO_NAMES:
        assert get_scenario(name).name
    with pytest.raises(ConfigError):
        get_scenario("scenario9")
    with pytest.raises(ConfigError):
        scenario1(n=31)
