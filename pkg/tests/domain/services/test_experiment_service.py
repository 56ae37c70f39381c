import numpy as np
import pytest

from app.data.schemas.estimator_schema import EstimatorParams
from app.data.schemas.experiment_schema import AggregateReport, ExperimentConfig, TrialReport
from app.data.schemas.instance_schema import InstanceConfig
from app.domain.services.simulation_service import SimulationService
from app.domain.tensor.indexing import count_canonical, linear_keys
from app.exceptions.tensorciq_exceptions import (InitExhausted, InvalidInputException, NegativeVariance,
                                                 ServiceException)


def _config(d=6, r=1, p=1.0, sigma=0.0, beta=0.0, trials=2, **overrides):
    values = dict(instance=InstanceConfig(d=d, r=r, p=p, sigma=sigma, beta=beta, seed=0), alpha=0.05,
                  trials=trials, master_seed=2024)
    values.update(overrides)
    return ExperimentConfig(**values)


def _synthetic_report(index, rng, r, d, entries, hit_rate=0.95):
    factor_normalized = rng.standard_normal((r, d))
    entry_normalized = rng.standard_normal(entries)
    return TrialReport(trial_index=index,
                       factor_errors=(0.1 * factor_normalized).tolist(),
                       factor_normalized=factor_normalized.tolist(),
                       factor_oracle_normalized=factor_normalized.tolist(),
                       factor_hits=(rng.random((r, d)) < hit_rate).tolist(),
                       entry_errors=(0.1 * entry_normalized).tolist(),
                       entry_normalized=entry_normalized.tolist(),
                       entry_oracle_normalized=entry_normalized.tolist(),
                       entry_hits=(rng.random(entries) < hit_rate).tolist(),
                       l2_factor_sq=[0.5] * r, l2_tensor_sq=2.0,
                       factor_risk_theory=[0.25] * r, tensor_risk_theory=1.0,
                       factor_cr_bound=[0.2] * r, tensor_cr_bound=0.8)


def test_tracked_entries_cover_everything_when_requested(experiment_service):
    tracked = experiment_service.tracked_entries(_config(d=5, all_entries=True))
    assert tracked.shape == (count_canonical(5), 3)


def test_tracked_entries_sample_plus_pinned_locations(experiment_service):
    cfg = _config(d=20, entry_sample=10)
    tracked = experiment_service.tracked_entries(cfg)
    keys = linear_keys(tracked, 20)
    assert 10 <= tracked.shape[0] <= 13
    assert np.all(np.diff(keys) > 0)
    for pinned in ([0, 0, 0], [0, 0, 1], [0, 1, 2]):
        assert any(np.array_equal(row, pinned) for row in tracked)
    np.testing.assert_array_equal(tracked, experiment_service.tracked_entries(cfg))
    other = experiment_service.tracked_entries(cfg.model_copy(update={'master_seed': 7}))
    assert not np.array_equal(tracked, other)


def test_noiseless_trial_hits_everything(experiment_service):
    cfg = _config()
    report = experiment_service.run_trial(cfg, 0)
    assert not report.failed
    assert np.all(report.factor_hits)
    assert np.all(report.entry_hits)
    assert len(report.factor_hits) == 1 and len(report.factor_hits[0]) == 6
    assert len(report.entry_hits) == count_canonical(6)
    assert report.l2_tensor_sq < 1e-16
    assert report.tensor_cr_bound == 0.0


def test_trials_are_reproducible(experiment_service):
    cfg = _config(p=0.8, sigma=0.05, d=8, r=2)
    first = experiment_service.run_trial(cfg, 1)
    second = experiment_service.run_trial(cfg, 1)
    assert first.model_dump(exclude={'wall_time'}) == second.model_dump(exclude={'wall_time'})


def test_algorithmic_failure_is_recorded(experiment_service, mocker):
    mocker.patch.object(experiment_service._estimator, 'complete', side_effect=InitExhausted('no candidates'))
    report = experiment_service.run_trial(_config(), 3)
    assert report.failed
    assert report.trial_index == 3
    assert 'no candidates' in report.error


def test_aggregate_coverage_is_binomial(experiment_service, rng):
    cfg = _config(d=3, r=2, trials=400)
    entries = experiment_service.tracked_entries(cfg).shape[0]
    reports = [_synthetic_report(t, rng, 2, 3, entries) for t in range(400)]
    aggregate = experiment_service.aggregate(reports, cfg)
    assert aggregate.trials_ok == 400
    assert aggregate.failures == 0
    assert aggregate.mean_cr_factor == pytest.approx(0.95, abs=0.03)
    assert aggregate.mean_cr_entry == pytest.approx(0.95, abs=0.03)
    assert len(aggregate.factor_coverage) == 2 and len(aggregate.entry_coverage) == entries
    assert aggregate.ks_sizes['factor_pooled'] == 400 * 6
    assert aggregate.ks_stats['entry_pooled'] < 0.05
    assert {'factor_1_1', 'factor_1_2', 'factor_1_3', 'entry_1_1_1', 'entry_1_2_3'} <= set(aggregate.qq_points)
    assert {'factor_pooled_oracle', 'entry_pooled_oracle', 'factor_1_1_oracle'} <= set(aggregate.ks_stats)
    assert aggregate.ks_sizes['entry_pooled_oracle'] == aggregate.ks_sizes['entry_pooled']


def test_aggregate_excludes_failures_and_ignores_order(experiment_service, rng):
    cfg = _config(d=3, r=1, trials=5)
    entries = experiment_service.tracked_entries(cfg).shape[0]
    reports = [_synthetic_report(t, rng, 1, 3, entries) for t in range(4)]
    reports.append(TrialReport(trial_index=4, failed=True, error='boom'))
    aggregate = experiment_service.aggregate(reports, cfg)
    assert aggregate.trials_ok == 4
    assert aggregate.failed_trials == [4]
    assert experiment_service.aggregate(list(reversed(reports)), cfg) == aggregate


def test_aggregate_needs_one_successful_trial(experiment_service):
    with pytest.raises(ServiceException):
        experiment_service.aggregate([TrialReport(trial_index=0, failed=True, error='x')], _config(trials=1))


def test_risk_table(experiment_service, rng):
    cfg = _config(d=3, r=2, trials=3)
    entries = experiment_service.tracked_entries(cfg).shape[0]
    aggregate = experiment_service.aggregate([_synthetic_report(t, rng, 2, 3, entries) for t in range(3)], cfg)
    rows = experiment_service.risk_table(aggregate, cfg)
    assert [row.quantity for row in rows] == ['factor_1', 'factor_2', 'tensor']
    assert rows[0].ratio == pytest.approx(2.0)
    assert rows[2].ratio == pytest.approx(2.0)

    silent = aggregate.model_copy(update={'risk_theory_tensor': 0.0})
    assert np.isnan(experiment_service.risk_table(silent, cfg)[2].ratio)


def test_run_experiment_fails_when_every_trial_fails(experiment_service, mocker):
    mocker.patch.object(experiment_service._estimator, 'complete', side_effect=InitExhausted())
    with pytest.raises(ServiceException):
        experiment_service.run_experiment(_config(trials=2))


def test_run_experiment_is_independent_of_worker_count(experiment_service):
    cfg = _config(trials=2, p=0.9, sigma=0.01)
    reports, serial = experiment_service.run_experiment(cfg, jobs=1)
    _, parallel = experiment_service.run_experiment(cfg, jobs=2)
    assert [report.trial_index for report in reports] == [0, 1]
    assert isinstance(serial, AggregateReport)
    assert parallel == serial


def test_location_coverage_spread_matches_binomial(experiment_service, rng):
    cfg = _config(d=20, r=2, trials=100, entry_sample=400)
    entries = experiment_service.tracked_entries(cfg).shape[0]
    reports = [_synthetic_report(t, rng, 2, 20, entries) for t in range(100)]
    aggregate = experiment_service.aggregate(reports, cfg)
    assert aggregate.mean_cr_entry == pytest.approx(0.95, abs=0.01)
    assert 0.015 < aggregate.std_cr_entry < 0.03


def test_all_hits_give_perfect_coverage(experiment_service, rng):
    cfg = _config(d=3, r=1, trials=4)
    entries = experiment_service.tracked_entries(cfg).shape[0]
    aggregate = experiment_service.aggregate([_synthetic_report(t, rng, 1, 3, entries, hit_rate=2.0)
                                              for t in range(4)], cfg)
    assert (aggregate.mean_cr_factor, aggregate.std_cr_factor) == (1.0, 0.0)
    assert (aggregate.mean_cr_entry, aggregate.std_cr_entry) == (1.0, 0.0)


def test_trials_share_truth_and_redraw_noise(experiment_service):
    cfg = _config(d=7, r=2, p=0.6, sigma=0.2, beta=2.0)
    first = experiment_service.trial_instance(cfg, 0)
    second = experiment_service.trial_instance(cfg, 1)

    np.testing.assert_array_equal(first.truth.values, second.truth.values)
    np.testing.assert_array_equal(first.truth.values, SimulationService.gen_factors(7, 2, cfg.master_seed).values)
    np.testing.assert_array_equal(first.noise_spec.variances, second.noise_spec.variances)
    assert not np.array_equal(first.noise.values, second.noise.values)
    assert not np.array_equal(first.observations.triples, second.observations.triples)


def test_invariant_failures_are_recorded_per_trial(experiment_service, mocker):
    mocker.patch.object(experiment_service._uq, 'estimate_all_sigmas', side_effect=NegativeVariance('v=-1'))
    report = experiment_service.run_trial(_config(), 0)
    assert report.failed
    assert 'v=-1' in report.error


def test_validation_failures_are_recorded_per_trial(experiment_service, mocker):
    def invalid_params(*args, **kwargs):
        return EstimatorParams(L=0, eps_th=0.4, eta=1e-3, t0=1)

    mocker.patch.object(experiment_service._uq, 'estimate_all_sigmas', side_effect=invalid_params)
    report = experiment_service.run_trial(_config(), 2)
    assert report.failed
    assert report.trial_index == 2


def test_oracle_series_are_reported_separately(experiment_service, rng):
    cfg = _config(d=3, r=1, trials=50)
    entries = experiment_service.tracked_entries(cfg).shape[0]
    reports = []
    for t in range(50):
        report = _synthetic_report(t, rng, 1, 3, entries)
        # oracle-normalized errors twice as wide as the plug-in ones
        reports.append(report.model_copy(update={
            'factor_oracle_normalized': (2.0 * np.array(report.factor_normalized)).tolist(),
            'entry_oracle_normalized': (2.0 * np.array(report.entry_normalized)).tolist()}))
    aggregate = experiment_service.aggregate(reports, cfg)

    plugin = np.array(aggregate.qq_points['factor_pooled'])
    oracle = np.array(aggregate.qq_points['factor_pooled_oracle'])
    np.testing.assert_allclose(oracle[:, 0], plugin[:, 0])
    np.testing.assert_allclose(oracle[:, 1], 2.0 * plugin[:, 1])
    assert aggregate.ks_stats['entry_pooled_oracle'] > aggregate.ks_stats['entry_pooled']


def test_sigma_sweep_shares_truth_across_levels(experiment_service):
    points = experiment_service.run_sweep(_config(d=6, r=1, p=1.0, trials=2), [0.0, 0.01])
    assert [point.sigma for point in points] == [0.0, 0.01]
    assert [row.quantity for row in points[0].risk] == ['factor_1', 'tensor']
    assert points[0].aggregate.risk_theory_tensor == 0.0
    assert points[1].aggregate.risk_theory_tensor > 0.0
    assert points[0].aggregate.mean_cr_entry == 1.0


def test_sigma_sweep_rejects_negative_levels(experiment_service):
    with pytest.raises(InvalidInputException):
        experiment_service.run_sweep(_config(), [0.1, -0.1])
    with pytest.raises(InvalidInputException):
        experiment_service.run_sweep(_config(), [])


@pytest.mark.slow
def test_trial_at_reference_scale_covers_entries(experiment_service):
    cfg = ExperimentConfig(instance=InstanceConfig(d=100, r=4, p=0.2, sigma=0.1, beta=5.0, seed=11),
                           alpha=0.05, trials=1, master_seed=11)
    report = experiment_service.run_trial(cfg, 0)
    assert not report.failed
    assert 0.90 <= float(np.mean(report.entry_hits)) <= 0.99
