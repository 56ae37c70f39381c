from app.config.configuration import TensorCiqConfiguration


def test_configuration_is_a_singleton_per_environment():
    assert TensorCiqConfiguration() is TensorCiqConfiguration()
    assert TensorCiqConfiguration().app_env == 'test'


def test_sections_are_typed(configuration):
    estimator = configuration.estimator
    assert estimator['restart_exponent'] == 2
    assert estimator['orbit_size'] == 6
    assert estimator['early_stop'] is False
    assert estimator['step_rule'] == 'calibrated'
    assert estimator['step_reference_norm'] == 10.0
    assert configuration.uq['exhaustive_permutation_max_r'] == 8
    assert configuration.uq['negative_variance_tol'] == 1e-12


def test_harness_locations_are_parsed(configuration):
    harness = configuration.harness
    assert harness['qq_factor_locations'] == [(1, 1), (1, 2), (1, 3)]
    assert harness['qq_entry_locations'] == [(1, 1, 1), (1, 1, 2), (1, 2, 3)]
    assert harness['hit_tolerance'] == 1e-9
    assert configuration.tool_version == '1.0.0'
