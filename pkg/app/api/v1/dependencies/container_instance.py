from app.api.v1.dependencies.dependencies_container import Container

c = Container()


def get_configuration():
    return c.configuration()


def get_simulation_service():
    return c.simulation_service()


def get_estimator_service():
    return c.estimator_service()


def get_uq_service():
    return c.uq_service()


def get_experiment_service():
    return c.experiment_service()


def get_observation_repository():
    return c.observation_repository()


def get_factor_repository():
    return c.factor_repository()


def get_noise_spec_repository():
    return c.noise_spec_repository()


def get_result_repository():
    return c.result_repository()
