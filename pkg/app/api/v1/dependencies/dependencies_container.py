from dependency_injector import containers, providers

from app.config.configuration import TensorCiqConfiguration
from app.data.repositories.instance_repository import FactorRepository, NoiseSpecRepository, ObservationRepository
from app.data.repositories.result_repository import ResultRepository
from app.domain.services.estimator_service import EstimatorService
from app.domain.services.experiment_service import ExperimentService
from app.domain.services.simulation_service import SimulationService
from app.domain.services.uq_service import UncertaintyService


class Container(containers.DeclarativeContainer):
    configuration = providers.Singleton(TensorCiqConfiguration)
    observation_repository = providers.Singleton(ObservationRepository)
    factor_repository = providers.Singleton(FactorRepository)
    noise_spec_repository = providers.Singleton(NoiseSpecRepository)
    result_repository = providers.Singleton(ResultRepository)

    simulation_service = providers.Factory(
        SimulationService,
        configuration
    )

    estimator_service = providers.Factory(
        EstimatorService,
        configuration
    )

    uq_service = providers.Factory(
        UncertaintyService,
        configuration
    )

    experiment_service = providers.Factory(
        ExperimentService,
        configuration=configuration,
        simulation_service=simulation_service,
        estimator_service=estimator_service,
        uq_service=uq_service
    )
