import os

os.environ["APP_ENV"] = "test"

import numpy as np
import pytest

from app.config.configuration import TensorCiqConfiguration
from app.data.schemas.tensor_schema import FactorMatrix, ObservationSet
from app.domain.services.estimator_service import EstimatorService
from app.domain.services.experiment_service import ExperimentService
from app.domain.services.simulation_service import SimulationService
from app.domain.services.uq_service import UncertaintyService
from app.domain.tensor.indexing import canonical_triples


@pytest.fixture
def configuration():
    return TensorCiqConfiguration()


@pytest.fixture
def simulation_service(configuration):
    return SimulationService(configuration)


@pytest.fixture
def estimator_service(configuration):
    return EstimatorService(configuration)


@pytest.fixture
def uq_service(configuration):
    return UncertaintyService(configuration)


@pytest.fixture
def experiment_service(configuration, simulation_service, estimator_service, uq_service):
    return ExperimentService(configuration, simulation_service, estimator_service, uq_service)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def random_factors(rng):
    def build(d, r):
        return FactorMatrix(values=rng.standard_normal((d, r)))

    return build


@pytest.fixture
def random_observations(rng):
    """Random values on a random mask that always keeps at least one triple."""

    def build(d, p):
        triples = canonical_triples(d)
        keep = rng.random(triples.shape[0]) < p
        keep[0] = True
        return ObservationSet(d=d, p=p, observed=triples[keep], observed_values=rng.standard_normal(keep.sum()))

    return build
