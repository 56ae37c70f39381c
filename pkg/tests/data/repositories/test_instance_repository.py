import numpy as np
import pytest

from app.data.repositories.instance_repository import FactorRepository, NoiseSpecRepository, ObservationRepository
from app.data.schemas.tensor_schema import FactorMatrix, ObservationSet
from app.domain.services.simulation_service import SimulationService
from app.exceptions.tensorciq_exceptions import InvalidInputException, MalformedFileException


@pytest.fixture
def observation_repository():
    return ObservationRepository()


def test_observations_file_layout(tmp_path, observation_repository):
    obs = ObservationSet.from_entries(3, 0.25, [[0, 1, 2], [0, 0, 0]], [0.1, -2.5])
    path = observation_repository.save(tmp_path / 'obs.txt', obs)
    assert path.read_text() == "# tensorciq-obs v1 d=3 p=0.25\n1 1 1 -2.5\n1 2 3 0.1\n"


def test_observations_load_canonicalizes_indices(tmp_path, observation_repository):
    path = tmp_path / 'obs.txt'
    path.write_bytes(b"# tensorciq-obs v1 d=3 p=0.5\n3 1 2 4.0\n\n2 2 1 1e-3\n")
    obs = observation_repository.load(path)
    np.testing.assert_array_equal(obs.triples, [[0, 1, 1], [0, 1, 2]])
    assert obs.get(1, 2, 3) == 4.0
    assert obs.p == 0.5


def test_saved_observations_load_back_bit_exact(tmp_path, observation_repository, random_observations):
    obs = random_observations(5, 0.4)
    loaded = observation_repository.load(observation_repository.save(tmp_path / 'obs.txt', obs))
    np.testing.assert_array_equal(loaded.triples, obs.triples)
    np.testing.assert_array_equal(loaded.values, obs.values)


@pytest.mark.parametrize("content, line", [
    (b"# tensorciq-obs v2 d=3 p=0.5\n", 1),
    (b"# tensorciq-obs v1 d=3 p=1.5\n", 1),
    (b"# tensorciq-obs v1 d=3 p=0.5\n1 1 1\n", 2),
    (b"# tensorciq-obs v1 d=3 p=0.5\n1 1 4 0.0\n", 2),
    (b"# tensorciq-obs v1 d=3 p=0.5\n1 1 x 0.0\n", 2),
    (b"# tensorciq-obs v1 d=3 p=0.5\n1 1 1 nan\n", 2),
    (b"# tensorciq-obs v1 d=3 p=0.5\n1 2 1 0.0\n2 1 1 1.0\n", 3),
])
def test_malformed_observations_report_the_line(tmp_path, observation_repository, content, line):
    path = tmp_path / 'obs.txt'
    path.write_bytes(content)
    with pytest.raises(MalformedFileException) as e:
        observation_repository.load(path)
    assert e.value.line_number == line


def test_truncated_file_reports_byte_offset(tmp_path, observation_repository):
    path = tmp_path / 'obs.txt'
    path.write_bytes(b"# tensorciq-obs v1 d=3 p=0.5\n1 1 1 2.0\n1 2 3 4.")
    with pytest.raises(MalformedFileException) as e:
        observation_repository.load(path)
    assert e.value.line_number == 3
    assert e.value.byte_offset == 39
    assert 'byte offset 39' in e.value.message


def test_missing_file_is_invalid_input(tmp_path, observation_repository):
    with pytest.raises(InvalidInputException):
        observation_repository.load(tmp_path / 'missing.txt')


def test_factor_file_is_column_major(tmp_path):
    repository = FactorRepository()
    factors = FactorMatrix.from_columns([1.0, 2.0, 3.0], [-0.5, 0.0, 0.1])
    path = repository.save(tmp_path / 'factors.txt', factors)
    assert path.read_text().splitlines() == ['# tensorciq-factors v1 d=3 r=2', '1.0', '2.0', '3.0', '-0.5', '0.0',
                                             '0.1']
    np.testing.assert_array_equal(repository.load(path).values, factors.values)


def test_factor_file_with_missing_values(tmp_path):
    path = tmp_path / 'factors.txt'
    path.write_text("# tensorciq-factors v1 d=2 r=1\n1.0\n")
    with pytest.raises(MalformedFileException):
        FactorRepository().load(path)


def test_noise_spec_file(tmp_path):
    repository = NoiseSpecRepository()
    spec = SimulationService.gen_noise_spec(3, 0.2, 1.5, seed=4)
    path = repository.save(tmp_path / 'noise.txt', spec)
    lines = path.read_text().splitlines()
    assert lines[0] == '# tensorciq-noise v1 d=3 sigma=0.2 beta=1.5'
    assert len(lines) == 1 + 10
    loaded = repository.load(path)
    np.testing.assert_array_equal(loaded.variances, spec.variances)


def test_noise_spec_file_out_of_order(tmp_path):
    path = tmp_path / 'noise.txt'
    path.write_text("# tensorciq-noise v1 d=1 sigma=1.0 beta=0.0\n2 1 1 1.0\n")
    with pytest.raises(MalformedFileException):
        NoiseSpecRepository().load(path)
