import numpy as np

from app.config.configuration import TensorCiqConfiguration
from app.data.schemas.instance_schema import Instance, InstanceConfig, NoiseSpec
from app.data.schemas.tensor_schema import DenseSymTensor, FactorMatrix, ObservationSet
from app.data.schemas.uq_schema import IncoherenceReport
from app.domain.tensor.indexing import canonical_triples, count_canonical
from app.exceptions.tensorciq_exceptions import InvalidInputException
from app.utils.logger import logger
from app.utils.seed_util import stream


class SimulationService:
    """Synthetic instances: Gaussian factors, Bernoulli masks and heteroscedastic Gaussian noise.

    Every random quantity comes from its own sub-stream of the master seed, so
    changing one stream never shifts another.
    """

    def __init__(self, configuration: TensorCiqConfiguration):
        self._configuration = configuration

    @staticmethod
    def gen_factors(d: int, r: int, seed: int) -> FactorMatrix:
        if r > d:
            raise InvalidInputException(f"rank r={r} exceeds dimension d={d}")
        rng = stream(seed, 'factors')
        return FactorMatrix(values=rng.standard_normal((d, r)))

    @staticmethod
    def sample_omega(d: int, p: float, seed: int) -> np.ndarray:
        """0-based canonical triples kept independently with probability p, in lexicographic order."""
        if not 0.0 <= p <= 1.0:
            raise InvalidInputException(f"sampling rate p={p} outside [0, 1]")
        triples = canonical_triples(d)
        if p == 0.0:
            return triples[:0].copy()
        keep = stream(seed, 'mask').random(triples.shape[0]) < p
        return triples[keep].copy()

    @staticmethod
    def gen_noise_spec(d: int, sigma: float, beta: float, seed: int) -> NoiseSpec:
        """sigma^2 w^beta / sum(w^beta) * d^3 / 6 with w ~ Unif(0, 1], one weight per canonical triple."""
        if sigma < 0 or beta < 0:
            raise InvalidInputException(f"noise needs sigma >= 0 and beta >= 0, got sigma={sigma}, beta={beta}")
        count = count_canonical(d)
        if beta == 0:
            weights = np.ones(count)
        else:
            # 1 - U[0, 1) keeps every weight strictly positive
            weights = (1.0 - stream(seed, 'weights').random(count)) ** beta
        variances = sigma ** 2 * weights / weights.sum() * (d ** 3 / 6.0)
        return NoiseSpec(d=d, sigma=sigma, beta=beta, variances=variances)

    def make_instance(self, cfg: InstanceConfig) -> Instance:
        truth = self.gen_factors(cfg.d, cfg.r, cfg.seed)
        noise_spec = self.gen_noise_spec(cfg.d, cfg.sigma, cfg.beta, cfg.seed)
        return self.observe(cfg, truth, noise_spec)

    def observe(self, cfg: InstanceConfig, truth: FactorMatrix, noise_spec: NoiseSpec) -> Instance:
        """Draws the mask and the noise from cfg.seed around a given truth and noise spec."""
        if truth.values.shape != (cfg.d, cfg.r) or noise_spec.d != cfg.d:
            raise InvalidInputException(f"truth {truth.values.shape} or noise d={noise_spec.d} does not match "
                                        f"d={cfg.d}, r={cfg.r}")
        noise_values = stream(cfg.seed, 'noise').standard_normal(count_canonical(cfg.d)) * np.sqrt(noise_spec.variances)
        noise = DenseSymTensor(d=cfg.d, canonical_values=noise_values)
        clean = DenseSymTensor.from_factors(truth)

        observed = self.sample_omega(cfg.d, cfg.p, cfg.seed)
        values = clean.restrict(observed) + noise.restrict(observed)
        observations = ObservationSet(d=cfg.d, p=cfg.p, observed=observed, observed_values=values)
        logger.info(f"Instance d={cfg.d} r={cfg.r} p={cfg.p} sigma={cfg.sigma} beta={cfg.beta}: "
                    f"{observations.size} of {count_canonical(cfg.d)} canonical entries observed")
        return Instance(config=cfg, truth=truth, observations=observations, noise_spec=noise_spec, noise=noise)

    @staticmethod
    def incoherence_report(factors: FactorMatrix) -> IncoherenceReport:
        u = factors.values
        d, r = u.shape
        dense = DenseSymTensor.from_factors(factors)
        inner = u.T @ u
        frobenius_sq = float(np.sum(inner ** 3))
        norms_sq = np.diag(inner)

        mu0 = d ** 3 * float(np.max(np.abs(dense.values))) ** 2 / frobenius_sq
        mu1 = float(np.max(d * np.max(u ** 2, axis=0) / norms_sq))
        if r > 1:
            cross = d * inner ** 2 / np.outer(norms_sq, norms_sq)
            mu2 = float(np.max(cross[~np.eye(r, dtype=bool)]))
        else:
            mu2 = 0.0
        strengths = norms_sq ** 1.5
        return IncoherenceReport(mu0=mu0, mu1=mu1, mu2=mu2,
                                 kappa=float(strengths.max() / strengths.min()),
                                 lambda_min=float(strengths.min()), lambda_max=float(strengths.max()))
