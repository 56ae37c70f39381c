import numpy as np
from pydantic import Field, field_validator, model_validator

from app.data.schemas.schema_base import ConfigModel, DomainModel, frozen_array
from app.data.schemas.tensor_schema import DenseSymTensor, FactorMatrix, ObservationSet
from app.domain.tensor.indexing import canonical_triples, count_canonical, linear_keys


class InstanceConfig(ConfigModel):
    d: int = Field(..., ge=1, examples=[100])
    r: int = Field(..., ge=1, examples=[4])
    p: float = Field(..., gt=0.0, le=1.0, examples=[0.2])
    sigma: float = Field(..., ge=0.0, examples=[0.1])
    beta: float = Field(..., ge=0.0, examples=[5])
    seed: int = Field(..., ge=0, lt=2 ** 64, examples=[1])

    @model_validator(mode='after')
    def _check_rank(self):
        if self.r > self.d:
            raise ValueError(f'r={self.r} exceeds d={self.d}')
        return self


class NoiseSpec(DomainModel):
    """Per-orbit noise variances over all canonical triples, in canonical order."""
    d: int = Field(..., ge=1)
    sigma: float = Field(..., ge=0.0)
    beta: float = Field(..., ge=0.0)
    variances: np.ndarray

    @field_validator('variances', mode='before')
    @classmethod
    def _as_variances(cls, v):
        return frozen_array(np.asarray(v, dtype=float).reshape(-1))

    @model_validator(mode='after')
    def _check_variances(self):
        if self.variances.shape[0] != count_canonical(self.d):
            raise ValueError(f'expected {count_canonical(self.d)} variances, got {self.variances.shape[0]}')
        if np.any(self.variances < 0) or not np.all(np.isfinite(self.variances)):
            raise ValueError('noise variances must be finite and non-negative')
        if self.sigma > 0 and np.any(self.variances <= 0):
            raise ValueError('noise variances must be positive when sigma > 0')
        return self

    @property
    def sigma_min(self) -> float:
        return float(np.sqrt(self.variances.min()))

    @property
    def sigma_max(self) -> float:
        return float(np.sqrt(self.variances.max()))

    def variance_at(self, i: int, j: int, k: int) -> float:
        """Variance at any permutation of the 1-based triple."""
        a, b, c = sorted((i - 1, j - 1, k - 1))
        keys = linear_keys(canonical_triples(self.d), self.d)
        return float(self.variances[np.searchsorted(keys, (a * self.d + b) * self.d + c)])

    def as_tensor(self) -> DenseSymTensor:
        return DenseSymTensor(d=self.d, canonical_values=self.variances)


class Instance(DomainModel):
    """Ground truth, observations and noise of one synthetic problem."""
    config: InstanceConfig
    truth: FactorMatrix
    observations: ObservationSet
    noise_spec: NoiseSpec
    noise: DenseSymTensor
