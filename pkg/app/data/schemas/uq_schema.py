from typing import List

import numpy as np
from pydantic import Field, field_validator, model_validator

from app.data.schemas.enums.enums import Provenance
from app.data.schemas.schema_base import DomainModel, frozen_array
from app.data.schemas.tensor_schema import CanonicalTriple


class CovarianceEstimate(DomainModel):
    """Covariance Sigma_k of the k-th row of the factor estimate (k is 1-based)."""
    k: int = Field(..., ge=1)
    matrix: np.ndarray
    provenance: Provenance

    @field_validator('matrix', mode='before')
    @classmethod
    def _as_symmetric(cls, v):
        matrix = np.atleast_2d(np.asarray(v, dtype=float))
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError('covariance must be square')
        if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(matrix).max(initial=0.0))):
            raise ValueError('covariance must be symmetric')
        return frozen_array(0.5 * (matrix + matrix.T))

    @model_validator(mode='after')
    def _check_psd(self):
        if self.matrix.size:
            smallest = np.linalg.eigvalsh(self.matrix).min()
            if smallest < -1e-8 * max(np.trace(self.matrix), np.finfo(float).tiny):
                raise ValueError(f'covariance for slice {self.k} is not PSD (min eigenvalue {smallest})')
        return self

    def variance(self, l: int) -> float:
        """Diagonal entry for factor l (1-based)."""
        return float(self.matrix[l - 1, l - 1])


class EntryVariance(DomainModel):
    triple: CanonicalTriple
    value: float = Field(..., ge=0.0)
    provenance: Provenance


class ConfidenceInterval(DomainModel):
    center: float
    half_width: float = Field(..., ge=0.0)
    level: float = Field(..., ge=0.0, lt=1.0)

    @property
    def lower(self) -> float:
        return self.center - self.half_width

    @property
    def upper(self) -> float:
        return self.center + self.half_width

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


class PermutationMap(DomainModel):
    """mapping[l - 1] is the 1-based estimated column matched to reference column l."""
    mapping: List[int]
    residual: float = Field(..., ge=0.0)

    @model_validator(mode='after')
    def _check_bijection(self):
        if sorted(self.mapping) != list(range(1, len(self.mapping) + 1)):
            raise ValueError(f'{self.mapping} is not a permutation of 1..{len(self.mapping)}')
        return self

    @property
    def zero_based(self) -> List[int]:
        return [m - 1 for m in self.mapping]


class IncoherenceReport(DomainModel):
    mu0: float
    mu1: float
    mu2: float
    kappa: float
    lambda_min: float
    lambda_max: float

    @property
    def mu(self) -> float:
        return max(self.mu0, self.mu1, self.mu2)
