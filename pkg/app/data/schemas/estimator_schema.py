from typing import List

import numpy as np
from pydantic import Field, field_validator, model_validator

from app.data.schemas.enums.enums import StepRule
from app.data.schemas.schema_base import DomainModel, frozen_array
from app.data.schemas.tensor_schema import FactorMatrix
from app.domain.tensor.tensor_core import canonicalize, cp_eval


class InitCandidate(DomainModel):
    """One retrieval attempt: unit direction, strength and spectral gap of the projected slice."""
    direction: np.ndarray
    strength: float = Field(..., ge=0.0)
    spec_gap: float = Field(..., ge=0.0)
    restart_index: int = 0

    @field_validator('direction', mode='before')
    @classmethod
    def _as_direction(cls, v):
        return frozen_array(np.asarray(v, dtype=float).reshape(-1))

    @model_validator(mode='after')
    def _check_unit(self):
        if abs(np.linalg.norm(self.direction) - 1.0) > 1e-10:
            raise ValueError('candidate direction must have unit norm')
        return self

    @property
    def rejected(self) -> bool:
        return self.strength <= 0.0


class EstimatorParams(DomainModel):
    """Restarts, pruning threshold and gradient schedule.

    With the calibrated step rule eta is the base step at the reference factor
    norm; each column then moves with eta * (reference / ||u_l^0||)^4.
    """
    L: int = Field(..., ge=1)
    eps_th: float = Field(..., gt=0.0, lt=1.0)
    eta: float = Field(..., gt=0.0)
    t0: int = Field(..., ge=0)
    early_stop: bool = False
    step_rule: StepRule = StepRule.Constant


class CompletionResult(DomainModel):
    factors: FactorMatrix
    initial_factors: FactorMatrix
    loss_trajectory: List[float]
    init_retries: int = 0

    def entry(self, i: int, j: int, k: int) -> float:
        """Estimated tensor entry at any permutation of the 1-based triple."""
        return cp_eval(self.factors, canonicalize(i, j, k, self.factors.d))
