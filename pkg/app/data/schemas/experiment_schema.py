from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from app.data.schemas.estimator_schema import EstimatorParams
from app.data.schemas.instance_schema import InstanceConfig


class ExperimentConfig(BaseModel):
    instance: InstanceConfig
    alpha: float = Field(..., gt=0.0, lt=1.0, examples=[0.05])
    trials: int = Field(..., ge=1, examples=[100])
    params: Optional[EstimatorParams] = None
    entry_sample: Optional[int] = Field(default=None, ge=1)
    all_entries: bool = False
    master_seed: int = Field(..., ge=0, lt=2 ** 64)

    @model_validator(mode='after')
    def _check_restarts(self):
        if self.params is not None and self.params.L < self.instance.r:
            raise ValueError(f'L={self.params.L} restarts cannot yield r={self.instance.r} factors')
        return self


class TrialReport(BaseModel):
    trial_index: int
    failed: bool = False
    error: Optional[str] = None
    factor_errors: List[List[float]] = []
    factor_normalized: List[List[float]] = []
    factor_oracle_normalized: List[List[float]] = []
    factor_hits: List[List[bool]] = []
    entry_errors: List[float] = []
    entry_normalized: List[float] = []
    entry_oracle_normalized: List[float] = []
    entry_hits: List[bool] = []
    l2_factor_sq: List[float] = []
    l2_tensor_sq: float = 0.0
    factor_risk_theory: List[float] = []
    tensor_risk_theory: float = 0.0
    factor_cr_bound: List[float] = []
    tensor_cr_bound: float = 0.0
    init_retries: int = 0
    wall_time: float = 0.0

    @model_validator(mode='after')
    def _check_normalized(self):
        values = [x for row in self.factor_normalized for x in row] + list(self.entry_normalized)
        if any(x != x or x in (float('inf'), float('-inf')) for x in values):
            raise ValueError(f'trial {self.trial_index} produced non-finite normalized errors')
        return self


class RiskRow(BaseModel):
    quantity: str
    empirical: float
    theoretical: float
    ratio: float


class AggregateReport(BaseModel):
    alpha: float
    trials_ok: int
    failures: int
    failed_trials: List[int] = []
    mean_cr_factor: float
    std_cr_factor: float
    mean_cr_entry: float
    std_cr_entry: float
    factor_coverage: List[List[float]]
    entry_coverage: List[float]
    tracked_entries: List[Tuple[int, int, int]]
    qq_points: Dict[str, List[Tuple[float, float]]]
    ks_stats: Dict[str, float]
    ks_sizes: Dict[str, int]
    l2_risk_factor: List[float]
    l2_risk_tensor: float
    risk_theory_factor: List[float]
    risk_theory_tensor: float
    cr_bound_factor: List[float]
    cr_bound_tensor: float

    @model_validator(mode='after')
    def _check_coverage(self):
        for value in (self.mean_cr_factor, self.mean_cr_entry):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f'coverage mean {value} outside [0, 1]')
        return self


class RunManifest(BaseModel):
    tool_version: str
    command: str
    config: Dict
    master_seed: Optional[int] = None
    outputs: List[str]
    wall_time: float
    created_on: str


class SweepPoint(BaseModel):
    """One noise level of a sigma sweep; every point shares the truth drawn from the master seed."""
    sigma: float = Field(..., ge=0.0)
    aggregate: AggregateReport
    risk: List[RiskRow]
