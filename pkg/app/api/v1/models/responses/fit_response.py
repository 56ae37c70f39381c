from typing import List

from pydantic import BaseModel, Field


class FitSummaryResponse(BaseModel):
    d: int = Field(..., examples=[100])
    r: int = Field(..., examples=[4])
    p: float = Field(..., examples=[0.2])
    observed: int = Field(..., examples=[34340])
    iterations: int = Field(..., examples=[100])
    initial_loss: float
    final_loss: float
    init_retries: int = Field(..., examples=[0])
    outputs: List[str]


class IntervalSummaryResponse(BaseModel):
    alpha: float = Field(..., examples=[0.05])
    critical_value: float = Field(..., examples=[1.959963984540054])
    factor_intervals: int
    entry_intervals: int
    outputs: List[str]


class ExperimentSummaryResponse(BaseModel):
    sigma: float = Field(..., examples=[0.1])
    trials_ok: int
    failures: int
    mean_cr_factor: float
    std_cr_factor: float
    mean_cr_entry: float
    std_cr_entry: float
    outputs: List[str]
