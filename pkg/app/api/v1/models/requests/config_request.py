import json
from pathlib import Path
from typing import Dict, List, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.data.schemas.estimator_schema import EstimatorParams
from app.data.schemas.experiment_schema import ExperimentConfig
from app.data.schemas.instance_schema import InstanceConfig
from app.exceptions.tensorciq_exceptions import InvalidInputException

Request = TypeVar('Request', bound=BaseModel)


class SimulateConfigRequest(BaseModel):
    model_config = ConfigDict(extra='forbid')

    d: int = Field(..., examples=[100])
    r: int = Field(..., examples=[4])
    p: float = Field(..., examples=[0.2])
    sigma: float = Field(..., examples=[0.1])
    beta: float = Field(..., examples=[5])
    seed: int = Field(..., examples=[1])

    def to_domain(self) -> InstanceConfig:
        try:
            return InstanceConfig(**self.model_dump())
        except ValidationError as e:
            raise InvalidInputException(describe_validation_error(e))


class ExperimentConfigRequest(BaseModel):
    model_config = ConfigDict(extra='forbid')

    d: int = Field(..., examples=[100])
    r: int = Field(..., examples=[4])
    p: float = Field(..., examples=[0.2])
    sigma: Union[float, List[float]] = Field(..., examples=[0.1, [0.05, 0.1, 0.2]])
    beta: float = Field(..., examples=[5])
    alpha: float = Field(..., examples=[0.05])
    trials: int = Field(..., examples=[100])
    entry_sample: Optional[int] = Field(default=None, examples=[2000])
    master_seed: int = Field(..., examples=[20240601])
    L: Optional[int] = Field(default=None, examples=[16])
    eps_th: Optional[float] = Field(default=None, examples=[0.4])
    eta: Optional[float] = Field(default=None, examples=[1.5e-4])
    t0: Optional[int] = Field(default=None, examples=[100])

    @property
    def sigmas(self) -> List[float]:
        return list(self.sigma) if isinstance(self.sigma, list) else [self.sigma]

    @property
    def is_sweep(self) -> bool:
        return isinstance(self.sigma, list)

    def param_overrides(self) -> Dict:
        return {key: getattr(self, key) for key in ('L', 'eps_th', 'eta', 't0') if getattr(self, key) is not None}

    def to_domain(self, defaults: EstimatorParams, all_entries: bool = False) -> ExperimentConfig:
        overrides = self.param_overrides()
        try:
            if not self.sigmas:
                raise InvalidInputException("invalid value for 'sigma': the sweep list is empty")
            instance = InstanceConfig(d=self.d, r=self.r, p=self.p, sigma=self.sigmas[0], beta=self.beta,
                                      seed=self.master_seed)
            params = EstimatorParams(**{**defaults.model_dump(), **overrides}) if overrides else None
            return ExperimentConfig(instance=instance, alpha=self.alpha, trials=self.trials, params=params,
                                    entry_sample=self.entry_sample, all_entries=all_entries,
                                    master_seed=self.master_seed)
        except ValidationError as e:
            raise InvalidInputException(describe_validation_error(e))


def parse_config_file(path, model: Type[Request]) -> Request:
    """Reads a flat JSON config; unknown keys and invalid values become InvalidInputException."""
    try:
        content = json.loads(Path(path).read_text(encoding='utf-8'))
    except OSError as e:
        raise InvalidInputException(f"cannot read config {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise InvalidInputException(f"config {path} is not valid JSON: {e.msg} at line {e.lineno}")
    if not isinstance(content, dict):
        raise InvalidInputException(f"config {path} must be a JSON object")
    return validate_config(content, model)


def validate_config(content: Dict, model: Type[Request]) -> Request:
    try:
        return model(**content)
    except ValidationError as e:
        raise InvalidInputException(describe_validation_error(e))


def describe_validation_error(error: ValidationError) -> str:
    messages = []
    for item in error.errors():
        key = '.'.join(str(part) for part in item['loc']) or 'config'
        if item['type'] == 'extra_forbidden':
            messages.append(f"unknown config key '{key}'")
        elif item['type'] == 'missing':
            messages.append(f"missing config key '{key}'")
        else:
            messages.append(f"invalid value for '{key}': {item['msg']}")
    return '; '.join(messages)
