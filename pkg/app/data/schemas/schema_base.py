import numpy as np
from pydantic import BaseModel, ConfigDict


class DomainModel(BaseModel):
    """Immutable base for domain values that carry numpy payloads."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class ConfigModel(BaseModel):
    """Base for user-facing configuration: unknown keys are errors."""
    model_config = ConfigDict(extra='forbid', frozen=True)


def frozen_array(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array
