from functools import cached_property
from typing import Dict, Tuple

import numpy as np
from pydantic import Field, field_validator, model_validator

from app.data.schemas.schema_base import DomainModel, frozen_array
from app.domain.tensor.indexing import (canonical_triples, count_canonical, linear_keys, multiplicities,
                                        multiplicity, symmetric_closure)


class FactorMatrix(DomainModel):
    """d x r matrix whose columns are the CP factors u_1, ..., u_r."""
    values: np.ndarray

    @field_validator('values', mode='before')
    @classmethod
    def _as_frozen_matrix(cls, v):
        array = np.array(v, dtype=float)
        if array.ndim == 1:
            array = array.reshape(-1, 1)
        if array.ndim != 2:
            raise ValueError('factor matrix must be two-dimensional')
        d, r = array.shape
        if d < 1 or r < 1 or r > d:
            raise ValueError(f'factor matrix needs d >= 1 and 1 <= r <= d, got d={d}, r={r}')
        if not np.all(np.isfinite(array)):
            raise ValueError('factor matrix entries must be finite')
        return frozen_array(array)

    @classmethod
    def of(cls, values) -> 'FactorMatrix':
        return cls(values=values)

    @classmethod
    def from_columns(cls, *columns) -> 'FactorMatrix':
        return cls(values=np.column_stack([np.asarray(c, dtype=float) for c in columns]))

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def r(self) -> int:
        return self.values.shape[1]

    def column(self, l: int) -> np.ndarray:
        """Column l, 1-based."""
        return self.values[:, l - 1]

    def permuted(self, mapping) -> 'FactorMatrix':
        """Columns reordered so that column l of the result is column mapping[l] (0-based) of self."""
        return FactorMatrix(values=self.values[:, list(mapping)])


class CanonicalTriple(DomainModel):
    """Sorted 1-based index triple i <= j <= k with its orbit size."""
    i: int = Field(..., ge=1)
    j: int = Field(..., ge=1)
    k: int = Field(..., ge=1)
    multiplicity: int

    @model_validator(mode='after')
    def _check_canonical(self):
        if not (self.i <= self.j <= self.k):
            raise ValueError(f'triple ({self.i},{self.j},{self.k}) is not canonical')
        if self.multiplicity != multiplicity(self.i, self.j, self.k):
            raise ValueError(f'wrong multiplicity {self.multiplicity} for ({self.i},{self.j},{self.k})')
        return self

    @property
    def zero_based(self) -> Tuple[int, int, int]:
        return self.i - 1, self.j - 1, self.k - 1

    def as_tuple(self) -> Tuple[int, int, int]:
        return self.i, self.j, self.k


class _SymmetricStore(DomainModel):
    d: int = Field(..., ge=1)

    @property
    def triples(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def values(self) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def multiplicities(self) -> np.ndarray:
        return multiplicities(self.triples)

    @cached_property
    def closure(self):
        """(I, J, K, values) over every distinct ordered triple of the symmetric closure."""
        i, j, k, v, _ = symmetric_closure(self.triples, self.values)
        return i, j, k, v

    @property
    def size(self) -> int:
        return int(self.triples.shape[0])


class ObservationSet(_SymmetricStore):
    """Observed entries T^obs on the canonical part of a symmetric sampling set Omega."""
    p: float = Field(..., gt=0.0, le=1.0)
    observed: np.ndarray
    observed_values: np.ndarray

    @field_validator('observed', mode='before')
    @classmethod
    def _as_triples(cls, v):
        return frozen_array(np.asarray(v, dtype=np.int64).reshape(-1, 3), dtype=np.int64)

    @field_validator('observed_values', mode='before')
    @classmethod
    def _as_values(cls, v):
        return frozen_array(np.asarray(v, dtype=float).reshape(-1))

    @model_validator(mode='after')
    def _check_entries(self):
        t = self.observed
        if t.shape[0] != self.observed_values.shape[0]:
            raise ValueError('observed triples and values differ in length')
        if t.shape[0]:
            if t.min() < 0 or t.max() >= self.d:
                raise ValueError(f'observed index outside 1..{self.d}')
            if np.any(t[:, 0] > t[:, 1]) or np.any(t[:, 1] > t[:, 2]):
                raise ValueError('observed triples must be canonical (i <= j <= k)')
            keys = linear_keys(t, self.d)
            if np.any(np.diff(keys) <= 0):
                raise ValueError('observed triples must be unique and in lexicographic order')
        if not np.all(np.isfinite(self.observed_values)):
            raise ValueError('observed values must be finite')
        return self

    @classmethod
    def from_entries(cls, d: int, p: float, triples, values) -> 'ObservationSet':
        """Builds a set from 0-based canonical triples given in any order."""
        triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        values = np.asarray(values, dtype=float).reshape(-1)
        order = np.argsort(linear_keys(triples, d), kind='stable') if triples.shape[0] else np.zeros(0, dtype=int)
        return cls(d=d, p=p, observed=triples[order], observed_values=values[order])

    @classmethod
    def empty(cls, d: int, p: float) -> 'ObservationSet':
        return cls(d=d, p=p, observed=np.zeros((0, 3), dtype=np.int64), observed_values=np.zeros(0))

    @property
    def triples(self) -> np.ndarray:
        return self.observed

    @property
    def values(self) -> np.ndarray:
        return self.observed_values

    @cached_property
    def lookup_table(self) -> Dict[int, int]:
        return {int(key): row for row, key in enumerate(linear_keys(self.observed, self.d))}

    def get(self, i: int, j: int, k: int, default=None):
        """Value at any permutation of the 1-based triple, or ``default`` when unobserved."""
        a, b, c = sorted((i - 1, j - 1, k - 1))
        row = self.lookup_table.get((a * self.d + b) * self.d + c)
        return default if row is None else float(self.observed_values[row])

    def contains(self, i: int, j: int, k: int) -> bool:
        return self.get(i, j, k) is not None


class DenseSymTensor(_SymmetricStore):
    """Symmetric tensor with one stored value per canonical triple over the full index range."""
    canonical_values: np.ndarray

    @field_validator('canonical_values', mode='before')
    @classmethod
    def _as_values(cls, v):
        return frozen_array(np.asarray(v, dtype=float).reshape(-1))

    @model_validator(mode='after')
    def _check_length(self):
        if self.canonical_values.shape[0] != count_canonical(self.d):
            raise ValueError(f'expected {count_canonical(self.d)} canonical values, '
                             f'got {self.canonical_values.shape[0]}')
        return self

    @classmethod
    def from_factors(cls, factors: FactorMatrix) -> 'DenseSymTensor':
        t = canonical_triples(factors.d)
        u = factors.values
        return cls(d=factors.d, canonical_values=np.sum(u[t[:, 0]] * u[t[:, 1]] * u[t[:, 2]], axis=1))

    @property
    def triples(self) -> np.ndarray:
        return canonical_triples(self.d)

    @property
    def values(self) -> np.ndarray:
        return self.canonical_values

    def position(self, i: int, j: int, k: int) -> int:
        a, b, c = sorted((i - 1, j - 1, k - 1))
        keys = linear_keys(self.triples, self.d)
        return int(np.searchsorted(keys, (a * self.d + b) * self.d + c))

    def get(self, i: int, j: int, k: int) -> float:
        """Value at any permutation of the 1-based triple."""
        return float(self.canonical_values[self.position(i, j, k)])

    def restrict(self, observed: np.ndarray) -> np.ndarray:
        """Values at the given 0-based canonical triples."""
        keys = linear_keys(self.triples, self.d)
        return self.canonical_values[np.searchsorted(keys, linear_keys(observed, self.d))]
