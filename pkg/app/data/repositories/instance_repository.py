import re
from pathlib import Path
from typing import List, Tuple

import numpy as np
from pydantic import ValidationError

from app.data.repositories.base_repository import BaseFileRepository, PathLike
from app.data.schemas.instance_schema import NoiseSpec
from app.data.schemas.tensor_schema import FactorMatrix, ObservationSet
from app.domain.tensor.indexing import canonical_triples, linear_keys
from app.exceptions.tensorciq_exceptions import MalformedFileException
from app.utils.string_util import round_trip

_NUMBER = r'([-+0-9.eEinfa]+)'


class _HeaderedRepository(BaseFileRepository):
    header_pattern: re.Pattern = None
    kind: str = None

    def _parse(self, path: PathLike) -> Tuple[re.Match, List[Tuple[int, int, List[str]]]]:
        lines = list(self.lines(self.read_bytes(path)))
        if not lines:
            raise MalformedFileException(f"empty {self.kind} file", 1, 0)
        number, offset, text = lines[0]
        header = self.header_pattern.fullmatch(text.strip())
        if header is None:
            raise MalformedFileException(f"expected header matching '{self.header_pattern.pattern}'", number, offset)
        body = [(number, offset, text.split()) for number, offset, text in lines[1:] if text.strip()]
        return header, body

    @staticmethod
    def _int(token: str, number: int, offset: int) -> int:
        try:
            return int(token)
        except ValueError:
            raise MalformedFileException(f"'{token}' is not an integer", number, offset)

    @staticmethod
    def _float(token: str, number: int, offset: int) -> float:
        try:
            value = float(token)
        except ValueError:
            raise MalformedFileException(f"'{token}' is not a number", number, offset)
        if not np.isfinite(value):
            raise MalformedFileException(f"'{token}' is not finite", number, offset)
        return value


class ObservationRepository(_HeaderedRepository):
    """``# tensorciq-obs v1 d=<d> p=<p>`` then one ``i j k value`` line per observed canonical triple."""
    header_pattern = re.compile(r'# tensorciq-obs v1 d=(\d+) p=' + _NUMBER)
    kind = 'observations'

    def save(self, path: PathLike, obs: ObservationSet) -> Path:
        rows = [f"# tensorciq-obs v1 d={obs.d} p={round_trip(obs.p)}"]
        rows.extend(f"{i + 1} {j + 1} {k + 1} {round_trip(v)}" for (i, j, k), v in zip(obs.triples, obs.values))
        return self.write_text(path, '\n'.join(rows) + '\n')

    def load(self, path: PathLike) -> ObservationSet:
        header, body = self._parse(path)
        d = int(header.group(1))
        p = self._float(header.group(2), 1, 0)
        if d < 1 or not 0.0 < p <= 1.0:
            raise MalformedFileException(f"header needs d >= 1 and 0 < p <= 1, got d={d}, p={p}", 1, 0)

        triples = np.empty((len(body), 3), dtype=np.int64)
        values = np.empty(len(body))
        seen = {}
        for row, (number, offset, tokens) in enumerate(body):
            if len(tokens) != 4:
                raise MalformedFileException(f"expected 'i j k value', got {len(tokens)} fields", number, offset)
            indices = sorted(self._int(token, number, offset) for token in tokens[:3])
            if indices[0] < 1 or indices[2] > d:
                raise MalformedFileException(f"index outside 1..{d}", number, offset)
            key = tuple(indices)
            if key in seen:
                raise MalformedFileException(f"duplicate entry {key} (first on line {seen[key]})", number, offset)
            seen[key] = number
            triples[row] = [i - 1 for i in indices]
            values[row] = self._float(tokens[3], number, offset)
        return ObservationSet.from_entries(d, p, triples, values)


class FactorRepository(_HeaderedRepository):
    """``# tensorciq-factors v1 d=<d> r=<r>`` then r blocks of d values, one value per line."""
    header_pattern = re.compile(r'# tensorciq-factors v1 d=(\d+) r=(\d+)')
    kind = 'factors'

    def save(self, path: PathLike, factors: FactorMatrix) -> Path:
        rows = [f"# tensorciq-factors v1 d={factors.d} r={factors.r}"]
        for l in range(factors.r):
            rows.extend(round_trip(v) for v in factors.values[:, l])
        return self.write_text(path, '\n'.join(rows) + '\n')

    def load(self, path: PathLike) -> FactorMatrix:
        header, body = self._parse(path)
        d, r = int(header.group(1)), int(header.group(2))
        if not 1 <= r <= d:
            raise MalformedFileException(f"header needs 1 <= r <= d, got d={d}, r={r}", 1, 0)
        if len(body) != d * r:
            number, offset = (body[-1][0], body[-1][1]) if body else (1, 0)
            raise MalformedFileException(f"expected {d * r} values, found {len(body)}", number, offset)
        values = []
        for number, offset, tokens in body:
            if len(tokens) != 1:
                raise MalformedFileException(f"expected one value per line, got {len(tokens)}", number, offset)
            values.append(self._float(tokens[0], number, offset))
        return FactorMatrix(values=np.array(values).reshape(r, d).T)


class NoiseSpecRepository(_HeaderedRepository):
    """``# tensorciq-noise v1 d=<d> sigma=<s> beta=<b>`` then ``i j k variance`` for every canonical triple."""
    header_pattern = re.compile(r'# tensorciq-noise v1 d=(\d+) sigma=' + _NUMBER + ' beta=' + _NUMBER)
    kind = 'noise'

    def save(self, path: PathLike, noise: NoiseSpec) -> Path:
        rows = [f"# tensorciq-noise v1 d={noise.d} sigma={round_trip(noise.sigma)} beta={round_trip(noise.beta)}"]
        rows.extend(f"{i + 1} {j + 1} {k + 1} {round_trip(v)}"
                    for (i, j, k), v in zip(canonical_triples(noise.d), noise.variances))
        return self.write_text(path, '\n'.join(rows) + '\n')

    def load(self, path: PathLike) -> NoiseSpec:
        header, body = self._parse(path)
        d = int(header.group(1))
        sigma, beta = self._float(header.group(2), 1, 0), self._float(header.group(3), 1, 0)
        expected = canonical_triples(d)
        if len(body) != expected.shape[0]:
            number, offset = (body[-1][0], body[-1][1]) if body else (1, 0)
            raise MalformedFileException(f"expected {expected.shape[0]} variances, found {len(body)}", number, offset)
        keys = linear_keys(expected, d)
        variances = np.empty(expected.shape[0])
        for row, (number, offset, tokens) in enumerate(body):
            if len(tokens) != 4:
                raise MalformedFileException(f"expected 'i j k variance', got {len(tokens)} fields", number, offset)
            i, j, k = (self._int(token, number, offset) - 1 for token in tokens[:3])
            if (i * d + j) * d + k != keys[row]:
                raise MalformedFileException(f"expected triple {tuple(expected[row] + 1)}", number, offset)
            variances[row] = self._float(tokens[3], number, offset)
        try:
            return NoiseSpec(d=d, sigma=sigma, beta=beta, variances=variances)
        except ValidationError as e:
            raise MalformedFileException(f"inconsistent noise spec: {e.errors()[0]['msg']}", 1, 0)
