import os
import tempfile
from pathlib import Path
from typing import Iterator, Tuple, Union

from app.exceptions.tensorciq_exceptions import InvalidInputException, MalformedFileException

PathLike = Union[str, Path]


class BaseFileRepository:
    """Text files written atomically (temp file in the target directory, then rename)."""

    @staticmethod
    def write_text(path: PathLike, text: str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        handle, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
        try:
            with os.fdopen(handle, 'w', encoding='utf-8', newline='\n') as f:
                f.write(text)
            os.replace(temp_name, path)
        except BaseException:
            if os.path.exists(temp_name):
                os.remove(temp_name)
            raise
        return path

    @staticmethod
    def read_bytes(path: PathLike) -> bytes:
        try:
            return Path(path).read_bytes()
        except OSError as e:
            raise InvalidInputException(f"cannot read {path}: {e.strerror}")

    @staticmethod
    def lines(content: bytes) -> Iterator[Tuple[int, int, str]]:
        """Yields (1-based line number, byte offset, decoded line) for every newline-terminated line."""
        offset = 0
        pieces = content.split(b'\n')
        for number, raw in enumerate(pieces[:-1], start=1):
            try:
                text = raw.decode('utf-8').rstrip('\r')
            except UnicodeDecodeError:
                raise MalformedFileException("line is not valid UTF-8", number, offset)
            yield number, offset, text
            offset += len(raw) + 1
        if pieces[-1]:
            raise MalformedFileException("truncated line (missing trailing newline)", len(pieces), offset)
