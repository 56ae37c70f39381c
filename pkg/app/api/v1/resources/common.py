import argparse
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from app.api.v1.dependencies.container_instance import get_configuration, get_result_repository
from app.data.schemas.experiment_schema import RunManifest
from app.exceptions.tensorciq_exceptions import InvalidInputException
from app.utils.datetime_util import datetime_now


def parse_triple(value: str) -> Tuple[int, int, int]:
    """'i,j,k' -> (i, j, k); used as an argparse type."""
    parts = value.split(',')
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected i,j,k but got '{value}'")
    try:
        return int(parts[0]), int(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integer indices in '{value}'")


def check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise InvalidInputException(f"alpha={alpha} must lie strictly between 0 and 1")
    return alpha


def write_manifest(out_dir: Path, command: str, config: Dict, outputs: List[Path], started: float,
                   master_seed: Optional[int] = None) -> Path:
    manifest = RunManifest(tool_version=get_configuration().tool_version,
                           command=command,
                           config=config,
                           master_seed=master_seed,
                           outputs=[str(path) for path in outputs],
                           wall_time=time.perf_counter() - started,
                           created_on=datetime_now())
    return get_result_repository().save_manifest(out_dir, manifest)
