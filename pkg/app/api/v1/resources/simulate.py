import time
from pathlib import Path

from app.api.middlewares.logger_middleware import log_command
from app.api.v1.dependencies.container_instance import (get_factor_repository, get_noise_spec_repository,
                                                        get_observation_repository, get_simulation_service)
from app.api.v1.models.requests.config_request import SimulateConfigRequest, parse_config_file
from app.api.v1.resources.common import write_manifest
from app.exceptions.exception_handlers import EXIT_OK
from app.utils.logger import logger


def register(subparsers):
    parser = subparsers.add_parser('simulate', help='generate a synthetic instance')
    parser.add_argument('--config', required=True, help='JSON with keys d, r, p, sigma, beta, seed')
    parser.add_argument('--out-dir', default='.', help='directory for observations, factors and noise files')
    parser.set_defaults(handler=cmd_simulate)


@log_command('simulate')
def cmd_simulate(args) -> int:
    started = time.perf_counter()
    request = parse_config_file(args.config, SimulateConfigRequest)
    cfg = request.to_domain()
    instance = get_simulation_service().make_instance(cfg)

    out_dir = Path(args.out_dir)
    outputs = [
        get_observation_repository().save(out_dir / 'observations.txt', instance.observations),
        get_factor_repository().save(out_dir / 'truth_factors.txt', instance.truth),
        get_noise_spec_repository().save(out_dir / 'noise.txt', instance.noise_spec),
    ]
    incoherence = get_simulation_service().incoherence_report(instance.truth)
    logger.info(f"Ground truth incoherence mu={incoherence.mu:.3f}, kappa={incoherence.kappa:.3f}")
    config = {**cfg.model_dump(), 'incoherence': incoherence.model_dump()}
    write_manifest(out_dir, 'simulate', config, outputs, started, master_seed=cfg.seed)
    return EXIT_OK
