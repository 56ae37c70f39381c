import time
from pathlib import Path

from app.api.middlewares.logger_middleware import log_command
from app.api.v1.dependencies.container_instance import (get_estimator_service, get_factor_repository,
                                                        get_observation_repository, get_result_repository)
from app.api.v1.models.requests.config_request import validate_config
from app.api.v1.models.responses.fit_response import FitSummaryResponse
from app.api.v1.resources.common import write_manifest
from app.data.schemas.estimator_schema import EstimatorParams
from app.exceptions.exception_handlers import EXIT_OK
from app.exceptions.tensorciq_exceptions import InvalidInputException


def register(subparsers):
    parser = subparsers.add_parser('complete', help='estimate low-rank factors from observations')
    parser.add_argument('--obs', required=True, help='observations file')
    parser.add_argument('--rank', required=True, type=int, help='CP rank r')
    parser.add_argument('--seed', type=int, default=0, help='seed of the random restarts')
    parser.add_argument('--t0', type=int, default=None, help='gradient descent iterations')
    parser.add_argument('--eta', type=float, default=None, help='step size')
    parser.add_argument('--L', type=int, default=None, help='number of random restarts')
    parser.add_argument('--eps-th', type=float, default=None, help='pruning threshold')
    parser.add_argument('--out-dir', default='.', help='directory for factors and trajectory files')
    parser.set_defaults(handler=cmd_complete)


@log_command('complete')
def cmd_complete(args) -> int:
    started = time.perf_counter()
    obs = get_observation_repository().load(args.obs)
    if not 1 <= args.rank <= obs.d:
        raise InvalidInputException(f"rank {args.rank} outside 1..{obs.d}")
    if args.seed < 0:
        raise InvalidInputException(f"seed {args.seed} must be non-negative")

    estimator = get_estimator_service()
    params = estimator.default_params(obs.d, args.rank, obs.p)
    overrides = {key: value for key, value in (('t0', args.t0), ('eta', args.eta), ('L', args.L),
                                               ('eps_th', args.eps_th)) if value is not None}
    if overrides:
        params = validate_config({**params.model_dump(), **overrides}, EstimatorParams)
    result = estimator.complete(obs, args.rank, params, args.seed)

    out_dir = Path(args.out_dir)
    outputs = [get_factor_repository().save(out_dir / 'factors.txt', result.factors),
               get_result_repository().save_trajectory(out_dir / 'trajectory.csv', result.loss_trajectory)]
    config = {'obs': str(args.obs), 'rank': args.rank, 'seed': args.seed, 'params': params.model_dump()}
    outputs.append(write_manifest(out_dir, 'complete', config, outputs, started, master_seed=args.seed))

    summary = FitSummaryResponse(d=obs.d, r=args.rank, p=obs.p, observed=obs.size,
                                 iterations=len(result.loss_trajectory) - 1,
                                 initial_loss=result.loss_trajectory[0], final_loss=result.loss_trajectory[-1],
                                 init_retries=result.init_retries, outputs=[str(path) for path in outputs])
    print(summary.model_dump_json(indent=2))
    return EXIT_OK
