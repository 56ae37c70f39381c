import time
from pathlib import Path

from app.api.middlewares.logger_middleware import log_command
from app.api.v1.dependencies.container_instance import (get_factor_repository, get_observation_repository,
                                                        get_result_repository, get_uq_service)
from app.api.v1.models.responses.fit_response import IntervalSummaryResponse
from app.api.v1.resources.common import check_alpha, parse_triple, write_manifest
from app.domain.services.uq_service import critical_value
from app.exceptions.exception_handlers import EXIT_OK
from app.exceptions.tensorciq_exceptions import InvalidInputException


def register(subparsers):
    parser = subparsers.add_parser('uq', help='confidence intervals for factor and tensor entries')
    parser.add_argument('--obs', required=True, help='observations file')
    parser.add_argument('--factors', required=True, help='estimated factors file')
    parser.add_argument('--alpha', type=float, default=0.05, help='miss level in (0, 1)')
    parser.add_argument('--entry', type=parse_triple, action='append', default=[],
                        help='tensor entry i,j,k (1-based); repeatable')
    parser.add_argument('--out-dir', default='.', help='directory for interval files')
    parser.set_defaults(handler=cmd_uq)


@log_command('uq')
def cmd_uq(args) -> int:
    started = time.perf_counter()
    alpha = check_alpha(args.alpha)
    obs = get_observation_repository().load(args.obs)
    factors = get_factor_repository().load(args.factors)
    if factors.d != obs.d:
        raise InvalidInputException(f"factors have d={factors.d} but observations have d={obs.d}")

    uq_service = get_uq_service()
    sigmas = uq_service.estimate_all_sigmas(factors, uq_service.estimate_noise(obs, factors), obs, obs.p)
    factor_intervals = uq_service.factor_intervals(factors, sigmas, alpha)
    entry_intervals = uq_service.entry_intervals(factors, sigmas, args.entry, alpha)

    out_dir = Path(args.out_dir)
    repository = get_result_repository()
    outputs = [repository.save_factor_intervals(out_dir / 'factor_ci.csv', factor_intervals),
               repository.save_entry_intervals(out_dir / 'entry_ci.csv', entry_intervals)]
    config = {'obs': str(args.obs), 'factors': str(args.factors), 'alpha': alpha,
              'entries': [list(t) for t in args.entry]}
    outputs.append(write_manifest(out_dir, 'uq', config, outputs, started))

    summary = IntervalSummaryResponse(alpha=alpha, critical_value=critical_value(alpha),
                                      factor_intervals=len(factor_intervals), entry_intervals=len(entry_intervals),
                                      outputs=[str(path) for path in outputs])
    print(summary.model_dump_json(indent=2))
    return EXIT_OK
