import os
import time
from pathlib import Path

from app.api.middlewares.logger_middleware import log_command
from app.api.v1.dependencies.container_instance import (get_configuration, get_estimator_service,
                                                        get_experiment_service, get_result_repository)
from app.api.v1.models.requests.config_request import ExperimentConfigRequest, parse_config_file
from app.api.v1.models.responses.fit_response import ExperimentSummaryResponse
from app.api.v1.resources.common import write_manifest
from app.exceptions.exception_handlers import EXIT_OK
from app.exceptions.tensorciq_exceptions import InvalidInputException


def register(subparsers):
    parser = subparsers.add_parser('experiment', help='Monte-Carlo coverage and risk experiment')
    parser.add_argument('--config', required=True, help='flat JSON experiment config')
    parser.add_argument('--jobs', type=int, default=None, help='worker processes (default: $TENSORCIQ_JOBS)')
    parser.add_argument('--all-entries', action='store_true', help='track every canonical tensor entry')
    parser.add_argument('--out-dir', default='.', help='directory for result files')
    parser.set_defaults(handler=cmd_experiment)


def resolve_jobs(jobs) -> int:
    if jobs is None:
        env = os.environ.get('TENSORCIQ_JOBS')
        if env is None:
            return get_configuration().harness['jobs']
        try:
            jobs = int(env)
        except ValueError:
            raise InvalidInputException(f"TENSORCIQ_JOBS='{env}' is not an integer")
    if jobs < 1:
        raise InvalidInputException(f"jobs={jobs} must be at least 1")
    return jobs


@log_command('experiment')
def cmd_experiment(args) -> int:
    started = time.perf_counter()
    request = parse_config_file(args.config, ExperimentConfigRequest)
    if not 0.0 < request.alpha < 1.0:
        raise InvalidInputException(f"alpha={request.alpha} must lie strictly between 0 and 1")
    defaults = get_estimator_service().default_params(request.d, request.r, request.p)
    cfg = request.to_domain(defaults, all_entries=args.all_entries)
    jobs = resolve_jobs(args.jobs)

    service = get_experiment_service()
    out_dir = Path(args.out_dir)
    if request.is_sweep:
        points = service.run_sweep(cfg, request.sigmas, jobs)
        outputs = get_result_repository().save_sweep(out_dir, points)
        # the summary reports the last level; every level has its own directory
        aggregate = points[-1].aggregate
    else:
        _, aggregate = service.run_experiment(cfg, jobs)
        outputs = get_result_repository().save_experiment(out_dir, aggregate, service.risk_table(aggregate, cfg))
    config = {**request.model_dump(), 'all_entries': args.all_entries,
              'resolved_params': (cfg.params or defaults).model_dump()}
    outputs.append(write_manifest(out_dir, 'experiment', config, outputs, started, master_seed=cfg.master_seed))

    summary = ExperimentSummaryResponse(sigma=request.sigmas[-1],
                                        trials_ok=aggregate.trials_ok, failures=aggregate.failures,
                                        mean_cr_factor=aggregate.mean_cr_factor,
                                        std_cr_factor=aggregate.std_cr_factor,
                                        mean_cr_entry=aggregate.mean_cr_entry, std_cr_entry=aggregate.std_cr_entry,
                                        outputs=[str(path) for path in outputs])
    print(summary.model_dump_json(indent=2))
    return EXIT_OK
