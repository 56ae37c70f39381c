import time
from multiprocessing import Pool
from typing import Dict, List, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from app.config.configuration import TensorCiqConfiguration
from app.data.schemas.experiment_schema import AggregateReport, ExperimentConfig, RiskRow, SweepPoint, TrialReport
from app.data.schemas.instance_schema import Instance
from app.domain.services.diagnostics import ks_statistic, qq_points
from app.domain.services.estimator_service import EstimatorService
from app.domain.services.simulation_service import SimulationService
from app.domain.services.uq_service import UncertaintyService, critical_value
from app.domain.tensor.indexing import canonical_triples, count_canonical, linear_keys
from app.domain.tensor.tensor_core import cp_eval_many, frobenius_distance_sq
from app.exceptions.tensorciq_exceptions import InvalidInputException, InvariantViolation, ServiceException
from app.utils.logger import logger
from app.utils.seed_util import derive_seed, stream


def _run_trial_task(task: Tuple[ExperimentConfig, int]) -> TrialReport:
    from app.api.v1.dependencies.container_instance import get_experiment_service
    cfg, trial_index = task
    return get_experiment_service().run_trial(cfg, trial_index)


class ExperimentService:
    """Monte-Carlo trials: simulate, complete, build intervals and score them against the truth."""

    def __init__(self, configuration: TensorCiqConfiguration, simulation_service: SimulationService,
                 estimator_service: EstimatorService, uq_service: UncertaintyService):
        self._configuration = configuration
        self._settings = configuration.harness
        self._simulation = simulation_service
        self._estimator = estimator_service
        self._uq = uq_service

    def tracked_entries(self, cfg: ExperimentConfig) -> np.ndarray:
        """0-based canonical triples scored in every trial, fixed by the master seed."""
        d = cfg.instance.d
        if cfg.all_entries:
            return canonical_triples(d)
        total = count_canonical(d)
        size = min(cfg.entry_sample or self._settings['entry_sample'], total)
        rows = stream(cfg.master_seed, 'entries').choice(total, size=size, replace=False)
        sampled = canonical_triples(d)[np.sort(rows)]
        pinned = np.array([sorted(i - 1 for i in loc) for loc in self._settings['qq_entry_locations']
                           if max(loc) <= d], dtype=np.int64).reshape(-1, 3)
        merged = np.concatenate([sampled, pinned])
        _, unique = np.unique(linear_keys(merged, d), return_index=True)
        return merged[unique]

    def run_trial(self, cfg: ExperimentConfig, trial_index: int) -> TrialReport:
        started = time.perf_counter()
        try:
            report = self._run_trial(cfg, trial_index, started)
        except (ServiceException, InvariantViolation, ValidationError) as e:
            logger.warning(f"Trial {trial_index} failed: {e}")
            return TrialReport(trial_index=trial_index, failed=True, error=str(e),
                               wall_time=time.perf_counter() - started)
        logger.info(f"Trial {trial_index} finished in {report.wall_time:.2f}s: factor hits "
                    f"{float(np.mean(report.factor_hits)):.4f}, entry hits {float(np.mean(report.entry_hits)):.4f}")
        return report

    def trial_instance(self, cfg: ExperimentConfig, trial_index: int) -> Instance:
        """Truth and noise spec fixed by the master seed; mask and noise redrawn from the trial seed."""
        d, r = cfg.instance.d, cfg.instance.r
        truth = self._simulation.gen_factors(d, r, cfg.master_seed)
        noise_spec = self._simulation.gen_noise_spec(d, cfg.instance.sigma, cfg.instance.beta, cfg.master_seed)
        trial_seed = derive_seed(cfg.master_seed, 'trial', trial_index)
        return self._simulation.observe(cfg.instance.model_copy(update={'seed': trial_seed}), truth, noise_spec)

    def _run_trial(self, cfg: ExperimentConfig, trial_index: int, started: float) -> TrialReport:
        instance = self.trial_instance(cfg, trial_index)
        trial_seed = instance.config.seed
        obs, truth = instance.observations, instance.truth
        d, r, p = cfg.instance.d, cfg.instance.r, cfg.instance.p
        params = cfg.params or self._estimator.default_params(d, r, p)

        result = self._estimator.complete(obs, r, params, trial_seed)
        alignment = self._uq.align_permutation(result.factors, truth)
        estimate = result.factors.permuted(alignment.zero_based)
        sigmas = self._uq.estimate_all_sigmas(estimate, self._uq.estimate_noise(obs, estimate), obs, p)
        oracle = self._uq.oracle_all_sigmas(truth, instance.noise_spec, p)

        z = critical_value(cfg.alpha)
        tolerance = self._settings['hit_tolerance']

        factor_raw = (estimate.values - truth.values).T
        factor_scale = tolerance * max(1.0, float(np.max(np.abs(truth.values))))
        factor_normalized, factor_hits = self._normalize(factor_raw, self._uq.factor_variances(sigmas), z,
                                                         factor_scale)
        factor_oracle, _ = self._normalize(factor_raw, self._uq.factor_variances(oracle), z, factor_scale)

        tracked = self.tracked_entries(cfg)
        entry_truth = cp_eval_many(truth, tracked)
        entry_raw = cp_eval_many(estimate, tracked) - entry_truth
        entry_scale = tolerance * max(1.0, float(np.max(np.abs(entry_truth), initial=0.0)))
        entry_normalized, entry_hits = self._normalize(entry_raw, self._uq.entry_variances(estimate, sigmas, tracked),
                                                       z, entry_scale)
        entry_oracle, _ = self._normalize(entry_raw, self._uq.entry_variances(truth, oracle, tracked), z, entry_scale)

        noise = instance.noise_spec
        risk_factor, risk_tensor = self._uq.cr_bounds(noise.sigma_max, p, d, r, truth)
        bound_factor, bound_tensor = self._uq.cr_bounds(noise.sigma_min, p, d, r, truth)

        return TrialReport(trial_index=trial_index,
                           factor_errors=factor_raw.tolist(),
                           factor_normalized=factor_normalized.tolist(),
                           factor_oracle_normalized=factor_oracle.tolist(),
                           factor_hits=factor_hits.tolist(),
                           entry_errors=entry_raw.tolist(),
                           entry_normalized=entry_normalized.tolist(),
                           entry_oracle_normalized=entry_oracle.tolist(),
                           entry_hits=entry_hits.tolist(),
                           l2_factor_sq=np.sum(factor_raw ** 2, axis=1).tolist(),
                           l2_tensor_sq=frobenius_distance_sq(estimate, truth),
                           factor_risk_theory=risk_factor,
                           tensor_risk_theory=risk_tensor,
                           factor_cr_bound=bound_factor,
                           tensor_cr_bound=bound_tensor,
                           init_retries=result.init_retries,
                           wall_time=time.perf_counter() - started)

    def aggregate(self, reports: Sequence[TrialReport], cfg: ExperimentConfig) -> AggregateReport:
        ordered = sorted(reports, key=lambda report: report.trial_index)
        ok = [report for report in ordered if not report.failed]
        failed = [report.trial_index for report in ordered if report.failed]
        if not ok:
            raise ServiceException(f"all {len(ordered)} trials failed: {failed}")

        factor_cr = np.mean(np.array([report.factor_hits for report in ok], dtype=float), axis=0)
        entry_cr = np.mean(np.array([report.entry_hits for report in ok], dtype=float), axis=0)
        factor_normalized = np.array([report.factor_normalized for report in ok])
        entry_normalized = np.array([report.entry_normalized for report in ok])

        series = self._qq_series(factor_normalized, entry_normalized, cfg)
        # oracle-normalized twins, diagnostics only
        series.update(self._qq_series(np.array([report.factor_oracle_normalized for report in ok]),
                                      np.array([report.entry_oracle_normalized for report in ok]), cfg,
                                      suffix='_oracle'))
        tracked = self.tracked_entries(cfg) + 1
        return AggregateReport(
            alpha=cfg.alpha,
            trials_ok=len(ok),
            failures=len(failed),
            failed_trials=failed,
            mean_cr_factor=float(np.mean(factor_cr)),
            std_cr_factor=float(np.std(factor_cr)),
            mean_cr_entry=float(np.mean(entry_cr)),
            std_cr_entry=float(np.std(entry_cr)),
            factor_coverage=factor_cr.tolist(),
            entry_coverage=entry_cr.tolist(),
            tracked_entries=[tuple(int(x) for x in row) for row in tracked],
            qq_points={name: qq_points(values) for name, values in series.items() if values.shape[0] >= 2},
            ks_stats={name: ks_statistic(values) for name, values in series.items()},
            ks_sizes={name: int(values.shape[0]) for name, values in series.items()},
            l2_risk_factor=np.mean([report.l2_factor_sq for report in ok], axis=0).tolist(),
            l2_risk_tensor=float(np.mean([report.l2_tensor_sq for report in ok])),
            risk_theory_factor=np.mean([report.factor_risk_theory for report in ok], axis=0).tolist(),
            risk_theory_tensor=float(np.mean([report.tensor_risk_theory for report in ok])),
            cr_bound_factor=np.mean([report.factor_cr_bound for report in ok], axis=0).tolist(),
            cr_bound_tensor=float(np.mean([report.tensor_cr_bound for report in ok])),
        )

    @staticmethod
    def risk_table(aggregate: AggregateReport, cfg: ExperimentConfig) -> List[RiskRow]:
        pairs = [(f'factor_{l + 1}', empirical, theoretical)
                 for l, (empirical, theoretical) in enumerate(zip(aggregate.l2_risk_factor,
                                                                  aggregate.risk_theory_factor))]
        pairs.append(('tensor', aggregate.l2_risk_tensor, aggregate.risk_theory_tensor))
        return [RiskRow(quantity=name, empirical=empirical, theoretical=theoretical,
                        ratio=empirical / theoretical if theoretical > 0 else float('nan'))
                for name, empirical, theoretical in pairs]

    def run_experiment(self, cfg: ExperimentConfig, jobs: int = 1) -> Tuple[List[TrialReport], AggregateReport]:
        tasks = [(cfg, index) for index in range(cfg.trials)]
        logger.info(f"Running {cfg.trials} trials with {jobs} worker(s)")
        if jobs > 1:
            with Pool(jobs) as pool:
                reports = pool.map(_run_trial_task, tasks)
        else:
            reports = [self.run_trial(cfg, index) for _, index in tasks]
        aggregate = self.aggregate(reports, cfg)
        logger.info(f"Experiment done: {aggregate.trials_ok} ok, {aggregate.failures} failed, "
                    f"factor Mean(CR) {aggregate.mean_cr_factor:.4f}, entry Mean(CR) {aggregate.mean_cr_entry:.4f}")
        return sorted(reports, key=lambda report: report.trial_index), aggregate

    def run_sweep(self, cfg: ExperimentConfig, sigmas: Sequence[float], jobs: int = 1) -> List[SweepPoint]:
        """Repeats the experiment at each noise level; the risk curve against sigma comes from the points."""
        if not sigmas or any(sigma < 0 for sigma in sigmas):
            raise InvalidInputException(f"a sigma sweep needs non-negative noise levels, got {list(sigmas)}")
        points = []
        for sigma in sigmas:
            level = cfg.model_copy(update={'instance': cfg.instance.model_copy(update={'sigma': float(sigma)})})
            logger.info(f"Sweep point sigma={sigma}")
            _, aggregate = self.run_experiment(level, jobs)
            points.append(SweepPoint(sigma=sigma, aggregate=aggregate, risk=self.risk_table(aggregate, level)))
        return points

    @staticmethod
    def _normalize(raw: np.ndarray, variances: np.ndarray, z: float, zero_tol: float) -> Tuple[np.ndarray,
                                                                                                np.ndarray]:
        """Normalized errors raw / sd and interval hits |raw| <= z sd; errors below zero_tol always hit."""
        sd = np.sqrt(variances)
        resolved = np.abs(raw) <= zero_tol
        with np.errstate(divide='ignore', invalid='ignore'):
            normalized = np.where(sd > 0, raw / np.where(sd > 0, sd, 1.0), np.where(resolved, 0.0, np.inf))
        if not np.all(np.isfinite(normalized)):
            raise ServiceException(f"{int(np.sum(~np.isfinite(normalized)))} errors have zero estimated variance")
        hits = (np.abs(raw) <= z * sd) | resolved
        return normalized, hits

    def _qq_series(self, factor_normalized: np.ndarray, entry_normalized: np.ndarray,
                   cfg: ExperimentConfig, suffix: str = '') -> Dict[str, np.ndarray]:
        d, r = cfg.instance.d, cfg.instance.r
        series = {}
        for l, k in self._settings['qq_factor_locations']:
            if l <= r and k <= d:
                series[f'factor_{l}_{k}{suffix}'] = factor_normalized[:, l - 1, k - 1]
        keys = linear_keys(self.tracked_entries(cfg), d)
        for location in self._settings['qq_entry_locations']:
            if max(location) > d:
                continue
            a, b, c = sorted(i - 1 for i in location)
            column = int(np.searchsorted(keys, (a * d + b) * d + c))
            series['entry_' + '_'.join(str(i) for i in sorted(location)) + suffix] = entry_normalized[:, column]
        series['factor_pooled' + suffix] = factor_normalized.reshape(-1)
        series['entry_pooled' + suffix] = entry_normalized.reshape(-1)
        return series
