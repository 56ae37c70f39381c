from typing import List, Sequence, Tuple

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from app.config.configuration import TensorCiqConfiguration
from app.data.schemas.enums.enums import StepRule
from app.data.schemas.estimator_schema import CompletionResult, EstimatorParams, InitCandidate
from app.data.schemas.tensor_schema import FactorMatrix, ObservationSet
from app.domain.tensor.tensor_core import gradient, inner_cube, loss, tvp_mode3, unfold_mode3
from app.exceptions.tensorciq_exceptions import (EigenNotConverged, InitExhausted, InvalidInputException,
                                                 NonFiniteError)
from app.utils.logger import logger
from app.utils.seed_util import stream


class EstimatorService:
    """Spectral initialization followed by gradient descent on the observed squared loss."""

    def __init__(self, configuration: TensorCiqConfiguration):
        self._configuration = configuration
        self._settings = configuration.estimator

    def default_params(self, d: int, r: int, p: float) -> EstimatorParams:
        if not (1 <= r <= d) or not 0.0 < p <= 1.0:
            raise InvalidInputException(f"invalid sizes d={d}, r={r}, p={p}")
        return EstimatorParams(L=r ** self._settings['restart_exponent'],
                               eps_th=self._settings['eps_th'],
                               eta=self._settings['step_constant'] / p,
                               t0=self._settings['t0'],
                               early_stop=self._settings['early_stop'],
                               step_rule=StepRule(self._settings['step_rule']))

    def spectral_subspace(self, obs: ObservationSet, r: int) -> np.ndarray:
        """Top-r eigenvectors of P_offdiag(A A^T), A = unfold(T^obs / p), eigenvalues descending."""
        d = obs.d
        if obs.size == 0:
            raise InvalidInputException("cannot initialize from an empty observation set")
        if not 1 <= r <= d:
            raise InvalidInputException(f"rank r={r} outside 1..{d}")

        a = unfold_mode3(obs) / obs.p
        b = (a @ a.T).tocsr()
        b.setdiag(0.0)
        b.eliminate_zeros()

        if d <= self._settings['dense_eig_max_d'] or r >= d - 1:
            eigenvalues, eigenvectors = np.linalg.eigh(b.toarray())
        else:
            maxiter = self._settings['eig_maxiter_factor'] * d
            try:
                eigenvalues, eigenvectors = eigsh(b, k=r, which='LA', tol=self._settings['eig_tol'],
                                                  maxiter=maxiter, v0=np.full(d, 1.0 / np.sqrt(d)))
            except ArpackNoConvergence as e:
                raise EigenNotConverged(f"Lanczos did not converge within {maxiter} iterations "
                                        f"({len(e.eigenvalues)} of {r} eigenpairs found)")
        order = np.argsort(eigenvalues)[::-1][:r]
        logger.info(f"Spectral subspace d={d} r={r}: top eigenvalues {np.round(eigenvalues[order], 6).tolist()}")
        return eigenvectors[:, order]

    @staticmethod
    def retrieve_one_factor(obs: ObservationSet, p: float, subspace: np.ndarray, g: np.ndarray,
                            restart_index: int = 0) -> InitCandidate:
        d = obs.d
        theta = subspace @ (subspace.T @ np.asarray(g, dtype=float))
        m = tvp_mode3(obs, theta) / p
        if not np.any(m):
            return InitCandidate(direction=np.eye(d)[0], strength=0.0, spec_gap=0.0, restart_index=restart_index)

        left, singular_values, _ = np.linalg.svd(m)
        nu = left[:, 0] / np.linalg.norm(left[:, 0])
        cube = inner_cube(obs, nu)
        if cube < 0:
            nu, cube = -nu, -cube
        gap = singular_values[0] - singular_values[1] if d > 1 else singular_values[0]
        return InitCandidate(direction=nu, strength=max(cube / p, 0.0), spec_gap=max(float(gap), 0.0),
                             restart_index=restart_index)

    @staticmethod
    def prune(candidates: Sequence[InitCandidate], eps_th: float, r: int) -> List[InitCandidate]:
        """Greedy pick by largest spectral gap, dropping candidates within angle 1 - eps_th of each pick."""
        pool = sorted((c for c in candidates if not c.rejected), key=lambda c: (-c.spec_gap, c.restart_index))
        picked = []
        while pool and len(picked) < r:
            best = pool.pop(0)
            picked.append(best)
            pool = [c for c in pool if abs(float(c.direction @ best.direction)) <= 1.0 - eps_th]
        if len(picked) < r:
            raise InitExhausted(f"picked {len(picked)} of {r} factors from {len(candidates)} candidates")
        return picked

    def spectral_init(self, obs: ObservationSet, p: float, r: int, params: EstimatorParams,
                      seed: int) -> FactorMatrix:
        return self._initialize(obs, p, r, params, seed)[0]

    def column_steps(self, initial: FactorMatrix, params: EstimatorParams) -> np.ndarray:
        """Per-column step sizes; the calibrated rule scales eta by (reference / ||u_l^0||)^4."""
        steps = np.full(initial.r, params.eta)
        if params.step_rule == StepRule.Calibrated:
            norms = np.linalg.norm(initial.values, axis=0)
            reference = self._settings['step_reference_norm']
            positive = norms > 0
            steps[positive] = params.eta * (reference / norms[positive]) ** 4
        return steps

    def gd_refine(self, obs: ObservationSet, initial: FactorMatrix,
                  params: EstimatorParams) -> Tuple[FactorMatrix, List[float]]:
        """Runs t0 steps U <- U - grad f(U) diag(steps) / orbit_size and returns (U, loss trajectory)."""
        if initial.d != obs.d:
            raise InvalidInputException(f"factor dimension {initial.d} does not match observations d={obs.d}")
        orbit_size = self._settings['orbit_size']
        steps = self.column_steps(initial, params)
        logger.info(f"GD with {params.step_rule.value} steps {np.round(steps, 10).tolist()}")
        current = initial
        trajectory = [loss(current, obs)]
        with np.errstate(over='ignore', invalid='ignore'):
            for t in range(params.t0):
                grad = gradient(current, obs)
                if not np.all(np.isfinite(grad)):
                    raise NonFiniteError(f"gradient overflowed at iteration {t} (eta={params.eta})")
                if params.early_stop and \
                        np.linalg.norm(grad) < self._settings['early_stop_tol'] * np.linalg.norm(current.values):
                    logger.info(f"Early stop at iteration {t}")
                    break
                updated = current.values - grad * steps / orbit_size
                if not np.all(np.isfinite(updated)):
                    raise NonFiniteError(f"iterate overflowed at iteration {t} (eta={params.eta})")
                current = FactorMatrix(values=updated)
                value = loss(current, obs)
                if not np.isfinite(value):
                    raise NonFiniteError(f"loss overflowed at iteration {t} (eta={params.eta})")
                trajectory.append(value)
                logger.debug(f"GD iteration {t + 1}: loss {value:.6e}")
        logger.info(f"GD finished after {len(trajectory) - 1} iterations: loss {trajectory[0]:.6e} -> "
                    f"{trajectory[-1]:.6e}")
        return current, trajectory

    def complete(self, obs: ObservationSet, r: int, params: EstimatorParams, seed: int) -> CompletionResult:
        initial, retries = self._initialize(obs, obs.p, r, params, seed)
        factors, trajectory = self.gd_refine(obs, initial, params)
        return CompletionResult(factors=factors, initial_factors=initial, loss_trajectory=trajectory,
                                init_retries=retries)

    def _initialize(self, obs: ObservationSet, p: float, r: int, params: EstimatorParams,
                    seed: int) -> Tuple[FactorMatrix, int]:
        if params.L < r:
            raise InvalidInputException(f"L={params.L} restarts cannot yield r={r} factors")
        subspace = self.spectral_subspace(obs, r)
        max_retries = self._settings['max_init_retries']
        restarts = params.L
        for retry in range(max_retries + 1):
            draws = stream(seed, 'init', retry).standard_normal((restarts, obs.d))
            candidates = [self.retrieve_one_factor(obs, p, subspace, draws[tau], restart_index=tau)
                          for tau in range(restarts)]
            try:
                picked = self.prune(candidates, params.eps_th, r)
            except InitExhausted as e:
                if retry == max_retries:
                    raise InitExhausted(f"{e.message}; gave up after {max_retries} retries with L={restarts}")
                logger.warning(f"Initialization retry {retry + 1}: {e.message}; doubling L to {2 * restarts}")
                restarts *= 2
                continue
            logger.info(f"Pruned {restarts} candidates to {r} factors, spectral gaps "
                        f"{[round(c.spec_gap, 6) for c in picked]}")
            columns = [np.cbrt(c.strength) * c.direction for c in picked]
            return FactorMatrix.from_columns(*columns), retry
        raise InitExhausted()
