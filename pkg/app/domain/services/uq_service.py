"""Plug-in and oracle covariances of the factor estimate, entry variances and confidence intervals.

Slice covariances are accumulated over the symmetric closure of Omega with one
``np.bincount`` per (s, t) pair, so the d^2 x d^2 diagonal weight matrix of each
slice is never formed.
"""
import itertools
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment
from scipy.stats import norm

from app.config.configuration import TensorCiqConfiguration
from app.data.schemas.enums.enums import Provenance
from app.data.schemas.instance_schema import NoiseSpec
from app.data.schemas.tensor_schema import CanonicalTriple, FactorMatrix, ObservationSet
from app.data.schemas.uq_schema import (ConfidenceInterval, CovarianceEstimate, EntryVariance,
                                        PermutationMap)
from app.domain.tensor.indexing import symmetric_closure
from app.domain.tensor.tensor_core import canonicalize, gram_lifted, residuals
from app.exceptions.tensorciq_exceptions import (IndexOutOfRange, InvalidInputException, NegativeVariance,
                                                 SingularGram)
from app.utils.logger import logger


def critical_value(alpha: float) -> float:
    """Phi^{-1}(1 - alpha / 2)."""
    if not 0.0 < alpha <= 1.0:
        raise InvalidInputException(f"alpha={alpha} outside (0, 1)")
    return float(norm.ppf(1.0 - alpha / 2.0))


class UncertaintyService:

    def __init__(self, configuration: TensorCiqConfiguration):
        self._configuration = configuration
        self._settings = configuration.uq

    @staticmethod
    def estimate_noise(obs: ObservationSet, factors: FactorMatrix) -> np.ndarray:
        """E_hat = T^obs - cp_eval(U, .) on each observed canonical triple, in observation order."""
        return -residuals(factors, obs)

    def estimate_sigma_k(self, factors: FactorMatrix, noise_estimate: np.ndarray, obs: ObservationSet,
                         p: float, k: int) -> CovarianceEstimate:
        self._check_slice(k, factors.d)
        return self.estimate_all_sigmas(factors, noise_estimate, obs, p)[k - 1]

    def estimate_all_sigmas(self, factors: FactorMatrix, noise_estimate: np.ndarray, obs: ObservationSet,
                            p: float) -> List[CovarianceEstimate]:
        if noise_estimate.shape[0] != obs.size:
            raise InvalidInputException(f"{noise_estimate.shape[0]} noise estimates for {obs.size} observations")
        i, j, k, e_hat, _ = symmetric_closure(obs.triples, noise_estimate)
        weights = e_hat * e_hat / p
        sandwiched = self._sandwich(factors, self._slice_sums(factors, i, j, k, weights))
        covariances = [CovarianceEstimate(k=slot + 1, matrix=(2.0 / p) * sandwiched[slot],
                                          provenance=Provenance.Plugin)
                       for slot in range(factors.d)]
        logger.info(f"Plug-in covariances for {factors.d} slices from {obs.size} observed entries")
        return covariances

    def oracle_sigma_k(self, truth: FactorMatrix, noise: NoiseSpec, p: float, k: int) -> CovarianceEstimate:
        self._check_slice(k, truth.d)
        return self.oracle_all_sigmas(truth, noise, p)[k - 1]

    def oracle_all_sigmas(self, truth: FactorMatrix, noise: NoiseSpec, p: float) -> List[CovarianceEstimate]:
        if noise.d != truth.d:
            raise InvalidInputException(f"noise spec d={noise.d} does not match factors d={truth.d}")
        i, j, k, variances = noise.as_tensor().closure
        sandwiched = self._sandwich(truth, self._slice_sums(truth, i, j, k, variances))
        return [CovarianceEstimate(k=slot + 1, matrix=(2.0 / p) * sandwiched[slot], provenance=Provenance.Oracle)
                for slot in range(truth.d)]

    def entry_variance(self, factors: FactorMatrix, sigmas: Sequence[CovarianceEstimate],
                       t: CanonicalTriple) -> EntryVariance:
        if t.k > factors.d:
            raise IndexOutOfRange(f"triple {t.as_tuple()} outside 1..{factors.d}")
        value = self.entry_variances(factors, sigmas, np.array([t.zero_based]))[0]
        return EntryVariance(triple=t, value=float(value), provenance=sigmas[t.i - 1].provenance)

    def entry_variances(self, factors: FactorMatrix, sigmas: Sequence[CovarianceEstimate],
                        triples: np.ndarray) -> np.ndarray:
        """Variances at 0-based canonical triples.

        Each position contributes the lifted row of the other two indices against
        the covariance of its own slice; positions sharing a slice are fully
        correlated, which yields the 4x and 9x factors on repeated indices.
        """
        triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        if len(sigmas) != factors.d:
            raise InvalidInputException(f"expected {factors.d} slice covariances, got {len(sigmas)}")
        stacked = np.stack([s.matrix for s in sigmas])
        u = factors.values
        a, b, c = triples[:, 0], triples[:, 1], triples[:, 2]
        lifts = (u[b] * u[c], u[a] * u[c], u[a] * u[b])
        slots = (a, b, c)

        def quadratic(x, slot, y):
            return np.einsum('nr,nrs,ns->n', x, stacked[slot], y)

        values = sum(quadratic(lifts[q], slots[q], lifts[q]) for q in range(3))
        for q, s in ((0, 1), (1, 2), (0, 2)):
            shared = slots[q] == slots[s]
            values = values + 2.0 * shared * quadratic(lifts[q], slots[q], lifts[s])
        return self._clamp(values, 'entry variance')

    def ci_factor(self, u_lk: float, sigma_k: CovarianceEstimate, l: int, alpha: float) -> ConfidenceInterval:
        variance = float(self._clamp(np.array([sigma_k.variance(l)]), f'variance of u_{l},{sigma_k.k}')[0])
        return ConfidenceInterval(center=float(u_lk), half_width=critical_value(alpha) * np.sqrt(variance),
                                  level=1.0 - alpha)

    def ci_entry(self, t_ijk: float, v: EntryVariance, alpha: float) -> ConfidenceInterval:
        return ConfidenceInterval(center=float(t_ijk), half_width=critical_value(alpha) * np.sqrt(v.value),
                                  level=1.0 - alpha)

    def factor_variances(self, sigmas: Sequence[CovarianceEstimate]) -> np.ndarray:
        """r x d array whose (l, k) entry is (Sigma_k)_{l,l}."""
        diagonals = np.stack([np.diag(s.matrix) for s in sigmas], axis=1)
        return self._clamp(diagonals, 'factor variance')

    def factor_intervals(self, factors: FactorMatrix, sigmas: Sequence[CovarianceEstimate],
                         alpha: float) -> Dict[Tuple[int, int], ConfidenceInterval]:
        """Intervals for every factor entry, keyed by 1-based (l, k)."""
        half_widths = critical_value(alpha) * np.sqrt(self.factor_variances(sigmas))
        return {(l + 1, k + 1): ConfidenceInterval(center=float(factors.values[k, l]),
                                                   half_width=float(half_widths[l, k]), level=1.0 - alpha)
                for l in range(factors.r) for k in range(factors.d)}

    def entry_intervals(self, factors: FactorMatrix, sigmas: Sequence[CovarianceEstimate],
                        triples: Sequence[Tuple[int, int, int]], alpha: float) -> List[Tuple[CanonicalTriple,
                                                                                             ConfidenceInterval]]:
        """Intervals for 1-based triples given in any index order."""
        canonical = [canonicalize(*t, d=factors.d) for t in triples]
        if not canonical:
            return []
        zero_based = np.array([t.zero_based for t in canonical])
        u = factors.values
        centers = np.sum(u[zero_based[:, 0]] * u[zero_based[:, 1]] * u[zero_based[:, 2]], axis=1)
        half_widths = critical_value(alpha) * np.sqrt(self.entry_variances(factors, sigmas, zero_based))
        return [(t, ConfidenceInterval(center=float(center), half_width=float(width), level=1.0 - alpha))
                for t, center, width in zip(canonical, centers, half_widths)]

    def align_permutation(self, factors: FactorMatrix, reference: FactorMatrix) -> PermutationMap:
        if factors.values.shape != reference.values.shape:
            raise InvalidInputException(f"cannot align {factors.values.shape} factors to {reference.values.shape}")
        u, ref = factors.values, reference.values
        r = u.shape[1]
        # cost[t, s] = ||u_s - ref_t||^2
        cost = np.sum((ref[:, :, None] - u[:, None, :]) ** 2, axis=0)
        if r <= self._settings['exhaustive_permutation_max_r']:
            best, best_cost = None, np.inf
            rows = np.arange(r)
            for perm in itertools.permutations(range(r)):
                total = cost[rows, list(perm)].sum()
                if total < best_cost:
                    best, best_cost = list(perm), total
        else:
            _, best = linear_sum_assignment(cost)
            best = [int(s) for s in best]
        residual = float(np.linalg.norm(u[:, best] - ref))
        return PermutationMap(mapping=[s + 1 for s in best], residual=residual)

    @staticmethod
    def entry_strength_ok(reference: FactorMatrix, t: CanonicalTriple, tau: float) -> bool:
        if tau < 0:
            raise InvalidInputException(f"strength threshold tau={tau} must be non-negative")
        if tau == 0:
            return True
        u = reference.values
        i, j, k = t.zero_based
        squared = u ** 2
        largest = float(np.sqrt(np.max(squared @ squared.T)))
        if largest == 0.0:
            return False
        strength = sum(np.linalg.norm(u[a] * u[b]) for a, b in ((j, k), (i, j), (i, k)))
        return strength / largest >= tau

    @staticmethod
    def cr_bounds(noise_floor: float, p: float, d: int, r: int, reference: FactorMatrix) -> Tuple[List[float], float]:
        """2 s^2 d / (p ||u_l||^4) per factor and 6 s^2 d r / p for the tensor."""
        norms_sq = np.sum(reference.values ** 2, axis=0)
        factor = (2.0 * noise_floor ** 2 * d / (p * norms_sq ** 2)).tolist()
        return factor, 6.0 * noise_floor ** 2 * d * r / p

    @staticmethod
    def _slice_sums(factors: FactorMatrix, i: np.ndarray, j: np.ndarray, k: np.ndarray,
                    weights: np.ndarray) -> np.ndarray:
        """S[k] = sum over closure entries in slice k of weight * lift_ij lift_ij^T, shape (d, r, r)."""
        u = factors.values
        d, r = u.shape
        sums = np.zeros((d, r, r))
        if i.shape[0] == 0:
            return sums
        lift = u[i] * u[j]
        for s in range(r):
            for t in range(s, r):
                column = np.bincount(k, weights=weights * lift[:, s] * lift[:, t], minlength=d)
                sums[:, s, t] = column
                sums[:, t, s] = column
        return sums

    def _sandwich(self, factors: FactorMatrix, sums: np.ndarray) -> np.ndarray:
        """G^{-1} S[k] G^{-1} for every slice, G the lifted Gram matrix."""
        gram = gram_lifted(factors)
        condition = np.linalg.cond(gram)
        if not np.isfinite(condition) or condition > self._settings['max_gram_condition']:
            raise SingularGram(f"lifted Gram matrix has condition number {condition:.3e}")
        try:
            factor = linalg.cho_factor(gram)
        except linalg.LinAlgError as e:
            raise SingularGram(f"lifted Gram matrix is not positive definite: {e}")
        inverse = linalg.cho_solve(factor, np.eye(gram.shape[0]))
        inverse = 0.5 * (inverse + inverse.T)
        return np.einsum('ab,kbc,cd->kad', inverse, sums, inverse)

    def _clamp(self, values: np.ndarray, what: str) -> np.ndarray:
        tolerance = self._settings['negative_variance_tol']
        if np.any(values < -tolerance):
            raise NegativeVariance(f"{what} {float(values.min()):.3e} below -{tolerance}")
        if np.any(values < 0):
            logger.warning(f"Clamped {int(np.sum(values < 0))} slightly negative {what} values to 0")
            values = np.where(values < 0, 0.0, values)
        return values

    @staticmethod
    def _check_slice(k: int, d: int):
        if not 1 <= k <= d:
            raise IndexOutOfRange(f"slice {k} outside 1..{d}")
