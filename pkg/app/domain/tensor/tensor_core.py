"""Kernels on symmetric third-order tensors stored as canonical triples.

Every closure sum runs over the distinct ordered triples of the symmetric
closure, listed once each (see ``indexing.symmetric_closure``). Reductions use
``np.bincount`` in that fixed order.
"""
from typing import Union

import numpy as np
from scipy import sparse

from app.data.schemas.tensor_schema import CanonicalTriple, DenseSymTensor, FactorMatrix, ObservationSet
from app.domain.tensor.indexing import multiplicity
from app.exceptions.tensorciq_exceptions import IndexOutOfRange

SymmetricSource = Union[ObservationSet, DenseSymTensor]


def canonicalize(i: int, j: int, k: int, d: int = None) -> CanonicalTriple:
    """Sorts a 1-based triple and attaches its orbit multiplicity."""
    for index in (i, j, k):
        if index < 1 or (d is not None and index > d):
            raise IndexOutOfRange(f"index {index} outside 1..{d if d is not None else 'd'} in ({i},{j},{k})")
    a, b, c = sorted((int(i), int(j), int(k)))
    return CanonicalTriple(i=a, j=b, k=c, multiplicity=multiplicity(a, b, c))


def cp_eval(factors: FactorMatrix, t: CanonicalTriple) -> float:
    """sum_l u_{l,i} u_{l,j} u_{l,k}."""
    if t.k > factors.d:
        raise IndexOutOfRange(f"triple {t.as_tuple()} outside 1..{factors.d}")
    a, b, c = t.zero_based
    u = factors.values
    return float(np.dot(u[a] * u[b], u[c]))


def cp_eval_many(factors: FactorMatrix, triples: np.ndarray) -> np.ndarray:
    """cp_eval over an (n, 3) array of 0-based triples."""
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    u = factors.values
    return np.sum(u[triples[:, 0]] * u[triples[:, 1]] * u[triples[:, 2]], axis=1)


def unfold_mode3(source: SymmetricSource) -> sparse.csr_matrix:
    """d x d^2 matricization with entry (k, i*d + j) = S_{i,j,k} (0-based)."""
    d = source.d
    i, j, k, v = source.closure
    return sparse.csr_matrix((v, (k, i * d + j)), shape=(d, d * d))


def tvp_mode3(source: SymmetricSource, theta: np.ndarray) -> np.ndarray:
    """[S x_3 theta]_{i,j} = sum_k S_{i,j,k} theta_k, a symmetric d x d matrix."""
    d = source.d
    theta = np.asarray(theta, dtype=float)
    i, j, k, v = source.closure
    flat = np.bincount(i * d + j, weights=v * theta[k], minlength=d * d)
    return flat.reshape(d, d)


def tvp_mode12(source: SymmetricSource, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """[S x_1 u x_2 v]_k = sum_{i,j} S_{i,j,k} u_i v_j."""
    d = source.d
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    i, j, k, values = source.closure
    return np.bincount(k, weights=values * u[i] * v[j], minlength=d)


def inner_cube(source: SymmetricSource, nu: np.ndarray) -> float:
    """<S, nu (x) nu (x) nu> over the symmetric closure."""
    nu = np.asarray(nu, dtype=float)
    t = source.triples
    if t.shape[0] == 0:
        return 0.0
    return float(np.sum(source.multiplicities * source.values * nu[t[:, 0]] * nu[t[:, 1]] * nu[t[:, 2]]))


def residuals(factors: FactorMatrix, obs: ObservationSet) -> np.ndarray:
    """cp_eval(U, t) - T^obs_t for every observed canonical triple."""
    return cp_eval_many(factors, obs.triples) - obs.values


def loss(factors: FactorMatrix, obs: ObservationSet) -> float:
    """f(U): squared residuals summed over the symmetric closure of Omega."""
    r = residuals(factors, obs)
    return float(np.sum(obs.multiplicities * r * r))


def gradient(factors: FactorMatrix, obs: ObservationSet) -> np.ndarray:
    """Gradient of ``loss``; column l is 6 (R x_1 u_l x_2 u_l) with R the residual tensor on Omega.

    This is grad f, not the rescaled grad g = grad f / (6p).
    """
    u = factors.values
    d, r = u.shape
    i, j, k, observed = obs.closure
    if i.shape[0] == 0:
        return np.zeros((d, r))
    closure_residual = np.sum(u[i] * u[j] * u[k], axis=1) - observed
    grad = np.empty((d, r))
    for l in range(r):
        grad[:, l] = np.bincount(k, weights=closure_residual * u[i, l] * u[j, l], minlength=d)
    return 6.0 * grad


def lifted_row(factors: FactorMatrix, i: int, j: int) -> np.ndarray:
    """Row (i, j) of the lift [u_s (x) u_s]_s, i.e. (u_{s,i} u_{s,j})_s, for 1-based i, j."""
    if not (1 <= i <= factors.d and 1 <= j <= factors.d):
        raise IndexOutOfRange(f"lifted row ({i},{j}) outside 1..{factors.d}")
    u = factors.values
    return u[i - 1] * u[j - 1]


def gram_lifted(factors: FactorMatrix) -> np.ndarray:
    """Gram matrix of the lift: entry (s, t) = (u_s . u_t)^2."""
    inner = factors.values.T @ factors.values
    return inner * inner


def frobenius_distance_sq(estimate: FactorMatrix, truth: FactorMatrix) -> float:
    """||sum_l u_l^(x)3 - sum_l v_l^(x)3||_F^2 without forming either tensor."""
    u, v = estimate.values, truth.values
    uu, uv, vv = u.T @ u, u.T @ v, v.T @ v
    return float(np.sum(uu ** 3) - 2.0 * np.sum(uv ** 3) + np.sum(vv ** 3))
