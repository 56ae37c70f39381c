import numpy as np
import pytest

from app.data.schemas.tensor_schema import DenseSymTensor, FactorMatrix, ObservationSet
from app.domain.tensor.tensor_core import (canonicalize, cp_eval, cp_eval_many, frobenius_distance_sq, gradient,
                                           gram_lifted, inner_cube, lifted_row, loss, residuals, tvp_mode12,
                                           tvp_mode3, unfold_mode3)
from app.domain.tensor.indexing import canonical_triples
from app.exceptions.tensorciq_exceptions import IndexOutOfRange
from tests.oracles import dense_cp, dense_observations, lifted_matrix


def test_canonicalize_sorts_and_attaches_multiplicity():
    t = canonicalize(2, 1, 3)
    assert t.as_tuple() == (1, 2, 3)
    assert t.multiplicity == 6
    assert canonicalize(2, 2, 1).as_tuple() == (1, 2, 2)
    assert canonicalize(2, 2, 1).multiplicity == 3
    assert canonicalize(4, 4, 4).multiplicity == 1


@pytest.mark.parametrize("triple", [(0, 1, 2), (1, 2, 6)])
def test_canonicalize_rejects_out_of_range(triple):
    with pytest.raises(IndexOutOfRange):
        canonicalize(*triple, d=5)


def test_cp_eval_matches_dense_tensor(random_factors):
    factors = random_factors(5, 3)
    dense = dense_cp(factors)
    assert cp_eval(factors, canonicalize(3, 1, 5)) == pytest.approx(dense[2, 0, 4], rel=1e-12)
    np.testing.assert_allclose(cp_eval_many(factors, [[0, 0, 0], [1, 3, 4]]), [dense[0, 0, 0], dense[1, 3, 4]])


def test_cp_eval_is_invariant_under_column_permutation(random_factors):
    factors = random_factors(6, 3)
    permuted = factors.permuted([2, 0, 1])
    t = canonicalize(1, 4, 6)
    assert cp_eval(permuted, t) == pytest.approx(cp_eval(factors, t), rel=1e-14)


def test_negating_a_factor_changes_the_tensor(random_factors):
    factors = random_factors(4, 2)
    flipped = FactorMatrix(values=factors.values * np.array([-1.0, 1.0]))
    original = DenseSymTensor.from_factors(factors).values
    assert np.max(np.abs(DenseSymTensor.from_factors(flipped).values - original)) > 0


def test_unfold_and_vector_products_match_dense(random_observations, rng):
    obs = random_observations(5, 0.6)
    dense, _ = dense_observations(obs)
    theta, u, v = rng.standard_normal((3, 5))

    np.testing.assert_allclose(unfold_mode3(obs).toarray(), dense.transpose(2, 0, 1).reshape(5, 25))
    np.testing.assert_allclose(tvp_mode3(obs, theta), np.einsum('ijk,k->ij', dense, theta), atol=1e-12)
    np.testing.assert_allclose(tvp_mode12(obs, u, v), np.einsum('ijk,i,j->k', dense, u, v), atol=1e-12)
    assert inner_cube(obs, u) == pytest.approx(np.einsum('ijk,i,j,k->', dense, u, u, u), rel=1e-10)


def test_tvp_mode3_is_symmetric(random_observations, rng):
    matrix = tvp_mode3(random_observations(6, 0.5), rng.standard_normal(6))
    np.testing.assert_allclose(matrix, matrix.T, atol=1e-14)


def test_loss_sums_over_the_symmetric_closure(random_observations, random_factors):
    obs = random_observations(4, 0.7)
    factors = random_factors(4, 2)
    dense, mask = dense_observations(obs)
    expected = np.sum(mask * (dense_cp(factors) - dense) ** 2)
    assert loss(factors, obs) == pytest.approx(expected, rel=1e-12)
    np.testing.assert_allclose(residuals(factors, obs), cp_eval_many(factors, obs.triples) - obs.values)


def test_gradient_matches_dense_formula(random_observations, random_factors):
    obs = random_observations(5, 0.5)
    factors = random_factors(5, 2)
    dense, mask = dense_observations(obs)
    residual = mask * (dense_cp(factors) - dense)
    u = factors.values
    expected = 6.0 * np.einsum('ijk,il,jl->kl', residual, u, u)
    np.testing.assert_allclose(gradient(factors, obs), expected, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("d, r, seed", [(2, 1, 0), (4, 2, 1), (6, 3, 2)])
def test_gradient_matches_finite_differences(d, r, seed):
    rng = np.random.default_rng(seed)
    triples = canonical_triples(d)
    keep = rng.random(triples.shape[0]) < 0.6
    keep[0] = True
    obs = ObservationSet(d=d, p=0.6, observed=triples[keep], observed_values=rng.standard_normal(keep.sum()))
    u = rng.standard_normal((d, r))
    analytic = gradient(FactorMatrix(values=u), obs)

    h = 1e-6
    numeric = np.zeros_like(u)
    for index in np.ndindex(*u.shape):
        step = np.zeros_like(u)
        step[index] = h
        numeric[index] = (loss(FactorMatrix(values=u + step), obs) - loss(FactorMatrix(values=u - step), obs)) / (2 * h)
    assert np.linalg.norm(analytic - numeric) <= 1e-6 * max(1.0, np.linalg.norm(analytic))


def test_gradient_of_empty_observation_set_is_zero(random_factors):
    assert not np.any(gradient(random_factors(3, 2), ObservationSet.empty(3, 0.5)))


def test_lifted_row_and_gram(random_factors):
    factors = random_factors(4, 3)
    lifted = lifted_matrix(factors)
    np.testing.assert_allclose(lifted_row(factors, 2, 4), lifted[1 * 4 + 3])
    np.testing.assert_allclose(gram_lifted(factors), lifted.T @ lifted, rtol=1e-12)
    with pytest.raises(IndexOutOfRange):
        lifted_row(factors, 0, 1)


def test_frobenius_distance_matches_dense(random_factors):
    estimate, truth = random_factors(5, 2), random_factors(5, 2)
    expected = np.sum((dense_cp(estimate) - dense_cp(truth)) ** 2)
    assert frobenius_distance_sq(estimate, truth) == pytest.approx(expected, rel=1e-10)
    assert frobenius_distance_sq(truth, truth) == pytest.approx(0.0, abs=1e-9)
