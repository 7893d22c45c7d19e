import math

import numpy as np
import pytest

from genbound import (Algorithm, DomainError, FiniteMeasure, LearningProblem,
                      MarkovKernel, algorithm_from_json, delta_bound,
                      erm_algorithm, exact_joint, expected_gen,
                      gibbs_algorithm, ignore_algorithm, mutual_information,
                      orlicz_norm, problem_from_json, subgaussian_sigma,
                      supersample_joint)
from genbound.orlicz import DiscreteRandomVariable

from conftest import algorithm_family, random_problem


def xor_problem():
    # two hypotheses, two outcomes, each hypothesis perfect on one outcome
    return LearningProblem(loss=np.array([[0.0, 1.0], [1.0, 0.0]]),
                           p_z=FiniteMeasure([0.5, 0.5]), n=1, bound=1.0)


def test_problem_shapes_and_enumeration(small_problem):
    prob = small_problem
    assert prob.num_hypotheses == 4
    assert prob.num_outcomes == 3
    assert prob.num_samples == 9
    assert prob.samples.shape == (9, 2)
    # lexicographic enumeration
    assert prob.samples[0].tolist() == [0, 0]
    assert prob.samples[1].tolist() == [0, 1]
    assert prob.samples[-1].tolist() == [2, 2]
    assert prob.sample_index((2, 1)) == 7
    assert abs(prob.sample_probs.sum() - 1.0) < 1e-12


def test_population_and_empirical_oracle(small_problem):
    prob = small_problem
    pop = prob.loss @ prob.p_z.weights
    assert np.allclose(prob.population_risks, pop)
    # empirical risk of hypothesis 0 on sample (z0, z2) is (0.0 + 1.0) / 2
    s = prob.sample_index((0, 2))
    assert abs(prob.empirical_matrix[0, s] - 0.5) < 1e-12
    assert np.allclose(prob.gen_matrix,
                       prob.population_risks[:, None] - prob.empirical_matrix)


def test_problem_rejects_out_of_range_loss():
    with pytest.raises(Exception):
        LearningProblem(np.array([[0.0, 1.5]]), FiniteMeasure([0.5, 0.5]),
                        n=1, bound=1.0)


def test_problem_json_roundtrip(small_problem):
    blob = small_problem.to_json()
    back = problem_from_json(blob)
    assert np.allclose(back.loss, small_problem.loss)
    assert np.allclose(back.p_z.weights, small_problem.p_z.weights)
    assert back.n == small_problem.n
    assert back.bound == small_problem.bound
    assert np.allclose(back.embedding.points, small_problem.embedding.points)


def test_gibbs_zero_beta_returns_prior(small_problem):
    prior = FiniteMeasure([0.1, 0.2, 0.3, 0.4])
    alg = gibbs_algorithm(small_problem, 0.0, prior=prior)
    assert np.allclose(alg.matrix, np.tile(prior.weights, (9, 1)))


def test_gibbs_hand_softmax():
    prob = xor_problem()
    alg = gibbs_algorithm(prob, 1.0)
    # sample z=0: empirical risks (0, 1), weights prop to (1, e^{-1})
    w0 = 1.0 / (1.0 + math.exp(-1.0))
    assert abs(alg.matrix[0, 0] - w0) < 1e-12
    assert abs(alg.matrix[0, 1] - (1.0 - w0)) < 1e-12
    assert abs(alg.matrix[1, 1] - w0) < 1e-12


def test_gibbs_large_beta_concentrates(small_problem):
    alg = gibbs_algorithm(small_problem, 1e3)
    emp = small_problem.empirical_matrix
    for s in range(small_problem.num_samples):
        minimizers = np.isclose(emp[:, s], emp[:, s].min(), atol=1e-12)
        assert alg.matrix[s, minimizers].sum() >= 1.0 - 1e-6


def test_erm_identity_on_separating_problem():
    prob = xor_problem()
    assert np.allclose(erm_algorithm(prob).matrix, np.eye(2))


def test_erm_ties_go_to_lowest_index():
    prob = LearningProblem(np.array([[0.3, 0.3], [0.3, 0.3], [0.9, 0.1]]),
                           FiniteMeasure([0.5, 0.5]), n=1, bound=1.0)
    alg = erm_algorithm(prob)
    # on z=0 hypotheses 0 and 1 tie at 0.3; on z=1 hypothesis 2 wins alone
    assert np.allclose(alg.matrix[0], [1.0, 0.0, 0.0])
    assert np.allclose(alg.matrix[1], [0.0, 0.0, 1.0])


def test_erm_scan_oracle(small_problem):
    alg = erm_algorithm(small_problem)
    emp = small_problem.empirical_matrix
    for s in range(small_problem.num_samples):
        winner = int(np.argmin(emp[:, s]))
        expect = np.zeros(4)
        expect[winner] = 1.0
        assert np.allclose(alg.matrix[s], expect)


def test_ignore_algorithm_rows(small_problem):
    alg = ignore_algorithm(small_problem)
    assert np.allclose(alg.matrix, 0.25)
    row = FiniteMeasure([0.7, 0.1, 0.1, 0.1])
    alg2 = ignore_algorithm(small_problem, row=row)
    assert np.allclose(alg2.matrix, np.tile(row.weights, (9, 1)))


def test_algorithm_from_json_kinds(small_problem):
    gibbs = algorithm_from_json(small_problem, {"kind": "gibbs", "beta": 2.5})
    assert gibbs.kind == "gibbs"
    assert np.allclose(gibbs.matrix, gibbs_algorithm(small_problem, 2.5).matrix)
    erm = algorithm_from_json(small_problem, {"kind": "erm"})
    assert np.allclose(erm.matrix, erm_algorithm(small_problem).matrix)
    ignore = algorithm_from_json(
        small_problem, {"kind": "ignore", "prior": [0.7, 0.1, 0.1, 0.1]})
    assert np.allclose(ignore.matrix[0], [0.7, 0.1, 0.1, 0.1])
    with pytest.raises(Exception):
        algorithm_from_json(small_problem, {"kind": "mystery"})


def test_exact_joint_rows_are_sample_law(small_problem, gibbs_alg):
    joint = exact_joint(small_problem, gibbs_alg)
    assert joint.weights.shape == (9, 4)
    assert np.allclose(joint.weights.sum(axis=1), small_problem.sample_probs)
    assert np.allclose(joint.marginal_y().weights,
                       small_problem.sample_probs @ gibbs_alg.matrix)


def test_exact_joint_ignoring_has_zero_mi(small_problem, ignoring_alg):
    assert mutual_information(exact_joint(small_problem, ignoring_alg)) == 0.0


def test_identity_algorithm_mi_is_source_entropy():
    p = np.array([0.5, 0.3, 0.2])
    prob = LearningProblem(np.eye(3) * 0.5, FiniteMeasure(p), n=1, bound=1.0)
    alg = Algorithm(MarkovKernel(np.eye(3)), kind="table")
    mi = mutual_information(exact_joint(prob, alg))
    entropy = -(p * np.log(p)).sum()
    assert abs(mi - entropy) < 1e-12


def test_expected_gen_ignoring_is_centered():
    est = expected_gen(xor_problem(), ignore_algorithm(xor_problem()))
    assert est.signed == 0.0
    assert abs(est.absolute - 0.5) < 1e-12


def test_expected_gen_constant_loss_is_zero():
    prob = LearningProblem(np.full((3, 2), 0.4), FiniteMeasure([0.25, 0.75]),
                           n=2, bound=1.0)
    for alg in algorithm_family(prob):
        est = expected_gen(prob, alg)
        assert est.signed == 0.0
        assert est.absolute == 0.0


def test_expected_gen_matches_bruteforce(small_problem, gibbs_alg):
    prob, alg = small_problem, gibbs_alg
    signed = absolute = 0.0
    for s in range(prob.num_samples):
        for w in range(prob.num_hypotheses):
            mass = prob.sample_probs[s] * alg.matrix[s, w]
            signed += mass * prob.gen_matrix[w, s]
            absolute += mass * abs(prob.gen_matrix[w, s])
    est = expected_gen(prob, alg)
    assert abs(est.signed - signed) < 1e-12
    assert abs(est.absolute - absolute) < 1e-12


def test_expected_gen_mc_matches_exact(small_problem, gibbs_alg):
    exact = expected_gen(small_problem, gibbs_alg)
    mc = expected_gen(small_problem, gibbs_alg, mode="mc",
                      samples=40000, seed=5)
    assert abs(mc.signed - exact.signed) <= 4 * mc.stderr_signed
    assert abs(mc.absolute - exact.absolute) <= 4 * max(mc.stderr_absolute, 1e-12)


def test_expected_gen_mc_coverage(small_problem, gibbs_alg):
    exact = expected_gen(small_problem, gibbs_alg)
    hits = 0
    for seed in range(10):
        mc = expected_gen(small_problem, gibbs_alg, mode="mc",
                          samples=4000, seed=seed)
        if abs(mc.signed - exact.signed) <= 4 * mc.stderr_signed:
            hits += 1
    assert hits >= 9


def test_expected_gen_mc_deterministic_across_workers(small_problem, gibbs_alg):
    one = expected_gen(small_problem, gibbs_alg, mode="mc", samples=9000,
                       seed=11, workers=1)
    many = expected_gen(small_problem, gibbs_alg, mode="mc", samples=9000,
                        seed=11, workers=4)
    assert one.signed == many.signed
    assert one.absolute == many.absolute


def test_supersample_shapes(small_problem, gibbs_alg):
    law = supersample_joint(small_problem, gibbs_alg)
    s = small_problem.num_samples
    assert law.p_tilde.shape == (s * s,)
    assert law.conditional.shape == (s * s, 4, 4)
    assert law.train_index.shape == (s * s, 4)
    assert law.signs.shape == (4, 2)
    assert abs(law.p_tilde.sum() - 1.0) < 1e-12
    assert law.n_pairs == s * s


def test_supersample_marginal_recovers_exact_joint(small_problem, gibbs_alg):
    law = supersample_joint(small_problem, gibbs_alg)
    joint = exact_joint(small_problem, gibbs_alg)
    assert np.allclose(law.sw_marginal(), joint.weights, atol=1e-12)


def test_supersample_ignoring_cmi_zero(small_problem, ignoring_alg):
    law = supersample_joint(small_problem, ignoring_alg)
    assert law.cmi() == 0.0


def test_supersample_cmi_ceiling(small_problem):
    ceiling = small_problem.n * math.log(2.0)
    for alg in algorithm_family(small_problem):
        assert supersample_joint(small_problem, alg).cmi() <= ceiling + 1e-12


def test_supersample_xor_cmi_hand_value():
    # n=1 ERM on the xor problem: the sign leaks only when the two halves
    # of the supersample differ, which happens with probability one half
    law = supersample_joint(xor_problem(), erm_algorithm(xor_problem()))
    assert abs(law.cmi() - 0.5 * math.log(2.0)) < 1e-12


def test_supersample_signed_gen_matches_exact(small_problem):
    for alg in algorithm_family(small_problem):
        law = supersample_joint(small_problem, alg)
        est = expected_gen(small_problem, alg)
        assert abs(law.signed_gen() - est.signed) < 1e-12


def test_subgaussian_sigma_values():
    assert subgaussian_sigma(xor_problem()) == 0.5
    flat = LearningProblem(np.full((2, 3), 0.2), FiniteMeasure([1 / 3] * 3),
                           n=1, bound=1.0)
    assert subgaussian_sigma(flat) == 0.0
    unbounded = LearningProblem(np.array([[0.0, 1.0]]),
                                FiniteMeasure([0.5, 0.5]), n=1)
    with pytest.raises(DomainError):
        subgaussian_sigma(unbounded)


def test_subgaussian_norm_certificate():
    # sqrt(n) times the centered generalization gap of every hypothesis must
    # have Orlicz-2 norm at most sqrt(6) sigma under the sample law
    gen = np.random.default_rng(21)
    for _ in range(20):
        prob = random_problem(gen)
        sigma = subgaussian_sigma(prob)
        cap = math.sqrt(6.0) * sigma * (1 + 1e-9)
        scaled = math.sqrt(prob.n) * prob.gen_matrix
        law = FiniteMeasure(prob.sample_probs)
        for w in range(prob.num_hypotheses):
            var = DiscreteRandomVariable(scaled[w], law)
            assert orlicz_norm(var, p=2.0) <= cap + 1e-12


def test_delta_bound_oracle(small_problem):
    delta = delta_bound(small_problem)
    loss = small_problem.loss
    m = small_problem.num_outcomes
    assert delta.shape == (m, m)
    for z in range(m):
        for z2 in range(m):
            assert abs(delta[z, z2] - np.abs(loss[:, z] - loss[:, z2]).max()) < 1e-15
    assert np.allclose(np.diag(delta), 0.0)


def test_delta_bound_single_hypothesis():
    prob = LearningProblem(np.array([[0.1, 0.9]]), FiniteMeasure([0.5, 0.5]),
                           n=1, bound=1.0)
    assert np.allclose(delta_bound(prob), [[0.0, 0.8], [0.8, 0.0]])
