"""High-probability bounds checked against the exact gap distribution.

Because the (sample, hypothesis) joint is enumerable, the probability that
|gen| exceeds a threshold is an exact sum. A tail report therefore carries
the true violation probability, which must stay at or below delta.
"""

import numpy as np

from genbound import (FiniteMeasure, LearningProblem, chain_from_partitions,
                      dyadic_partitions, gibbs_algorithm, tail_pac_bayes,
                      tail_pointwise_check, tail_transductive)

loss = np.array([[0.0, 0.4, 1.0],
                 [0.3, 0.1, 0.8],
                 [0.9, 0.5, 0.2],
                 [0.6, 0.7, 0.35]])
prob = LearningProblem(loss, FiniteMeasure([0.5, 0.3, 0.2]), n=2, bound=1.0)
alg = gibbs_algorithm(prob, 2.0)

print("pointwise tail: P(|gen| > threshold(delta)) <= delta")
for delta in (0.25, 0.1, 0.05):
    report = tail_pointwise_check(prob, alg, delta)
    print(f"  delta = {delta:5.2f}: exact violation = {report.violation:.6f}, "
          f"passed = {report.passed}")

print("\nposterior-averaged tail (threshold depends on the drawn sample):")
for delta in (0.25, 0.1, 0.05):
    report = tail_pac_bayes(prob, alg, delta)
    thresholds = report.details["per_sample_rhs"]
    print(f"  delta = {delta:5.2f}: thresholds in "
          f"[{thresholds.min():.4f}, {thresholds.max():.4f}], "
          f"exact violation = {report.violation:.6f}, passed = {report.passed}")

print("\nchained tail with per-level union weights:")
chain = chain_from_partitions(prob, alg, dyadic_partitions(loss.shape[0]))
for delta in (0.25, 0.1, 0.05):
    report = tail_transductive(prob, alg, chain, delta)
    print(f"  delta = {delta:5.2f}: exact violation = {report.violation:.6f}, "
          f"passed = {report.passed}")
