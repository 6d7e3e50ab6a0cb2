"""Smoke test for the tailtree extension module."""

import json
import math

import tailtree as tt

# Hüsler–Reiss chain 1-2-3-4, unit variogram per edge
gamma = [[float(abs(i - j)) for j in range(4)] for i in range(4)]
sample = tt.simulate(2000, seed=3, gamma=gamma)
assert (sample.n, sample.d) == (2000, 4)

tree, weights = tt.learn_tree(sample, weight="tau")
assert tree == tt.Tree.chain([1, 2, 3, 4]), tree
assert len(weights) == 4

model, reports = tt.fit_tree(sample, tree, method="m", family="hr", k=100)
assert model.d == 4 and len(model.edges()) == 3
for a, b, fam in model.edges():
    assert fam.kind == "hr" and abs(fam.params[0] - 1.0) < 0.5, (a, b, fam.params)
assert json.loads(reports)

again = tt.TreeModel.from_json(model.to_json())
assert again == model

true = tt.TreeModel.husler_reiss(tree, gamma)
lam, _, _ = true.tdc(1, 2)
assert abs(lam - (2 - 2 * 0.6914624612740131)) < 1e-9, lam  # 2 - 2 Φ(1/2)

p, se = true.rare_event([100.0, 100.0, math.inf, math.inf])
assert 0 < p < 0.02 and se == 0.0, (p, se)
assert true.rare_event([math.inf] * 4)[0] == 0.0

alog = tt.TreeModel.asym_logistic(tt.Tree.star(3, 1), [0.5, 0.8, 0.6])
v, _, exact = alog.stdf([1.0, 1.0, 1.0])
assert exact and 1.0 <= v <= 3.0

cdf, surv, err = tt.oracle_joint_cdf([10.0, 10.0], psi=[0.5, 0.5], noise_shape=2.0, tol=1e-6)
assert abs(cdf + surv - 1.0) < 1e-9 and err < 1e-5

anti = tt.Sample([[float(i), float(-i)] for i in range(200)])
try:
    tt.fit_tree(anti, tt.Tree(2, [(1, 2)]), method="mm", k=50)
except tt.EstimationError:
    pass
else:
    raise AssertionError("expected EstimationError")

print("python smoke test: ok")
