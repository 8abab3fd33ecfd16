"""Feature covariance under small input noise vs the Jacobian prediction.

For y = f(x + eps), eps ~ N(0, sigma^2 I), the first-order prediction is
Cov[y] ~= sigma^2 J J^T. A linear map matches at any noise scale up to
Monte-Carlo error; a curved map matches only as sigma -> 0, and the
approach is visible in the error curve.
"""

import numpy as np

from sensorank import jacobian, streams
from sensorank.encoders import LinearEncoder, MlpEncoder

# ----------------------------------------------------------------- linear map

enc = LinearEncoder.random(out_dim=6, input_shape=(4,), seed=5)
x = streams.generator(5, streams.NOISE_DELTAS).standard_normal(4)

res = jacobian.local_feature_covariance_check(enc, x, sigma=0.01, n_samples=100000, seed=42)
print("linear 4 -> 6 map, sigma = 1e-2, 1e5 samples:")
print(f"  max relative error (empirical vs sigma^2 W W^T): {res.max_rel_error:.4f}")
print(f"  predicted diag: {np.round(np.diag(res.predicted), 6)}")
print(f"  empirical diag: {np.round(np.diag(res.empirical), 6)}")
print("residual is pure Monte-Carlo noise; the linear prediction is exact")

# ----------------------------------------------------------------- curved map

# Strong curvature on purpose: a x50 first layer inside tanh makes the
# quadratic term bite early, so the sigma sweep shows the first-order
# prediction failing badly at large sigma and converging as sigma shrinks.
g = streams.generator(7, streams.ENCODER_INIT)
W1 = 50.0 * g.standard_normal((8, 4))
W2 = g.standard_normal((4, 8))
enc = MlpEncoder([(W1, np.zeros(8), "tanh"), (W2, np.zeros(4), "tanh")], input_shape=(4,))
x = 0.05 * g.standard_normal(4)

print("\nstrongly curved tanh MLP, same check across noise scales:")
errs = []
for sigma in (1e-2, 1e-3, 1e-4):
    res = jacobian.local_feature_covariance_check(enc, x, sigma=sigma, n_samples=100000, seed=42)
    errs.append(res.max_rel_error)
    print(f"  sigma {sigma:7.0e}   max rel error {res.max_rel_error:10.4g}")

assert errs[0] > errs[1] > errs[2], "error should fall monotonically with sigma"
print("error falls with sigma toward the Monte-Carlo floor (~0.5% at 1e5 samples)")
