"""Jacobian effective rank from randomized sketches of JVP oracles.

First verifies the sketch against ground truth on a linear map (whose
Jacobian we can SVD directly), then runs the full estimator on small MLP
encoders and walks the profile layer by layer.
"""

import numpy as np

from sensorank import jacobian
from sensorank.encoders import LinearEncoder, MlpEncoder

# ------------------------------------------------ sketch vs exact (linear map)

# For a linear map the Jacobian is the weight matrix everywhere, so we can
# SVD it directly and see exactly what a k < input_dim sketch costs: the
# sketched values sit below the truth, but the rank functional stays close.
enc = LinearEncoder.random(out_dim=16, input_shape=(64,), seed=0)
W = enc.weight

dirs = jacobian.orthonormal_directions(input_dim=64, k=32, seed=1)
x = np.zeros(64, dtype=np.float64)
sketch = jacobian.estimate_singular_values(enc, x, dirs)
exact = np.linalg.svd(W, compute_uv=False)

print("sketch (k=32) vs exact singular values, linear 64 -> 16 map:")
print("  sketch:", np.round(sketch.values[:5], 4))
print("  exact :", np.round(exact[:5], 4))
print(f"  JER sketch {jacobian.jer(sketch):.4f}"
      f"  exact {float(exact.sum()**2 / (exact**2).sum()):.4f}"
      "  (sketch compresses, functional survives)")

# k = input_dim probes the whole row space: recovery is exact
full = jacobian.orthonormal_directions(64, 64, seed=1)
s_full = jacobian.estimate_singular_values(enc, x, full)
print(f"  full probe (k=64) max |err| = {np.abs(s_full.values[:16] - exact).max():.2e}")

# sketching can only lose mass: sketched JER never exceeds the truth
overs = []
for seed in range(5):
    d = jacobian.orthonormal_directions(64, 32, seed=seed)
    overs.append(jacobian.jer(jacobian.estimate_singular_values(enc, x, d))
                 - float(exact.sum()**2 / (exact**2).sum()))
print(f"  max JER overshoot over 5 sketch seeds: {max(overs):.2e} (<= 0 up to fp)")

# ----------------------------------------------------------- MLP estimator run

# jer_mean draws fresh probe images and fresh sketch directions per image,
# so the mean is an honest average over both sources of randomness.
print("\nJER across MLP widths (tanh, input 3x16x16, 100 probe images):")
for widths in [(16, 8), (64, 32), (256, 64)]:
    enc = MlpEncoder.from_widths(widths=widths, activation="tanh", seed=0)
    res = jacobian.jer_mean(enc, n_images=100, k=32, seed=42)
    print(f"  widths {str(widths):<10} out_dim {widths[-1]:<4}"
          f" JER = {res.mean:6.3f}  (per-image sd {np.std(res.per_image):.3f})")

# seed stability of the estimate
vals = [jacobian.jer_mean(MlpEncoder.from_widths(seed=0), seed=s).mean
        for s in (42, 123, 456)]
print(f"\nsame encoder, three estimator seeds: {np.round(vals, 4)}"
      f"  (cv {np.std(vals) / np.mean(vals):.4f})")

# ------------------------------------------------------------- depth profile

enc = MlpEncoder.from_widths(widths=(64, 64, 32), activation="tanh", seed=0)
profile = jacobian.jer_depth_profile(enc, n_images=50, k=16, seed=42)
print("\nJER by depth (widths 64-64-32):")
for tap, val in profile.items():
    print(f"  {tap:<10} {val:7.3f}")
print("rank contracts through depth as pooling/nonlinearity discard directions")
