"""Full teacher-student recovery, exact and sampled.

The pipeline: estimate moments on half the data, linearize the
pure-neuron detector, take the null space, extract the pure directions
by simultaneous diagonalization (optionally stabilized by a CP
decomposition over many probes), fix signs on the held-out half, and
solve k single-layer problems in closed form.  With exact moments the
recovered network computes the identical function; with samples the
errors decay as the sample size grows.
"""

import numpy as np

from momnet import (LearnOptions, NetworkParams, StandardGaussian,
                    align_and_score, forward, generate_samples,
                    learn_two_layer, learn_two_layer_from_moments, mse,
                    random_orthonormal, rng_from, sample_inputs)
from momnet.moments import analytic_gaussian_moments

rng = rng_from(0, "demo-recover")
k = d = 8
params = NetworkParams(random_orthonormal(k, d, rng),
                       random_orthonormal(k, k, rng), noise_sigma=0.1)

print("== exact-moment path (sampling noise removed entirely) ==")
exact = learn_two_layer_from_moments(analytic_gaussian_moments(params), k)
X = sample_inputs(StandardGaussian(d), 500, seed=1)
clean = NetworkParams(params.W, params.A, 0.0)
gap = np.abs(exact.predict(X) - forward(clean, X)).max()
print(f"max prediction deviation from the clean teacher function: {gap:.2e}")

print("\n== sampled path ==")
spec = StandardGaussian(d)
test = generate_samples(params, spec, 10_000, seed=2)
for n in (5_000, 20_000, 80_000):
    train = generate_samples(params, spec, n, seed=n)
    plain = learn_two_layer(train, k, seed=3)
    robust = learn_two_layer(train, k,
                             LearnOptions(use_als=True, refine=True), seed=3)
    pw, pa = align_and_score(plain, params)
    rw, ra = align_and_score(robust, params)
    print(f"n={n:6d}  plain: W_err={pw:.4f} A_err={pa:.4f} "
          f"mse={mse(plain, test):.4f}   robust: W_err={rw:.4f} "
          f"A_err={ra:.4f} mse={mse(robust, test):.4f}")
print("(mse is against noisy labels, so it floors at sigma^2 = 0.01)")

print("\n== more outputs than hidden units ==")
wide = NetworkParams(params.W, random_orthonormal(12, k, rng), 0.05)
train = generate_samples(wide, spec, 60_000, seed=4)
result = learn_two_layer(train, k, LearnOptions(nonsquare=True), seed=5)
W_err, A_err = align_and_score(result, wide)
print(f"l=12, k=8 via the projection step: W_err={W_err:.4f} "
      f"A_err={A_err:.4f}")
