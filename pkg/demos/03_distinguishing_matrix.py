"""Distinguishing matrices: the non-degeneracy object of the method.

Each column N_ij averages (w_i^T x)(w_j^T x) (x o x) over the region
where the two units disagree in sign; the method needs these columns
(plus E[x o x]) to be linearly independent.  Under standard Gaussian
inputs every column has a closed form driven by the angle between w_i
and w_j, which this script checks against a Monte-Carlo estimate, along
with the leave-one-out distance that sandwiches sigma_min.
"""

import numpy as np

from momnet import (StandardGaussian, closed_form_M_gaussian, estimate_N,
                    leave_one_out_distance, random_orthonormal, rng_from,
                    sigma_min)

print("== the orthogonal pair in d = 2 ==")
cf = closed_form_M_gaussian(np.eye(2), augmented=False)
print("closed-form column (0,1), reshaped:")
print(np.array_str(cf.column_matrix(0, 1), precision=6))
print(f"(diagonal is -2/pi = {-2 / np.pi:.6f}; m_01 = -1/pi = "
      f"{-1 / np.pi:.6f}, matches {cf.m[0, 1]:.6f})")

mc = estimate_N(np.eye(2), StandardGaussian(2), 2_000_000, seed=0)
print(f"monte-carlo at n=2e6, entrywise gap: "
      f"{np.abs(mc.column_matrix(0, 1) - cf.column_matrix(0, 1)).max():.2e}")

print("\n== spectrum of the augmented matrix ==")
W = random_orthonormal(5, 20, rng_from(1, "demo-dm"))
M = closed_form_M_gaussian(W, augmented=True)
print(f"k=5, d=20: M is {M.data.shape[0]}x{M.data.shape[1]}, "
      f"sigma_min = {sigma_min(M.data):.4f}")

d_M = leave_one_out_distance(M.data, special_column=M.data.shape[1] - 1)
print(f"leave-one-out distance (augmented column special): {d_M:.4f}")
print("sandwich d(A) >= sigma_min(A) >= d(A)/sqrt(ncols):")
rng = np.random.default_rng(2)
for _ in range(3):
    A = rng.standard_normal((12, 6))
    d_A, s = leave_one_out_distance(A), sigma_min(A)
    print(f"  d(A)={d_A:.4f} >= sigma_min={s:.4f} >= "
          f"d/sqrt(6)={d_A / np.sqrt(6):.4f}")

print("\n== degeneracy the matrix detects ==")
W_bad = np.vstack([W, W[0]])  # a duplicated hidden direction
print(f"duplicated row: sigma_min drops to "
      f"{sigma_min(closed_form_M_gaussian(W_bad).data):.2e}")
