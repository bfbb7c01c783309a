"""Shared helpers for the test suite."""

import numpy as np
from scipy.optimize import linear_sum_assignment


def align_rows(Z_est, Z_true):
    """Match rows of Z_est to rows of Z_true up to permutation and sign.

    Returns Z_est reordered and sign-flipped to best match Z_true.
    """
    Z_est = np.asarray(Z_est, dtype=float)
    Z_true = np.asarray(Z_true, dtype=float)
    dots = Z_est @ Z_true.T
    rows, cols = linear_sum_assignment(-np.abs(dots))
    order = np.empty_like(rows)
    order[cols] = rows
    aligned = Z_est[order] * np.sign(dots[rows, cols])[np.argsort(cols), None]
    return aligned


def max_row_error(Z_est, Z_true):
    return float(np.abs(align_rows(Z_est, Z_true) - Z_true).max())


def normalized_rows(M):
    M = np.asarray(M, dtype=float)
    return M / np.linalg.norm(M, axis=1)[:, None]
