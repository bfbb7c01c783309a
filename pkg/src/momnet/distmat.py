"""Distinguishing matrices and their spectral diagnostics.

The distinguishing matrix N has one d^2 column per hidden-unit pair
(i, j), i < j:

    N_ij = E[(w_i^T x)(w_j^T x) (x o x) 1{w_i^T x * w_j^T x <= 0}],

the average of the flattened outer product over the opposite-sign region
of the pair.  The augmented matrix M appends E[x o x] as a last column.
Full rank of M is the non-degeneracy condition the learning pipeline
rests on, so this module provides Monte-Carlo estimation, the exact
closed form for standard Gaussian inputs, smallest-singular-value and
leave-one-out diagnostics, and random-perturbation scans.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .model import DistributionSpec, perturb_weights, rng_from

_BLOCK = 65536


@dataclass
class DistinguishingMatrix:
    """Column-stacked N (or augmented M) plus the pair bookkeeping.

    `data` has shape (d^2, C(k,2)) or (d^2, C(k,2) + 1) when augmented;
    pair columns are ordered lexicographically over (i, j), i < j, and the
    augmented E[x o x] column comes last.  `m` holds the scalar statistics
    m_ij = E[(w_i^T x)(w_j^T x) 1{...}] as a symmetric k x k matrix with
    zero diagonal.
    """

    data: np.ndarray
    k: int
    d: int
    augmented: bool
    m: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def pairs(self):
        rows, cols = np.triu_indices(self.k, 1)
        return list(zip(rows.tolist(), cols.tolist()))

    def column(self, i: int, j: int) -> np.ndarray:
        """The (i, j) pair column, i < j."""
        if not 0 <= i < j < self.k:
            raise ValueError(f"bad pair ({i}, {j})")
        pos = i * self.k - i * (i + 1) // 2 + (j - i - 1)
        return self.data[:, pos]

    def column_matrix(self, i: int, j: int) -> np.ndarray:
        return self.column(i, j).reshape(self.d, self.d)


def pairwise_angles(W: np.ndarray) -> np.ndarray:
    """Angles between all row pairs of W, stable near 0 and pi.

    Uses atan2 of the orthogonal-complement norm against the cosine, which
    stays accurate where arccos of a near-unit inner product would not.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    norms = np.linalg.norm(W, axis=1)
    if np.any(norms == 0):
        raise ConfigurationError("zero row of W: angle undefined")
    U = W / norms[:, None]
    k = U.shape[0]
    cosines = np.clip(U @ U.T, -1.0, 1.0)
    phi = np.zeros((k, k))
    for i in range(k):
        resid = U - cosines[:, i][:, None] * U[i]
        phi[:, i] = np.arctan2(np.linalg.norm(resid, axis=1), cosines[:, i])
    np.fill_diagonal(phi, 0.0)
    return 0.5 * (phi + phi.T)


def closed_form_m(W: np.ndarray) -> np.ndarray:
    """m_ij = (1/pi)(phi cos phi - sin phi) ||w_i|| ||w_j||, zero diagonal."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    norms = np.linalg.norm(W, axis=1)
    phi = pairwise_angles(W)
    m = (phi * np.cos(phi) - np.sin(phi)) / np.pi * np.outer(norms, norms)
    np.fill_diagonal(m, 0.0)
    return m


def closed_form_M_gaussian(W: np.ndarray, augmented: bool = True) -> DistinguishingMatrix:
    """Exact population distinguishing matrix for standard Gaussian input.

    Each pair column, reshaped d x d, is

        m_ij I + (phi/pi)(w_i w_j^T + w_j w_i^T)
             - (sin phi / pi)((|w_i|/|w_j|) w_j w_j^T + (|w_j|/|w_i|) w_i w_i^T)

    with phi the angle between w_i and w_j.  The augmented column is
    vec(I_d).
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    k, d = W.shape
    norms = np.linalg.norm(W, axis=1)
    if np.any(norms == 0):
        raise ConfigurationError("zero row of W: angle undefined")
    phi = pairwise_angles(W)
    m = closed_form_m(W)
    cols = []
    eye = np.eye(d)
    for i in range(k):
        for j in range(i + 1, k):
            p, s = phi[i, j], np.sin(phi[i, j])
            wi, wj = W[i], W[j]
            Mij = (m[i, j] * eye
                   + (p / np.pi) * (np.outer(wi, wj) + np.outer(wj, wi))
                   - (s / np.pi) * ((norms[i] / norms[j]) * np.outer(wj, wj)
                                    + (norms[j] / norms[i]) * np.outer(wi, wi)))
            cols.append(Mij.ravel())
    if augmented:
        cols.append(eye.ravel())
    data = np.column_stack(cols) if cols else np.zeros((d * d, 0))
    return DistinguishingMatrix(data, k, d, augmented, m,
                                provenance={"kind": "closed_form_gaussian"})


def estimate_N(W: np.ndarray, spec: DistributionSpec, n: int, seed: int,
               augmented: bool = False) -> DistinguishingMatrix:
    """Monte-Carlo distinguishing matrix under any symmetric distribution.

    Averages the defining expression over n draws, column by column; the
    boundary w_i^T x * w_j^T x = 0 is included in the indicator (measure
    zero for continuous inputs, fixed for determinism on discrete ones).
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    k, d = W.shape
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    rows, cols = np.triu_indices(k, 1)
    npairs = rows.size
    sums = np.zeros((npairs, d * d))
    m_sums = np.zeros(npairs)
    aug_sum = np.zeros(d * d)
    rng = rng_from(seed, "distinguishing-mc")
    done = 0
    while done < n:
        b = min(_BLOCK, n - done)
        X = spec.sample(b, rng)
        XX = (X[:, :, None] * X[:, None, :]).reshape(b, d * d)
        P = X @ W.T
        prod = P[:, rows] * P[:, cols]          # (b, npairs)
        weights = np.where(prod <= 0.0, prod, 0.0)
        sums += weights.T @ XX
        m_sums += weights.sum(axis=0)
        if augmented:
            aug_sum += XX.sum(axis=0)
        done += b
    m = np.zeros((k, k))
    m[rows, cols] = m_sums / n
    m[cols, rows] = m[rows, cols]
    data = sums.T / n
    if augmented:
        data = np.column_stack([data, aug_sum / n])
    return DistinguishingMatrix(data, k, d, augmented, m,
                                provenance={"kind": "monte_carlo", "n": n,
                                            "seed": seed})


def sigma_min(mat: np.ndarray) -> float:
    """Smallest singular value."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    return float(np.linalg.svd(mat, compute_uv=False)[-1])


def leave_one_out_distance(mat: np.ndarray, special_column: int | None = None) -> float:
    """Smallest distance from a column to the span of the other columns.

    With `special_column` given, that column still participates in every
    span but is excluded from the minimization, matching the variant used
    to handle the deterministic E[x o x] column.  The value sandwiches the
    smallest singular value: d(A) >= sigma_min(A) >= d(A)/sqrt(ncols).
    """
    A = np.atleast_2d(np.asarray(mat, dtype=float))
    ncols = A.shape[1]
    if ncols < 2:
        raise ConfigurationError("need at least two columns")
    best = np.inf
    for i in range(ncols):
        if i == special_column:
            continue
        others = np.delete(A, i, axis=1)
        coeff, *_ = np.linalg.lstsq(others, A[:, i], rcond=None)
        best = min(best, float(np.linalg.norm(A[:, i] - others @ coeff)))
    return best


def smoothed_sigma_scan(W: np.ndarray, rho_grid, trials: int, seed: int):
    """sigma_min of the closed-form augmented matrix under W + rho E.

    For each rho in the grid and each trial, perturbs W with a fresh
    Gaussian matrix scaled by rho and records sigma_min of the resulting
    augmented distinguishing matrix.  Returns (rho, trial, sigma_min)
    rows; rho = 0 rows evaluate the unperturbed W.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    rows = []
    for rho in rho_grid:
        for trial in range(trials):
            if rho == 0:
                Wt = W
            else:
                Wt = perturb_weights(W, rho, rng_from(seed, "scan", f"{rho}", f"{trial}")
                                     .integers(0, 2**63))
            rows.append((float(rho), trial,
                         sigma_min(closed_form_M_gaussian(Wt).data)))
    return rows
