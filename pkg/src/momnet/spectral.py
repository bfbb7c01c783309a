"""Null-space extraction and recovery of the pure directions.

The k least right singular vectors of the detector span the vectorized
rank-one matrices z_i z_i^T of the pure directions (rows of A^{-1} after
normalization).  Two random probes of that span are simultaneously
diagonalizable by the z_i, so the eigenvectors of X Y^{-1} recover them
directly; a symmetric CP decomposition over many probes is the robust
alternative used when sampling noise makes single-probe eigenvectors
unreliable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (AmbiguousSignWarning, ComplexEigenpairs,
                     ConfigurationError, ConvergenceFailure, DegenerateSpan)
from .model import SampleSet, rng_from
from .symvec import SymVecConvention

IMAG_TOL = 1e-6        # |imag| / max|real part| above this -> retry
SEP_TOL = 1e-8         # min eigenvalue gap relative to max |eigenvalue|
COND_GUARD = 1e-12     # sigma_min(Y) below guard * sigma_max -> retry
RETRY_BUDGET = 5


@dataclass
class SubspaceBasis:
    """Orthonormal basis S of the k least right singular directions of T."""

    S: np.ndarray  # (k2 + k, k)
    convention: SymVecConvention
    source_gap: float = np.nan

    @property
    def k(self) -> int:
        return self.S.shape[1]

    def probe(self, zeta: np.ndarray) -> np.ndarray:
        """mat*(S zeta): a symmetric matrix in the recovered span."""
        return self.convention.mat(self.S @ zeta)


@dataclass
class ZRecovery:
    """Recovered unit rows z_i plus diagnostics of the extraction."""

    Z: np.ndarray
    eigen_diag: np.ndarray | None
    probe_seed: int
    max_imag: float = 0.0
    retries_used: int = 0
    residual: float | None = None
    diagnostics: dict = field(default_factory=dict)


def nullspace_basis(det) -> SubspaceBasis:
    """k least right singular vectors of the detector matrix."""
    Vt = np.linalg.svd(det.T, full_matrices=False)[2]
    S = Vt[-det.k:].T.copy()
    gap = det.gap_report[0] - det.gap_report[1]
    return SubspaceBasis(S, det.convention, source_gap=float(gap))


def _try_probes(basis: SubspaceBasis, rng: np.random.Generator):
    """One diagonalization attempt; returns (Z, eigvals, max_imag) or a
    failure reason string."""
    k = basis.k
    zeta1 = rng.standard_normal(k)
    zeta2 = rng.standard_normal(k)
    X = basis.probe(zeta1)
    Y = basis.probe(zeta2)
    sv = np.linalg.svd(Y, compute_uv=False)
    if sv[-1] <= COND_GUARD * sv[0]:
        return "singular-probe", None
    XYinv = np.linalg.solve(Y, X).T  # X Y^{-1} for symmetric X, Y
    vals, vecs = np.linalg.eig(XYinv)
    scale = max(np.abs(vals.real).max(), 1e-300)
    max_imag = max(np.abs(vals.imag).max() / scale,
                   float(np.abs(vecs.imag).max()))
    if max_imag > IMAG_TOL:
        return "complex-eigenpairs", None
    vals = vals.real
    vecs = vecs.real
    if k > 1:
        gaps = np.abs(vals[:, None] - vals[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < SEP_TOL * np.abs(vals).max():
            return "eigenvalue-collision", None
    Z = vecs.T / np.linalg.norm(vecs, axis=0)[:, None]
    return "ok", (Z, vals, max_imag)


def simultaneous_diagonalize(basis: SubspaceBasis, seed: int,
                             retry_budget: int = RETRY_BUDGET) -> ZRecovery:
    """Recover the z_i as eigenvectors of X Y^{-1} for random probes X, Y.

    Draws fresh Gaussian probe pairs until the eigensystem is real with
    well-separated eigenvalues; for a valid span this happens on the first
    try almost surely, so exhausting the retry budget signals a basis that
    is not simultaneously diagonalizable (bad input or too few samples).
    """
    last_reason = "singular-probe"
    for attempt in range(retry_budget + 1):
        rng = rng_from(seed, "probe", str(attempt))
        reason, payload = _try_probes(basis, rng)
        if reason == "ok":
            Z, vals, max_imag = payload
            return ZRecovery(Z, vals, probe_seed=seed, max_imag=max_imag,
                             retries_used=attempt)
        last_reason = reason
    if last_reason == "complex-eigenpairs":
        raise ComplexEigenpairs(
            f"eigen imaginary parts stayed above {IMAG_TOL:g} "
            f"after {retry_budget + 1} probe draws")
    raise DegenerateSpan(
        f"probes stayed degenerate ({last_reason}) after "
        f"{retry_budget + 1} draws; basis may not span a diagonalizable family")


def fix_signs(z_rows: np.ndarray, samples, atol: float = 1e-10) -> np.ndarray:
    """Flip each z_i so the empirical mean of z_i^T y is nonnegative.

    E[z_i^T y] = lambda_i E[sigma(w_i^T x)] and the ReLU mean is positive,
    so the statistic carries the sign of lambda_i.  `samples` is either a
    SampleSet (use samples disjoint from the moment-estimation half) or a
    precomputed mean of y.  Margins too close to zero trigger an
    AmbiguousSignWarning but do not fail.
    """
    Z = np.atleast_2d(np.asarray(z_rows, dtype=float))
    mean_y = samples.Y.mean(axis=0) if isinstance(samples, SampleSet) \
        else np.asarray(samples, dtype=float)
    margins = Z @ mean_y
    close = np.abs(margins) <= atol
    if close.any():
        warnings.warn(
            f"sign statistic within {atol:g} of zero for rows "
            f"{np.nonzero(close)[0].tolist()}", AmbiguousSignWarning)
    return Z * np.where(margins < 0, -1.0, 1.0)[:, None]


def sign_margins(z_rows: np.ndarray, samples) -> np.ndarray:
    """The statistics E-hat[z_i^T y] used by :func:`fix_signs`."""
    Z = np.atleast_2d(np.asarray(z_rows, dtype=float))
    mean_y = samples.Y.mean(axis=0) if isinstance(samples, SampleSet) \
        else np.asarray(samples, dtype=float)
    return Z @ mean_y


# ---------------------------------------------------------------------------
# robust extraction by symmetric CP decomposition


def _reconstruction(U: np.ndarray, V: np.ndarray, Lam: np.ndarray) -> np.ndarray:
    return np.einsum("cr,tr,er->tce", U, Lam, V)


def _ls_factor(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(gram.T, rhs.T).T
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(gram.T, rhs.T, rcond=None)[0].T


def _als_once(B: np.ndarray, Z0: np.ndarray, max_iter: int, tol: float):
    """Rank-k CP-ALS for B_t ~ sum_r lam_tr z_r z_r^T; returns
    (Z, residual, converged).

    The two matrix modes are updated as separate factors (each update is
    then an exact least-squares step, so the residual is monotone) and
    symmetrized at the end; on symmetric slices both modes converge to
    the same columns up to sign.  Convergence means the iteration stopped
    legitimately: the relative residual change fell below tol or the
    iteration budget ran out.  Only a numerical breakdown (non-finite
    factors, collapsed columns) counts as non-convergence.
    """
    norm_B = np.linalg.norm(B)
    U = Z0.copy()
    V = Z0.copy()
    best = (np.inf, Z0.copy())
    prev = np.inf
    converged = True
    for _ in range(max_iter):
        Gu, Gv = U.T @ U, V.T @ V
        Lam = _ls_factor(Gu * Gv,
                         np.einsum("cr,tce,er->tr", U, B, V))
        Gl = Lam.T @ Lam
        U = _ls_factor(Gl * Gv, np.einsum("tce,tr,er->cr", B, Lam, V))
        V = _ls_factor(Gl * (U.T @ U), np.einsum("tce,tr,cr->er", B, Lam, U))
        nu, nv = np.linalg.norm(U, axis=0), np.linalg.norm(V, axis=0)
        if np.any(nu == 0) or np.any(nv == 0) \
                or not (np.isfinite(U).all() and np.isfinite(V).all()):
            converged = False
            break
        U, V, Lam = U / nu, V / nv, Lam * (nu * nv)
        res = np.linalg.norm(B - _reconstruction(U, V, Lam)) / norm_B
        if res < best[0]:
            # symmetrize: columns of U and V agree up to sign at optimum
            signs = np.where(np.sum(U * V, axis=0) >= 0, 1.0, -1.0)
            Z = U + V * signs
            best = (res, Z / np.linalg.norm(Z, axis=0))
        if abs(prev - res) < tol * max(prev, 1.0) or res < 1e-14:
            break
        prev = res
    converged = converged and np.isfinite(best[0])
    return best[1], best[0], converged


def robust_recover_z(basis: SubspaceBasis, num_probes: int, restarts: int,
                     seed: int, init: np.ndarray | None = None,
                     max_iter: int = 500, tol: float = 1e-10) -> ZRecovery:
    """Recover the z_i by rank-k symmetric CP over many probe matrices.

    Stacks `num_probes` draws mat*(S zeta_t) into a 3-way array and fits
    sum_r lam_tr z_r z_r^T by alternating least squares, the two matrix
    modes symmetrized on output.  `init` seeds the first restart (use
    the eigen-method output when available); later restarts start from
    fresh Gaussian factors.  The restart with the lowest reconstruction
    residual wins, ties broken by restart index.
    """
    k = basis.k
    if num_probes < k:
        raise ConfigurationError("need num_probes >= k")
    rng = rng_from(seed, "als-probes")
    B = np.stack([basis.probe(rng.standard_normal(k))
                  for _ in range(num_probes)])
    best = (np.inf, None, 0)
    any_converged = False
    for r in range(restarts):
        if r == 0 and init is not None:
            Z0 = np.asarray(init, dtype=float).T.copy()  # columns z_r
        else:
            Z0 = rng_from(seed, "als-init", str(r)).standard_normal((k, k))
        Z0 = Z0 / np.linalg.norm(Z0, axis=0)
        Z, res, conv = _als_once(B, Z0, max_iter, tol)
        any_converged = any_converged or conv
        if conv and res < best[0]:
            best = (res, Z, r)
    if not any_converged or best[1] is None:
        raise ConvergenceFailure(
            f"ALS failed to converge in {restarts} restarts",
            best_residual=None if best[1] is None else best[0])
    Zrows = best[1].T.copy()
    Zrows /= np.linalg.norm(Zrows, axis=1)[:, None]
    return ZRecovery(Zrows, eigen_diag=None, probe_seed=seed,
                     residual=best[0],
                     diagnostics={"restart": best[2],
                                  "num_probes": num_probes})
