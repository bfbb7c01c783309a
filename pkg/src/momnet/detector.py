"""Pure-neuron detector and its linearization.

For a candidate direction u, the detector value is the d^2 vector

    f(u) = 2 E[(u^T y) (q_u^T x) (x o x)] - E[(u^T y)^2 (x o x)],
    q_u  = E[xx^T]^{-1} E[(u^T y) x],

which vanishes exactly when u^T y collapses to a single hidden unit.
The noisy variant adds (E[(u^T y)^2] - 2 E[(u^T y)x^T] E[xx^T]^{-1}
E[(u^T y)x]) * E[x o x], cancelling the label-noise bias.  Every entry
of f is a quadratic form in u, so there is a unique matrix T with
T vec*(u u^T) = f(u); its null space is spanned by the vectorized
rank-one matrices of the pure directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distmat import closed_form_M_gaussian
from .errors import ConfigurationError, ShapeError, SingularCovariance
from .model import NetworkParams
from .moments import MomentSet
from .symvec import SymVecConvention

VARIANTS = ("noiseless", "noisy")
_COV_GUARD = 1e-10  # sigma_min(C2) below guard * sigma_max -> SingularCovariance


@dataclass
class DetectorMatrix:
    """Linearized detector T of shape (d^2, k2 + k) with rank diagnostics.

    gap_report holds (sigma_{k2}, sigma_{k2+1}); for exact moments the
    first is bounded away from zero while the second is zero, and the size
    of the gap governs how well the null space survives sampling noise.
    """

    T: np.ndarray
    convention: SymVecConvention
    variant: str
    gap_report: tuple[float, float]

    @property
    def k(self) -> int:
        return self.convention.k

    def apply(self, u: np.ndarray) -> np.ndarray:
        """T vec*(u u^T); equals f(u) by construction."""
        return self.T @ self.convention.vec_outer(np.asarray(u, dtype=float))


def _cov_inverse_apply(C2: np.ndarray):
    """Symmetric factorization of C2 with a relative sigma_min guard."""
    evals, evecs = np.linalg.eigh(C2)
    if evals[0] <= _COV_GUARD * evals[-1]:
        raise SingularCovariance(
            f"sigma_min(C2) = {evals[0]:.3e} below guard "
            f"{_COV_GUARD:.0e} * sigma_max = {_COV_GUARD * evals[-1]:.3e}")

    def solve(B):
        return evecs @ ((evecs.T @ B).T / evals).T

    return solve


def _noise_correction_matrix(moments: MomentSet, R: np.ndarray) -> np.ndarray:
    # coefficient of c2vec in the noisy variant, as a bilinear form in u
    return moments.Cyy - 2.0 * moments.Cyx @ R


def f_value(u: np.ndarray, moments: MomentSet,
            variant: str = "noisy") -> np.ndarray:
    """Evaluate the detector at one direction u by tensor contraction."""
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown detector variant {variant!r}")
    u = np.asarray(u, dtype=float)
    if u.shape != (moments.l,):
        raise ShapeError(f"u must have length {moments.l}")
    solve = _cov_inverse_apply(moments.C2)
    q = solve(moments.Cyx.T @ u)                       # (d,)
    f = 2.0 * np.einsum("a,b,abm->m", u, q, moments.G)
    f -= np.einsum("a,b,abm->m", u, u, moments.H)
    if variant == "noisy":
        coef = u @ moments.Cyy @ u - 2.0 * (u @ moments.Cyx) @ q
        f += coef * moments.c2vec
    return f


def _bilinear_coefficients(moments: MomentSet, variant: str) -> np.ndarray:
    """Phi[a, b, :] with f(u) = sum_ab u_a u_b Phi[a, b, :]."""
    solve = _cov_inverse_apply(moments.C2)
    R = solve(moments.Cyx.T)                           # (d, l) = C2^{-1} Cyx^T
    Phi = 2.0 * np.einsum("acm,cb->abm", moments.G, R) - moments.H
    if variant == "noisy":
        Phi = Phi + (_noise_correction_matrix(moments, R)[:, :, None]
                     * moments.c2vec[None, None, :])
    return Phi


def _assemble_T(Phi: np.ndarray, conv: SymVecConvention) -> np.ndarray:
    k = conv.k
    cols = np.empty((Phi.shape[2], conv.size))
    for pos, (i, j) in enumerate(conv.pairs()):
        cols[:, pos] = Phi[i, i] if i == j else Phi[i, j] + Phi[j, i]
    return cols


def _gap(T: np.ndarray, k: int) -> tuple[float, float]:
    k2 = k * (k - 1) // 2
    sv = np.linalg.svd(T, compute_uv=False)
    rank_sv = float(sv[k2 - 1]) if k2 >= 1 else np.inf
    return rank_sv, float(sv[k2])


def build_T(moments: MomentSet, k: int, variant: str = "noisy") -> DetectorMatrix:
    """Linearize the detector into T with T vec*(u u^T) = f(u).

    Columns are extracted directly as the bilinear coefficients of the
    degree-2 monomials u_i u_j (one pass over the moment tensors); the
    polarization construction is kept in :func:`build_T_polarized` as a
    cross-check path.
    """
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown detector variant {variant!r}")
    if moments.l != k:
        raise ConfigurationError(
            f"detector needs k outputs, got l={moments.l}, k={k}; "
            "reduce non-square instances first")
    conv = SymVecConvention(k)
    T = _assemble_T(_bilinear_coefficients(moments, variant), conv)
    return DetectorMatrix(T, conv, variant, _gap(T, k))


def build_T_polarized(moments: MomentSet, k: int,
                      variant: str = "noisy") -> DetectorMatrix:
    """T from k(k+3)/2 detector evaluations: diagonal columns are f(e_i),
    pair columns f(e_i + e_j) - f(e_i) - f(e_j)."""
    if moments.l != k:
        raise ConfigurationError("detector needs k outputs")
    conv = SymVecConvention(k)
    eye = np.eye(k)
    f_diag = [f_value(eye[i], moments, variant) for i in range(k)]
    T = np.empty((moments.d ** 2, conv.size))
    for pos, (i, j) in enumerate(conv.pairs()):
        if i == j:
            T[:, pos] = f_diag[i]
        else:
            T[:, pos] = f_value(eye[i] + eye[j], moments, variant) \
                - f_diag[i] - f_diag[j]
    return DetectorMatrix(T, conv, variant, _gap(T, k))


def exact_T_gaussian(params: NetworkParams,
                     variant: str = "noiseless") -> DetectorMatrix:
    """Population-exact T for a Gaussian-input instance.

    Built from the identity f(u) = sum_{i<j} (A^T u u^T A)_{ij} N_ij with
    closed-form Gaussian columns N_ij (the noisy variant replaces N_ij by
    N_ij - m_ij E[x o x], so label noise never enters).  Serves as the
    convergence oracle for :func:`build_T`.
    """
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown detector variant {variant!r}")
    if params.l != params.k:
        raise ConfigurationError("exact T requires a square instance")
    A, k, d = params.A, params.k, params.d
    conv = SymVecConvention(k)
    cf = closed_form_M_gaussian(params.W, augmented=False)
    cols = cf.data.copy()                              # (d^2, k2)
    if variant == "noisy":
        eyevec = np.eye(d).ravel()
        for pos, (i, j) in enumerate(cf.pairs):
            cols[:, pos] -= cf.m[i, j] * eyevec
    # coefficient of pair column (i, j) inside T column (a, b):
    #   A_ai A_bj + A_bi A_aj  (a < b), A_ai A_aj on the diagonal
    coef = np.empty((conv.size, len(cf.pairs)))
    for pos, (a, b) in enumerate(conv.pairs()):
        for ppos, (i, j) in enumerate(cf.pairs):
            if a == b:
                coef[pos, ppos] = A[a, i] * A[a, j]
            else:
                coef[pos, ppos] = A[a, i] * A[b, j] + A[b, i] * A[a, j]
    T = cols @ coef.T
    return DetectorMatrix(T, conv, variant, _gap(T, k))


def purity_residual_order2(u: np.ndarray, moments: MomentSet,
                           noise_sigma: float = 0.0) -> float:
    """Second-order purity diagnostic, zero at pure neurons.

    Returns 2 E[(u^T y) x^T] C2^{-1} E[(u^T y) x] - E[(u^T y)^2]; with a
    known noise level the noise square is compensated.  This weaker check
    can vanish on mixed directions whose pair coefficients cancel, which
    is exactly why the fourth-order detector above exists.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (moments.l,):
        raise ShapeError(f"u must have length {moments.l}")
    solve = _cov_inverse_apply(moments.C2)
    v = moments.Cyx.T @ u
    resid = 2.0 * v @ solve(v) - u @ moments.Cyy @ u
    if noise_sigma:
        resid += noise_sigma**2 * float(u @ u)
    return float(resid)
