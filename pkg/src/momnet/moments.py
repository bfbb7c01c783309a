"""Empirical and analytic moment tensors consumed by the detector.

A MomentSet bundles every statistic the learning pipeline needs:

    C2   = E[x x^T]                    (d, d)
    Cyx  = E[y x^T]                    (l, d)
    Cyy  = E[y y^T]                    (l, l)
    G    = E[y_a x_b (x o x)]          (l, d, d^2)
    H    = E[y_a y_b (x o x)]          (l, l, d^2), symmetric in (a, b)
    mean_y = E[y]                      (l,)

x o x denotes the flattened outer product, stored row-major so that
position c*d + e carries x_c * x_e.  The fourth-order moment of (y, x)
is kept only in the grouped form G: the detector consumes it exclusively
through contractions of that shape, and one representation avoids drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distmat import closed_form_M_gaussian, closed_form_m
from .errors import ConfigurationError, DataError, ShapeError
from .model import NetworkParams, SampleSet, StandardGaussian

_BLOCK = 8192


@dataclass
class MomentSet:
    C2: np.ndarray
    Cyx: np.ndarray
    Cyy: np.ndarray
    G: np.ndarray
    H: np.ndarray
    mean_y: np.ndarray
    n: int | None = None  # None marks exact population moments

    @property
    def d(self) -> int:
        return self.C2.shape[0]

    @property
    def l(self) -> int:
        return self.Cyx.shape[0]

    @property
    def c2vec(self) -> np.ndarray:
        """E[x o x]: the same data as C2, viewed as a d^2 vector."""
        return self.C2.reshape(self.d * self.d)


def estimate_moments(samples: SampleSet) -> MomentSet:
    """Arithmetic means of the per-sample outer products.

    Accumulation is blocked over samples with a fixed block size, so the
    reduction tree (and hence the bit pattern of the result) depends only
    on the input order.  The (a, b) symmetry of H holds exactly.
    """
    if isinstance(samples, tuple):
        samples = SampleSet(*samples)
    X, Y, n = samples.X, samples.Y, samples.n
    if n < 1:
        raise DataError("cannot estimate moments from an empty sample set")
    d, l = X.shape[1], Y.shape[1]
    S2 = np.zeros((d, d))
    Syx = np.zeros((l, d))
    Syy = np.zeros((l, l))
    Sy = np.zeros(l)
    SG = np.zeros((l * d, d * d))
    SH = np.zeros((l * l, d * d))
    for start in range(0, n, _BLOCK):
        Xb = X[start:start + _BLOCK]
        Yb = Y[start:start + _BLOCK]
        b = Xb.shape[0]
        S2 += Xb.T @ Xb
        Syx += Yb.T @ Xb
        Syy += Yb.T @ Yb
        Sy += Yb.sum(axis=0)
        XX = (Xb[:, :, None] * Xb[:, None, :]).reshape(b, d * d)
        SG += (Yb[:, :, None] * Xb[:, None, :]).reshape(b, l * d).T @ XX
        SH += (Yb[:, :, None] * Yb[:, None, :]).reshape(b, l * l).T @ XX
    H = (SH / n).reshape(l, l, d * d)
    iu, ju = np.triu_indices(l, 1)
    H[ju, iu] = H[iu, ju]  # exact (a, b) symmetry
    return MomentSet(C2=S2 / n, Cyx=Syx / n, Cyy=Syy / n,
                     G=(SG / n).reshape(l, d, d * d), H=H,
                     mean_y=Sy / n, n=n)


def analytic_gaussian_moments(params: NetworkParams,
                              spec=None) -> MomentSet:
    """Exact population moments for standard Gaussian inputs.

    Every ReLU expectation reduces through the symmetric-moment identity
    E[sigma(a^T x)^p x^oq] = (1/2) E[(a^T x)^p x^oq] for even p + q, the
    indicator correction for sigma-sigma cross terms, and Wick expansion
    of the Gaussian fourth moments.  Label noise contributes sigma^2 I to
    Cyy and sigma^2 * delta_ab * E[x o x] to H, nothing else.
    """
    if spec is not None and not isinstance(spec, StandardGaussian):
        raise ConfigurationError(
            "analytic moments are only available for standard Gaussian input")
    W, A, sig = params.W, params.A, params.noise_sigma
    k, d, l = params.k, params.d, params.l
    eye = np.eye(d)
    AW = A @ W                                   # (l, d)
    gram = W @ W.T                               # (k, k)
    norms = np.linalg.norm(W, axis=1)
    m = closed_form_m(W)

    C2 = eye.copy()
    Cyx = 0.5 * AW
    # E[sigma_i sigma_j] = (w_i . w_j - m_ij) / 2, valid on the diagonal too
    S = 0.5 * (gram - m)
    Cyy = A @ S @ A.T + sig**2 * np.eye(l)
    mean_y = A @ (norms / np.sqrt(2.0 * np.pi))

    # G[a, b, (c, e)] = ((AW)_ab d_ce + (AW)_ac d_be + (AW)_ae d_bc) / 2
    G = 0.5 * (np.einsum("ab,ce->abce", AW, eye)
               + np.einsum("ac,be->abce", AW, eye)
               + np.einsum("ae,bc->abce", AW, eye)).reshape(l, d, d * d)

    # Pair tensor E_ij = E[sigma(w_i^T x) sigma(w_j^T x) x x^T]
    # = ((w_i . w_j) I + w_i w_j^T + w_j w_i^T - N_ij) / 2 with N_ii = 0.
    N = np.zeros((k, k, d, d))
    if k > 1:
        cf = closed_form_M_gaussian(W, augmented=False)
        for pos, (i, j) in enumerate(cf.pairs):
            N[i, j] = N[j, i] = cf.data[:, pos].reshape(d, d)
    pair = 0.5 * (np.einsum("ij,ce->ijce", gram, eye)
                  + np.einsum("ic,je->ijce", W, W)
                  + np.einsum("jc,ie->ijce", W, W)
                  - N)
    H = np.einsum("ai,bj,ijce->abce", A, A, pair, optimize=True)
    H += sig**2 * np.einsum("ab,ce->abce", np.eye(l), eye)
    return MomentSet(C2=C2, Cyx=Cyx, Cyy=Cyy, G=G,
                     H=H.reshape(l, l, d * d), mean_y=mean_y, n=None)


def check_momentset(ms: MomentSet, atol: float = 1e-12) -> None:
    """Raise if the structural invariants of a MomentSet are violated."""
    if not np.array_equal(ms.C2, ms.C2.T):
        if np.abs(ms.C2 - ms.C2.T).max() > atol:
            raise ShapeError("C2 is not symmetric")
    if np.abs(ms.H - ms.H.transpose(1, 0, 2)).max() != 0.0:
        raise ShapeError("H is not exactly symmetric in (a, b)")
    d = ms.d
    for tensor in (ms.G.reshape(-1, d, d), ms.H.reshape(-1, d, d)):
        gap = np.abs(tensor - tensor.transpose(0, 2, 1)).max()
        if gap > atol * max(1.0, np.abs(tensor).max()):
            raise ShapeError("a d^2 slice is not symmetric as a d x d matrix")
