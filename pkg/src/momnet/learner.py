"""End-to-end parameter recovery for two-layer ReLU networks.

The pipeline:

1. estimate moments from the first half of the samples and linearize the
   pure-neuron detector into T;
2. take the k least right singular vectors of T and extract the pure
   directions z_i (eigen method or symmetric CP over probes);
3. fix signs against the second half and reduce to k single-layer
   problems (x, z_i^T y), each solved in closed form as 2 C^{-1} v;
4. return V (rows lambda_i w_i) and Z^{-1}; the two unknown scalings
   cancel in the composed network, so predictions match the teacher.

Instances with more outputs than hidden units are first projected onto
the top-k left singular directions of E[y x^T].  An exact-moment entry
point runs the same pipeline from a MomentSet, which removes sampling
noise entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .detector import build_T
from .errors import (ComplexEigenpairs, ConfigurationError, DataError,
                     DegenerateSpan, DivergenceError, RankDeficiency,
                     ShapeError, SingularCovariance)
from .model import NetworkParams, SampleSet
from .moments import MomentSet, estimate_moments
from .spectral import (fix_signs, nullspace_basis, robust_recover_z,
                       sign_margins, simultaneous_diagonalize)

_COV_GUARD = 1e-10
_RANK_GUARD = 1e-10


@dataclass
class LearnOptions:
    """Knobs for learn_two_layer; defaults follow the plain algorithm."""

    variant: str = "noisy"        # detector variant
    use_als: bool = False         # CP-over-probes instead of one eigenprobe
    num_probes: int | None = None  # default 10 * k
    restarts: int = 10
    refine: bool = False          # gradient-descent polish of W
    refine_lr: float = 0.1
    refine_iters: int = 2000
    retry_budget: int = 5
    nonsquare: bool = False       # route l > k through the projection step


@dataclass
class RecoveryResult:
    """Learned factors plus the provenance needed to audit a run.

    The represented network is x -> A_hat sigma(V x); rows of V are
    lambda_i w_i and A_hat is Z^{-1} (or P Z^{-1} for non-square
    instances), so per-unit scalings cancel in the composition.
    """

    V: np.ndarray
    Z: np.ndarray
    A_hat: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.V.shape[0]

    @property
    def d(self) -> int:
        return self.V.shape[1]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict(self, X)


def predict(result: RecoveryResult, X: np.ndarray) -> np.ndarray:
    """Rows A_hat sigma(V x)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != result.d:
        raise ShapeError(f"X has {X.shape[1]} columns, expected {result.d}")
    return np.maximum(X @ result.V.T, 0.0) @ result.A_hat.T


def learn_single_layer(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Closed-form weight of a single ReLU unit: 2 C^{-1} v.

    v = E-hat[y x] and C = E-hat[x x^T]; under a symmetric input
    distribution E[y x] = (1/2) E[x x^T] w, and zero-mean noise drops out.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise ShapeError("X and y must have equal row counts")
    n = X.shape[0]
    C = X.T @ X / n
    v = X.T @ y / n
    evals, evecs = np.linalg.eigh(C)
    if evals[0] <= _COV_GUARD * evals[-1]:
        raise SingularCovariance(
            f"sigma_min(E[xx^T]) = {evals[0]:.3e} too small")
    return 2.0 * (evecs @ ((evecs.T @ v) / evals))


def _invert_Z(Z: np.ndarray) -> np.ndarray:
    sv = np.linalg.svd(Z, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise DegenerateSpan("recovered Z is numerically singular")
    return np.linalg.inv(Z)


def _recover_directions(basis, options: LearnOptions, seed: int):
    """Eigen method, optionally followed by the ALS refinement."""
    zrec = None
    eigen_error = None
    try:
        zrec = simultaneous_diagonalize(basis, seed=seed,
                                        retry_budget=options.retry_budget)
    except (DegenerateSpan, ComplexEigenpairs) as exc:
        if not options.use_als:
            raise
        eigen_error = exc
    if not options.use_als:
        return zrec
    probes = options.num_probes or 10 * basis.k
    init = None if zrec is None else zrec.Z
    als = robust_recover_z(basis, probes, options.restarts, seed, init=init)
    if eigen_error is not None:
        als.diagnostics["eigen_error"] = repr(eigen_error)
    elif zrec is not None:
        als.diagnostics["eigen_max_imag"] = zrec.max_imag
    return als


def learn_two_layer(samples: SampleSet, k: int,
                    options: LearnOptions | None = None,
                    seed: int = 0) -> RecoveryResult:
    """Recover (V, Z^{-1}) from samples of y = A sigma(W x) + xi.

    Samples are split in half deterministically: the first half feeds the
    moment estimates behind T, the second half the sign fix and the
    per-direction single-layer recoveries, so no statistic is reused.
    Callers wanting a random split shuffle beforehand.
    """
    options = options or LearnOptions()
    if samples.n < 2:
        raise DataError("need at least 2 samples to split")
    d, l = samples.X.shape[1], samples.Y.shape[1]
    if not 1 <= k <= min(d, l):
        raise ConfigurationError(f"need 1 <= k <= min(d, l), got k={k}, d={d}, l={l}")
    if l > k:
        if not options.nonsquare:
            raise ConfigurationError(
                f"output dimension {l} exceeds k={k}; set options.nonsquare")
        P, reduced = reduce_nonsquare(samples, k)
        inner = learn_two_layer(reduced, k, replace(options, nonsquare=False),
                                seed=seed)
        diag = dict(inner.diagnostics)
        diag["projection_l"] = l
        return RecoveryResult(inner.V, inner.Z, P @ inner.A_hat, diag)

    first, second = samples.split_half()
    moments = estimate_moments(first)
    det = build_T(moments, k, options.variant)
    basis = nullspace_basis(det)
    zrec = _recover_directions(basis, options, seed)
    Z = fix_signs(zrec.Z, second)
    V = np.vstack([learn_single_layer(second.X, second.Y @ Z[i])
                   for i in range(k)])
    result = RecoveryResult(
        V=V, Z=Z, A_hat=_invert_Z(Z),
        diagnostics={
            "split": (first.n, second.n),
            "detector_variant": options.variant,
            "detector_gap": det.gap_report,
            "source_gap": basis.source_gap,
            "sign_margins": sign_margins(Z, second).tolist(),
            "max_imag": zrec.max_imag,
            "retries_used": zrec.retries_used,
            "als_residual": zrec.residual,
            "seed": seed,
            **zrec.diagnostics,
        })
    if options.refine:
        # the polish pass has no independence requirement, use everything
        result = _refine_result(result, samples, options)
    return result


def learn_two_layer_from_moments(moments: MomentSet, k: int,
                                 options: LearnOptions | None = None,
                                 seed: int = 0) -> RecoveryResult:
    """The same pipeline driven by a MomentSet (e.g. exact moments).

    Sign fixing uses the stored mean of y and each single-layer problem is
    solved from the cross moments directly: v_i = 2 C2^{-1} Cyx^T z_i.
    """
    options = options or LearnOptions()
    if moments.l != k:
        raise ConfigurationError("moment-driven path needs square instances")
    det = build_T(moments, k, options.variant)
    basis = nullspace_basis(det)
    zrec = _recover_directions(basis, options, seed)
    Z = fix_signs(zrec.Z, moments.mean_y)
    evals, evecs = np.linalg.eigh(moments.C2)
    if evals[0] <= _COV_GUARD * evals[-1]:
        raise SingularCovariance("C2 in the moment set is singular")
    V = 2.0 * (evecs @ ((evecs.T @ (moments.Cyx.T @ Z.T)) / evals[:, None])).T
    return RecoveryResult(
        V=V, Z=Z, A_hat=_invert_Z(Z),
        diagnostics={
            "split": (moments.n, moments.n),
            "detector_variant": options.variant,
            "detector_gap": det.gap_report,
            "source_gap": basis.source_gap,
            "sign_margins": (Z @ moments.mean_y).tolist(),
            "max_imag": zrec.max_imag,
            "retries_used": zrec.retries_used,
            "als_residual": zrec.residual,
            "seed": seed,
        })


def reduce_nonsquare(samples: SampleSet, k: int):
    """Project l-dimensional outputs onto the column span of A.

    E[y x^T] = (1/2) A W E[xx^T] shares its column span with A, so the
    top-k left singular vectors P of the cross moment estimated on the
    first half give the reduction y -> P^T y; the remaining samples form
    the returned square instance and the final second layer is P Z^{-1}.
    """
    l = samples.Y.shape[1]
    if l < k:
        raise ConfigurationError(f"cannot reduce: l={l} < k={k}")
    first, second = samples.split_half()
    Cyx = first.Y.T @ first.X / first.n
    U, sv, _ = np.linalg.svd(Cyx, full_matrices=False)
    if sv[k - 1] <= _RANK_GUARD * sv[0]:
        raise RankDeficiency(
            f"sigma_{k}(E[yx^T]) = {sv[k - 1]:.3e} is too small for rank {k}")
    P = U[:, :k]
    reduced = SampleSet(second.X, second.Y @ P, seed=samples.seed,
                        spec=samples.spec)
    return P, reduced


# ---------------------------------------------------------------------------
# gradient-descent refinement of the first layer


def mse_loss_and_grad(W: np.ndarray, A: np.ndarray, X: np.ndarray,
                      Y: np.ndarray):
    """Loss mean_s ||y_s - A sigma(W x_s)||^2 and its gradient in W.

    The ReLU subgradient at exactly zero preactivation is taken as 0.
    """
    n = X.shape[0]
    Hpre = X @ W.T
    G = np.maximum(Hpre, 0.0)
    R = G @ A.T - Y
    loss = float(np.sum(R * R)) / n
    grad = 2.0 / n * ((R @ A) * (Hpre > 0)).T @ X
    return loss, grad


def refine_W_gd(A_fixed: np.ndarray, W_init: np.ndarray, samples: SampleSet,
                lr: float = 0.1, iters: int = 2000,
                tol: float = 1e-12) -> np.ndarray:
    """Full-batch gradient descent on W with the second layer frozen.

    Steps that would increase the loss halve the rate instead of being
    accepted, so the loss is non-increasing over accepted steps; the
    iterate with the lowest loss is returned.  `tol` stops early once the
    relative improvement per accepted step is negligible.
    """
    if lr <= 0:
        raise ConfigurationError("lr must be positive")
    A = np.asarray(A_fixed, dtype=float)
    W = np.asarray(W_init, dtype=float).copy()
    X, Y = samples.X, samples.Y
    loss, grad = mse_loss_and_grad(W, A, X, Y)
    if not np.isfinite(loss):
        raise DivergenceError("initial loss is not finite")
    best_loss, best_W = loss, W.copy()
    for _ in range(iters):
        W_try = W - lr * grad
        new_loss, new_grad = mse_loss_and_grad(W_try, A, X, Y)
        if not np.isfinite(new_loss):
            raise DivergenceError("gradient descent produced a non-finite loss")
        if new_loss > loss:
            lr *= 0.5
            if lr < 1e-15:
                break
            continue
        improvement = loss - new_loss
        W, loss, grad = W_try, new_loss, new_grad
        if loss < best_loss:
            best_loss, best_W = loss, W.copy()
        if improvement <= tol * max(loss, 1e-300):
            break
    return best_W


def _refine_result(result: RecoveryResult, samples: SampleSet,
                   options: LearnOptions) -> RecoveryResult:
    W = refine_W_gd(result.A_hat, result.V, samples,
                    lr=options.refine_lr, iters=options.refine_iters)
    diag = dict(result.diagnostics)
    diag["refined"] = True
    return RecoveryResult(W, result.Z, result.A_hat, diag)


def as_network(result: RecoveryResult,
               noise_sigma: float = 0.0) -> NetworkParams:
    """View the recovery as NetworkParams (W = V, A = A_hat)."""
    return NetworkParams(result.V, result.A_hat, noise_sigma)
