"""Ground-truth networks, symmetric input distributions, and sampling.

The generative model is y = A sigma(W x) + xi with entrywise ReLU sigma,
W of shape (k, d) and A of shape (l, k) with k <= min(d, l).  Inputs are
drawn from a sign-symmetric distribution: the density at x equals the
density at -x.  Everything here is deterministic given the seeds.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError

_U64 = (1 << 64) - 1


def rng_from(seed: int, *labels: str) -> np.random.Generator:
    """Named substream of the root seed.

    Every source of randomness in the package derives its generator this
    way, so one root seed reproduces a whole run while distinct stages
    stay statistically independent.
    """
    entropy = [int(seed) & _U64]
    for label in labels:
        digest = hashlib.blake2b(str(label).encode(), digest_size=8).digest()
        entropy.append(int.from_bytes(digest, "little"))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def random_orthonormal(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix with orthonormal rows (rows <= cols) or columns (rows >= cols)."""
    transpose = rows < cols
    m, n = (cols, rows) if transpose else (rows, cols)
    Q, R = np.linalg.qr(rng.standard_normal((m, n)))
    Q = Q * np.sign(np.sign(np.diag(R)) + 0.5)  # canonical sign, Haar measure
    return Q.T if transpose else Q


# ---------------------------------------------------------------------------
# network parameters


@dataclass
class NetworkParams:
    """Weights (W, A) of a two-layer ReLU network plus the label-noise level.

    Rows of W are the hidden-unit weight vectors w_i; columns of A are the
    output loadings a_i.  Scaling row i of W by c > 0 while scaling column
    i of A by 1/c leaves the computed function unchanged, so the canonical
    form keeps every row of W at unit norm.
    """

    W: np.ndarray
    A: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        k, d = self.W.shape
        l, k2 = self.A.shape
        if k2 != k:
            raise ShapeError(f"A has {k2} columns but W has {k} rows")
        if k > d:
            raise ConfigurationError(f"need k <= d, got k={k}, d={d}")
        if k > l:
            raise ConfigurationError(f"need k <= l, got k={k}, l={l}")
        if not (np.isfinite(self.W).all() and np.isfinite(self.A).all()):
            raise ConfigurationError("weights must be finite")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be nonnegative")

    @property
    def k(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def l(self) -> int:
        return self.A.shape[0]

    def is_canonical(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.W, axis=1) - 1.0) <= atol))

    def canonicalize(self) -> "NetworkParams":
        """Unit-normalize rows of W, pushing the inverse scale into A."""
        norms = np.linalg.norm(self.W, axis=1)
        if np.any(norms == 0):
            raise ConfigurationError("cannot canonicalize a zero row of W")
        return NetworkParams(self.W / norms[:, None], self.A * norms[None, :],
                             self.noise_sigma)


# ---------------------------------------------------------------------------
# symmetric input distributions


class DistributionSpec:
    """Base class: a sign-symmetric input distribution on R^d."""

    variant = "abstract"
    dim: int

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class StandardGaussian(DistributionSpec):
    dim: int
    variant = "standard_gaussian"

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("dim must be >= 1")

    def sample(self, n, rng):
        return rng.standard_normal((n, self.dim))

    def to_json(self):
        return {"variant": self.variant, "dim": self.dim}


@dataclass(frozen=True)
class ShapedGaussian(DistributionSpec):
    """x = Q n for standard normal n, so the covariance is Q Q^T."""

    Q: np.ndarray
    variant = "shaped_gaussian"

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ConfigurationError("Q must be a square matrix")
        object.__setattr__(self, "Q", Q)

    @property
    def dim(self):
        return self.Q.shape[0]

    def sample(self, n, rng):
        return rng.standard_normal((n, self.dim)) @ self.Q.T

    def to_json(self):
        return {"variant": self.variant, "dim": self.dim, "Q": self.Q.tolist()}


@dataclass(frozen=True)
class SymmetricMixture(DistributionSpec):
    """Gaussian mixture stored as reflection pairs.

    Each entry of `components` is (weight, mean, cov).  A component with a
    nonzero mean is split structurally into two half-weight copies at +mu
    and -mu, so the sampler cannot be configured asymmetrically.
    """

    dim: int
    components: tuple = ()
    variant = "symmetric_mixture"

    def __post_init__(self):
        source = []
        expanded = []
        total = 0.0
        for weight, mu, cov in self.components:
            mu = np.asarray(mu, dtype=float).reshape(-1)
            cov = np.asarray(cov, dtype=float)
            if mu.shape != (self.dim,) or cov.shape != (self.dim, self.dim):
                raise ConfigurationError("component shapes must match dim")
            if weight <= 0:
                raise ConfigurationError("component weights must be positive")
            total += weight
            source.append((float(weight), mu.copy(), cov.copy()))
            if np.linalg.norm(mu) > 0:
                expanded.append((weight / 2.0, mu.copy(), cov.copy()))
                expanded.append((weight / 2.0, -mu, cov.copy()))
            else:
                expanded.append((weight, mu.copy(), cov.copy()))
        if abs(total - 1.0) > 1e-9:
            raise ConfigurationError(f"component weights sum to {total}, not 1")
        object.__setattr__(self, "source_components", tuple(source))
        object.__setattr__(self, "components", tuple(expanded))

    def sample(self, n, rng):
        weights = np.array([w for w, _, _ in self.components])
        chol = [np.linalg.cholesky(cov) for _, _, cov in self.components]
        idx = rng.choice(len(self.components), size=n, p=weights)
        out = np.empty((n, self.dim))
        for c, (w, mu, _) in enumerate(self.components):
            mask = idx == c
            m = int(mask.sum())
            if m:
                out[mask] = mu + rng.standard_normal((m, self.dim)) @ chol[c].T
        return out

    def to_json(self):
        return {
            "variant": self.variant,
            "dim": self.dim,
            "components": [
                {"weight": w, "mean": mu.tolist(), "cov": cov.tolist()}
                for w, mu, cov in self.source_components
            ],
        }


@dataclass(frozen=True)
class SymmetrizedEmpirical(DistributionSpec):
    """Resample rows of a dataset with a uniform random sign per draw."""

    data: np.ndarray
    variant = "symmetrized_empirical"

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if data.shape[0] < 1:
            raise ConfigurationError("empty dataset")
        if not np.isfinite(data).all():
            raise ConfigurationError("dataset must be finite")
        object.__setattr__(self, "data", data)

    @property
    def dim(self):
        return self.data.shape[1]

    def sample(self, n, rng):
        idx = rng.integers(0, self.data.shape[0], size=n)
        signs = rng.integers(0, 2, size=n) * 2 - 1
        return self.data[idx] * signs[:, None]

    def to_json(self):
        return {"variant": self.variant, "dim": self.dim,
                "data": self.data.tolist()}


@dataclass(frozen=True)
class QLambdaMixture(DistributionSpec):
    """Mixture of a base distribution with N(0, Q Q^T) at weight lam.

    This is the smoothed-analysis perturbation of an input distribution:
    arbitrarily close to the base in total variation (distance <= lam) yet
    with a randomized Gaussian component.  lam = 1 degenerates to the pure
    shaped Gaussian.
    """

    base: DistributionSpec
    Q: np.ndarray
    lam: float
    variant = "q_lambda_mixture"

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape != (self.base.dim, self.base.dim):
            raise ConfigurationError("Q must be square and match base dim")
        if not 0.0 < self.lam <= 1.0:
            raise ConfigurationError("lambda must be in (0, 1]")
        object.__setattr__(self, "Q", Q)

    @property
    def dim(self):
        return self.base.dim

    def sample(self, n, rng):
        take_gauss = rng.random(n) < self.lam
        out = self.base.sample(n, rng)
        m = int(take_gauss.sum())
        if m:
            out[take_gauss] = rng.standard_normal((m, self.dim)) @ self.Q.T
        return out

    def to_json(self):
        return {"variant": self.variant, "dim": self.dim, "lambda": self.lam,
                "Q": self.Q.tolist(), "base": self.base.to_json()}


def distribution_from_json(doc: dict) -> DistributionSpec:
    """Rebuild a DistributionSpec from its JSON form ("variant" dispatch)."""
    try:
        variant = doc["variant"]
        if variant == "standard_gaussian":
            return StandardGaussian(int(doc["dim"]))
        if variant == "shaped_gaussian":
            return ShapedGaussian(np.asarray(doc["Q"], dtype=float))
        if variant == "symmetric_mixture":
            comps = [(c["weight"], np.asarray(c["mean"], dtype=float),
                      np.asarray(c["cov"], dtype=float))
                     for c in doc["components"]]
            return SymmetricMixture(int(doc["dim"]), tuple(comps))
        if variant == "symmetrized_empirical":
            return SymmetrizedEmpirical(np.asarray(doc["data"], dtype=float))
        if variant == "q_lambda_mixture":
            return QLambdaMixture(distribution_from_json(doc["base"]),
                                  np.asarray(doc["Q"], dtype=float),
                                  float(doc["lambda"]))
    except KeyError as exc:
        raise ConfigurationError(f"missing field in distribution spec: {exc}")
    raise ConfigurationError(f"unknown distribution variant {variant!r}")


# ---------------------------------------------------------------------------
# sample sets and the forward model


@dataclass
class SampleSet:
    """Paired inputs X (n, d) and outputs Y (n, l) with provenance."""

    X: np.ndarray
    Y: np.ndarray
    seed: int = 0
    spec: DistributionSpec | None = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if self.X.shape[0] != self.Y.shape[0]:
            raise ShapeError("X and Y must have equal row counts")
        if not (np.isfinite(self.X).all() and np.isfinite(self.Y).all()):
            raise ShapeError("samples must be finite")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def split_half(self) -> tuple["SampleSet", "SampleSet"]:
        """Deterministic first-half / second-half split (callers shuffle)."""
        h = self.n // 2
        return (SampleSet(self.X[:h], self.Y[:h], self.seed, self.spec),
                SampleSet(self.X[h:], self.Y[h:], self.seed, self.spec))


def sample_inputs(spec: DistributionSpec, n: int, seed: int) -> np.ndarray:
    """Draw n inputs from a symmetric distribution; (n, d) matrix."""
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    return spec.sample(n, rng_from(seed, "inputs"))


def forward(params: NetworkParams, X: np.ndarray,
            noise_seed: int = 0) -> np.ndarray:
    """Evaluate y = A sigma(W x) + xi row-wise.

    The noise is i.i.d. N(0, noise_sigma^2) per output coordinate; with
    noise_sigma = 0 the map is deterministic.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.d:
        raise ShapeError(f"X has {X.shape[1]} columns, expected {params.d}")
    Y = np.maximum(X @ params.W.T, 0.0) @ params.A.T
    if params.noise_sigma > 0:
        rng = rng_from(noise_seed, "label-noise")
        Y = Y + params.noise_sigma * rng.standard_normal(Y.shape)
    return Y


def generate_samples(params: NetworkParams, spec: DistributionSpec, n: int,
                     seed: int) -> SampleSet:
    """Inputs plus teacher outputs, with input/noise substreams tied to seed."""
    X = sample_inputs(spec, n, seed)
    Y = forward(params, X, noise_seed=seed)
    return SampleSet(X, Y, seed=seed, spec=spec)


def symmetrize_dataset(X: np.ndarray) -> np.ndarray:
    """Concatenate X with -X; the empirical law becomes exactly symmetric."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.vstack([X, -X])


def perturb_weights(W: np.ndarray, rho: float, seed: int) -> np.ndarray:
    """W + rho * E with E an i.i.d. standard Gaussian matrix."""
    if rho <= 0:
        raise ConfigurationError("rho must be positive")
    W = np.atleast_2d(np.asarray(W, dtype=float))
    return W + rho * rng_from(seed, "weight-perturbation").standard_normal(W.shape)


def condition_controlled_matrix(dim: int, kappa: float, seed: int) -> np.ndarray:
    """Square matrix with geometric spectrum and condition number kappa.

    Returns U diag(lam^-1, ..., lam^-dim) V^T with Haar-random orthonormal
    U, V and lam solving lam^(dim-1) = kappa, so sigma_1/sigma_dim = kappa
    exactly.
    """
    if kappa < 1:
        raise ConfigurationError("kappa must be >= 1")
    rng = rng_from(seed, "conditioned-matrix")
    U = random_orthonormal(dim, dim, rng)
    V = random_orthonormal(dim, dim, rng)
    if dim == 1:
        if abs(kappa - 1.0) > 1e-12:
            raise ConfigurationError("a 1x1 matrix can only have kappa = 1")
        sigma = np.ones(1)
    else:
        lam = kappa ** (1.0 / (dim - 1))
        sigma = lam ** (-np.arange(1, dim + 1, dtype=float))
    return (U * sigma) @ V.T
