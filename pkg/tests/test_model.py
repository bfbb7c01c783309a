import numpy as np
import pytest

from momnet.errors import ConfigurationError, ShapeError
from momnet.model import (NetworkParams, QLambdaMixture, ShapedGaussian,
                          StandardGaussian, SymmetricMixture,
                          SymmetrizedEmpirical, condition_controlled_matrix,
                          forward, generate_samples, perturb_weights,
                          random_orthonormal, rng_from, sample_inputs,
                          symmetrize_dataset)

HALF_NORMAL_MEAN = 1.0 / np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------------------
# sampling


def test_standard_gaussian_mean_vanishes():
    X = sample_inputs(StandardGaussian(2), 1_000_000, seed=0)
    assert np.abs(X.mean(axis=0)).max() < 5e-3


def test_symmetric_mixture_moments_match_monte_carlo_oracle():
    # component at the all-ones vector plus its reflection, unit covariance:
    # population mean 0, per-coordinate second moment 1 + mu_i^2 = 2
    d = 3
    spec = SymmetricMixture(d, ((1.0, np.ones(d), np.eye(d)),))
    X = sample_inputs(spec, 1_000_000, seed=1)
    assert np.abs(X.mean(axis=0)).max() < 0.01
    assert np.abs((X**2).mean(axis=0) - 2.0).max() < 0.02


def test_symmetric_mixture_stores_reflection_pairs():
    spec = SymmetricMixture(2, ((0.4, [1.0, 0.0], np.eye(2)),
                                (0.6, [0.0, 0.0], np.eye(2))))
    means = sorted(tuple(mu) for _, mu, _ in spec.components)
    assert (-1.0, 0.0) in means and (1.0, 0.0) in means
    weights = [w for w, _, _ in spec.components]
    assert abs(sum(weights) - 1.0) < 1e-12
    with pytest.raises(ConfigurationError):
        SymmetricMixture(2, ((0.5, [1.0, 0.0], np.eye(2)),))  # weights != 1


def test_q_lambda_degenerates_to_shaped_gaussian_at_one():
    Q = np.array([[2.0, 0.0], [1.0, 1.0]])
    spec = QLambdaMixture(StandardGaussian(2), Q, lam=1.0)
    X = spec.sample(400_000, rng_from(3, "test"))
    cov = X.T @ X / X.shape[0]
    assert np.abs(cov - Q @ Q.T).max() < 0.05


def test_q_lambda_rejects_bad_configuration():
    base = StandardGaussian(2)
    for lam in (0.0, -0.2, 1.5):
        with pytest.raises(ConfigurationError):
            QLambdaMixture(base, np.eye(2), lam)
    with pytest.raises(ConfigurationError):
        QLambdaMixture(base, np.ones((2, 3)), 0.5)  # nonsquare Q
    with pytest.raises(ConfigurationError):
        QLambdaMixture(base, np.eye(3), 0.5)  # dim mismatch


def test_every_variant_has_vanishing_odd_moments():
    # 5-sigma z-test on each entry of the empirical third-moment tensor
    d, n = 3, 200_000
    data = rng_from(9, "seed-data").standard_normal((50, d)) + 1.0
    specs = [
        StandardGaussian(d),
        ShapedGaussian(np.tril(np.ones((d, d)))),
        SymmetricMixture(d, ((1.0, np.ones(d) / np.sqrt(d), np.eye(d)),)),
        SymmetrizedEmpirical(data),
        QLambdaMixture(StandardGaussian(d), 2.0 * np.eye(d), lam=0.3),
    ]
    for spec in specs:
        X = sample_inputs(spec, n, seed=11)
        third = np.einsum("si,sj,sk->sijk", X, X, X)
        mean = third.mean(axis=0)
        std = third.std(axis=0) + 1e-12
        z = np.abs(mean) / (std / np.sqrt(n))
        assert z.max() < 5.0, (spec.variant, z.max())


def test_sampling_is_reproducible_bytewise():
    spec = SymmetricMixture(2, ((1.0, [1.0, 1.0], np.eye(2)),))
    a = sample_inputs(spec, 1000, seed=42)
    b = sample_inputs(spec, 1000, seed=42)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_inputs(spec, 1000, seed=43))


# ---------------------------------------------------------------------------
# forward model


def test_relu_kills_negative_preactivation():
    p = NetworkParams(W=[[1.0, 0.0]], A=[[1.0]])
    np.testing.assert_array_equal(forward(p, [[-3.0, 5.0]]), [[0.0]])


def test_forward_direct_evaluation():
    p = NetworkParams(W=np.eye(2), A=[[1.0, 1.0], [0.0, 1.0]])
    np.testing.assert_array_equal(forward(p, [[1.0, 2.0]]), [[3.0, 2.0]])


def test_forward_output_variance_matches_oracle():
    # orthonormal W makes the hidden units independent half-rectified
    # normals: Var(y_i) = sum_j A_ij^2 (1/2 - 1/(2 pi)) + sigma^2
    rng = rng_from(7, "vartest")
    W = random_orthonormal(10, 10, rng)
    A = random_orthonormal(10, 10, rng)
    sigma = 0.25
    p = NetworkParams(W, A, noise_sigma=sigma)
    X = sample_inputs(StandardGaussian(10), 1_000_000, seed=5)
    Y = forward(p, X, noise_seed=6)
    oracle = 0.5 - 1.0 / (2.0 * np.pi) + sigma**2
    assert np.abs(Y.var(axis=0) / oracle - 1.0).max() < 0.02


def test_forward_shape_error():
    p = NetworkParams(W=np.eye(2), A=np.eye(2))
    with pytest.raises(ShapeError):
        forward(p, np.zeros((4, 3)))


def test_forward_positive_homogeneity_per_unit():
    rng = rng_from(13, "homog")
    W = rng.standard_normal((3, 5))
    A = rng.standard_normal((4, 3))
    X = rng.standard_normal((50, 5))
    base = forward(NetworkParams(W, A), X)
    c = 7.3
    W2, A2 = W.copy(), A.copy()
    W2[1] *= c
    A2[:, 1] /= c
    scaled = forward(NetworkParams(W2, A2), X)
    assert np.abs(scaled - base).max() <= 1e-12 * max(1.0, np.abs(base).max())


def test_canonicalize_preserves_function():
    rng = rng_from(17, "canon")
    p = NetworkParams(3.0 * rng.standard_normal((3, 4)),
                      rng.standard_normal((3, 3)))
    q = p.canonicalize()
    assert q.is_canonical()
    X = rng.standard_normal((20, 4))
    assert np.abs(forward(p, X) - forward(q, X)).max() < 1e-12


# ---------------------------------------------------------------------------
# dataset symmetrization


def test_symmetrize_concatenates_negations():
    out = symmetrize_dataset([[1.0, 2.0]])
    np.testing.assert_array_equal(out, [[1.0, 2.0], [-1.0, -2.0]])


def test_symmetrize_cancels_odd_moments():
    X = rng_from(23, "symm").standard_normal((128, 3)) + 0.7
    Xs = symmetrize_dataset(X)
    scale = np.abs(X).max()
    assert np.abs(Xs.mean(axis=0)).max() <= 1e-12 * scale
    third = np.einsum("si,sj,sk->ijk", Xs, Xs, Xs) / Xs.shape[0]
    assert np.abs(third).max() <= 1e-12 * scale**3


# ---------------------------------------------------------------------------
# perturbations


def test_perturb_weights_vanishing_rho_limit():
    W = rng_from(29, "base").standard_normal((3, 4))
    Wt = perturb_weights(W, rho=1e-300, seed=0)
    assert np.abs(Wt - W).max() < 1e-290


def test_perturb_weights_entry_variance():
    # 100 draws of a 10 x 10 zero matrix give 10^4 i.i.d. standard normals
    entries = np.concatenate([
        perturb_weights(np.zeros((10, 10)), 1.0, seed=s).ravel()
        for s in range(100)])
    assert abs(entries.var() - 1.0) < 0.05


def test_perturb_weights_chi_square_oracle():
    # ||W~ - W||_F^2 / rho^2 is chi-square with k*d degrees of freedom
    k, d, rho, trials = 3, 5, 0.37, 2000
    W = rng_from(31, "chi").standard_normal((k, d))
    stats = [np.sum((perturb_weights(W, rho, seed=s) - W) ** 2) / rho**2
             for s in range(trials)]
    assert abs(np.mean(stats) / (k * d) - 1.0) < 0.05


def test_perturb_requires_positive_rho():
    with pytest.raises(ConfigurationError):
        perturb_weights(np.eye(2), 0.0, seed=0)


# ---------------------------------------------------------------------------
# condition-controlled matrices


def test_condition_one_gives_orthonormal():
    M = condition_controlled_matrix(6, 1.0, seed=3)
    sv = np.linalg.svd(M, compute_uv=False)
    assert np.abs(sv - 1.0).max() < 1e-12


def test_condition_number_is_exact():
    M = condition_controlled_matrix(10, 100.0, seed=4)
    sv = np.linalg.svd(M, compute_uv=False)
    assert abs(sv[0] / sv[-1] - 100.0) < 1e-8
    lam = 100.0 ** (1.0 / 9.0)
    np.testing.assert_allclose(sv, lam ** -np.arange(1, 11), rtol=1e-12)


def test_condition_spectrum_is_geometric():
    sv = np.linalg.svd(condition_controlled_matrix(7, 30.0, seed=5),
                       compute_uv=False)
    ratios = sv[:-1] / sv[1:]
    assert np.abs(ratios - ratios[0]).max() < 1e-10


def test_condition_rejects_kappa_below_one():
    with pytest.raises(ConfigurationError):
        condition_controlled_matrix(4, 0.5, seed=0)


# ---------------------------------------------------------------------------
# parameter validation


def test_network_params_validation():
    with pytest.raises(ShapeError):
        NetworkParams(W=np.eye(3), A=np.eye(2))  # column count mismatch
    with pytest.raises(ConfigurationError):
        NetworkParams(W=np.ones((3, 2)), A=np.eye(3))  # k > d
    with pytest.raises(ConfigurationError):
        NetworkParams(W=np.ones((3, 4)), A=np.ones((2, 3)))  # k > l
    with pytest.raises(ConfigurationError):
        NetworkParams(W=np.eye(2), A=np.eye(2), noise_sigma=-1.0)


def test_generate_samples_reproducible():
    p = NetworkParams(np.eye(2), np.eye(2), noise_sigma=0.1)
    s1 = generate_samples(p, StandardGaussian(2), 100, seed=8)
    s2 = generate_samples(p, StandardGaussian(2), 100, seed=8)
    assert s1.X.tobytes() == s2.X.tobytes()
    assert s1.Y.tobytes() == s2.Y.tobytes()
