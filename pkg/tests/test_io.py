import numpy as np
import pytest

from momnet import io
from momnet.errors import DataError
from momnet.learner import learn_two_layer
from momnet.model import (NetworkParams, QLambdaMixture, StandardGaussian,
                          SymmetricMixture, SymmetrizedEmpirical,
                          generate_samples, random_orthonormal, rng_from)
from momnet.moments import estimate_moments


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_matrix_round_trip_is_exact(tmp_path, fmt):
    rng = rng_from(0, "io")
    arr = rng.standard_normal((7, 3)) * 10.0 ** rng.integers(-8, 8, (7, 3))
    path = tmp_path / f"m.{fmt}"
    io.save_matrix(path, arr, fmt=fmt)
    np.testing.assert_array_equal(io.load_matrix(path), arr)


def test_binary_layout_is_as_documented(tmp_path):
    path = tmp_path / "m.mat"
    io.save_matrix(path, np.array([[1.0, 2.0]]), fmt="bin")
    blob = path.read_bytes()
    assert blob[:4] == b"MOM1"
    assert int.from_bytes(blob[4:12], "little") == 1
    assert int.from_bytes(blob[12:20], "little") == 2
    assert np.frombuffer(blob[20:], dtype="<f8").tolist() == [1.0, 2.0]


def test_csv_has_no_header_and_dot_decimal(tmp_path):
    path = tmp_path / "m.csv"
    io.save_matrix(path, np.array([[1.5, -2.0], [0.25, 3.0]]))
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[0].split(",")[0] == "1.5"


def test_load_matrix_errors(tmp_path):
    with pytest.raises(DataError):
        io.load_matrix(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,zzz\n")
    with pytest.raises(DataError):
        io.load_matrix(bad)
    trunc = tmp_path / "trunc.mat"
    trunc.write_bytes(b"MOM1" + (8).to_bytes(8, "little") * 2 + b"\x00" * 8)
    with pytest.raises(DataError):
        io.load_matrix(trunc)


def test_distribution_round_trip(tmp_path):
    spec = QLambdaMixture(
        SymmetricMixture(2, ((1.0, [1.0, -1.0], 2.0 * np.eye(2)),)),
        Q=np.array([[1.0, 0.5], [0.0, 1.0]]), lam=0.25)
    path = tmp_path / "spec.json"
    io.save_distribution(path, spec)
    loaded = io.load_distribution(path)
    assert isinstance(loaded, QLambdaMixture)
    assert loaded.lam == 0.25
    a = spec.sample(50, rng_from(1, "s"))
    b = loaded.sample(50, rng_from(1, "s"))
    np.testing.assert_array_equal(a, b)


def test_empirical_distribution_round_trip(tmp_path):
    spec = SymmetrizedEmpirical(rng_from(2, "emp").standard_normal((5, 3)))
    io.save_distribution(tmp_path / "e.json", spec)
    loaded = io.load_distribution(tmp_path / "e.json")
    np.testing.assert_array_equal(loaded.data, spec.data)


def test_params_round_trip(tmp_path):
    p = NetworkParams(random_orthonormal(2, 3, rng_from(3, "p")),
                      np.array([[1.0, 2.0], [0.5, -1.0]]), 0.3)
    io.save_params(tmp_path / "p.json", p)
    q = io.load_params(tmp_path / "p.json")
    np.testing.assert_array_equal(q.W, p.W)
    np.testing.assert_array_equal(q.A, p.A)
    assert q.noise_sigma == 0.3


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_samples_round_trip(tmp_path, fmt):
    p = NetworkParams(np.eye(2), np.eye(2), 0.1)
    s = generate_samples(p, StandardGaussian(2), 64, seed=4)
    io.save_samples(tmp_path / "s", s, fmt=fmt)
    t = io.load_samples(tmp_path / "s")
    np.testing.assert_array_equal(t.X, s.X)
    np.testing.assert_array_equal(t.Y, s.Y)
    assert t.seed == 4
    assert isinstance(t.spec, StandardGaussian)


def test_moments_round_trip(tmp_path):
    p = NetworkParams(random_orthonormal(2, 3, rng_from(5, "m")),
                      np.eye(2), 0.2)
    ms = estimate_moments(generate_samples(p, StandardGaussian(3), 500,
                                           seed=6))
    io.save_moments(tmp_path / "mom", ms, fmt="bin")
    back = io.load_moments(tmp_path / "mom")
    for field in ("C2", "Cyx", "Cyy", "G", "H", "mean_y"):
        np.testing.assert_array_equal(getattr(back, field),
                                      getattr(ms, field))
    assert back.n == 500


def test_recovery_round_trip(tmp_path):
    p = NetworkParams(random_orthonormal(3, 3, rng_from(7, "r")),
                      random_orthonormal(3, 3, rng_from(8, "r")))
    s = generate_samples(p, StandardGaussian(3), 6000, seed=9)
    result = learn_two_layer(s, 3, seed=10)
    io.save_recovery(tmp_path / "rec", result, fmt="bin")
    back = io.load_recovery(tmp_path / "rec")
    np.testing.assert_array_equal(back.V, result.V)
    np.testing.assert_array_equal(back.A_hat, result.A_hat)
    X = s.X[:10]
    np.testing.assert_array_equal(back.predict(X), result.predict(X))
    assert back.diagnostics["detector_variant"] == "noisy"


def test_detector_round_trip(tmp_path):
    from momnet.detector import build_T
    from momnet.moments import analytic_gaussian_moments
    p = NetworkParams(random_orthonormal(3, 4, rng_from(11, "d")),
                      random_orthonormal(3, 3, rng_from(12, "d")))
    det = build_T(analytic_gaussian_moments(p), 3)
    io.save_detector(tmp_path / "det", det, fmt="bin")
    back = io.load_detector(tmp_path / "det")
    np.testing.assert_array_equal(back.T, det.T)
    assert back.gap_report == det.gap_report
    assert back.variant == det.variant
    u = rng_from(13, "u").standard_normal(3)
    np.testing.assert_array_equal(back.apply(u), det.apply(u))


def test_z_recovery_round_trip(tmp_path):
    from momnet.detector import exact_T_gaussian
    from momnet.spectral import nullspace_basis, simultaneous_diagonalize
    p = NetworkParams(random_orthonormal(3, 4, rng_from(14, "z")),
                      random_orthonormal(3, 3, rng_from(15, "z")))
    rec = simultaneous_diagonalize(nullspace_basis(exact_T_gaussian(p)),
                                   seed=16)
    io.save_z_recovery(tmp_path / "zr", rec)
    back = io.load_z_recovery(tmp_path / "zr")
    np.testing.assert_array_equal(back.Z, rec.Z)
    np.testing.assert_allclose(back.eigen_diag, rec.eigen_diag, atol=1e-15)
    assert back.probe_seed == 16
    assert back.retries_used == rec.retries_used
