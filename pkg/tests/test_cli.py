import json

import numpy as np
import pytest

from momnet import io
from momnet.cli import build_parser, main
from momnet.model import NetworkParams, StandardGaussian, random_orthonormal, \
    rng_from


@pytest.fixture
def toy_files(tmp_path):
    spec = StandardGaussian(3)
    params = NetworkParams(random_orthonormal(2, 3, rng_from(0, "cli-w")),
                           random_orthonormal(2, 2, rng_from(0, "cli-a")))
    io.save_distribution(tmp_path / "spec.json", spec)
    io.save_params(tmp_path / "params.json", params)
    return tmp_path


def test_gen_learn_eval_pipeline(toy_files, capsys):
    root = toy_files
    assert main(["gen", "--spec", str(root / "spec.json"),
                 "--params", str(root / "params.json"),
                 "--n", "8000", "--seed", "1",
                 "--out-dir", str(root / "data")]) == 0
    assert main(["learn", "--samples", str(root / "data"), "--k", "2",
                 "--seed", "2", "--out-dir", str(root / "rec")]) == 0
    assert main(["eval", "--result", str(root / "rec"),
                 "--params", str(root / "params.json"),
                 "--samples", str(root / "data"),
                 "--out-dir", str(root / "metrics")]) == 0
    doc = json.loads((root / "metrics" / "metrics.json").read_text())
    assert doc["W_err"] < 0.3 and doc["A_err"] < 0.3 and doc["mse"] < 0.05
    assert "W_err" in capsys.readouterr().out


def test_gen_round_trips_bit_exactly(toy_files):
    root = toy_files
    k1 = NetworkParams([[1.0, 0.0, 0.0]], [[1.0]])
    io.save_params(root / "k1.json", k1)
    for fmt in ("csv", "bin"):
        out = root / f"data_{fmt}"
        assert main(["gen", "--spec", str(root / "spec.json"),
                     "--params", str(root / "k1.json"), "--n", "100",
                     "--seed", "5", "--format", fmt,
                     "--out-dir", str(out)]) == 0
        samples = io.load_samples(out)
        regenerated = io.load_samples(out)
        assert samples.X.tobytes() == regenerated.X.tobytes()


def test_gen_same_seed_identical_bytes(toy_files):
    root = toy_files
    for name in ("a", "b"):
        assert main(["gen", "--spec", str(root / "spec.json"),
                     "--params", str(root / "params.json"), "--n", "64",
                     "--seed", "9", "--out-dir", str(root / name)]) == 0
    assert (root / "a" / "X.csv").read_bytes() == \
        (root / "b" / "X.csv").read_bytes()
    assert (root / "a" / "Y.csv").read_bytes() == \
        (root / "b" / "Y.csv").read_bytes()


def test_missing_samples_is_data_error_without_partial_output(toy_files):
    root = toy_files
    code = main(["learn", "--samples", str(root / "nope"), "--k", "2",
                 "--out-dir", str(root / "rec2")])
    assert code == 3
    assert not (root / "rec2").exists()


def test_bad_config_exits_2(toy_files):
    root = toy_files
    bad = root / "bad_spec.json"
    bad.write_text(json.dumps({"variant": "warp_field", "dim": 3}))
    code = main(["gen", "--spec", str(bad),
                 "--params", str(root / "params.json"), "--n", "10",
                 "--out-dir", str(root / "x")])
    assert code == 2
    code = main(["gen", "--spec", str(root / "spec.json"),
                 "--params", str(root / "params.json"), "--n", "0",
                 "--out-dir", str(root / "x")])
    assert code == 2


def test_numerical_error_exits_4(tmp_path):
    # a dead input coordinate makes E[xx^T] singular
    rng = rng_from(1, "dead")
    X = np.zeros((2000, 3))
    X[:, :2] = rng.standard_normal((2000, 2))
    Y = np.maximum(X[:, :2] @ np.eye(2), 0.0)
    io.save_samples(tmp_path / "sick", __import__("momnet").SampleSet(X, Y))
    code = main(["learn", "--samples", str(tmp_path / "sick"), "--k", "2",
                 "--out-dir", str(tmp_path / "rec")])
    assert code == 4


def test_experiment_subcommand(tmp_path):
    config = {"experiment": "sample_efficiency", "d": 3, "k": 3,
              "grid": [500, 1000], "trials": 1, "seed": 3, "test_n": 1000}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    assert main(["experiment", "--config", str(path),
                 "--out-dir", str(tmp_path / "exp")]) == 0
    lines = (tmp_path / "exp" / "sample_efficiency.csv").read_text() \
        .strip().splitlines()
    assert lines[0].startswith("experiment,d,k,l,grid_value,trial")
    assert len(lines) == 3


def test_experiment_rejects_unknown_options(tmp_path):
    config = {"experiment": "noise", "d": 3, "k": 3, "grid": [0.1],
              "options": {"warp": True}}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    assert main(["experiment", "--config", str(path),
                 "--out-dir", str(tmp_path)]) == 2


def test_distmat_closed_form_and_scan(toy_files):
    root = toy_files
    assert main(["distmat", "--params", str(root / "params.json"),
                 "--closed-form", "--augmented",
                 "--out-dir", str(root / "dm")]) == 0
    diag = json.loads((root / "dm" / "distmat_diag.json").read_text())
    assert diag["sigma_min"] > 0
    data = io.load_matrix(root / "dm" / "distmat.csv")
    assert data.shape == (9, 2)  # one pair column plus the augmented one
    assert main(["distmat", "--params", str(root / "params.json"),
                 "--scan", "0.0,0.05", "--trials", "2",
                 "--out-dir", str(root / "dm")]) == 0
    scan = (root / "dm" / "sigma_scan.csv").read_text().strip().splitlines()
    assert scan[0] == "rho,trial,sigma_min"
    assert len(scan) == 5


def test_distmat_monte_carlo(toy_files):
    root = toy_files
    assert main(["distmat", "--params", str(root / "params.json"),
                 "--spec", str(root / "spec.json"), "--n", "5000",
                 "--seed", "4", "--out-dir", str(root / "dmc")]) == 0
    diag = json.loads((root / "dmc" / "distmat_diag.json").read_text())
    assert diag["provenance"]["kind"] == "monte_carlo"


def test_help_documents_every_flag():
    parser = build_parser()
    text = parser.format_help()
    assert "momnet" in text
    for sub in ("gen", "learn", "eval", "experiment", "distmat"):
        assert sub in text
    sub_actions = next(a for a in parser._actions
                       if hasattr(a, "choices") and a.choices)
    learn_help = sub_actions.choices["learn"].format_help()
    for flag in ("--samples", "--k", "--variant", "--als", "--refine",
                 "--nonsquare", "--seed", "--out-dir", "--format",
                 "--threads"):
        assert flag in learn_help


def test_threads_flag_validated(toy_files):
    root = toy_files
    code = main(["gen", "--spec", str(root / "spec.json"),
                 "--params", str(root / "params.json"), "--n", "10",
                 "--threads", "0", "--out-dir", str(root / "t")])
    assert code == 2


def test_learn_k1_toy(toy_files):
    root = toy_files
    k1 = NetworkParams([[1.0, 0.0, 0.0]], [[2.0]])
    io.save_params(root / "k1.json", k1)
    assert main(["gen", "--spec", str(root / "spec.json"),
                 "--params", str(root / "k1.json"), "--n", "4000",
                 "--seed", "6", "--out-dir", str(root / "k1data")]) == 0
    assert main(["learn", "--samples", str(root / "k1data"), "--k", "1",
                 "--out-dir", str(root / "k1rec")]) == 0
    rec = io.load_recovery(root / "k1rec")
    assert rec.A_hat.shape == (1, 1)
    assert rec.A_hat[0, 0] > 0


def test_learn_nonsquare_routing(tmp_path):
    rng = rng_from(2, "cli-ns")
    params = NetworkParams(random_orthonormal(2, 4, rng),
                           random_orthonormal(3, 2, rng))
    io.save_distribution(tmp_path / "spec.json", StandardGaussian(4))
    io.save_params(tmp_path / "params.json", params)
    assert main(["gen", "--spec", str(tmp_path / "spec.json"),
                 "--params", str(tmp_path / "params.json"), "--n", "20000",
                 "--seed", "7", "--out-dir", str(tmp_path / "data")]) == 0
    # without --nonsquare the mismatch is a configuration error
    assert main(["learn", "--samples", str(tmp_path / "data"), "--k", "2",
                 "--out-dir", str(tmp_path / "rec")]) == 2
    assert main(["learn", "--samples", str(tmp_path / "data"), "--k", "2",
                 "--nonsquare", "--out-dir", str(tmp_path / "rec")]) == 0
    rec = io.load_recovery(tmp_path / "rec")
    assert rec.A_hat.shape == (3, 2)


def test_gen_paper_scale_within_budget(tmp_path):
    import time
    rng = rng_from(3, "cli-big")
    params = NetworkParams(random_orthonormal(10, 10, rng),
                           random_orthonormal(10, 10, rng))
    io.save_distribution(tmp_path / "spec.json", StandardGaussian(10))
    io.save_params(tmp_path / "params.json", params)
    start = time.perf_counter()
    assert main(["gen", "--spec", str(tmp_path / "spec.json"),
                 "--params", str(tmp_path / "params.json"), "--n", "10000",
                 "--out-dir", str(tmp_path / "data")]) == 0
    assert time.perf_counter() - start < 5.0


def test_bundled_experiment_configs_parse():
    from pathlib import Path
    from momnet.cli import _experiment_config_from_json
    configs = Path(__file__).parent.parent / "configs"
    names = {p.name for p in configs.glob("*.json")}
    assert names == {"sample_efficiency.json", "noise.json",
                     "conditioning.json"}
    for path in sorted(configs.glob("*.json")):
        config = _experiment_config_from_json(io.load_json(path))
        assert config.trials == 5
        assert config.options.use_als and config.options.refine
        assert config.d == config.k == 10
