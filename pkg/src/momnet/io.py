"""File formats shared by the CLI and the library.

Matrices travel in one of two self-describing forms:

* CSV: one row per line, '.' decimal separator, no header;
* binary: magic bytes ``MOM1``, two little-endian uint64 counts
  (rows, cols), then rows*cols little-endian float64 values row-major.

Distribution specs and network parameters are JSON documents; moment
sets and recovery results are directories of matrix files plus a JSON
manifest.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .detector import DetectorMatrix
from .errors import DataError
from .learner import RecoveryResult
from .model import (DistributionSpec, NetworkParams, SampleSet,
                    distribution_from_json)
from .moments import MomentSet
from .spectral import ZRecovery
from .symvec import SymVecConvention

MAGIC = b"MOM1"
FORMATS = ("csv", "bin")


def save_matrix(path, arr, fmt: str = "csv") -> None:
    path = Path(path)
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    if arr.ndim != 2:
        raise DataError("matrix files hold 2-D arrays; reshape first")
    if fmt == "csv":
        np.savetxt(path, arr, fmt="%.17g", delimiter=",")
    elif fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<QQ", arr.shape[0], arr.shape[1]))
            fh.write(arr.astype("<f8").tobytes(order="C"))
    else:
        raise DataError(f"unknown matrix format {fmt!r}")


def load_matrix(path) -> np.ndarray:
    """Load either format, sniffing the binary magic."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing matrix file: {path}")
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == MAGIC:
            rows, cols = struct.unpack("<QQ", fh.read(16))
            payload = fh.read(8 * rows * cols)
            if len(payload) != 8 * rows * cols:
                raise DataError(f"truncated binary matrix: {path}")
            return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()
    try:
        return np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    except ValueError as exc:
        raise DataError(f"cannot parse {path} as CSV matrix: {exc}")


def _ext(fmt: str) -> str:
    return {"csv": ".csv", "bin": ".mat"}[fmt]


# ---------------------------------------------------------------------------
# JSON documents


def save_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_json(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON in {path}: {exc}")


def save_distribution(path, spec: DistributionSpec) -> None:
    save_json(path, spec.to_json())


def load_distribution(path) -> DistributionSpec:
    return distribution_from_json(load_json(path))


def save_params(path, params: NetworkParams) -> None:
    save_json(path, {"W": params.W.tolist(), "A": params.A.tolist(),
                     "noise_sigma": params.noise_sigma})


def load_params(path) -> NetworkParams:
    doc = load_json(path)
    try:
        return NetworkParams(np.asarray(doc["W"], dtype=float),
                             np.asarray(doc["A"], dtype=float),
                             float(doc.get("noise_sigma", 0.0)))
    except KeyError as exc:
        raise DataError(f"params file missing field {exc}")


# ---------------------------------------------------------------------------
# sample sets


def save_samples(out_dir, samples: SampleSet, fmt: str = "csv") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(out / ("X" + _ext(fmt)), samples.X, fmt)
    save_matrix(out / ("Y" + _ext(fmt)), samples.Y, fmt)
    manifest = {"n": samples.n, "d": samples.X.shape[1],
                "l": samples.Y.shape[1], "seed": samples.seed, "format": fmt}
    if samples.spec is not None:
        manifest["distribution"] = samples.spec.to_json()
    save_json(out / "manifest.json", manifest)


def load_samples(in_dir) -> SampleSet:
    src = Path(in_dir)
    manifest = load_json(src / "manifest.json")
    fmt = manifest.get("format", "csv")
    X = load_matrix(src / ("X" + _ext(fmt)))
    Y = load_matrix(src / ("Y" + _ext(fmt)))
    spec = None
    if "distribution" in manifest:
        spec = distribution_from_json(manifest["distribution"])
    return SampleSet(X, Y, seed=manifest.get("seed", 0), spec=spec)


# ---------------------------------------------------------------------------
# moment sets


def save_moments(out_dir, ms: MomentSet, fmt: str = "csv") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    e = _ext(fmt)
    save_matrix(out / ("C2" + e), ms.C2, fmt)
    save_matrix(out / ("Cyx" + e), ms.Cyx, fmt)
    save_matrix(out / ("Cyy" + e), ms.Cyy, fmt)
    save_matrix(out / ("G" + e), ms.G.reshape(ms.l * ms.d, -1), fmt)
    save_matrix(out / ("H" + e), ms.H.reshape(ms.l * ms.l, -1), fmt)
    save_matrix(out / ("mean_y" + e), ms.mean_y.reshape(1, -1), fmt)
    save_json(out / "manifest.json",
              {"n": ms.n, "d": ms.d, "l": ms.l, "format": fmt,
               "shapes": {"G": list(ms.G.shape), "H": list(ms.H.shape)}})


def load_moments(in_dir) -> MomentSet:
    src = Path(in_dir)
    manifest = load_json(src / "manifest.json")
    fmt = manifest.get("format", "csv")
    e = _ext(fmt)
    d, l = manifest["d"], manifest["l"]
    return MomentSet(
        C2=load_matrix(src / ("C2" + e)),
        Cyx=load_matrix(src / ("Cyx" + e)).reshape(l, d),
        Cyy=load_matrix(src / ("Cyy" + e)),
        G=load_matrix(src / ("G" + e)).reshape(l, d, d * d),
        H=load_matrix(src / ("H" + e)).reshape(l, l, d * d),
        mean_y=load_matrix(src / ("mean_y" + e)).reshape(l),
        n=manifest.get("n"))


# ---------------------------------------------------------------------------
# detector matrices and direction recoveries


def save_detector(out_dir, det: DetectorMatrix, fmt: str = "csv") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(out / ("T" + _ext(fmt)), det.T, fmt)
    save_json(out / "gap_report.json",
              {"format": fmt, "k": det.k, "variant": det.variant,
               "sigma_k2": det.gap_report[0],
               "sigma_k2_plus_1": det.gap_report[1]})


def load_detector(in_dir) -> DetectorMatrix:
    src = Path(in_dir)
    doc = load_json(src / "gap_report.json")
    T = load_matrix(src / ("T" + _ext(doc.get("format", "csv"))))
    return DetectorMatrix(T, SymVecConvention(doc["k"]), doc["variant"],
                          (doc["sigma_k2"], doc["sigma_k2_plus_1"]))


def save_z_recovery(out_dir, rec: ZRecovery, fmt: str = "csv") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix(out / ("Z" + _ext(fmt)), rec.Z, fmt)
    save_json(out / "diagnostics.json", _jsonable({
        "format": fmt,
        "eigenvalues": None if rec.eigen_diag is None else rec.eigen_diag,
        "probe_seed": rec.probe_seed,
        "max_imag": rec.max_imag,
        "retries_used": rec.retries_used,
        "residual": rec.residual,
        **rec.diagnostics}))


def load_z_recovery(in_dir) -> ZRecovery:
    src = Path(in_dir)
    doc = load_json(src / "diagnostics.json")
    Z = load_matrix(src / ("Z" + _ext(doc.get("format", "csv"))))
    eig = doc.get("eigenvalues")
    return ZRecovery(Z,
                     eigen_diag=None if eig is None else np.asarray(eig),
                     probe_seed=doc.get("probe_seed", 0),
                     max_imag=doc.get("max_imag", 0.0),
                     retries_used=doc.get("retries_used", 0),
                     residual=doc.get("residual"))


# ---------------------------------------------------------------------------
# recovery results


def save_recovery(out_dir, result: RecoveryResult, fmt: str = "csv") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    e = _ext(fmt)
    save_matrix(out / ("V" + e), result.V, fmt)
    save_matrix(out / ("Z" + e), result.Z, fmt)
    save_matrix(out / ("A_hat" + e), result.A_hat, fmt)
    save_json(out / "diagnostics.json",
              {"format": fmt, **_jsonable(result.diagnostics)})


def load_recovery(in_dir) -> RecoveryResult:
    src = Path(in_dir)
    diag = load_json(src / "diagnostics.json")
    fmt = diag.get("format", "csv")
    e = _ext(fmt)
    return RecoveryResult(V=load_matrix(src / ("V" + e)),
                          Z=load_matrix(src / ("Z" + e)),
                          A_hat=load_matrix(src / ("A_hat" + e)),
                          diagnostics=diag)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
