"""Flat-file formats: mesh CSV, binary operator container, spectrum and
decay reports, stencil JSON.

Floats in text files carry 17 significant digits so that a write/read
round trip is exact.
"""

import csv
import hashlib
import json
import os
import struct
import tempfile

import numpy as np

from .errors import ValidationError
from .hermite import basis_enumerate
from .surface import QuadratureRule

FLOAT_FMT = "{:.17g}"
OPERATOR_MAGIC = b"WLOP"
OPERATOR_VERSION = 1
_HEADER = struct.Struct("<4sIII32sd")  # magic, version, n, K, provenance, calibration


def _f(v):
    return FLOAT_FMT.format(float(v))


def atomic_write(path, data):
    """Write bytes to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def dumps_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    atomic_write(path, dumps_json(obj).encode())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# ---------------------------------------------------------------- mesh


def write_mesh_csv(rule, path):
    """One row per node: coordinates, weight, normal, then annotations."""
    d = rule.dim
    ann = sorted(rule.annotations)
    header = [f"w{i}" for i in range(d)] + ["weight"] + [f"n{i}" for i in range(d)] + ann
    rows = [",".join(header)]
    cols = [rule.nodes, rule.weights[:, None], rule.normals] + [np.asarray(rule.annotations[a])[:, None] for a in ann]
    table = np.hstack(cols) if len(rule) else np.zeros((0, len(header)))
    rows.extend(",".join(_f(v) for v in row) for row in table)
    atomic_write(path, ("\n".join(rows) + "\n").encode())


def read_mesh_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader]).reshape(-1, len(header))
    d = sum(1 for h in header if h.startswith("w") and h[1:].isdigit())
    ann = {h: data[:, 2 * d + 1 + i] for i, h in enumerate(header[2 * d + 1:])}
    return QuadratureRule(data[:, :d], data[:, d], data[:, d + 1:2 * d + 1], ann)


# ---------------------------------------------------------------- operators


def operator_bytes(op):
    """Header (n, K, provenance, calibration) then row-major little-endian complex128."""
    prov = op.provenance.encode("ascii")
    if len(prov) > 32:
        raise ValidationError("provenance name too long for the container")
    cal = np.nan if op.basis.calibration is None else float(op.basis.calibration)
    head = _HEADER.pack(OPERATOR_MAGIC, OPERATOR_VERSION, op.basis.n, op.basis.K, prov.ljust(32, b"\0"), cal)
    return head + np.ascontiguousarray(op.entries, dtype="<c16").tobytes(order="C")


def operator_from_bytes(data):
    from .weyl import OperatorMatrix

    if len(data) < _HEADER.size:
        raise ValidationError("operator container is truncated")
    magic, version, n, K, prov, cal = _HEADER.unpack_from(data)
    if magic != OPERATOR_MAGIC or version != OPERATOR_VERSION:
        raise ValidationError("not an operator container")
    basis = basis_enumerate(n, K)
    if not np.isnan(cal):
        basis = basis.with_calibration(cal)
    body = data[_HEADER.size:]
    if len(body) != 16 * basis.size * basis.size:
        raise ValidationError("operator container body has the wrong length")
    entries = np.frombuffer(body, dtype="<c16").reshape(basis.size, basis.size).astype(np.complex128)
    return OperatorMatrix(basis, entries, prov.rstrip(b"\0").decode("ascii"))


def save_operator(op, path):
    atomic_write(path, operator_bytes(op))


def load_operator(path):
    with open(path, "rb") as fh:
        return operator_from_bytes(fh.read())


# ---------------------------------------------------------------- reports


def write_spectrum_csv(report, path):
    """Columns k, multiplicity, stratum_mean, envelope_peak (1 at fitted peaks)."""
    means = np.asarray(report.stratum_means)
    k = np.arange(len(means))
    if report.eigenvalues is not None:
        from .hermite import multiplicity

        mult = multiplicity(k, report.n)
    else:
        mult = np.ones(len(means))
    peaks = set()
    if report.envelope_fit is not None:
        peaks = set(np.rint(report.envelope_fit.radii).astype(int).tolist())
    lines = ["k,multiplicity,stratum_mean,envelope_peak"]
    lines.extend(f"{i},{_f(m)},{_f(v)},{int(i in peaks)}" for i, m, v in zip(k, mult, means))
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def write_decay_csv(radii, sups, n_directions, path):
    lines = ["radius,sup_value,n_directions"]
    lines.extend(f"{_f(r)},{_f(s)},{int(n_directions)}" for r, s in zip(radii, sups))
    atomic_write(path, ("\n".join(lines) + "\n").encode())


def read_csv_columns(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in (rows[0] if rows else {})}


def basis_metadata(basis):
    return {"n": basis.n, "K": basis.K, "size": basis.size, "calibration": basis.calibration,
            "interior_kmax": basis.K // 2}


# ---------------------------------------------------------------- stencils


def stencil_to_json(stencil):
    n = stencil.n
    return [{"x": p[:n].tolist(), "y": p[n:].tolist(), "c": [float(c.real), float(c.imag)]}
            for p, c in zip(stencil.points, stencil.coeffs)]


def stencil_from_json(items):
    from .heisenberg import TranslateStencil

    if not items:
        raise ValidationError("empty stencil")
    pts = [list(it["x"]) + list(it["y"]) for it in items]
    coeffs = [complex(it["c"][0], it["c"][1]) for it in items]
    return TranslateStencil(np.array(pts, dtype=np.float64), np.array(coeffs))


def save_stencil(stencil, path):
    atomic_write(path, (json.dumps(stencil_to_json(stencil), indent=2) + "\n").encode())


def load_stencil(path):
    with open(path) as fh:
        return stencil_from_json(json.load(fh))
