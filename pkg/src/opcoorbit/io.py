"""Operator files ("HSO1") and CSV/JSON report writers.

HSO1 layout, all little-endian: 4-byte magic ``HSO1``, u32 N, u8 flags
(bit 0 self-adjoint, bit 1 positive semidefinite), then N*N complex entries in
row-major order, each stored as two float64 (re, im).
"""

from __future__ import annotations

import csv
import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import MalformedOperatorFile
from .hs_ops import CoefficientField, as_operator, is_psd, is_self_adjoint

MAGIC = b"HSO1"
FLAG_SELF_ADJOINT = 1
FLAG_PSD = 2
_HEADER = struct.Struct("<4sIB")


def operator_flags(F) -> int:
    flags = 0
    if is_self_adjoint(F):
        flags |= FLAG_SELF_ADJOINT
        if is_psd(F):
            flags |= FLAG_PSD
    return flags


def encode_operator(F, flags: int | None = None) -> bytes:
    F = as_operator(F)
    if flags is None:
        flags = operator_flags(F)
    if not 0 <= flags < 256:
        raise ValueError("flags must fit in one byte")
    payload = np.ascontiguousarray(F, dtype="<c16").tobytes()
    return _HEADER.pack(MAGIC, F.shape[0], flags) + payload


def decode_operator(data: bytes) -> tuple[np.ndarray, int]:
    """Parse HSO1 bytes into (matrix, flags)."""
    if len(data) < 4:
        raise MalformedOperatorFile("file shorter than the magic", len(data))
    if data[:4] != MAGIC:
        raise MalformedOperatorFile(f"bad magic {data[:4]!r}", 0)
    if len(data) < _HEADER.size:
        raise MalformedOperatorFile("truncated header", len(data))
    _, n, flags = _HEADER.unpack_from(data)
    if n == 0:
        raise MalformedOperatorFile("dimension must be positive", 4)
    if flags & ~(FLAG_SELF_ADJOINT | FLAG_PSD):
        raise MalformedOperatorFile(f"unknown flag bits {flags:#04x}", 8)
    need = _HEADER.size + 16 * n * n
    if len(data) < need:
        # offset of the first entry that is incomplete
        complete = (len(data) - _HEADER.size) // 16
        raise MalformedOperatorFile(f"payload truncated: {complete} of {n * n} entries", _HEADER.size + 16 * complete)
    if len(data) > need:
        raise MalformedOperatorFile("trailing bytes after payload", need)
    F = np.frombuffer(data, dtype="<c16", count=n * n, offset=_HEADER.size).reshape(n, n)
    return F.astype(np.complex128), flags


def write_operator(path, F, flags: int | None = None) -> Path:
    path = Path(path)
    path.write_bytes(encode_operator(F, flags))
    return path


def read_operator(path) -> tuple[np.ndarray, int]:
    return decode_operator(Path(path).read_bytes())


def io_roundtrip(F, path) -> np.ndarray:
    write_operator(path, F)
    return read_operator(path)[0]


def _fmt(v) -> str:
    if v is None:
        return ""
    # repr round-trips doubles exactly and is platform independent
    return repr(float(v))


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, (int, np.integer)) else _fmt(c) for c in row])
    return path


def write_coefficient_csv(path, coeffs: CoefficientField) -> Path:
    lat = coeffs.lattice
    norms = coeffs.hs_norms()
    return write_csv(path, ["x", "omega", "hs_norm"],
                     ((int(x), int(w), v) for x, w, v in zip(lat.xs, lat.ws, norms)))


def write_spreading_csv(path, eta) -> Path:
    eta = np.asarray(eta, dtype=np.complex128)
    n = eta.shape[0]
    return write_csv(path, ["x", "omega", "re", "im"],
                     ((x, w, eta[x, w].real, eta[x, w].imag) for x in range(n) for w in range(n)))


def write_report_csv(path, report) -> Path:
    """Columns K, app_err, wne, sigma_tail (wne left empty when not computed)."""
    wne = report.wne if report.wne is not None else [None] * len(report.ks)
    return write_csv(path, ["K", "app_err", "wne", "sigma_tail"],
                     zip(report.ks, report.app_err, wne, report.sigma_tail))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, os.PathLike):
        return str(obj)
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
