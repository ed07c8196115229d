"""Density-matrix and report files."""

import json
from pathlib import Path

import numpy as np

from .errors import FormatError
from .states import DensityMatrix


def matrix_to_json(rho):
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return {
        "dim": int(m.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def write_matrix(rho, path):
    Path(path).write_text(json.dumps(matrix_to_json(rho)) + "\n")


def read_matrix(path, physical=None):
    """Read a JSON density matrix; ``physical=None`` infers the flag."""
    try:
        data = json.loads(Path(path).read_text())
        d = int(data["dim"])
        entries = np.array(data["entries"], dtype=float)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: not a density-matrix file: {exc}") from exc
    if entries.shape != (d, d, 2):
        raise FormatError(f"{path}: entries have shape {entries.shape}, expected ({d}, {d}, 2)")
    rho = DensityMatrix(entries[..., 0] + 1j * entries[..., 1])
    if physical is None:
        physical = rho.check_physical()
    return DensityMatrix(rho.entries, physical=physical)


def write_matrix_csv(rho, path):
    """One matrix row per line, columns re0, im0, re1, im1, ..."""
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    out = np.empty((m.shape[0], 2 * m.shape[1]))
    out[:, 0::2] = m.real
    out[:, 1::2] = m.imag
    np.savetxt(path, out, delimiter=",", fmt="%.17g")


def read_matrix_csv(path):
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if data.shape[1] != 2 * data.shape[0]:
        raise FormatError(f"{path}: expected 2d columns for d rows, got shape {data.shape}")
    return DensityMatrix(data[:, 0::2] + 1j * data[:, 1::2])


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
