"""File output for runs: binary snapshot series, CSVs, and reports.

All writers go through a temp-then-rename path so a crashed run never
leaves a partial artifact behind.

Snapshot series format ("KVNF"): little-endian header of magic bytes
b"KVNF", version u32, cell count u64, dimension u32, snapshot count u32;
then per snapshot one f64 time followed by the cell values as interleaved
(re, im) f64 pairs.
"""
from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

KVNF_MAGIC = b"KVNF"
KVNF_VERSION = 1
_HEADER = struct.Struct("<4sIQII")


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def write_snapshots(path, times, fields, dim: int) -> None:
    """Write a snapshot series; fields is a list of (N,) complex arrays."""
    times = np.asarray(times, dtype=float)
    n = fields[0].shape[0]
    chunks = [_HEADER.pack(KVNF_MAGIC, KVNF_VERSION, n, dim, len(fields))]
    for t, vals in zip(times, fields):
        if vals.shape != (n,):
            raise ValueError("all snapshots must share one grid size")
        chunks.append(struct.pack("<d", float(t)))
        chunks.append(np.ascontiguousarray(vals, dtype="<c16").tobytes())
    atomic_write_bytes(path, b"".join(chunks))


def read_snapshots(path):
    """Inverse of write_snapshots: returns (times, list of value arrays, dim)."""
    data = Path(path).read_bytes()
    magic, version, n, dim, count = _HEADER.unpack_from(data, 0)
    if magic != KVNF_MAGIC:
        raise ValueError(f"not a snapshot file: bad magic {magic!r}")
    if version != KVNF_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    offset = _HEADER.size
    times, fields = [], []
    for _ in range(count):
        (t,) = struct.unpack_from("<d", data, offset)
        offset += 8
        vals = np.frombuffer(data, dtype="<c16", count=n, offset=offset).copy()
        offset += 16 * n
        times.append(t)
        fields.append(vals)
    return np.asarray(times), fields, dim


def write_norm_history_csv(path, history: np.ndarray) -> None:
    lines = ["step,t,norm,norm_drift"]
    for step, t, norm, drift in history:
        lines.append(f"{int(step)},{t:.17g},{norm:.17g},{drift:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_classification_csv(path, grid, classification) -> None:
    d = grid.dim
    header = "face_index," + ",".join(f"centroid_{k}" for k in range(d)) + ",f_dot_nu,class"
    labels = np.full(classification.n_faces, "zero", dtype=object)
    labels[classification.gamma_minus] = "minus"
    labels[classification.gamma_plus] = "plus"
    lines = [header]
    for k in range(classification.n_faces):
        coords = ",".join(f"{c:.17g}" for c in grid.face_centroid[k])
        lines.append(f"{k},{coords},{classification.f_dot_nu[k]:.17g},{labels[k]}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_trajectory_csv(path, trajectory) -> None:
    d = trajectory.states.shape[1]
    header = "t," + ",".join(f"x_{k + 1}" for k in range(d)) + ",div_integral"
    lines = [header]
    for i, t in enumerate(trajectory.times):
        coords = ",".join(f"{c:.17g}" for c in trajectory.states[i])
        lines.append(f"{t:.17g},{coords},{trajectory.divergence_integral[i]:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_report(path, report) -> None:
    atomic_write_text(path, report.to_text())


def write_convergence_errors_csv(path, rows) -> None:
    """rows: (resolution, h, dt, oracle_l2_error, born_l1_error) tuples."""
    lines = ["resolution,h,dt,oracle_l2_error,born_l1_error"]
    for res, h, dt, l2, l1 in rows:
        lines.append(f"{res},{h:.17g},{dt:.17g},{l2:.17g},{l1:.17g}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_order_table_csv(path, orders) -> None:
    """orders: (quantity, measured order or 'exact') pairs."""
    lines = ["quantity,order"]
    for name, order in orders:
        val = order if isinstance(order, str) else f"{order:.17g}"
        lines.append(f"{name},{val}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def export_operator_text(path, op) -> None:
    """Coordinate-format dump: one 'row col value' line per stored entry."""
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [
        f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}"
        for k in order
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")
