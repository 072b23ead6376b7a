"""Versioned CSV writers.

Every file starts with ``# schema=<name> version=1`` followed by a column
header. Floats are written with 17 significant digits so values survive a
round trip, and files appear atomically via a temp-file rename.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "atomic_write",
    "write_table",
    "read_table",
    "write_psd",
    "write_targets",
    "write_beampattern",
    "write_detection_map",
    "write_detection_cube",
    "write_pd_curve",
    "write_pd_summary",
    "write_reward_curve",
    "write_q_dump",
]


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def atomic_write(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_table(path, schema: str, columns, rows) -> Path:
    buf = io.StringIO()
    buf.write(f"# schema={schema} version={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return atomic_write(path, buf.getvalue())


def read_table(path):
    """Returns ``(schema, version, columns, rows)`` with rows as lists of strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        head = fh.readline().strip()
        meta = dict(tok.split("=", 1) for tok in head.lstrip("# ").split())
        reader = csv.reader(fh)
        columns = next(reader)
        rows = list(reader)
    return meta["schema"], int(meta["version"]), columns, rows


def _db(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def write_psd(path, nu_x, nu_y, values) -> Path:
    """PSD grid as (nu_x, nu_y, psd_db); ``values`` is (len(nu_x), len(nu_y))."""
    db = _db(values)
    rows = ((nx, ny, db[a, b]) for a, nx in enumerate(nu_x) for b, ny in enumerate(nu_y))
    return write_table(path, "psd", ["nu_x", "nu_y", "psd_db"], rows)


def write_targets(path, targets) -> Path:
    rows = ((j, t.freq.nu_x, t.freq.nu_y, t.snr_db) for j, t in enumerate(targets))
    return write_table(path, "targets", ["target", "nu_x", "nu_y", "snr_db"], rows)


def write_beampattern(path, freqs, power) -> Path:
    db = _db(power)
    rows = ((f[0], f[1], p) for f, p in zip(freqs, db))
    return write_table(path, "beampattern", ["nu_x", "nu_y", "power_db"], rows)


def write_detection_map(path, maps) -> Path:
    """Per-step detection maps: (step, l, i, nu_x, nu_y, lambda, detected, pd_hat)."""
    def rows():
        for step, dmap in enumerate(maps, start=1):
            for rec in dmap.records():
                yield (step, rec["l"], rec["i"], rec["nu_x"], rec["nu_y"], rec["lambda"],
                       rec["detected"], rec["pd_hat"])

    cols = ["step", "l", "i", "nu_x", "nu_y", "lambda", "detected", "pd_hat"]
    return write_table(path, "detection_map", cols, rows())


def write_detection_cube(path, grid, freq) -> Path:
    """Detection frequency per (step, l, i); ``freq`` is (K, L*I)."""
    def rows():
        for k in range(freq.shape[0]):
            for b in range(grid.size):
                l, i = grid.unflatten(b)
                yield (k + 1, l, i, freq[k, b])

    return write_table(path, "detection_cube", ["step", "l", "i", "freq"], rows())


def write_pd_curve(path, x, pd_rl, pd_omni) -> Path:
    return write_table(path, "pd_curve", ["x", "pd_rl", "pd_omni"], zip(x, pd_rl, pd_omni))


def write_pd_summary(path, targets, pd_rl, pd_omni) -> Path:
    rows = ((j, t.freq.nu_x, t.freq.nu_y, t.snr_db, pd_rl[j], pd_omni[j]) for j, t in enumerate(targets))
    return write_table(path, "pd_summary", ["target", "nu_x", "nu_y", "snr_db", "pd_rl", "pd_omni"], rows)


def write_reward_curve(path, reward_rl, reward_omni) -> Path:
    rows = ((k + 1, a, b) for k, (a, b) in enumerate(zip(reward_rl, reward_omni)))
    return write_table(path, "reward_curve", ["step", "reward_rl", "reward_omni"], rows)


def write_q_dump(path, q_history, interval: int) -> Path:
    """Q tables at every ``interval``-th step (and the last): (step, s, a, q)."""
    K = q_history.shape[0]
    steps = sorted(set(range(interval, K + 1, interval)) | {K})

    def rows():
        for step in steps:
            q = q_history[step - 1]
            for s in range(q.shape[0]):
                for a in range(q.shape[1]):
                    yield (step, s, a, q[s, a])

    return write_table(path, "q_table", ["step", "s", "a", "q"], rows())
