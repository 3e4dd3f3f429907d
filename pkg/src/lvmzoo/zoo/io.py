"""CSV and JSON files for sample batches and reports.

Numbers are written with ``%.17g`` so every float64 round-trips exactly.
Files are written to a temporary sibling and renamed into place.
"""
import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ..errors import DataError
from .dataset import Dataset

OBSERVATIONS_FILE = "observations.csv"
LATENTS_FILE = "latents.csv"
SIDECAR_FILE = "sample.json"


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temp file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    atomic_write(path, json_text(obj))


def csv_text(array, header):
    array = np.atleast_2d(np.asarray(array, dtype=float))
    if array.shape[1] != len(header):
        raise ValueError(f"header has {len(header)} names for {array.shape[1]} columns")
    lines = [",".join(header)]
    lines.extend(",".join("%.17g" % v for v in row) for row in array)
    return "\n".join(lines) + "\n"


def write_csv(path, array, header):
    atomic_write(path, csv_text(array, header))


def observation_header(spec, p):
    if getattr(spec, "model", None) == "tobit" and p == 1:
        return ["y"]
    return [f"y{j}" for j in range(1, p + 1)]


def write_sample(batch, out_dir, spec=None):
    """Write ``observations.csv``, ``latents.csv`` and the ``sample.json`` sidecar.

    Returns the three paths.
    """
    out_dir = Path(out_dir)
    obs_path, lat_path, side_path = out_dir / OBSERVATIONS_FILE, out_dir / LATENTS_FILE, out_dir / SIDECAR_FILE
    write_csv(obs_path, batch.observations, observation_header(spec, batch.observations.shape[1]))
    write_csv(lat_path, batch.latents, [f"z{j}" for j in range(1, batch.latents.shape[1] + 1)])
    write_json(side_path, {
        "model": batch.model,
        "seed": batch.seed,
        "fingerprint": batch.fingerprint,
        "n": batch.n,
        "obs_dim": int(batch.observations.shape[1]),
        "latent_dim": int(batch.latents.shape[1]),
        "observations_file": OBSERVATIONS_FILE,
        "latents_file": LATENTS_FILE,
        "meta": batch.meta,
    })
    return obs_path, lat_path, side_path


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv(path, column_groups=None):
    """Parse a numeric CSV (optional header row) into a :class:`Dataset`.

    Raises
    ------
    DataError
        Empty file, ragged rows or non-numeric cells, with 1-based row and
        column of the first offending cell (the header counts as row 1).
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise DataError(f"not a text file ({exc.reason})") from None
    rows = [(i, r) for i, r in enumerate(rows, start=1) if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path} is empty")
    if not all(_is_number(c) for c in rows[0][1]):
        header_row, rows = rows[0], rows[1:]
        width = len(header_row[1])
    else:
        width = len(rows[0][1])
    if not rows:
        raise DataError(f"{path} has a header but no data rows")
    values = np.empty((len(rows), width))
    for k, (i, row) in enumerate(rows):
        if len(row) != width:
            raise DataError(f"expected {width} cells, found {len(row)}", row=i)
        for j, cell in enumerate(row):
            try:
                values[k, j] = float(cell)
            except ValueError:
                raise DataError(f"non-numeric cell {cell!r}", row=i, column=j + 1) from None
            if not np.isfinite(values[k, j]):
                raise DataError(f"non-finite cell {cell!r}", row=i, column=j + 1)
    return Dataset(values, column_groups=column_groups)
