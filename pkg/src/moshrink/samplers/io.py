"""Persistence of retained draws: flat binary and CSV traces.

Binary layout::

    8 bytes   magic b"MOSHRNK1"
    4 bytes   header length H (little-endian uint32)
    H bytes   UTF-8 JSON header: family, seed, n_draws, blocks [{name, shape}]
    ...       each block in header order, float64 little-endian, row-major,
              shape (n_draws, *shape)
"""
import csv
import itertools
import json
import struct

import numpy as np

from .. import __version__
from .._format import fmt

MAGIC = b"MOSHRNK1"


def write_samples(path, samples):
    blocks = [{"name": k, "shape": list(v.shape[1:])} for k, v in samples.draws.items()]
    header = {
        "tool": "moshrink",
        "version": __version__,
        "family": samples.family,
        "seed": samples.seed,
        "iterations": samples.iterations,
        "burn_in": samples.burn_in,
        "thin": samples.thin,
        "n_draws": samples.n_retained,
        "blocks": blocks,
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        for k in samples.draws:
            fh.write(np.ascontiguousarray(samples.draws[k], dtype="<f8").tobytes())


def read_samples(path):
    """Return ``(header, draws)`` from a binary sample file."""
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path}: not a moshrink sample file")
        (h,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(h).decode("utf-8"))
        n = header["n_draws"]
        draws = {}
        for b in header["blocks"]:
            shape = (n, *b["shape"])
            count = int(np.prod(shape))
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError(f"{path}: truncated block {b['name']}")
            draws[b["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return header, draws


def _labels(name, shape):
    if not shape:
        return [name]
    return [f"{name}[{','.join(str(i + 1) for i in idx)}]" for idx in itertools.product(*map(range, shape))]


def write_trace_csv(path, samples):
    """One row per retained draw, one column per scalar entry."""
    names, cols = [], []
    for k, v in samples.draws.items():
        names += _labels(k, v.shape[1:])
        cols.append(v.reshape(v.shape[0], -1))
    table = np.hstack(cols) if cols else np.empty((0, 0))
    with open(path, "w", newline="") as fh:
        fh.write(f"# moshrink {__version__} family={samples.family} seed={samples.seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in table:
            w.writerow([fmt(x) for x in row])
