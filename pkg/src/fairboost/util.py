"""Small shared helpers: stable sigmoid, seeded substreams, atomic writes."""

from __future__ import annotations

import os
import tempfile

import numpy as np


def sigmoid(z):
    """Numerically stable logistic function, elementwise.

    Accepts scalars or arrays; returns a float for scalar input.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def substream_seed(seed: int, *ids: int) -> int:
    """Derive a child seed from a master seed and a path of stream ids.

    Same (seed, ids) always maps to the same child seed, and distinct
    paths give independent streams. Used so that one --seed drives every
    random choice (splits, inits, shuffles) reproducibly.
    """
    return int(np.random.SeedSequence((seed,) + ids).generate_state(1)[0])


def write_atomic(path: str | os.PathLike, data: str | bytes) -> None:
    """Write a file via a temp file in the same directory plus rename.

    Readers never observe a half-written file; an existing file is
    replaced only once the new content is fully on disk.
    """
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
