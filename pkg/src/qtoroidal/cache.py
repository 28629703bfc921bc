"""On-disk operator cache in a sparse-triplet text format.

A file holds one JSON header line (format version, key hash, basis shape,
degree, lattice shifts, leaking columns) followed by one line per nonzero
entry, ``row col real imag``, in canonical (row-major) order.  A header whose
hash does not match the requested key counts as a miss, so a stale or
corrupted file is rebuilt rather than trusted.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .fock import FockBasis, GradedSparseOperator

FORMAT_VERSION = 1


def key_hash(key: dict) -> str:
    blob = json.dumps(key, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def save_operator(path: Path, op: GradedSparseOperator, key: dict) -> None:
    coo = op.mat.tocoo()
    order = np.lexsort((coo.col, coo.row))
    b = op.basis
    header = {
        "format": FORMAT_VERSION, "hash": key_hash(key), "key": key,
        "basis": [b.m, b.n, b.D_max, b.L_max, b.size], "degree": op.degree,
        "shifts": sorted(map(list, op.shifts)) if op.shifts is not None else None,
        "leak": np.flatnonzero(op.leak).tolist(), "tag": op.tag,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with tmp.open("w") as fh:
        fh.write(json.dumps(header, sort_keys=True, default=str) + "\n")
        for k in order:
            v = complex(coo.data[k])
            fh.write(f"{coo.row[k]} {coo.col[k]} {v.real!r} {v.imag!r}\n")
    tmp.replace(path)


def load_operator(path: Path, basis: FockBasis, key: dict) -> GradedSparseOperator | None:
    """The cached operator, or ``None`` on a miss, a hash mismatch or a damaged file."""
    if not path.exists():
        return None
    try:
        with path.open() as fh:
            header = json.loads(fh.readline())
            if header.get("format") != FORMAT_VERSION or header.get("hash") != key_hash(key):
                return None
            if header["basis"] != [basis.m, basis.n, basis.D_max, basis.L_max, basis.size]:
                return None
            data = np.loadtxt(fh, ndmin=2) if path.stat().st_size else np.zeros((0, 4))
    except (ValueError, KeyError, json.JSONDecodeError):
        return None
    if data.size == 0:
        data = np.zeros((0, 4))
    mat = sp.csr_matrix((data[:, 2] + 1j * data[:, 3],
                         (data[:, 0].astype(int), data[:, 1].astype(int))),
                        shape=(basis.size, basis.size))
    leak = np.zeros(basis.size, dtype=bool)
    leak[header["leak"]] = True
    shifts = None if header["shifts"] is None else frozenset(map(tuple, header["shifts"]))
    return GradedSparseOperator(basis, mat, header["degree"], shifts, leak, header["tag"])


class OperatorCache:
    """Directory of triplet files addressed by the hash of a key dictionary."""

    def __init__(self, root: str | Path | None):
        self.root = Path(root) if root is not None else None
        self.hits = self.misses = 0

    def get_or_build(self, basis: FockBasis, key: dict,
                     build: Callable[[], GradedSparseOperator]) -> GradedSparseOperator:
        if self.root is None:
            return build()
        path = self.root / f"{key_hash(key)}.trip"
        op = load_operator(path, basis, key)
        if op is not None:
            self.hits += 1
            return op
        self.misses += 1
        op = build()
        save_operator(path, op, key)
        return op
