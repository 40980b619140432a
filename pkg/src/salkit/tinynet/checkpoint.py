"""Flat binary checkpoints for the toy net.

Layout: the magic bytes ``TNET1``, then one record per tensor:
u32 name length, the utf-8 name, u32 rank, u32 per-dim sizes, then the
row-major float64 payload. All integers and floats are little-endian.
Tensor names are prefixed ``s.``, ``h.``, ``f.`` by parameter collection.
"""

from __future__ import annotations

import struct

import numpy as np

from .net import TinyNetParams

MAGIC = b"TNET1"

_PREFIXES = (("s.", "theta_s"), ("h.", "theta_h"), ("f.", "theta_f"))


def save_params(params, path):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        for prefix, attr in _PREFIXES:
            for name, tensor in getattr(params, attr).items():
                encoded = (prefix + name).encode("utf-8")
                fh.write(struct.pack("<I", len(encoded)))
                fh.write(encoded)
                fh.write(struct.pack("<I", tensor.ndim))
                fh.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
                fh.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())


def load_params(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a TNET1 checkpoint")
    pos = len(MAGIC)
    params = TinyNetParams()
    collections = dict(_PREFIXES)
    while pos < len(data):
        (name_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (rank,) = struct.unpack_from("<I", data, pos)
        pos += 4
        dims = struct.unpack_from(f"<{rank}I", data, pos)
        pos += 4 * rank
        count = int(np.prod(dims)) if rank else 1
        tensor = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(dims).copy()
        pos += 8 * count
        prefix, rest = name[:2], name[2:]
        if prefix not in collections:
            raise ValueError(f"{path}: unknown tensor collection for {name!r}")
        getattr(params, collections[prefix])[rest] = tensor
    return params
