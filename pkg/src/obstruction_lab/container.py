"""Streamable binary container for per-grid-point matrix data.

Layout::

    b"OBLAB1\\n"
    <one line of UTF-8 JSON header>\\n
    record*                      # one per grid point, C order

A record is ``uint32 K``, ``K`` ``uint32`` patch indices (the block support
inside the full matrix), then ``C * s * s`` little-endian complex128 values,
where ``C`` is ``header["components"]`` and ``s = K * header["block"]``.
Data outside the listed patches is zero.
"""

from __future__ import annotations

import json
from typing import BinaryIO, Iterator

import numpy as np

MAGIC = b"OBLAB1\n"


class ContainerWriter:
    def __init__(self, fh: BinaryIO, header: dict):
        self.fh = fh
        self.header = dict(header)
        self.header.setdefault("components", 1)
        fh.write(MAGIC)
        fh.write(json.dumps(self.header, sort_keys=True).encode() + b"\n")
        self.count = 0

    def write(self, patches, blocks: np.ndarray) -> None:
        patches = np.asarray(patches, dtype="<u4")
        blocks = np.asarray(blocks, dtype="<c16")
        c = self.header["components"]
        s = len(patches) * self.header["block"]
        if blocks.size != c * s * s:
            raise ValueError(f"record has {blocks.size} values, expected {c * s * s}")
        self.fh.write(np.uint32(len(patches)).astype("<u4").tobytes())
        self.fh.write(patches.tobytes())
        self.fh.write(np.ascontiguousarray(blocks).tobytes())
        self.count += 1


def read_header(fh: BinaryIO) -> dict:
    if fh.read(len(MAGIC)) != MAGIC:
        raise ValueError("not an obstruction-lab container")
    return json.loads(fh.readline().decode())


def iter_records(fh: BinaryIO) -> Iterator[tuple[dict, np.ndarray, np.ndarray]]:
    """Yield ``(header, patches, blocks)`` with blocks shaped ``(C, s, s)``."""
    header = read_header(fh)
    c, m = header["components"], header["block"]
    while True:
        raw = fh.read(4)
        if not raw:
            return
        k = int(np.frombuffer(raw, dtype="<u4")[0])
        patches = np.frombuffer(fh.read(4 * k), dtype="<u4").astype(int)
        s = k * m
        data = np.frombuffer(fh.read(16 * c * s * s), dtype="<c16")
        yield header, patches, data.reshape(c, s, s)


def embed_block(patches, block: np.ndarray, n_patches: int, m: int) -> np.ndarray:
    """Scatter a compressed ``(K m) x (K m)`` block into the full matrix."""
    idx = (np.asarray(patches)[:, None] * m + np.arange(m)[None, :]).ravel()
    full = np.zeros(block.shape[:-2] + (n_patches * m, n_patches * m), dtype=block.dtype)
    full[..., idx[:, None], idx[None, :]] = block
    return full
