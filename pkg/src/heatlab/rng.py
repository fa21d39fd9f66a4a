"""Counter-addressable random streams for reproducible parallel sampling.

Each Monte Carlo estimate owns a Philox key derived from (seed, context
tags).  Within that key, the 64-bit output stream is carved into fixed
blocks: one block per recursion level (or draw purpose), path-major inside
each block.  A path's draws therefore live at addresses that depend only on
(seed, path index, level), never on chunking, thread scheduling or worker
count - and extending a path to a finer resolution appends new blocks
without disturbing the old ones.

Normals are produced by inverse-CDF transform of the raw 64-bit words, so
the draw count per address is exact (rejection samplers would break the
addressing).
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.special import ndtri

__all__ = ["derive_key", "raw_uint64", "uniforms", "normals", "BlockLayout"]

_U64_INV = 2.0 ** -64


def derive_key(seed: int, *tags: int) -> np.ndarray:
    """128-bit Philox key from a user seed plus integer context tags."""
    ss = SeedSequence(entropy=(int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, tags)))
    return ss.generate_state(2, np.uint64)


def raw_uint64(key: np.ndarray, start: int, count: int) -> np.ndarray:
    """Words [start, start+count) of the Philox output stream under key.

    Philox advances in counter steps of four 64-bit words; misaligned reads
    fetch the enclosing aligned range and trim.
    """
    base = start & ~3
    bg = Philox(key=key)
    if base:
        bg.advance(base >> 2)
    lead = start - base
    words = Generator(bg).integers(0, 2 ** 64, size=lead + count, dtype=np.uint64)
    return words[lead:]


def uniforms(key: np.ndarray, start: int, count: int) -> np.ndarray:
    """Uniforms on (0, 1), one word each."""
    w = raw_uint64(key, start, count)
    return (w.astype(np.float64) + 0.5) * _U64_INV


def normals(key: np.ndarray, start: int, count: int) -> np.ndarray:
    return ndtri(uniforms(key, start, count))


def _align4(n: int) -> int:
    return (n + 3) & ~3


class BlockLayout:
    """Address map: per-stream blocks of fixed widths, path-major.

    widths[b] is the number of words stream i consumes in block b; the block
    occupies [offset(b), offset(b) + n_streams*widths[b]) in the key's output
    stream (offsets padded to counter alignment).
    """

    def __init__(self, n_streams: int, widths: list[int]):
        self.n_streams = int(n_streams)
        self.widths = list(widths)
        self.offsets = []
        off = 0
        for w in self.widths:
            self.offsets.append(off)
            off += _align4(self.n_streams * w)
        self.total = off

    def extended(self, extra_widths: list[int]) -> "BlockLayout":
        """New layout with blocks appended; existing addresses are unchanged."""
        return BlockLayout(self.n_streams, self.widths + list(extra_widths))

    def fetch_normals(self, key, block: int, first: int, last: int) -> np.ndarray:
        """Normals for streams [first, last) in a block, shape (last-first, width)."""
        w = self.widths[block]
        start = self.offsets[block] + first * w
        out = normals(key, start, (last - first) * w)
        return out.reshape(last - first, w)

    def fetch_uniforms(self, key, block: int, first: int, last: int) -> np.ndarray:
        w = self.widths[block]
        start = self.offsets[block] + first * w
        out = uniforms(key, start, (last - first) * w)
        return out.reshape(last - first, w)
