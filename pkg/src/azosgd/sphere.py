"""Reproducible, splittable streams of random directions and sample indices.

Draws are organised in fixed-size blocks. Block ``j`` of a stream is generated
by its own generator keyed on ``(seed, tag, stream, j)`` through
:class:`numpy.random.SeedSequence`, so the ``n``-th draw is a pure function of
the seed and ``n``. Reading ``B`` directions at once or one at a time gives
the same sequence, and a stream opened at ``counter=n`` continues exactly where
a stream that already produced ``n`` draws would.
"""
from __future__ import annotations

import numpy as np

_DIRECTION_TAG = 0
_INDEX_TAG = 1
_BLOCK_FLOATS = 1 << 17
_INDEX_BLOCK = 1 << 13


def _block_generator(seed: int, tag: int, stream: int, block: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed), spawn_key=(tag, int(stream), int(block)))
    return np.random.Generator(np.random.SFC64(seq))


class _BlockStream:
    block_rows: int

    def __init__(self, seed: int, counter: int = 0, stream: int = 0):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        if counter < 0:
            raise ValueError("counter must be non-negative")
        self.seed = int(seed)
        self.stream = int(stream)
        self.counter = int(counter)
        self._cached_index = -1
        self._cached = None

    def _make_block(self, block: int) -> np.ndarray:
        raise NotImplementedError

    def _block(self, block: int) -> np.ndarray:
        if block != self._cached_index:
            self._cached = self._make_block(block)
            self._cached.setflags(write=False)
            self._cached_index = block
        return self._cached

    def _take(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("cannot draw a negative number of items")
        start = self.counter
        pieces = []
        pos = start
        while pos < start + n:
            block, offset = divmod(pos, self.block_rows)
            rows = self._block(block)
            stop = min(self.block_rows, offset + start + n - pos)
            pieces.append(rows[offset:stop])
            pos += stop - offset
        self.counter = start + n
        if len(pieces) == 1:
            # cached blocks are read-only, so a view is safe to hand out
            return pieces[0]
        if not pieces:
            return self._block(0)[:0]
        return np.concatenate(pieces)


class DirectionStream(_BlockStream):
    """Unit vectors uniformly distributed on the sphere in ``R^dim``.

    Each direction is a standard normal vector divided by its norm.
    """

    def __init__(self, seed: int, dim: int, counter: int = 0, stream: int = 0):
        if dim < 1:
            raise ValueError("dim must be at least 1")
        self.dim = int(dim)
        self.block_rows = max(1, _BLOCK_FLOATS // self.dim)
        super().__init__(seed, counter, stream)

    def _make_block(self, block):
        rng = _block_generator(self.seed, _DIRECTION_TAG, self.stream, block)
        z = rng.standard_normal((self.block_rows, self.dim))
        norms = np.sqrt(np.einsum("ij,ij->i", z, z))
        # a zero draw has probability ~0; redraw from the same block generator
        while np.any(norms == 0.0):
            bad = norms == 0.0
            z[bad] = rng.standard_normal((int(bad.sum()), self.dim))
            norms[bad] = np.sqrt(np.einsum("ij,ij->i", z[bad], z[bad]))
        z /= norms[:, None]
        return z

    def next_direction(self) -> np.ndarray:
        return self._take(1)[0]

    def next_block(self, n: int) -> np.ndarray:
        """The next ``n`` directions as an ``(n, dim)`` array."""
        return self._take(n)


class IndexStream(_BlockStream):
    """Uniform i.i.d. sample indices in ``[0, count)``."""

    def __init__(self, seed: int, count: int, counter: int = 0, stream: int = 0):
        if count < 1:
            raise ValueError("count must be at least 1")
        self.count = int(count)
        self.block_rows = _INDEX_BLOCK
        super().__init__(seed, counter, stream)

    def _make_block(self, block):
        rng = _block_generator(self.seed, _INDEX_TAG, self.stream, block)
        return rng.integers(0, self.count, size=self.block_rows, dtype=np.int64)

    def next_index(self) -> int:
        return int(self._take(1)[0])

    def next_block(self, n: int) -> np.ndarray:
        return self._take(n)
