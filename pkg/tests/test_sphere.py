import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from azosgd.sphere import DirectionStream, IndexStream


def test_dim_one_is_a_sign():
    s = DirectionStream(4, 1)
    draws = s.next_block(200)
    assert set(np.unique(draws)) == {-1.0, 1.0}


def test_unit_norm_dim64():
    e = DirectionStream(11, 64).next_block(5000)
    assert np.max(np.abs(np.linalg.norm(e, axis=1) - 1.0)) <= 1e-12


def test_isotropy_moments():
    n, d = 200_000, 16
    e = DirectionStream(2024, d).next_block(n)
    tol = 4 * (1 / np.sqrt(d * n)) * np.sqrt(d)
    assert np.all(np.abs(e.mean(axis=0)) <= tol)
    second = e.T @ e / n
    assert np.max(np.abs(second - np.eye(d) / d)) <= 0.01


def test_reflection_symmetry():
    e = DirectionStream(5, 8).next_block(100_000)
    first, reflected = e[:, 0], -e[:, 0]
    se = first.std() / np.sqrt(len(first))
    assert abs(first.mean() - reflected.mean()) <= 4 * 2 * se


def test_determinism_first_10000():
    a = DirectionStream(77, 12).next_block(10_000)
    b = DirectionStream(77, 12).next_block(10_000)
    assert np.array_equal(a, b)
    c = DirectionStream(78, 12).next_block(10)
    assert not np.array_equal(a[:10], c)


def test_batching_pattern_does_not_matter():
    d = 300  # block is 436 rows, so the pieces below straddle block boundaries
    whole = DirectionStream(1, d).next_block(1500)
    s = DirectionStream(1, d)
    parts = [s.next_direction()[None, :]]
    for size in (10, 433, 1, 600, 455):
        parts.append(s.next_block(size))
    assert np.array_equal(np.concatenate(parts), whole)
    assert s.counter == 1500


def test_counter_offset_splits_stream():
    full = DirectionStream(3, 5).next_block(40_000)
    tail = DirectionStream(3, 5, counter=30_000).next_block(10_000)
    assert np.array_equal(full[30_000:], tail)


def test_streams_are_independent():
    a = DirectionStream(3, 5, stream=0).next_block(100)
    b = DirectionStream(3, 5, stream=1).next_block(100)
    assert not np.array_equal(a, b)


def test_index_stream_uniform_and_reproducible():
    idx = IndexStream(9, 7).next_block(70_000)
    assert idx.dtype == np.int64 and idx.min() == 0 and idx.max() == 6
    counts = np.bincount(idx, minlength=7)
    assert np.all(np.abs(counts - 10_000) <= 4 * np.sqrt(10_000))
    s = IndexStream(9, 7)
    assert [s.next_index() for _ in range(5)] == list(idx[:5])


def test_invalid_arguments():
    with pytest.raises(ValueError):
        DirectionStream(0, 0)
    with pytest.raises(ValueError):
        IndexStream(0, 0)
    with pytest.raises(ValueError):
        DirectionStream(-1, 3)
    with pytest.raises(ValueError):
        DirectionStream(0, 3).next_block(-1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), dim=st.integers(1, 200), n=st.integers(0, 50))
def test_every_direction_is_unit(seed, dim, n):
    e = DirectionStream(seed, dim).next_block(n)
    assert e.shape == (n, dim)
    if n:
        assert np.max(np.abs(np.linalg.norm(e, axis=1) - 1.0)) <= 1e-12


def test_blocks_are_read_only_views():
    E = DirectionStream(0, 3).next_block(4)
    with pytest.raises(ValueError):
        E[0, 0] = 1.0
