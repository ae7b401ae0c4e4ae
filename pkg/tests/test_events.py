import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_stream, random_events, random_stream
from oracles import filter_events_naive, sort_events_naive

from evtkit.errors import InvalidRange, NegativeDuration, OutOfBounds
from evtkit.events import EventStream, canonicalize, concatenate, slice_stream


def stream_tuples(stream):
    return list(
        zip(stream.t.tolist(), stream.x.tolist(), stream.y.tolist(),
            stream.p.tolist())
    )


def test_empty_stream_is_valid():
    stream = make_stream([], t_start=0, t_end=0)
    assert len(stream) == 0
    assert stream.duration == 0


def test_canonicalize_sorts_two_elements():
    stream = make_stream([(5, 0, 0, 1), (3, 1, 1, -1)], canonical=False)
    out = canonicalize(stream)
    assert out.t.tolist() == [3, 5]
    assert out.x.tolist() == [1, 0]


def test_canonicalize_matches_naive_sort_oracle(rng):
    events = random_events(rng, 1000)
    stream = make_stream(events, canonical=False)
    out = canonicalize(stream)
    assert stream_tuples(out) == sort_events_naive(events)


def test_canonicalize_tie_break_negative_first():
    stream = make_stream(
        [(7, 4, 2, 1), (7, 4, 2, -1), (7, 3, 2, 1), (7, 4, 1, 1)],
        canonical=False,
    )
    out = canonicalize(stream)
    assert stream_tuples(out) == [
        (7, 4, 1, 1), (7, 3, 2, 1), (7, 4, 2, -1), (7, 4, 2, 1)
    ]


def test_canonicalize_drops_exact_duplicates():
    stream = make_stream([(1, 2, 3, 1), (1, 2, 3, 1), (1, 2, 3, -1)],
                         canonical=False)
    out = canonicalize(stream)
    assert len(out) == 2


def test_canonicalize_rejects_out_of_bounds():
    stream = make_stream([(1, 99, 0, 1)], width=32, height=24,
                         canonical=False)
    with pytest.raises(OutOfBounds):
        canonicalize(stream)


def test_negative_duration_rejected():
    stream = EventStream(width=4, height=4, t_start=10, t_end=5)
    with pytest.raises(NegativeDuration):
        canonicalize(stream)


@given(st.lists(
    st.tuples(
        st.integers(0, 1000),
        st.integers(0, 31),
        st.integers(0, 23),
        st.sampled_from([-1, 1]),
    ),
    max_size=200,
))
@settings(max_examples=50, deadline=None)
def test_canonicalize_idempotent(events):
    stream = make_stream(events, t_start=0, t_end=1000, canonical=False)
    once = canonicalize(stream)
    twice = canonicalize(once)
    assert stream_tuples(once) == stream_tuples(twice)


def test_slice_zero_width_is_empty(rng):
    stream = random_stream(rng, 100)
    out = slice_stream(stream, 500, 500)
    assert len(out) == 0
    assert out.t_start == out.t_end == 500


def test_slice_matches_linear_scan_oracle(rng):
    events = random_events(rng, 10_000)
    stream = make_stream(events, t_start=0, t_end=1_000_000)
    for (t0, t1) in [(0, 1_000_001), (100, 100), (250_000, 750_000),
                     (0, 1), (999_999, 1_000_001)]:
        out = slice_stream(stream, t0, t1)
        expected = sort_events_naive(filter_events_naive(events, t0, t1))
        assert stream_tuples(out) == expected
        assert (out.t_start, out.t_end) == (t0, t1)


def test_slice_partition_identity(rng):
    stream = random_stream(rng, 5000)
    edges = [0, 137_000, 400_000, 999_999, stream.t_end + 1]
    pieces = [
        slice_stream(stream, a, b) for a, b in zip(edges, edges[1:])
    ]
    total = sum(len(p) for p in pieces)
    assert total == len(stream)
    rebuilt = pieces[0]
    for piece in pieces[1:]:
        rebuilt = concatenate(rebuilt, piece)
    assert stream_tuples(rebuilt) == stream_tuples(stream)


def test_slice_invalid_ranges(rng):
    stream = random_stream(rng, 10)
    with pytest.raises(InvalidRange):
        slice_stream(stream, 10, 5)
    with pytest.raises(InvalidRange):
        slice_stream(stream, 0, stream.t_end + 2)


@given(st.lists(st.integers(0, 10_000), min_size=0, max_size=300))
@settings(max_examples=50, deadline=None)
def test_partition_property_random_grid(ts):
    events = [(t, t % 7, t % 5, 1 if t % 2 else -1) for t in ts]
    stream = make_stream(events, width=7, height=5, t_start=0, t_end=10_000)
    edges = [0, 1000, 3333, 9999, 10_001]
    pieces = [slice_stream(stream, a, b) for a, b in zip(edges, edges[1:])]
    assert sum(len(p) for p in pieces) == len(stream)
