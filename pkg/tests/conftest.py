import numpy as np
import pytest

from evtkit.events import EventStream, canonicalize


def make_stream(events, width=32, height=24, t_start=0, t_end=None,
                canonical=True):
    """Build an EventStream from (t, x, y, p) tuples."""
    if t_end is None:
        t_end = max((e[0] for e in events), default=t_start)
    if events:
        t, x, y, p = zip(*events)
    else:
        t = x = y = p = ()
    stream = EventStream(
        width=width, height=height, t_start=t_start, t_end=t_end,
        t=np.array(t, np.uint64), x=np.array(x, np.uint16),
        y=np.array(y, np.uint16), p=np.array(p, np.int8),
    )
    return canonicalize(stream) if canonical else stream


def random_events(rng, n, width=32, height=24, t_end=1_000_000):
    ts = rng.integers(0, t_end + 1, size=n)
    xs = rng.integers(0, width, size=n)
    ys = rng.integers(0, height, size=n)
    ps = rng.choice([-1, 1], size=n)
    return list(zip(ts.tolist(), xs.tolist(), ys.tolist(), ps.tolist()))


def random_stream(rng, n, width=32, height=24, t_end=1_000_000):
    return make_stream(
        random_events(rng, n, width, height, t_end),
        width=width, height=height, t_start=0, t_end=t_end,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
