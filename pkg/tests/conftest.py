import random

import pytest

from codedsort.records import VALUE_BYTES, Record, partition_boundaries, KeySpace


def rec(key, tag=0):
    """Record with a recognizable value: ``tag`` repeated as 90 ASCII digits."""
    return Record(key, (str(tag % 10) * VALUE_BYTES).encode())


def random_records(n, seed, key_max=None):
    rng = random.Random(seed)
    hi = key_max if key_max is not None else (1 << 80) - 1
    return [Record(rng.randint(0, hi), rng.randbytes(VALUE_BYTES)) for _ in range(n)]


@pytest.fixture
def toy_partitioning():
    # [0,25), [25,50), [50,75), [75,100]
    return partition_boundaries(KeySpace(0, 100), 4)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        status, title = RESULTS[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
