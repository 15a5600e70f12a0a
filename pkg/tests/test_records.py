import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from codedsort.errors import InvalidConfigurationError, MalformedDataError, OutOfDomainError
from codedsort.records import (
    KEY_MAX,
    RECORD_BYTES,
    KeySpace,
    Partitioning,
    Record,
    check_records,
    deserialize_records,
    generate_records,
    partition_boundaries,
    partition_of,
    read_records,
    serialize_records,
    write_records,
)

from conftest import rec

records_st = st.builds(
    Record,
    st.integers(min_value=0, max_value=KEY_MAX),
    st.binary(min_size=90, max_size=90),
)


def test_record_is_100_bytes():
    r = rec(12345)
    assert len(r.to_bytes()) == RECORD_BYTES == 100
    assert r.to_bytes()[:10] == (12345).to_bytes(10, "big")


@given(records_st)
def test_record_round_trip(r):
    assert Record.from_bytes(r.to_bytes()) == r


@given(st.lists(records_st, max_size=20))
def test_stream_round_trip(records):
    assert deserialize_records(serialize_records(records)) == records


@given(records_st, records_st)
def test_byte_order_matches_key_order(a, b):
    # big-endian keys: byte comparison of the key field is integer comparison
    assert (a.to_bytes()[:10] < b.to_bytes()[:10]) == (a.key < b.key)


def test_record_rejects_bad_fields():
    with pytest.raises(MalformedDataError):
        Record(1, b"short")
    with pytest.raises(OutOfDomainError):
        Record(KEY_MAX + 1, b"x" * 90)
    with pytest.raises(MalformedDataError):
        deserialize_records(b"x" * 150)


def test_generate_zero():
    assert generate_records(0, seed=7) == []


def test_generate_deterministic():
    a = serialize_records(generate_records(1000, seed=7))
    b = serialize_records(generate_records(1000, seed=7))
    assert a == b
    assert a != serialize_records(generate_records(1000, seed=8))


def test_generate_values_printable():
    for r in generate_records(200, seed=3):
        assert all(32 <= c < 127 for c in r.value)


def test_generate_uniform_across_partitions():
    n, K = 10_000, 4
    p = 1 / K
    mean = n * p
    sigma = math.sqrt(n * p * (1 - p))
    part = partition_boundaries(KeySpace(), K)
    counts = [0] * K
    for r in generate_records(n, seed=7):
        counts[partition_of(r.key, part) - 1] += 1
    for c in counts:
        assert mean - 3 * sigma <= c <= mean + 3 * sigma


def test_generate_negative_count():
    with pytest.raises(InvalidConfigurationError):
        generate_records(-1, seed=0)


def test_toy_partitioning(toy_partitioning):
    assert toy_partitioning.boundaries == (0, 25, 50, 75, 100)


def test_single_partition():
    part = partition_boundaries(KeySpace(0, 100), 1)
    assert part.boundaries == (0, 100)
    assert partition_of(0, part) == partition_of(100, part) == 1


def test_uneven_partitioning_widths_differ_by_at_most_one():
    # width 9 over 3 partitions divides evenly; the closed last range owns the upper bound
    part = partition_boundaries(KeySpace(0, 9), 3)
    assert part.boundaries == (0, 3, 6, 9)
    sizes = [sum(partition_of(k, part) == i for k in range(10)) for i in (1, 2, 3)]
    assert sizes == [3, 3, 4]

    part = partition_boundaries(KeySpace(0, 10), 3)
    assert part.boundaries == (0, 4, 7, 10)


def test_full_key_space_boundaries_are_clean():
    part = partition_boundaries(KeySpace(), 4)
    assert part.boundaries == (0, 1 << 78, 2 << 78, 3 << 78, KEY_MAX)


@given(
    lower=st.integers(0, 50),
    span=st.integers(1, 60),
    K=st.integers(1, 12),
)
def test_every_key_in_exactly_one_partition(lower, span, K):
    if span < K:
        with pytest.raises(InvalidConfigurationError):
            partition_boundaries(KeySpace(lower, lower + span), K)
        return
    part = partition_boundaries(KeySpace(lower, lower + span), K)
    assert part.K == K
    seen = []
    for key in range(lower, lower + span + 1):
        owners = []
        for i in range(1, K + 1):
            lo, hi, closed = part.bounds(i)
            if lo <= key < hi or (closed and key == hi):
                owners.append(i)
        assert len(owners) == 1
        assert partition_of(key, part) == owners[0]
        seen.append(owners[0])
    # concatenation in index order covers the space with no gaps
    assert seen == sorted(seen)
    assert set(seen) == set(range(1, K + 1))
    widths = [b - a for a, b in zip(part.boundaries, part.boundaries[1:])]
    assert max(widths) - min(widths) <= 1


def test_partition_of_worked_example(toy_partitioning):
    assert partition_of(30, toy_partitioning) == 2
    assert partition_of(0, toy_partitioning) == 1
    assert partition_of(100, toy_partitioning) == 4
    assert partition_of(75, toy_partitioning) == 4
    assert partition_of(74, toy_partitioning) == 3


def test_partition_of_out_of_domain(toy_partitioning):
    with pytest.raises(OutOfDomainError):
        partition_of(101, toy_partitioning)
    with pytest.raises(OutOfDomainError):
        partition_of(-1, toy_partitioning)


def test_partitioning_rejects_bad_input():
    with pytest.raises(InvalidConfigurationError):
        KeySpace(5, 4)
    with pytest.raises(InvalidConfigurationError):
        partition_boundaries(KeySpace(0, 2), 3)
    with pytest.raises(InvalidConfigurationError):
        Partitioning((0, 5, 5))


def test_record_file_round_trip(tmp_path):
    records = generate_records(50, seed=1)
    path = tmp_path / "in.dat"
    write_records(path, records)
    assert path.stat().st_size == 50 * RECORD_BYTES
    assert read_records(path) == records


def test_check_records_accepts_bytes_and_arrays():
    records = generate_records(5, seed=2)
    raw = serialize_records(records)
    assert check_records(raw) == records
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(5, RECORD_BYTES)
    assert check_records(arr) == records
    assert check_records(iter(records)) == records
    with pytest.raises(MalformedDataError):
        check_records(np.zeros((2, 99), dtype=np.uint8))
    with pytest.raises(MalformedDataError):
        check_records([1, 2])
