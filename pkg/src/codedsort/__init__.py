"""Distributed TeraSort with optional coded multicast shuffling."""

from .errors import (
    CodedSortError,
    ConsistencyError,
    InvalidCallError,
    InvalidConfigurationError,
    MalformedDataError,
    MalformedPacketError,
    OutOfDomainError,
    TransmissionError,
)
from .metrics import LoadReport, communication_load, optimal_r, predict_total_time
from .pipeline import SortedOutput, StageTimes, run_coded_terasort, run_terasort, verify_output
from .placement import PlacementPlan, build_plan, enumerate_subsets, split_input, uncoded_plan
from .records import KeySpace, Partitioning, Record, generate_records, partition_boundaries, partition_of
from .transport import CostModel, ShuffleLedger, schedule_coded, schedule_uncoded, transmit

__version__ = "0.1.0"


def __getattr__(name):
    # sklearn is only imported when the estimator wrappers are used
    if name in ("TeraSort", "CodedTeraSort"):
        from . import estimators

        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
