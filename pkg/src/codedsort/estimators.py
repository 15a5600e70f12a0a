"""scikit-learn style wrappers around the two sorting pipelines.

``fit`` derives the placement plan and key partitioning (the CodeGen step);
``transform`` runs the distributed sort and returns the records in order.
Run diagnostics are exposed as fitted attributes after ``transform``::

    >>> sorter = CodedTeraSort(n_nodes=4, redundancy=2)
    >>> ordered = sorter.fit_transform(generate_records(1000, seed=0))
    >>> sorter.load_report_.L
    Fraction(1, 4)
"""

from __future__ import annotations

from numbers import Integral, Real

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import InvalidConfigurationError
from .pipeline import TRANSPORTS, default_partitioning, run_coded_terasort, run_terasort, verify_output
from .placement import build_plan, uncoded_plan
from .records import check_records
from .transport import CostModel


class TeraSort(TransformerMixin, BaseEstimator):
    """Distributed sort with unicast shuffling.

    Parameters
    ----------
    n_nodes : int
        Number of worker nodes ``K``.
    redundancy : int
        Nodes storing each input file. Above 1 the file placement is
        redundant but the shuffle stays uncoded.
    transport : {"sim", "socket"}
    bandwidth : float
        Link rate in bytes per second used by the shuffle cost model.
    alpha : float
        Per-multicast overhead factor of the cost model.
    port_base : int or None
        First loopback port for socket mode; ephemeral ports when None.
    """

    _coded = False

    def __init__(self, n_nodes=4, redundancy=1, transport="sim", bandwidth=12.5e6, alpha=0.0, port_base=None):
        self.n_nodes = n_nodes
        self.redundancy = redundancy
        self.transport = transport
        self.bandwidth = bandwidth
        self.alpha = alpha
        self.port_base = port_base

    def _validate_params(self):
        if not isinstance(self.n_nodes, Integral) or self.n_nodes < 1:
            raise InvalidConfigurationError(f"n_nodes must be a positive integer, got {self.n_nodes!r}")
        if not isinstance(self.redundancy, Integral) or self.redundancy < 1:
            raise InvalidConfigurationError(f"redundancy must be a positive integer, got {self.redundancy!r}")
        if self.transport not in TRANSPORTS:
            raise InvalidConfigurationError(f"transport must be one of {TRANSPORTS}, got {self.transport!r}")
        if not isinstance(self.bandwidth, Real) or not isinstance(self.alpha, Real):
            raise InvalidConfigurationError("bandwidth and alpha must be real numbers")

    def _plan(self):
        if self._coded or self.redundancy > 1:
            return build_plan(self.n_nodes, self.redundancy)
        return uncoded_plan(self.n_nodes)

    def fit(self, X, y=None):
        self._validate_params()
        check_records(X)
        self.cost_model_ = CostModel(self.bandwidth, self.alpha)
        self.plan_ = self._plan()
        self.partitioning_ = default_partitioning(self.n_nodes)
        return self

    def _run(self, records):
        return run_terasort(
            records, self.n_nodes, self.cost_model_, self.transport,
            redundancy=self.redundancy, partitioning=self.partitioning_, port_base=self.port_base,
        )

    def transform(self, X):
        check_is_fitted(self, ["plan_", "partitioning_"])
        records = check_records(X)
        result = self._run(records)
        self.result_ = result
        self.stage_times_ = result.times
        self.load_report_ = result.load
        self.ledger_ = result.ledger
        self.sorted_ok_ = verify_output(result.output, records)
        return result.output.records()


class CodedTeraSort(TeraSort):
    """Distributed sort with redundant placement and coded multicast shuffling."""

    _coded = True

    def __init__(self, n_nodes=4, redundancy=2, transport="sim", bandwidth=12.5e6, alpha=0.0, port_base=None):
        super().__init__(n_nodes, redundancy, transport, bandwidth, alpha, port_base)

    def _run(self, records):
        return run_coded_terasort(
            records, self.n_nodes, self.redundancy, self.cost_model_, self.transport,
            partitioning=self.partitioning_, port_base=self.port_base,
        )
