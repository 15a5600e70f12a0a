"""Communication load and the execution-time model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidConfigurationError
from .transport import ShuffleLedger


@dataclass(frozen=True)
class LoadReport:
    """Shuffled intermediate values normalized by ``Q * N``.

    One file-level intermediate value counts one unit, a coded packet
    ``1 / r`` units.
    """

    r: int
    L: Fraction
    total_units: Fraction
    normalizer: int
    total_bytes: int = 0

    def __post_init__(self):
        if not 0 <= self.L <= 1:
            raise InvalidConfigurationError(f"communication load {self.L} outside [0, 1]")


def communication_load(ledger: ShuffleLedger, Q: int, N: int, r: int) -> LoadReport:
    normalizer = Q * N
    if normalizer <= 0:
        raise InvalidConfigurationError(f"Q*N must be positive, got Q={Q}, N={N}")
    units = ledger.total_units
    return LoadReport(r, Fraction(units) / normalizer, units, normalizer, ledger.total_bytes)


def uncoded_load(K: int, r: int = 1) -> Fraction:
    """Load of unicast shuffling when every file is mapped on ``r`` nodes."""
    return 1 - Fraction(r, K)


def coded_load(K: int, r: int) -> Fraction:
    return uncoded_load(K, r) / r


def predict_total_time(t_map: float, t_shuffle: float, t_reduce: float, r: float) -> float:
    """Map work grows ``r``-fold while shuffle time shrinks ``r``-fold."""
    if min(t_map, t_shuffle, t_reduce) < 0:
        raise InvalidConfigurationError("stage times must be non-negative")
    if r < 1:
        raise InvalidConfigurationError(f"r must be at least 1, got {r}")
    return r * t_map + t_shuffle / r + t_reduce


def optimal_r(t_map: float, t_shuffle: float, K: int) -> int:
    """Integer redundancy in ``[1, K]`` minimizing :func:`predict_total_time`.

    The model is convex in ``r`` with its real minimum at
    ``sqrt(t_shuffle / t_map)``, so only the floor and ceiling need checking.
    Ties go to the smaller ``r``.
    """
    if not t_map > 0:
        raise InvalidConfigurationError(f"t_map must be positive, got {t_map}")
    if K < 1:
        raise InvalidConfigurationError(f"K must be at least 1, got {K}")
    root = math.sqrt(t_shuffle / t_map)
    candidates = sorted({min(max(c, 1), K) for c in (math.floor(root), math.ceil(root))})
    return min(candidates, key=lambda r: (predict_total_time(t_map, t_shuffle, 0.0, r), r))
