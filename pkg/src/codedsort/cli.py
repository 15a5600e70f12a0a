"""Command-line driver: generate records, run a pipeline or a sweep, emit CSV."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .errors import CodedSortError
from .pipeline import TRANSPORTS, run_coded_terasort, run_terasort, verify_output
from .records import generate_records, read_records, write_records
from .transport import CostModel

log = logging.getLogger(__name__)

MODES = ("terasort", "coded", "both")
COLUMNS = (
    "mode", "K", "r", "codegen_s", "map_s", "pack_encode_s", "shuffle_s",
    "unpack_decode_s", "reduce_s", "total_s", "comm_load_L", "units", "bytes",
    "sorted_ok", "speedup",
)


@dataclass(frozen=True)
class RunConfig:
    mode: str = "coded"
    K: int = 4
    r: int = 2
    record_count: int = 10_000
    seed: int = 42
    transport: str = "sim"
    bandwidth: float = 12.5e6
    alpha: float = 0.0
    output: Optional[str] = None
    sweep: Optional[Tuple[int, int]] = None
    input: Optional[str] = None
    write_sorted: Optional[str] = None
    generate: Optional[str] = None
    timing: str = "wall"

    def redundancies(self) -> List[int]:
        if self.sweep is None:
            return [self.r]
        return list(range(self.sweep[0], self.sweep[1] + 1))


def _sweep(text: str) -> Tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        bounds = (int(lo), int(hi)) if sep else (int(lo), int(lo))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if bounds[0] > bounds[1]:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return bounds


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="codedsort",
        description="Run TeraSort or CodedTeraSort on synthetic or file input and report stage times as CSV.",
    )
    p.add_argument("--mode", choices=MODES, default="coded",
                   help="'both' runs the TeraSort baseline and fills the speedup column")
    p.add_argument("--nodes", type=int, default=4, dest="K", help="number of worker nodes K")
    p.add_argument("--redundancy", type=int, default=2, dest="r",
                   help="files are mapped on r nodes (coded mode; terasort uses r=1 unless sweeping)")
    p.add_argument("--records", type=int, default=10_000, dest="record_count")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--transport", choices=TRANSPORTS, default="sim")
    p.add_argument("--bandwidth", type=float, default=12.5e6, help="bytes per second (default 100 Mbps)")
    p.add_argument("--alpha", type=float, default=0.0, help="multicast overhead factor")
    p.add_argument("--sweep-r", type=_sweep, dest="sweep", metavar="A..B",
                   help="run every redundancy in A..B")
    p.add_argument("--output", help="CSV destination (stdout when omitted)")
    p.add_argument("--input", help="read records from a flat 100-byte record file")
    p.add_argument("--write-sorted", help="write the sorted records of the last run to this file")
    p.add_argument("--generate", metavar="PATH", help="only write --records generated records to PATH")
    p.add_argument("--timing", choices=("wall", "model"), default="wall",
                   help="'model' zeroes measured compute stages so the CSV is reproducible")
    return p


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    config = RunConfig(**vars(ns))
    if config.K < 1:
        parser.error(f"--nodes must be at least 1, got {config.K}")
    if config.record_count < 0:
        parser.error("--records must be non-negative")
    if config.bandwidth <= 0:
        parser.error("--bandwidth must be positive")
    if config.alpha < 0:
        parser.error("--alpha must be non-negative")
    for r in config.redundancies():
        if r < 1:
            parser.error(f"redundancy must be at least 1, got {r}")
        if config.mode != "terasort" and r > config.K - 1:
            parser.error(f"coded mode needs redundancy in 1..{config.K - 1}, got {r}")
        if config.mode == "terasort" and config.sweep and r > max(config.K - 1, 1):
            parser.error(f"redundancy {r} too large for K={config.K}")
    return config


def _row(mode, K, r, result, ok, timing, speedup=None) -> dict:
    times = result.times.as_dict()
    if timing == "model":
        times = {s: (t if s == "shuffle" else 0.0) for s, t in times.items()}
    row = {"mode": mode, "K": K, "r": r}
    row.update({f"{s}_s": f"{t:.6f}" for s, t in times.items()})
    row["total_s"] = f"{sum(times.values()):.6f}"
    row["comm_load_L"] = f"{float(result.load.L):.6g}"
    row["units"] = str(result.load.total_units)
    row["bytes"] = result.load.total_bytes
    row["sorted_ok"] = str(ok).lower()
    row["speedup"] = "" if speedup is None else f"{speedup:.4f}"
    return row


def run_and_report(config: RunConfig) -> int:
    """Run every configured job, write CSV, and return 0 iff every output verified."""
    try:
        if config.generate:
            write_records(config.generate, generate_records(config.record_count, config.seed))
            return 0
        if config.input:
            records = read_records(config.input)
        else:
            records = generate_records(config.record_count, config.seed)
        cost = CostModel(config.bandwidth, config.alpha)
        rows = []
        all_ok = True
        last = None
        baseline_total = None

        if config.mode in ("terasort", "both"):
            sweep = config.redundancies() if config.mode == "terasort" and config.sweep else [1]
            for r in sweep:
                result = run_terasort(records, config.K, cost, config.transport, redundancy=r)
                ok = verify_output(result.output, records)
                all_ok &= ok
                row = _row("terasort", config.K, r, result, ok, config.timing)
                rows.append(row)
                last = result
                if r == 1:
                    baseline_total = float(row["total_s"])
        if config.mode in ("coded", "both"):
            for r in config.redundancies():
                result = run_coded_terasort(records, config.K, r, cost, config.transport)
                ok = verify_output(result.output, records)
                all_ok &= ok
                row = _row("coded", config.K, r, result, ok, config.timing)
                coded_total = float(row["total_s"])
                if baseline_total is not None and config.mode == "both":
                    row["speedup"] = f"{baseline_total / coded_total:.4f}" if coded_total > 0 else "inf"
                rows.append(row)
                last = result
    except (CodedSortError, OSError) as exc:
        print(f"codedsort: {exc}", file=sys.stderr)
        return 1

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if config.output:
        with open(config.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if config.write_sorted and last is not None:
        write_records(config.write_sorted, last.output.records())
    if not all_ok:
        print("codedsort: output verification failed", file=sys.stderr)
    return 0 if all_ok else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return run_and_report(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
