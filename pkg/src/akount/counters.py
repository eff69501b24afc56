"""Serial, BSP and FA-BSP k-mer counters.

All three return the same sorted record array for the same input; the
distributed ones also return a :class:`RunReport` carrying engine metrics.
"""
from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .aggregation import AggregationConfig, PEAggregator
from .kmer_core import check_k, kmers_of_reads, make_records, RECORD_DTYPE
from .runtime import DEFAULT_C0, Engine, EngineMetrics

READS_PER_STEP = 64


def digest(records: np.ndarray) -> str:
    """64-bit BLAKE2b checksum of a sorted record array, as 16 hex digits."""
    data = np.ascontiguousarray(records, dtype=RECORD_DTYPE).tobytes()
    return hashlib.blake2b(data, digest_size=8).hexdigest()


@dataclass
class RunReport:
    algorithm: str
    workload: dict
    wall_time: float
    metrics: EngineMetrics
    digest: str
    records: int
    kmers_generated: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["metrics"] = self.metrics.to_dict()
        return d


def partition_reads(reads, P: int) -> list[list]:
    """Contiguous block partition; block sizes differ by at most one read."""
    n = len(reads)
    base, extra = divmod(n, P)
    out, start = [], 0
    for p in range(P):
        size = base + (1 if p < extra else 0)
        out.append(list(reads[start:start + size]))
        start += size
    return out


def _workload(reads, k: int, P: int, **extra) -> dict:
    lengths = [len(r) for r in reads]
    return {
        "n": len(reads),
        "m_min": min(lengths, default=0),
        "m_max": max(lengths, default=0),
        "bases": sum(lengths),
        "k": k,
        "P": P,
        **extra,
    }


def _merge_disjoint(tables: list[np.ndarray]) -> np.ndarray:
    if not tables:
        return np.empty(0, dtype=RECORD_DTYPE)
    keys = np.concatenate([t["kmer"] for t in tables])
    counts = np.concatenate([t["count"] for t in tables])
    kernels.radix_sort_pairs(keys, counts)
    return make_records(keys, counts)


# --------------------------------------------------------------------------- serial

def count_serial(reads, k: int) -> np.ndarray:
    check_k(k)
    kmers = kmers_of_reads(reads, k)
    kernels.radix_sort(kmers)
    return make_records(*kernels.accumulate(kmers))


# --------------------------------------------------------------------------- BSP

def count_bsp(reads, k: int, P: int = 4, b: int | None = None, engine: Engine | None = None):
    """Batched bulk-synchronous counter.

    Every PE buffers its k-mers per owner; after each ``b`` generated k-mers
    all PEs take part in one many-to-many exchange of locally accumulated
    ``(kmer, count)`` pairs. A final exchange ships the remainder, so a run
    performs ``floor(G_max / b) + 1`` collective rounds, ``G_max`` being the
    largest per-PE k-mer count. ``b=None`` means a single final round.
    """
    check_k(k)
    if b is not None and b < 1:
        raise ValueError("batch size must be >= 1")
    engine = engine or Engine(P)
    t0 = time.perf_counter()
    parts = partition_reads(reads, P)
    generated = [kmers_of_reads(part, k) for part in parts]
    g_max = max((len(g) for g in generated), default=0)
    capacity_rounds = 0 if b is None else g_max // b
    owners = [kernels.owner_pe(g, P) for g in generated]
    received: list[list[np.ndarray]] = [[] for _ in range(P)]

    def flush(lo: int, hi: int | None) -> None:
        outgoing = [_bucket_pairs(generated[src][lo:hi], owners[src][lo:hi], P)
                    for src in range(P)]
        for dst, arrays in enumerate(engine.all_to_all(outgoing)):
            received[dst].extend(arrays)

    for r in range(capacity_rounds):
        flush(r * b, (r + 1) * b)
    flush(capacity_rounds * b if b else 0, None)

    tables = []
    for dst in range(P):
        table = _merge_disjoint([]) if not received[dst] else np.concatenate(received[dst])
        keys = np.ascontiguousarray(table["kmer"])
        counts = np.ascontiguousarray(table["count"])
        kernels.radix_sort_pairs(keys, counts)
        tables.append(make_records(*kernels.accumulate_pairs(keys, counts)))
    records = _merge_disjoint(tables)
    wall = time.perf_counter() - t0
    report = RunReport(
        algorithm="bsp",
        workload=_workload(reads, k, P, b=b),
        wall_time=wall,
        metrics=engine.snapshot(),
        digest=digest(records),
        records=len(records),
        kmers_generated=int(sum(len(g) for g in generated)),
        extra={"g_max": g_max, "per_pe_generated": [len(g) for g in generated]},
    )
    return records, report


def _bucket_pairs(kmers: np.ndarray, owners: np.ndarray, P: int) -> list:
    """Per-destination sorted, accumulated pair arrays for one PE's batch."""
    out: list = [None] * P
    if len(kmers) == 0:
        return out
    keys = kmers.copy()
    own = owners.astype(np.uint64)
    kernels.radix_sort_pairs(keys, own)
    order = np.argsort(own, kind="stable")
    keys = keys[order]
    own = own[order]
    bounds = np.flatnonzero(np.diff(own)) + 1
    for s, e in zip(np.concatenate(([0], bounds)).tolist(),
                    np.concatenate((bounds, [len(own)])).tolist()):
        out[int(own[s])] = make_records(*kernels.accumulate(keys[s:e]))
    return out


# --------------------------------------------------------------------------- FA-BSP

def count_fabsp(reads, k: int, P: int = 4, topology: str = "1d",
                config: AggregationConfig | None = None, c0: int = DEFAULT_C0,
                engine: Engine | None = None, parallel: bool = False,
                reads_per_step: int = READS_PER_STEP):
    """Fine-grained asynchronous counter.

    Three global barriers: after partitioning, after every PE has generated
    and drained its k-mers, and after the local sort/accumulate phase.
    """
    check_k(k)
    config = config or AggregationConfig()
    if engine is None:
        engine = Engine(P, topology, c0, parallel=parallel)
    elif engine.P != P:
        raise ValueError("engine PE count differs from P")
    states = [PEAggregator(pe, P, engine, config) for pe in range(P)]
    engine.handler = lambda pe, pkt: states[pe].process_receive_buffer(pkt)
    t0 = time.perf_counter()

    parts = partition_reads(reads, P)
    engine.global_barrier()

    generated = [0] * P

    def step(pe: int, chunk) -> None:
        kmers = kmers_of_reads(chunk, k)
        generated[pe] += len(kmers)
        states[pe].add_many(kmers)
        states[pe].poll()

    if parallel:
        def run_pe(pe: int) -> None:
            part = parts[pe]
            for i in range(0, len(part), reads_per_step):
                step(pe, part[i:i + reads_per_step])
            states[pe].drain()

        threads = [threading.Thread(target=run_pe, args=(pe,)) for pe in range(P)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    else:
        longest = max((len(p) for p in parts), default=0)
        for i in range(0, longest, reads_per_step):
            for pe in range(P):
                chunk = parts[pe][i:i + reads_per_step]
                if chunk:
                    step(pe, chunk)
        for s in states:
            s.drain()
    engine.global_barrier()

    tables = [s.local_counts() for s in states]
    engine.global_barrier()
    records = _merge_disjoint(tables)
    wall = time.perf_counter() - t0

    report = RunReport(
        algorithm="fabsp",
        workload=_workload(reads, k, P, topology=engine.topology.kind,
                           grid=list(engine.topology.dims), c0=engine.c0,
                           aggregation=config.to_dict(), parallel=parallel),
        wall_time=wall,
        metrics=engine.snapshot(),
        digest=digest(records),
        records=len(records),
        kmers_generated=int(sum(generated)),
        extra={"per_pe_generated": generated,
               "per_pe_records": [len(t) for t in tables],
               "aggregation": [s.stats for s in states]},
    )
    report.tables = tables
    return records, report


def count(algorithm: str, reads, k: int, **kwargs):
    """Dispatch by name; always returns ``(records, report_or_None)``."""
    if algorithm == "serial":
        t0 = time.perf_counter()
        records = count_serial(reads, k)
        report = RunReport("serial", _workload(reads, k, 1), time.perf_counter() - t0,
                           EngineMetrics.zero(1), digest(records), len(records),
                           int(records["count"].sum()))
        return records, report
    if algorithm == "bsp":
        return count_bsp(reads, k, **kwargs)
    if algorithm == "fabsp":
        return count_fabsp(reads, k, **kwargs)
    raise ValueError(f"unknown algorithm {algorithm!r}")
