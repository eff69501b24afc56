"""Two-phase analytical cost model of distributed k-mer counting.

Phase 1 generates k-mers and ships them to their owners; phase 2 radix-sorts
and accumulates them locally. With ``N = n (m - k + 1)`` k-mers of ``W`` bits
on ``P`` nodes:

    t_comp1  = N / (P c_node)
    t_intra1 = (m n / (P L) + N (W/8) / (P L)) L / beta_mem
    t_inter1 = N W / (4 P beta_link)
    t_comp2  = N W / (8 P c_node)
    t_intra2 = (1 + N W / (8 P L)) (W/8) L / beta_mem

Phase-1 communication is ``t_intra1 + t_inter1`` ("sum" mode) or their max
("max" mode); each phase costs the max of its compute and communication, and
the phases add because a barrier separates them.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, fields

from .dataio import SYNTHETIC_READ_LEN, synthetic_params

MODES = ("sum", "max")


@dataclass(frozen=True)
class MachineParams:
    c_node: float = 121.9e9     # INT64 ops/s per node
    beta_mem: float = 46.9e9    # bytes/s memory bandwidth per node
    Z: float = 38e6             # cache bytes (carried, unused by the formulas)
    L: float = 64.0             # cache-line bytes
    beta_link: float = 12.5e9   # bytes/s combined bidirectional NIC bandwidth

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be strictly positive")


# Intel node of the evaluation cluster
DEFAULT_MACHINE = MachineParams()


@dataclass(frozen=True)
class WorkloadParams:
    n: int
    m: int
    k: int = 31
    P: int = 1
    W: int = 64

    def __post_init__(self):
        if self.k > self.m:
            raise ValueError("k must not exceed m")
        if self.n < 0 or self.P < 1 or self.W < 1:
            raise ValueError("invalid workload parameters")

    @property
    def N(self) -> int:
        return self.n * (self.m - self.k + 1)

    def with_nodes(self, P: int) -> WorkloadParams:
        return WorkloadParams(self.n, self.m, self.k, P, self.W)


def synthetic_workload(scale: int, P: int = 1, k: int = 31) -> WorkloadParams:
    _, m, n = synthetic_params(scale)
    return WorkloadParams(n=n, m=m, k=k, P=P)


@dataclass
class CostBreakdown:
    t_comp1: float
    t_intra1: float
    t_inter1: float
    t_comp2: float
    t_intra2: float
    mode: str
    t_comm1: float
    T1: float
    T2: float
    T_total: float
    shares: dict = field(default_factory=dict)

    def to_row(self) -> dict:
        row = asdict(self)
        shares = row.pop("shares")
        for name, v in shares.items():
            row[f"share_{name}"] = v
        return row


def phase1_costs(w: WorkloadParams, mch: MachineParams = DEFAULT_MACHINE) -> tuple[float, float, float]:
    N, P, L = w.N, w.P, mch.L
    word_bytes = w.W / 8
    t_comp = N / (P * mch.c_node)
    t_intra = (w.m * w.n / (P * L) + N * word_bytes / (P * L)) * L / mch.beta_mem
    t_inter = N * w.W / (4 * P * mch.beta_link)
    return t_comp, t_intra, t_inter


def phase2_costs(w: WorkloadParams, mch: MachineParams = DEFAULT_MACHINE) -> tuple[float, float]:
    N, P, L = w.N, w.P, mch.L
    passes = w.W / 8
    t_comp = N * w.W / (8 * P * mch.c_node)
    t_intra = (1 + N * w.W / (8 * P * L)) * passes * L / mch.beta_mem
    return t_comp, t_intra


def total_time(w: WorkloadParams, mch: MachineParams = DEFAULT_MACHINE, mode: str = "sum") -> CostBreakdown:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    c1, a1, e1 = phase1_costs(w, mch)
    c2, a2 = phase2_costs(w, mch)
    comm1 = a1 + e1 if mode == "sum" else max(a1, e1)
    T1 = max(c1, comm1)
    T2 = max(c2, a2)
    # shares use no-overlap accounting regardless of mode
    parts = {"compute": c1 + c2, "intranode": a1 + a2, "internode": e1}
    total = sum(parts.values())
    shares = {k: (v / total if total > 0 else 0.0) for k, v in parts.items()}
    return CostBreakdown(c1, a1, e1, c2, a2, mode, comm1, T1, T2, T1 + T2, shares)


def predicted_cache_misses(w: WorkloadParams, mch: MachineParams = DEFAULT_MACHINE) -> tuple[float, float]:
    """Per-node last-level cache misses for phase 1 and phase 2."""
    N, P, L = w.N, w.P, mch.L
    word_bytes = w.W / 8
    phase1 = w.m * w.n / (P * L) + N * word_bytes / (P * L)
    phase2 = (1 + N * word_bytes / (P * L)) * word_bytes
    return phase1, phase2


CSV_COLUMNS = [
    "workload", "n", "m", "k", "P", "mode",
    "t_comp1", "t_intra1", "t_inter1", "t_comm1", "t_comp2", "t_intra2",
    "T1", "T2", "T_total", "share_compute", "share_intranode", "share_internode",
    "misses_phase1", "misses_phase2",
]


def model_row(name: str, w: WorkloadParams, mch: MachineParams, mode: str) -> dict:
    cost = total_time(w, mch, mode).to_row()
    misses = predicted_cache_misses(w, mch)
    row = {"workload": name, "n": w.n, "m": w.m, "k": w.k, "P": w.P, "mode": mode,
           "misses_phase1": misses[0], "misses_phase2": misses[1]}
    row.update({c: cost[c] for c in CSV_COLUMNS if c in cost})
    return row


def write_csv(rows, sink=None) -> str:
    buf = sink if sink is not None else io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue() if sink is None else ""


__all__ = [
    "MachineParams", "WorkloadParams", "CostBreakdown", "DEFAULT_MACHINE", "MODES",
    "phase1_costs", "phase2_costs", "total_time", "predicted_cache_misses",
    "synthetic_workload", "model_row", "write_csv", "CSV_COLUMNS", "SYNTHETIC_READ_LEN",
]
