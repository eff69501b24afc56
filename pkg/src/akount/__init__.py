"""Asynchronous distributed k-mer counting on a deterministic virtual-PE runtime."""
from .aggregation import AggregationConfig, PEAggregator
from .counters import RunReport, count, count_bsp, count_fabsp, count_serial
from .kernels import BACKEND
from .kmer_core import RECORD_DTYPE, AmbiguousBase
from .runtime import Engine, EngineMetrics, Topology

__version__ = "0.1.0"

__all__ = [
    "AggregationConfig", "PEAggregator", "RunReport", "count", "count_bsp", "count_fabsp",
    "count_serial", "BACKEND", "RECORD_DTYPE", "AmbiguousBase", "Engine", "EngineMetrics",
    "Topology",
]
