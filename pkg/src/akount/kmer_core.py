"""DNA encoding, rolling k-mer extraction, ownership hashing, radix sorting and accumulation.

K-mers are packed two bits per base (A=0, C=1, G=2, T=3, case-insensitive) into
64-bit unsigned words, first base in the highest occupied bit pair. Count
records are numpy structured arrays of dtype :data:`RECORD_DTYPE`.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import kernels

MAX_K = 31
RECORD_DTYPE = np.dtype([("kmer", "<u8"), ("count", "<u8")])

_BASE_CODES = {"A": 0, "C": 1, "G": 2, "T": 3}
_BASES = "ACGT"


class AmbiguousBase(ValueError):
    """Raised when a byte outside {A,C,G,T} is encoded; callers restart the window."""


def check_k(k: int) -> None:
    if not 1 <= k <= MAX_K:
        raise ValueError(f"k must be in [1, {MAX_K}], got {k}")


def _mask(k: int) -> int:
    return (1 << (2 * k)) - 1


def encode_base(c) -> int:
    """Return the 2-bit code of a base given as ``str``, ``bytes`` or an int byte value."""
    if isinstance(c, int):
        c = chr(c)
    elif isinstance(c, (bytes, bytearray)):
        c = c.decode("latin-1")
    code = _BASE_CODES.get(c.upper()) if len(c) == 1 else None
    if code is None:
        raise AmbiguousBase(repr(c))
    return code


def first_kmer(prefix, k: int | None = None) -> int:
    if k is None:
        k = len(prefix)
    check_k(k)
    if len(prefix) < k:
        raise ValueError(f"prefix shorter than k={k}")
    kmer = 0
    for i in range(k):
        kmer = (kmer << 2) | encode_base(prefix[i])
    return kmer


def next_kmer(prev: int, c, k: int) -> int:
    return ((prev << 2) | encode_base(c)) & _mask(k)


def decode(kmer: int, k: int) -> str:
    kmer = int(kmer)
    return "".join(_BASES[(kmer >> (2 * (k - 1 - i))) & 3] for i in range(k))


def encode(s, k: int | None = None) -> int:
    return first_kmer(s, len(s) if k is None else k)


def _as_bytes(read) -> bytes:
    if isinstance(read, str):
        return read.encode("ascii")
    return bytes(read)


def kmers_of_read(read, k: int) -> np.ndarray:
    """All valid k-mers of one read, left to right.

    Windows containing a non-ACGT byte are dropped; reads shorter than ``k``
    give an empty array.
    """
    check_k(k)
    return kernels.extract_kmers(_as_bytes(read), k)


def kmers_of_reads(reads: Iterable, k: int) -> np.ndarray:
    """Concatenated k-mers of many reads, in read order.

    Reads are joined with an ``N`` separator so no window spans two reads.
    """
    check_k(k)
    joined = b"N".join(_as_bytes(r) for r in reads)
    return kernels.extract_kmers(joined, k)


def mix64(kmers) -> np.ndarray:
    return kernels.mix64(np.ascontiguousarray(kmers, dtype=np.uint64))


def owner_pe(kmer, P: int):
    """Owner PE of one k-mer (int) or an array of k-mers (int64 array)."""
    if P < 1:
        raise ValueError("P must be >= 1")
    if np.ndim(kmer) == 0:
        arr = np.array([int(kmer)], dtype=np.uint64)
        return int(kernels.owner_pe(arr, P)[0])
    return kernels.owner_pe(np.ascontiguousarray(kmer, dtype=np.uint64), P)


def radix_sort(items) -> np.ndarray:
    """Sort 64-bit words ascending; ndarray inputs of dtype uint64 are sorted in place."""
    if isinstance(items, np.ndarray) and items.dtype == np.uint64 and items.flags.c_contiguous:
        return kernels.radix_sort(items)
    arr = np.array(items, dtype=np.uint64)
    return kernels.radix_sort(arr)


def sort_records(records: np.ndarray) -> np.ndarray:
    """Return ``records`` sorted by k-mer (stable in the count column)."""
    keys = np.ascontiguousarray(records["kmer"])
    vals = np.ascontiguousarray(records["count"])
    kernels.radix_sort_pairs(keys, vals)
    return make_records(keys, vals)


def make_records(kmers, counts) -> np.ndarray:
    out = np.empty(len(kmers), dtype=RECORD_DTYPE)
    out["kmer"] = kmers
    out["count"] = counts
    return out


def _require_sorted(keys: np.ndarray) -> None:
    if __debug__ and not kernels.is_sorted(keys):
        raise ValueError("input to accumulate must be sorted ascending")


def accumulate(sorted_kmers) -> np.ndarray:
    keys = np.ascontiguousarray(sorted_kmers, dtype=np.uint64)
    _require_sorted(keys)
    return make_records(*kernels.accumulate(keys))


def accumulate_pairs(sorted_records: np.ndarray) -> np.ndarray:
    keys = np.ascontiguousarray(sorted_records["kmer"])
    _require_sorted(keys)
    counts = np.ascontiguousarray(sorted_records["count"])
    return make_records(*kernels.accumulate_pairs(keys, counts))


def records_from_pairs(pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Build a record array from ``(kmer, count)`` tuples."""
    out = np.empty(len(pairs), dtype=RECORD_DTYPE)
    for i, (kmer, count) in enumerate(pairs):
        out[i] = (kmer, count)
    return out


def records_to_pairs(records: np.ndarray) -> list[tuple[int, int]]:
    return [(int(r["kmer"]), int(r["count"])) for r in records]
