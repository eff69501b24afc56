"""Numpy implementations of the kernel set, used when the compiled module is absent.

Signatures and outputs match :mod:`akount._ckernels` exactly.
"""
import numpy as np

_CODE = np.full(256, 4, dtype=np.uint8)
for _i, _c in enumerate(b"ACGT"):
    _CODE[_c] = _i
    _CODE[ord(chr(_c).lower())] = _i

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _as_u8(seq):
    if isinstance(seq, np.ndarray):
        return seq.astype(np.uint8, copy=False)
    return np.frombuffer(bytes(seq), dtype=np.uint8)


def extract_kmers(seq, k):
    codes = _CODE[_as_u8(seq)]
    n = codes.shape[0]
    if n < k:
        return np.empty(0, dtype=np.uint64)
    nwin = n - k + 1
    bad = (codes > 3).astype(np.int64)
    csum = np.concatenate(([0], np.cumsum(bad)))
    valid = (csum[k:] - csum[:nwin]) == 0
    c64 = codes.astype(np.uint64)
    kmer = np.zeros(nwin, dtype=np.uint64)
    for i in range(k):
        kmer <<= np.uint64(2)
        kmer |= c64[i:i + nwin] & np.uint64(3)
    return kmer[valid]


def mix64(keys):
    z = np.array(keys, dtype=np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def owner_pe(keys, P):
    return (mix64(keys) % np.uint64(P)).astype(np.int64)


def radix_sort(keys):
    # numpy's stable sort on uint8 is a counting sort, so each pass is one LSD digit
    if keys.shape[0] < 2:
        return keys
    work = keys.copy()
    for d in range(8):
        digit = ((work >> np.uint64(8 * d)) & np.uint64(0xFF)).astype(np.uint8)
        if (digit == digit[0]).all():
            continue
        work = work[np.argsort(digit, kind="stable")]
    keys[:] = work
    return keys


def radix_sort_pairs(keys, values):
    if keys.shape[0] < 2:
        return keys, values
    work_k = keys.copy()
    work_v = values.copy()
    for d in range(8):
        digit = ((work_k >> np.uint64(8 * d)) & np.uint64(0xFF)).astype(np.uint8)
        if (digit == digit[0]).all():
            continue
        perm = np.argsort(digit, kind="stable")
        work_k = work_k[perm]
        work_v = work_v[perm]
    keys[:] = work_k
    values[:] = work_v
    return keys, values


def accumulate(keys):
    keys = np.asarray(keys, dtype=np.uint64)
    n = keys.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint64)
    starts = np.flatnonzero(np.concatenate(([True], keys[1:] != keys[:-1])))
    counts = np.diff(np.append(starts, n)).astype(np.uint64)
    return keys[starts].copy(), counts


def accumulate_pairs(keys, counts):
    keys = np.asarray(keys, dtype=np.uint64)
    counts = np.asarray(counts, dtype=np.uint64)
    if keys.shape[0] == 0:
        return np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint64)
    starts = np.flatnonzero(np.concatenate(([True], keys[1:] != keys[:-1])))
    return keys[starts].copy(), np.add.reduceat(counts, starts).astype(np.uint64)


def is_sorted(keys):
    keys = np.asarray(keys)
    return bool(keys.shape[0] < 2 or (keys[1:] >= keys[:-1]).all())
