# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: k-mer extraction, owner hashing, LSD radix sort, run-length accumulation.

Every function here has a numpy twin in :mod:`akount._fallback` with the same
signature and output; :mod:`akount.kernels` picks one at import.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, uint64_t, int64_t
from libc.string cimport memcpy, memset

cnp.import_array()

cdef uint8_t _CODE[256]
memset(_CODE, 4, 256)
_CODE[ord("A")] = 0
_CODE[ord("a")] = 0
_CODE[ord("C")] = 1
_CODE[ord("c")] = 1
_CODE[ord("G")] = 2
_CODE[ord("g")] = 2
_CODE[ord("T")] = 3
_CODE[ord("t")] = 3


cdef inline uint64_t _mix(uint64_t z) nogil:
    z ^= z >> 30
    z *= <uint64_t>0xBF58476D1CE4E5B9
    z ^= z >> 27
    z *= <uint64_t>0x94D049BB133111EB
    z ^= z >> 31
    return z


def extract_kmers(const uint8_t[::1] seq, int k):
    cdef Py_ssize_t n = seq.shape[0]
    cdef Py_ssize_t i, out_n = 0
    cdef uint64_t mask = ((<uint64_t>1) << (2 * k)) - 1
    cdef uint64_t kmer = 0
    cdef int filled = 0
    cdef uint8_t c
    out = np.empty(n - k + 1 if n >= k else 0, dtype=np.uint64)
    if n < k:
        return out
    cdef uint64_t[::1] o = out
    with nogil:
        for i in range(n):
            c = _CODE[seq[i]]
            if c > 3:
                filled = 0
                kmer = 0
                continue
            kmer = ((kmer << 2) | c) & mask
            if filled < k:
                filled += 1
            if filled == k:
                o[out_n] = kmer
                out_n += 1
    return out[:out_n]


def mix64(const uint64_t[::1] keys):
    cdef Py_ssize_t i, n = keys.shape[0]
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _mix(keys[i])
    return out


def owner_pe(const uint64_t[::1] keys, int64_t P):
    cdef Py_ssize_t i, n = keys.shape[0]
    cdef uint64_t p = <uint64_t>P
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = <int64_t>(_mix(keys[i]) % p)
    return out


cdef void _lsd_sort(uint64_t* keys, uint64_t* vals, uint64_t* kbuf, uint64_t* vbuf,
                    Py_ssize_t n) nogil:
    cdef Py_ssize_t hist[8][256]
    cdef Py_ssize_t pos[256]
    cdef Py_ssize_t i, total
    cdef int d, b, shift
    cdef uint64_t* src_k = keys
    cdef uint64_t* dst_k = kbuf
    cdef uint64_t* src_v = vals
    cdef uint64_t* dst_v = vbuf
    cdef uint64_t* tmp
    cdef uint64_t x
    memset(hist, 0, sizeof(hist))
    for i in range(n):
        x = keys[i]
        for d in range(8):
            hist[d][(x >> (8 * d)) & 0xFF] += 1
    for d in range(8):
        # all keys share this digit: the pass would be the identity permutation
        if hist[d][(keys[0] >> (8 * d)) & 0xFF] == n:
            continue
        total = 0
        for b in range(256):
            pos[b] = total
            total += hist[d][b]
        shift = 8 * d
        if vals != NULL:
            for i in range(n):
                b = (src_k[i] >> shift) & 0xFF
                dst_k[pos[b]] = src_k[i]
                dst_v[pos[b]] = src_v[i]
                pos[b] += 1
            tmp = src_v
            src_v = dst_v
            dst_v = tmp
        else:
            for i in range(n):
                b = (src_k[i] >> shift) & 0xFF
                dst_k[pos[b]] = src_k[i]
                pos[b] += 1
        tmp = src_k
        src_k = dst_k
        dst_k = tmp
    if src_k != keys:
        memcpy(keys, src_k, n * sizeof(uint64_t))
        if vals != NULL:
            memcpy(vals, src_v, n * sizeof(uint64_t))


def radix_sort(cnp.ndarray keys):
    """Sort a contiguous uint64 array in place."""
    cdef uint64_t[::1] k = keys
    cdef Py_ssize_t n = k.shape[0]
    if n < 2:
        return keys
    cdef uint64_t[::1] kb = np.empty(n, dtype=np.uint64)
    with nogil:
        _lsd_sort(&k[0], NULL, &kb[0], NULL, n)
    return keys


def radix_sort_pairs(cnp.ndarray keys, cnp.ndarray values):
    """Sort ``keys`` in place, permuting ``values`` alongside (stable)."""
    cdef uint64_t[::1] k = keys
    cdef uint64_t[::1] v = values
    cdef Py_ssize_t n = k.shape[0]
    if n < 2:
        return keys, values
    cdef uint64_t[::1] kb = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] vb = np.empty(n, dtype=np.uint64)
    with nogil:
        _lsd_sort(&k[0], &v[0], &kb[0], &vb[0], n)
    return keys, values


def accumulate(const uint64_t[::1] keys):
    cdef Py_ssize_t i, j = 0, n = keys.shape[0]
    out_k = np.empty(n, dtype=np.uint64)
    out_c = np.empty(n, dtype=np.uint64)
    if n == 0:
        return out_k, out_c
    cdef uint64_t[::1] ok = out_k
    cdef uint64_t[::1] oc = out_c
    with nogil:
        ok[0] = keys[0]
        oc[0] = 1
        for i in range(1, n):
            if keys[i] == ok[j]:
                oc[j] += 1
            else:
                j += 1
                ok[j] = keys[i]
                oc[j] = 1
    return out_k[:j + 1], out_c[:j + 1]


def accumulate_pairs(const uint64_t[::1] keys, const uint64_t[::1] counts):
    cdef Py_ssize_t i, j = 0, n = keys.shape[0]
    out_k = np.empty(n, dtype=np.uint64)
    out_c = np.empty(n, dtype=np.uint64)
    if n == 0:
        return out_k, out_c
    cdef uint64_t[::1] ok = out_k
    cdef uint64_t[::1] oc = out_c
    with nogil:
        ok[0] = keys[0]
        oc[0] = counts[0]
        for i in range(1, n):
            if keys[i] == ok[j]:
                oc[j] += counts[i]
            else:
                j += 1
                ok[j] = keys[i]
                oc[j] = counts[i]
    return out_k[:j + 1], out_c[:j + 1]


def is_sorted(const uint64_t[::1] keys):
    cdef Py_ssize_t i, n = keys.shape[0]
    cdef bint ok = True
    with nogil:
        for i in range(1, n):
            if keys[i] < keys[i - 1]:
                ok = False
                break
    return ok
