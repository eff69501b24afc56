"""FASTA/FASTQ ingestion, synthetic dataset generation and count-file persistence.

Generators draw from numpy's Philox counter-based PRNG seeded with the
caller's 64-bit seed, so datasets are byte-identical across platforms.
"""
from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field
from typing import BinaryIO

import numpy as np

from .kmer_core import RECORD_DTYPE, check_k, decode, encode, make_records

COUNT_MAGIC = b"AKCT"
COUNT_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")

# published read counts of the synthetic recipe: reads of length 150 sampled from a 2**scale genome
SYNTHETIC_READS = {
    20: 349_500,
    21: 699_050,
    22: 1_398_100,
    23: 2_796_200,
    24: 5_592_400,
    25: 11_184_800,
    26: 22_369_600,
    27: 44_739_200,
    28: 89_478_450,
    29: 178_956_950,
    30: 357_913_900,
    31: 715_827_850,
    32: 1_431_655_750,
}
SYNTHETIC_READ_LEN = 150
DEFAULT_COVERAGE = 50.0

_ALPHABET = np.frombuffer(b"ACGT", dtype=np.uint8)


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CountFileError(ValueError):
    pass


@dataclass
class Dataset:
    reads: list[bytes]
    origin: dict = field(default_factory=dict)
    genome: bytes | None = None


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


# --------------------------------------------------------------------------- parsing

def _open_source(source) -> BinaryIO:
    if isinstance(source, (bytes, bytearray)):
        return io.BytesIO(bytes(source))
    if isinstance(source, str):
        return io.BytesIO(source.encode("ascii"))
    if isinstance(source, os.PathLike):
        return open(source, "rb")
    return source


def parse_reads(source, format: str = "auto") -> list[bytes]:
    """Return the sequences of a FASTA or FASTQ stream.

    ``source`` may be bytes, str, a path-like, or a binary file object. Headers
    and quality lines are discarded; multi-line FASTA records are joined.
    """
    stream = _open_source(source)
    close = isinstance(source, os.PathLike)
    try:
        lines = stream.read().splitlines()
    finally:
        if close:
            stream.close()
    if format == "auto":
        first = next((ln for ln in lines if ln.strip()), b"")
        if first.startswith(b">"):
            format = "fasta"
        elif first.startswith(b"@"):
            format = "fastq"
        elif not first:
            return []
        else:
            raise ParseError("cannot detect format: expected '>' or '@'", 1)
    if format == "fasta":
        return _parse_fasta(lines)
    if format == "fastq":
        return _parse_fastq(lines)
    raise ValueError(f"unknown format {format!r}")


def _parse_fasta(lines: list[bytes]) -> list[bytes]:
    reads: list[bytes] = []
    chunks: list[bytes] | None = None
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith(b">"):
            if chunks is not None:
                reads.append(b"".join(chunks))
            chunks = []
        elif chunks is None:
            raise ParseError("sequence data before first '>' header", lineno)
        else:
            chunks.append(line)
    if chunks is not None:
        reads.append(b"".join(chunks))
    return [r for r in reads if r]


def _parse_fastq(lines: list[bytes]) -> list[bytes]:
    reads = []
    i = 0
    n = len(lines)
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        if not lines[i].startswith(b"@"):
            raise ParseError("expected '@' record header", i + 1)
        if i + 3 >= n:
            raise ParseError("truncated FASTQ record", i + 1)
        seq = lines[i + 1].strip()
        if not lines[i + 2].startswith(b"+"):
            raise ParseError("missing '+' separator line", i + 3)
        qual = lines[i + 3].strip()
        if len(qual) != len(seq):
            raise ParseError("quality length does not match sequence length", i + 4)
        if seq:
            reads.append(seq)
        i += 4
    return reads


def write_fastq(reads, sink, quality: int = ord("I")) -> None:
    for i, r in enumerate(reads):
        sink.write(b"@r%d\n%s\n+\n%s\n" % (i, r, bytes([quality]) * len(r)))


def write_fasta(reads, sink) -> None:
    for i, r in enumerate(reads):
        sink.write(b">r%d\n%s\n" % (i, r))


# --------------------------------------------------------------------------- generators

def generate_genome(length: int, seed: int) -> bytes:
    if length < 1:
        raise ValueError("genome length must be >= 1")
    codes = _rng(seed).integers(0, 4, size=length, dtype=np.uint8)
    return _ALPHABET[codes].tobytes()


def generate_reads(genome: bytes, read_len: int, n_reads: int, seed: int) -> list[bytes]:
    """Sample error-free reads at uniformly random start positions."""
    if read_len > len(genome):
        raise ValueError("read length exceeds genome length")
    starts = _rng(seed).integers(0, len(genome) - read_len + 1, size=n_reads)
    return [genome[s:s + read_len] for s in starts.tolist()]


def reads_for_coverage(genome_len: int, read_len: int, coverage: float = DEFAULT_COVERAGE) -> int:
    return max(1, round(genome_len * coverage / read_len))


def synthetic_params(scale: int) -> tuple[int, int, int]:
    """(genome_len, read_len, n_reads) for the synthetic recipe at ``2**scale`` bases."""
    genome_len = 2 ** scale
    n = SYNTHETIC_READS.get(scale) or reads_for_coverage(genome_len, SYNTHETIC_READ_LEN)
    return genome_len, SYNTHETIC_READ_LEN, n


def generate_synthetic(scale: int, seed: int) -> Dataset:
    genome_len, m, n = synthetic_params(scale)
    genome = generate_genome(genome_len, seed)
    reads = generate_reads(genome, m, n, seed + 1)
    origin = {"generator": "synthetic", "scale": scale, "seed": seed,
              "genome_len": genome_len, "read_len": m, "n_reads": n}
    return Dataset(reads, origin, genome)


def generate_skewed(genome_len: int, repeat_motif: bytes, repeat_fraction: float,
                    read_len: int, n_reads: int, seed: int) -> Dataset:
    """Uniform genome whose leading ``repeat_fraction`` is the motif tiled end to end.

    With ``repeat_fraction == 0`` the genome is byte-identical to
    ``generate_genome(genome_len, seed)``.
    """
    if not 0.0 <= repeat_fraction <= 1.0:
        raise ValueError("repeat_fraction must lie in [0, 1]")
    motif = repeat_motif.encode("ascii") if isinstance(repeat_motif, str) else bytes(repeat_motif)
    if not motif or any(c not in b"ACGT" for c in motif.upper()):
        raise ValueError("motif must be a non-empty ACGT string")
    genome = bytearray(generate_genome(genome_len, seed))
    span = int(round(repeat_fraction * genome_len))
    if span:
        reps = -(-span // len(motif))
        genome[:span] = (motif.upper() * reps)[:span]
    genome = bytes(genome)
    reads = generate_reads(genome, read_len, n_reads, seed + 1)
    origin = {"generator": "skewed", "seed": seed, "genome_len": genome_len,
              "motif": motif.decode(), "repeat_fraction": repeat_fraction,
              "read_len": read_len, "n_reads": n_reads}
    return Dataset(reads, origin, genome)


# --------------------------------------------------------------------------- count files

def write_counts(records: np.ndarray, k: int, sink, text: bool = False) -> None:
    """Write sorted, deduplicated records as a binary CountFile or ACGT text lines."""
    check_k(k)
    records = np.asarray(records, dtype=RECORD_DTYPE)
    keys = records["kmer"]
    if len(keys) > 1 and not (keys[1:] > keys[:-1]).all():
        raise ValueError("records must be sorted and deduplicated")
    if text:
        for kmer, count in zip(keys.tolist(), records["count"].tolist()):
            sink.write(f"{decode(kmer, k)}\t{count}\n".encode("ascii"))
        return
    sink.write(_HEADER.pack(COUNT_MAGIC, COUNT_VERSION, k, len(records)))
    sink.write(records.astype(RECORD_DTYPE, copy=False).tobytes())


def read_counts(source, k: int | None = None) -> tuple[np.ndarray, int]:
    """Read a CountFile (binary or text); returns ``(records, k)``.

    Raises :class:`CountFileError` on a bad magic/version, truncated body, or
    when ``k`` is given and differs from the file's.
    """
    stream = _open_source(source)
    close = isinstance(source, os.PathLike)
    try:
        data = stream.read()
    finally:
        if close:
            stream.close()
    if data[:4] == COUNT_MAGIC:
        records, file_k = _decode_binary(data)
    else:
        records, file_k = _decode_text(data)
        if file_k is None:
            file_k = k
    if k is not None and file_k is not None and file_k != k:
        raise CountFileError(f"k mismatch: file has k={file_k}, expected {k}")
    return records, file_k


def _decode_binary(data: bytes):
    if len(data) < _HEADER.size:
        raise CountFileError("truncated header")
    magic, version, k, n = _HEADER.unpack_from(data)
    if version != COUNT_VERSION:
        raise CountFileError(f"unsupported count file version {version}")
    body = data[_HEADER.size:]
    if len(body) != n * RECORD_DTYPE.itemsize:
        raise CountFileError(f"header says {n} records, body holds {len(body) / 16:g}")
    return np.frombuffer(body, dtype=RECORD_DTYPE).copy(), k


def _decode_text(data: bytes):
    kmers, counts = [], []
    k = None
    for lineno, line in enumerate(data.decode("ascii").splitlines(), 1):
        if not line.strip():
            continue
        try:
            seq, count = line.split("\t")
        except ValueError:
            raise CountFileError(f"line {lineno}: expected '<kmer>\\t<count>'") from None
        if k is None:
            k = len(seq)
        elif len(seq) != k:
            raise CountFileError(f"line {lineno}: inconsistent k-mer length")
        kmers.append(encode(seq))
        counts.append(int(count))
    return make_records(np.array(kmers, dtype=np.uint64), np.array(counts, dtype=np.uint64)), k
