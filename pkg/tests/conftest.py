from collections import Counter

import numpy as np
import pytest

from akount import kernels
from akount.dataio import generate_genome, generate_reads

_TO_DIGITS = str.maketrans("ACGTacgt", "01230123")
_ACGT = set("ACGTacgt")


def oracle_counts(reads, k):
    """Independent histogram: string slicing, base-4 int parsing, a dict."""
    counts = Counter()
    for r in reads:
        s = r.decode() if isinstance(r, (bytes, bytearray)) else r
        for i in range(len(s) - k + 1):
            w = s[i:i + k]
            if set(w) <= _ACGT:
                counts[int(w.translate(_TO_DIGITS), 4)] += 1
    return dict(counts)


def records_dict(records):
    return dict(zip(records["kmer"].tolist(), records["count"].tolist()))


def make_reads(n, m, genome_len, seed, n_rate=0.0, vary=False):
    rng = np.random.default_rng(seed)
    genome = generate_genome(max(genome_len, m), seed)
    reads = generate_reads(genome, m, n, seed + 1)
    out = []
    for r in reads:
        r = bytearray(r)
        if vary:
            r = r[:int(rng.integers(max(1, m // 2), m + 1))]
        if n_rate:
            hits = rng.random(len(r)) < n_rate
            for i in np.flatnonzero(hits):
                r[i] = ord("N")
        out.append(bytes(r))
    return out


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def criterion():
    def record(number, name, passed, detail=""):
        _ACCEPTANCE.append((number, name, passed, detail))
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name}"
        if detail:
            line += f" ({detail})"
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE, key=lambda t: t[0]):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
