import csv
import io
import math
from collections import OrderedDict

import pytest
from hypothesis import given
from hypothesis import strategies as st

from akount import model
from akount.model import MachineParams, WorkloadParams


def test_default_machine_values():
    m = model.DEFAULT_MACHINE
    assert (m.c_node, m.beta_mem, m.Z, m.L, m.beta_link) == (121.9e9, 46.9e9, 38e6, 64, 12.5e9)
    with pytest.raises(ValueError):
        MachineParams(beta_link=0)


def test_synthetic30_terms():
    w = model.synthetic_workload(30, P=32)
    assert w.N == 357_913_900 * 120
    c1, a1, e1 = model.phase1_costs(w)
    c2, a2 = model.phase2_costs(w)
    for got, want in zip((c1, a1, e1, c2, a2), (0.01101, 0.2647, 1.718, 0.0881, 1.8315)):
        assert got == pytest.approx(want, rel=2e-3)


def test_hand_computed_small_case():
    mch = MachineParams(c_node=1.0, beta_mem=2.0, Z=1.0, L=8.0, beta_link=4.0)
    w = WorkloadParams(n=2, m=5, k=3, P=1, W=64)  # N = 6
    c1, a1, e1 = model.phase1_costs(w, mch)
    assert c1 == 6
    assert a1 == pytest.approx((10 / 8 + 48 / 8) * 8 / 2)
    assert e1 == 6 * 64 / (4 * 4)
    c2, a2 = model.phase2_costs(w, mch)
    assert c2 == 48
    assert a2 == pytest.approx((1 + 48 / 8) * 8 * 8 / 2)
    cost = model.total_time(w, mch, "sum")
    assert cost.T_total == pytest.approx(max(c1, a1 + e1) + max(c2, a2))


workloads = st.builds(WorkloadParams, n=st.integers(1, 10**9), m=st.integers(31, 250),
                      k=st.just(31), P=st.integers(1, 4096))


@given(workloads)
def test_max_never_exceeds_sum(w):
    assert model.total_time(w, mode="max").T_total <= model.total_time(w, mode="sum").T_total


@given(workloads)
def test_shares_sum_to_one(w):
    shares = model.total_time(w).shares
    assert math.isclose(sum(shares.values()), 1.0)


@given(workloads)
def test_time_decreases_with_nodes(w):
    t = model.total_time(w).T_total
    assert model.total_time(w.with_nodes(w.P * 2)).T_total < t


def test_strong_scaling_limit():
    w = model.synthetic_workload(30, P=1)
    t1 = model.total_time(w).T_total
    tp = model.total_time(w.with_nodes(256)).T_total
    # every term is proportional to 1/P except the tiny constant in phase 2
    assert t1 / tp == pytest.approx(256, rel=1e-6)


def test_compute_share_small_on_synthetic():
    for scale in (20, 25, 30, 32):
        for P in (1, 32, 256):
            assert model.total_time(model.synthetic_workload(scale, P)).shares["compute"] < 0.05


def test_modes_and_errors():
    w = model.synthetic_workload(24, P=4)
    with pytest.raises(ValueError):
        model.total_time(w, mode="avg")
    with pytest.raises(ValueError):
        WorkloadParams(n=1, m=10, k=31)


def lru_misses(trace, lines):
    cache, misses = OrderedDict(), 0
    for addr in trace:
        if addr in cache:
            cache.move_to_end(addr)
        else:
            misses += 1
            cache[addr] = None
            if len(cache) > lines:
                cache.popitem(last=False)
    return misses


def test_phase1_misses_match_lru_simulation():
    # stream the reads byte by byte and append one 8-byte k-mer per window
    n, m, k, L = 40, 100, 31, 64
    w = WorkloadParams(n=n, m=m, k=k, P=1)
    mch = MachineParams(Z=4096, L=L)
    trace, out_base, produced = [], 1 << 40, 0
    for r in range(n):
        for i in range(m):
            trace.append((r * m + i) // L)
            if i >= k - 1:
                trace.append((out_base + 8 * produced) // L)
                produced += 1
    assert produced == w.N
    simulated = lru_misses(trace, int(mch.Z // L))
    predicted = model.predicted_cache_misses(w, mch)[0]
    assert predicted == pytest.approx(simulated, rel=0.01)


def test_csv_output():
    w = model.synthetic_workload(30, P=32)
    rows = [model.model_row("s30", w, model.DEFAULT_MACHINE, md) for md in model.MODES]
    text = model.write_csv(rows)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["mode"] for r in rows] == ["sum", "max"]
    assert list(rows[0]) == model.CSV_COLUMNS
    assert float(rows[0]["share_internode"]) == pytest.approx(0.439, abs=0.01)
