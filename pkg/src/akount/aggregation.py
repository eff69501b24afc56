"""Application-level aggregation layers on top of the engine's L0 conveyor.

Per PE, k-mers flow L3 -> L2 -> L1 -> L0:

* L3 collects ``c3`` k-mers, sorts and accumulates them, and splits the
  result: k-mers seen more than twice travel as ``(kmer, count)`` pairs in
  HEAVY packets, the rest as plain words in NORMAL packets.
* L2 keeps one HEAVY and one NORMAL buffer per destination and emits a packet
  when it holds ``c2`` words.
* L1 stages whole packets per destination and hands them to the engine once
  ``c1`` words have accumulated.

The receiving PE appends every packet's content to its local pair table.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .kmer_core import make_records
from .packets import HEAVY, MAX_WORDS, NORMAL, CorruptPacketError, Packet

HEAVY_THRESHOLD = 2


@dataclass(frozen=True)
class AggregationConfig:
    c1: int = 1024
    c2: int = 32
    c3: int = 10_000
    l3_enabled: bool = True
    l2_enabled: bool = True

    def __post_init__(self):
        if self.c1 < 1:
            raise ValueError("c1 must be >= 1")
        if self.c2 < 2 or self.c2 % 2 or self.c2 > MAX_WORDS:
            raise ValueError(f"c2 must be even and in [2, {MAX_WORDS - 1}]")
        if self.c3 < self.c2:
            raise ValueError("c3 must be >= c2")

    @property
    def normal_capacity(self) -> int:
        return self.c2 if self.l2_enabled else 1

    @property
    def heavy_capacity(self) -> int:
        return self.c2 if self.l2_enabled else 2

    def to_dict(self) -> dict:
        return asdict(self)


class PEAggregator:
    """Aggregation state owned by one PE."""

    def __init__(self, pe: int, P: int, engine, config: AggregationConfig | None = None):
        self.pe = pe
        self.P = P
        self.engine = engine
        self.config = config or AggregationConfig()
        self._l3 = np.empty(self.config.c3, dtype=np.uint64)
        self._l3_len = 0
        self._l2n: list[list[int]] = [[] for _ in range(P)]
        self._l2h: list[list[int]] = [[] for _ in range(P)]
        self._l1: list[list[Packet]] = [[] for _ in range(P)]
        self._l1_words = [0] * P
        self._t_keys: list[np.ndarray] = []
        self._t_counts: list[np.ndarray] = []
        self.stats = {"added": 0, "l3_flushes": 0, "heavy_records": 0,
                      "normal_words": 0, "packets": 0, "l1_handoffs": 0, "received": 0}

    # ------------------------------------------------------------------ send side
    def async_add(self, kmer: int) -> None:
        self.stats["added"] += 1
        if self.config.l3_enabled:
            self.add_to_l3(kmer)
        else:
            self.add_to_l2(kmer, 1)
        self.poll()

    def add_many(self, kmers: np.ndarray) -> None:
        """Batched :meth:`async_add`.

        Produces the same packets per destination and type as adding the
        k-mers one by one; packets for different destinations may reach L1 in
        a different interleaving.
        """
        kmers = np.ascontiguousarray(kmers, dtype=np.uint64)
        self.stats["added"] += len(kmers)
        if not self.config.l3_enabled:
            self._route_records(kmers, None)
            return
        c3 = self.config.c3
        pos = 0
        while pos < len(kmers):
            take = min(c3 - self._l3_len, len(kmers) - pos)
            self._l3[self._l3_len:self._l3_len + take] = kmers[pos:pos + take]
            self._l3_len += take
            pos += take
            if self._l3_len == c3:
                self._flush_l3()

    def poll(self) -> None:
        """Process the receive buffer once it has filled to ``c0`` words."""
        if self.engine.pending_words(self.pe) >= self.engine.c0:
            self.engine.progress(self.pe)

    def add_to_l3(self, kmer: int) -> None:
        self._l3[self._l3_len] = kmer
        self._l3_len += 1
        if self._l3_len == self.config.c3:
            self._flush_l3()

    def _flush_l3(self) -> None:
        if not self._l3_len:
            return
        buf = self._l3[:self._l3_len].copy()
        self._l3_len = 0
        self.stats["l3_flushes"] += 1
        kernels.radix_sort(buf)
        keys, counts = kernels.accumulate(buf)
        self._route_records(keys, counts)

    def add_to_l2(self, kmer: int, count: int) -> None:
        if count < 1:
            raise ValueError("count must be >= 1")
        p = int(kernels.owner_pe(np.array([kmer], dtype=np.uint64), self.P)[0])
        if count > HEAVY_THRESHOLD:
            buf = self._l2h[p]
            buf.append(int(kmer))
            buf.append(int(count))
            self.stats["heavy_records"] += 1
            if len(buf) >= self.config.heavy_capacity:
                self._emit_l2(p, HEAVY)
        else:
            buf = self._l2n[p]
            self.stats["normal_words"] += count
            for _ in range(count):
                buf.append(int(kmer))
                # checked per word so a count of 2 never overfills the packet
                if len(buf) >= self.config.normal_capacity:
                    self._emit_l2(p, NORMAL)

    def _route_records(self, keys: np.ndarray, counts: np.ndarray | None) -> None:
        owners = kernels.owner_pe(keys, self.P)
        if counts is None:
            self.stats["normal_words"] += len(keys)
            self._push_grouped(owners, keys, NORMAL)
            return
        heavy = counts > HEAVY_THRESHOLD
        light = ~heavy
        if light.any():
            reps = counts[light].astype(np.int64)
            words = np.repeat(keys[light], reps)
            self.stats["normal_words"] += len(words)
            self._push_grouped(np.repeat(owners[light], reps), words, NORMAL)
        if heavy.any():
            pairs = np.empty((int(heavy.sum()), 2), dtype=np.uint64)
            pairs[:, 0] = keys[heavy]
            pairs[:, 1] = counts[heavy]
            self.stats["heavy_records"] += len(pairs)
            self._push_grouped(owners[heavy], pairs, HEAVY)

    def _push_grouped(self, owners: np.ndarray, items: np.ndarray, kind: int) -> None:
        if len(owners) == 0:
            return
        order = np.argsort(owners, kind="stable")
        owners = owners[order]
        items = items[order]
        bounds = np.flatnonzero(np.diff(owners)) + 1
        starts = np.concatenate(([0], bounds))
        ends = np.concatenate((bounds, [len(owners)]))
        for s, e in zip(starts.tolist(), ends.tolist()):
            self._push_words(int(owners[s]), items[s:e].ravel(), kind)

    def _push_words(self, p: int, words: np.ndarray, kind: int) -> None:
        if kind == HEAVY:
            buf, cap = self._l2h[p], self.config.heavy_capacity
        else:
            buf, cap = self._l2n[p], self.config.normal_capacity
        pos = 0
        if buf:
            need = cap - len(buf)
            buf.extend(words[:need].tolist())
            pos = need
            if len(buf) < cap:
                return
            self._emit_l2(p, kind)
        n = len(words)
        while n - pos >= cap:
            self._send_packet(p, kind, words[pos:pos + cap])
            pos += cap
        if pos < n:
            buf.extend(words[pos:].tolist())

    def _emit_l2(self, p: int, kind: int) -> None:
        buf = self._l2h[p] if kind == HEAVY else self._l2n[p]
        if not buf:
            return
        body = np.array(buf, dtype=np.uint64)
        buf.clear()
        self._send_packet(p, kind, body)

    def _send_packet(self, p: int, kind: int, body: np.ndarray) -> None:
        self.stats["packets"] += 1
        self.add_to_l1(Packet.build(p, kind, body), p)

    def add_to_l1(self, packet: Packet, dest: int) -> None:
        self._l1[dest].append(packet)
        self._l1_words[dest] += len(packet.body)
        if self._l1_words[dest] >= self.config.c1:
            self._handoff_l1(dest)

    def _handoff_l1(self, dest: int) -> None:
        staged = self._l1[dest]
        if not staged:
            return
        self._l1[dest] = []
        self._l1_words[dest] = 0
        self.stats["l1_handoffs"] += 1
        for pkt in staged:
            self.engine.inject_packet(self.pe, pkt)

    def drain(self) -> None:
        """Flush every partially filled L3, L2 and L1 buffer of this PE."""
        self._flush_l3()
        for p in range(self.P):
            self._emit_l2(p, NORMAL)
            self._emit_l2(p, HEAVY)
        for p in range(self.P):
            self._handoff_l1(p)

    # ------------------------------------------------------------------ receive side
    def process_receive_buffer(self, packet: Packet) -> None:
        packet.validate()
        if packet.dest != self.pe:
            raise CorruptPacketError(f"packet for PE {packet.dest} delivered to PE {self.pe}")
        body = packet.body
        if packet.kind == HEAVY:
            self._t_keys.append(body[0::2])
            self._t_counts.append(body[1::2])
            self.stats["received"] += int(body[1::2].sum())
        else:
            self._t_keys.append(body)
            self._t_counts.append(np.ones(len(body), dtype=np.uint64))
            self.stats["received"] += len(body)

    def pair_table(self) -> np.ndarray:
        """Unsorted ``(kmer, count)`` records received so far."""
        if not self._t_keys:
            return make_records(np.empty(0, np.uint64), np.empty(0, np.uint64))
        return make_records(np.concatenate(self._t_keys), np.concatenate(self._t_counts))

    def local_counts(self) -> np.ndarray:
        """Phase 2: sort the pair table and merge duplicate k-mers."""
        if not self._t_keys:
            keys = np.empty(0, np.uint64)
            counts = np.empty(0, np.uint64)
        else:
            keys = np.concatenate(self._t_keys)
            counts = np.concatenate(self._t_counts)
        kernels.radix_sort_pairs(keys, counts)
        return make_records(*kernels.accumulate_pairs(keys, counts))

    def pending(self) -> dict:
        return {
            "l3": self._l3_len,
            "l2n": sum(map(len, self._l2n)),
            "l2h": sum(map(len, self._l2h)),
            "l1": sum(self._l1_words),
        }


def async_add(state: PEAggregator, kmer: int) -> None:
    state.async_add(kmer)


def add_to_l3(state: PEAggregator, kmer: int) -> None:
    state.add_to_l3(kmer)


def add_to_l2(state: PEAggregator, kmer: int, count: int) -> None:
    state.add_to_l2(kmer, count)


def add_to_l1(state: PEAggregator, packet: Packet, dest: int) -> None:
    state.add_to_l1(packet, dest)


def process_receive_buffer(state: PEAggregator, packet: Packet) -> None:
    state.process_receive_buffer(packet)


def drain(state: PEAggregator) -> None:
    state.drain()
