"""Deterministic in-process virtual-PE engine emulating a conveyor (L0) layer.

Each PE owns one send buffer per next-hop neighbour. Staged packets are moved
into the neighbour's receive queue by a PUT once a buffer holds ``c0`` payload
words, or when a barrier drains it. 2D/3D virtual HyperX topologies forward
transit packets dimension by dimension.
"""
from __future__ import annotations

import threading
from contextlib import nullcontext
from collections import deque
from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from .packets import HEADER_BYTES, WORD_BYTES, Packet

TOPOLOGIES = ("1d", "2d", "3d")
DEFAULT_C0 = 4096


def _iroot_ceil(P: int, r: int) -> int:
    x = max(1, round(P ** (1.0 / r)))
    while x ** r < P:
        x += 1
    while x > 1 and (x - 1) ** r >= P:
        x -= 1
    return x


def grid_dims(kind: str, P: int) -> tuple[int, ...]:
    """Near-cubic grid for ``P`` PEs, most significant dimension first.

    2D: ``c = ceil(sqrt(P))`` columns, ``r = ceil(P / c)`` rows, giving ``(r, c)``.
    3D: ``a = ceil(cbrt(P))`` planes, then the 2D rule on ``ceil(P / a)``.
    """
    kind = kind.lower()
    if kind == "1d":
        return (P,)
    if kind == "2d":
        c = _iroot_ceil(P, 2)
        return (-(-P // c), c)
    if kind == "3d":
        a = _iroot_ceil(P, 3)
        return (a,) + grid_dims("2d", -(-P // a))
    raise ValueError(f"unknown topology {kind!r}")


@dataclass(frozen=True)
class Topology:
    kind: str
    P: int
    dims: tuple[int, ...]

    @classmethod
    def build(cls, kind: str, P: int) -> Topology:
        if P < 1:
            raise ValueError("P must be >= 1")
        return cls(kind.lower(), P, grid_dims(kind, P))

    @property
    def max_hops(self) -> int:
        return len(self.dims)

    def coords(self, pe: int) -> tuple[int, ...]:
        out = []
        for d in reversed(self.dims):
            out.append(pe % d)
            pe //= d
        return tuple(reversed(out))

    def index(self, coords) -> int:
        idx = 0
        for c, d in zip(coords, self.dims):
            idx = idx * d + c
        return idx

    def next_hop(self, src: int, dst: int) -> int:
        """Dimension-order route: fix the least significant coordinate first.

        For 2D that is "move along the row to the destination column, then along
        the column". An intermediate that falls in the padded (absent) part of
        the grid is skipped in favour of the next differing dimension; one that
        exists always does, so routing stays within the hop bound.
        """
        if src == dst or self.kind == "1d":
            return dst
        s = list(self.coords(src))
        t = self.coords(dst)
        for axis in reversed(range(len(self.dims))):
            if s[axis] != t[axis]:
                cand = s.copy()
                cand[axis] = t[axis]
                hop = self.index(cand)
                if hop < self.P:
                    return hop
        raise AssertionError("unreachable: no present intermediate")

    def route(self, src: int, dst: int) -> list[int]:
        path = [src]
        while path[-1] != dst:
            path.append(self.next_hop(path[-1], dst))
        return path

    def neighbors(self, pe: int) -> list[int]:
        """PEs reachable in one hop (including ``pe``): one L0 buffer each."""
        if self.kind == "1d":
            return list(range(self.P))
        mine = self.coords(pe)
        out = []
        for q in range(self.P):
            diff = sum(a != b for a, b in zip(mine, self.coords(q)))
            if diff <= 1:
                out.append(q)
        return out


def route_next_hop(src: int, dst: int, topology: Topology) -> int:
    return topology.next_hop(src, dst)


@dataclass
class EngineMetrics:
    """Engine counters.

    ``payload_bytes`` and ``header_bytes`` are end-to-end volume of remote
    packets, counted once per packet at injection. ``hop_total`` counts every
    PE-to-PE traversal of a packet; ``forwarded_bytes`` is the extra volume
    moved by intermediate PEs. Self-addressed packets are delivered by direct
    call and counted only in ``local_words``.
    """
    P: int = 0
    barriers: int = 0
    collective_rounds: int = 0
    puts: int = 0
    packets: int = 0
    payload_bytes: int = 0
    header_bytes: int = 0
    hop_total: int = 0
    max_hops: int = 0
    forwarded: int = 0
    forwarded_bytes: int = 0
    local_words: int = 0
    max_recv_words: int = 0
    per_pe_received: list[int] = field(default_factory=list)

    @classmethod
    def zero(cls, P: int) -> EngineMetrics:
        return cls(P=P, per_pe_received=[0] * P)

    def to_dict(self) -> dict:
        return asdict(self)

    def load_imbalance(self) -> float:
        recv = np.asarray(self.per_pe_received, dtype=float)
        if recv.size == 0 or recv.mean() == 0:
            return 1.0
        return float(recv.max() / recv.mean())

    def copy(self) -> EngineMetrics:
        d = self.to_dict()
        d["per_pe_received"] = list(d["per_pe_received"])
        return EngineMetrics(**d)


Handler = Callable[[int, Packet], None]


class Engine:
    """P virtual PEs exchanging :class:`Packet` objects.

    ``handler(pe, packet)`` runs on the destination PE for every delivered
    packet; it may inject further packets. With ``parallel=True`` the engine
    takes locks so distinct PEs may call :meth:`inject` and :meth:`progress`
    from separate threads; calls for one PE must still come from one thread.
    """

    def __init__(self, P: int, topology: str = "1d", c0: int = DEFAULT_C0,
                 handler: Handler | None = None, parallel: bool = False):
        if c0 < 1:
            raise ValueError("c0 must be >= 1")
        self.P = P
        self.topology = Topology.build(topology, P)
        self.c0 = c0
        self.handler = handler
        self.parallel = parallel
        self.metrics = EngineMetrics.zero(P)
        # _send[pe][hop] -> list of (packet, hops_so_far); _send_words[pe][hop] -> payload words
        self._send: list[dict[int, list]] = [dict() for _ in range(P)]
        self._send_words: list[dict[int, int]] = [dict() for _ in range(P)]
        self._recv: list[deque] = [deque() for _ in range(P)]
        self._recv_words = [0] * P
        self._injected = 0
        self._retired = 0
        if parallel:
            self._recv_locks = [threading.Lock() for _ in range(P)]
            self._mlock = threading.Lock()
        else:
            self._recv_locks = [nullcontext()] * P
            self._mlock = nullcontext()

    def _deliver(self, pe: int, pkt: Packet) -> None:
        with self._mlock:
            self.metrics.per_pe_received[pe] += len(pkt.body)
            self._retired += 1
        if self.handler is not None:
            self.handler(pe, pkt)

    def inject(self, src: int, dst: int, words, type_tag: int = 0) -> None:
        """Send ``words`` (uint64 payload) from ``src`` to ``dst`` as one packet."""
        self.inject_packet(src, Packet.build(dst, type_tag, words))

    def inject_packet(self, src: int, pkt: Packet) -> None:
        dst = pkt.dest
        if not 0 <= dst < self.P:
            raise ValueError(f"destination {dst} outside [0, {self.P})")
        n = len(pkt.body)
        m = self.metrics
        with self._mlock:
            self._injected += 1
            if src == dst:
                m.local_words += n
            else:
                m.packets += 1
                m.payload_bytes += n * WORD_BYTES
                m.header_bytes += HEADER_BYTES
        if src == dst:
            # co-located delivery bypasses the conveyor entirely
            self._deliver(dst, pkt)
        else:
            self._stage(src, self.topology.next_hop(src, dst), pkt, 0)

    def _stage(self, pe: int, hop: int, pkt: Packet, hops: int) -> None:
        self._send[pe].setdefault(hop, []).append((pkt, hops))
        words = self._send_words[pe].get(hop, 0) + len(pkt.body)
        self._send_words[pe][hop] = words
        if words >= self.c0:
            self._put(pe, hop)

    def _put(self, pe: int, hop: int) -> None:
        batch = self._send[pe].pop(hop, None)
        words = self._send_words[pe].pop(hop, 0)
        if not batch:
            return
        batch = [(pkt, hops + 1) for pkt, hops in batch]
        with self._recv_locks[hop]:
            self._recv[hop].append((batch, words))
            self._recv_words[hop] += words
            depth = self._recv_words[hop]
        m = self.metrics
        with self._mlock:
            m.puts += 1
            m.hop_total += len(batch)
            m.max_hops = max(m.max_hops, max(h for _, h in batch))
            m.max_recv_words = max(m.max_recv_words, depth)

    def flush(self, pe: int) -> None:
        """PUT every partially filled send buffer of ``pe``."""
        for hop in list(self._send[pe]):
            self._put(pe, hop)

    def pending_words(self, pe: int) -> int:
        return self._recv_words[pe]

    def progress(self, pe: int) -> None:
        """Drain ``pe``'s receive queue: forward transit packets, handle the rest."""
        while True:
            with self._recv_locks[pe]:
                if not self._recv[pe]:
                    return
                batch, words = self._recv[pe].popleft()
                self._recv_words[pe] -= words
            for pkt, hops in batch:
                if pkt.dest == pe:
                    self._deliver(pe, pkt)
                    continue
                with self._mlock:
                    self.metrics.forwarded += 1
                    self.metrics.forwarded_bytes += pkt.nbytes
                self._stage(pe, self.topology.next_hop(pe, pkt.dest), pkt, hops)

    def in_flight(self) -> int:
        return self._injected - self._retired

    def global_barrier(self) -> None:
        """Run PEs round-robin until every injected packet has been handled.

        Quiescence is declared when two consecutive scans see the same
        balanced injected/retired counters and no buffered data. Counts as a
        single barrier however many scans it takes.
        """
        last = None
        while True:
            for pe in range(self.P):
                self.flush(pe)
            for pe in range(self.P):
                self.progress(pe)
            idle = all(not s for s in self._send) and all(not q for q in self._recv)
            state = (self._injected, self._retired)
            if idle and state[0] == state[1] and state == last:
                break
            last = state
        self.metrics.barriers += 1

    def all_to_all(self, outgoing, item_bytes: int = 16):
        """One synchronous many-to-many exchange.

        ``outgoing[src][dst]`` is an array or None; returns ``incoming[dst]``,
        the arrays received by ``dst`` in source order. Remote items are charged
        ``item_bytes`` each to ``payload_bytes``.
        """
        incoming: list[list[np.ndarray]] = [[] for _ in range(self.P)]
        m = self.metrics
        for src in range(self.P):
            for dst, arr in enumerate(outgoing[src]):
                if arr is None or len(arr) == 0:
                    continue
                incoming[dst].append(arr)
                m.per_pe_received[dst] += len(arr)
                if dst == src:
                    m.local_words += len(arr)
                else:
                    m.payload_bytes += len(arr) * item_bytes
                    m.packets += 1
                    m.hop_total += 1
        m.collective_rounds += 1
        return incoming

    def snapshot(self) -> EngineMetrics:
        return self.metrics.copy()


def create_engine(P: int, topology_kind: str = "1d", c0: int = DEFAULT_C0,
                  handler: Handler | None = None, parallel: bool = False) -> Engine:
    return Engine(P, topology_kind, c0, handler, parallel)


def metrics_snapshot(engine: Engine) -> EngineMetrics:
    return engine.snapshot()


def neighbor_count(topology: Topology, pe: int = 0) -> int:
    return len(topology.neighbors(pe))


def expected_neighbor_count(kind: str, P: int) -> int:
    """Closed-form one-hop neighbour count of PE 0 on a fully populated grid."""
    dims = grid_dims(kind, P)
    if kind == "1d":
        return P
    return sum(dims) - len(dims) + 1


__all__ = [
    "TOPOLOGIES", "Topology", "Engine", "EngineMetrics", "grid_dims", "create_engine",
    "route_next_hop", "metrics_snapshot", "neighbor_count", "expected_neighbor_count",
]
