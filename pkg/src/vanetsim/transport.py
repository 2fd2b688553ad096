"""Simplified TCP with an application-limited (paced) source.

The application releases at most one new sequence number per send
interval, like a paced file transfer, so a flow's lifetime stretches
over the whole run instead of bursting at line rate. Everything else is
a small timeout-driven TCP: slow start below ssthresh (+1 per ACK),
congestion avoidance above it (+1/cwnd per ACK), and on timeout the
classic multiplicative decrease with a doubling, bounded retransmission
timer. There is no fast retransmit; recovery is timer-only.

Sequence accounting is a strict partition: every sequence number is in
exactly one of acked / in-flight / pending-retransmit / unsent, which an
attached auditor can verify after every state change.

The sink acknowledges every arriving data packet (duplicates included)
with a cumulative ACK carrying the highest in-order sequence received.
"""

import math
from dataclasses import dataclass

INITIAL_SSTHRESH = 32.0
INITIAL_RTO = 1.0
RTO_MIN = 0.2
RTO_MAX = 8.0


@dataclass(frozen=True)
class FlowConfig:
    flow: str
    src: int
    sink: int
    start_t: float
    send_interval: float
    data_packet_size: int = 512
    ack_size: int = 210
    max_packets: int = 2048

    def __post_init__(self):
        if self.src == self.sink:
            raise ValueError(f"flow {self.flow}: source equals sink ({self.src})")
        if not self.data_packet_size > self.ack_size > 0:
            raise ValueError(
                f"flow {self.flow}: need data size > ack size > 0, got "
                f"{self.data_packet_size}/{self.ack_size}"
            )
        if self.max_packets <= 0:
            raise ValueError(f"flow {self.flow}: max_packets must be positive")
        if self.send_interval <= 0:
            raise ValueError(f"flow {self.flow}: send_interval must be positive")


@dataclass
class DataPacket:
    flow: str
    seq: int
    size: int
    kind: str = "DATA"


@dataclass
class AckPacket:
    flow: str
    seq: int  # highest in-order data sequence received, -1 for none
    size: int
    kind: str = "ACK"


class TcpSource:
    def __init__(self, sched, config: FlowConfig, route_send, ledger=None, auditor=None):
        self.sched = sched
        self.config = config
        self.route_send = route_send
        self.ledger = ledger
        self.auditor = auditor
        self.cwnd = 1.0
        self.ssthresh = INITIAL_SSTHRESH
        self.rto = INITIAL_RTO
        self.next_seq = 0
        self.highest_acked = -1
        self.in_flight: dict[int, float] = {}  # seq -> last handoff time
        self.pending: list[int] = []  # timed-out seqs awaiting retransmission
        self.dup_acks = 0
        self.complete = False
        self._timer = None

    def start(self) -> None:
        self.sched.schedule(self.config.start_t, "tick", self.config.flow,
                            lambda: self._tick(0))

    # -- sending --------------------------------------------------------

    def _window_room(self) -> int:
        return int(self.cwnd) - len(self.in_flight)

    def _tick(self, k: int) -> None:
        if self.complete:
            return
        if k == 0:
            self._sample_cwnd()
        if self._window_room() >= 1:
            if self.pending:
                self._send(self.pending.pop(0))
            elif self.next_seq < self.config.max_packets:
                self._send(self.next_seq)
                self.next_seq += 1
        self._audit()
        nxt = self.config.start_t + (k + 1) * self.config.send_interval
        self.sched.schedule(nxt, "tick", self.config.flow, lambda: self._tick(k + 1))

    def _send(self, seq: int) -> None:
        now = self.sched.now
        self.in_flight[seq] = now
        if self.ledger is not None:
            self.ledger.on_data_handoff(self.config.flow, seq, now)
        if self._timer is None:
            self._arm_timer()
        self.route_send(
            DataPacket(self.config.flow, seq, self.config.data_packet_size),
            self.config.sink,
        )

    # -- timer ----------------------------------------------------------

    def _arm_timer(self) -> None:
        self._timer = self.sched.schedule(
            self.sched.now + self.rto, "rto", self.config.flow, self._on_timeout
        )

    def _cancel_timer(self) -> None:
        if self._timer is not None:
            self.sched.cancel(self._timer)
            self._timer = None

    def _on_timeout(self) -> None:
        self._timer = None
        if not self.in_flight or self.complete:
            return
        self.ssthresh = max(float(math.floor(self.cwnd / 2)), 2.0)
        self.cwnd = 1.0
        self._sample_cwnd()
        self.rto = min(max(self.rto * 2, RTO_MIN), RTO_MAX)
        self.pending = sorted(set(self.pending) | set(self.in_flight))
        self.in_flight.clear()
        self._send(self.pending.pop(0))
        self._audit()

    # -- receiving ------------------------------------------------------

    def on_ack(self, ack: int, now: float) -> None:
        if self.complete:
            return
        if ack <= self.highest_acked:
            self.dup_acks += 1
            return
        self.highest_acked = ack
        self.in_flight = {s: t for s, t in self.in_flight.items() if s > ack}
        self.pending = [s for s in self.pending if s > ack]
        self.rto = INITIAL_RTO
        if self.cwnd < self.ssthresh:
            self.cwnd += 1.0
        else:
            self.cwnd += 1.0 / self.cwnd
        self._sample_cwnd()
        self._cancel_timer()
        if ack == self.config.max_packets - 1:
            self.complete = True
            self._audit()
            return
        while self.pending and self._window_room() >= 1:
            self._send(self.pending.pop(0))
        if self.in_flight and self._timer is None:
            self._arm_timer()
        self._audit()

    # -- bookkeeping ------------------------------------------------------

    def _sample_cwnd(self) -> None:
        if self.ledger is not None:
            self.ledger.on_cwnd(self.config.flow, self.sched.now, self.cwnd)

    def _audit(self) -> None:
        if self.auditor is not None:
            self.auditor.check_source(self)


class TcpSink:
    def __init__(self, sched, config: FlowConfig, route_send, ledger=None):
        self.sched = sched
        self.config = config
        self.route_send = route_send
        self.ledger = ledger
        self.received: set[int] = set()
        self.highest_contiguous = -1

    def on_data(self, packet: DataPacket, now: float) -> None:
        if packet.seq not in self.received:
            self.received.add(packet.seq)
            while self.highest_contiguous + 1 in self.received:
                self.highest_contiguous += 1
            if self.ledger is not None:
                self.ledger.on_sink_delivery(
                    self.config.flow, packet.seq, packet.size, now
                )
        self.route_send(
            AckPacket(self.config.flow, self.highest_contiguous, self.config.ack_size),
            self.config.src,
        )
