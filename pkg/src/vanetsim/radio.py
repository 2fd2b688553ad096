"""Unit-disk radio with per-node FIFO serialization.

A frame occupies its sender for size*8/bandwidth seconds; transmissions
queue behind the sender's previous frames. Range is a closed disk
evaluated at the moment the frame actually hits the air (its airtime
start), and delivery lands exactly transmission time plus a fixed
per-hop overhead later. There is no contention model: receivers are
never busy, only senders serialize.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .engine import Scheduler
from .mobility import MobilityModel, distance

BROADCAST = -1


@dataclass(frozen=True)
class RadioConfig:
    radio_range: float = 250.0
    bandwidth: float = 10_000_000.0
    per_hop_overhead: float = 50e-6


@dataclass
class RoutedPacket:
    """Network-layer envelope a frame carries hop by hop."""

    origin: int
    dst: int
    packet: object
    hops: list = field(default_factory=list)  # relay nodes, in forwarding order

    @property
    def flow(self):
        return self.packet.flow

    @property
    def seq(self):
        return self.packet.seq


@dataclass
class Frame:
    kind: str
    src: int
    dst: int
    size: int
    payload: object = None
    sent_at: Optional[float] = None
    trace_id: Optional[int] = None

    def airtime(self, bandwidth: float) -> float:
        return self.size * 8 / bandwidth


class RadioMedium:
    def __init__(
        self,
        sched: Scheduler,
        mobility: MobilityModel,
        config: Optional[RadioConfig] = None,
    ):
        self.sched = sched
        self.mobility = mobility
        self.config = config or RadioConfig()
        self._receivers: dict[int, Callable[[Frame], None]] = {}
        self._busy_until: dict[int, float] = {}
        self.tap = None

    def register(self, node_id: int, on_receive: Callable[[Frame], None]) -> None:
        self._receivers[node_id] = on_receive
        self._busy_until.setdefault(node_id, 0.0)

    def in_range(self, a: int, b: int, t: float) -> bool:
        d = distance(self.mobility.position_at(a, t), self.mobility.position_at(b, t))
        return d <= self.config.radio_range

    def neighbors(self, node_id: int, t: float) -> list[int]:
        return [
            other
            for other in sorted(self._receivers)
            if other != node_id and self.in_range(node_id, other, t)
        ]

    def transmit(self, frame: Frame, on_fail: Optional[Callable[[Frame], None]] = None):
        """Queue a frame on the sender's FIFO.

        The range check and (for unicast) the failure callback run at the
        frame's airtime start, which is now unless the sender is busy.
        """
        now = self.sched.now
        start = max(now, self._busy_until.get(frame.src, 0.0))
        self._busy_until[frame.src] = start + frame.airtime(self.config.bandwidth)
        if start <= now:
            self._launch(frame, on_fail)
        else:
            self.sched.schedule(
                start, "tx", str(frame.src), lambda: self._launch(frame, on_fail)
            )

    def _launch(self, frame: Frame, on_fail) -> None:
        now = self.sched.now
        frame.sent_at = now
        if self.tap is not None:
            self.tap.on_send(frame, now)
        deliver_at = now + frame.airtime(self.config.bandwidth) + self.config.per_hop_overhead
        if frame.dst == BROADCAST:
            targets = self.neighbors(frame.src, now)
            if not targets:
                if self.tap is not None:
                    self.tap.on_loss(frame, "no-neighbors", now)
                return
            for target in targets:
                self._schedule_delivery(frame, target, deliver_at)
        else:
            if frame.dst in self._receivers and self.in_range(frame.src, frame.dst, now):
                self._schedule_delivery(frame, frame.dst, deliver_at)
            else:
                if self.tap is not None:
                    self.tap.on_loss(frame, "out-of-range", now)
                if on_fail is not None:
                    on_fail(frame)

    def _schedule_delivery(self, frame: Frame, target: int, deliver_at: float) -> None:
        def deliver():
            if self.tap is not None:
                self.tap.on_delivery(frame, target, self.sched.now)
            self._receivers[target](frame)

        self.sched.schedule(deliver_at, "rx", str(target), deliver)

    def link_break_time(self, a: int, b: int, from_t: float) -> float:
        """Earliest time >= from_t at which a and b are out of range.

        Solved analytically from the two motion plans: within each span of
        constant velocities the squared distance is quadratic in time, so
        the first upward crossing of range**2 is a closed-form root.
        Returns from_t if already out of range, math.inf if never.
        """
        r2 = self.config.radio_range**2
        pa = self.mobility.position_at(a, from_t)
        pb = self.mobility.position_at(b, from_t)
        if (pa[0] - pb[0]) ** 2 + (pa[1] - pb[1]) ** 2 > r2:
            return from_t

        horizon = from_t
        for node in (a, b):
            for leg in self.mobility.legs(node):
                horizon = max(horizon, leg.arrival_t)
        horizon += 1.0
        edges = sorted(
            set(
                self.mobility.motion_breakpoints(a, from_t, horizon)
                + self.mobility.motion_breakpoints(b, from_t, horizon)
            )
        )
        starts = [from_t] + edges
        for i, seg_start in enumerate(starts):
            seg_len = (starts[i + 1] - seg_start) if i + 1 < len(starts) else math.inf
            t_hit = self._segment_break(a, b, seg_start, seg_len, r2)
            if t_hit is not None:
                return t_hit
        return math.inf

    def _segment_break(self, a, b, seg_start, seg_len, r2) -> Optional[float]:
        pa = self.mobility.position_at(a, seg_start)
        pb = self.mobility.position_at(b, seg_start)
        va = self.mobility.velocity_at(a, seg_start)
        vb = self.mobility.velocity_at(b, seg_start)
        dx, dy = pa[0] - pb[0], pa[1] - pb[1]
        vx, vy = va[0] - vb[0], va[1] - vb[1]
        qa = vx * vx + vy * vy
        qb = 2 * (dx * vx + dy * vy)
        qc = dx * dx + dy * dy - r2
        if qc > 0:
            return seg_start
        if qa == 0.0:
            return None
        disc = qb * qb - 4 * qa * qc
        if disc < 0:
            return None
        tau = (-qb + math.sqrt(disc)) / (2 * qa)
        if tau < 0 or tau > seg_len:
            return None
        if tau == 0.0 and qb <= 0:
            # touching the boundary while closing in is not a break
            return None
        return seg_start + tau
