"""Proactive distance-vector routing with destination sequence numbers.

Every node keeps a route to every destination it has heard of and
broadcasts its table on a fixed period (plus a one-off stagger so the
network does not fire in lockstep). Sequence numbers are minted by each
destination in even increments; a locally detected breakage marks the
route with the stored even sequence plus one, so odd always means
unreachable and a destination's next even number supersedes the bad
news everywhere.

Adoption rule: a row wins on greater sequence number, or on equal
sequence number with a strictly smaller metric. A newly adopted route
whose metric is worse than the one it replaces is damped: the table uses
it at once, but it is held out of outgoing updates (full dumps included)
until a settling deadline, since a better path with the same sequence
number usually arrives moments later.

Updates are full dumps when enough rows changed (or on a slow timer) and
incrementals otherwise. Only locally detected link breakage triggers an
immediate update, rate-limited per node; propagated bad news and fresh
sequence numbers ride the periodic schedule. Link breakage is detected
solely by unicast transmission failure; there are no beacons, so an idle
stale route can outlive its link by a long time.
"""

import math
from dataclasses import dataclass
from typing import Optional

from .radio import BROADCAST, Frame, RoutedPacket

INFINITE = math.inf


@dataclass(frozen=True)
class DsdvConfig:
    update_interval: float = 15.0
    full_dump_interval: float = 90.0
    settling_time: float = 6.0
    trigger_min_gap: float = 1.0
    full_dump_dirty_fraction: float = 0.5
    header_size: int = 24
    row_size: int = 12


@dataclass
class DsdvUpdate:
    sender: int
    kind: str  # "full" or "incremental"
    rows: list  # (dest, metric, dest_seq) sorted by dest


@dataclass
class DsdvEntry:
    dest: int
    next_hop: int
    metric: float
    seq: int
    install_time: float
    settling_deadline: Optional[float] = None

    def alive(self) -> bool:
        return self.seq % 2 == 0 and self.metric != INFINITE


class DsdvAgent:
    def __init__(self, sched, radio, node_id, config=None, deliver_up=None,
                 ledger=None, auditor=None):
        self.sched = sched
        self.radio = radio
        self.node_id = node_id
        self.config = config or DsdvConfig()
        self.deliver_up = deliver_up
        self.ledger = ledger
        self.auditor = auditor
        self.own_seq = 0
        self.table: dict[int, DsdvEntry] = {
            node_id: DsdvEntry(node_id, node_id, 0, 0, 0.0)
        }
        self.dirty: set[int] = set()
        self.last_full_dump = -INFINITE
        self._last_trigger = -INFINITE
        self._trigger_deferred = False
        self._first_update_at = 0.0
        radio.register(node_id, self.on_frame)

    def start(self, first_update_at: float) -> None:
        self._first_update_at = first_update_at
        self.sched.schedule(first_update_at, "dsdv-periodic", str(self.node_id),
                            lambda: self._periodic(0))

    # -- update emission -------------------------------------------------

    def _advertisable(self, now: float) -> list[int]:
        out = []
        for d in sorted(self.dirty):
            e = self.table[d]
            if e.settling_deadline is None or e.settling_deadline <= now:
                out.append(d)
        return out

    def _periodic(self, k: int) -> None:
        now = self.sched.now
        cfg = self.config
        self.own_seq += 2
        me = self.table[self.node_id]
        me.seq = self.own_seq
        self.dirty.add(self.node_id)
        adv = self._advertisable(now)
        full_due = (
            now - self.last_full_dump >= cfg.full_dump_interval
            or len(adv) > cfg.full_dump_dirty_fraction * len(self.table)
        )
        if full_due:
            dests = [
                d for d in sorted(self.table)
                if self.table[d].settling_deadline is None
                or self.table[d].settling_deadline <= now
            ]
            self.last_full_dump = now
            kind = "full"
        else:
            dests = adv
            kind = "incremental"
        self._broadcast(dests, kind)
        self.sched.schedule(
            self._first_update_at + (k + 1) * cfg.update_interval,
            "dsdv-periodic", str(self.node_id), lambda: self._periodic(k + 1),
        )

    def _broadcast(self, dests: list[int], kind: str) -> None:
        rows = []
        for d in dests:
            e = self.table[d]
            e.settling_deadline = None
            rows.append((d, e.metric, e.seq))
        self.dirty -= set(dests)
        size = self.config.header_size + self.config.row_size * len(rows)
        self.radio.transmit(
            Frame("DSDV", self.node_id, BROADCAST, size,
                  DsdvUpdate(self.node_id, kind, rows))
        )

    def _trigger(self, now: float) -> None:
        if now - self._last_trigger >= self.config.trigger_min_gap:
            self._emit_trigger(now)
        elif not self._trigger_deferred:
            self._trigger_deferred = True
            self.sched.schedule(
                self._last_trigger + self.config.trigger_min_gap,
                "dsdv-trigger", str(self.node_id), self._deferred_trigger,
            )

    def _deferred_trigger(self) -> None:
        self._trigger_deferred = False
        self._emit_trigger(self.sched.now)

    def _emit_trigger(self, now: float) -> None:
        dests = self._advertisable(now)
        if not dests:
            return
        self._last_trigger = now
        self._broadcast(dests, "incremental")

    # -- frame handling ----------------------------------------------------

    def on_frame(self, frame: Frame) -> None:
        now = self.sched.now
        if frame.kind == "DSDV":
            self._handle_update(frame.payload, now)
        else:
            self._handle_data(frame.payload, now)

    def _handle_update(self, update: DsdvUpdate, now: float) -> None:
        sender = update.sender
        for dest, metric, seq in update.rows:
            if dest == self.node_id:
                if seq > self.own_seq:
                    # someone is spreading stale or bad news about us;
                    # mint a fresh even number above it
                    self.own_seq = seq + 1 if seq % 2 else seq + 2
                    me = self.table[self.node_id]
                    me.seq = self.own_seq
                    self.dirty.add(self.node_id)
                    self._note_mutation(self.node_id)
                continue
            cand_metric = INFINITE if seq % 2 else metric + 1
            e = self.table.get(dest)
            if e is None:
                self.table[dest] = DsdvEntry(dest, sender, cand_metric, seq, now)
                self.dirty.add(dest)
                self._note_mutation(dest)
                continue
            if not (seq > e.seq or (seq == e.seq and cand_metric < e.metric)):
                continue
            worsened = e.alive() and cand_metric > e.metric
            e.next_hop = sender
            e.metric = cand_metric
            e.seq = seq
            e.install_time = now
            if seq % 2 == 0 and worsened:
                e.settling_deadline = now + self.config.settling_time
            else:
                e.settling_deadline = None
            self.dirty.add(dest)
            self._note_mutation(dest)

    def _handle_data(self, env: RoutedPacket, now: float) -> None:
        if env.dst == self.node_id:
            if env.packet.kind == "DATA" and self.ledger is not None:
                self.ledger.on_path(
                    env.packet.flow, [env.origin, *env.hops, self.node_id], now)
            self.deliver_up(env.packet, now)
            return
        env.hops.append(self.node_id)
        self._route_and_send(env, now)

    # -- data path ---------------------------------------------------------

    def send_packet(self, packet, dest: int) -> None:
        now = self.sched.now
        if dest == self.node_id:
            self.deliver_up(packet, now)
            return
        self._route_and_send(RoutedPacket(self.node_id, dest, packet), now)

    def route_lookup(self, dest: int) -> Optional[int]:
        e = self.table.get(dest)
        if e is not None and e.alive():
            return e.next_hop
        return None

    def _route_and_send(self, env: RoutedPacket, now: float) -> None:
        next_hop = self.route_lookup(env.dst)
        if next_hop is None:
            if env.packet.kind == "DATA" and self.ledger is not None:
                self.ledger.on_flow_drop(env.packet.flow, env.packet.seq, now)
            return
        frame = Frame(env.packet.kind, self.node_id, next_hop,
                      env.packet.size, env)
        self.radio.transmit(frame, on_fail=self._unicast_failed)

    def _unicast_failed(self, frame: Frame) -> None:
        # the packet is gone (the radio logged it); poison the routes
        self.handle_neighbor_loss(frame.dst, self.sched.now)

    def handle_neighbor_loss(self, dead: int, now: float) -> None:
        changed = False
        for dest in sorted(self.table):
            e = self.table[dest]
            if e.next_hop == dead and e.alive():
                e.seq += 1
                e.metric = INFINITE
                e.settling_deadline = None
                self.dirty.add(dest)
                self._note_mutation(dest)
                changed = True
        if changed:
            self._trigger(now)

    def _note_mutation(self, dest: int) -> None:
        if self.auditor is not None:
            self.auditor.on_route_mutation(self.node_id, dest)
