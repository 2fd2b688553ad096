"""On-demand routing: flooded route requests, unicast replies, error fanout.

Routes exist only while traffic wants them. A source floods a request;
the destination (or an intermediate node holding a strictly fresher
route) unicasts a reply back along the reverse entries the flood left
behind. A failed link invalidates every route through the dead next hop
and broadcasts an error notice for the destinations that carried recent
traffic; sources simply rediscover on their next send attempt. Discovery
retries double their wait, and after the last retry the buffered packets
are dropped.

Hop-count bookkeeping follows the convention that a reverse entry counts
hops from zero (a direct neighbor of the origin stores hop 0), so
reverse entries run one lower than the true edge count. Forward entries,
accumulated by replies hop by hop from the destination, carry true edge
counts.

Route entries are never removed: an invalidated or expired entry keeps
its sequence number as a floor so stale offers can never displace newer
knowledge. Link failures surface two ways, both without beacons: a
unicast to a node that left range fails synchronously, and any entry's
next hop is watched with an analytically computed link-break time.
"""

import math
from dataclasses import dataclass

from .radio import BROADCAST, Frame, RoutedPacket


@dataclass(frozen=True)
class AodvConfig:
    ttl: int = 35
    node_traversal: float = 0.04
    max_retries: int = 3
    route_lifetime: float = 3.0
    seen_expiry: float = 10.0
    rreq_size: int = 64
    rrep_size: int = 44
    rerr_base_size: int = 12
    rerr_per_dest: int = 8

    @property
    def reply_wait(self) -> float:
        # round trip across the whole TTL at one traversal per hop
        return 2.0 * self.ttl * self.node_traversal


@dataclass
class Rreq:
    origin: int
    origin_seq: int
    dest: int
    dest_seq_known: int  # -1 when the origin has no sequence on file
    rreq_id: int
    hop_count: int
    ttl: int


@dataclass
class Rrep:
    dest: int
    dest_seq: int
    origin: int
    hop_count: int


@dataclass
class Rerr:
    unreachable: list  # (dest, dest_seq) pairs, sorted by dest


@dataclass
class RouteEntry:
    dest: int
    next_hop: int
    hop_count: int
    dest_seq: int
    expires_at: float
    valid: bool
    last_used: float

    def usable(self, now: float) -> bool:
        return self.valid and now <= self.expires_at


class _Discovery:
    __slots__ = ("retries", "wait", "buffer", "timer")

    def __init__(self, wait, buffer, timer):
        self.retries = 0
        self.wait = wait
        self.buffer = buffer
        self.timer = timer


class AodvAgent:
    def __init__(self, sched, radio, node_id, config=None, deliver_up=None,
                 ledger=None, auditor=None):
        self.sched = sched
        self.radio = radio
        self.node_id = node_id
        self.config = config or AodvConfig()
        self.deliver_up = deliver_up
        self.ledger = ledger
        self.auditor = auditor
        self.table: dict[int, RouteEntry] = {}
        self.own_seq = 0
        self.next_rreq_id = 0
        self.seen: dict[tuple[int, int], float] = {}
        self.pending: dict[int, _Discovery] = {}
        self._watches: dict[int, tuple] = {}  # next_hop -> (plan version, handle)
        radio.register(node_id, self.on_frame)

    # -- transport entry point -------------------------------------------

    def send_packet(self, packet, dest: int) -> None:
        now = self.sched.now
        if dest == self.node_id:
            self.deliver_up(packet, now)
            return
        entry = self.table.get(dest)
        if entry is not None and entry.usable(now):
            self._forward(RoutedPacket(self.node_id, dest, packet), entry)
        else:
            self._buffer_and_discover(packet, dest)

    def route_lookup(self, dest: int):
        """Current usable next hop toward dest, or None."""
        entry = self.table.get(dest)
        if entry is not None and entry.usable(self.sched.now):
            return entry.next_hop
        return None

    def _record_path(self, env: RoutedPacket, now: float) -> None:
        if env.packet.kind == "DATA" and self.ledger is not None:
            self.ledger.on_path(
                env.packet.flow, [env.origin, *env.hops, self.node_id], now)

    def _buffer_and_discover(self, packet, dest: int) -> None:
        if dest in self.pending:
            self.pending[dest].buffer.append(packet)
            return
        now = self.sched.now
        cfg = self.config
        self._flood(dest)
        timer = self.sched.schedule(now + cfg.reply_wait, "rreq-timer",
                                    str(self.node_id), lambda: self._retry(dest))
        self.pending[dest] = _Discovery(cfg.reply_wait, [packet], timer)

    def _flood(self, dest: int) -> None:
        cfg = self.config
        self.own_seq += 1
        rid = self.next_rreq_id
        self.next_rreq_id += 1
        self.seen[(self.node_id, rid)] = self.sched.now + cfg.seen_expiry
        entry = self.table.get(dest)
        known = entry.dest_seq if entry is not None else -1
        rreq = Rreq(self.node_id, self.own_seq, dest, known, rid, 0, cfg.ttl)
        self.radio.transmit(Frame("RREQ", self.node_id, BROADCAST, cfg.rreq_size, rreq))

    def _retry(self, dest: int) -> None:
        disc = self.pending.get(dest)
        if disc is None:
            return
        disc.retries += 1
        if disc.retries >= self.config.max_retries:
            del self.pending[dest]
            if self.ledger is not None:
                for pkt in disc.buffer:
                    if pkt.kind == "DATA":
                        self.ledger.on_flow_drop(pkt.flow, pkt.seq, self.sched.now)
            return
        disc.wait *= 2
        self._flood(dest)
        disc.timer = self.sched.schedule(self.sched.now + disc.wait, "rreq-timer",
                                         str(self.node_id), lambda: self._retry(dest))

    # -- frame dispatch -----------------------------------------------------

    def on_frame(self, frame: Frame) -> None:
        now = self.sched.now
        if frame.kind == "RREQ":
            self._handle_rreq(frame.payload, frame.src, now)
        elif frame.kind == "RREP":
            self._handle_rrep(frame.payload, frame.src, now)
        elif frame.kind == "RERR":
            self._handle_rerr(frame.payload, frame.src, now)
        else:
            self._handle_data(frame.payload, now)

    def _handle_rreq(self, rreq: Rreq, prev_hop: int, now: float) -> None:
        key = (rreq.origin, rreq.rreq_id)
        expiry = self.seen.get(key)
        if expiry is not None and expiry > now:
            return
        self.seen[key] = now + self.config.seen_expiry
        if len(self.seen) > 512:
            self.seen = {k: e for k, e in self.seen.items() if e > now}
        self._update_route(rreq.origin, prev_hop, rreq.hop_count, rreq.origin_seq, now)
        if rreq.dest == self.node_id:
            self.own_seq += 1
            self._send_rrep(Rrep(self.node_id, self.own_seq, rreq.origin, 0), prev_hop)
            return
        entry = self.table.get(rreq.dest)
        if entry is not None and entry.usable(now) and entry.dest_seq > rreq.dest_seq_known:
            self._send_rrep(
                Rrep(rreq.dest, entry.dest_seq, rreq.origin, entry.hop_count), prev_hop
            )
            return
        if rreq.ttl <= 1:
            return
        fwd = Rreq(rreq.origin, rreq.origin_seq, rreq.dest, rreq.dest_seq_known,
                   rreq.rreq_id, rreq.hop_count + 1, rreq.ttl - 1)
        self.radio.transmit(
            Frame("RREQ", self.node_id, BROADCAST, self.config.rreq_size, fwd)
        )

    def _send_rrep(self, rrep: Rrep, to: int) -> None:
        self.radio.transmit(
            Frame("RREP", self.node_id, to, self.config.rrep_size, rrep),
            on_fail=self._control_fail,
        )

    def _handle_rrep(self, rrep: Rrep, prev_hop: int, now: float) -> None:
        self._update_route(rrep.dest, prev_hop, rrep.hop_count + 1, rrep.dest_seq, now)
        if rrep.origin == self.node_id:
            disc = self.pending.pop(rrep.dest, None)
            if disc is None:
                return
            self.sched.cancel(disc.timer)
            for pkt in disc.buffer:
                entry = self.table.get(rrep.dest)
                if entry is not None and entry.usable(now):
                    self._forward(RoutedPacket(self.node_id, rrep.dest, pkt), entry)
                elif pkt.kind == "DATA" and self.ledger is not None:
                    self.ledger.on_flow_drop(pkt.flow, pkt.seq, now)
            return
        rev = self.table.get(rrep.origin)
        if rev is None or not rev.usable(now):
            return
        self._touch(rev, now)
        self._send_rrep(Rrep(rrep.dest, rrep.dest_seq, rrep.origin, rrep.hop_count + 1),
                        rev.next_hop)

    def _handle_rerr(self, rerr: Rerr, prev_hop: int, now: float) -> None:
        affected = []
        for dest, seq in rerr.unreachable:
            e = self.table.get(dest)
            if e is not None and e.valid and e.next_hop == prev_hop:
                e.dest_seq = max(e.dest_seq, seq)
                e.valid = False
                self._note_mutation(dest)
                if now - e.last_used <= self.config.route_lifetime:
                    affected.append((dest, e.dest_seq))
        if affected:
            self._send_rerr(affected)

    def _handle_data(self, env: RoutedPacket, now: float) -> None:
        if env.dst == self.node_id:
            self._record_path(env, now)
            self.deliver_up(env.packet, now)
            return
        entry = self.table.get(env.dst)
        if entry is not None and entry.usable(now):
            env.hops.append(self.node_id)
            self._forward(env, entry)
            return
        # relay with no usable route: drop and report
        seq_hint = entry.dest_seq if entry is not None else 0
        self._send_rerr([(env.dst, seq_hint)])
        if env.packet.kind == "DATA" and self.ledger is not None:
            self.ledger.on_flow_drop(env.packet.flow, env.packet.seq, now)

    # -- forwarding and failure handling ---------------------------------

    def _forward(self, env: RoutedPacket, entry: RouteEntry) -> None:
        now = self.sched.now
        self._touch(entry, now)
        self._ensure_watch(entry.next_hop)
        frame = Frame(env.packet.kind, self.node_id, entry.next_hop,
                      env.packet.size, env)
        self.radio.transmit(frame, on_fail=self._data_fail)

    def _data_fail(self, frame: Frame) -> None:
        env = frame.payload
        self.handle_link_failure(frame.dst, self.sched.now)
        if env.origin == self.node_id:
            # our own packet: hold it and look for a fresh route
            self._buffer_and_discover(env.packet, env.dst)
        # a relay drops it; the radio already recorded the loss

    def _control_fail(self, frame: Frame) -> None:
        self.handle_link_failure(frame.dst, self.sched.now)

    def handle_link_failure(self, dead: int, now: float) -> None:
        affected = []
        for dest in sorted(self.table):
            e = self.table[dest]
            if e.valid and e.next_hop == dead:
                e.dest_seq += 1
                e.valid = False
                self._note_mutation(dest)
                if now - e.last_used <= self.config.route_lifetime:
                    affected.append((dest, e.dest_seq))
        if affected:
            self._send_rerr(affected)

    def _send_rerr(self, pairs) -> None:
        pairs = sorted(pairs)
        size = self.config.rerr_base_size + self.config.rerr_per_dest * len(pairs)
        self.radio.transmit(
            Frame("RERR", self.node_id, BROADCAST, size, Rerr(pairs))
        )

    # -- table upkeep ------------------------------------------------------

    def _touch(self, entry: RouteEntry, now: float) -> None:
        entry.last_used = now
        entry.expires_at = now + self.config.route_lifetime

    def _update_route(self, dest, next_hop, hops, seq, now) -> None:
        if dest == self.node_id:
            return
        e = self.table.get(dest)
        if e is None:
            self.table[dest] = RouteEntry(
                dest, next_hop, hops, seq, now + self.config.route_lifetime, True, now
            )
        elif seq > e.dest_seq or (
            seq == e.dest_seq and (not e.valid or hops < e.hop_count)
        ):
            e.next_hop = next_hop
            e.hop_count = hops
            e.dest_seq = seq
            e.valid = True
            e.expires_at = now + self.config.route_lifetime
            e.last_used = now
        else:
            return
        self._note_mutation(dest)
        self._ensure_watch(next_hop)

    def _note_mutation(self, dest: int) -> None:
        if self.auditor is not None:
            self.auditor.on_route_mutation(self.node_id, dest)

    # -- geometric link watches -------------------------------------------

    def _ensure_watch(self, hop: int) -> None:
        version = self.radio.mobility.plan_version
        w = self._watches.get(hop)
        if w is not None and w[0] == version:
            return
        if w is not None and w[1] is not None:
            self.sched.cancel(w[1])
        tb = self.radio.link_break_time(self.node_id, hop, self.sched.now)
        handle = None
        if tb != math.inf:
            handle = self.sched.schedule(tb, "linkwatch", str(self.node_id),
                                         lambda h=hop: self._watch_fired(h))
        self._watches[hop] = (version, handle)

    def _watch_fired(self, hop: int) -> None:
        now = self.sched.now
        self._watches.pop(hop, None)
        if not any(e.valid and e.next_hop == hop for e in self.table.values()):
            return
        tb = self.radio.link_break_time(self.node_id, hop, now)
        if tb <= now:
            self.handle_link_failure(hop, now)
        else:
            # motion plans changed since the watch was set; rearm
            version = self.radio.mobility.plan_version
            handle = self.sched.schedule(tb, "linkwatch", str(self.node_id),
                                         lambda h=hop: self._watch_fired(h))
            self._watches[hop] = (version, handle)
