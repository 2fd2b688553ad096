"""Wires mobility, radio, routing agents, and transport flows into one run.

The assembly order is fixed (nodes ascending, then flows in the order
given) and every random draw comes from one seeded generator, so a
(scenario, seed) pair always produces the same event sequence and the
same trace, byte for byte.
"""

from dataclasses import dataclass

from .aodv import AodvAgent
from .dsdv import DsdvAgent
from .engine import Scheduler, seeded_rng
from .metrics import MetricsLedger
from .mobility import FieldConfig, MobilityModel
from .radio import RadioMedium
from .transport import TcpSink, TcpSource
from .validation import RouteAuditor, TransportAuditor

PROTOCOLS = ("AODV", "DSDV")

# spread of the one-off random delay before a node's first proactive
# table broadcast; keeps the network from updating in lockstep
DSDV_STAGGER_MAX = 5.0


@dataclass(frozen=True)
class Motion:
    """A straight constant-speed move to start at a given time."""

    node: int
    start_t: float
    dest: tuple
    speed: float


class Simulation:
    def __init__(self, *, positions, protocol, flows=(), motions=(), seed=1,
                 field=None, radio_config=None, aodv_config=None,
                 dsdv_config=None, dsdv_stagger_max=DSDV_STAGGER_MAX,
                 waypoint=None, auditing=False):
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")
        self.protocol = protocol
        self.seed = seed
        self.sched = Scheduler()
        self.mobility = MobilityModel(field)
        self.radio = RadioMedium(self.sched, self.mobility, radio_config)
        self.ledger = MetricsLedger()
        self.radio.tap = self.ledger
        self.agents = {}
        self.route_auditor = RouteAuditor(
            self.agents, check_parity=(protocol == "DSDV")) if auditing else None
        self.transport_auditor = TransportAuditor() if auditing else None

        for node in sorted(positions):
            x, y = positions[node]
            self.mobility.add_node(node, x, y)
            if protocol == "AODV":
                agent = AodvAgent(
                    self.sched, self.radio, node, config=aodv_config,
                    deliver_up=self._deliver_for(node), ledger=self.ledger,
                    auditor=self.route_auditor)
            else:
                agent = DsdvAgent(
                    self.sched, self.radio, node, config=dsdv_config,
                    deliver_up=self._deliver_for(node), ledger=self.ledger,
                    auditor=self.route_auditor)
            self.agents[node] = agent

        self.rng = seeded_rng(seed)
        if protocol == "DSDV":
            for node in sorted(self.agents):
                self.agents[node].start(self.rng.uniform(0.0, dsdv_stagger_max))

        self.sources = {}
        self.sinks = {}
        for cfg in flows:
            self.sources[cfg.flow] = TcpSource(
                self.sched, cfg, self.agents[cfg.src].send_packet,
                ledger=self.ledger, auditor=self.transport_auditor)
            self.sinks[cfg.flow] = TcpSink(
                self.sched, cfg, self.agents[cfg.sink].send_packet,
                ledger=self.ledger)
            self.sources[cfg.flow].start()

        self.motions = tuple(motions)
        for motion in self.motions:
            self.sched.schedule(motion.start_t, "motion", str(motion.node),
                                lambda m=motion: self._apply_motion(m))

        # nodes without a script roam waypoint-to-waypoint when asked
        self.waypoint = waypoint
        if waypoint is not None:
            scripted = {m.node for m in self.motions}
            pause = waypoint[2]
            for node in sorted(set(positions) - scripted):
                self.sched.schedule(pause, "waypoint", str(node),
                                    lambda n=node: self._next_waypoint(n))

        # initial state line for every node, in id order; a parked node
        # reports its own position as its destination
        for node in sorted(positions):
            pos = self.mobility.position_at(node, 0.0)
            self.ledger.on_motion_state(0.0, node, pos, pos, 0.0)

    def _deliver_for(self, node):
        def deliver(packet, now):
            if packet.kind == "DATA":
                self.sinks[packet.flow].on_data(packet, now)
            else:
                self.sources[packet.flow].on_ack(packet.seq, now)
        return deliver

    def _apply_motion(self, motion: Motion) -> None:
        now = self.sched.now
        self.mobility.set_motion(motion.node, motion.dest, motion.speed, now)
        pos = self.mobility.position_at(motion.node, now)
        self.ledger.on_motion_state(now, motion.node, pos,
                                    motion.dest, motion.speed)

    def _next_waypoint(self, node: int) -> None:
        now = self.sched.now
        v_min, v_max, pause = self.waypoint
        dest, speed = self.mobility.random_waypoint_next(self.rng, v_min, v_max)
        arrival = self.mobility.set_motion(node, dest, speed, now)
        pos = self.mobility.position_at(node, now)
        self.ledger.on_motion_state(now, node, pos, dest, speed)
        self.sched.schedule(arrival + pause, "waypoint", str(node),
                            lambda: self._next_waypoint(node))

    def run(self, until: float) -> "Simulation":
        self.sched.run_until(until)
        return self
