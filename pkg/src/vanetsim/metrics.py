"""Observation layer: delivery ledger, windowed metrics, trace formats.

The ledger hangs off the radio as a tap and off the transport layer as a
set of notification hooks. It never schedules events, so enabling it
cannot change simulation behaviour. Series builders are pure functions
over the collected records and may be called repeatedly.

Windowed series tile [0, duration) with half-open windows [kW, (k+1)W)
and attribute each window's value to the window's end time. Throughput
counts transport payload bits only; destination bandwidth counts every
frame bit delivered to a node, control traffic included. Jitter is the
population standard deviation of the delays inside one window, emitted
only for windows holding at least two deliveries.

Two text formats live here as well: mobility lines
(``M <t> <node> (<x>, <y>, <z>), (<dest_x>, <dest_y>), <speed>``) and
two-column plot series. Packet events in the combined trace use a
columnar ``s|r|l <t> <class> <id> <src> <dst> <size>`` form.
"""

import math
import re
import statistics
from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional


@dataclass
class PacketRecord:
    """One radio-level frame outcome (per hop, not end to end)."""

    flow: str
    seq: int
    size: int
    src: int
    dst: int
    sent_at: float
    received_at: Optional[float]  # None when the frame was lost


@dataclass
class MetricSeries:
    points: list
    unit: str


class TraceFormatError(ValueError):
    pass


def _nudge_ties(points):
    """Shift repeated x-values forward by 1 ns so plots stay functions."""
    out = []
    prev = None
    for t, v in points:
        if prev is not None and t <= prev:
            t = prev + 1e-9
        out.append((t, v))
        prev = t
    return out


class MetricsLedger:
    def __init__(self):
        self.records: list[PacketRecord] = []
        self.trace_lines: list[str] = []
        self.motion_records = []
        self._next_frame_id = 0
        self._handoffs: dict[tuple[str, int], list[float]] = {}
        self._deliveries: dict[str, list] = {}  # flow -> [(t, delay, seq, bits)]
        self._seen: set[tuple[str, int]] = set()
        self._drops: dict[str, int] = {}
        self._cwnd: dict[str, list] = {}
        self._paths: dict[str, list] = {}  # flow -> [(t, node chain)]

    # -- radio tap ---------------------------------------------------

    def on_send(self, frame, t: float) -> None:
        if frame.trace_id is None:
            frame.trace_id = self._next_frame_id
            self._next_frame_id += 1
        self._packet_line("s", t, frame, frame.dst)

    def on_delivery(self, frame, receiver: int, t: float) -> None:
        flow, seq = self._frame_tag(frame)
        self.records.append(
            PacketRecord(flow, seq, frame.size, frame.src, receiver, frame.sent_at, t)
        )
        self._packet_line("r", t, frame, receiver)

    def on_loss(self, frame, reason: str, t: float) -> None:
        flow, seq = self._frame_tag(frame)
        self.records.append(
            PacketRecord(flow, seq, frame.size, frame.src, frame.dst, t, None)
        )
        self._packet_line("l", t, frame, frame.dst)
        if frame.kind == "DATA" and flow != "DATA":
            self._drops[flow] = self._drops.get(flow, 0) + 1

    def _frame_tag(self, frame):
        flow = getattr(frame.payload, "flow", frame.kind)
        seq = getattr(frame.payload, "seq", None)
        if seq is None:
            seq = frame.trace_id if frame.trace_id is not None else 0
        return flow, seq

    def _packet_line(self, op, t, frame, dst) -> None:
        dst_txt = "*" if dst == -1 else str(dst)
        self.trace_lines.append(
            f"{op} {t:.7f} {frame.kind} {frame.trace_id} {frame.src} {dst_txt} {frame.size}"
        )

    # -- transport hooks ----------------------------------------------

    def on_data_handoff(self, flow: str, seq: int, t: float) -> None:
        self._handoffs.setdefault((flow, seq), []).append(t)

    def on_sink_delivery(self, flow: str, seq: int, size: int, t: float) -> bool:
        """Record an end-to-end arrival; returns False for duplicates.

        Delay is measured from the latest handoff of this sequence that
        precedes the arrival, so a retransmitted packet is charged for
        the attempt that actually got through.
        """
        if (flow, seq) in self._seen:
            return False
        self._seen.add((flow, seq))
        handoffs = self._handoffs.get((flow, seq), [])
        i = bisect_right(handoffs, t) - 1
        delay = t - handoffs[i] if i >= 0 else 0.0
        self._deliveries.setdefault(flow, []).append((t, delay, seq, size * 8))
        return True

    def on_flow_drop(self, flow: str, seq: int, t: float) -> None:
        self._drops[flow] = self._drops.get(flow, 0) + 1

    def on_cwnd(self, flow: str, t: float, value: float) -> None:
        self._cwnd.setdefault(flow, []).append((t, value))

    def on_path(self, flow: str, chain: list, t: float) -> None:
        """Note the node chain a data packet followed, skipping repeats."""
        chain = tuple(chain)
        seen = self._paths.setdefault(flow, [])
        if not seen or seen[-1][1] != chain:
            seen.append((t, chain))

    def paths_taken(self) -> dict:
        """Per-flow history of distinct forwarding chains, with timestamps."""
        return {flow: list(chains) for flow, chains in self._paths.items()}

    def path_log_lines(self) -> list[str]:
        lines = []
        for flow in sorted(self._paths):
            for t, chain in self._paths[flow]:
                lines.append(f"{t:.7f} {flow} " + " ".join(str(n) for n in chain))
        return lines

    # -- mobility hook -------------------------------------------------

    def on_motion_state(self, t, node, pos, dest, speed) -> None:
        record = (t, node, (pos[0], pos[1], 0.0), dest, speed)
        self.motion_records.append(record)
        self.trace_lines.append(format_motion_line(*record))

    # -- series builders ------------------------------------------------

    def _windows(self, duration: float, window: float) -> int:
        return int(math.ceil(duration / window))

    def throughput_series(self, flow, duration, window=1.0) -> MetricSeries:
        n = self._windows(duration, window)
        bits = [0.0] * n
        for t, _delay, _seq, b in self._deliveries.get(flow, []):
            k = int(t // window)
            if k < n:
                bits[k] += b
        points = [((k + 1) * window, bits[k] / window) for k in range(n)]
        return MetricSeries(points, "bits/second")

    def jitter_series(self, flow, duration, window=1.0) -> MetricSeries:
        n = self._windows(duration, window)
        delays = [[] for _ in range(n)]
        for t, delay, _seq, _b in self._deliveries.get(flow, []):
            k = int(t // window)
            if k < n:
                delays[k].append(delay)
        points = [
            ((k + 1) * window, statistics.pstdev(delays[k]))
            for k in range(n)
            if len(delays[k]) >= 2
        ]
        return MetricSeries(points, "seconds")

    def delay_series(self, flow) -> MetricSeries:
        points = [(t, delay) for t, delay, _seq, _b in self._deliveries.get(flow, [])]
        return MetricSeries(_nudge_ties(points), "seconds")

    def cwnd_series(self, flow) -> MetricSeries:
        return MetricSeries(_nudge_ties(self._cwnd.get(flow, [])), "packets")

    def bandwidth_series(self, node, duration, window=1.0) -> MetricSeries:
        n = self._windows(duration, window)
        bits = [0.0] * n
        for rec in self.records:
            if rec.dst == node and rec.received_at is not None:
                k = int(rec.received_at // window)
                if k < n:
                    bits[k] += rec.size * 8
        points = [((k + 1) * window, bits[k] / window) for k in range(n)]
        return MetricSeries(points, "bits/second")

    def cumulative_bandwidth_bits(self, node, until=None) -> float:
        total = 0.0
        for rec in self.records:
            if rec.dst == node and rec.received_at is not None:
                if until is None or rec.received_at <= until:
                    total += rec.size * 8
        return total

    def deliveries(self, flow) -> list:
        return list(self._deliveries.get(flow, []))

    def first_delivery(self, flow) -> Optional[float]:
        d = self._deliveries.get(flow)
        return d[0][0] if d else None

    def flow_summary(self, flow, duration, window=1.0) -> dict:
        delivered = self._deliveries.get(flow, [])
        jitter = self.jitter_series(flow, duration, window).points
        throughput = self.throughput_series(flow, duration, window).points
        return {
            "flow": flow,
            "delivered": len(delivered),
            "lost": self._drops.get(flow, 0),
            "max_delay": max((d for _t, d, _s, _b in delivered), default=0.0),
            "max_jitter": max((v for _t, v in jitter), default=0.0),
            "mean_throughput": statistics.fmean(v for _t, v in throughput)
            if throughput
            else 0.0,
        }

    def trace_text(self) -> str:
        if not self.trace_lines:
            return ""
        return "\n".join(self.trace_lines) + "\n"


# -- mobility trace format ------------------------------------------------

def format_motion_line(t, node, pos, dest, speed) -> str:
    x, y, z = pos
    return (
        f"M {t:.5f} {node} ({x:.2f}, {y:.2f}, {z:.2f}), "
        f"({dest[0]:.2f}, {dest[1]:.2f}), {speed:.2f}"
    )


def write_mobility_trace(records) -> str:
    lines = [format_motion_line(*rec) for rec in records]
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


_M_LINE = re.compile(
    r"^M (\S+) (\d+) \((\S+), (\S+), (\S+)\), \((\S+), (\S+)\), (\S+)$"
)


def parse_mobility_trace(text):
    """Extract mobility records; returns (records, skipped_line_count).

    Lines of other types (packet events and so on) are skipped and
    counted; a line that starts like a mobility line but does not parse
    raises TraceFormatError naming the line number.
    """
    records = []
    skipped = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if not line.startswith("M "):
            skipped += 1
            continue
        m = _M_LINE.match(line)
        if not m:
            raise TraceFormatError(f"line {lineno}: malformed mobility line: {line!r}")
        try:
            t = float(m.group(1))
            node = int(m.group(2))
            nums = [float(m.group(i)) for i in range(3, 9)]
        except ValueError:
            raise TraceFormatError(
                f"line {lineno}: non-numeric field in mobility line: {line!r}"
            ) from None
        records.append(
            (t, node, (nums[0], nums[1], nums[2]), (nums[3], nums[4]), nums[5])
        )
    return records, skipped


# -- plot series files ----------------------------------------------------

def write_plot_series(series, path, unit=None) -> None:
    points = series.points if isinstance(series, MetricSeries) else series
    if unit is None and isinstance(series, MetricSeries):
        unit = series.unit
    with open(path, "w") as fh:
        if unit is not None and points:
            fh.write(f"# {unit}\n")
        for t, v in points:
            fh.write(f"{t!r} {v!r}\n")


def parse_plot_series(path) -> list:
    points = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            t_txt, v_txt = line.split()
            points.append((float(t_txt), float(v_txt)))
    return points
