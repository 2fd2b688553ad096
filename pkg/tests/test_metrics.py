"""Metric and trace-format tests with hand-computed expected values."""

import math

import pytest

from vanetsim.metrics import (
    MetricSeries,
    MetricsLedger,
    TraceFormatError,
    format_motion_line,
    parse_mobility_trace,
    parse_plot_series,
    write_mobility_trace,
    write_plot_series,
)
from vanetsim.radio import Frame


def deliver(ledger, flow, seq, t, size=512, handoff=None):
    ledger.on_data_handoff(flow, seq, handoff if handoff is not None else t)
    return ledger.on_sink_delivery(flow, seq, size, t)


def test_throughput_ten_packets_in_one_second_window():
    led = MetricsLedger()
    for i in range(10):
        deliver(led, "f0", i, 0.05 + i * 0.09)
    series = led.throughput_series("f0", duration=3.0, window=1.0)
    assert series.unit == "bits/second"
    # 10 * 512 * 8 = 40960 bits in the first window, then silence
    assert series.points == [(1.0, 40960.0), (2.0, 0.0), (3.0, 0.0)]


def test_throughput_sum_conserves_total_bits():
    led = MetricsLedger()
    times = [0.2, 0.9, 1.4, 2.75, 2.8, 5.05]
    for i, t in enumerate(times):
        deliver(led, "f0", i, t, size=512)
    series = led.throughput_series("f0", duration=6.0, window=1.0)
    total = sum(v for _t, v in series.points) * 1.0
    assert total == pytest.approx(len(times) * 512 * 8, abs=1e-9)


def test_window_boundary_belongs_to_the_later_window():
    led = MetricsLedger()
    deliver(led, "f0", 0, 1.0)
    series = led.throughput_series("f0", duration=2.0, window=1.0)
    assert series.points == [(1.0, 0.0), (2.0, 4096.0)]


def test_jitter_two_known_delays():
    led = MetricsLedger()
    # delays of 1 ms and 3 ms: population standard deviation is 1 ms
    deliver(led, "f0", 0, 0.101, handoff=0.100)
    deliver(led, "f0", 1, 0.203, handoff=0.200)
    series = led.jitter_series("f0", duration=1.0, window=1.0)
    assert series.points == [(1.0, pytest.approx(0.001, rel=1e-12))]


def test_jitter_zero_variance_is_exactly_zero():
    led = MetricsLedger()
    for i in range(5):
        deliver(led, "f0", i, 0.1 * (i + 1) + 0.007, handoff=0.1 * (i + 1))
    series = led.jitter_series("f0", duration=1.0, window=1.0)
    assert series.points == [(1.0, 0.0)]
    assert series.points[0][1] == 0.0


def test_jitter_skips_windows_with_fewer_than_two_deliveries():
    led = MetricsLedger()
    deliver(led, "f0", 0, 0.5)
    deliver(led, "f0", 1, 2.1)
    deliver(led, "f0", 2, 2.2)
    series = led.jitter_series("f0", duration=4.0, window=1.0)
    assert [t for t, _v in series.points] == [3.0]


def test_delay_measured_from_latest_handoff_before_arrival():
    led = MetricsLedger()
    led.on_data_handoff("f0", 7, 1.0)
    led.on_data_handoff("f0", 7, 4.0)  # retransmission
    assert led.on_sink_delivery("f0", 7, 512, 4.5)
    series = led.delay_series("f0")
    assert series.points == [(4.5, pytest.approx(0.5))]


def test_duplicate_sink_arrivals_are_excluded():
    led = MetricsLedger()
    led.on_data_handoff("f0", 3, 0.0)
    assert led.on_sink_delivery("f0", 3, 512, 0.4)
    assert not led.on_sink_delivery("f0", 3, 512, 0.9)
    assert len(led.deliveries("f0")) == 1
    assert led.first_delivery("f0") == 0.4


def test_delay_series_nudges_equal_timestamps():
    led = MetricsLedger()
    for seq in range(3):
        led.on_data_handoff("f0", seq, 0.0)
        led.on_sink_delivery("f0", seq, 512, 2.0)
    pts = led.delay_series("f0").points
    assert [t for t, _ in pts] == [2.0, 2.0 + 1e-9, 2.0 + 2e-9]


def test_destination_bandwidth_counts_every_frame_kind():
    led = MetricsLedger()
    for i in range(3):
        f = Frame("ACK", 9, 4, 210)
        f.sent_at = 0.1 * i
        led.on_send(f, f.sent_at)
        led.on_delivery(f, 4, 0.1 * i + 0.001)
    series = led.bandwidth_series(4, duration=2.0, window=1.0)
    # three 210 byte frames: 5040 bits in the first second
    assert series.points == [(1.0, 5040.0), (2.0, 0.0)]
    assert led.cumulative_bandwidth_bits(4) == 5040.0
    assert led.cumulative_bandwidth_bits(4, until=0.15) == 3360.0


def test_bandwidth_ignores_frames_to_other_nodes_and_losses():
    led = MetricsLedger()
    ok = Frame("DATA", 0, 1, 512)
    ok.sent_at = 0.0
    led.on_send(ok, 0.0)
    led.on_delivery(ok, 1, 0.0005)
    lost = Frame("DATA", 0, 1, 512)
    lost.sent_at = 0.1
    led.on_send(lost, 0.1)
    led.on_loss(lost, "out-of-range", 0.1)
    series = led.bandwidth_series(1, duration=1.0, window=1.0)
    assert series.points == [(1.0, 4096.0)]


def test_flow_summary_row():
    led = MetricsLedger()
    deliver(led, "f2", 0, 0.35, handoff=0.30)
    deliver(led, "f2", 1, 0.45, handoff=0.41)
    led.on_flow_drop("f2", 2, 1.2)
    row = led.flow_summary("f2", duration=2.0, window=1.0)
    assert row["flow"] == "f2"
    assert row["delivered"] == 2
    assert row["lost"] == 1
    assert row["max_delay"] == pytest.approx(0.05)
    assert row["max_jitter"] == pytest.approx(0.005)
    assert row["mean_throughput"] == pytest.approx((2 * 512 * 8) / 2.0)


def test_cwnd_series_keeps_every_sample():
    led = MetricsLedger()
    led.on_cwnd("f0", 0.0, 1)
    led.on_cwnd("f0", 0.5, 2)
    led.on_cwnd("f0", 0.5, 1)
    pts = led.cwnd_series("f0").points
    assert [v for _t, v in pts] == [1, 2, 1]
    assert pts[2][0] > pts[1][0]


def test_motion_line_matches_sample_bytes():
    line = format_motion_line(0.0, 2, (550.0, 290.0, 0.0), (550.0, 290.0), 0.0)
    assert line == "M 0.00000 2 (550.00, 290.00, 0.00), (550.00, 290.00), 0.00"
    line80 = format_motion_line(0.0, 80, (1150.0, 920.0, 0.0), (1150.0, 920.0), 0.0)
    assert line80 == "M 0.00000 80 (1150.00, 920.00, 0.00), (1150.00, 920.00), 0.00"


def test_mobility_trace_round_trip():
    records = [
        (0.0, 2, (550.0, 290.0, 0.0), (550.0, 290.0), 0.0),
        (10.0, 15, (140.0, 450.0, 0.0), (2788.0, 450.0), 12.97),
    ]
    text = write_mobility_trace(records)
    parsed, skipped = parse_mobility_trace(text)
    assert parsed == records
    assert skipped == 0
    assert write_mobility_trace(parsed) == text


def test_parse_skips_packet_lines_and_counts_them():
    text = (
        "M 0.00000 2 (550.00, 290.00, 0.00), (550.00, 290.00), 0.00\n"
        "s 0.5000000 DATA 0 0 15 512\n"
        "r 0.5004596 DATA 0 0 15 512\n"
    )
    records, skipped = parse_mobility_trace(text)
    assert len(records) == 1
    assert skipped == 2


def test_parse_rejects_malformed_mobility_line():
    with pytest.raises(TraceFormatError, match="line 2"):
        parse_mobility_trace("s 0.1 DATA 0 0 1 512\nM x y\n")


def test_ledger_emits_interleaved_trace_lines():
    led = MetricsLedger()
    led.on_motion_state(0.0, 2, (550.0, 290.0), (550.0, 290.0), 0.0)
    f = Frame("DATA", 0, 15, 512)
    f.sent_at = 0.5
    led.on_send(f, 0.5)
    led.on_delivery(f, 15, 0.5004596)
    text = led.trace_text()
    lines = text.splitlines()
    assert lines[0].startswith("M 0.00000 2 ")
    assert lines[1] == "s 0.5000000 DATA 0 0 15 512"
    assert lines[2] == "r 0.5004596 DATA 0 0 15 512"


def test_broadcast_trace_lines_use_star_and_loss_marks_flow():
    led = MetricsLedger()

    class Payload:
        flow = "f1"
        seq = 12

    f = Frame("RREQ", 1, -1, 64)
    led.on_send(f, 1.0)
    led.on_loss(f, "no-neighbors", 1.0)
    d = Frame("DATA", 1, 2, 512, payload=Payload())
    led.on_send(d, 1.1)
    led.on_loss(d, "out-of-range", 1.1)
    lines = led.trace_text().splitlines()
    assert lines[0] == "s 1.0000000 RREQ 0 1 * 64"
    assert lines[1] == "l 1.0000000 RREQ 0 1 * 64"
    assert lines[3] == "l 1.1000000 DATA 1 1 2 512"
    assert led.flow_summary("f1", 1.0)["lost"] == 1


def test_plot_series_round_trip(tmp_path):
    series = MetricSeries([(1.0, 40960.0), (2.0, 0.0), (2.5, 1.25e-3)], "bits/second")
    path = tmp_path / "throughput.dat"
    write_plot_series(series, path)
    text = path.read_text()
    assert text.startswith("# bits/second\n")
    assert parse_plot_series(path) == series.points


def test_plot_series_empty_writes_empty_file(tmp_path):
    path = tmp_path / "empty.dat"
    write_plot_series(MetricSeries([], "seconds"), path)
    assert path.read_text() == ""


def test_plot_series_plain_values(tmp_path):
    path = tmp_path / "simple.dat"
    write_plot_series([(1, 2.5)], path)
    assert path.read_text() == "1 2.5\n"
