"""Acceptance gate: one test per shipping criterion, pinned tolerances.

Each test prints `ACCEPTANCE <n> <name>: PASS|FAIL` (visible with -s, and in
captured output on failure) and is also one verbose pytest line, so the gate
reads as nine pass/fail verdicts.  Tolerances are stated inline; exact means
byte/value equality.
"""

import contextlib
import io
import time
from fractions import Fraction

import numpy as np
import pytest

import oracle
from conftest import (
    GOLDEN_DIFF,
    GOLDEN_INDEX,
    GOLDEN_NEW_ROWS,
    GOLDEN_PREFIX_LENGTHS,
    GOLDEN_REF_ROWS,
    fuzz_pair,
    rows_to_frame,
)
from sfix import bench, cli, net
from sfix import wirecodec as wc
from sfix.core import EncoderConfig, EncoderMode, Frame, FrameDelta, FrameGeometry, IndexCode, IndexEntry
from sfix.decode import decode_delta, decode_prefix
from sfix.encode import encode_delta
from sfix.ingest import SynthParams, VideoSource, gen_low_motion


@contextlib.contextmanager
def verdict(number, name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} {name}: FAIL", flush=True)
        raise
    print(f"ACCEPTANCE {number} {name}: PASS", flush=True)


def golden_frames():
    return rows_to_frame(GOLDEN_REF_ROWS), rows_to_frame(GOLDEN_NEW_ROWS)


def test_criterion_1_golden_vector_fidelity():
    """Exact index/diff on the golden pair; byte-exact decode; <1 ms encode."""
    with verdict(1, "golden-vector fidelity"):
        ref, new = golden_frames()
        cfg = EncoderConfig(min_repeat_run=3)
        delta = encode_delta(ref, new, cfg)
        assert [(int(e.code), e.count) for e in delta.index] == GOLDEN_INDEX
        assert list(delta.diff) == GOLDEN_DIFF
        assert decode_delta(ref, delta).samples == new.samples

        for _ in range(5):  # warm-up
            encode_delta(ref, new, cfg)
        times = []
        for _ in range(5):
            started = time.perf_counter()
            encode_delta(ref, new, cfg)
            times.append(time.perf_counter() - started)
        times.sort()
        assert times[2] < 1e-3, f"median encode {times[2] * 1e3:.3f} ms"


# Samples each successive index entry appends during reconstruction,
# transcribed from the worked stepwise example (entries 1..11).
WALKTHROUGH_INCREMENTS = [
    [156, 159, 158, 154],
    [155, 155, 155, 155],
    [152, 156, 156, 162],
    [157, 157, 157, 157],
    [158, 159, 158, 156, 155, 158],
    [158, 157, 155, 154, 159],
    [153, 152],
    [156, 156, 156, 156, 156],
    [158, 159, 154, 152],
    [150, 150, 150],
    [151, 150, 153, 157, 151, 159, 158, 159, 154,
     155, 154, 152, 150, 149, 149, 149, 149, 151, 154,
     156, 159, 158, 159, 157, 154, 146, 148, 147, 150],
]


def test_criterion_2_reconstruction_walkthrough():
    """decode_prefix reproduces each stepwise state exactly."""
    with verdict(2, "reconstruction walkthrough"):
        ref, new = golden_frames()
        delta = FrameDelta(
            tuple(IndexEntry(IndexCode(c), n) for c, n in GOLDEN_INDEX),
            bytes(GOLDEN_DIFF),
        )
        state = []
        for n, increment in enumerate(WALKTHROUGH_INCREMENTS, start=1):
            state.extend(increment)
            assert len(state) == GOLDEN_PREFIX_LENGTHS[n - 1]
            assert decode_prefix(ref, delta, n) == bytes(state)
        assert bytes(state) == new.samples  # final state is the whole frame


def test_criterion_3_losslessness():
    """1,000 fuzzed pairs per mode round-trip exactly; 200-frame chain too."""
    with verdict(3, "losslessness"):
        for mode in EncoderMode:
            cfg = EncoderConfig(mode)
            rng = np.random.default_rng(0x10551E55)
            for _ in range(1000):
                ref, new = fuzz_pair(rng, max_side=64)
                assert decode_delta(ref, encode_delta(ref, new, cfg)).samples == new.samples

        frames = list(gen_low_motion(SynthParams(seed=77, n_frames=200)))
        assert len(frames) == 200
        server_ref = client_ref = frames[0]
        for new in frames[1:]:
            delta = encode_delta(server_ref, new)
            rebuilt = decode_delta(client_ref, delta)
            assert rebuilt.samples == new.samples
            server_ref, client_ref = new, rebuilt


def test_criterion_4_dominance():
    """diff(spatio) <= diff(standard); strict when a collapsible run exists."""
    with verdict(4, "dominance"):
        min_run = 3
        spatio = EncoderConfig(EncoderMode.SPATIO_TEMPORAL, min_run)
        standard = EncoderConfig(EncoderMode.STANDARD_BASELINE, min_run)

        def check(ref, new):
            a = len(encode_delta(ref, new, spatio).diff)
            b = len(encode_delta(ref, new, standard).diff)
            assert a <= b
            if oracle.has_collapsible_run(ref.samples, new.samples, min_run):
                assert a < b

        rng = np.random.default_rng(0xD0714A7)
        for _ in range(1000):
            check(*fuzz_pair(rng, max_side=64))
        frames = list(gen_low_motion(SynthParams(seed=41, n_frames=60)))
        for ref, new in zip(frames, frames[1:]):
            check(ref, new)


def test_criterion_5_metric_identities(tmp_path):
    """ratio_samples == diff_pct/100 and diff_pct == 100*diff/total, 1e-9 rel."""
    with verdict(5, "metric identities"):
        source = gen_low_motion(SynthParams(seed=29, n_frames=30))
        report = str(tmp_path / "rows.csv")
        summary = bench.run_benchmark(source, report_path=report)
        rows = bench.read_metrics_csv(report)
        assert len(rows) == 29 * 2
        for row in rows:
            assert row.ratio_samples == pytest.approx(row.diff_pct / 100.0, rel=1e-9)
            assert row.diff_pct == pytest.approx(
                100.0 * row.diff_samples / row.total_samples, rel=1e-9
            )
        # Ordering claim on the synthetic corpus: the spatial mode's mean
        # diff percentage stays below the baseline's.
        assert summary.mean_diff_pct["spatio"] < summary.mean_diff_pct["standard"]


def test_criterion_6_golden_metrics():
    """22.857% vs 40.0% diff_pct -> 42.86% improvement, within 0.01 pp."""
    with verdict(6, "golden metrics"):
        ref, new = golden_frames()
        spat = bench.measure_pair(ref, new, EncoderConfig(EncoderMode.SPATIO_TEMPORAL))
        std = bench.measure_pair(ref, new, EncoderConfig(EncoderMode.STANDARD_BASELINE))
        assert spat.diff_pct == pytest.approx(22.857, abs=0.01)
        assert std.diff_pct == pytest.approx(40.0, abs=0.01)
        summary = bench.summarize([spat, std])
        assert summary.improvement_defined
        assert summary.improvement_diff_pct == pytest.approx(42.86, abs=0.01)


def test_criterion_7_wire_and_container(tmp_path):
    """parse(frame(msg)) identity on all variants; deterministic container."""
    with verdict(7, "wire/container"):
        rng = np.random.default_rng(0x3172E5)

        def random_message(kind):
            if kind == 0:
                return wc.Hello(
                    FrameGeometry(int(rng.integers(1, 4096)), int(rng.integers(1, 4096)),
                                  int(rng.choice((1, 3)))),
                    int(rng.integers(0, 65536)), int(rng.integers(0, 65536)),
                    baseline=bool(rng.integers(0, 2)),
                )
            if kind == 1:
                return wc.samples_to_message(
                    int(rng.integers(0, 2**32)), rng.bytes(int(rng.integers(0, 400)))
                )
            if kind == 2:
                codes = (IndexCode.EQUAL_FRAMES, IndexCode.COPY_FROM_DIFF,
                         IndexCode.COPY_FROM_REF, IndexCode.REPEAT_FROM_DIFF)
                index = tuple(
                    IndexEntry(codes[int(rng.integers(0, 4))], int(rng.integers(0, 2**32)))
                    for _ in range(int(rng.integers(0, 20)))
                )
                delta = FrameDelta(index, rng.bytes(int(rng.integers(0, 300))))
                return wc.delta_to_message(int(rng.integers(0, 2**32)), delta)
            return wc.End()

        for trial in range(200):
            msg = random_message(trial % 4)
            assert wc.parse_message(io.BytesIO(wc.frame_message(msg))) == msg

        video = tmp_path / "in.y4m"
        assert cli.main(["gen", "--output", str(video), "--seed", "55",
                         "--frames", "10"]) == 0
        one, two = tmp_path / "one.sfix", tmp_path / "two.sfix"
        assert cli.main(["encode", "--input", str(video), "--output", str(one)]) == 0
        assert cli.main(["encode", "--input", str(video), "--output", str(two)]) == 0
        assert one.read_bytes() == two.read_bytes()


def test_criterion_8_streaming_integration():
    """50-frame localhost session: full capture plus a join at frame 20; <10 s."""
    import threading

    with verdict(8, "streaming integration"):
        started = time.monotonic()
        frames = list(gen_low_motion(SynthParams(seed=6701, n_frames=50)))
        source = VideoSource(frames[0].geometry, Fraction(25, 1), iter(frames))
        server = net.StreamServer(source).start()

        captures = {"early": [], "late": []}
        reports = {}
        errors = []

        def client(tag):
            def run():
                try:
                    reports[tag] = net.receive(
                        server.address,
                        sink=lambda f: captures[tag].append(f.samples),
                        timeout=10.0,
                    )
                except Exception as exc:  # pragma: no cover - failure detail
                    errors.append((tag, exc))
            thread = threading.Thread(target=run)
            thread.start()
            return thread

        try:
            early = client("early")
            assert server.wait_for_clients(1, timeout=5.0)
            for _ in range(21):  # frames 0..20 precede the late join
                assert server.send_next_frame()
            late = client("late")
            assert server.wait_for_clients(2, timeout=5.0)
            while server.send_next_frame():
                pass
            server.finish()
            early.join(timeout=10.0)
            late.join(timeout=10.0)
        finally:
            server.close()

        assert not errors, errors
        assert captures["early"] == [f.samples for f in frames]
        assert reports["late"].first_frame_no == 20
        assert captures["late"] == [f.samples for f in frames[20:]]
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"streaming criterion took {elapsed:.1f} s"


def test_criterion_9_build_time_harness(tmp_path):
    """Positive build_seconds on every row; CSV header complete as declared."""
    with verdict(9, "build-time harness"):
        source = gen_low_motion(SynthParams(seed=83, n_frames=12))
        report = str(tmp_path / "rows.csv")
        bench.run_benchmark(source, report_path=report)
        with open(report) as fh:
            header = fh.readline().strip()
        assert header == (
            "frame_no,mode,total_samples,diff_samples,diff_pct,index_entries,"
            "wire_bytes,ratio_samples,ratio_wire,encode_seconds,build_seconds"
        )
        rows = bench.read_metrics_csv(report)
        assert len(rows) == 11 * 2
        for row in rows:
            assert row.build_seconds > 0.0
            assert row.encode_seconds > 0.0
