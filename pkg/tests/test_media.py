"""Chunking and media extraction tests."""

import numpy as np
import pytest

from subtrans.assets import (
    ArrayAudioSource,
    FrameDirectorySource,
    SyntheticAudioSource,
    SyntheticFrameSource,
    WavFileSource,
    load_asset,
)
from subtrans.config import KeyframePolicy, SegmentConfig
from subtrans.errors import BackendUnavailable, ConfigError, DecodeFailure
from subtrans.media import (
    AudioSpan,
    Chunk,
    ChunkBoundary,
    EnergyVadSegmenter,
    MediaAsset,
    extract_chunks,
    normalize_boundaries,
    sample_keyframes,
    segment,
)
from subtrans.srt import Timestamp


def boundary(i, s, e):
    return ChunkBoundary(index=i, start=Timestamp(s), end=Timestamp(e))


def spans_of(boundaries):
    return [(b.start.ms, b.end.ms) for b in boundaries]


class TestNormalizeBoundaries:
    CFG = SegmentConfig()  # min 1000, max 120000, merge 300

    def test_passthrough(self):
        got = normalize_boundaries([(1000, 5000), (6000, 9000)], self.CFG, 10_000)
        assert spans_of(got) == [(1000, 5000), (6000, 9000)]
        assert [b.index for b in got] == [0, 1]

    def test_small_gap_merged(self):
        # 200ms gap < 300ms merge threshold
        got = normalize_boundaries([(1000, 5000), (5200, 9000)], self.CFG, 10_000)
        assert spans_of(got) == [(1000, 9000)]

    def test_gap_at_threshold_not_merged(self):
        got = normalize_boundaries([(1000, 5000), (5300, 9000)], self.CFG, 10_000)
        assert spans_of(got) == [(1000, 5000), (5300, 9000)]

    def test_overlap_merged_even_with_zero_gap_config(self):
        cfg = SegmentConfig(merge_gap_ms=0)
        got = normalize_boundaries([(1000, 5000), (4000, 9000)], cfg, 10_000)
        assert spans_of(got) == [(1000, 9000)]

    def test_short_span_grown_symmetrically(self):
        # 400ms span needs 600 more: 300 before, 300 after
        got = normalize_boundaries([(5000, 5400)], self.CFG, 100_000)
        assert spans_of(got) == [(4700, 5700)]

    def test_short_span_at_file_start_grows_forward(self):
        got = normalize_boundaries([(0, 400)], self.CFG, 100_000)
        assert spans_of(got) == [(0, 1000)]

    def test_short_span_at_file_end_grows_backward(self):
        got = normalize_boundaries([(99_800, 100_000)], self.CFG, 100_000)
        assert spans_of(got) == [(99_000, 100_000)]

    def test_asset_shorter_than_min_is_one_full_chunk(self):
        got = normalize_boundaries([(100, 300)], self.CFG, 800)
        assert spans_of(got) == [(0, 800)]

    def test_no_speech_yields_whole_asset(self):
        got = normalize_boundaries([], self.CFG, 42_000)
        assert spans_of(got) == [(0, 42_000)]

    def test_clipping_and_empty_spans_dropped(self):
        got = normalize_boundaries([(-500, 2000), (3000, 3000), (9_000, 99_999)], self.CFG, 10_000)
        assert spans_of(got) == [(0, 2000), (9000, 10_000)]

    def test_even_split_of_long_span(self):
        # 8 min = 480000ms over max 120000 -> ceil(480/120)=4 pieces of 120000
        got = normalize_boundaries([(0, 480_000)], self.CFG, 480_000)
        assert spans_of(got) == [
            (0, 120_000),
            (120_000, 240_000),
            (240_000, 360_000),
            (360_000, 480_000),
        ]

    def test_even_split_uneven_duration(self):
        # 250000ms -> ceil(250/120)=3 pieces, cuts at round(i*250000/3)
        got = normalize_boundaries([(0, 250_000)], self.CFG, 250_000)
        assert spans_of(got) == [(0, 83_333), (83_333, 166_667), (166_667, 250_000)]
        assert all(b.duration_ms <= 120_000 for b in got)

    def test_energy_split_cuts_at_quietest_frame(self):
        cfg = SegmentConfig(min_chunk_ms=1000, max_chunk_ms=4000, merge_gap_ms=300)

        def energy(start, end):
            # quietest admissible frame centered at 2505
            return [
                (ms + 15, 0.001 if ms + 15 == 2505 else 0.5) for ms in range(start, end, 30)
            ]

        got = normalize_boundaries([(0, 6000)], cfg, 6000, energy)
        assert spans_of(got) == [(0, 2505), (2505, 6000)]

    def test_energy_split_respects_min_chunk(self):
        cfg = SegmentConfig(min_chunk_ms=2000, max_chunk_ms=4000, merge_gap_ms=300)

        def energy(start, end):
            # quiet frame at 505ms is inadmissible (< start + min), the one
            # at 2505 wins instead
            return [
                (ms + 15, 0.001 if ms + 15 in (505, 2505) else 0.5)
                for ms in range(start, end, 30)
            ]

        got = normalize_boundaries([(0, 6000)], cfg, 6000, energy)
        assert spans_of(got) == [(0, 2505), (2505, 6000)]

    def test_idempotent_on_own_output(self):
        import random

        rng = random.Random(7)
        cfg = SegmentConfig(min_chunk_ms=1000, max_chunk_ms=5000, merge_gap_ms=300)
        for _ in range(40):
            duration = rng.randrange(2000, 60_000)
            spans = []
            for _ in range(rng.randrange(0, 8)):
                s = rng.randrange(0, duration)
                spans.append((s, min(duration, s + rng.randrange(100, 20_000))))
            once = normalize_boundaries(spans, cfg, duration)
            twice = normalize_boundaries(spans_of(once), cfg, duration)
            assert spans_of(twice) == spans_of(once)

    def test_output_invariants(self):
        import random

        rng = random.Random(11)
        cfg = SegmentConfig(min_chunk_ms=1000, max_chunk_ms=5000, merge_gap_ms=300)
        for _ in range(40):
            duration = rng.randrange(3000, 60_000)
            spans = []
            for _ in range(rng.randrange(0, 6)):
                s = rng.randrange(0, duration)
                spans.append((s, min(duration, s + rng.randrange(100, 15_000))))
            got = normalize_boundaries(spans, cfg, duration)
            assert [b.index for b in got] == list(range(len(got)))
            for a, b in zip(got, got[1:]):
                assert a.end.ms <= b.start.ms  # ordered, non-overlapping
            for b in got:
                assert b.duration_ms <= cfg.max_chunk_ms
                # pieces smaller than min can only come from a tiny asset
                assert b.duration_ms >= min(cfg.min_chunk_ms, duration)

    def test_max_must_fit_two_minimums(self):
        with pytest.raises(ValueError):
            SegmentConfig(min_chunk_ms=1000, max_chunk_ms=1500)


class TestEnergyVad:
    def test_detects_bursts(self):
        src = SyntheticAudioSource(10_000, [(2000, 4000), (6000, 8000)], seed=1)
        vad = EnergyVadSegmenter(threshold=0.01, frame_ms=30, hangover_ms=240)
        spans = vad.detect_speech(AudioSpan(src, 0, src.duration_ms))
        assert len(spans) == 2
        for (s, e), (want_s, want_e) in zip(spans, [(2000, 4000), (6000, 8000)]):
            assert abs(s - want_s) <= 60
            # hangover may extend the tail by up to hangover + one frame
            assert want_e - 60 <= e <= want_e + 300

    def test_silence_detects_nothing(self):
        src = SyntheticAudioSource(5000, [], seed=2)
        vad = EnergyVadSegmenter()
        assert vad.detect_speech(AudioSpan(src, 0, src.duration_ms)) == []

    def test_offsets_are_absolute(self):
        src = SyntheticAudioSource(10_000, [(6000, 8000)], seed=3)
        vad = EnergyVadSegmenter()
        spans = vad.detect_speech(AudioSpan(src, 5000, 10_000))
        assert len(spans) == 1
        assert abs(spans[0][0] - 6000) <= 60

    def test_rms_profile_centers(self):
        src = SyntheticAudioSource(1000, [], seed=4)
        vad = EnergyVadSegmenter(frame_ms=30)
        profile = vad.rms_profile(AudioSpan(src, 0, 300))
        assert [ms for ms, _ in profile] == [15, 45, 75, 105, 135, 165, 195, 225, 255, 285]


class TestSegment:
    def test_fallback_on_unavailable_backend(self):
        class Down:
            def detect_speech(self, span):
                raise BackendUnavailable("no segmenter today")

        src = SyntheticAudioSource(10_000, [(2000, 4000)], seed=5)
        asset = MediaAsset(name="x", audio=src)
        got = segment(asset, Down(), SegmentConfig())
        assert len(got) == 1
        assert abs(got[0].start.ms - 2000) <= 60

    def test_none_segmenter_uses_energy_vad(self):
        src = SyntheticAudioSource(10_000, [(2000, 4000)], seed=6)
        got = segment(MediaAsset(name="x", audio=src), None, SegmentConfig())
        assert len(got) == 1

    def test_scripted_spans_pass_through(self):
        class Scripted:
            def detect_speech(self, span):
                return [(1000, 5000), (7000, 9000)]

        src = SyntheticAudioSource(10_000, [], seed=7)
        got = segment(MediaAsset(name="x", audio=src), Scripted(), SegmentConfig())
        assert spans_of(got) == [(1000, 5000), (7000, 9000)]


class TestKeyframes:
    def test_uniform_offsets(self):
        # duration 8000, 3 frames: start + 2000/4000/6000
        chunk = Chunk(
            boundary=boundary(0, 10_000, 18_000),
            audio=None,
            frame_source=SyntheticFrameSource(),
        )
        frames = sample_keyframes(chunk, KeyframePolicy(max_frames=3))
        assert [f.timestamp.ms for f in frames] == [12_000, 14_000, 16_000]

    def test_single_frame_is_midpoint(self):
        chunk = Chunk(
            boundary=boundary(0, 1000, 3000),
            audio=None,
            frame_source=SyntheticFrameSource(),
        )
        frames = sample_keyframes(chunk, KeyframePolicy(max_frames=1))
        assert [f.timestamp.ms for f in frames] == [2000]

    def test_no_frame_source_yields_empty(self):
        chunk = Chunk(boundary=boundary(0, 0, 1000), audio=None, frame_source=None)
        assert sample_keyframes(chunk, KeyframePolicy(max_frames=3)) == []

    def test_timestamps_within_chunk(self):
        import random

        rng = random.Random(13)
        for _ in range(50):
            s = rng.randrange(0, 100_000)
            e = s + rng.randrange(2, 50_000)
            n = rng.randrange(1, 6)
            chunk = Chunk(
                boundary=boundary(0, s, e), audio=None, frame_source=SyntheticFrameSource()
            )
            frames = sample_keyframes(chunk, KeyframePolicy(max_frames=n))
            assert len(frames) <= n
            for f in frames:
                assert s <= f.timestamp.ms < e

    def test_duplicate_timestamps_collapse(self):
        chunk = Chunk(
            boundary=boundary(0, 0, 2), audio=None, frame_source=SyntheticFrameSource()
        )
        frames = sample_keyframes(chunk, KeyframePolicy(max_frames=3))
        assert len(frames) < 3


class TestExtractChunks:
    def test_chunks_carry_audio_and_frames(self):
        src = SyntheticAudioSource(10_000, [(0, 10_000)], seed=8)
        asset = MediaAsset(name="x", audio=src, frames=SyntheticFrameSource())
        chunks = extract_chunks(asset, [boundary(0, 0, 5000), boundary(1, 5000, 10_000)])
        assert len(chunks) == 2
        assert chunks[0].audio.start_ms == 0
        assert chunks[0].audio.chunk_index == 0
        assert len(chunks[0].frames) == 3
        assert not chunks[0].decode_failed

    def test_decode_failure_flags_chunk(self):
        class Corrupt:
            duration_ms = 10_000

            def read(self, start_ms, end_ms):
                if start_ms >= 5000:
                    raise DecodeFailure(-1, "bit rot")
                return np.zeros((end_ms - start_ms) * 16, dtype=np.float32)

        asset = MediaAsset(name="x", audio=Corrupt())
        chunks = extract_chunks(asset, [boundary(0, 0, 5000), boundary(1, 5000, 10_000)])
        assert not chunks[0].decode_failed
        assert chunks[1].decode_failed
        assert chunks[1].audio is None


class TestSources:
    def test_wav_round_trip(self, tmp_path):
        src = SyntheticAudioSource(2000, [(0, 2000)], seed=9)
        span = AudioSpan(src, 0, 2000)
        wav_path = tmp_path / "clip.wav"
        wav_path.write_bytes(span.to_wav_bytes())
        loaded = WavFileSource(wav_path)
        assert loaded.duration_ms == 2000
        # encoding clips to [-1, 1], so compare against the clipped original
        want = np.clip(span.read(), -1.0, 1.0)
        np.testing.assert_allclose(loaded.read(0, 2000), want, atol=2 / 32768)

    def test_wav_rejects_text(self, tmp_path):
        p = tmp_path / "fake.wav"
        p.write_text("not audio")
        with pytest.raises(DecodeFailure):
            WavFileSource(p)

    def test_synthetic_deterministic(self):
        a = SyntheticAudioSource(1000, [(0, 500)], seed=42)
        b = SyntheticAudioSource(1000, [(0, 500)], seed=42)
        np.testing.assert_array_equal(a.read(0, 1000), b.read(0, 1000))

    def test_read_clips_to_bounds(self):
        src = ArrayAudioSource(np.zeros(16_000, dtype=np.float32))  # 1s
        assert len(src.read(500, 99_999)) == 8000

    def test_frame_directory_source(self, tmp_path):
        for ms in (0, 1000, 2000):
            (tmp_path / f"{ms}.png").write_bytes(SyntheticFrameSource().grab(ms)[0])
        src = FrameDirectorySource(tmp_path)
        want = (tmp_path / "1000.png").read_bytes()
        assert src.grab(1500)[0] == want
        assert src.grab(999)[0] == (tmp_path / "0.png").read_bytes()

    def test_frame_directory_empty_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            FrameDirectorySource(tmp_path)


class TestLoadAsset:
    def test_wav_asset(self, tmp_path):
        src = SyntheticAudioSource(1500, [(0, 1500)], seed=10)
        p = tmp_path / "talk.wav"
        p.write_bytes(AudioSpan(src, 0, 1500).to_wav_bytes())
        asset = load_asset(p)
        assert asset.name == "talk"
        assert asset.duration_ms == 1500
        assert asset.frames is None

    def test_synthetic_spec(self, tmp_path):
        p = tmp_path / "demo.yaml"
        p.write_text(
            "name: demo\n"
            "audio:\n  kind: synthetic\n  duration_ms: 3000\n"
            "  speech_spans_ms: [[500, 2500]]\n  seed: 3\n"
            "frames:\n  kind: synthetic\n  seed: 3\n"
        )
        asset = load_asset(p)
        assert asset.name == "demo"
        assert asset.duration_ms == 3000
        assert asset.frames is not None

    def test_missing_input(self, tmp_path):
        with pytest.raises(ConfigError):
            load_asset(tmp_path / "nope.wav")

    def test_unknown_container_needs_tool(self, tmp_path):
        p = tmp_path / "movie.mp4"
        p.write_bytes(b"\x00\x00")
        with pytest.raises(ConfigError):
            load_asset(p)

    def test_bad_spec_rejected(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("audio:\n  kind: warbly\n")
        with pytest.raises(ConfigError):
            load_asset(p)


def test_span_wav_bytes_header():
    src = SyntheticAudioSource(1000, [(0, 1000)], seed=11)
    data = AudioSpan(src, 0, 500).to_wav_bytes()
    assert data[:4] == b"RIFF"
    assert data[8:12] == b"WAVE"
    # 500ms at 16kHz 16-bit mono = 16000 bytes of payload
    assert len(data) == 44 + 16_000
