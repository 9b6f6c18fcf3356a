#include "osa/error.hpp"
#include "osa/record_io.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

namespace osa {
namespace {

using testing::TempDir;

SignalRecord make_record(double seconds, double ecg_fs = 100.0, std::uint64_t seed = 7) {
  Rng rng(seed);
  SignalRecord r;
  r.record_id = "rec";
  r.ecg_spec = {"ecg", ecg_fs, "mV"};
  r.spo2_spec = {"spo2", 1.0, "%"};
  r.ecg = testing::normal_vector(rng, static_cast<std::size_t>(seconds * ecg_fs));
  r.spo2.resize(static_cast<std::size_t>(seconds));
  for (auto& v : r.spo2) v = 90.0 + std::floor(10.0 * rng.uniform());
  r.excluded_mask.assign(r.spo2.size(), false);
  return r;
}

void write_lines(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

TEST(RecordIo, NativeRoundTripIsSampleExact) {
  TempDir dir;
  auto r = make_record(120.0);
  r.annotations = {{12.5, 20.0, EventKind::apnea}, {80.0, 11.0, EventKind::hypopnea}};
  write_record(r, dir / "night.hdr");
  const auto back = load_record(dir / "night.hdr", RecordFormat::native_csv);
  EXPECT_EQ(back.record_id, "rec");
  EXPECT_EQ(back.ecg, r.ecg);
  EXPECT_EQ(back.spo2, r.spo2);
  EXPECT_DOUBLE_EQ(back.ecg_spec.sampling_rate_hz, 100.0);
  ASSERT_EQ(back.annotations.size(), 2u);
  EXPECT_EQ(back.annotations[1].kind, EventKind::hypopnea);
  EXPECT_DOUBLE_EQ(back.annotations[0].start_s, 12.5);
  EXPECT_EQ(segment_frames(back).size(), 2u);
}

TEST(RecordIo, MissingSpo2ChannelIsReported) {
  TempDir dir;
  write_lines(dir / "x.hdr", "record,x\nchannel,rate_hz,units\necg,100,mV\n");
  write_lines(dir / "x.ecg.csv", "time_s,value\n0,1\n0.01,2\n");
  EXPECT_THROW(load_record(dir / "x.hdr", RecordFormat::native_csv), MissingChannelError);
}

TEST(RecordIo, NonMonotoneTimestampsAreRejected) {
  TempDir dir;
  write_lines(dir / "x.hdr", "channel,rate_hz,units\necg,1,mV\nspo2,1,%\n");
  write_lines(dir / "x.ecg.csv", "time_s,value\n0,1\n2,2\n1,3\n");
  write_lines(dir / "x.spo2.csv", "time_s,value\n0,97\n1,97\n2,97\n");
  EXPECT_THROW(load_record(dir / "x.hdr", RecordFormat::native_csv), FormatError);
}

TEST(RecordIo, ChannelSpansMustAgree) {
  auto r = make_record(120.0);
  r.spo2.resize(100);
  r.excluded_mask.resize(100);
  TempDir dir;
  EXPECT_THROW(write_record(r, dir / "bad.hdr"), FormatError);
}

TEST(SegmentFrames, TenMinutesGiveTenFrames) {
  const auto frames = segment_frames(make_record(600.0));
  ASSERT_EQ(frames.size(), 10u);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    EXPECT_EQ(frames[k].index, k);
    EXPECT_EQ(frames[k].ecg_slice.size(), 6000u);
    EXPECT_EQ(frames[k].spo2_slice.size(), 60u);
    if (k > 0) {
      EXPECT_EQ(frames[k].spo2_slice.begin, frames[k - 1].spo2_slice.end);
    }
  }
}

TEST(SegmentFrames, TrailingRemainderIsDropped) {
  EXPECT_EQ(segment_frames(make_record(630.0)).size(), 10u);
  EXPECT_TRUE(segment_frames(make_record(59.0)).empty());
}

TEST(SegmentFrames, ExcludedSecondsDropTheirFrame) {
  auto r = make_record(600.0);
  for (std::size_t s = 65; s <= 70; ++s) r.excluded_mask[s] = true;
  const auto frames = segment_frames(r);
  ASSERT_EQ(frames.size(), 9u);
  for (const auto& f : frames) EXPECT_NE(f.index, 1u);
}

TEST(LabelFrames, StraddlingEventCountsPerFrame) {
  const auto frames = segment_frames(make_record(180.0));
  const std::vector<EventAnnotation> ev{{53.0, 12.0, EventKind::apnea}};
  const auto labelled = label_frames(frames, ev, 10.0);
  EXPECT_EQ(labelled[0].label, FrameLabel::normal);
  EXPECT_EQ(labelled[1].label, FrameLabel::normal);
  EXPECT_EQ(labelled[2].label, FrameLabel::normal);
}

TEST(LabelFrames, FullCoverageAndNoEvents) {
  const auto frames = segment_frames(make_record(180.0));
  const auto covered = label_frames(frames, {{60.0, 60.0, EventKind::apnea}}, 10.0);
  EXPECT_EQ(covered[1].label, FrameLabel::apnoeic);
  EXPECT_EQ(covered[0].label, FrameLabel::normal);
  for (const auto& f : label_frames(frames, {}, 10.0)) EXPECT_EQ(f.label, FrameLabel::normal);
  const auto other = label_frames(frames, {{60.0, 60.0, EventKind::other}}, 10.0);
  EXPECT_EQ(other[1].label, FrameLabel::normal);
}

TEST(LabelFrames, RejectsOverlapOutsideRange) {
  const auto frames = segment_frames(make_record(60.0));
  EXPECT_THROW(label_frames(frames, {}, 0.0), InvalidArgument);
  EXPECT_THROW(label_frames(frames, {}, 61.0), InvalidArgument);
}

// Millisecond-grid coverage count as an independent interval oracle.
TEST(LabelFrames, MatchesMillisecondCoverageOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t minutes = 6;
    std::vector<EventAnnotation> ev;
    const auto n_ev = rng.below(8);
    for (std::uint64_t i = 0; i < n_ev; ++i) {
      const double start = static_cast<double>(rng.below(330000)) / 1000.0;
      const double dur = static_cast<double>(1000 + rng.below(40000)) / 1000.0;
      ev.push_back({start, std::min(dur, 360.0 - start), rng.below(2) == 0 ? EventKind::apnea : EventKind::hypopnea});
    }
    const double thr = 5.0 + static_cast<double>(rng.below(20));
    auto frames = segment_frames(make_record(60.0 * minutes));
    auto reversed = frames;
    std::reverse(reversed.begin(), reversed.end());
    const auto got = label_frames(frames, ev, thr);
    const auto got_rev = label_frames(reversed, ev, thr);
    for (std::size_t k = 0; k < minutes; ++k) {
      std::vector<bool> ms(60000, false);
      for (const auto& e : ev) {
        const auto a = static_cast<long long>(std::llround(e.start_s * 1000.0));
        const auto b = static_cast<long long>(std::llround(e.end_s() * 1000.0));
        for (long long t = std::max<long long>(a, k * 60000); t < std::min<long long>(b, (k + 1) * 60000); ++t) {
          ms[static_cast<std::size_t>(t - k * 60000)] = true;
        }
      }
      const auto covered = std::count(ms.begin(), ms.end(), true);
      const auto expect = covered >= static_cast<long long>(thr * 1000.0) ? FrameLabel::apnoeic : FrameLabel::normal;
      EXPECT_EQ(got[k].label, expect) << "trial " << trial << " frame " << k;
      EXPECT_EQ(got_rev[minutes - 1 - k].label, expect);
    }
    const auto twice = label_frames(got, ev, thr);
    for (std::size_t k = 0; k < minutes; ++k) EXPECT_EQ(twice[k].label, got[k].label);
  }
}

WfdbHeader two_signal_header(int format, std::size_t n) {
  WfdbHeader h;
  h.record_name = "w";
  h.sampling_rate_hz = 100.0;
  h.samples_per_signal = n;
  for (const char* desc : {"ECG", "SpO2"}) {
    WfdbSignalInfo s;
    s.file_name = "w.dat";
    s.format = format;
    s.gain = 200.0;
    s.units = "mV";
    s.adc_resolution = format == 212 ? 12 : 16;
    s.description = desc;
    h.signals.push_back(s);
  }
  return h;
}

class WfdbRoundTrip : public ::testing::TestWithParam<int> {};

TEST_P(WfdbRoundTrip, WriteThenReadIsIdentical) {
  const int format = GetParam();
  const int lo = format == 212 ? -2048 : -32768;
  const int hi = format == 212 ? 2047 : 32767;
  Rng rng(static_cast<std::uint64_t>(format));
  const std::size_t n = 1001;
  std::vector<std::vector<int>> samples(2, std::vector<int>(n));
  for (auto& sig : samples) {
    for (auto& v : sig) v = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  samples[0][0] = lo;
  samples[1][1] = hi;
  TempDir dir;
  const auto header = two_signal_header(format, n);
  write_wfdb(header, samples, dir.path());
  const auto parsed = parse_wfdb_header(dir / "w.hea");
  EXPECT_EQ(parsed.signals.size(), 2u);
  EXPECT_EQ(parsed.samples_per_signal, n);
  EXPECT_EQ(read_wfdb_samples(parsed, dir.path()), samples);
}

INSTANTIATE_TEST_SUITE_P(Formats, WfdbRoundTrip, ::testing::Values(16, 212));

TEST(Wfdb, UnsupportedStorageFormatIsExplicit) {
  TempDir dir;
  write_lines(dir / "u.hea", "u 2 100 10\nu.dat 80 200 8 0 0 0 0 ECG\nu.dat 80 200 8 0 0 0 0 SpO2\n");
  EXPECT_THROW(parse_wfdb_header(dir / "u.hea"), UnsupportedFormatError);
}

TEST(Wfdb, RecordReducesSpo2ToOneHertz) {
  const std::size_t n = 100 * 120;
  auto header = two_signal_header(16, n);
  std::vector<std::vector<int>> samples(2, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    samples[0][i] = static_cast<int>(i % 200);
    samples[1][i] = 200 * (90 + static_cast<int>(i / 100 % 7));
  }
  TempDir dir;
  write_wfdb(header, samples, dir.path());
  const auto rec = load_record(dir / "w.hea", RecordFormat::wfdb);
  ASSERT_EQ(rec.spo2.size(), 120u);
  EXPECT_DOUBLE_EQ(rec.spo2_spec.sampling_rate_hz, 1.0);
  EXPECT_DOUBLE_EQ(rec.spo2[3], 93.0);
  EXPECT_EQ(rec.ecg.size(), n);
  EXPECT_DOUBLE_EQ(rec.ecg[3], 3.0 / 200.0);
}

TEST(Wfdb, MinuteAnnotationsBecomeApneaEvents) {
  TempDir dir;
  // Three minute labels at 100 Hz: N, A, A, then the end marker.
  std::vector<unsigned char> bytes;
  const auto put = [&](int code, int arg) {
    const int w = (code << 10) | arg;
    bytes.push_back(static_cast<unsigned char>(w & 0xFF));
    bytes.push_back(static_cast<unsigned char>(w >> 8));
  };
  const auto skip = [&](std::int32_t interval) {
    put(59, 0);
    const auto u = static_cast<std::uint32_t>(interval);
    for (std::uint32_t half : {u >> 16, u & 0xFFFFu}) {
      bytes.push_back(static_cast<unsigned char>(half & 0xFF));
      bytes.push_back(static_cast<unsigned char>(half >> 8));
    }
  };
  put(1, 0);
  skip(6000);
  put(8, 0);
  skip(6000);
  put(8, 0);
  put(0, 0);
  {
    std::ofstream out(dir / "r.apn", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  const auto ev = read_wfdb_minute_annotations(dir / "r.apn", 100.0);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_DOUBLE_EQ(ev[0].start_s, 60.0);
  EXPECT_DOUBLE_EQ(ev[1].start_s, 120.0);
  EXPECT_DOUBLE_EQ(ev[1].duration_s, 60.0);
}

}  // namespace
}  // namespace osa
