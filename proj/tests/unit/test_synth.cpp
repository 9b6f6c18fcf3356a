#include "osa/error.hpp"
#include "osa/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace osa {
namespace {

TEST(Synth, NoEventsMeansNoDesaturation) {
  SynthParams p;
  p.duration_s = 1800.0;
  p.apnea_rate_per_hour = 0.0;
  const auto r = synth_generate(p);
  EXPECT_TRUE(r.annotations.empty());
  EXPECT_GE(*std::min_element(r.spo2.begin(), r.spo2.end()), p.baseline_spo2 - 2.0);
  for (const auto& f : label_frames(segment_frames(r), r.annotations)) EXPECT_EQ(f.label, FrameLabel::normal);
}

TEST(Synth, SingleEventLabelsExactlyItsMinute) {
  SynthParams p;
  p.duration_s = 600.0;
  p.apnea_rate_per_hour = 6.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    p.seed = seed;
    const auto r = synth_generate(p);
    ASSERT_EQ(r.annotations.size(), 1u);
    const auto minute = static_cast<std::size_t>(r.annotations[0].start_s / 60.0);
    EXPECT_EQ(static_cast<std::size_t>(r.annotations[0].end_s() / 60.0), minute);
    const auto frames = label_frames(segment_frames(r), r.annotations);
    ASSERT_EQ(frames.size(), 10u);
    for (const auto& f : frames) {
      EXPECT_EQ(f.label == FrameLabel::apnoeic, f.index == minute) << "seed " << seed;
    }
  }
}

TEST(Synth, ShapesAndRates) {
  SynthParams p;
  p.duration_s = 605.0;
  p.ecg_fs = 250.0;
  const auto r = synth_generate(p);
  EXPECT_EQ(r.spo2.size(), 600u);
  EXPECT_EQ(r.ecg.size(), 600u * 250u);
  EXPECT_EQ(r.ecg_spec.sampling_rate_hz, 250.0);
  EXPECT_EQ(r.spo2_spec.sampling_rate_hz, 1.0);
  EXPECT_EQ(r.excluded_mask.size(), r.spo2.size());
  EXPECT_EQ(r.record_id, "synth");
}

TEST(Synth, SeedDeterminism) {
  SynthParams p;
  p.duration_s = 300.0;
  p.seed = 42;
  const auto a = synth_generate(p);
  const auto b = synth_generate(p);
  EXPECT_EQ(a.ecg, b.ecg);
  EXPECT_EQ(a.spo2, b.spo2);
  p.seed = 43;
  EXPECT_NE(synth_generate(p).ecg, a.ecg);
}

TEST(Synth, ValidateNamesTheParameter) {
  const auto expect_named = [](SynthParams p, const std::string& name) {
    try {
      validate(p);
      FAIL() << name;
    } catch (const InvalidArgument& e) {
      EXPECT_NE(std::string(e.what()).find(name), std::string::npos) << e.what();
    }
  };
  SynthParams p;
  p.duration_s = 30.0;
  expect_named(p, "duration");
  p = {};
  p.ecg_fs = 50.0;
  expect_named(p, "ecg_fs");
  p = {};
  p.apnea_rate_per_hour = 61.0;
  expect_named(p, "apnea_rate");
  p = {};
  p.record_id.clear();
  expect_named(p, "record_id");
  EXPECT_NO_THROW(validate(SynthParams{}));
}

}  // namespace
}  // namespace osa
