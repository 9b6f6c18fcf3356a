#pragma once

#include "osa/classify.hpp"
#include "osa/combine.hpp"
#include "osa/feature_matrix.hpp"
#include "osa/features_ecg.hpp"
#include "osa/features_spo2.hpp"
#include "osa/preprocess.hpp"
#include "osa/qrs.hpp"
#include "osa/record_io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace osa {

enum class BaselineMode {
  causal,  // mode of retained SpO2 from record start through the current frame
  record,  // mode over the whole record (batch only)
};

struct PipelineConfig {
  double target_ecg_hz{0.0};  // 0 keeps the native rate
  DenoiseConfig denoise;
  QrsConfig qrs;
  EctopicConfig ectopic;
  EdrConfig edr;
  bool t_wave_edr{false};
  SpectralConfig spectral;
  EntropyParams entropy;
  BaselineMode baseline{BaselineMode::causal};
  double min_overlap_s{10.0};
  bool spo2_features{true};
  bool ecg_features{true};
};

// Canonical `key=value` lines; config_hash is FNV-1a 64 of that text.
std::string describe(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);
void validate(const PipelineConfig& cfg);

std::vector<std::string> feature_names(const PipelineConfig& cfg);

struct FrameInput {
  std::span<const double> ecg;
  double ecg_fs{0.0};
  std::span<const double> spo2;  // 1 Hz
  double start_s{0.0};
  double baseline{0.0};
};

struct FrameFeatures {
  std::vector<double> values;
  bool low_quality{false};
};

// Denoise, QRS detection, tachogram, EDR and both feature banks on one
// 60 s frame. Uses nothing outside the frame except `baseline`.
FrameFeatures extract_frame_features(const FrameInput& in, const PipelineConfig& cfg);

// Running SpO2 mode over retained samples (rounded to 1 %, lowest value
// on ties).
class CausalBaseline {
 public:
  void add(std::span<const double> spo2, const std::vector<bool>& excluded);
  bool empty() const { return hist_.empty(); }
  double value() const;

 private:
  std::map<long long, std::size_t> hist_;
};

// One row per retained frame (artifact rejection applied first), labelled
// from the record's annotations.
FeatureMatrix extract_features(const SignalRecord& record, const PipelineConfig& cfg);

// A trained single model or ensemble behind one interface.
class Predictor {
 public:
  Predictor() = default;
  explicit Predictor(ClassifierModel model);
  explicit Predictor(Ensemble ensemble);
  // Reads either a model or an ensemble file.
  static Predictor load(const std::filesystem::path& path);

  Prediction predict(const std::vector<std::string>& names, std::span<const double> values) const;
  std::vector<Prediction> predict_matrix(const FeatureMatrix& m) const;
  std::vector<std::string> feature_names() const;
  std::string config_hash() const;
  std::string description() const;

 private:
  std::variant<std::monostate, ClassifierModel, Ensemble> impl_;
};

enum class Decision { normal, apnoeic, excluded };
const char* to_string(Decision d);

struct Detection {
  long long frame_index{0};
  Decision decision{Decision::normal};
  double p_apnea{0.0};
  double latency_ms{0.0};
};

// Online detector: feed samples as they arrive, receive one Detection per
// completed minute. A minute is processed once its ECG is complete and one
// SpO2 sample past its end has arrived (the artifact jump rule looks one
// sample ahead); finish() flushes the last complete minute. Decisions
// equal the batch path (extract_features + Predictor) frame for frame.
class StreamingDetector {
 public:
  StreamingDetector(Predictor predictor, PipelineConfig cfg, double ecg_fs, double spo2_fs);

  std::vector<Detection> push(std::span<const double> ecg, std::span<const double> spo2);
  std::vector<Detection> finish();

 private:
  std::vector<Detection> drain(bool at_end);

  Predictor predictor_;
  PipelineConfig cfg_;
  std::vector<std::string> names_;
  double ecg_fs_;
  double spo2_fs_;
  std::size_t ecg_per_frame_;
  std::size_t spo2_per_frame_;
  std::vector<double> ecg_;   // from the start of the next frame
  std::vector<double> spo2_;  // from one sample before the next frame
  bool has_prev_{false};
  long long next_frame_{0};
  CausalBaseline baseline_;
};

}  // namespace osa
